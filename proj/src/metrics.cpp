#include "fno/metrics.hpp"

#include <cmath>
#include <sstream>

#include "fno/errors.hpp"

namespace fno {

namespace {

void check_shapes(std::span<const double> pred, std::span<const double> truth, const char* op) {
    if (pred.size() != truth.size() || pred.empty())
        throw ShapeError(std::string(op) + ": arrays must be nonempty and of equal size");
}

}  // namespace

double mse(std::span<const double> pred, std::span<const double> truth) {
    check_shapes(pred, truth, "mse");
    double acc = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double d = pred[i] - truth[i];
        acc += d * d;
    }
    return acc / static_cast<double>(pred.size());
}

double mae(std::span<const double> pred, std::span<const double> truth) {
    check_shapes(pred, truth, "mae");
    double acc = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) acc += std::abs(pred[i] - truth[i]);
    return acc / static_cast<double>(pred.size());
}

double r2(std::span<const double> pred, std::span<const double> truth) {
    check_shapes(pred, truth, "r2");
    double mean = 0.0;
    for (double t : truth) mean += t;
    mean /= static_cast<double>(truth.size());
    double ss_res = 0.0, ss_tot = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double r = pred[i] - truth[i];
        const double c = truth[i] - mean;
        ss_res += r * r;
        ss_tot += c * c;
    }
    if (ss_tot == 0.0) throw ValueError("r2: truth has zero variance (degenerate)");
    return 1.0 - ss_res / ss_tot;
}

double l2_error(std::span<const double> pred, std::span<const double> truth) {
    check_shapes(pred, truth, "l2_error");
    double acc = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double d = pred[i] - truth[i];
        acc += d * d;
    }
    return std::sqrt(acc);
}

double relative_error(std::span<const double> pred, std::span<const double> truth) {
    check_shapes(pred, truth, "relative_error");
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double d = pred[i] - truth[i];
        num += d * d;
        den += truth[i] * truth[i];
    }
    if (den == 0.0) throw ValueError("relative_error: truth has zero norm (degenerate)");
    return std::sqrt(num) / std::sqrt(den);
}

MetricsReport compute_metrics(std::span<const double> pred, std::span<const double> truth) {
    MetricsReport report;
    report.mse = mse(pred, truth);
    report.mae = mae(pred, truth);
    report.r2 = r2(pred, truth);
    report.l2_error = l2_error(pred, truth);
    report.relative_error = relative_error(pred, truth);
    return report;
}

std::string MetricsReport::to_text() const {
    std::ostringstream out;
    out.precision(17);
    out << "mse = " << mse << "\n";
    out << "mae = " << mae << "\n";
    out << "r2 = " << r2 << "\n";
    out << "l2_error = " << l2_error << "\n";
    out << "relative_error = " << relative_error << "\n";
    for (std::size_t i = 0; i < per_time.size(); ++i) {
        const TimeSlice& slice = per_time[i];
        const std::string prefix = "per_time." + std::to_string(i) + ".";
        out << prefix << "time = " << slice.time << "\n";
        out << prefix << "mse = " << slice.mse << "\n";
        out << prefix << "mae = " << slice.mae << "\n";
        out << prefix << "r2 = " << slice.r2 << "\n";
        out << prefix << "l2_error = " << slice.l2_error << "\n";
        out << prefix << "relative_error = " << slice.relative_error << "\n";
    }
    return out.str();
}

}  // namespace fno
