#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace fno {

/// The validation metrics, optionally broken out per time value.
struct MetricsReport {
    double mse = 0.0;
    double mae = 0.0;
    double r2 = 0.0;
    double l2_error = 0.0;
    double relative_error = 0.0;

    struct TimeSlice {
        double time = 0.0;
        double mse = 0.0, mae = 0.0, r2 = 0.0, l2_error = 0.0, relative_error = 0.0;
    };
    std::vector<TimeSlice> per_time;

    /// "key = value" text form written by the CLI.
    std::string to_text() const;
};

double mse(std::span<const double> pred, std::span<const double> truth);
double mae(std::span<const double> pred, std::span<const double> truth);
/// 1 - SS_res/SS_tot with SS_tot about the mean of `truth`; the truth must
/// have nonzero variance.
double r2(std::span<const double> pred, std::span<const double> truth);
double l2_error(std::span<const double> pred, std::span<const double> truth);
/// ||pred - truth|| / ||truth||; the truth must have nonzero norm.
double relative_error(std::span<const double> pred, std::span<const double> truth);

/// All five at once over a flat pair of arrays.
MetricsReport compute_metrics(std::span<const double> pred, std::span<const double> truth);

}  // namespace fno
