#include "fno/interface.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace fno {

namespace {

constexpr double kAlphaSlack = 1e-9;
constexpr double kGradFloor = 1e-12;

void check_alpha_range(const ScalarField2D& alpha, const char* op) {
    for (double v : alpha.values) {
        if (!(v >= -kAlphaSlack && v <= 1.0 + kAlphaSlack))
            throw ValueError(std::string(op) + ": volume fraction " + std::to_string(v) +
                             " outside [0, 1]");
    }
}

void check_finite(const ScalarField2D& f, const char* op) {
    for (double v : f.values) {
        if (!std::isfinite(v)) throw ValueError(std::string(op) + ": field contains non-finite values");
    }
}

// Central differences inside, one-sided on the boundary.
void gradient(const ScalarField2D& f, ScalarField2D& gx, ScalarField2D& gy) {
    const int h = f.grid.height;
    const int w = f.grid.width;
    const double inv2dx = 1.0 / (2.0 * f.grid.dx);
    const double invdx = 1.0 / f.grid.dx;
    const double inv2dy = 1.0 / (2.0 * f.grid.dy);
    const double invdy = 1.0 / f.grid.dy;
    for (int i = 0; i < h; ++i) {
        for (int j = 0; j < w; ++j) {
            if (j == 0)
                gx.at(i, j) = (f.at(i, 1) - f.at(i, 0)) * invdx;
            else if (j == w - 1)
                gx.at(i, j) = (f.at(i, w - 1) - f.at(i, w - 2)) * invdx;
            else
                gx.at(i, j) = (f.at(i, j + 1) - f.at(i, j - 1)) * inv2dx;
            if (i == 0)
                gy.at(i, j) = (f.at(1, j) - f.at(0, j)) * invdy;
            else if (i == h - 1)
                gy.at(i, j) = (f.at(h - 1, j) - f.at(h - 2, j)) * invdy;
            else
                gy.at(i, j) = (f.at(i + 1, j) - f.at(i - 1, j)) * inv2dy;
        }
    }
}

void unit_normal(const ScalarField2D& zeta, ScalarField2D& nx, ScalarField2D& ny) {
    gradient(zeta, nx, ny);
    for (std::size_t p = 0; p < zeta.values.size(); ++p) {
        const double gxv = nx.values[p];
        const double gyv = ny.values[p];
        const double norm = std::max(std::sqrt(gxv * gxv + gyv * gyv), kGradFloor);
        nx.values[p] = gxv / norm;
        ny.values[p] = gyv / norm;
    }
}

ScalarField2D divergence_of_normal(const ScalarField2D& zeta) {
    ScalarField2D nx(zeta.grid), ny(zeta.grid);
    unit_normal(zeta, nx, ny);
    ScalarField2D dnx_dx(zeta.grid), dnx_dy(zeta.grid);
    ScalarField2D dny_dx(zeta.grid), dny_dy(zeta.grid);
    gradient(nx, dnx_dx, dnx_dy);
    gradient(ny, dny_dx, dny_dy);
    ScalarField2D q(zeta.grid);
    for (std::size_t p = 0; p < q.values.size(); ++p) {
        q.values[p] = dnx_dx.values[p] + dny_dy.values[p];
    }
    return q;
}

}  // namespace

void RdfParams::validate() const {
    if (!(epsilon > 0.0)) throw ValueError("RdfParams: epsilon must be positive");
    if (!(delta > 0.0 && delta < 0.5)) throw ValueError("RdfParams: delta must lie in (0, 0.5)");
}

ScalarField2D alpha_to_rdf(const ScalarField2D& alpha, const RdfParams& params) {
    params.validate();
    check_alpha_range(alpha, "alpha_to_rdf");
    ScalarField2D zeta(alpha.grid);
    const double lo = params.delta;
    const double hi = 1.0 - params.delta;
    for (std::size_t p = 0; p < alpha.values.size(); ++p) {
        const double a = std::clamp(alpha.values[p], lo, hi);
        zeta.values[p] = params.epsilon * std::atanh(1.0 - 2.0 * a);
    }
    return zeta;
}

ScalarField2D rdf_to_alpha(const ScalarField2D& zeta, const RdfParams& params) {
    params.validate();
    check_finite(zeta, "rdf_to_alpha");
    ScalarField2D alpha(zeta.grid);
    for (std::size_t p = 0; p < zeta.values.size(); ++p) {
        alpha.values[p] = 0.5 * (1.0 - std::tanh(zeta.values[p] / params.epsilon));
    }
    return alpha;
}

ScalarField2D binarize(const ScalarField2D& zeta) {
    check_finite(zeta, "binarize");
    ScalarField2D out(zeta.grid);
    for (std::size_t p = 0; p < zeta.values.size(); ++p) {
        out.values[p] = zeta.values[p] < 0.0 ? 1.0 : 0.0;
    }
    return out;
}

ScalarField2D curvature(const ScalarField2D& zeta) {
    check_finite(zeta, "curvature");
    zeta.grid.validate();
    return divergence_of_normal(zeta);
}

FieldBatch surface_tension_force(const ScalarField2D& zeta, double sigma) {
    if (!(sigma >= 0.0)) throw ValueError("surface_tension_force: sigma must be >= 0");
    check_finite(zeta, "surface_tension_force");
    ScalarField2D nx(zeta.grid), ny(zeta.grid);
    unit_normal(zeta, nx, ny);
    const ScalarField2D q = divergence_of_normal(zeta);
    FieldBatch force(1, 2, zeta.grid);
    double* fx = force.channel(0, 0);
    double* fy = force.channel(0, 1);
    for (std::size_t p = 0; p < zeta.values.size(); ++p) {
        fx[p] = sigma * q.values[p] * nx.values[p];
        fy[p] = sigma * q.values[p] * ny.values[p];
    }
    return force;
}

ScalarField2D mixture_property(const ScalarField2D& alpha, const PhaseProps& props) {
    check_alpha_range(alpha, "mixture_property");
    ScalarField2D out(alpha.grid);
    for (std::size_t p = 0; p < alpha.values.size(); ++p) {
        const double a = alpha.values[p];
        out.values[p] = a * props.xi_liquid + (1.0 - a) * props.xi_gas;
    }
    return out;
}

}  // namespace fno
