#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "fno/field.hpp"
#include "fno/interface.hpp"

namespace fno {

enum class FlowKind { RigidRotation, SingleVortex, StagnationCollapse, UniformFall };

struct Velocity {
    double u = 0.0;
    double v = 0.0;
};

/// Prescribed analytic velocity field. All kinds except uniform_fall are
/// divergence-free by construction. Rotation and stagnation default their
/// centre to the domain centre; the vortex profile needs the domain extents.
struct FlowSpec {
    FlowKind kind = FlowKind::UniformFall;
    double omega = 0.0;       // rigid rotation rate, 1/s
    double t_period = 1.0;    // vortex reversal period, s
    double amplitude = 0.0;   // vortex speed scale, length/s
    double gamma = 0.0;       // stagnation strain rate, 1/s
    double fall_speed = 0.0;  // uniform fall speed, length/s
    double center_x = 0.0;
    double center_y = 0.0;
    double domain_x = 1.0;  // width * dx
    double domain_y = 1.0;  // height * dy

    static FlowSpec rigid_rotation(double omega, const Grid2D& grid);
    static FlowSpec single_vortex(double t_period, double amplitude, const Grid2D& grid);
    static FlowSpec stagnation_collapse(double gamma, const Grid2D& grid);
    static FlowSpec uniform_fall(double speed, const Grid2D& grid);
};

enum class InitKind { Column, RandomBlobs };

/// Initial interface geometry. Column is a rectangle given by centre and
/// extents; random blobs draws `count` circles with rejection sampling.
struct InitSpec {
    InitKind kind = InitKind::Column;
    // column
    double x0 = 0.0, y0 = 0.0;  // rectangle centre
    double w = 0.0, h = 0.0;    // full extents
    // random_blobs
    int count_min = 1, count_max = 3;
    double radius_min = 4.0, radius_max = 8.0;
    double margin = 2.0;  // clearance to the walls
    std::uint64_t seed = 0;

    static InitSpec column(double x0, double y0, double w, double h);
    static InitSpec random_blobs(int count_min, int count_max, double radius_min,
                                 double radius_max, double margin, std::uint64_t seed);
};

struct SimConfig {
    Grid2D grid;
    double dt = 0.0;
    int n_steps = 0;
    std::vector<double> snapshot_times;  // empty: capture every step
    int reinit_every = 0;                // 0 = redistancing off
};

/// Labelled sample collection: inputs [n][2][H][W] (channel 0 the initial
/// RDF, channel 1 the broadcast time), targets [n][1][H][W].
struct Dataset {
    std::int64_t n = 0;
    Grid2D grid;
    std::vector<double> inputs;
    std::vector<double> targets;
    double epsilon = 1.0;
    std::string provenance;

    std::size_t plane() const { return grid.cells(); }
    double* input_channel(std::int64_t sample, int ch) {
        return inputs.data() + (static_cast<std::size_t>(sample) * 2 + ch) * plane();
    }
    const double* input_channel(std::int64_t sample, int ch) const {
        return inputs.data() + (static_cast<std::size_t>(sample) * 2 + ch) * plane();
    }
    double* target(std::int64_t sample) {
        return targets.data() + static_cast<std::size_t>(sample) * plane();
    }
    const double* target(std::int64_t sample) const {
        return targets.data() + static_cast<std::size_t>(sample) * plane();
    }
    /// Value of the broadcast time channel of one sample.
    double time_of(std::int64_t sample) const { return input_channel(sample, 1)[0]; }
};

using Frame = std::pair<double, ScalarField2D>;

/// Exact signed distance to the rectangle boundary, negative inside.
ScalarField2D init_column(const Grid2D& grid, const InitSpec& spec);

/// Union of random disks: pointwise minimum of circle signed distances.
/// Deterministic for a fixed seed.
ScalarField2D init_blobs(const Grid2D& grid, const InitSpec& spec);

Velocity velocity_at(const FlowSpec& flow, double x, double y, double t);

/// One semi-Lagrangian step from t to t+dt: second-order Runge-Kutta
/// backtrace of each cell centre, monotone cubic interpolation at the
/// departure point, boundary-clamped. Throws StabilityError when
/// max|u|*dt/min(dx,dy) > 1.
ScalarField2D advect(const ScalarField2D& zeta, const FlowSpec& flow, double t, double dt);

/// Rebuilds zeta as a signed distance to its zero level set: interface
/// cells seeded by linear interpolation, fast sweeping elsewhere.
ScalarField2D redistance(const ScalarField2D& zeta);

/// Repeated advect with frames captured at the nearest step to each
/// snapshot time (all steps when snapshot_times is empty) and optional
/// periodic redistancing.
std::vector<Frame> simulate(const InitSpec& init, const FlowSpec& flow, const SimConfig& config);

/// Case-1 style dataset: every frame becomes (zeta_0, t_norm) -> zeta_t,
/// times normalized to [0,1] by the final frame time. Needs >= 3 frames.
/// Fields are stored in the epsilon-regularised RDF form (the alpha round
/// trip saturates the far field at +-eps*atanh(1-2*delta)).
Dataset build_forecast_dataset(const std::vector<Frame>& frames, double epsilon,
                               const std::string& provenance = "forecast");

/// Case-2 style dataset: each 3-frame simulation (t0 < t1 < t2) emits
/// (zeta_0, t1) -> zeta_t1 and (zeta_0, t2) -> zeta_t2. Fields stored in the
/// same epsilon-regularised RDF form as build_forecast_dataset.
Dataset build_pairs_dataset(const std::vector<std::vector<Frame>>& simulations, double epsilon,
                            const std::string& provenance = "pairs");

/// Binary .fnds round trip; see the format notes in datagen.cpp.
void write_dataset(const Dataset& dataset, const std::string& path);
Dataset read_dataset(const std::string& path);

/// Reads a text grid of volume fractions ("H W" header then H*W values,
/// row-major), validates the range, and converts to the RDF.
ScalarField2D import_grid_text(const std::string& path, double epsilon);

/// Companion writer used by the CLI predict path.
void write_grid_text(const ScalarField2D& field, const std::string& path);

}  // namespace fno
