#include "fno/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "fno/io.hpp"
#include "fno/parallel.hpp"
#include "fno/rng.hpp"

namespace fno {

namespace {

constexpr double kPi = 3.14159265358979323846;

double domain_center_x(const Grid2D& g) { return 0.5 * g.width * g.dx; }
double domain_center_y(const Grid2D& g) { return 0.5 * g.height * g.dy; }

// Catmull-Rom weights for fractional offset t in [0, 1].
void cubic_weights(double t, double w[4]) {
    const double t2 = t * t;
    const double t3 = t2 * t;
    w[0] = -0.5 * t3 + t2 - 0.5 * t;
    w[1] = 1.5 * t3 - 2.5 * t2 + 1.0;
    w[2] = -1.5 * t3 + 2.0 * t2 + 0.5 * t;
    w[3] = 0.5 * t3 - 0.5 * t2;
}

// Monotone cubic sample at physical point (x, y); departure points outside
// the domain clamp to the boundary value. The result is limited to the
// min/max of the enclosing 2x2 cell block, which keeps the scheme free of
// spurious overshoots near kinks while staying exact on lattice points.
double sample_cubic(const ScalarField2D& f, double x, double y) {
    const int h = f.grid.height;
    const int w = f.grid.width;
    double gx = x / f.grid.dx - 0.5;
    double gy = y / f.grid.dy - 0.5;
    gx = std::clamp(gx, 0.0, static_cast<double>(w - 1));
    gy = std::clamp(gy, 0.0, static_cast<double>(h - 1));
    int j0 = std::clamp(static_cast<int>(std::floor(gx)), 0, w - 2);
    int i0 = std::clamp(static_cast<int>(std::floor(gy)), 0, h - 2);
    const double tx = gx - j0;
    const double ty = gy - i0;
    double wx[4], wy[4];
    cubic_weights(tx, wx);
    cubic_weights(ty, wy);
    double value = 0.0;
    for (int a = 0; a < 4; ++a) {
        const int ia = std::clamp(i0 + a - 1, 0, h - 1);
        double row = 0.0;
        for (int b = 0; b < 4; ++b) {
            const int jb = std::clamp(j0 + b - 1, 0, w - 1);
            row += wx[b] * f.at(ia, jb);
        }
        value += wy[a] * row;
    }
    const int i1 = std::min(i0 + 1, h - 1);
    const int j1 = std::min(j0 + 1, w - 1);
    const double c00 = f.at(i0, j0), c01 = f.at(i0, j1);
    const double c10 = f.at(i1, j0), c11 = f.at(i1, j1);
    const double lo = std::min(std::min(c00, c01), std::min(c10, c11));
    const double hi = std::max(std::max(c00, c01), std::max(c10, c11));
    return std::clamp(value, lo, hi);
}

double max_speed_on_grid(const FlowSpec& flow, const Grid2D& grid, double t) {
    double vmax = 0.0;
    for (int i = 0; i < grid.height; ++i) {
        const double y = (i + 0.5) * grid.dy;
        for (int j = 0; j < grid.width; ++j) {
            const double x = (j + 0.5) * grid.dx;
            const Velocity vel = velocity_at(flow, x, y, t);
            vmax = std::max(vmax, std::max(std::abs(vel.u), std::abs(vel.v)));
        }
    }
    return vmax;
}

}  // namespace

FlowSpec FlowSpec::rigid_rotation(double omega, const Grid2D& grid) {
    FlowSpec f;
    f.kind = FlowKind::RigidRotation;
    f.omega = omega;
    f.center_x = domain_center_x(grid);
    f.center_y = domain_center_y(grid);
    f.domain_x = grid.width * grid.dx;
    f.domain_y = grid.height * grid.dy;
    return f;
}

FlowSpec FlowSpec::single_vortex(double t_period, double amplitude, const Grid2D& grid) {
    if (!(t_period > 0.0)) throw ValueError("single_vortex: period must be positive");
    FlowSpec f;
    f.kind = FlowKind::SingleVortex;
    f.t_period = t_period;
    f.amplitude = amplitude;
    f.domain_x = grid.width * grid.dx;
    f.domain_y = grid.height * grid.dy;
    return f;
}

FlowSpec FlowSpec::stagnation_collapse(double gamma, const Grid2D& grid) {
    FlowSpec f;
    f.kind = FlowKind::StagnationCollapse;
    f.gamma = gamma;
    f.center_x = domain_center_x(grid);
    f.center_y = domain_center_y(grid);
    f.domain_x = grid.width * grid.dx;
    f.domain_y = grid.height * grid.dy;
    return f;
}

FlowSpec FlowSpec::uniform_fall(double speed, const Grid2D& grid) {
    FlowSpec f;
    f.kind = FlowKind::UniformFall;
    f.fall_speed = speed;
    f.domain_x = grid.width * grid.dx;
    f.domain_y = grid.height * grid.dy;
    return f;
}

InitSpec InitSpec::column(double x0, double y0, double w, double h) {
    InitSpec s;
    s.kind = InitKind::Column;
    s.x0 = x0;
    s.y0 = y0;
    s.w = w;
    s.h = h;
    return s;
}

InitSpec InitSpec::random_blobs(int count_min, int count_max, double radius_min,
                                double radius_max, double margin, std::uint64_t seed) {
    InitSpec s;
    s.kind = InitKind::RandomBlobs;
    s.count_min = count_min;
    s.count_max = count_max;
    s.radius_min = radius_min;
    s.radius_max = radius_max;
    s.margin = margin;
    s.seed = seed;
    return s;
}

ScalarField2D init_column(const Grid2D& grid, const InitSpec& spec) {
    grid.validate();
    if (spec.kind != InitKind::Column) throw ValueError("init_column: wrong InitSpec kind");
    if (!(spec.w > 0.0) || !(spec.h > 0.0))
        throw GeometryError("init_column: rectangle extents must be positive");
    const double ex = 0.5 * spec.w;
    const double ey = 0.5 * spec.h;
    if (spec.x0 - ex < 0.0 || spec.x0 + ex > grid.width * grid.dx || spec.y0 - ey < 0.0 ||
        spec.y0 + ey > grid.height * grid.dy)
        throw GeometryError("init_column: rectangle extends outside the domain");
    ScalarField2D zeta(grid);
    for (int i = 0; i < grid.height; ++i) {
        const double y = (i + 0.5) * grid.dy;
        for (int j = 0; j < grid.width; ++j) {
            const double x = (j + 0.5) * grid.dx;
            const double px = std::abs(x - spec.x0) - ex;
            const double py = std::abs(y - spec.y0) - ey;
            const double outside = std::hypot(std::max(px, 0.0), std::max(py, 0.0));
            const double inside = std::min(std::max(px, py), 0.0);
            zeta.at(i, j) = outside + inside;
        }
    }
    return zeta;
}

ScalarField2D init_blobs(const Grid2D& grid, const InitSpec& spec) {
    grid.validate();
    if (spec.kind != InitKind::RandomBlobs) throw ValueError("init_blobs: wrong InitSpec kind");
    if (spec.count_min < 1 || spec.count_max < spec.count_min)
        throw ValueError("init_blobs: invalid count range");
    if (!(spec.radius_min > 0.0) || spec.radius_max < spec.radius_min)
        throw ValueError("init_blobs: invalid radius range");
    Rng rng(spec.seed);
    const int count = static_cast<int>(rng.uniform_int(spec.count_min, spec.count_max));
    const double lx = grid.width * grid.dx;
    const double ly = grid.height * grid.dy;

    struct Blob {
        double cx, cy, r;
    };
    std::vector<Blob> blobs;
    for (int b = 0; b < count; ++b) {
        bool placed = false;
        for (int attempt = 0; attempt < 1000 && !placed; ++attempt) {
            const double r = rng.uniform(spec.radius_min, spec.radius_max);
            const double clearance = r + spec.margin;
            if (2.0 * clearance >= lx || 2.0 * clearance >= ly) continue;
            const double cx = rng.uniform(clearance, lx - clearance);
            const double cy = rng.uniform(clearance, ly - clearance);
            blobs.push_back({cx, cy, r});
            placed = true;
        }
        if (!placed)
            throw GenerationError("init_blobs: could not place blob " + std::to_string(b) +
                                  " after 1000 attempts");
    }

    ScalarField2D zeta(grid, std::numeric_limits<double>::infinity());
    for (int i = 0; i < grid.height; ++i) {
        const double y = (i + 0.5) * grid.dy;
        for (int j = 0; j < grid.width; ++j) {
            const double x = (j + 0.5) * grid.dx;
            double d = std::numeric_limits<double>::infinity();
            for (const Blob& blob : blobs) {
                d = std::min(d, std::hypot(x - blob.cx, y - blob.cy) - blob.r);
            }
            zeta.at(i, j) = d;
        }
    }
    return zeta;
}

Velocity velocity_at(const FlowSpec& flow, double x, double y, double t) {
    switch (flow.kind) {
        case FlowKind::RigidRotation:
            return {-flow.omega * (y - flow.center_y), flow.omega * (x - flow.center_x)};
        case FlowKind::SingleVortex: {
            // Rider-Kothe stream function psi = (A*L0/pi) sin^2(pi x/Lx) sin^2(pi y/Ly),
            // reversed in time by the cos(pi t/T) factor.
            const double l0 = std::min(flow.domain_x, flow.domain_y);
            const double sx = std::sin(kPi * x / flow.domain_x);
            const double sy = std::sin(kPi * y / flow.domain_y);
            const double cx = std::cos(kPi * x / flow.domain_x);
            const double cy = std::cos(kPi * y / flow.domain_y);
            const double mod = std::cos(kPi * t / flow.t_period);
            const double u = -flow.amplitude * (l0 / flow.domain_y) * sx * sx * 2.0 * sy * cy * mod;
            const double v = flow.amplitude * (l0 / flow.domain_x) * sy * sy * 2.0 * sx * cx * mod;
            return {u, v};
        }
        case FlowKind::StagnationCollapse:
            return {flow.gamma * (x - flow.center_x), -flow.gamma * (y - flow.center_y)};
        case FlowKind::UniformFall:
            return {0.0, -flow.fall_speed};
    }
    return {};
}

ScalarField2D advect(const ScalarField2D& zeta, const FlowSpec& flow, double t, double dt) {
    zeta.grid.validate();
    if (!(dt > 0.0)) throw ValueError("advect: dt must be positive");
    const double vmax = std::max(max_speed_on_grid(flow, zeta.grid, t),
                                 max_speed_on_grid(flow, zeta.grid, t + dt));
    const double cfl = vmax * dt / std::min(zeta.grid.dx, zeta.grid.dy);
    if (cfl > 1.0 + 1e-12)
        throw StabilityError("advect: CFL " + std::to_string(cfl) + " exceeds 1");

    ScalarField2D out(zeta.grid);
    const int h = zeta.grid.height;
    parallel_for(static_cast<std::size_t>(h), [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            const double y = (static_cast<double>(i) + 0.5) * zeta.grid.dy;
            for (int j = 0; j < zeta.grid.width; ++j) {
                const double x = (j + 0.5) * zeta.grid.dx;
                const Velocity v1 = velocity_at(flow, x, y, t + dt);
                const double xm = x - 0.5 * dt * v1.u;
                const double ym = y - 0.5 * dt * v1.v;
                const Velocity v2 = velocity_at(flow, xm, ym, t + 0.5 * dt);
                const double xd = x - dt * v2.u;
                const double yd = y - dt * v2.v;
                out.at(static_cast<int>(i), j) = sample_cubic(zeta, xd, yd);
            }
        }
    });
    return out;
}

ScalarField2D redistance(const ScalarField2D& zeta) {
    zeta.grid.validate();
    const int h = zeta.grid.height;
    const int w = zeta.grid.width;
    const double dx = zeta.grid.dx;
    const double dy = zeta.grid.dy;
    const double inf = std::numeric_limits<double>::infinity();

    std::vector<double> dist(zeta.values.size(), inf);
    std::vector<char> frozen(zeta.values.size(), 0);

    // Seed cells adjacent to a sign change with linearly interpolated
    // distances to the zero crossing.
    const auto idx = [w](int i, int j) { return static_cast<std::size_t>(i) * w + j; };
    for (int i = 0; i < h; ++i) {
        for (int j = 0; j < w; ++j) {
            const double zc = zeta.at(i, j);
            double best = inf;
            const auto consider = [&](double zn, double spacing) {
                if ((zc < 0.0) != (zn < 0.0) || zn == 0.0 || zc == 0.0) {
                    const double denom = zc - zn;
                    if (denom != 0.0) {
                        const double theta = zc / denom;
                        if (theta >= 0.0 && theta <= 1.0) best = std::min(best, std::abs(theta) * spacing);
                    } else {
                        best = 0.0;
                    }
                }
            };
            if (j + 1 < w) consider(zeta.at(i, j + 1), dx);
            if (j > 0) consider(zeta.at(i, j - 1), dx);
            if (i + 1 < h) consider(zeta.at(i + 1, j), dy);
            if (i > 0) consider(zeta.at(i - 1, j), dy);
            if (best < inf) {
                dist[idx(i, j)] = best;
                frozen[idx(i, j)] = 1;
            }
        }
    }

    // Fast sweeping: four orderings, repeated, with the standard 2D Eikonal
    // update |grad d| = 1.
    const auto solve = [&](double a, double b) {
        // a: best horizontal neighbour, b: best vertical neighbour.
        if (a == inf && b == inf) return inf;
        if (a == inf) return b + dy;
        if (b == inf) return a + dx;
        // Try the two-sided quadratic ((d-a)/dx)^2 + ((d-b)/dy)^2 = 1.
        const double idx2 = 1.0 / (dx * dx), idy2 = 1.0 / (dy * dy);
        const double A = idx2 + idy2;
        const double B = -2.0 * (a * idx2 + b * idy2);
        const double C = a * a * idx2 + b * b * idy2 - 1.0;
        const double disc = B * B - 4.0 * A * C;
        if (disc >= 0.0) {
            const double d = (-B + std::sqrt(disc)) / (2.0 * A);
            if (d >= std::max(a, b)) return d;
        }
        return std::min(a + dx, b + dy);
    };
    const auto sweep = [&](int i0, int i1, int istep, int j0, int j1, int jstep) {
        for (int i = i0; i != i1; i += istep) {
            for (int j = j0; j != j1; j += jstep) {
                if (frozen[idx(i, j)]) continue;
                const double left = j > 0 ? dist[idx(i, j - 1)] : inf;
                const double right = j + 1 < w ? dist[idx(i, j + 1)] : inf;
                const double down = i > 0 ? dist[idx(i - 1, j)] : inf;
                const double up = i + 1 < h ? dist[idx(i + 1, j)] : inf;
                const double cand = solve(std::min(left, right), std::min(down, up));
                if (cand < dist[idx(i, j)]) dist[idx(i, j)] = cand;
            }
        }
    };
    for (int pass = 0; pass < 2; ++pass) {
        sweep(0, h, 1, 0, w, 1);
        sweep(0, h, 1, w - 1, -1, -1);
        sweep(h - 1, -1, -1, 0, w, 1);
        sweep(h - 1, -1, -1, w - 1, -1, -1);
    }

    ScalarField2D out(zeta.grid);
    for (std::size_t p = 0; p < out.values.size(); ++p) {
        const double d = dist[p] == inf ? std::max(dx, dy) * (h + w) : dist[p];
        out.values[p] = zeta.values[p] < 0.0 ? -d : d;
    }
    return out;
}

std::vector<Frame> simulate(const InitSpec& init, const FlowSpec& flow, const SimConfig& config) {
    config.grid.validate();
    if (config.n_steps < 0) throw ValueError("simulate: n_steps must be >= 0");
    if (config.n_steps > 0 && !(config.dt > 0.0))
        throw ValueError("simulate: dt must be positive");
    const double t_end = config.n_steps * config.dt;
    for (double s : config.snapshot_times) {
        if (s < -1e-12 || s > t_end + 1e-12)
            throw ValueError("simulate: snapshot time " + std::to_string(s) +
                             " outside [0, " + std::to_string(t_end) + "]");
    }

    // Map each requested snapshot to its nearest step index.
    std::vector<std::pair<int, double>> capture;  // (step, reported time)
    if (config.snapshot_times.empty()) {
        for (int k = 0; k <= config.n_steps; ++k) capture.emplace_back(k, k * config.dt);
    } else {
        for (double s : config.snapshot_times) {
            const int k = config.dt > 0.0
                              ? std::clamp(static_cast<int>(std::llround(s / config.dt)), 0,
                                           config.n_steps)
                              : 0;
            capture.emplace_back(k, s);
        }
    }
    std::sort(capture.begin(), capture.end());

    ScalarField2D zeta = init.kind == InitKind::Column ? init_column(config.grid, init)
                                                       : init_blobs(config.grid, init);
    std::vector<Frame> frames;
    std::size_t next = 0;
    const auto capture_step = [&](int k) {
        while (next < capture.size() && capture[next].first == k) {
            frames.emplace_back(capture[next].second, zeta);
            ++next;
        }
    };
    capture_step(0);
    for (int k = 0; k < config.n_steps; ++k) {
        zeta = advect(zeta, flow, k * config.dt, config.dt);
        if (config.reinit_every > 0 && (k + 1) % config.reinit_every == 0) {
            zeta = redistance(zeta);
        }
        capture_step(k + 1);
    }
    return frames;
}

namespace {

// Datasets carry fields in the epsilon-regularised RDF representation: the
// level-set frames go through the alpha round trip, which saturates the far
// field at +-eps*atanh(1-2*delta) exactly as solver-exported volume
// fractions would.
std::vector<double> rdf_representation(const ScalarField2D& zeta, double epsilon) {
    const RdfParams params{epsilon, 1e-6};
    return alpha_to_rdf(rdf_to_alpha(zeta, params), params).values;
}

}  // namespace

Dataset build_forecast_dataset(const std::vector<Frame>& frames, double epsilon,
                               const std::string& provenance) {
    if (frames.size() < 3)
        throw DataError("build_forecast_dataset: need at least 3 frames, got " +
                        std::to_string(frames.size()));
    const double t_final = frames.back().first;
    if (!(t_final > 0.0)) throw DataError("build_forecast_dataset: final frame time must be > 0");
    const Grid2D grid = frames.front().second.grid;
    Dataset ds;
    ds.n = static_cast<std::int64_t>(frames.size());
    ds.grid = grid;
    ds.epsilon = epsilon;
    ds.provenance = provenance;
    ds.inputs.resize(static_cast<std::size_t>(ds.n) * 2 * grid.cells());
    ds.targets.resize(static_cast<std::size_t>(ds.n) * grid.cells());
    const std::vector<double> zeta0 = rdf_representation(frames.front().second, epsilon);
    for (std::int64_t s = 0; s < ds.n; ++s) {
        const Frame& fr = frames[static_cast<std::size_t>(s)];
        if (!(fr.second.grid == grid))
            throw DataError("build_forecast_dataset: frame grids differ");
        std::copy(zeta0.begin(), zeta0.end(), ds.input_channel(s, 0));
        std::fill_n(ds.input_channel(s, 1), grid.cells(), fr.first / t_final);
        const std::vector<double> target = rdf_representation(fr.second, epsilon);
        std::copy(target.begin(), target.end(), ds.target(s));
    }
    return ds;
}

Dataset build_pairs_dataset(const std::vector<std::vector<Frame>>& simulations, double epsilon,
                            const std::string& provenance) {
    if (simulations.empty()) throw DataError("build_pairs_dataset: no simulations");
    const Grid2D grid = simulations.front().front().second.grid;
    Dataset ds;
    ds.n = 2 * static_cast<std::int64_t>(simulations.size());
    ds.grid = grid;
    ds.epsilon = epsilon;
    ds.provenance = provenance;
    ds.inputs.resize(static_cast<std::size_t>(ds.n) * 2 * grid.cells());
    ds.targets.resize(static_cast<std::size_t>(ds.n) * grid.cells());
    std::int64_t s = 0;
    for (const auto& sim : simulations) {
        if (sim.size() != 3)
            throw DataError("build_pairs_dataset: each simulation must have exactly 3 frames, got " +
                            std::to_string(sim.size()));
        for (const Frame& fr : sim) {
            if (!(fr.second.grid == grid)) throw DataError("build_pairs_dataset: frame grids differ");
        }
        const std::vector<double> zeta0 = rdf_representation(sim[0].second, epsilon);
        for (int pair = 1; pair <= 2; ++pair, ++s) {
            std::copy(zeta0.begin(), zeta0.end(), ds.input_channel(s, 0));
            std::fill_n(ds.input_channel(s, 1), grid.cells(), sim[static_cast<std::size_t>(pair)].first);
            const std::vector<double> target =
                rdf_representation(sim[static_cast<std::size_t>(pair)].second, epsilon);
            std::copy(target.begin(), target.end(), ds.target(s));
        }
    }
    return ds;
}

// .fnds layout, little-endian:
//   "FNDS" | u32 version=1 | u64 n | u32 c_in=2 | u32 c_out=1 | u32 H | u32 W
//   | f64 epsilon | inputs n*2*H*W f64 | targets n*1*H*W f64
//   | u32 length-prefixed UTF-8 provenance
void write_dataset(const Dataset& dataset, const std::string& path) {
    io::BinaryWriter w(path);
    w.bytes("FNDS", 4);
    w.u32(1);
    w.u64(static_cast<std::uint64_t>(dataset.n));
    w.u32(2);
    w.u32(1);
    w.u32(static_cast<std::uint32_t>(dataset.grid.height));
    w.u32(static_cast<std::uint32_t>(dataset.grid.width));
    w.f64(dataset.epsilon);
    w.f64_array(dataset.inputs.data(), dataset.inputs.size());
    w.f64_array(dataset.targets.data(), dataset.targets.size());
    w.u32(static_cast<std::uint32_t>(dataset.provenance.size()));
    w.bytes(dataset.provenance.data(), dataset.provenance.size());
    w.commit();
}

Dataset read_dataset(const std::string& path) {
    io::BinaryReader r(path);
    if (r.fixed_bytes(4) != "FNDS") throw FormatError("bad magic, expected FNDS", 0);
    const std::uint32_t version = r.u32();
    if (version != 1) throw FormatError("unsupported dataset version " + std::to_string(version), 4);
    const std::uint64_t n = r.u64();
    const std::uint32_t c_in = r.u32();
    const std::uint32_t c_out = r.u32();
    if (c_in != 2 || c_out != 1)
        throw FormatError("unexpected channel counts " + std::to_string(c_in) + "/" +
                              std::to_string(c_out),
                          16);
    const std::uint32_t height = r.u32();
    const std::uint32_t width = r.u32();
    if (height < 4 || width < 4 || height > (1u << 20) || width > (1u << 20))
        throw FormatError("implausible grid " + std::to_string(height) + "x" + std::to_string(width),
                          24);
    const double epsilon = r.f64();
    if (!std::isfinite(epsilon) || !(epsilon > 0.0))
        throw FormatError("epsilon must be finite and positive", 32);

    const std::uint64_t plane = static_cast<std::uint64_t>(height) * width;
    // Cross-check the header against the actual file size before allocating.
    if (n > r.size() / 8 / (3 * plane))
        throw FormatError("sample count " + std::to_string(n) + " inconsistent with file size", 8);
    Dataset ds;
    ds.n = static_cast<std::int64_t>(n);
    ds.grid = Grid2D{static_cast<int>(height), static_cast<int>(width), 1.0, 1.0};
    ds.epsilon = epsilon;
    ds.inputs.resize(static_cast<std::size_t>(n) * 2 * plane);
    ds.targets.resize(static_cast<std::size_t>(n) * plane);
    r.f64_array(ds.inputs.data(), ds.inputs.size());
    r.f64_array(ds.targets.data(), ds.targets.size());
    const std::uint64_t prov_off = r.offset();
    const std::uint32_t prov_len = r.u32();
    if (prov_len > r.remaining())
        throw FormatError("provenance length " + std::to_string(prov_len) + " exceeds file",
                          prov_off);
    ds.provenance = r.fixed_bytes(prov_len);
    r.expect_exhausted("dataset");

    for (double v : ds.inputs)
        if (!std::isfinite(v)) throw FormatError("non-finite value in inputs block", 40);
    for (double v : ds.targets)
        if (!std::isfinite(v)) throw FormatError("non-finite value in targets block", 40);
    for (std::int64_t s = 0; s < ds.n; ++s) {
        const double* tc = ds.input_channel(s, 1);
        for (std::size_t p = 1; p < plane; ++p) {
            if (tc[p] != tc[0])
                throw FormatError("time channel of sample " + std::to_string(s) +
                                      " is not spatially constant",
                                  40);
        }
    }
    return ds;
}

ScalarField2D import_grid_text(const std::string& path, double epsilon) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open '" + path + "' for reading");
    std::string line;
    std::size_t line_no = 0;

    int height = 0, width = 0;
    {
        if (!std::getline(in, line)) throw ParseError("missing header line 'H W'", 1);
        ++line_no;
        std::istringstream header(line);
        if (!(header >> height >> width) || height < 4 || width < 4)
            throw ParseError("header must be two integers >= 4", line_no);
        std::string extra;
        if (header >> extra) throw ParseError("unexpected token '" + extra + "' after header", line_no);
    }

    ScalarField2D alpha(Grid2D{height, width, 1.0, 1.0});
    std::size_t count = 0;
    const std::size_t total = alpha.values.size();
    while (count < total && std::getline(in, line)) {
        ++line_no;
        std::istringstream tokens(line);
        std::string tok;
        while (tokens >> tok) {
            if (count >= total) throw ParseError("more values than header promises", line_no);
            std::size_t used = 0;
            double v = 0.0;
            try {
                v = std::stod(tok, &used);
            } catch (const std::exception&) {
                throw ParseError("non-numeric token '" + tok + "'", line_no);
            }
            if (used != tok.size()) throw ParseError("non-numeric token '" + tok + "'", line_no);
            if (!(v >= -1e-9 && v <= 1.0 + 1e-9))
                throw ParseError("volume fraction " + tok + " outside [0, 1]", line_no);
            alpha.values[count++] = v;
        }
    }
    if (count < total)
        throw ParseError("expected " + std::to_string(total) + " values, found " +
                             std::to_string(count),
                         line_no);
    while (std::getline(in, line)) {
        ++line_no;
        std::istringstream tokens(line);
        std::string tok;
        if (tokens >> tok) throw ParseError("trailing data '" + tok + "'", line_no);
    }
    return alpha_to_rdf(alpha, RdfParams{epsilon, 1e-6});
}

void write_grid_text(const ScalarField2D& field, const std::string& path) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp);
        if (!out) throw Error("cannot open '" + tmp + "' for writing");
        out << field.grid.height << " " << field.grid.width << "\n";
        out.precision(17);
        for (int i = 0; i < field.grid.height; ++i) {
            for (int j = 0; j < field.grid.width; ++j) {
                out << field.at(i, j) << (j + 1 == field.grid.width ? '\n' : ' ');
            }
        }
        if (!out) throw Error("write failed on '" + tmp + "'");
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0)
        throw Error("cannot rename '" + tmp + "' to '" + path + "'");
}

}  // namespace fno
