#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "fno/datagen.hpp"
#include "fno/errors.hpp"
#include "fno/interface.hpp"
#include "fno/model.hpp"
#include "fno/pipeline.hpp"
#include "fno/rng.hpp"

namespace {

using nlohmann::json;

std::uint64_t file_fnv1a64(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw fno::Error("cannot open '" + path + "' for checksumming");
    std::uint64_t hash = 1469598103934665603ull;
    char buf[1 << 16];
    while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
        const std::streamsize got = in.gcount();
        for (std::streamsize i = 0; i < got; ++i) {
            hash ^= static_cast<unsigned char>(buf[i]);
            hash *= 1099511628211ull;
        }
        if (got < static_cast<std::streamsize>(sizeof(buf))) break;
    }
    return hash;
}

std::string iso_timestamp() {
    const std::time_t now = std::time(nullptr);
    char buf[32];
    std::tm tm_utc{};
    gmtime_r(&now, &tm_utc);
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
    return buf;
}

char hex_digit(std::uint64_t v) { return "0123456789abcdef"[v & 0xf]; }

std::string hex64(std::uint64_t v) {
    std::string s = "0x";
    for (int shift = 60; shift >= 0; shift -= 4) s.push_back(hex_digit(v >> shift));
    return s;
}

/// Written atomically next to every artifact the command produced.
void write_manifest(const std::string& command, const json& flags, const json& seeds,
                    const std::vector<std::string>& inputs,
                    const std::vector<std::string>& outputs) {
    json m;
    m["command"] = command;
    m["flags"] = flags;
    m["seeds"] = seeds;
    m["inputs"] = inputs;
    json outs = json::array();
    for (const std::string& path : outputs) {
        outs.push_back({{"path", path}, {"fnv1a64", hex64(file_fnv1a64(path))}});
    }
    m["outputs"] = outs;
    m["timestamp"] = iso_timestamp();
    for (const std::string& path : outputs) {
        const std::string mpath = path + ".manifest.json";
        const std::string tmp = mpath + ".tmp";
        {
            std::ofstream out(tmp);
            if (!out) throw fno::Error("cannot open '" + tmp + "' for writing");
            out << m.dump(2) << "\n";
        }
        if (std::rename(tmp.c_str(), mpath.c_str()) != 0)
            throw fno::Error("cannot rename '" + tmp + "' to '" + mpath + "'");
    }
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    // splitmix64 finalizer over the pair
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

struct FlowArgs {
    std::string kind = "mixed";
    double omega = 0.8;
    double period = 2.0;
    double amp = 18.0;
    double gamma = 0.5;
    double speed = 12.0;
};

FlowArgs parse_flow(const std::string& text) {
    FlowArgs f;
    const std::size_t colon = text.find(':');
    f.kind = text.substr(0, colon);
    if (f.kind != "rotation" && f.kind != "vortex" && f.kind != "stagnation" && f.kind != "fall" &&
        f.kind != "mixed")
        throw fno::ValueError("unknown flow kind '" + f.kind +
                              "' (expected rotation|vortex|stagnation|fall|mixed)");
    if (colon == std::string::npos) return f;
    std::string rest = text.substr(colon + 1);
    std::size_t pos = 0;
    while (pos < rest.size()) {
        const std::size_t comma = rest.find(',', pos);
        const std::string item = rest.substr(pos, comma == std::string::npos ? std::string::npos
                                                                             : comma - pos);
        const std::size_t eq = item.find('=');
        if (eq == std::string::npos)
            throw fno::ValueError("flow parameter '" + item + "' is not key=value");
        const std::string key = item.substr(0, eq);
        const double value = std::stod(item.substr(eq + 1));
        if (key == "omega")
            f.omega = value;
        else if (key == "period")
            f.period = value;
        else if (key == "amp")
            f.amp = value;
        else if (key == "gamma")
            f.gamma = value;
        else if (key == "speed")
            f.speed = value;
        else
            throw fno::ValueError("unknown flow parameter '" + key + "'");
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    return f;
}

fno::FlowSpec make_flow(const FlowArgs& args, const fno::Grid2D& grid, fno::Rng* rng) {
    if (args.kind == "rotation") return fno::FlowSpec::rigid_rotation(args.omega, grid);
    if (args.kind == "vortex") return fno::FlowSpec::single_vortex(args.period, args.amp, grid);
    if (args.kind == "stagnation") return fno::FlowSpec::stagnation_collapse(args.gamma, grid);
    if (args.kind == "fall") return fno::FlowSpec::uniform_fall(args.speed, grid);
    // mixed: a per-simulation draw between a vortex and a fall
    if (!rng) throw fno::ValueError("flow 'mixed' needs a seeded generator");
    if (rng->uniform() < 0.5) {
        return fno::FlowSpec::single_vortex(rng->uniform(1.5, 3.0), rng->uniform(12.0, 24.0), grid);
    }
    return fno::FlowSpec::uniform_fall(rng->uniform(8.0, 18.0), grid);
}

// Time step from the flow's peak speed at CFL 0.5, probed over the run.
fno::SimConfig sim_config_for(const fno::Grid2D& grid, const fno::FlowSpec& flow, double t_end,
                              const std::vector<double>& snapshots) {
    double vmax = 0.0;
    for (int probe = 0; probe <= 8; ++probe) {
        const double t = t_end * probe / 8.0;
        for (int i = 0; i < grid.height; ++i) {
            const double y = (i + 0.5) * grid.dy;
            for (int j = 0; j < grid.width; ++j) {
                const double x = (j + 0.5) * grid.dx;
                const fno::Velocity v = fno::velocity_at(flow, x, y, t);
                vmax = std::max(vmax, std::max(std::abs(v.u), std::abs(v.v)));
            }
        }
    }
    fno::SimConfig config;
    config.grid = grid;
    if (vmax <= 0.0) {
        config.dt = t_end > 0.0 ? t_end : 1.0;
        config.n_steps = t_end > 0.0 ? 1 : 0;
    } else {
        const double dt_cfl = 0.5 * std::min(grid.dx, grid.dy) / vmax;
        config.n_steps = std::max(1, static_cast<int>(std::ceil(t_end / dt_cfl)));
        config.dt = t_end / config.n_steps;
    }
    config.snapshot_times = snapshots;
    return config;
}

int run_gen(const std::string& case_name, int height, int width, std::int64_t count,
            std::vector<double> snapshots, const std::string& flow_text, double epsilon,
            std::uint64_t seed, double duration, const std::string& out_path) {
    const fno::Grid2D grid{height, width, 1.0, 1.0};
    const FlowArgs flow_args = parse_flow(flow_text);
    fno::Dataset dataset;

    if (case_name == "forecast") {
        if (snapshots.empty()) {
            for (std::int64_t i = 0; i < count; ++i)
                snapshots.push_back(duration * static_cast<double>(i) /
                                    static_cast<double>(count - 1));
        }
        fno::Rng rng(seed);
        const FlowArgs args = flow_args.kind == "mixed" ? FlowArgs{"stagnation"} : flow_args;
        const fno::FlowSpec flow = make_flow(args, grid, &rng);
        const fno::InitSpec init = fno::InitSpec::column(
            0.5 * width, 0.5 * height, 0.25 * width, 0.5 * height);
        const fno::SimConfig config = sim_config_for(grid, flow, duration, snapshots);
        const auto frames = fno::simulate(init, flow, config);
        dataset = fno::build_forecast_dataset(frames, epsilon,
                                              "gen forecast seed=" + std::to_string(seed));
    } else if (case_name == "blobs") {
        if (snapshots.empty()) snapshots = {0.0, 0.25, 0.5};
        if (snapshots.size() != 3)
            throw fno::ValueError("blobs case needs exactly 3 snapshot times");
        const double t_end = *std::max_element(snapshots.begin(), snapshots.end());
        std::vector<std::vector<fno::Frame>> sims;
        sims.reserve(static_cast<std::size_t>(count));
        for (std::int64_t i = 0; i < count; ++i) {
            fno::Rng rng(mix_seed(seed, static_cast<std::uint64_t>(i)));
            const fno::FlowSpec flow = make_flow(flow_args, grid, &rng);
            const fno::InitSpec init = fno::InitSpec::random_blobs(
                1, 3, 0.09 * std::min(width, height), 0.19 * std::min(width, height), 3.0,
                mix_seed(seed, static_cast<std::uint64_t>(i) | (1ull << 62)));
            const fno::SimConfig config = sim_config_for(grid, flow, t_end, snapshots);
            sims.push_back(fno::simulate(init, flow, config));
        }
        dataset = fno::build_pairs_dataset(sims, epsilon,
                                           "gen blobs seed=" + std::to_string(seed));
    } else {
        throw fno::ValueError("unknown case '" + case_name + "' (expected forecast|blobs)");
    }

    fno::write_dataset(dataset, out_path);
    json flags{{"case", case_name},       {"grid", {height, width}}, {"n", count},
               {"snapshots", snapshots},  {"flow", flow_text},       {"epsilon", epsilon},
               {"duration", duration},    {"out", out_path}};
    write_manifest("gen", flags, json{{"seed", seed}}, {}, {out_path});
    std::cout << "wrote " << dataset.n << " samples on " << height << "x" << width << " to "
              << out_path << "\n";
    return 0;
}

int run_train(const std::string& data_path, int epochs, double lr, double wd, int batch,
              double split, const std::string& split_mode, int kx, int ky, int width, int layers,
              const std::string& norm, std::uint64_t seed, const std::string& out_path,
              const std::string& log_path) {
    const fno::Dataset dataset = fno::read_dataset(data_path);
    fno::FnoConfig config;
    config.c_in = 2;
    config.c_out = 1;
    config.d_v = width;
    config.k_x = kx;
    config.k_y = ky;
    config.n_layers = layers;
    config.use_norm = (norm == "on");
    fno::FnoModel model = fno::init_model(config, seed);

    fno::TrainConfig tc;
    tc.epochs = epochs;
    tc.batch_size = batch;
    tc.split_fraction = split;
    tc.split_mode = split_mode == "temporal" ? fno::SplitMode::Temporal : fno::SplitMode::Random;
    tc.seed = seed;
    tc.optim.lr = lr;
    tc.optim.weight_decay = wd;
    tc.loss_log_path = log_path;

    const fno::TrainHistory history = fno::train(model, dataset, tc);
    fno::save_model(model, out_path);

    json flags{{"data", data_path}, {"epochs", epochs},   {"lr", lr},
               {"wd", wd},          {"batch", batch},     {"split", split},
               {"split-mode", split_mode}, {"modes", {kx, ky}}, {"width", width},
               {"layers", layers},  {"norm", norm},       {"out", out_path},
               {"log", log_path}};
    write_manifest("train", flags, json{{"seed", seed}}, {data_path}, {out_path});
    std::cout << "trained " << epochs << " epochs; final train loss "
              << history.train_loss.back() << ", val loss " << history.val_loss.back()
              << "; saved " << out_path << "\n";
    return 0;
}

int run_eval(const std::string& model_path, const std::string& data_path,
             const std::string& space, const std::string& report_path) {
    const fno::FnoModel model = fno::load_model(model_path);
    const fno::Dataset dataset = fno::read_dataset(data_path);
    std::string text;
    if (space == "rdf" || space == "alpha") {
        const fno::MetricsReport report = fno::evaluate(
            model, dataset, space == "rdf" ? fno::EvalSpace::Rdf : fno::EvalSpace::Alpha);
        text = report.to_text();
    } else {  // both spaces, keys prefixed
        const fno::MetricsReport rdf = fno::evaluate(model, dataset, fno::EvalSpace::Rdf);
        const fno::MetricsReport alpha = fno::evaluate(model, dataset, fno::EvalSpace::Alpha);
        std::istringstream rdf_lines(rdf.to_text()), alpha_lines(alpha.to_text());
        std::ostringstream out;
        std::string line;
        while (std::getline(rdf_lines, line)) out << "rdf." << line << "\n";
        while (std::getline(alpha_lines, line)) out << "alpha." << line << "\n";
        text = out.str();
    }
    {
        const std::string tmp = report_path + ".tmp";
        std::ofstream out(tmp);
        if (!out) throw fno::Error("cannot open '" + tmp + "' for writing");
        out << text;
        out.close();
        if (std::rename(tmp.c_str(), report_path.c_str()) != 0)
            throw fno::Error("cannot rename '" + tmp + "' to '" + report_path + "'");
    }
    std::cout << text;
    json flags{{"model", model_path}, {"data", data_path}, {"space", space},
               {"report", report_path}};
    write_manifest("eval", flags, json::object(), {model_path, data_path}, {report_path});
    return 0;
}

int run_predict(const std::string& model_path, const std::string& input_path, double t,
                double epsilon, const std::string& out_path) {
    const fno::FnoModel model = fno::load_model(model_path);
    const fno::ScalarField2D zeta = fno::import_grid_text(input_path, epsilon);
    fno::FieldBatch batch(1, 2, zeta.grid);
    std::copy(zeta.values.begin(), zeta.values.end(), batch.channel(0, 0));
    std::fill_n(batch.channel(0, 1), zeta.grid.cells(), t);
    const fno::FieldBatch pred = fno::forward(model, batch);
    fno::ScalarField2D pred_zeta(zeta.grid);
    std::copy_n(pred.channel(0, 0), zeta.grid.cells(), pred_zeta.values.begin());
    const fno::ScalarField2D alpha =
        fno::rdf_to_alpha(pred_zeta, fno::RdfParams{epsilon, 1e-6});
    fno::write_grid_text(alpha, out_path);
    json flags{{"model", model_path}, {"input", input_path}, {"t", t},
               {"epsilon", epsilon},  {"out", out_path}};
    write_manifest("predict", flags, json::object(), {model_path, input_path}, {out_path});
    std::cout << "wrote prediction at t=" << t << " to " << out_path << "\n";
    return 0;
}

int run_bench(const std::string& model_path, int height, int width, int iters) {
    const fno::FnoModel model = fno::load_model(model_path);
    const fno::Grid2D grid{height, width, 1.0, 1.0};
    const fno::LatencyStats stats = fno::bench_inference(model, grid, iters);
    std::cout << "parameters = " << stats.parameter_count << "\n";
    std::cout << "iters = " << stats.iters << "\n";
    std::cout << "min_ms = " << stats.min_ms << "\n";
    std::cout << "median_ms = " << stats.median_ms << "\n";
    std::cout << "p95_ms = " << stats.p95_ms << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"2D Fourier neural operator pipeline for liquid-vapour interface dynamics"};
    app.require_subcommand(1);

    // gen
    auto* gen = app.add_subcommand("gen", "Generate a dataset (.fnds)");
    std::string gen_case = "blobs";
    std::vector<int> gen_grid{64, 64};
    std::int64_t gen_n = 100;
    std::vector<double> gen_snapshots;
    std::string gen_flow = "mixed";
    double gen_epsilon = 1.0;
    std::uint64_t gen_seed = 0;
    double gen_duration = 1.0;
    std::string gen_out;
    gen->add_option("--case", gen_case, "forecast|blobs")->check(CLI::IsMember({"forecast", "blobs"}));
    gen->add_option("--grid", gen_grid, "grid H W")->expected(2);
    gen->add_option("--n", gen_n, "frame count (forecast) or simulation count (blobs)");
    gen->add_option("--snapshots", gen_snapshots, "snapshot times (s)");
    gen->add_option("--flow", gen_flow,
                    "flow spec kind[:k=v,...]; kinds rotation|vortex|stagnation|fall|mixed");
    gen->add_option("--epsilon", gen_epsilon, "RDF smoothing length");
    gen->add_option("--seed", gen_seed, "RNG seed");
    gen->add_option("--duration", gen_duration, "total simulated time for the forecast case (s)");
    gen->add_option("--out", gen_out, "output .fnds path")->required();

    // train
    auto* train_cmd = app.add_subcommand("train", "Train a model on a dataset");
    std::string train_data, train_out, train_log, train_split_mode = "random", train_norm = "on";
    int train_epochs = 100, train_batch = 32, train_width = 96, train_layers = 5;
    std::vector<int> train_modes{20, 20};
    double train_lr = 5e-4, train_wd = 1e-4, train_split = 0.9;
    std::uint64_t train_seed = 0;
    train_cmd->add_option("--data", train_data, "input .fnds path")->required();
    train_cmd->add_option("--epochs", train_epochs, "training epochs");
    train_cmd->add_option("--lr", train_lr, "learning rate");
    train_cmd->add_option("--wd", train_wd, "weight decay");
    train_cmd->add_option("--batch", train_batch, "batch size");
    train_cmd->add_option("--split", train_split, "train fraction");
    train_cmd->add_option("--split-mode", train_split_mode, "temporal|random")
        ->check(CLI::IsMember({"temporal", "random"}));
    train_cmd->add_option("--modes", train_modes, "retained modes KX KY")->expected(2);
    train_cmd->add_option("--width", train_width, "hidden channels");
    train_cmd->add_option("--layers", train_layers, "spectral layers");
    train_cmd->add_option("--norm", train_norm, "on|off")->check(CLI::IsMember({"on", "off"}));
    train_cmd->add_option("--seed", train_seed, "RNG seed");
    train_cmd->add_option("--out", train_out, "output .fnck path")->required();
    train_cmd->add_option("--log", train_log, "loss log path");

    // eval
    auto* eval_cmd = app.add_subcommand("eval", "Evaluate a model on a dataset");
    std::string eval_model, eval_data, eval_space = "both", eval_report;
    eval_cmd->add_option("--model", eval_model, "model .fnck path")->required();
    eval_cmd->add_option("--data", eval_data, "dataset .fnds path")->required();
    eval_cmd->add_option("--space", eval_space, "rdf|alpha|both")
        ->check(CLI::IsMember({"rdf", "alpha", "both"}));
    eval_cmd->add_option("--report", eval_report, "report output path")->required();

    // predict
    auto* predict_cmd = app.add_subcommand("predict", "Predict from a text-grid volume fraction");
    std::string pred_model, pred_input, pred_out;
    double pred_t = 0.5, pred_epsilon = 1.0;
    predict_cmd->add_option("--model", pred_model, "model .fnck path")->required();
    predict_cmd->add_option("--input", pred_input, "input text grid of volume fractions")->required();
    predict_cmd->add_option("--t", pred_t, "prediction time channel value");
    predict_cmd->add_option("--epsilon", pred_epsilon, "RDF smoothing length");
    predict_cmd->add_option("--out", pred_out, "output text grid path")->required();

    // bench
    auto* bench_cmd = app.add_subcommand("bench", "Measure forward latency");
    std::string bench_model;
    std::vector<int> bench_grid{84, 84};
    int bench_iters = 100;
    bench_cmd->add_option("--model", bench_model, "model .fnck path")->required();
    bench_cmd->add_option("--grid", bench_grid, "grid H W")->expected(2);
    bench_cmd->add_option("--iters", bench_iters, "timed iterations (>= 10)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        if (gen->parsed())
            return run_gen(gen_case, gen_grid[0], gen_grid[1], gen_n, gen_snapshots, gen_flow,
                           gen_epsilon, gen_seed, gen_duration, gen_out);
        if (train_cmd->parsed())
            return run_train(train_data, train_epochs, train_lr, train_wd, train_batch, train_split,
                             train_split_mode, train_modes[0], train_modes[1], train_width,
                             train_layers, train_norm, train_seed, train_out, train_log);
        if (eval_cmd->parsed()) return run_eval(eval_model, eval_data, eval_space, eval_report);
        if (predict_cmd->parsed())
            return run_predict(pred_model, pred_input, pred_t, pred_epsilon, pred_out);
        if (bench_cmd->parsed())
            return run_bench(bench_model, bench_grid[0], bench_grid[1], bench_iters);
    } catch (const fno::DivergenceError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const fno::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}
