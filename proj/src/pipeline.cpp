#include "fno/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>

#include "fno/rng.hpp"

namespace fno {

namespace {

Dataset subset(const Dataset& src, const std::vector<std::int64_t>& ids) {
    Dataset out;
    out.n = static_cast<std::int64_t>(ids.size());
    out.grid = src.grid;
    out.epsilon = src.epsilon;
    out.provenance = src.provenance;
    const std::size_t plane = src.plane();
    out.inputs.resize(static_cast<std::size_t>(out.n) * 2 * plane);
    out.targets.resize(static_cast<std::size_t>(out.n) * plane);
    for (std::size_t i = 0; i < ids.size(); ++i) {
        const std::int64_t s = ids[i];
        std::copy_n(src.input_channel(s, 0), 2 * plane,
                    out.inputs.data() + i * 2 * plane);
        std::copy_n(src.target(s), plane, out.targets.data() + i * plane);
    }
    return out;
}

void gather_batch(const Dataset& ds, const std::vector<std::int64_t>& ids, std::size_t begin,
                  std::size_t end, FieldBatch& inputs, FieldBatch& targets) {
    const int count = static_cast<int>(end - begin);
    const std::size_t plane = ds.plane();
    inputs = FieldBatch(count, 2, ds.grid);
    targets = FieldBatch(count, 1, ds.grid);
    for (int i = 0; i < count; ++i) {
        const std::int64_t s = ids[begin + static_cast<std::size_t>(i)];
        std::copy_n(ds.input_channel(s, 0), 2 * plane, inputs.channel(i, 0));
        std::copy_n(ds.target(s), plane, targets.channel(i, 0));
    }
}

double dataset_loss(const FnoModel& model, const Dataset& ds, int batch_size) {
    double total = 0.0;
    std::vector<std::int64_t> ids(static_cast<std::size_t>(ds.n));
    std::iota(ids.begin(), ids.end(), 0);
    for (std::size_t begin = 0; begin < ids.size(); begin += static_cast<std::size_t>(batch_size)) {
        const std::size_t end = std::min(ids.size(), begin + static_cast<std::size_t>(batch_size));
        FieldBatch inputs, targets;
        gather_batch(ds, ids, begin, end, inputs, targets);
        total += loss_value(model, inputs, targets) * static_cast<double>(end - begin);
    }
    return total / static_cast<double>(ds.n);
}

}  // namespace

void TrainConfig::validate() const {
    if (epochs < 1) throw ValueError("TrainConfig: epochs must be >= 1");
    if (batch_size < 1) throw ValueError("TrainConfig: batch_size must be >= 1");
    if (!(split_fraction > 0.0 && split_fraction < 1.0))
        throw ValueError("TrainConfig: split_fraction must lie in (0, 1)");
    optim.validate();
}

std::pair<Dataset, Dataset> split_dataset(const Dataset& dataset, const TrainConfig& config) {
    config.validate();
    if (dataset.n < 2) throw DataError("split_dataset: need at least 2 samples");
    std::vector<std::int64_t> ids(static_cast<std::size_t>(dataset.n));
    std::iota(ids.begin(), ids.end(), 0);
    if (config.split_mode == SplitMode::Temporal) {
        std::stable_sort(ids.begin(), ids.end(), [&](std::int64_t a, std::int64_t b) {
            return dataset.time_of(a) < dataset.time_of(b);
        });
    } else {
        Rng rng(config.seed);
        deterministic_shuffle(ids, rng);
    }
    const std::int64_t train_count =
        std::llround(static_cast<double>(dataset.n) * config.split_fraction);
    if (train_count < 1 || train_count >= dataset.n)
        throw DataError("split_dataset: fraction " + std::to_string(config.split_fraction) +
                        " leaves an empty partition for n = " + std::to_string(dataset.n));
    const std::vector<std::int64_t> train_ids(ids.begin(), ids.begin() + train_count);
    const std::vector<std::int64_t> val_ids(ids.begin() + train_count, ids.end());
    return {subset(dataset, train_ids), subset(dataset, val_ids)};
}

TrainHistory train(FnoModel& model, const Dataset& dataset, const TrainConfig& config) {
    config.validate();
    if (!(dataset.grid.height >= 2 * model.config.k_x && dataset.grid.width >= 2 * model.config.k_y))
        throw ModeRangeError("train: dataset grid too small for the model's modes");
    auto [train_set, val_set] = split_dataset(dataset, config);

    std::ofstream log;
    if (!config.loss_log_path.empty()) {
        log.open(config.loss_log_path, std::ios::trunc);
        if (!log) throw Error("cannot open loss log '" + config.loss_log_path + "'");
        log.precision(17);
    }

    AdamWState state = AdamWState::zeros_like(model);
    Rng shuffle_rng(config.seed);
    std::vector<std::int64_t> order(static_cast<std::size_t>(train_set.n));
    TrainHistory history;

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        const auto t_start = std::chrono::steady_clock::now();
        std::iota(order.begin(), order.end(), 0);
        deterministic_shuffle(order, shuffle_rng);

        double epoch_loss = 0.0;
        int batch_index = 0;
        for (std::size_t begin = 0; begin < order.size();
             begin += static_cast<std::size_t>(config.batch_size), ++batch_index) {
            const std::size_t end =
                std::min(order.size(), begin + static_cast<std::size_t>(config.batch_size));
            FieldBatch inputs, targets;
            gather_batch(train_set, order, begin, end, inputs, targets);
            auto [loss, grads] = loss_and_grad(model, inputs, targets);
            if (!std::isfinite(loss))
                throw DivergenceError("training diverged at epoch " + std::to_string(epoch) +
                                      ", batch " + std::to_string(batch_index));
            epoch_loss += loss * static_cast<double>(end - begin);
            adamw_step(model, grads, state, config.optim);
        }
        epoch_loss /= static_cast<double>(train_set.n);
        const double vloss = dataset_loss(model, val_set, config.batch_size);
        if (!std::isfinite(vloss))
            throw DivergenceError("validation loss non-finite at epoch " + std::to_string(epoch));
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
        history.train_loss.push_back(epoch_loss);
        history.val_loss.push_back(vloss);
        history.seconds.push_back(secs);
        if (log.is_open()) {
            log << epoch << " " << epoch_loss << " " << vloss << " " << secs << "\n";
            log.flush();
        }
    }
    return history;
}

MetricsReport evaluate(const FnoModel& model, const Dataset& dataset, EvalSpace space) {
    if (dataset.n < 1) throw DataError("evaluate: empty dataset");
    const std::size_t plane = dataset.plane();
    std::vector<double> pred_all(static_cast<std::size_t>(dataset.n) * plane);
    std::vector<double> truth_all(static_cast<std::size_t>(dataset.n) * plane);

    std::vector<std::int64_t> ids(static_cast<std::size_t>(dataset.n));
    std::iota(ids.begin(), ids.end(), 0);
    constexpr std::size_t kChunk = 32;
    for (std::size_t begin = 0; begin < ids.size(); begin += kChunk) {
        const std::size_t end = std::min(ids.size(), begin + kChunk);
        FieldBatch inputs, targets;
        gather_batch(dataset, ids, begin, end, inputs, targets);
        const FieldBatch pred = forward(model, inputs);
        for (std::size_t i = begin; i < end; ++i) {
            std::copy_n(pred.channel(static_cast<int>(i - begin), 0), plane,
                        pred_all.data() + i * plane);
            std::copy_n(targets.channel(static_cast<int>(i - begin), 0), plane,
                        truth_all.data() + i * plane);
        }
    }

    if (space == EvalSpace::Alpha) {
        // Binary volume fractions: liquid where the RDF is negative.
        for (double& v : pred_all) v = v < 0.0 ? 1.0 : 0.0;
        for (double& v : truth_all) v = v < 0.0 ? 1.0 : 0.0;
    }

    MetricsReport report = compute_metrics(pred_all, truth_all);

    std::map<double, std::vector<std::int64_t>> by_time;
    for (std::int64_t s = 0; s < dataset.n; ++s) by_time[dataset.time_of(s)].push_back(s);
    if (by_time.size() > 1) {
        for (const auto& [time, samples] : by_time) {
            std::vector<double> p, t;
            p.reserve(samples.size() * plane);
            t.reserve(samples.size() * plane);
            for (std::int64_t s : samples) {
                const double* pp = pred_all.data() + static_cast<std::size_t>(s) * plane;
                const double* tp = truth_all.data() + static_cast<std::size_t>(s) * plane;
                p.insert(p.end(), pp, pp + plane);
                t.insert(t.end(), tp, tp + plane);
            }
            const MetricsReport slice = compute_metrics(p, t);
            report.per_time.push_back({time, slice.mse, slice.mae, slice.r2, slice.l2_error,
                                       slice.relative_error});
        }
    }
    return report;
}

LatencyStats bench_inference(const FnoModel& model, const Grid2D& grid, int iters) {
    if (iters < 10) throw ValueError("bench_inference: iters must be >= 10");
    grid.validate();
    FieldBatch input(1, model.config.c_in, grid);
    Rng rng(12345);
    for (double& v : input.values) v = rng.uniform(-1.0, 1.0);

    for (int warm = 0; warm < 3; ++warm) (void)forward(model, input);

    std::vector<double> times_ms;
    times_ms.reserve(static_cast<std::size_t>(iters));
    for (int i = 0; i < iters; ++i) {
        const auto t0 = std::chrono::steady_clock::now();
        const FieldBatch out = forward(model, input);
        const auto t1 = std::chrono::steady_clock::now();
        times_ms.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
        if (out.values.empty()) throw Error("bench_inference: empty forward output");
    }
    std::sort(times_ms.begin(), times_ms.end());
    LatencyStats stats;
    stats.iters = iters;
    stats.parameter_count = model.parameter_count();
    stats.min_ms = times_ms.front();
    stats.median_ms = times_ms[times_ms.size() / 2];
    stats.p95_ms = times_ms[std::min(times_ms.size() - 1,
                                     static_cast<std::size_t>(std::ceil(0.95 * times_ms.size())) - 1)];
    return stats;
}

}  // namespace fno
