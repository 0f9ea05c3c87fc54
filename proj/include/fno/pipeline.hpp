#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "fno/datagen.hpp"
#include "fno/metrics.hpp"
#include "fno/model.hpp"
#include "fno/optim.hpp"

namespace fno {

enum class SplitMode { Temporal, Random };
enum class EvalSpace { Rdf, Alpha };

struct TrainConfig {
    int epochs = 100;
    int batch_size = 32;
    double split_fraction = 0.9;  // train share
    SplitMode split_mode = SplitMode::Random;
    std::uint64_t seed = 0;
    OptimConfig optim;
    std::string loss_log_path;  // empty: no log file

    void validate() const;
};

struct TrainHistory {
    std::vector<double> train_loss;  // per-epoch mean over samples
    std::vector<double> val_loss;    // computed once per epoch, after its last step
    std::vector<double> seconds;     // wall clock per epoch
};

/// Disjoint, exhaustive split. Temporal mode orders samples by the time
/// channel and sends the earliest fraction to train; random mode shuffles
/// with the config seed. Throws DataError when a partition would be empty.
std::pair<Dataset, Dataset> split_dataset(const Dataset& dataset, const TrainConfig& config);

/// Full training loop: per epoch a seeded reshuffle, minibatch
/// loss_and_grad, one optimizer step per batch, then the validation loss.
/// Deterministic for a fixed seed. Throws DivergenceError (with epoch and
/// batch) when the loss stops being finite.
TrainHistory train(FnoModel& model, const Dataset& dataset, const TrainConfig& config);

/// Metrics over the whole dataset in the requested space (alpha space
/// binarizes prediction and truth), plus per-time-value slices.
MetricsReport evaluate(const FnoModel& model, const Dataset& dataset, EvalSpace space);

struct LatencyStats {
    double min_ms = 0.0;
    double median_ms = 0.0;
    double p95_ms = 0.0;
    int iters = 0;
    std::int64_t parameter_count = 0;
};

/// Wall-clock per-call statistics of forward on batch size 1 at the given
/// grid; warm-up runs excluded.
LatencyStats bench_inference(const FnoModel& model, const Grid2D& grid, int iters);

}  // namespace fno
