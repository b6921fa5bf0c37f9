#pragma once

#include <string>
#include <vector>

#include "fairlora/config.hpp"
#include "fairlora/data.hpp"
#include "fairlora/metrics.hpp"
#include "fairlora/model.hpp"

namespace fairlora {

struct EpochTrace {
    std::size_t epoch = 0;      // 0 is the pre-training state
    double train_loss = 0.0;    // mean overall cross-entropy over the epoch's batches
    double penalty = 0.0;       // mean variance penalty (0 in plain modes)
    double eval_accuracy = 0.0;
    double eval_group_loss_variance = 0.0;  // 0 when fewer than 2 groups
};

struct RunArtifact {
    TrainConfig config;
    MlpClassifier best_model;   // selection rule: best eval accuracy, ties earliest
    MlpClassifier final_model;  // state after the last epoch
    std::size_t best_epoch = 0;
    double best_eval_accuracy = 0.0;
    std::vector<EpochTrace> trace;
    MetricsReport final_metrics;  // battery of the best model on the eval split
};

// Full FFT training from random init on the pretraining task; returns the
// best-eval-accuracy model, the desk-scale theta_0.
RunArtifact pretrain(const TrainConfig& config, const Dataset& pretrain_dataset);

// SGD-with-momentum fine-tuning from a base model. LoRA modes attach rank-r
// adapters to every hidden weight; fair modes assemble the variance-penalized
// objective gradient from per-group backward passes.
RunArtifact finetune(const TrainConfig& config, const MlpClassifier& base,
                     const Dataset& dataset);

// The full metric battery plus eval group-loss variance and (when sensitive
// ids exist) the linear-probe sensitive accuracy.
MetricsReport evaluate(const MlpClassifier& model, const Dataset& dataset, GroupKey key,
                       std::uint64_t probe_seed = 0);

struct SweepCell {
    double lambda = 0.0;
    std::size_t rank = 0;
    std::vector<RunArtifact> runs;    // successful runs, one per finished seed
    std::vector<std::string> errors;  // failed seeds, recorded not fatal
};

struct SweepResult {
    std::vector<SweepCell> cells;  // grid order: lambda-major, then rank
};

SweepResult sweep(const SweepSpec& spec, const MlpClassifier& base, const Dataset& dataset);

}  // namespace fairlora
