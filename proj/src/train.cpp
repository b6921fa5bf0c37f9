#include "fairlora/train.hpp"

#include <cmath>
#include <numeric>

#include "fairlora/errors.hpp"
#include "fairlora/numeric_text.hpp"

namespace fairlora {

namespace {

std::vector<int> argmax_rows(const Matrix& logits) {
    std::vector<int> out(logits.rows);
    for (std::size_t i = 0; i < logits.rows; ++i) {
        std::size_t arg = 0;
        for (std::size_t j = 1; j < logits.cols; ++j) {
            if (logits.at(i, j) > logits.at(i, arg)) {
                arg = j;  // ties keep the lowest index
            }
        }
        out[i] = static_cast<int>(arg);
    }
    return out;
}

double eval_accuracy_only(const MlpClassifier& model, const Matrix& features,
                          const std::vector<int>& labels) {
    const std::vector<int> preds = argmax_rows(forward(model, features));
    std::size_t correct = 0;
    for (std::size_t i = 0; i < preds.size(); ++i) {
        if (preds[i] == labels[i]) {
            ++correct;
        }
    }
    return static_cast<double>(correct) / static_cast<double>(preds.size());
}

double eval_variance_only(const MlpClassifier& model, const Matrix& features,
                          const std::vector<int>& labels, const std::vector<int>& group_ids) {
    const CrossEntropy ce = cross_entropy(forward(model, features), labels);
    const auto parts = partition_by_group(group_ids);
    if (parts.size() < 2) {
        return 0.0;
    }
    std::vector<double> per_group;
    for (const auto& [g, indices] : parts) {
        double sum = 0.0;
        for (std::size_t i : indices) {
            sum += ce.per_sample[i];
        }
        per_group.push_back(sum / static_cast<double>(indices.size()));
    }
    return group_loss_variance(per_group);
}

struct SgdMomentum {
    double learning_rate;
    double momentum;
    std::map<std::string, Matrix> velocity;

    void step(MlpClassifier& model, const BatchGradients& grads) {
        for (const auto& [name, grad] : grads.tensors) {
            Matrix* tensor = mutable_tensor(model, name);
            auto [it, inserted] = velocity.try_emplace(name, grad.rows, grad.cols, 0.0);
            Matrix& v = it->second;
            for (std::size_t i = 0; i < v.data.size(); ++i) {
                v.data[i] = momentum * v.data[i] + grad.data[i];
                tensor->data[i] -= learning_rate * v.data[i];
            }
        }
    }
};

// Shared epoch loop for pretrain and finetune. The model arrives ready
// (adapters attached, mode set); this only runs updates and tracking.
RunArtifact run_training(MlpClassifier model, const TrainConfig& config,
                         const Dataset& train_set, const Dataset& eval_set) {
    const Matrix train_x = train_set.feature_matrix();
    const std::vector<int> train_y = train_set.labels();
    const std::vector<int> train_groups = train_set.group_ids(config.group_key);
    const Matrix eval_x = eval_set.feature_matrix();
    const std::vector<int> eval_y = eval_set.labels();
    const std::vector<int> eval_groups = eval_set.group_ids(config.group_key);

    SeededRng batch_rng(derive_seed(config.seed, "train/batches"));
    SgdMomentum optimizer{config.learning_rate, config.momentum, {}};

    RunArtifact artifact;
    artifact.config = config;

    // Epoch 0: the untouched starting point, eligible for selection.
    {
        EpochTrace row;
        row.epoch = 0;
        const CrossEntropy ce = cross_entropy(forward(model, train_x), train_y);
        row.train_loss = ce.mean_loss;
        if (config.fair) {
            const auto parts = partition_by_group(train_groups);
            std::map<int, double> per_group;
            for (const auto& [g, indices] : parts) {
                double sum = 0.0;
                for (std::size_t i : indices) {
                    sum += ce.per_sample[i];
                }
                per_group[g] = sum / static_cast<double>(indices.size());
            }
            row.penalty = objective(ce.mean_loss, per_group, config.lambda).penalty;
        }
        row.eval_accuracy = eval_accuracy_only(model, eval_x, eval_y);
        row.eval_group_loss_variance = eval_variance_only(model, eval_x, eval_y, eval_groups);
        artifact.trace.push_back(row);
        artifact.best_model = model;
        artifact.best_epoch = 0;
        artifact.best_eval_accuracy = row.eval_accuracy;
    }

    for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
        const auto batches = stratified_batches(train_set, config.batch_size, batch_rng,
                                                config.group_key, config.coverage_enabled());
        double loss_sum = 0.0;
        double penalty_sum = 0.0;
        for (const std::vector<std::size_t>& batch : batches) {
            Matrix bx(batch.size(), train_x.cols);
            std::vector<int> by(batch.size());
            std::vector<int> bg(batch.size());
            for (std::size_t i = 0; i < batch.size(); ++i) {
                for (std::size_t j = 0; j < train_x.cols; ++j) {
                    bx.at(i, j) = train_x.at(batch[i], j);
                }
                by[i] = train_y[batch[i]];
                bg[i] = train_groups[batch[i]];
            }
            std::vector<std::size_t> all(batch.size());
            std::iota(all.begin(), all.end(), std::size_t{0});

            BatchGradients overall = backward_subset(model, bx, by, all);
            if (!std::isfinite(overall.loss)) {
                throw numeric_error("training diverged: loss " +
                                    format_double(overall.loss) + " at epoch " +
                                    std::to_string(epoch));
            }
            loss_sum += overall.loss;

            BatchGradients step_grad;
            if (config.fair) {
                const auto parts = partition_by_group(bg);
                std::map<int, BatchGradients> group_grads;
                std::map<int, double> per_group_loss;
                for (const auto& [g, indices] : parts) {
                    BatchGradients gg = backward_subset(model, bx, by, indices);
                    per_group_loss[g] = gg.loss;
                    group_grads.emplace(g, std::move(gg));
                }
                const GroupLossReport report =
                    objective(overall.loss, per_group_loss, config.lambda);
                penalty_sum += report.penalty;
                step_grad = objective_gradient(overall, group_grads, per_group_loss,
                                               config.lambda);
            } else {
                step_grad = std::move(overall);
            }
            optimizer.step(model, step_grad);
        }

        EpochTrace row;
        row.epoch = epoch;
        row.train_loss = loss_sum / static_cast<double>(batches.size());
        row.penalty = penalty_sum / static_cast<double>(batches.size());
        row.eval_accuracy = eval_accuracy_only(model, eval_x, eval_y);
        row.eval_group_loss_variance = eval_variance_only(model, eval_x, eval_y, eval_groups);
        artifact.trace.push_back(row);
        if (row.eval_accuracy > artifact.best_eval_accuracy) {
            artifact.best_model = model;
            artifact.best_epoch = epoch;
            artifact.best_eval_accuracy = row.eval_accuracy;
        }
    }

    artifact.final_model = std::move(model);
    artifact.final_metrics = evaluate(artifact.best_model, eval_set, config.group_key,
                                      derive_seed(config.seed, "eval/probe"));
    return artifact;
}

}  // namespace

RunArtifact pretrain(const TrainConfig& config, const Dataset& pretrain_dataset) {
    if (config.mode != TrainMode::kFft || config.fair) {
        throw data_error("pretrain: config must be FFT mode with fair off");
    }
    validate_config(config);
    SeededRng split_rng(derive_seed(config.seed, "data/split"));
    const SplitResult splits = split(pretrain_dataset, config.train_fraction, split_rng);

    SeededRng init_rng(derive_seed(config.seed, "model/init"));
    MlpClassifier model = build_mlp(pretrain_dataset.feature_width(), config.hidden_widths,
                                    pretrain_dataset.num_classes(), init_rng);
    return run_training(std::move(model), config, splits.train, splits.eval);
}

RunArtifact finetune(const TrainConfig& config, const MlpClassifier& base,
                     const Dataset& dataset) {
    validate_config(config);
    if (base.input_width() != dataset.feature_width()) {
        throw data_error("finetune: base checkpoint expects feature width " +
                         std::to_string(base.input_width()) + ", dataset has " +
                         std::to_string(dataset.feature_width()));
    }
    if (dataset.num_classes() > base.num_classes()) {
        throw data_error("finetune: dataset has more classes than the base head");
    }
    SeededRng split_rng(derive_seed(config.seed, "data/split"));
    const SplitResult splits = split(dataset, config.train_fraction, split_rng);

    MlpClassifier model = base;
    if (config.mode == TrainMode::kLora) {
        if (model.mode == TrainMode::kLora) {
            throw data_error("finetune: base checkpoint already carries adapters");
        }
        SeededRng adapter_rng(derive_seed(config.seed, "adapter/init"));
        attach_adapters(model, config.rank, adapter_rng, config.init_std, config.lora_scale);
    } else {
        // FFT trains plain weights; adapters from a LoRA checkpoint fold in
        for (DenseLayer& layer : model.hidden) {
            if (layer.adapter) {
                layer.weight = merge(*layer.adapter);
                layer.adapter.reset();
            }
        }
        model.mode = TrainMode::kFft;
    }
    return run_training(std::move(model), config, splits.train, splits.eval);
}

MetricsReport evaluate(const MlpClassifier& model, const Dataset& dataset, GroupKey key,
                       std::uint64_t probe_seed) {
    if (dataset.size() == 0) {
        throw data_error("evaluate: empty dataset");
    }
    const Matrix features = dataset.feature_matrix();
    const std::vector<int> labels = dataset.labels();

    EvalBundle bundle;
    bundle.predictions = argmax_rows(forward(model, features));
    bundle.labels = labels;
    bundle.groups = dataset.group_ids(key);
    bundle.sensitive = dataset.sensitive_ids();

    const Grouping grouping = key == GroupKey::kClassLabel ? Grouping::kByClass
                                                           : Grouping::kBySensitive;
    MetricsReport report = summary(bundle, grouping);

    const CrossEntropy ce = cross_entropy(forward(model, features), labels);
    const auto parts = partition_by_group(bundle.groups);
    if (parts.size() >= 2) {
        std::vector<double> per_group;
        for (const auto& [g, indices] : parts) {
            double sum = 0.0;
            for (std::size_t i : indices) {
                sum += ce.per_sample[i];
            }
            per_group.push_back(sum / static_cast<double>(indices.size()));
        }
        report.loss_variance_across_groups = group_loss_variance(per_group);
        report.loss_variance_divisor = "population";
    }

    if (!bundle.sensitive.empty() && !model.hidden.empty()) {
        SeededRng probe_rng(probe_seed);
        report.sensitive_accuracy =
            sensitive_accuracy(model, features, bundle.sensitive, probe_rng);
    }
    return report;
}

SweepResult sweep(const SweepSpec& spec, const MlpClassifier& base, const Dataset& dataset) {
    SweepResult result;
    for (double lambda : spec.lambda_grid) {
        for (std::size_t rank : spec.rank_grid) {
            SweepCell cell;
            cell.lambda = lambda;
            cell.rank = rank;
            for (std::uint64_t seed : spec.seeds) {
                TrainConfig config = spec.base;
                config.lambda = lambda;
                config.rank = rank;
                config.seed = seed;
                try {
                    cell.runs.push_back(finetune(config, base, dataset));
                } catch (const std::exception& e) {
                    cell.errors.push_back("seed " + std::to_string(seed) + ": " + e.what());
                }
            }
            result.cells.push_back(std::move(cell));
        }
    }
    return result;
}

}  // namespace fairlora
