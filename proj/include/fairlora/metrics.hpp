#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "fairlora/model.hpp"

namespace fairlora {

// One evaluation run: predictions vs labels, plus the grouping the fairness
// battery is computed over and (optionally) sensitive attribute ids.
struct EvalBundle {
    std::vector<int> predictions;
    std::vector<int> labels;
    std::vector<int> groups;
    std::vector<int> sensitive;                // empty = not available
    std::optional<std::size_t> num_classes;    // declared class count; default: observed
};

EvalBundle make_bundle(std::vector<int> predictions, std::vector<int> labels);
void validate_bundle(const EvalBundle& bundle);

enum class Grouping { kByClass, kBySensitive };

struct GroupScores {
    std::map<int, double> f1;
    std::map<int, double> recall;
    std::vector<int> zero_denominator_groups;  // F1 forced to 0 by convention
};

// By-class: one-vs-rest per class label over the whole bundle.
// By-sensitive: macro F1/recall within each subgroup of bundle.groups.
GroupScores per_group_f1_recall(const EvalBundle& bundle, Grouping grouping);

struct MetricsReport {
    double accuracy = 0.0;
    std::map<int, double> f1_by_group;
    std::map<int, double> recall_by_group;
    std::vector<int> f1_zero_denominator_groups;
    double f1_min = 0.0;
    double f1_max = 0.0;
    double recall_min = 0.0;
    double delta_f1 = 0.0;
    std::map<std::pair<int, int>, double> eod_pairwise;
    std::map<int, double> eod_one_vs_all;
    std::optional<double> eod_max;
    std::optional<double> sensitive_accuracy;
    std::optional<double> loss_variance_across_groups;
    std::string loss_variance_divisor;  // "population" or "sample", when variance present
};

// The full battery. EOD fields are filled only when sensitive ids exist; for
// multi-class targets each EOD is the maximum over per-class (one-vs-rest
// positive) values, skipping classes where a rate is undefined.
MetricsReport summary(const EvalBundle& bundle, Grouping grouping = Grouping::kByClass);

// |P(Yhat=c | Y=c, S=s1) - P(Yhat=c | Y=c, S=s2)| for positive class c.
// Rejects when either group has no positive-labeled sample.
double eod_pair(const EvalBundle& bundle, int positive_class, int s1, int s2);

// One-vs-all variant: s_i against the pooled complement.
double eod_one_vs_all(const EvalBundle& bundle, int positive_class, int s_i);

// max_i eod_one_vs_all(s_i).
double eod_max(const EvalBundle& bundle, int positive_class);

enum class VarianceDivisor { kPopulation, kSample };

// Variance of the per-group mean losses; population divisor by default.
double group_loss_variance(const std::vector<double>& per_group_losses,
                           VarianceDivisor divisor = VarianceDivisor::kPopulation);

struct SensitiveProbeConfig {
    double train_fraction = 0.5;
    std::size_t iterations = 400;
    double learning_rate = 0.5;
};

// Linear-probe leakage measurement: fits a multinomial logistic regression on
// the frozen penultimate features to predict the sensitive id, returns the
// held-out probe accuracy. Absent (nullopt) when no sensitive ids are given.
std::optional<double> sensitive_accuracy(const MlpClassifier& model, const Matrix& features,
                                         const std::vector<int>& sensitive, SeededRng& rng,
                                         const SensitiveProbeConfig& config = {});

// Flat key-value serialization with stable field names.
std::vector<std::pair<std::string, std::string>> to_kv_rows(const MetricsReport& report);

}  // namespace fairlora
