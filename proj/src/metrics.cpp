#include "fairlora/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "fairlora/errors.hpp"
#include "fairlora/numeric_text.hpp"

namespace fairlora {

EvalBundle make_bundle(std::vector<int> predictions, std::vector<int> labels) {
    EvalBundle bundle;
    bundle.predictions = std::move(predictions);
    bundle.labels = labels;
    bundle.groups = std::move(labels);
    return bundle;
}

void validate_bundle(const EvalBundle& bundle) {
    const std::size_t n = bundle.predictions.size();
    if (n == 0) {
        throw data_error("EvalBundle: empty bundle");
    }
    if (bundle.labels.size() != n || bundle.groups.size() != n) {
        throw data_error("EvalBundle: arrays must share one length");
    }
    if (!bundle.sensitive.empty() && bundle.sensitive.size() != n) {
        throw data_error("EvalBundle: sensitive ids must match sample count");
    }
    auto check_ids = [](const std::vector<int>& ids, const char* what) {
        for (int v : ids) {
            if (v < 0) {
                throw data_error(std::string("EvalBundle: negative ") + what + " id");
            }
        }
    };
    check_ids(bundle.predictions, "prediction");
    check_ids(bundle.labels, "label");
    check_ids(bundle.groups, "group");
    check_ids(bundle.sensitive, "sensitive");
}

namespace {

std::vector<int> observed_classes(const EvalBundle& bundle) {
    if (bundle.num_classes) {
        std::vector<int> classes(*bundle.num_classes);
        std::iota(classes.begin(), classes.end(), 0);
        return classes;
    }
    std::set<int> seen(bundle.labels.begin(), bundle.labels.end());
    seen.insert(bundle.predictions.begin(), bundle.predictions.end());
    return std::vector<int>(seen.begin(), seen.end());
}

struct F1Result {
    double f1 = 0.0;
    double recall = 0.0;
    bool zero_denominator = false;  // no predicted and no actual positives
};

F1Result f1_from_counts(std::size_t tp, std::size_t fp, std::size_t fn) {
    F1Result r;
    if (tp + fp == 0 && tp + fn == 0) {
        r.zero_denominator = true;
        return r;
    }
    const double precision = (tp + fp) > 0
        ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
    r.recall = (tp + fn) > 0
        ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
    r.f1 = (precision + r.recall) > 0.0
        ? 2.0 * precision * r.recall / (precision + r.recall) : 0.0;
    return r;
}

// One-vs-rest scores per class over the given sample indices.
GroupScores class_scores(const EvalBundle& bundle, const std::vector<std::size_t>& indices,
                         const std::vector<int>& classes) {
    GroupScores scores;
    for (int c : classes) {
        std::size_t tp = 0, fp = 0, fn = 0;
        for (std::size_t i : indices) {
            const bool actual = bundle.labels[i] == c;
            const bool predicted = bundle.predictions[i] == c;
            if (actual && predicted) {
                ++tp;
            } else if (!actual && predicted) {
                ++fp;
            } else if (actual && !predicted) {
                ++fn;
            }
        }
        const F1Result r = f1_from_counts(tp, fp, fn);
        scores.f1[c] = r.f1;
        scores.recall[c] = r.recall;
        if (r.zero_denominator) {
            scores.zero_denominator_groups.push_back(c);
        }
    }
    return scores;
}

std::vector<std::size_t> all_indices(std::size_t n) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    return idx;
}

struct PositiveCounts {
    std::size_t positives = 0;
    std::size_t hits = 0;  // positives predicted as the positive class
};

// Per-sensitive-group (positives, hits) for one positive class.
std::map<int, PositiveCounts> positive_counts(const EvalBundle& bundle, int positive_class) {
    std::map<int, PositiveCounts> counts;
    for (std::size_t i = 0; i < bundle.labels.size(); ++i) {
        PositiveCounts& c = counts[bundle.sensitive[i]];
        if (bundle.labels[i] == positive_class) {
            ++c.positives;
            if (bundle.predictions[i] == positive_class) {
                ++c.hits;
            }
        }
    }
    return counts;
}

void require_sensitive(const EvalBundle& bundle, const char* op) {
    if (bundle.sensitive.empty()) {
        throw data_error(std::string(op) + ": bundle has no sensitive ids");
    }
}

}  // namespace

GroupScores per_group_f1_recall(const EvalBundle& bundle, Grouping grouping) {
    validate_bundle(bundle);
    if (grouping == Grouping::kByClass) {
        return class_scores(bundle, all_indices(bundle.labels.size()),
                            observed_classes(bundle));
    }
    // By-sensitive: macro scores within each subgroup of bundle.groups.
    GroupScores scores;
    std::map<int, std::vector<std::size_t>> subgroups;
    for (std::size_t i = 0; i < bundle.groups.size(); ++i) {
        subgroups[bundle.groups[i]].push_back(i);
    }
    for (const auto& [group, indices] : subgroups) {
        std::set<int> seen;
        for (std::size_t i : indices) {
            seen.insert(bundle.labels[i]);
            seen.insert(bundle.predictions[i]);
        }
        const std::vector<int> classes(seen.begin(), seen.end());
        const GroupScores inner = class_scores(bundle, indices, classes);
        double f1_sum = 0.0;
        double recall_sum = 0.0;
        for (const auto& [c, v] : inner.f1) {
            f1_sum += v;
        }
        for (const auto& [c, v] : inner.recall) {
            recall_sum += v;
        }
        scores.f1[group] = f1_sum / static_cast<double>(classes.size());
        scores.recall[group] = recall_sum / static_cast<double>(classes.size());
        if (!inner.zero_denominator_groups.empty()) {
            scores.zero_denominator_groups.push_back(group);
        }
    }
    return scores;
}

double eod_pair(const EvalBundle& bundle, int positive_class, int s1, int s2) {
    validate_bundle(bundle);
    require_sensitive(bundle, "eod_pair");
    const auto counts = positive_counts(bundle, positive_class);
    auto rate = [&](int s) {
        auto it = counts.find(s);
        if (it == counts.end() || it->second.positives == 0) {
            throw numeric_error("eod_pair: group " + std::to_string(s) +
                                " has no positive-labeled sample for class " +
                                std::to_string(positive_class) + " (rate undefined)");
        }
        return static_cast<double>(it->second.hits) /
               static_cast<double>(it->second.positives);
    };
    return std::abs(rate(s1) - rate(s2));
}

double eod_one_vs_all(const EvalBundle& bundle, int positive_class, int s_i) {
    validate_bundle(bundle);
    require_sensitive(bundle, "eod_one_vs_all");
    const auto counts = positive_counts(bundle, positive_class);
    auto it = counts.find(s_i);
    if (it == counts.end() || it->second.positives == 0) {
        throw numeric_error("eod_one_vs_all: group " + std::to_string(s_i) +
                            " has no positive-labeled sample for class " +
                            std::to_string(positive_class) + " (rate undefined)");
    }
    std::size_t rest_pos = 0, rest_hits = 0;
    for (const auto& [s, c] : counts) {
        if (s != s_i) {
            rest_pos += c.positives;
            rest_hits += c.hits;
        }
    }
    if (rest_pos == 0) {
        throw numeric_error("eod_one_vs_all: complement of group " + std::to_string(s_i) +
                            " has no positive-labeled sample for class " +
                            std::to_string(positive_class) + " (rate undefined)");
    }
    const double tpr = static_cast<double>(it->second.hits) /
                       static_cast<double>(it->second.positives);
    const double tpr_rest = static_cast<double>(rest_hits) / static_cast<double>(rest_pos);
    return std::abs(tpr - tpr_rest);
}

double eod_max(const EvalBundle& bundle, int positive_class) {
    validate_bundle(bundle);
    require_sensitive(bundle, "eod_max");
    std::set<int> groups(bundle.sensitive.begin(), bundle.sensitive.end());
    double best = 0.0;
    for (int s : groups) {
        best = std::max(best, eod_one_vs_all(bundle, positive_class, s));
    }
    return best;
}

MetricsReport summary(const EvalBundle& bundle, Grouping grouping) {
    validate_bundle(bundle);
    MetricsReport report;

    std::size_t correct = 0;
    for (std::size_t i = 0; i < bundle.labels.size(); ++i) {
        if (bundle.predictions[i] == bundle.labels[i]) {
            ++correct;
        }
    }
    report.accuracy = static_cast<double>(correct) /
                      static_cast<double>(bundle.labels.size());

    GroupScores scores = per_group_f1_recall(bundle, grouping);
    report.f1_by_group = std::move(scores.f1);
    report.recall_by_group = std::move(scores.recall);
    report.f1_zero_denominator_groups = std::move(scores.zero_denominator_groups);

    report.f1_min = report.f1_by_group.begin()->second;
    report.f1_max = report.f1_min;
    for (const auto& [g, v] : report.f1_by_group) {
        report.f1_min = std::min(report.f1_min, v);
        report.f1_max = std::max(report.f1_max, v);
    }
    report.delta_f1 = report.f1_max - report.f1_min;
    report.recall_min = report.recall_by_group.begin()->second;
    for (const auto& [g, v] : report.recall_by_group) {
        report.recall_min = std::min(report.recall_min, v);
    }

    if (!bundle.sensitive.empty()) {
        // Multi-class extension: per-class one-vs-rest EOD, maximum over the
        // classes where both rates are defined.
        const std::set<int> sens_groups(bundle.sensitive.begin(), bundle.sensitive.end());
        const std::set<int> classes(bundle.labels.begin(), bundle.labels.end());
        std::map<int, std::map<int, PositiveCounts>> by_class;
        for (int c : classes) {
            by_class[c] = positive_counts(bundle, c);
        }
        auto defined_rate = [](const std::map<int, PositiveCounts>& counts, int s,
                               double& out) {
            auto it = counts.find(s);
            if (it == counts.end() || it->second.positives == 0) {
                return false;
            }
            out = static_cast<double>(it->second.hits) /
                  static_cast<double>(it->second.positives);
            return true;
        };
        for (int s : sens_groups) {
            bool any = false;
            double best = 0.0;
            for (int c : classes) {
                const auto& counts = by_class[c];
                double tpr = 0.0;
                if (!defined_rate(counts, s, tpr)) {
                    continue;
                }
                std::size_t rest_pos = 0, rest_hits = 0;
                for (const auto& [other, pc] : counts) {
                    if (other != s) {
                        rest_pos += pc.positives;
                        rest_hits += pc.hits;
                    }
                }
                if (rest_pos == 0) {
                    continue;
                }
                const double tpr_rest = static_cast<double>(rest_hits) /
                                        static_cast<double>(rest_pos);
                best = std::max(best, std::abs(tpr - tpr_rest));
                any = true;
            }
            if (any) {
                report.eod_one_vs_all[s] = best;
            }
        }
        for (auto it1 = sens_groups.begin(); it1 != sens_groups.end(); ++it1) {
            for (auto it2 = std::next(it1); it2 != sens_groups.end(); ++it2) {
                bool any = false;
                double best = 0.0;
                for (int c : classes) {
                    const auto& counts = by_class[c];
                    double t1 = 0.0, t2 = 0.0;
                    if (defined_rate(counts, *it1, t1) && defined_rate(counts, *it2, t2)) {
                        best = std::max(best, std::abs(t1 - t2));
                        any = true;
                    }
                }
                if (any) {
                    report.eod_pairwise[{*it1, *it2}] = best;
                }
            }
        }
        if (!report.eod_one_vs_all.empty()) {
            double best = 0.0;
            for (const auto& [s, v] : report.eod_one_vs_all) {
                best = std::max(best, v);
            }
            report.eod_max = best;
        }
    }
    return report;
}

double group_loss_variance(const std::vector<double>& per_group_losses,
                           VarianceDivisor divisor) {
    if (per_group_losses.size() < 2) {
        throw data_error("group_loss_variance: need at least 2 groups");
    }
    bool all_equal = true;
    for (double v : per_group_losses) {
        all_equal = all_equal && v == per_group_losses.front();
    }
    if (all_equal) {
        return 0.0;
    }
    double mean = 0.0;
    for (double v : per_group_losses) {
        mean += v;
    }
    mean /= static_cast<double>(per_group_losses.size());
    double sum_sq = 0.0;
    for (double v : per_group_losses) {
        const double dev = v - mean;
        sum_sq += dev * dev;
    }
    const double d = divisor == VarianceDivisor::kPopulation
        ? static_cast<double>(per_group_losses.size())
        : static_cast<double>(per_group_losses.size() - 1);
    return sum_sq / d;
}

std::optional<double> sensitive_accuracy(const MlpClassifier& model, const Matrix& features,
                                         const std::vector<int>& sensitive, SeededRng& rng,
                                         const SensitiveProbeConfig& config) {
    if (sensitive.empty()) {
        return std::nullopt;
    }
    if (sensitive.size() != features.rows) {
        throw data_error("sensitive_accuracy: sensitive ids must match feature rows");
    }
    const Matrix probe_inputs = penultimate_features(model, features);

    // Dense-map sensitive ids to 0..S-1.
    std::vector<int> unique_ids(sensitive.begin(), sensitive.end());
    std::sort(unique_ids.begin(), unique_ids.end());
    unique_ids.erase(std::unique(unique_ids.begin(), unique_ids.end()), unique_ids.end());
    std::map<int, int> to_dense;
    for (std::size_t i = 0; i < unique_ids.size(); ++i) {
        to_dense[unique_ids[i]] = static_cast<int>(i);
    }
    std::vector<int> dense(sensitive.size());
    for (std::size_t i = 0; i < sensitive.size(); ++i) {
        dense[i] = to_dense[sensitive[i]];
    }

    std::vector<std::size_t> order(probe_inputs.rows);
    std::iota(order.begin(), order.end(), std::size_t{0});
    rng.shuffle(order);
    const std::size_t train_n = static_cast<std::size_t>(
        std::ceil(config.train_fraction * static_cast<double>(order.size())));
    if (train_n == 0 || train_n >= order.size()) {
        throw data_error("sensitive_accuracy: probe split leaves an empty side");
    }

    auto take = [&](std::size_t begin, std::size_t end, Matrix& x, std::vector<int>& y) {
        x = Matrix(end - begin, probe_inputs.cols);
        y.resize(end - begin);
        for (std::size_t i = begin; i < end; ++i) {
            const std::size_t src = order[i];
            for (std::size_t j = 0; j < probe_inputs.cols; ++j) {
                x.at(i - begin, j) = probe_inputs.at(src, j);
            }
            y[i - begin] = dense[src];
        }
    };
    Matrix train_x, eval_x;
    std::vector<int> train_y, eval_y;
    take(0, train_n, train_x, train_y);
    take(train_n, order.size(), eval_x, eval_y);

    // Multinomial logistic regression, zero init, full-batch gradient descent.
    MlpClassifier probe;
    probe.head.weight = Matrix(probe_inputs.cols, unique_ids.size());
    probe.head.bias = Matrix(1, unique_ids.size());
    std::vector<std::size_t> train_idx(train_x.rows);
    std::iota(train_idx.begin(), train_idx.end(), std::size_t{0});
    for (std::size_t iter = 0; iter < config.iterations; ++iter) {
        BatchGradients grads = backward_subset(probe, train_x, train_y, train_idx);
        add_scaled(probe.head.weight, grads.tensors.at("head.weight"), -config.learning_rate);
        add_scaled(probe.head.bias, grads.tensors.at("head.bias"), -config.learning_rate);
    }

    const Matrix logits = forward(probe, eval_x);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < logits.rows; ++i) {
        std::size_t arg = 0;
        for (std::size_t j = 1; j < logits.cols; ++j) {
            if (logits.at(i, j) > logits.at(i, arg)) {
                arg = j;
            }
        }
        if (static_cast<int>(arg) == eval_y[i]) {
            ++correct;
        }
    }
    return static_cast<double>(correct) / static_cast<double>(logits.rows);
}

std::vector<std::pair<std::string, std::string>> to_kv_rows(const MetricsReport& report) {
    std::vector<std::pair<std::string, std::string>> rows;
    rows.emplace_back("accuracy", format_double(report.accuracy));
    rows.emplace_back("f1_min", format_double(report.f1_min));
    rows.emplace_back("f1_max", format_double(report.f1_max));
    rows.emplace_back("recall_min", format_double(report.recall_min));
    rows.emplace_back("delta_f1", format_double(report.delta_f1));
    for (const auto& [g, v] : report.f1_by_group) {
        rows.emplace_back("f1.g" + std::to_string(g), format_double(v));
    }
    for (const auto& [g, v] : report.recall_by_group) {
        rows.emplace_back("recall.g" + std::to_string(g), format_double(v));
    }
    for (int g : report.f1_zero_denominator_groups) {
        rows.emplace_back("f1_zero_denominator.g" + std::to_string(g), "1");
    }
    for (const auto& [pair, v] : report.eod_pairwise) {
        rows.emplace_back("eod_pair.s" + std::to_string(pair.first) + "_s" +
                          std::to_string(pair.second), format_double(v));
    }
    for (const auto& [s, v] : report.eod_one_vs_all) {
        rows.emplace_back("eod_ova.s" + std::to_string(s), format_double(v));
    }
    if (report.eod_max) {
        rows.emplace_back("eod_max", format_double(*report.eod_max));
    }
    if (report.sensitive_accuracy) {
        rows.emplace_back("sensitive_accuracy", format_double(*report.sensitive_accuracy));
    }
    if (report.loss_variance_across_groups) {
        rows.emplace_back("group_loss_variance", format_double(*report.loss_variance_across_groups));
        rows.emplace_back("group_loss_variance_divisor", report.loss_variance_divisor);
    }
    return rows;
}

}  // namespace fairlora
