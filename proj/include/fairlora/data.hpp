#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fairlora/matrix.hpp"
#include "fairlora/objective.hpp"
#include "fairlora/rng.hpp"

namespace fairlora {

struct DatasetRecord {
    std::vector<double> features;
    int label = 0;
    int group = 0;                 // defaults to label when no group column
    std::optional<int> sensitive;
};

struct Dataset {
    std::vector<DatasetRecord> records;

    std::size_t size() const { return records.size(); }
    std::size_t feature_width() const {
        return records.empty() ? 0 : records.front().features.size();
    }
    bool has_sensitive() const;

    Matrix feature_matrix() const;
    std::vector<int> labels() const;
    std::vector<int> group_ids(GroupKey key) const;  // throws if sensitive missing
    std::vector<int> sensitive_ids() const;          // empty when absent
    std::size_t num_classes() const;                 // 1 + max label
};

// CSV with a header of feature_0..feature_{d-1}, label, optional group,
// optional sensitive. Errors carry the offending line number.
Dataset load_csv(const std::string& path);
void save_csv(const Dataset& dataset, const std::string& path);

// Per-class stratified split; `train_fraction` of each class goes to train,
// eval takes the floor of the remainder (deterministic rounding).
struct SplitResult {
    Dataset train;
    Dataset eval;
};
SplitResult split(const Dataset& dataset, double train_fraction, SeededRng& rng);

// One epoch of mini-batches, as index lists into the dataset. The epoch is a
// permutation of the dataset. In coverage mode every batch except possibly
// the last holds at least one sample of every group present in the dataset,
// provided each group has at least (number of batches - 1) samples.
std::vector<std::vector<std::size_t>> stratified_batches(const Dataset& dataset,
                                                         std::size_t batch_size,
                                                         SeededRng& rng, GroupKey key,
                                                         bool coverage);

// Synthetic group-imbalanced classification task: one Gaussian cluster per
// (class, sensitive group) cell, plus designated feature coordinates shifted
// by the sensitive id at a configurable strength.
struct SyntheticSpec {
    std::size_t num_classes = 2;
    std::size_t num_sensitive = 1;
    std::vector<std::vector<std::size_t>> cell_counts;  // [class][sensitive]
    std::size_t feature_width = 6;
    double class_separation = 3.0;  // distance scale between class means
    double noise_std = 1.0;         // shared covariance scale
    double spurious_strength = 0.0;
    std::vector<std::size_t> spurious_coords;
    std::uint64_t seed = 1;
};

void validate_spec(const SyntheticSpec& spec);
Dataset synth_generate(const SyntheticSpec& spec);

}  // namespace fairlora
