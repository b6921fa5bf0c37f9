#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "fairlora/data.hpp"
#include "fairlora/model.hpp"
#include "fairlora/objective.hpp"

namespace fairlora {

// Flat `key = value` text document; '#' starts a comment line.
struct KeyValueConfig {
    std::map<std::string, std::string> values;

    static KeyValueConfig parse_file(const std::string& path);
    static KeyValueConfig parse_text(const std::string& text, const std::string& origin);

    bool has(const std::string& key) const;
    std::string get(const std::string& key) const;  // throws when absent
    std::string get_or(const std::string& key, const std::string& fallback) const;
};

enum class CoverageMode { kAuto, kOn, kOff };  // auto = on for fair modes

struct TrainConfig {
    std::string name;  // row label prefix in report tables
    TrainMode mode = TrainMode::kFft;
    bool fair = false;
    double lambda = 0.0;
    std::size_t rank = 0;
    double learning_rate = 0.05;
    double momentum = 0.9;
    std::size_t epochs = 20;
    std::size_t batch_size = 32;
    std::uint64_t seed = 1;
    GroupKey group_key = GroupKey::kClassLabel;
    double init_std = 0.01;
    double lora_scale = 1.0;
    std::vector<std::size_t> hidden_widths = {64, 64};
    double train_fraction = 0.8;
    CoverageMode coverage = CoverageMode::kAuto;

    // Test hook: lets fair-mode code paths run with lambda == 0 so they can
    // be compared bitwise against plain mode. Never set from config files.
    bool allow_zero_lambda = false;

    bool coverage_enabled() const {
        return coverage == CoverageMode::kAuto ? fair : coverage == CoverageMode::kOn;
    }
};

TrainConfig train_config_from(const KeyValueConfig& kv);
std::string serialize_config(const TrainConfig& config);  // canonical key order
void validate_config(const TrainConfig& config);

// "FFT", "FairFFT", "LoRA" or "FairLoRA".
std::string method_label(const TrainConfig& config);
// Full table row label, e.g. "FairLoRA r=4 lambda=1".
std::string row_label(const TrainConfig& config);

struct SweepSpec {
    std::vector<double> lambda_grid = {0.01, 0.1, 1.0, 10.0, 100.0};
    std::vector<std::size_t> rank_grid = {8};
    std::vector<std::uint64_t> seeds = {1, 2, 3};
    TrainConfig base;
};

SweepSpec sweep_spec_from(const KeyValueConfig& kv);
SyntheticSpec synthetic_spec_from(const KeyValueConfig& kv);

}  // namespace fairlora
