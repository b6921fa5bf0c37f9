#include "fairlora/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "fairlora/errors.hpp"
#include "fairlora/numeric_text.hpp"

namespace fairlora {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t");
    std::size_t e = s.find_last_not_of(" \t\r");
    if (b == std::string::npos) {
        return "";
    }
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s, char sep) {
    std::vector<std::string> parts;
    std::string part;
    std::stringstream ss(s);
    while (std::getline(ss, part, sep)) {
        parts.push_back(trim(part));
    }
    return parts;
}

bool parse_bool(const std::string& s, const std::string& context) {
    if (s == "true" || s == "on" || s == "1") {
        return true;
    }
    if (s == "false" || s == "off" || s == "0") {
        return false;
    }
    throw data_error(context + ": expected a boolean, got '" + s + "'");
}

}  // namespace

KeyValueConfig KeyValueConfig::parse_text(const std::string& text, const std::string& origin) {
    KeyValueConfig config;
    std::stringstream ss(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(ss, line)) {
        ++line_no;
        const std::string stripped = trim(line);
        if (stripped.empty() || stripped[0] == '#') {
            continue;
        }
        const std::size_t eq = stripped.find('=');
        if (eq == std::string::npos) {
            throw data_error(origin + " line " + std::to_string(line_no) +
                             ": expected 'key = value', got '" + stripped + "'");
        }
        const std::string key = trim(stripped.substr(0, eq));
        const std::string value = trim(stripped.substr(eq + 1));
        if (key.empty()) {
            throw data_error(origin + " line " + std::to_string(line_no) + ": empty key");
        }
        if (config.values.count(key)) {
            throw data_error(origin + " line " + std::to_string(line_no) +
                             ": duplicate key '" + key + "'");
        }
        config.values[key] = value;
    }
    return config;
}

KeyValueConfig KeyValueConfig::parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw data_error("config: cannot open '" + path + "'");
    }
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_text(buffer.str(), path);
}

bool KeyValueConfig::has(const std::string& key) const {
    return values.count(key) > 0;
}

std::string KeyValueConfig::get(const std::string& key) const {
    auto it = values.find(key);
    if (it == values.end()) {
        throw data_error("config: missing key '" + key + "'");
    }
    return it->second;
}

std::string KeyValueConfig::get_or(const std::string& key, const std::string& fallback) const {
    auto it = values.find(key);
    return it == values.end() ? fallback : it->second;
}

TrainConfig train_config_from(const KeyValueConfig& kv) {
    TrainConfig c;
    c.name = kv.get_or("name", "");
    const std::string mode = kv.get_or("mode", "fft");
    if (mode == "fft") {
        c.mode = TrainMode::kFft;
    } else if (mode == "lora") {
        c.mode = TrainMode::kLora;
    } else {
        throw data_error("config: mode must be 'fft' or 'lora', got '" + mode + "'");
    }
    c.fair = parse_bool(kv.get_or("fair", "false"), "config key 'fair'");
    c.lambda = parse_double(kv.get_or("lambda", "0"), "config key 'lambda'");
    c.rank = static_cast<std::size_t>(parse_int(kv.get_or("rank", "0"), "config key 'rank'"));
    c.learning_rate = parse_double(kv.get_or("learning_rate", "0.05"), "config key 'learning_rate'");
    c.momentum = parse_double(kv.get_or("momentum", "0.9"), "config key 'momentum'");
    c.epochs = static_cast<std::size_t>(parse_int(kv.get_or("epochs", "20"), "config key 'epochs'"));
    c.batch_size = static_cast<std::size_t>(
        parse_int(kv.get_or("batch_size", "32"), "config key 'batch_size'"));
    c.seed = parse_u64(kv.get_or("seed", "1"), "config key 'seed'");
    const std::string key = kv.get_or("group_key", "class");
    if (key == "class") {
        c.group_key = GroupKey::kClassLabel;
    } else if (key == "sensitive") {
        c.group_key = GroupKey::kSensitiveAttribute;
    } else {
        throw data_error("config: group_key must be 'class' or 'sensitive', got '" + key + "'");
    }
    c.init_std = parse_double(kv.get_or("init_std", "0.01"), "config key 'init_std'");
    c.lora_scale = parse_double(kv.get_or("lora_scale", "1"), "config key 'lora_scale'");
    c.hidden_widths.clear();
    for (const std::string& part : split_list(kv.get_or("hidden_widths", "64,64"), ',')) {
        c.hidden_widths.push_back(static_cast<std::size_t>(
            parse_int(part, "config key 'hidden_widths'")));
    }
    c.train_fraction = parse_double(kv.get_or("train_fraction", "0.8"),
                                    "config key 'train_fraction'");
    const std::string coverage = kv.get_or("coverage", "auto");
    if (coverage == "auto") {
        c.coverage = CoverageMode::kAuto;
    } else if (coverage == "on") {
        c.coverage = CoverageMode::kOn;
    } else if (coverage == "off") {
        c.coverage = CoverageMode::kOff;
    } else {
        throw data_error("config: coverage must be 'auto', 'on' or 'off', got '" +
                         coverage + "'");
    }
    return c;
}

std::string serialize_config(const TrainConfig& c) {
    std::ostringstream out;
    out << "name = " << c.name << "\n";
    out << "mode = " << (c.mode == TrainMode::kFft ? "fft" : "lora") << "\n";
    out << "fair = " << (c.fair ? "true" : "false") << "\n";
    out << "lambda = " << format_double(c.lambda) << "\n";
    out << "rank = " << c.rank << "\n";
    out << "learning_rate = " << format_double(c.learning_rate) << "\n";
    out << "momentum = " << format_double(c.momentum) << "\n";
    out << "epochs = " << c.epochs << "\n";
    out << "batch_size = " << c.batch_size << "\n";
    out << "seed = " << c.seed << "\n";
    out << "group_key = " << (c.group_key == GroupKey::kClassLabel ? "class" : "sensitive")
        << "\n";
    out << "init_std = " << format_double(c.init_std) << "\n";
    out << "lora_scale = " << format_double(c.lora_scale) << "\n";
    out << "hidden_widths = ";
    for (std::size_t i = 0; i < c.hidden_widths.size(); ++i) {
        out << (i ? "," : "") << c.hidden_widths[i];
    }
    out << "\n";
    out << "train_fraction = " << format_double(c.train_fraction) << "\n";
    out << "coverage = "
        << (c.coverage == CoverageMode::kAuto ? "auto"
                                              : c.coverage == CoverageMode::kOn ? "on" : "off")
        << "\n";
    return out.str();
}

void validate_config(const TrainConfig& c) {
    if (!std::isfinite(c.lambda) || c.lambda < 0.0) {
        throw data_error("config: lambda must be finite and non-negative");
    }
    if (c.fair && c.lambda <= 0.0 && !c.allow_zero_lambda) {
        throw data_error("config: fair mode requires lambda > 0");
    }
    if (!c.fair && c.lambda > 0.0) {
        throw data_error("config: lambda > 0 with fair off is a misconfiguration");
    }
    if (c.mode == TrainMode::kLora && c.rank < 1) {
        throw data_error("config: LoRA mode requires rank >= 1");
    }
    if (!(c.learning_rate > 0.0)) {
        throw data_error("config: learning_rate must be positive");
    }
    if (c.momentum < 0.0 || c.momentum >= 1.0) {
        throw data_error("config: momentum must lie in [0, 1)");
    }
    if (c.batch_size == 0) {
        throw data_error("config: batch_size must be positive");
    }
    if (!(c.train_fraction > 0.0 && c.train_fraction < 1.0)) {
        throw data_error("config: train_fraction must lie in (0, 1)");
    }
    if (c.hidden_widths.empty()) {
        throw data_error("config: at least one hidden layer is required");
    }
    if (!(c.init_std > 0.0)) {
        throw data_error("config: init_std must be positive");
    }
}

std::string method_label(const TrainConfig& c) {
    if (c.mode == TrainMode::kLora) {
        return c.fair ? "FairLoRA" : "LoRA";
    }
    return c.fair ? "FairFFT" : "FFT";
}

std::string row_label(const TrainConfig& c) {
    std::string label = c.name.empty() ? "" : c.name + "/";
    label += method_label(c);
    if (c.mode == TrainMode::kLora) {
        label += " r=" + std::to_string(c.rank);
    }
    if (c.fair) {
        label += " lambda=" + format_double(c.lambda);
    }
    return label;
}

SweepSpec sweep_spec_from(const KeyValueConfig& kv) {
    SweepSpec spec;
    spec.base = train_config_from(kv);
    if (kv.has("lambda_grid")) {
        spec.lambda_grid.clear();
        for (const std::string& part : split_list(kv.get("lambda_grid"), ',')) {
            spec.lambda_grid.push_back(parse_double(part, "config key 'lambda_grid'"));
        }
    }
    if (kv.has("rank_grid")) {
        spec.rank_grid.clear();
        for (const std::string& part : split_list(kv.get("rank_grid"), ',')) {
            spec.rank_grid.push_back(static_cast<std::size_t>(
                parse_int(part, "config key 'rank_grid'")));
        }
    }
    if (kv.has("seeds")) {
        spec.seeds.clear();
        for (const std::string& part : split_list(kv.get("seeds"), ',')) {
            spec.seeds.push_back(parse_u64(part, "config key 'seeds'"));
        }
    }
    if (spec.lambda_grid.empty() || spec.rank_grid.empty() || spec.seeds.empty()) {
        throw data_error("config: sweep grids and seed list must be nonempty");
    }
    return spec;
}

SyntheticSpec synthetic_spec_from(const KeyValueConfig& kv) {
    SyntheticSpec spec;
    spec.num_classes = static_cast<std::size_t>(
        parse_int(kv.get_or("classes", "2"), "config key 'classes'"));
    spec.num_sensitive = static_cast<std::size_t>(
        parse_int(kv.get_or("sensitive_groups", "1"), "config key 'sensitive_groups'"));
    spec.feature_width = static_cast<std::size_t>(
        parse_int(kv.get_or("feature_width", "6"), "config key 'feature_width'"));
    spec.class_separation = parse_double(kv.get_or("class_separation", "3"),
                                         "config key 'class_separation'");
    spec.noise_std = parse_double(kv.get_or("noise_std", "1"), "config key 'noise_std'");
    spec.spurious_strength = parse_double(kv.get_or("spurious_strength", "0"),
                                          "config key 'spurious_strength'");
    if (kv.has("spurious_coords")) {
        for (const std::string& part : split_list(kv.get("spurious_coords"), ',')) {
            spec.spurious_coords.push_back(static_cast<std::size_t>(
                parse_int(part, "config key 'spurious_coords'")));
        }
    }
    spec.seed = parse_u64(kv.get_or("seed", "1"), "config key 'seed'");

    // cell_counts: one row per class separated by ';', group counts separated
    // by ','. Example for 3 classes, 1 sensitive group: "500;150;50".
    spec.cell_counts.clear();
    const std::string counts = kv.get("cell_counts");
    for (const std::string& row : split_list(counts, ';')) {
        std::vector<std::size_t> cells;
        for (const std::string& part : split_list(row, ',')) {
            cells.push_back(static_cast<std::size_t>(
                parse_int(part, "config key 'cell_counts'")));
        }
        spec.cell_counts.push_back(std::move(cells));
    }
    validate_spec(spec);
    return spec;
}

}  // namespace fairlora
