#include "fairlora/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include "fairlora/errors.hpp"
#include "fairlora/numeric_text.hpp"

namespace fairlora {

bool Dataset::has_sensitive() const {
    return !records.empty() && records.front().sensitive.has_value();
}

Matrix Dataset::feature_matrix() const {
    Matrix m(records.size(), feature_width());
    for (std::size_t i = 0; i < records.size(); ++i) {
        for (std::size_t j = 0; j < m.cols; ++j) {
            m.at(i, j) = records[i].features[j];
        }
    }
    return m;
}

std::vector<int> Dataset::labels() const {
    std::vector<int> out(records.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
        out[i] = records[i].label;
    }
    return out;
}

std::vector<int> Dataset::group_ids(GroupKey key) const {
    std::vector<int> out(records.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
        if (key == GroupKey::kClassLabel) {
            out[i] = records[i].group;
        } else {
            if (!records[i].sensitive) {
                throw data_error("group_ids: record " + std::to_string(i) +
                                 " has no sensitive id");
            }
            out[i] = *records[i].sensitive;
        }
    }
    return out;
}

std::vector<int> Dataset::sensitive_ids() const {
    if (!has_sensitive()) {
        return {};
    }
    std::vector<int> out(records.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
        if (!records[i].sensitive) {
            throw data_error("sensitive_ids: record " + std::to_string(i) +
                             " has no sensitive id");
        }
        out[i] = *records[i].sensitive;
    }
    return out;
}

std::size_t Dataset::num_classes() const {
    int max_label = -1;
    for (const DatasetRecord& r : records) {
        max_label = std::max(max_label, r.label);
    }
    return static_cast<std::size_t>(max_label + 1);
}

namespace {

std::vector<std::string> split_line(const std::string& line, char sep) {
    std::vector<std::string> fields;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, sep)) {
        fields.push_back(field);
    }
    if (!line.empty() && line.back() == sep) {
        fields.push_back("");
    }
    return fields;
}

}  // namespace

Dataset load_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw data_error("load_csv: cannot open '" + path + "'");
    }
    std::string line;
    if (!std::getline(in, line)) {
        throw data_error("load_csv: '" + path + "' is empty");
    }
    if (!line.empty() && line.back() == '\r') {
        line.pop_back();
    }
    const std::vector<std::string> header = split_line(line, ',');

    std::vector<long> feature_cols;  // feature index -> column
    long label_col = -1, group_col = -1, sensitive_col = -1;
    for (std::size_t c = 0; c < header.size(); ++c) {
        const std::string& name = header[c];
        if (name.rfind("feature_", 0) == 0) {
            const std::size_t idx = static_cast<std::size_t>(
                parse_int(name.substr(8), path + " header"));
            if (feature_cols.size() <= idx) {
                feature_cols.resize(idx + 1, -1);
            }
            feature_cols[idx] = static_cast<long>(c);
        } else if (name == "label") {
            label_col = static_cast<long>(c);
        } else if (name == "group") {
            group_col = static_cast<long>(c);
        } else if (name == "sensitive") {
            sensitive_col = static_cast<long>(c);
        } else {
            throw data_error("load_csv: '" + path + "' line 1: unknown column '" + name + "'");
        }
    }
    if (label_col < 0) {
        throw data_error("load_csv: '" + path + "' line 1: missing label column");
    }
    for (std::size_t i = 0; i < feature_cols.size(); ++i) {
        if (feature_cols[i] < 0) {
            throw data_error("load_csv: '" + path + "' line 1: missing feature_" +
                             std::to_string(i));
        }
    }

    Dataset dataset;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty()) {
            continue;
        }
        const std::vector<std::string> fields = split_line(line, ',');
        if (fields.size() != header.size()) {
            throw data_error("load_csv: '" + path + "' line " + std::to_string(line_no) +
                             ": expected " + std::to_string(header.size()) + " fields, got " +
                             std::to_string(fields.size()));
        }
        const std::string where = path + " line " + std::to_string(line_no);
        DatasetRecord rec;
        rec.features.resize(feature_cols.size());
        for (std::size_t i = 0; i < feature_cols.size(); ++i) {
            rec.features[i] = parse_double(fields[static_cast<std::size_t>(feature_cols[i])], where);
        }
        rec.label = static_cast<int>(parse_int(fields[static_cast<std::size_t>(label_col)], where));
        if (rec.label < 0) {
            throw data_error(where + ": negative label");
        }
        rec.group = group_col >= 0
            ? static_cast<int>(parse_int(fields[static_cast<std::size_t>(group_col)], where))
            : rec.label;
        if (rec.group < 0) {
            throw data_error(where + ": negative group id");
        }
        if (sensitive_col >= 0) {
            const int s = static_cast<int>(
                parse_int(fields[static_cast<std::size_t>(sensitive_col)], where));
            if (s < 0) {
                throw data_error(where + ": negative sensitive id");
            }
            rec.sensitive = s;
        }
        if (rec.features.size() != dataset.feature_width() && !dataset.records.empty()) {
            throw data_error(where + ": inconsistent feature width");
        }
        dataset.records.push_back(std::move(rec));
    }
    return dataset;
}

void save_csv(const Dataset& dataset, const std::string& path) {
    std::ofstream out(path);
    if (!out) {
        throw data_error("save_csv: cannot open '" + path + "' for writing");
    }
    const std::size_t d = dataset.feature_width();
    const bool sensitive = dataset.has_sensitive();
    for (std::size_t j = 0; j < d; ++j) {
        out << "feature_" << j << ",";
    }
    out << "label,group";
    if (sensitive) {
        out << ",sensitive";
    }
    out << "\n";
    for (const DatasetRecord& rec : dataset.records) {
        for (std::size_t j = 0; j < d; ++j) {
            out << format_double(rec.features[j]) << ",";
        }
        out << rec.label << "," << rec.group;
        if (sensitive) {
            out << "," << *rec.sensitive;
        }
        out << "\n";
    }
}

SplitResult split(const Dataset& dataset, double train_fraction, SeededRng& rng) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
        throw data_error("split: train fraction must lie in (0, 1)");
    }
    std::map<int, std::vector<std::size_t>> by_class;
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        by_class[dataset.records[i].label].push_back(i);
    }
    SplitResult result;
    for (auto& [label, indices] : by_class) {
        if (indices.size() < 2) {
            throw data_error("split: class " + std::to_string(label) +
                             " has fewer than 2 samples, cannot stratify");
        }
        rng.shuffle(indices);
        // floor of the eval share to eval, remainder to train; the 1e-9 nudge
        // keeps exact shares (0.2 * 50) from flooring through representation
        // error
        const std::size_t eval_n = static_cast<std::size_t>(
            std::floor((1.0 - train_fraction) * static_cast<double>(indices.size()) + 1e-9));
        for (std::size_t i = 0; i < indices.size(); ++i) {
            (i < eval_n ? result.eval : result.train)
                .records.push_back(dataset.records[indices[i]]);
        }
    }
    return result;
}

std::vector<std::vector<std::size_t>> stratified_batches(const Dataset& dataset,
                                                         std::size_t batch_size,
                                                         SeededRng& rng, GroupKey key,
                                                         bool coverage) {
    if (dataset.size() == 0) {
        throw data_error("stratified_batches: empty dataset");
    }
    if (batch_size == 0) {
        throw data_error("stratified_batches: batch size must be positive");
    }
    const std::size_t n = dataset.size();
    const std::size_t num_batches = (n + batch_size - 1) / batch_size;

    if (!coverage) {
        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), std::size_t{0});
        rng.shuffle(order);
        std::vector<std::vector<std::size_t>> batches;
        for (std::size_t b = 0; b < num_batches; ++b) {
            const std::size_t begin = b * batch_size;
            const std::size_t end = std::min(begin + batch_size, n);
            batches.emplace_back(order.begin() + static_cast<long>(begin),
                                 order.begin() + static_cast<long>(end));
        }
        return batches;
    }

    const std::vector<int> ids = dataset.group_ids(key);
    std::map<int, std::vector<std::size_t>> groups = partition_by_group(ids);
    if (batch_size < groups.size()) {
        throw data_error("stratified_batches: batch size " + std::to_string(batch_size) +
                         " below group count " + std::to_string(groups.size()) +
                         " in coverage mode");
    }
    for (auto& [g, members] : groups) {
        rng.shuffle(members);
    }

    std::vector<std::vector<std::size_t>> batches(num_batches);
    std::vector<std::size_t> capacity(num_batches, batch_size);
    capacity.back() = n - batch_size * (num_batches - 1);

    // Coverage pass: hand one sample of each group to every batch but the
    // last, greedily reserving enough samples for the batches still to come.
    const std::size_t covered = num_batches > 1 ? num_batches - 1 : num_batches;
    std::map<int, std::size_t> cursor;
    for (std::size_t b = 0; b < covered; ++b) {
        for (auto& [g, members] : groups) {
            const std::size_t remaining = members.size() - cursor[g];
            if (remaining >= covered - b && capacity[b] > 0) {
                batches[b].push_back(members[cursor[g]++]);
                --capacity[b];
            }
        }
    }

    // Fill pass: pool the leftovers, shuffle, then fill batches in order.
    std::vector<std::size_t> pool;
    for (auto& [g, members] : groups) {
        pool.insert(pool.end(), members.begin() + static_cast<long>(cursor[g]), members.end());
    }
    rng.shuffle(pool);
    std::size_t next = 0;
    for (std::size_t b = 0; b < num_batches; ++b) {
        while (capacity[b] > 0) {
            batches[b].push_back(pool[next++]);
            --capacity[b];
        }
        rng.shuffle(batches[b]);
    }
    return batches;
}

void validate_spec(const SyntheticSpec& spec) {
    if (spec.num_classes == 0 || spec.num_sensitive == 0 || spec.feature_width == 0) {
        throw data_error("SyntheticSpec: class, sensitive and feature counts must be positive");
    }
    if (spec.cell_counts.size() != spec.num_classes) {
        throw data_error("SyntheticSpec: cell_counts must have one row per class");
    }
    for (std::size_t c = 0; c < spec.num_classes; ++c) {
        if (spec.cell_counts[c].size() != spec.num_sensitive) {
            throw data_error("SyntheticSpec: cell_counts row " + std::to_string(c) +
                             " must have one entry per sensitive group");
        }
        std::size_t total = 0;
        for (std::size_t s : spec.cell_counts[c]) {
            total += s;
        }
        if (total == 0) {
            throw data_error("SyntheticSpec: class " + std::to_string(c) + " is empty");
        }
    }
    if (!(spec.noise_std > 0.0)) {
        throw data_error("SyntheticSpec: noise_std must be positive");
    }
    for (std::size_t c : spec.spurious_coords) {
        if (c >= spec.feature_width) {
            throw data_error("SyntheticSpec: spurious coordinate out of range");
        }
    }
}

Dataset synth_generate(const SyntheticSpec& spec) {
    validate_spec(spec);
    SeededRng mean_rng(derive_seed(spec.seed, "synth/means"));
    SeededRng noise_rng(derive_seed(spec.seed, "synth/noise"));

    // Class means drawn once; sensitive groups share the class mean except on
    // the spurious coordinates.
    std::vector<std::vector<double>> class_means(spec.num_classes);
    for (auto& mean : class_means) {
        mean.resize(spec.feature_width);
        for (double& v : mean) {
            v = mean_rng.next_normal(0.0, spec.class_separation);
        }
    }

    Dataset dataset;
    for (std::size_t c = 0; c < spec.num_classes; ++c) {
        for (std::size_t s = 0; s < spec.num_sensitive; ++s) {
            for (std::size_t i = 0; i < spec.cell_counts[c][s]; ++i) {
                DatasetRecord rec;
                rec.label = static_cast<int>(c);
                rec.group = static_cast<int>(c);
                rec.sensitive = static_cast<int>(s);
                rec.features.resize(spec.feature_width);
                for (std::size_t j = 0; j < spec.feature_width; ++j) {
                    rec.features[j] = class_means[c][j] +
                                      noise_rng.next_normal(0.0, spec.noise_std);
                }
                for (std::size_t j : spec.spurious_coords) {
                    rec.features[j] += spec.spurious_strength * static_cast<double>(s);
                }
                dataset.records.push_back(std::move(rec));
            }
        }
    }
    return dataset;
}

}  // namespace fairlora
