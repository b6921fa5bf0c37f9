#include "fairlora/report.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "fairlora/errors.hpp"
#include "fairlora/numeric_text.hpp"

namespace fairlora {

const std::vector<MetricColumn>& report_columns() {
    static const std::vector<MetricColumn> columns = {
        {"accuracy", "Accuracy", true},
        {"f1_min", "F1 Min", true},
        {"recall_min", "Recall Min", true},
        {"delta_f1", "dF1", false},
        {"eod_max", "EOD_max", false},
        {"sensitive_accuracy", "Sensitive Acc", false},
        {"group_loss_variance", "Group-Loss Variance", false},
    };
    return columns;
}

RunRecord run_record(const RunArtifact& artifact) {
    RunRecord record;
    record.label = row_label(artifact.config);
    const MetricsReport& m = artifact.final_metrics;
    record.metrics["accuracy"] = m.accuracy;
    record.metrics["f1_min"] = m.f1_min;
    record.metrics["recall_min"] = m.recall_min;
    record.metrics["delta_f1"] = m.delta_f1;
    if (m.eod_max) {
        record.metrics["eod_max"] = *m.eod_max;
    }
    if (m.sensitive_accuracy) {
        record.metrics["sensitive_accuracy"] = *m.sensitive_accuracy;
    }
    if (m.loss_variance_across_groups) {
        record.metrics["group_loss_variance"] = *m.loss_variance_across_groups;
    }
    return record;
}

ReportTable make_table(const std::vector<RunRecord>& runs) {
    if (runs.empty()) {
        throw data_error("make_table: no runs");
    }
    ReportTable table;
    for (const MetricColumn& column : report_columns()) {
        std::size_t present = 0;
        for (const RunRecord& run : runs) {
            present += run.metrics.count(column.key);
        }
        if (present == runs.size()) {
            table.columns.push_back(column);
        } else if (present != 0) {
            throw data_error("make_table: metric '" + column.key +
                             "' present in only " + std::to_string(present) + " of " +
                             std::to_string(runs.size()) + " runs");
        }
    }

    // Rows keep first-appearance order of their labels.
    std::map<std::string, std::size_t> row_of;
    std::vector<std::vector<const RunRecord*>> grouped;
    for (const RunRecord& run : runs) {
        auto [it, inserted] = row_of.try_emplace(run.label, table.row_labels.size());
        if (inserted) {
            table.row_labels.push_back(run.label);
            grouped.emplace_back();
        }
        grouped[it->second].push_back(&run);
    }

    for (const auto& group : grouped) {
        std::vector<TableCell> row;
        for (const MetricColumn& column : table.columns) {
            TableCell cell;
            cell.n = group.size();
            double sum = 0.0;
            for (const RunRecord* run : group) {
                sum += run->metrics.at(column.key);
            }
            cell.mean = sum / static_cast<double>(group.size());
            if (group.size() >= 2) {
                double sq = 0.0;
                for (const RunRecord* run : group) {
                    const double dev = run->metrics.at(column.key) - cell.mean;
                    sq += dev * dev;
                }
                cell.stddev = std::sqrt(sq / static_cast<double>(group.size() - 1));
            }
            row.push_back(cell);
        }
        table.cells.push_back(std::move(row));
    }
    return table;
}

std::string render_markdown(const ReportTable& table) {
    std::ostringstream out;
    out << "| Method |";
    for (const MetricColumn& column : table.columns) {
        out << " " << column.title << " (" << (column.higher_better ? "↑" : "↓")
            << ") |";
    }
    out << "\n|---|";
    for (std::size_t c = 0; c < table.columns.size(); ++c) {
        out << "---|";
    }
    out << "\n";

    std::vector<double> best(table.columns.size());
    for (std::size_t c = 0; c < table.columns.size(); ++c) {
        best[c] = table.cells[0][c].mean;
        for (const auto& row : table.cells) {
            best[c] = table.columns[c].higher_better ? std::max(best[c], row[c].mean)
                                                     : std::min(best[c], row[c].mean);
        }
    }
    for (std::size_t r = 0; r < table.cells.size(); ++r) {
        out << "| " << table.row_labels[r] << " |";
        for (std::size_t c = 0; c < table.columns.size(); ++c) {
            const TableCell& cell = table.cells[r][c];
            const std::string text =
                format_fixed2(cell.mean) + " ± " + format_fixed2(cell.stddev);
            if (cell.mean == best[c]) {
                out << " **" << text << "** |";
            } else {
                out << " " << text << " |";
            }
        }
        out << "\n";
    }
    return out.str();
}

std::string render_csv(const ReportTable& table) {
    std::ostringstream out;
    out << "label";
    for (const MetricColumn& column : table.columns) {
        out << "," << column.key << "_mean," << column.key << "_std," << column.key << "_n";
    }
    out << "\n";
    for (std::size_t r = 0; r < table.cells.size(); ++r) {
        out << table.row_labels[r];
        for (std::size_t c = 0; c < table.columns.size(); ++c) {
            const TableCell& cell = table.cells[r][c];
            out << "," << format_double(cell.mean) << "," << format_double(cell.stddev)
                << "," << cell.n;
        }
        out << "\n";
    }
    return out.str();
}

NormalizedComparison normalize_for_comparison(const ReportTable& table) {
    if (table.row_labels.size() < 2) {
        throw data_error("normalize_for_comparison: need at least 2 methods");
    }
    NormalizedComparison comparison;
    comparison.row_labels = table.row_labels;
    comparison.columns = table.columns;
    comparison.scores.assign(table.row_labels.size(),
                             std::vector<double>(table.columns.size(), 0.0));
    for (std::size_t c = 0; c < table.columns.size(); ++c) {
        std::vector<double> values(table.row_labels.size());
        double raw_max = table.cells[0][c].mean;
        for (std::size_t r = 0; r < values.size(); ++r) {
            values[r] = table.cells[r][c].mean;
            raw_max = std::max(raw_max, values[r]);
        }
        if (!table.columns[c].higher_better) {
            for (double& v : values) {
                v = raw_max - v;
            }
        }
        const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
        const double lo = *lo_it;
        const double hi = *hi_it;
        if (lo == hi) {
            comparison.degenerate_columns.push_back(table.columns[c].key);
            for (std::size_t r = 0; r < values.size(); ++r) {
                comparison.scores[r][c] = 1.0;
            }
            continue;
        }
        for (std::size_t r = 0; r < values.size(); ++r) {
            comparison.scores[r][c] = (values[r] - lo) / (hi - lo);
        }
    }
    return comparison;
}

std::string render_normalized_csv(const NormalizedComparison& comparison) {
    std::ostringstream out;
    out << "label";
    for (const MetricColumn& column : comparison.columns) {
        out << "," << column.key;
    }
    out << "\n";
    for (std::size_t r = 0; r < comparison.row_labels.size(); ++r) {
        out << comparison.row_labels[r];
        for (std::size_t c = 0; c < comparison.columns.size(); ++c) {
            out << "," << format_double(comparison.scores[r][c]);
        }
        out << "\n";
    }
    if (!comparison.degenerate_columns.empty()) {
        out << "#degenerate";
        for (const std::string& key : comparison.degenerate_columns) {
            out << "," << key;
        }
        out << "\n";
    }
    return out.str();
}

std::string render_trace_csv(const std::vector<EpochTrace>& trace) {
    std::ostringstream out;
    out << "epoch,train_loss,penalty,eval_accuracy,group_loss_variance\n";
    for (const EpochTrace& row : trace) {
        out << row.epoch << "," << format_double(row.train_loss) << ","
            << format_double(row.penalty) << "," << format_double(row.eval_accuracy) << ","
            << format_double(row.eval_group_loss_variance) << "\n";
    }
    return out.str();
}

std::string render_metrics_csv(const MetricsReport& report) {
    std::ostringstream out;
    out << "metric,value\n";
    for (const auto& [key, value] : to_kv_rows(report)) {
        out << key << "," << value << "\n";
    }
    return out.str();
}

std::map<std::string, double> parse_metrics_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw data_error("parse_metrics_csv: cannot open '" + path + "'");
    }
    std::map<std::string, double> metrics;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty() || line == "metric,value") {
            continue;
        }
        const std::size_t comma = line.find(',');
        if (comma == std::string::npos) {
            throw data_error("parse_metrics_csv: '" + path + "' line " +
                             std::to_string(line_no) + ": expected 'metric,value'");
        }
        const std::string key = line.substr(0, comma);
        try {
            metrics[key] = parse_double(line.substr(comma + 1), path);
        } catch (const data_error&) {
            // non-numeric annotation rows (e.g. divisor labels) are skipped
        }
    }
    return metrics;
}

}  // namespace fairlora
