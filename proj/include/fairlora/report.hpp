#pragma once

#include <map>
#include <string>
#include <vector>

#include "fairlora/train.hpp"

namespace fairlora {

struct MetricColumn {
    std::string key;    // stable field name in metrics records
    std::string title;  // rendered table heading
    bool higher_better = true;
};

// The standard column set: Accuracy, F1 Min, Recall Min, dF1, EOD_max,
// Sensitive Acc, Group-Loss Variance.
const std::vector<MetricColumn>& report_columns();

struct TableCell {
    double mean = 0.0;
    double stddev = 0.0;  // sample (n-1) std; 0 for a single run
    std::size_t n = 0;
};

struct ReportTable {
    std::vector<std::string> row_labels;
    std::vector<MetricColumn> columns;
    std::vector<std::vector<TableCell>> cells;  // [row][column]
};

// One run for table building: its row label plus the flat metric record.
struct RunRecord {
    std::string label;
    std::map<std::string, double> metrics;
};

RunRecord run_record(const RunArtifact& artifact);

// Aggregates runs sharing a label into mean +/- sample-std cells. Rejects
// inconsistent metric sets (a column must be present in all runs or none).
ReportTable make_table(const std::vector<RunRecord>& runs);

// 2-decimal "mean +/- std" cells; best mean per column bolded.
std::string render_markdown(const ReportTable& table);
// Full-precision means/stds/counts per column.
std::string render_csv(const ReportTable& table);

struct NormalizedComparison {
    std::vector<std::string> row_labels;
    std::vector<MetricColumn> columns;
    std::vector<std::vector<double>> scores;       // [row][column], in [0, 1]
    std::vector<std::string> degenerate_columns;   // all-equal, every score 1
};

// Inverts descending-is-better columns (value -> max - value) and min-max
// scales each column so the best method scores 1 and the worst 0.
NormalizedComparison normalize_for_comparison(const ReportTable& table);
std::string render_normalized_csv(const NormalizedComparison& comparison);

// Per-run artifact files.
std::string render_trace_csv(const std::vector<EpochTrace>& trace);
std::string render_metrics_csv(const MetricsReport& report);

// Parses a metrics.csv back into a flat numeric record (non-numeric values
// are skipped).
std::map<std::string, double> parse_metrics_csv(const std::string& path);

}  // namespace fairlora
