#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "fairlora/checkpoint.hpp"
#include "fairlora/config.hpp"
#include "fairlora/errors.hpp"
#include "fairlora/report.hpp"

using namespace fairlora;

namespace {

RunRecord record(const std::string& label, double accuracy, double f1_min = 0.5,
                 double recall_min = 0.5, double delta_f1 = 0.1) {
    RunRecord r;
    r.label = label;
    r.metrics["accuracy"] = accuracy;
    r.metrics["f1_min"] = f1_min;
    r.metrics["recall_min"] = recall_min;
    r.metrics["delta_f1"] = delta_f1;
    return r;
}

}  // namespace

TEST_SUITE("report") {

TEST_CASE("single-seed cells render with zero std") {
    const ReportTable table = make_table({record("LoRA r=4", 0.91)});
    REQUIRE(table.cells.size() == 1);
    CHECK(table.cells[0][0].mean == 0.91);
    CHECK(table.cells[0][0].stddev == 0.0);
    CHECK(render_markdown(table).find("0.91 ± 0.00") != std::string::npos);
}

TEST_CASE("aggregation of {90, 92, 94} gives 92 +/- 2") {
    const ReportTable table = make_table({
        record("FFT", 90.0), record("FFT", 92.0), record("FFT", 94.0)});
    REQUIRE(table.cells.size() == 1);
    CHECK(table.cells[0][0].mean == 92.0);
    CHECK(table.cells[0][0].stddev == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(table.cells[0][0].n == 3);
}

TEST_CASE("sample std at two decimals matches the hand case") {
    const ReportTable table = make_table({
        record("CLiP/LoRA", 97.35), record("CLiP/LoRA", 97.58), record("CLiP/LoRA", 97.49)});
    const std::string md = render_markdown(table);
    CHECK(md.find("97.47 ± 0.12") != std::string::npos);
}

TEST_CASE("markdown header carries the metric directions") {
    const ReportTable table = make_table({record("A", 0.9), record("B", 0.8)});
    const std::string md = render_markdown(table);
    CHECK(md.find("Accuracy (↑)") != std::string::npos);
    CHECK(md.find("dF1 (↓)") != std::string::npos);
}

TEST_CASE("best value per column is bolded, honoring direction") {
    const ReportTable table = make_table({
        record("A", 0.90, 0.5, 0.5, 0.20),
        record("B", 0.95, 0.4, 0.5, 0.10)});
    const std::string md = render_markdown(table);
    // B wins accuracy (higher) and delta_f1 (lower)
    CHECK(md.find("**0.95 ± 0.00**") != std::string::npos);
    CHECK(md.find("**0.10 ± 0.00**") != std::string::npos);
    // A wins f1_min
    CHECK(md.find("**0.50 ± 0.00**") != std::string::npos);
}

TEST_CASE("inconsistent metric sets are rejected") {
    RunRecord with_eod = record("A", 0.9);
    with_eod.metrics["eod_max"] = 0.2;
    const RunRecord without = record("B", 0.8);
    CHECK_THROWS_AS(make_table({with_eod, without}), data_error);
}

TEST_CASE("normalization inverts descending metrics and min-max scales") {
    // delta_f1 is descending-is-better
    const ReportTable table = make_table({
        record("A", 0.90, 0.5, 0.5, 0.30),
        record("B", 0.95, 0.5, 0.5, 0.10)});
    const NormalizedComparison cmp = normalize_for_comparison(table);
    const std::size_t acc = 0, delta = 3;
    CHECK(cmp.scores[0][acc] == 0.0);
    CHECK(cmp.scores[1][acc] == 1.0);
    CHECK(cmp.scores[0][delta] == 0.0);  // worst (highest) delta
    CHECK(cmp.scores[1][delta] == 1.0);
}

TEST_CASE("four-method ascending column normalizes to thirds") {
    const ReportTable table = make_table({
        record("A", 10.0), record("B", 20.0), record("C", 15.0), record("D", 5.0)});
    const NormalizedComparison cmp = normalize_for_comparison(table);
    CHECK(cmp.scores[0][0] == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    CHECK(cmp.scores[1][0] == 1.0);
    CHECK(cmp.scores[2][0] == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    CHECK(cmp.scores[3][0] == 0.0);
}

TEST_CASE("normalization is invariant to affine rescaling of a column") {
    const ReportTable raw = make_table({
        record("A", 10.0), record("B", 20.0), record("C", 15.0)});
    const ReportTable rescaled = make_table({
        record("A", 10.0 * 3.0 + 7.0), record("B", 20.0 * 3.0 + 7.0),
        record("C", 15.0 * 3.0 + 7.0)});
    const NormalizedComparison a = normalize_for_comparison(raw);
    const NormalizedComparison b = normalize_for_comparison(rescaled);
    for (std::size_t r = 0; r < 3; ++r) {
        CHECK(a.scores[r][0] == doctest::Approx(b.scores[r][0]).epsilon(1e-12));
    }
}

TEST_CASE("all-equal columns flag and score 1") {
    const ReportTable table = make_table({record("A", 0.9), record("B", 0.9)});
    const NormalizedComparison cmp = normalize_for_comparison(table);
    CHECK(cmp.scores[0][0] == 1.0);
    CHECK(cmp.scores[1][0] == 1.0);
    CHECK(!cmp.degenerate_columns.empty());
    CHECK(render_normalized_csv(cmp).find("#degenerate") != std::string::npos);
}

TEST_CASE("normalization needs at least two methods") {
    const ReportTable table = make_table({record("A", 0.9)});
    CHECK_THROWS_AS(normalize_for_comparison(table), data_error);
}

TEST_CASE("config round-trips through serialize and parse") {
    TrainConfig config;
    config.name = "demo";
    config.mode = TrainMode::kLora;
    config.fair = true;
    config.lambda = 0.1;
    config.rank = 4;
    config.epochs = 7;
    config.batch_size = 24;
    config.seed = 99;
    config.hidden_widths = {32, 16};
    config.coverage = CoverageMode::kOn;

    const std::string text = serialize_config(config);
    const TrainConfig back = train_config_from(KeyValueConfig::parse_text(text, "echo"));
    CHECK(back.name == config.name);
    CHECK(back.mode == config.mode);
    CHECK(back.fair == config.fair);
    CHECK(back.lambda == config.lambda);
    CHECK(back.rank == config.rank);
    CHECK(back.epochs == config.epochs);
    CHECK(back.batch_size == config.batch_size);
    CHECK(back.seed == config.seed);
    CHECK(back.hidden_widths == config.hidden_widths);
    CHECK(back.coverage == config.coverage);
    CHECK(serialize_config(back) == text);
}

TEST_CASE("config parse errors carry line numbers") {
    CHECK_THROWS_WITH_AS(KeyValueConfig::parse_text("mode = fft\nbroken line\n", "cfg"),
                         doctest::Contains("line 2"), data_error);
    CHECK_THROWS_WITH_AS(KeyValueConfig::parse_text("a = 1\na = 2\n", "cfg"),
                         doctest::Contains("duplicate"), data_error);
}

TEST_CASE("method and row labels") {
    TrainConfig config;
    config.mode = TrainMode::kLora;
    config.fair = true;
    config.lambda = 1.0;
    config.rank = 8;
    CHECK(method_label(config) == "FairLoRA");
    CHECK(row_label(config) == "FairLoRA r=8 lambda=1");
    config.fair = false;
    config.lambda = 0.0;
    CHECK(method_label(config) == "LoRA");
    config.mode = TrainMode::kFft;
    CHECK(method_label(config) == "FFT");
    config.fair = true;
    CHECK(method_label(config) == "FairFFT");
}

TEST_CASE("coverage auto resolves to the fair flag") {
    TrainConfig config;
    config.coverage = CoverageMode::kAuto;
    config.fair = false;
    CHECK(!config.coverage_enabled());
    config.fair = true;
    CHECK(config.coverage_enabled());
    config.coverage = CoverageMode::kOff;
    CHECK(!config.coverage_enabled());
}

TEST_CASE("sweep and synthetic specs parse from key-value text") {
    const KeyValueConfig kv = KeyValueConfig::parse_text(
        "mode = lora\nfair = true\nlambda = 1\nrank = 4\n"
        "lambda_grid = 0.01,0.1,1,10,100\nrank_grid = 4,8\nseeds = 1,2,3\n",
        "cfg");
    const SweepSpec spec = sweep_spec_from(kv);
    CHECK(spec.lambda_grid == std::vector<double>{0.01, 0.1, 1.0, 10.0, 100.0});
    CHECK(spec.rank_grid == std::vector<std::size_t>{4, 8});
    CHECK(spec.seeds == std::vector<std::uint64_t>{1, 2, 3});

    const KeyValueConfig synth_kv = KeyValueConfig::parse_text(
        "classes = 3\nsensitive_groups = 1\ncell_counts = 500;150;50\n"
        "feature_width = 6\nseed = 11\n",
        "cfg");
    const SyntheticSpec synth = synthetic_spec_from(synth_kv);
    CHECK(synth.num_classes == 3);
    CHECK(synth.cell_counts[0][0] == 500);
    CHECK(synth.cell_counts[2][0] == 50);
}

TEST_CASE("checkpoint loader rejects malformed files") {
    namespace fs = std::filesystem;
    const fs::path path = fs::temp_directory_path() / "fairlora_bad_ckpt.txt";
    auto write_and_expect_throw = [&](const std::string& text) {
        std::ofstream out(path);
        out << text;
        out.close();
        CHECK_THROWS_AS(load_checkpoint(path.string()), data_error);
    };
    write_and_expect_throw("not_a_checkpoint\n");
    write_and_expect_throw("fairlora_checkpoint_v1\nmode fft\nhidden 1\n");  // truncated
    write_and_expect_throw("fairlora_checkpoint_v1\nmode warp\nhidden 0\n");
    write_and_expect_throw(
        "fairlora_checkpoint_v1\nmode fft\nhidden 1\n"
        "layer 0 1 2 plain\nweight\n1.0\nbias\n0 0\n");  // too few weight values
    fs::remove(path);
}

TEST_CASE("trace csv renders one row per epoch") {
    std::vector<EpochTrace> trace;
    trace.push_back({0, 1.5, 0.0, 0.5, 0.25});
    trace.push_back({1, 1.0, 0.125, 0.75, 0.0625});
    const std::string csv = render_trace_csv(trace);
    CHECK(csv == "epoch,train_loss,penalty,eval_accuracy,group_loss_variance\n"
                 "0,1.5,0,0.5,0.25\n"
                 "1,1,0.125,0.75,0.0625\n");
}

}  // TEST_SUITE
