#include "fairlora/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "fairlora/checkpoint.hpp"
#include "fairlora/config.hpp"
#include "fairlora/errors.hpp"
#include "fairlora/fid.hpp"
#include "fairlora/numeric_text.hpp"
#include "fairlora/report.hpp"
#include "fairlora/train.hpp"

namespace fairlora {

namespace fs = std::filesystem;

namespace {

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path);
    if (!out) {
        throw data_error("cannot open '" + path.string() + "' for writing");
    }
    out << content;
}

void write_run_artifact(const RunArtifact& artifact, const fs::path& dir) {
    fs::create_directories(dir);
    write_file(dir / "config.cfg", serialize_config(artifact.config));
    save_checkpoint(artifact.best_model, (dir / "checkpoint.txt").string());
    write_file(dir / "trace.csv", render_trace_csv(artifact.trace));
    write_file(dir / "metrics.csv", render_metrics_csv(artifact.final_metrics));
}

struct CommonOverrides {
    double lambda = 0.0;
    std::size_t rank = 0;
    std::uint64_t seed = 0;
    std::string mode;
    bool fair = false;
    std::size_t epochs = 0;
};

void add_override_options(CLI::App* cmd, CommonOverrides& o) {
    cmd->add_option("--lambda", o.lambda, "Override the regularization strength");
    cmd->add_option("--rank", o.rank, "Override the LoRA rank");
    cmd->add_option("--seed", o.seed, "Override the run seed");
    cmd->add_option("--mode", o.mode, "Override the mode (fft|lora)");
    cmd->add_option("--fair", o.fair, "Override the fair flag (true|false)");
    cmd->add_option("--epochs", o.epochs, "Override the epoch count");
}

void apply_overrides(const CLI::App* cmd, const CommonOverrides& o, TrainConfig& config) {
    if (cmd->count("--lambda")) {
        config.lambda = o.lambda;
    }
    if (cmd->count("--rank")) {
        config.rank = o.rank;
    }
    if (cmd->count("--seed")) {
        config.seed = o.seed;
    }
    if (cmd->count("--fair")) {
        config.fair = o.fair;
    }
    if (cmd->count("--epochs")) {
        config.epochs = o.epochs;
    }
    if (cmd->count("--mode")) {
        if (o.mode == "fft") {
            config.mode = TrainMode::kFft;
        } else if (o.mode == "lora") {
            config.mode = TrainMode::kLora;
        } else {
            throw data_error("--mode must be 'fft' or 'lora', got '" + o.mode + "'");
        }
    }
}

// Input paths may come from the --flag or from a config key of the same name.
std::string resolve_path(const CLI::App* cmd, const std::string& flag,
                         const std::string& flag_value, const KeyValueConfig& kv,
                         const std::string& key) {
    if (cmd->count(flag)) {
        return flag_value;
    }
    if (kv.has(key)) {
        return kv.get(key);
    }
    throw data_error("missing " + flag + " (and no '" + key + "' key in the config)");
}

std::vector<RunRecord> collect_run_records(const fs::path& root) {
    std::vector<fs::path> dirs;
    if (fs::exists(root / "config.cfg") && fs::exists(root / "metrics.csv")) {
        dirs.push_back(root);
    }
    for (const auto& entry : fs::recursive_directory_iterator(root)) {
        if (entry.is_directory() && fs::exists(entry.path() / "config.cfg") &&
            fs::exists(entry.path() / "metrics.csv")) {
            dirs.push_back(entry.path());
        }
    }
    std::sort(dirs.begin(), dirs.end());
    std::vector<RunRecord> records;
    for (const fs::path& dir : dirs) {
        RunRecord record;
        record.label = row_label(train_config_from(
            KeyValueConfig::parse_file((dir / "config.cfg").string())));
        record.metrics = parse_metrics_csv((dir / "metrics.csv").string());
        // keep only the table metrics
        std::map<std::string, double> kept;
        for (const MetricColumn& column : report_columns()) {
            auto it = record.metrics.find(column.key);
            if (it != record.metrics.end()) {
                kept.emplace(*it);
            }
        }
        record.metrics = std::move(kept);
        records.push_back(std::move(record));
    }
    return records;
}

void write_tables(const std::vector<RunRecord>& records, const fs::path& out_dir) {
    const ReportTable table = make_table(records);
    write_file(out_dir / "table.csv", render_csv(table));
    write_file(out_dir / "table.md", render_markdown(table));
    if (table.row_labels.size() >= 2) {
        write_file(out_dir / "normalized.csv",
                   render_normalized_csv(normalize_for_comparison(table)));
    }
}

int cmd_synth(const std::string& config_path, const std::string& out_path,
              const CLI::App* cmd, std::uint64_t seed) {
    KeyValueConfig kv = KeyValueConfig::parse_file(config_path);
    SyntheticSpec spec = synthetic_spec_from(kv);
    if (cmd->count("--seed")) {
        spec.seed = seed;
    }
    const Dataset dataset = synth_generate(spec);
    save_csv(dataset, out_path);
    std::cout << "wrote " << dataset.size() << " records to " << out_path << "\n";
    return 0;
}

int cmd_pretrain(const std::string& config_path, const std::string& data_path,
                 const std::string& out_dir, const CLI::App* cmd,
                 const CommonOverrides& overrides) {
    const KeyValueConfig kv = KeyValueConfig::parse_file(config_path);
    TrainConfig config = train_config_from(kv);
    apply_overrides(cmd, overrides, config);
    const Dataset dataset = load_csv(resolve_path(cmd, "--data", data_path, kv, "data"));
    const RunArtifact artifact = pretrain(config, dataset);
    write_run_artifact(artifact, out_dir);
    std::cout << "pretrained: best eval accuracy "
              << format_double(artifact.best_eval_accuracy) << " at epoch "
              << artifact.best_epoch << "\n";
    return 0;
}

int cmd_finetune(const std::string& config_path, const std::string& base_path,
                 const std::string& data_path, const std::string& out_dir,
                 const CLI::App* cmd, const CommonOverrides& overrides) {
    const KeyValueConfig kv = KeyValueConfig::parse_file(config_path);
    TrainConfig config = train_config_from(kv);
    apply_overrides(cmd, overrides, config);
    const MlpClassifier base = load_checkpoint(resolve_path(cmd, "--base", base_path, kv, "base"));
    const Dataset dataset = load_csv(resolve_path(cmd, "--data", data_path, kv, "data"));
    const RunArtifact artifact = finetune(config, base, dataset);
    write_run_artifact(artifact, out_dir);
    std::cout << "finetuned " << method_label(config) << ": best eval accuracy "
              << format_double(artifact.best_eval_accuracy) << " at epoch "
              << artifact.best_epoch << "\n";
    return 0;
}

int cmd_sweep(const std::string& config_path, const std::string& base_path,
              const std::string& data_path, const std::string& out_dir,
              const CLI::App* cmd) {
    const KeyValueConfig kv = KeyValueConfig::parse_file(config_path);
    const SweepSpec spec = sweep_spec_from(kv);
    const MlpClassifier base = load_checkpoint(resolve_path(cmd, "--base", base_path, kv, "base"));
    const Dataset dataset = load_csv(resolve_path(cmd, "--data", data_path, kv, "data"));
    const SweepResult result = sweep(spec, base, dataset);

    const fs::path root(out_dir);
    fs::create_directories(root);
    std::vector<RunRecord> records;
    std::ostringstream metrics_csv;
    std::ostringstream errors;
    metrics_csv << "lambda,rank,seed,metric,value\n";
    for (const SweepCell& cell : result.cells) {
        for (const RunArtifact& run : cell.runs) {
            const fs::path dir = root /
                ("lambda_" + format_double(cell.lambda) + "_rank_" + std::to_string(cell.rank)) /
                ("seed_" + std::to_string(run.config.seed));
            write_run_artifact(run, dir);
            records.push_back(run_record(run));
            for (const auto& [key, value] : to_kv_rows(run.final_metrics)) {
                metrics_csv << format_double(cell.lambda) << "," << cell.rank << ","
                            << run.config.seed << "," << key << "," << value << "\n";
            }
        }
        for (const std::string& error : cell.errors) {
            errors << "lambda=" << format_double(cell.lambda) << " rank=" << cell.rank
                   << " " << error << "\n";
        }
    }
    write_file(root / "metrics.csv", metrics_csv.str());
    if (!errors.str().empty()) {
        write_file(root / "errors.txt", errors.str());
    }
    if (records.empty()) {
        std::cerr << "sweep: every cell failed, see errors.txt\n";
        return 3;
    }
    write_tables(records, root);
    std::cout << "swept " << result.cells.size() << " cells into " << out_dir << "\n";
    return 0;
}

int cmd_eval(const std::string& checkpoint_path, const std::string& data_path,
             const std::string& group_key, std::uint64_t seed, const std::string& out_dir) {
    const MlpClassifier model = load_checkpoint(checkpoint_path);
    const Dataset dataset = load_csv(data_path);
    GroupKey key;
    if (group_key == "class") {
        key = GroupKey::kClassLabel;
    } else if (group_key == "sensitive") {
        key = GroupKey::kSensitiveAttribute;
    } else {
        throw data_error("--group-key must be 'class' or 'sensitive'");
    }
    const MetricsReport report = evaluate(model, dataset, key, seed);
    const std::string csv = render_metrics_csv(report);
    std::cout << csv;
    if (!out_dir.empty()) {
        fs::create_directories(out_dir);
        write_file(fs::path(out_dir) / "metrics.csv", csv);
    }
    return 0;
}

int cmd_fid(const std::string& a_path, const std::string& b_path, const CLI::App* cmd,
            std::size_t n, std::uint64_t seed) {
    EmbeddingSet a = load_embeddings_csv(a_path);
    EmbeddingSet b = load_embeddings_csv(b_path);
    const bool subsampled = cmd->count("--n") > 0;
    if (subsampled) {
        SeededRng rng(seed);
        a = subsample(a, n, rng);
        b = subsample(b, n, rng);
    }
    const FidResult result = fid(a, b);
    std::cout << format_double(result.distance) << "\n";
    if (subsampled) {
        std::cout << "# subsample n=" << n << " seed=" << seed << "\n";
    }
    if (result.regularized_a || result.regularized_b) {
        std::cout << "# regularized_a=" << (result.regularized_a ? 1 : 0)
                  << " regularized_b=" << (result.regularized_b ? 1 : 0) << "\n";
    }
    return 0;
}

int cmd_report(const std::string& runs_dir, const std::string& out_dir) {
    const std::vector<RunRecord> records = collect_run_records(runs_dir);
    if (records.empty()) {
        throw data_error("report: no run artifacts under '" + runs_dir + "'");
    }
    fs::create_directories(out_dir);
    write_tables(records, out_dir);
    std::cout << "reported " << records.size() << " runs into " << out_dir << "\n";
    return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
    CLI::App app{"FairLoRA: fairness-regularized low-rank fine-tuning at desk scale"};
    app.require_subcommand(1);

    std::string config_path, data_path, base_path, out_path;
    std::string checkpoint_path, group_key = "class";
    std::string a_path, b_path, runs_dir;
    std::uint64_t seed = 0;
    std::size_t subsample_n = 0;
    CommonOverrides overrides;

    CLI::App* synth_cmd = app.add_subcommand("synth", "Generate a synthetic dataset CSV");
    synth_cmd->add_option("--config", config_path, "Synthetic spec config")->required();
    synth_cmd->add_option("--out", out_path, "Output CSV path")->required();
    synth_cmd->add_option("--seed", seed, "Override the generator seed");

    CLI::App* pretrain_cmd = app.add_subcommand("pretrain", "Train a base model (FFT)");
    pretrain_cmd->add_option("--config", config_path, "Run config")->required();
    pretrain_cmd->add_option("--data", data_path, "Pretraining dataset CSV (or 'data' config key)");
    pretrain_cmd->add_option("--out", out_path, "Artifact directory")->required();
    add_override_options(pretrain_cmd, overrides);

    CLI::App* finetune_cmd = app.add_subcommand("finetune", "Fine-tune from a base checkpoint");
    finetune_cmd->add_option("--config", config_path, "Run config")->required();
    finetune_cmd->add_option("--base", base_path, "Base checkpoint (or 'base' config key)");
    finetune_cmd->add_option("--data", data_path, "Task dataset CSV (or 'data' config key)");
    finetune_cmd->add_option("--out", out_path, "Artifact directory")->required();
    add_override_options(finetune_cmd, overrides);

    CLI::App* sweep_cmd = app.add_subcommand("sweep", "Grid of lambda x rank x seeds");
    sweep_cmd->add_option("--config", config_path, "Sweep config")->required();
    sweep_cmd->add_option("--base", base_path, "Base checkpoint (or 'base' config key)");
    sweep_cmd->add_option("--data", data_path, "Task dataset CSV (or 'data' config key)");
    sweep_cmd->add_option("--out", out_path, "Sweep output directory")->required();

    CLI::App* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint");
    eval_cmd->add_option("--checkpoint", checkpoint_path, "Model checkpoint")->required();
    eval_cmd->add_option("--data", data_path, "Eval dataset CSV")->required();
    eval_cmd->add_option("--group-key", group_key, "Grouping: class|sensitive");
    eval_cmd->add_option("--seed", seed, "Probe seed");
    eval_cmd->add_option("--out", out_path, "Optional output directory");

    CLI::App* fid_cmd = app.add_subcommand("fid", "Frechet distance between embedding CSVs");
    fid_cmd->add_option("--a", a_path, "First embedding CSV")->required();
    fid_cmd->add_option("--b", b_path, "Second embedding CSV")->required();
    fid_cmd->add_option("--n", subsample_n, "Subsample both sets to n rows");
    fid_cmd->add_option("--seed", seed, "Subsample seed");

    CLI::App* report_cmd = app.add_subcommand("report", "Aggregate run artifacts into tables");
    report_cmd->add_option("--runs", runs_dir, "Directory of run artifacts")->required();
    report_cmd->add_option("--out", out_path, "Report output directory")->required();

    std::vector<const char*> argv;
    argv.push_back("fairlora");
    for (const std::string& arg : args) {
        argv.push_back(arg.c_str());
    }
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    try {
        if (synth_cmd->parsed()) {
            return cmd_synth(config_path, out_path, synth_cmd, seed);
        }
        if (pretrain_cmd->parsed()) {
            return cmd_pretrain(config_path, data_path, out_path, pretrain_cmd, overrides);
        }
        if (finetune_cmd->parsed()) {
            return cmd_finetune(config_path, base_path, data_path, out_path, finetune_cmd,
                                overrides);
        }
        if (sweep_cmd->parsed()) {
            return cmd_sweep(config_path, base_path, data_path, out_path, sweep_cmd);
        }
        if (eval_cmd->parsed()) {
            return cmd_eval(checkpoint_path, data_path, group_key, seed, out_path);
        }
        if (fid_cmd->parsed()) {
            return cmd_fid(a_path, b_path, fid_cmd, subsample_n, seed);
        }
        if (report_cmd->parsed()) {
            return cmd_report(runs_dir, out_path);
        }
    } catch (const numeric_error& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    } catch (const data_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}

}  // namespace fairlora
