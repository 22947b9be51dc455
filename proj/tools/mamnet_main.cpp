#include <chrono>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "mamnet/checkpoint.hpp"
#include "mamnet/config.hpp"
#include "mamnet/data.hpp"
#include "mamnet/error.hpp"
#include "mamnet/evaluation.hpp"
#include "mamnet/model.hpp"

namespace {

using namespace mamnet;

struct Flags {
    std::string config;
    std::string data;
    std::string model;
    std::string out;
    std::string report;
    std::string grid;
    std::optional<std::uint64_t> seed;
    std::string seeds;
};

void add_common_flags(CLI::App* cmd, Flags& flags) {
    cmd->add_option("--config", flags.config, "flat key = value config file");
    cmd->add_option("--data", flags.data, "input CSV path");
    cmd->add_option("--model", flags.model, "checkpoint path");
    cmd->add_option("--out", flags.out, "output path");
    cmd->add_option("--report", flags.report, "report output path");
    cmd->add_option("--seed", flags.seed, "seed (default 42)");
    cmd->add_option("--seeds", flags.seeds, "comma-separated seed list");
}

RunConfig effective_config(const Flags& flags) {
    RunConfig c = flags.config.empty() ? RunConfig{} : parse_config_file(flags.config);
    if (!flags.data.empty()) c.data_path = flags.data;
    if (!flags.model.empty()) c.model_path = flags.model;
    if (!flags.out.empty()) c.out_path = flags.out;
    if (!flags.report.empty()) c.report_path = flags.report;
    if (!flags.grid.empty()) c.grid = flags.grid;
    if (flags.seed) {
        c.seed = *flags.seed;
        c.synth.seed = *flags.seed;
    }
    if (!flags.seeds.empty()) apply_config_kv(c, "seeds", flags.seeds);
    c.validate();
    std::cout << "# effective config, hash " << config_hash(c) << "\n"
              << serialize_config(c) << "\n";
    return c;
}

FlowTable load_input(const RunConfig& c) {
    if (c.data_path.empty()) {
        std::cout << "no --data given, generating from the synth spec\n";
        return synth_generate(c.synth);
    }
    return load_flows(c.data_path, c.label_column);
}

std::string require_path(const std::string& path, const std::string& flag,
                         const std::string& command) {
    if (path.empty()) {
        throw ConfigError(command + " requires " + flag);
    }
    return path;
}

int cmd_generate(const Flags& flags) {
    const RunConfig c = effective_config(flags);
    const std::string out = require_path(c.out_path, "--out", "generate");
    const FlowTable table = synth_generate(c.synth);
    save_flows(table, out, "config_hash = " + config_hash(c));

    std::ofstream sidecar(out + ".spec.txt");
    if (!sidecar) throw DataError("generate: cannot write '" + out + ".spec.txt'");
    sidecar << "# config_hash = " << config_hash(c) << "\n" << synth_spec_to_text(c.synth);

    std::size_t positives = 0;
    for (int label : table.labels) positives += label;
    std::cout << "wrote " << table.row_count() << " rows (" << positives
              << " anomalous) to " << out << "\n";
    return 0;
}

int cmd_train(const Flags& flags) {
    RunConfig c = effective_config(flags);
    const std::string out = require_path(c.out_path, "--out", "train");
    const FlowTable table = load_input(c);

    const PreparedData prep = prepare_data(table, c.pipeline, c.seed);
    ModelConfig mc = c.model;
    mc.feature_dim = prep.stats.mins.size();
    mc.validate();

    Rng init_rng(c.seed, "model_init");
    ModelParams params = model_init(mc, init_rng);

    std::vector<Tensor> windows;
    std::vector<double> targets;
    for (const Window& w : prep.train.windows) {
        windows.push_back(w.features);
        targets.push_back(w.target);
    }
    std::cout << "training on " << windows.size() << " windows ("
              << prep.test.windows.size() << " held out), " << mc.feature_dim
              << " features\n";
    const FitTrace trace =
        fit(params, mc, windows, targets, {c.epochs, c.batch_size, c.learning_rate, c.seed});

    Checkpoint ck{c, mc.feature_dim, std::move(params), prep.stats,
                  prep.selected_features, {}};
    for (std::size_t j : prep.selected_features) {
        ck.feature_names.push_back(table.feature_names[j]);
    }
    save_checkpoint(out, ck);

    const std::string trace_path = c.report_path.empty() ? out + ".loss.csv" : c.report_path;
    std::ofstream loss_out(trace_path);
    if (!loss_out) throw DataError("train: cannot write '" + trace_path + "'");
    loss_out << "# config_hash = " << config_hash(c) << "\n";
    loss_out << "epoch,loss\n";
    loss_out.precision(12);
    for (std::size_t e = 0; e < trace.epoch_loss.size(); ++e) {
        loss_out << e + 1 << "," << trace.epoch_loss[e] << "\n";
    }

    if (!trace.epoch_loss.empty()) {
        std::cout << "final training loss " << trace.epoch_loss.back() << "\n";
    }
    const auto metrics = evaluate_windows(ck.params, mc, prep.test);
    for (const auto& [name, value] : metrics) {
        std::cout << "test " << name << " = " << value << "\n";
    }
    std::cout << "checkpoint written to " << out << "\n";
    return 0;
}

int cmd_eval(const Flags& flags) {
    const RunConfig c = effective_config(flags);
    const std::string model_path = require_path(c.model_path, "--model", "eval");
    const std::string report_path = require_path(c.report_path, "--report", "eval");
    const Checkpoint ck = load_checkpoint(model_path);
    const FlowTable table = load_flows(require_path(c.data_path, "--data", "eval"),
                                       ck.config.label_column);

    const WindowSet windows = apply_preprocessing(table, ck.selected_features, ck.stats,
                                                  ck.config.pipeline.window);
    const ModelConfig mc = ck.model_config();
    const auto metrics = evaluate_windows(ck.params, mc, windows);

    std::ofstream out(report_path);
    if (!out) throw DataError("eval: cannot write '" + report_path + "'");
    out << "# config_hash = " << config_hash(ck.config) << "\n";
    out << "metric,value\n";
    out.precision(12);
    for (const auto& [name, value] : metrics) {
        const bool percent = name != "mae" && name != "mse";
        out << name << "," << (percent ? value * 100.0 : value) << "\n";
        std::cout << name << " = " << (percent ? value * 100.0 : value)
                  << (percent ? " %" : "") << "\n";
    }
    std::cout << "report written to " << report_path << "\n";
    return 0;
}

int cmd_ablate(const Flags& flags) {
    const RunConfig c = effective_config(flags);
    const std::string report_path = require_path(c.report_path, "--report", "ablate");
    const FlowTable table = load_input(c);

    const EvalReport report = run_ablation(table, c, c.seeds);
    write_report_csv(report, report_path);
    write_report_jsonl(report, report_path + ".jsonl");

    for (const auto& failure : report.failures) {
        std::cout << "failed: " << failure << "\n";
    }
    std::cout.precision(6);
    for (const ReportRow& row : report.rows) {
        const double scale =
            (row.metric == "mae" || row.metric == "mse") ? 1.0 : 100.0;
        std::cout << row.variant << " " << row.metric << " = " << row.mean * scale
                  << " (" << row.ci_low * scale << " - " << row.ci_high * scale << ")";
        if (row.p_vs_full) std::cout << " p_vs_full=" << *row.p_vs_full;
        std::cout << "\n";
    }
    std::cout << "report written to " << report_path << "\n";
    return 0;
}

int cmd_gridsearch(const Flags& flags) {
    const RunConfig c = effective_config(flags);
    const std::string report_path = require_path(c.report_path, "--report", "gridsearch");
    if (c.grid.empty()) throw ConfigError("gridsearch requires --grid or a grid config key");
    const FlowTable table = load_input(c);

    const GridAxes axes = parse_grid(c.grid);
    const GridResult result = grid_search(table, c, axes, c.validation_fraction, c.seed);

    std::ofstream out(report_path);
    if (!out) throw DataError("gridsearch: cannot write '" + report_path + "'");
    out << "# config_hash = " << config_hash(c) << "\n";
    for (const auto& [key, values] : axes) out << key << ",";
    out << result.metric << "\n";
    out.precision(12);
    for (const GridEntry& entry : result.table) {
        for (const auto& [key, value] : entry.assignment) out << value << ",";
        if (entry.score) {
            out << *entry.score;
        } else {
            out << "n/a";
        }
        out << "\n";
    }

    std::cout << "best candidate (#" << result.best_index << "):";
    for (const auto& [key, value] : result.table[result.best_index].assignment) {
        std::cout << " " << key << "=" << value;
    }
    std::cout << " with " << result.metric << " = "
              << *result.table[result.best_index].score << "\n";
    if (!c.out_path.empty()) {
        std::ofstream best(c.out_path);
        if (!best) throw DataError("gridsearch: cannot write '" + c.out_path + "'");
        best << "# best config from gridsearch, base hash " << config_hash(c) << "\n"
             << serialize_config(result.best);
        std::cout << "best config written to " << c.out_path << "\n";
    }
    return 0;
}

int cmd_predict(const Flags& flags) {
    const RunConfig c = effective_config(flags);
    const std::string model_path = require_path(c.model_path, "--model", "predict");
    const std::string out_path = require_path(c.out_path, "--out", "predict");
    const Checkpoint ck = load_checkpoint(model_path);
    const FlowTable table = load_flows(require_path(c.data_path, "--data", "predict"),
                                       ck.config.label_column);

    const WindowSet windows = apply_preprocessing(table, ck.selected_features, ck.stats,
                                                  ck.config.pipeline.window);
    const ModelConfig mc = ck.model_config();

    std::vector<Tensor> features;
    features.reserve(windows.windows.size());
    for (const Window& w : windows.windows) features.push_back(w.features);

    const auto start = std::chrono::steady_clock::now();
    const Prediction pred = predict(ck.params, mc, features);
    const auto stop = std::chrono::steady_clock::now();
    const double total_ms =
        std::chrono::duration<double, std::milli>(stop - start).count();

    std::ofstream out(out_path);
    if (!out) throw DataError("predict: cannot write '" + out_path + "'");
    out << "# config_hash = " << config_hash(ck.config) << "\n";
    out << "window,score,label\n";
    out.precision(17);
    for (std::size_t i = 0; i < pred.scores.size(); ++i) {
        out << i << "," << pred.scores[i] << "," << pred.labels[i] << "\n";
    }

    std::cout << "predicted " << pred.scores.size() << " windows\n";
    if (!pred.scores.empty()) {
        std::cout << "mean per-window latency "
                  << total_ms / static_cast<double>(pred.scores.size()) << " ms\n";
    }
    std::cout << "scores written to " << out_path << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"MamNet: hybrid time/frequency network traffic forecaster and "
                 "anomaly detector"};
    app.require_subcommand(1);

    Flags flags;
    CLI::App* generate = app.add_subcommand("generate", "write a synthetic traffic CSV");
    CLI::App* train = app.add_subcommand("train", "train a model and write a checkpoint");
    CLI::App* eval = app.add_subcommand("eval", "score a checkpoint on labeled data");
    CLI::App* ablate = app.add_subcommand("ablate", "run the ablation study");
    CLI::App* gridsearch =
        app.add_subcommand("gridsearch", "search a config grid on a validation slice");
    CLI::App* predict = app.add_subcommand("predict", "write per-window scores");
    for (CLI::App* cmd : {generate, train, eval, ablate, gridsearch, predict}) {
        add_common_flags(cmd, flags);
    }
    gridsearch->add_option("--grid", flags.grid,
                           "grid spec, e.g. \"state_dim = 4, 8 ; epochs = 5, 10\"");

    try {
        app.parse(argc, argv);
        if (generate->parsed()) return cmd_generate(flags);
        if (train->parsed()) return cmd_train(flags);
        if (eval->parsed()) return cmd_eval(flags);
        if (ablate->parsed()) return cmd_ablate(flags);
        if (gridsearch->parsed()) return cmd_gridsearch(flags);
        if (predict->parsed()) return cmd_predict(flags);
        return 1;
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    } catch (const ConfigError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 1;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 2;
    } catch (const NumericError& e) {
        std::cerr << "numeric failure: " << e.what() << "\n";
        return 3;
    }
}
