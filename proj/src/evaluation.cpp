#include "mamnet/evaluation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "mamnet/error.hpp"

namespace mamnet {

namespace {

bool is_percent_metric(const std::string& metric) {
    return metric == "accuracy" || metric == "recall" || metric == "precision" ||
           metric == "f1";
}

std::vector<std::string> metric_order(Task task) {
    if (task == Task::regress) return {"mae", "mse"};
    return {"accuracy", "recall", "precision", "f1"};
}

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r\n");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t\r\n");
    return s.substr(begin, end - begin + 1);
}

}  // namespace

std::map<std::string, double> evaluate_windows(const ModelParams& params,
                                               const ModelConfig& config,
                                               const WindowSet& test) {
    std::vector<Tensor> features;
    features.reserve(test.windows.size());
    for (const Window& w : test.windows) features.push_back(w.features);
    const Prediction pred = predict(params, config, features);

    std::map<std::string, double> out;
    if (config.task == Task::classify) {
        std::vector<int> labels;
        labels.reserve(test.windows.size());
        for (const Window& w : test.windows) labels.push_back(w.target >= 0.5 ? 1 : 0);
        const Confusion c = confusion(labels, pred.labels);
        if (const auto v = accuracy(c)) out["accuracy"] = *v;
        if (const auto v = recall(c)) out["recall"] = *v;
        if (const auto v = precision(c)) out["precision"] = *v;
        if (const auto v = f1(c)) out["f1"] = *v;
    } else {
        std::vector<double> actuals;
        actuals.reserve(test.windows.size());
        for (const Window& w : test.windows) actuals.push_back(w.target);
        out["mae"] = mae(pred.scores, actuals);
        out["mse"] = mse(pred.scores, actuals);
    }
    return out;
}

std::map<std::string, double> single_run(const FlowTable& data, const RunConfig& config,
                                         Variant variant, std::uint64_t seed,
                                         const PreparedData* prepared) {
    PreparedData local;
    if (!prepared) {
        local = prepare_data(data, config.pipeline, seed);
        prepared = &local;
    }

    ModelConfig mc = config.model;
    mc.variant = variant;
    mc.feature_dim = prepared->stats.mins.size();
    mc.validate();

    Rng init_rng(seed, "model_init");
    ModelParams params = model_init(mc, init_rng);

    std::vector<Tensor> windows;
    std::vector<double> targets;
    windows.reserve(prepared->train.windows.size());
    for (const Window& w : prepared->train.windows) {
        windows.push_back(w.features);
        targets.push_back(w.target);
    }
    FitOptions opts{config.epochs, config.batch_size, config.learning_rate, seed};
    fit(params, mc, windows, targets, opts);

    return evaluate_windows(params, mc, prepared->test);
}

EvalReport run_ablation(const FlowTable& data, const RunConfig& config,
                        const std::vector<std::uint64_t>& seeds_in) {
    if (seeds_in.empty()) throw ConfigError("run_ablation: need at least one seed");
    // Sorted (variant, seed) reduction order makes the report independent of
    // both scheduling and the order seeds were given in.
    std::vector<std::uint64_t> seeds = seeds_in;
    std::sort(seeds.begin(), seeds.end());
    seeds.erase(std::unique(seeds.begin(), seeds.end()), seeds.end());
    const std::vector<Variant>& variants = config.ablate_variants;

    // The preprocessing is variant-independent, so prepare once per seed.
    std::vector<PreparedData> prepared(seeds.size());
    for (std::size_t s = 0; s < seeds.size(); ++s) {
        prepared[s] = prepare_data(data, config.pipeline, seeds[s]);
    }

    struct RunResult {
        std::map<std::string, double> metrics;
        std::string error;
    };
    std::vector<RunResult> results(variants.size() * seeds.size());

    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= results.size()) return;
            const Variant variant = variants[i / seeds.size()];
            const std::uint64_t seed = seeds[i % seeds.size()];
            try {
                results[i].metrics =
                    single_run(data, config, variant, seed, &prepared[i % seeds.size()]);
            } catch (const std::exception& e) {
                results[i].error = to_string(variant) + " seed=" + std::to_string(seed) +
                                   ": " + e.what();
            }
        }
    };
    const std::size_t threads =
        std::min<std::size_t>(std::max(1u, std::thread::hardware_concurrency()),
                              results.size());
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();

    EvalReport report;
    report.config_hash = config_hash(config);
    report.seeds = seeds;
    report.provenance = data.provenance;

    // A numeric failure in any seed marks the whole variant failed.
    std::vector<bool> variant_failed(variants.size(), false);
    for (std::size_t v = 0; v < variants.size(); ++v) {
        for (std::size_t s = 0; s < seeds.size(); ++s) {
            const RunResult& r = results[v * seeds.size() + s];
            if (!r.error.empty()) {
                variant_failed[v] = true;
                report.failures.push_back(r.error);
            }
        }
    }

    const std::vector<std::string> metrics = metric_order(config.model.task);
    auto values_for = [&](std::size_t v, const std::string& metric) {
        std::vector<double> values;
        for (std::size_t s = 0; s < seeds.size(); ++s) {
            const auto& m = results[v * seeds.size() + s].metrics;
            const auto it = m.find(metric);
            if (it != m.end()) values.push_back(it->second);
        }
        return values;
    };

    std::ptrdiff_t full_index = -1;
    for (std::size_t v = 0; v < variants.size(); ++v) {
        if (variants[v] == Variant::full && !variant_failed[v]) full_index = v;
    }

    for (std::size_t v = 0; v < variants.size(); ++v) {
        if (variant_failed[v]) continue;
        for (const std::string& metric : metrics) {
            const std::vector<double> values = values_for(v, metric);
            if (values.empty()) continue;
            ReportRow row;
            row.variant = to_string(variants[v]);
            row.metric = metric;
            row.n = values.size();
            if (values.size() >= 2) {
                const Interval ci = confidence_interval(values);
                row.mean = ci.mean;
                row.ci_low = ci.low;
                row.ci_high = ci.high;
            } else {
                row.mean = row.ci_low = row.ci_high = values.front();
            }
            if (full_index >= 0 && variants[v] != Variant::full) {
                const std::vector<double> full_values =
                    values_for(static_cast<std::size_t>(full_index), metric);
                if (full_values.size() >= 2 && values.size() >= 2) {
                    row.p_vs_full = welch_t_test(full_values, values).p;
                }
            }
            report.rows.push_back(std::move(row));
        }
    }
    return report;
}

std::vector<GroupMetrics> grouped_metrics(std::span<const int> labels,
                                          std::span<const int> predictions,
                                          std::span<const std::string> tags) {
    if (labels.size() != predictions.size() || labels.size() != tags.size()) {
        throw DataError("grouped_metrics: length mismatch");
    }
    std::map<std::string, Confusion> groups;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        Confusion& c = groups[tags[i]];
        const Confusion one = confusion(labels.subspan(i, 1), predictions.subspan(i, 1));
        c += one;
    }
    std::vector<GroupMetrics> out;
    out.reserve(groups.size());
    for (auto& [tag, counts] : groups) out.push_back({tag, counts});
    return out;
}

GridAxes parse_grid(const std::string& text) {
    GridAxes axes;
    std::istringstream in(text);
    std::string entry;
    while (std::getline(in, entry, ';')) {
        const std::string t = trim(entry);
        if (t.empty()) continue;
        const std::size_t eq = t.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("grid entry '" + t + "' is not key = values");
        }
        const std::string key = trim(t.substr(0, eq));
        std::vector<std::string> values;
        std::istringstream vals(t.substr(eq + 1));
        std::string v;
        while (std::getline(vals, v, ',')) {
            const std::string tv = trim(v);
            if (!tv.empty()) values.push_back(tv);
        }
        if (key.empty() || values.empty()) {
            throw ConfigError("grid entry '" + t + "' has no values");
        }
        axes.emplace_back(key, std::move(values));
    }
    if (axes.empty()) throw ConfigError("grid is empty");
    return axes;
}

GridResult grid_search(const FlowTable& data, const RunConfig& base, const GridAxes& grid,
                       double validation_fraction, std::uint64_t seed) {
    if (grid.empty()) throw ConfigError("grid_search: empty grid");
    if (validation_fraction <= 0.0 || validation_fraction >= 1.0) {
        throw ConfigError("grid_search: validation fraction must be in (0, 1)");
    }

    std::size_t total = 1;
    for (const auto& [key, values] : grid) total *= values.size();

    GridResult result;
    result.metric = base.model.task == Task::classify ? "f1" : "mse";
    const bool maximize = base.model.task == Task::classify;

    std::optional<double> best_score;
    std::optional<std::size_t> best_index;

    for (std::size_t index = 0; index < total; ++index) {
        // Decode with the first declared axis outermost.
        GridEntry entry;
        std::size_t rem = index;
        std::size_t block = total;
        RunConfig candidate = base;
        for (const auto& [key, values] : grid) {
            block /= values.size();
            const std::string& value = values[(rem / block) % values.size()];
            rem %= block;
            apply_config_kv(candidate, key, value);
            entry.assignment.emplace_back(key, value);
        }

        try {
            PipelineOptions unbalanced = candidate.pipeline;
            const BalanceMode balance = unbalanced.balance;
            unbalanced.balance = BalanceMode::none;
            PreparedData prep = prepare_data(data, unbalanced, seed);

            const std::size_t n = prep.train.windows.size();
            const std::size_t n_val = static_cast<std::size_t>(
                std::llround(validation_fraction * static_cast<double>(n)));
            if (n_val == 0 || n_val >= n) throw DataError("validation slice is empty");

            WindowSet val;
            val.options = prep.train.options;
            val.windows.assign(prep.train.windows.end() - static_cast<std::ptrdiff_t>(n_val),
                               prep.train.windows.end());
            prep.train.windows.resize(n - n_val);
            if (!candidate.pipeline.window.regress_next) {
                balance_window_set(prep.train, balance, candidate.pipeline.balance_ratio,
                                   seed);
            }

            ModelConfig mc = candidate.model;
            mc.feature_dim = prep.stats.mins.size();
            mc.validate();
            Rng init_rng(seed, "model_init");
            ModelParams params = model_init(mc, init_rng);
            std::vector<Tensor> windows;
            std::vector<double> targets;
            for (const Window& w : prep.train.windows) {
                windows.push_back(w.features);
                targets.push_back(w.target);
            }
            FitOptions opts{candidate.epochs, candidate.batch_size,
                            candidate.learning_rate, seed};
            fit(params, mc, windows, targets, opts);

            const auto metrics = evaluate_windows(params, mc, val);
            const auto it = metrics.find(result.metric);
            if (it != metrics.end()) {
                entry.score = it->second;
            } else {
                entry.error = result.metric + " undefined on the validation slice";
            }
        } catch (const std::exception& e) {
            entry.score.reset();
            entry.error = e.what();
        }

        if (entry.score) {
            const bool better =
                !best_score ||
                (maximize ? *entry.score > *best_score : *entry.score < *best_score);
            if (better) {
                best_score = entry.score;
                best_index = index;
            }
        }
        result.table.push_back(std::move(entry));
    }

    if (!best_index) {
        std::string detail;
        if (!result.table.empty()) detail = ": first failure: " + result.table[0].error;
        throw DataError("grid_search: every candidate failed to score" + detail);
    }
    result.best_index = *best_index;
    result.best = base;
    for (const auto& [key, value] : result.table[*best_index].assignment) {
        apply_config_kv(result.best, key, value);
    }
    return result;
}

namespace {

double report_scale(const ReportRow& row) { return is_percent_metric(row.metric) ? 100.0 : 1.0; }

}  // namespace

void write_report_csv(const EvalReport& report, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("write_report_csv: cannot write '" + path + "'");
    out << "# config_hash = " << report.config_hash << "\n";
    out << "# provenance = " << report.provenance << "\n";
    out << "# seeds =";
    for (const auto s : report.seeds) out << " " << s;
    out << "\n";
    for (const auto& f : report.failures) out << "# failed: " << f << "\n";
    out << "variant,metric,mean,ci_low,ci_high,p_vs_full,n\n";
    out.precision(12);
    for (const ReportRow& row : report.rows) {
        const double scale = report_scale(row);
        out << row.variant << "," << row.metric << "," << row.mean * scale << ","
            << row.ci_low * scale << "," << row.ci_high * scale << ",";
        if (row.p_vs_full) out << *row.p_vs_full;
        out << "," << row.n << "\n";
    }
}

void write_report_jsonl(const EvalReport& report, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("write_report_jsonl: cannot write '" + path + "'");
    for (const ReportRow& row : report.rows) {
        nlohmann::json j;
        j["variant"] = row.variant;
        j["metric"] = row.metric;
        const double scale = report_scale(row);
        j["unit"] = is_percent_metric(row.metric) ? "percent" : "raw";
        j["mean"] = row.mean * scale;
        j["ci_low"] = row.ci_low * scale;
        j["ci_high"] = row.ci_high * scale;
        if (row.p_vs_full) {
            j["p_vs_full"] = *row.p_vs_full;
        } else {
            j["p_vs_full"] = nullptr;
        }
        j["n"] = row.n;
        j["config_hash"] = report.config_hash;
        j["seeds"] = report.seeds;
        out << j.dump() << "\n";
    }
}

}  // namespace mamnet
