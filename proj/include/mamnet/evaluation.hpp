#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mamnet/config.hpp"
#include "mamnet/data.hpp"
#include "mamnet/model.hpp"
#include "mamnet/stats.hpp"

namespace mamnet {

/// One variant x metric aggregate over seeds.
struct ReportRow {
    std::string variant;
    std::string metric;
    double mean = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    std::optional<double> p_vs_full;  // Welch p against the full model
    std::size_t n = 0;                // seeds contributing
};

struct EvalReport {
    std::vector<ReportRow> rows;
    std::string config_hash;
    std::vector<std::uint64_t> seeds;
    std::string provenance;
    std::vector<std::string> failures;  // "variant seed=N: message"
};

/// Metric values of a single trained run on its test windows: classification
/// metrics for classify, mae/mse for regress. Undefined metrics are absent.
std::map<std::string, double> evaluate_windows(const ModelParams& params,
                                               const ModelConfig& config,
                                               const WindowSet& test);

/// Trains one variant on prepared data and reports its metrics.
std::map<std::string, double> single_run(const FlowTable& data, const RunConfig& config,
                                         Variant variant, std::uint64_t seed,
                                         const PreparedData* prepared = nullptr);

/// Full ablation harness: per variant x seed runs the entire pipeline
/// (split, select, normalize, window, balance, train, predict, metrics),
/// then aggregates means, 95% CIs, and Welch p-values against the full
/// model. A numeric failure marks that variant failed without disturbing
/// the others. Runs execute concurrently; aggregation is order-independent.
EvalReport run_ablation(const FlowTable& data, const RunConfig& config,
                        const std::vector<std::uint64_t>& seeds);

struct GroupMetrics {
    std::string tag;
    Confusion counts;
};

/// One confusion per tag value, sorted by tag.
std::vector<GroupMetrics> grouped_metrics(std::span<const int> labels,
                                          std::span<const int> predictions,
                                          std::span<const std::string> tags);

using GridAxes = std::vector<std::pair<std::string, std::vector<std::string>>>;

/// Parses "key = v1, v2 ; key2 = v3" into named value lists in declaration
/// order.
GridAxes parse_grid(const std::string& text);

struct GridEntry {
    std::vector<std::pair<std::string, std::string>> assignment;
    std::optional<double> score;  // F1 (classify) or MSE (regress); absent on failure
    std::string error;            // why the candidate failed to score, if it did
};

struct GridResult {
    RunConfig best;
    std::size_t best_index = 0;
    std::vector<GridEntry> table;
    std::string metric;  // "f1" or "mse"
};

/// Enumerates the cartesian product in declaration order, trains each
/// candidate on the front of the training windows, and scores it on a
/// held-out validation slice. Ties keep the first enumerated candidate.
GridResult grid_search(const FlowTable& data, const RunConfig& base, const GridAxes& grid,
                       double validation_fraction, std::uint64_t seed);

void write_report_csv(const EvalReport& report, const std::string& path);
void write_report_jsonl(const EvalReport& report, const std::string& path);

}  // namespace mamnet
