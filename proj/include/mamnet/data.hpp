#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mamnet/rng.hpp"
#include "mamnet/tensor.hpp"

namespace mamnet {

/// Rows of numeric flow features with a binary anomaly label (1 = anomalous).
/// row_tags, when non-empty, carry one provenance tag per row ("normal" or a
/// synthetic event type) for grouped metrics.
struct FlowTable {
    std::vector<std::string> feature_names;
    std::vector<std::vector<double>> rows;  // R x F
    std::vector<int> labels;                // R, values in {0, 1}
    std::vector<std::string> row_tags;      // empty or length R
    std::string provenance;
    std::size_t dropped_rows = 0;
    std::size_t dropped_columns = 0;

    std::size_t row_count() const { return rows.size(); }
    std::size_t feature_count() const { return feature_names.size(); }
};

/// Loads a comma-separated UTF-8 file with a header row. Lines starting with
/// '#' are ignored. Feature columns where most cells do not parse as decimal
/// floats are dropped (counted in dropped_columns); remaining rows with any
/// unparseable cell, or a label outside {0, 1}, are dropped (counted in
/// dropped_rows). Quoted separators are not supported.
FlowTable load_flows(const std::string& path, const std::string& label_column = "label");

void save_flows(const FlowTable& table, const std::string& path,
                const std::string& header_comment = "");

/// Per-feature min and max fitted on training rows only.
struct NormStats {
    std::vector<double> mins;
    std::vector<double> maxs;
    std::size_t fitted_rows = 0;
};

/// Fits on rows [begin, end) of the table.
NormStats minmax_fit(const FlowTable& table, std::size_t begin, std::size_t end);

/// v' = (v - min) / (max - min), clamped to [0, 1]; a constant feature maps
/// to 0. Returns a transformed copy of the whole table.
FlowTable minmax_apply(const NormStats& stats, const FlowTable& table);

/// Keeps features whose |Pearson r| against the label over rows
/// [begin, end) meets the threshold. Features with undefined r (constant
/// column or constant label) are dropped; if nothing survives, the single
/// highest-|r| feature is retained.
std::vector<std::size_t> correlation_filter(const FlowTable& table, std::size_t begin,
                                            std::size_t end, double threshold = 0.05);

/// Simplified recursive feature elimination over rows [begin, end): fit a
/// logistic probe (single affine layer, 5 Adam epochs) on min-max-normalized
/// features, drop the smallest-|weight| feature, refit, until keep_k remain.
/// Deterministic under the rng's seed.
std::vector<std::size_t> rfe(const FlowTable& table, std::size_t begin, std::size_t end,
                             std::size_t keep_k, Rng& rng);

/// Projection of the table onto the given feature columns.
FlowTable select_features(const FlowTable& table, const std::vector<std::size_t>& kept);

/// SMOTE: each synthetic row is p + lambda*(q - p) with p a random minority
/// row, q one of its k nearest minority neighbours (Euclidean), lambda
/// uniform in [0, 1]. Requires at least two minority rows.
std::vector<std::vector<double>> smote_oversample(
    const std::vector<std::vector<double>>& minority, std::size_t k_neighbors,
    std::size_t target_count, Rng& rng);

/// Uniform sample without replacement; target must not exceed the input size.
std::vector<std::vector<double>> undersample(const std::vector<std::vector<double>>& rows,
                                             std::size_t target_count, Rng& rng);

enum class LabelRule { any, fraction };

struct WindowOptions {
    std::size_t width = 64;
    std::size_t hop = 4;
    LabelRule rule = LabelRule::any;
    double fraction = 0.5;  // threshold when rule == fraction
    bool regress_next = false;  // target = next row's feature 0 instead of a class label
};

struct Window {
    Tensor features;  // W x F
    double target;    // class label in {0,1} or regression target
    std::string tag;  // "normal" or the first anomalous row's tag
};

struct WindowSet {
    std::vector<Window> windows;
    WindowOptions options;
};

/// Windows start at 0, hop, 2*hop, ... and lie fully inside the series.
/// Default label rule: 1 iff any contained row is anomalous. With
/// regress_next, the target is the following row's first feature and the
/// final window is emitted only if that row exists.
WindowSet make_windows(const FlowTable& table, const WindowOptions& options);

struct SineComponent {
    double amplitude = 1.0;
    double period = 288.0;  // samples
    double phase = 0.0;
};

enum class EventType { burst, periodic, drift };

std::string to_string(EventType t);
EventType event_type_from_string(const std::string& s);

struct EventSpec {
    EventType type = EventType::burst;
    double rate = 0.01;      // target fraction of samples covered by this event type
    double magnitude = 3.0;
    std::size_t duration = 30;
};

/// Desk-scale synthetic traffic: per-feature baseline + shared sinusoids +
/// per-feature AR(1) noise, with labeled anomaly events injected on top.
struct SynthSpec {
    std::size_t length = 20000;
    std::size_t features = 4;
    // Broadcast the last baseline when shorter than the feature count.
    // Defaults are the reference dataset: a daily-period wave (288 samples
    // at 5-minute sampling), AR(1) noise, and mixed burst+periodic events
    // covering ~2% of samples.
    std::vector<double> baselines{10.0};
    std::vector<SineComponent> sines{{2.0, 288.0, 0.0}};
    double ar_phi = 0.8;
    double ar_sigma = 0.3;
    std::vector<EventSpec> events{{EventType::burst, 0.01, 3.0, 30},
                                  {EventType::periodic, 0.01, 2.0, 60}};
    std::uint64_t seed = 42;

    void validate() const;
};

/// feature j at time t = baseline_j + sum_c amp_c sin(2 pi t / period_c +
/// phase_c) + AR(1) noise. Events add, for their duration: a level shift
/// (burst), a period-8 sinusoid (periodic), or a linear ramp up to the
/// magnitude (drift). Rows inside events are labeled 1 and tagged with the
/// event type. Deterministic under the seed.
FlowTable synth_generate(const SynthSpec& spec);

std::string synth_spec_to_text(const SynthSpec& spec);
SynthSpec synth_spec_from_text(const std::string& text);

// Grammar helpers shared with the config parser.
// Lists: "1.5, 2, 3"; sines: "amp:period:phase ; ..."; events:
// "type:rate:magnitude:duration ; ...".
std::vector<double> parse_double_list(const std::string& text);
std::vector<SineComponent> parse_sines(const std::string& text);
std::vector<EventSpec> parse_events(const std::string& text);
std::string double_list_to_string(const std::vector<double>& values);
std::string sines_to_string(const std::vector<SineComponent>& sines);
std::string events_to_string(const std::vector<EventSpec>& events);

enum class BalanceMode { none, smote, under, both };

std::string to_string(BalanceMode m);
BalanceMode balance_mode_from_string(const std::string& s);

/// Balances classification windows in flattened W*F space: smote raises the
/// minority to ratio * majority, under cuts the majority to minority/ratio,
/// both meets at the geometric mean before oversampling. Applied to training
/// windows only; leaves the set alone when a class is absent.
void balance_window_set(WindowSet& set, BalanceMode mode, double ratio,
                        std::uint64_t seed);

struct PipelineOptions {
    double split_fraction = 0.7;  // chronological train share
    bool correlation = true;
    double correlation_threshold = 0.05;
    std::size_t rfe_keep = 0;  // 0 disables RFE
    WindowOptions window;
    BalanceMode balance = BalanceMode::smote;
    double balance_ratio = 1.0;  // desired minority/majority ratio after balancing
};

/// Everything the model consumes plus what a checkpoint must remember to
/// reproduce predictions.
struct PreparedData {
    std::vector<std::size_t> selected_features;  // indices into the input table
    NormStats stats;                             // fitted on train rows, selected features
    WindowSet train;                             // balanced when configured
    WindowSet test;
};

/// The full preprocessing chain: chronological split -> feature selection on
/// train rows -> min-max fit on train rows -> windows per split -> balancing
/// of training windows in flattened W*F space. Selection and normalization
/// never see test rows.
PreparedData prepare_data(const FlowTable& table, const PipelineOptions& options,
                          std::uint64_t seed);

/// Re-applies a recorded preprocessing (selection + normalization) to a
/// table and windows the whole of it; used by predict/eval on a checkpoint.
WindowSet apply_preprocessing(const FlowTable& table,
                              const std::vector<std::size_t>& selected_features,
                              const NormStats& stats, const WindowOptions& window);

}  // namespace mamnet
