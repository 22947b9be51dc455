#include "mamnet/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>
#include <sstream>

#include "mamnet/error.hpp"
#include "mamnet/numerics.hpp"

namespace mamnet {

namespace {

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r\n");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t\r\n");
    return s.substr(begin, end - begin + 1);
}

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = line.find(sep, start);
        if (pos == std::string::npos) {
            fields.push_back(line.substr(start));
            break;
        }
        fields.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return fields;
}

std::optional<double> parse_double(const std::string& raw) {
    const std::string s = trim(raw);
    if (s.empty()) return std::nullopt;
    double value = 0.0;
    const char* begin = s.data();
    const char* end = begin + s.size();
    const auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc{} || ptr != end) return std::nullopt;
    return value;
}

}  // namespace

FlowTable load_flows(const std::string& path, const std::string& label_column) {
    std::ifstream in(path);
    if (!in) throw DataError("load_flows: cannot open '" + path + "'");

    std::string line;
    std::string header;
    while (std::getline(in, line)) {
        if (!trim(line).empty() && trim(line)[0] != '#') {
            header = line;
            break;
        }
    }
    if (header.empty()) throw DataError("load_flows: '" + path + "' has no header row");

    std::vector<std::string> names = split(header, ',');
    for (auto& n : names) n = trim(n);
    std::size_t label_idx = names.size();
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (names[i] == label_column) label_idx = i;
    }
    if (label_idx == names.size()) {
        throw DataError("load_flows: label column '" + label_column + "' not found in '" +
                        path + "'");
    }

    std::vector<std::vector<std::string>> raw_rows;
    while (std::getline(in, line)) {
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        std::vector<std::string> fields = split(line, ',');
        if (fields.size() != names.size()) {
            // Wrong arity: keep a placeholder so the row is dropped and
            // counted instead of parsed misaligned.
            fields.assign(names.size(), "");
        }
        raw_rows.push_back(std::move(fields));
    }

    // A feature column is numeric when most of its cells parse; wholly or
    // mostly textual columns are dropped, stray bad cells drop their row.
    std::vector<std::size_t> numeric_cols;
    std::size_t dropped_columns = 0;
    for (std::size_t c = 0; c < names.size(); ++c) {
        if (c == label_idx) continue;
        std::size_t ok = 0;
        for (const auto& row : raw_rows) {
            if (parse_double(row[c])) ++ok;
        }
        if (!raw_rows.empty() && ok * 2 > raw_rows.size()) {
            numeric_cols.push_back(c);
        } else {
            ++dropped_columns;
        }
    }

    FlowTable table;
    table.provenance = path;
    table.dropped_columns = dropped_columns;
    for (std::size_t c : numeric_cols) table.feature_names.push_back(names[c]);

    for (const auto& raw : raw_rows) {
        std::vector<double> row;
        row.reserve(numeric_cols.size());
        bool ok = true;
        for (std::size_t c : numeric_cols) {
            const auto v = parse_double(raw[c]);
            if (!v) {
                ok = false;
                break;
            }
            row.push_back(*v);
        }
        const auto label = parse_double(raw[label_idx]);
        if (!ok || !label || (*label != 0.0 && *label != 1.0)) {
            ++table.dropped_rows;
            continue;
        }
        table.rows.push_back(std::move(row));
        table.labels.push_back(*label == 1.0 ? 1 : 0);
    }
    if (table.rows.empty()) {
        throw DataError("load_flows: no usable rows in '" + path + "'");
    }
    return table;
}

void save_flows(const FlowTable& table, const std::string& path,
                const std::string& header_comment) {
    std::ofstream out(path);
    if (!out) throw DataError("save_flows: cannot write '" + path + "'");
    if (!header_comment.empty()) out << "# " << header_comment << "\n";
    for (const auto& name : table.feature_names) out << name << ",";
    out << "label\n";
    out.precision(17);
    for (std::size_t r = 0; r < table.row_count(); ++r) {
        for (double v : table.rows[r]) out << v << ",";
        out << table.labels[r] << "\n";
    }
}

NormStats minmax_fit(const FlowTable& table, std::size_t begin, std::size_t end) {
    if (begin >= end || end > table.row_count()) {
        throw DataError("minmax_fit: empty or invalid fit range");
    }
    const std::size_t f = table.feature_count();
    NormStats stats;
    stats.mins.assign(f, std::numeric_limits<double>::infinity());
    stats.maxs.assign(f, -std::numeric_limits<double>::infinity());
    stats.fitted_rows = end - begin;
    for (std::size_t r = begin; r < end; ++r) {
        for (std::size_t j = 0; j < f; ++j) {
            stats.mins[j] = std::min(stats.mins[j], table.rows[r][j]);
            stats.maxs[j] = std::max(stats.maxs[j], table.rows[r][j]);
        }
    }
    return stats;
}

FlowTable minmax_apply(const NormStats& stats, const FlowTable& table) {
    if (stats.mins.size() != table.feature_count()) {
        throw ConfigError("minmax_apply: stats fitted on a different feature count");
    }
    FlowTable out = table;
    for (auto& row : out.rows) {
        for (std::size_t j = 0; j < row.size(); ++j) {
            const double range = stats.maxs[j] - stats.mins[j];
            if (range == 0.0) {
                row[j] = 0.0;
            } else {
                row[j] = std::clamp((row[j] - stats.mins[j]) / range, 0.0, 1.0);
            }
        }
    }
    return out;
}

std::vector<std::size_t> correlation_filter(const FlowTable& table, std::size_t begin,
                                            std::size_t end, double threshold) {
    if (end - begin < 2 || end > table.row_count()) {
        throw DataError("correlation_filter: needs at least 2 rows");
    }
    const std::size_t f = table.feature_count();
    const double n = static_cast<double>(end - begin);

    double label_mean = 0.0;
    for (std::size_t r = begin; r < end; ++r) label_mean += table.labels[r];
    label_mean /= n;
    double label_var = 0.0;
    for (std::size_t r = begin; r < end; ++r) {
        const double d = table.labels[r] - label_mean;
        label_var += d * d;
    }

    std::vector<double> abs_r(f, -1.0);  // -1 marks undefined
    for (std::size_t j = 0; j < f; ++j) {
        double mean = 0.0;
        for (std::size_t r = begin; r < end; ++r) mean += table.rows[r][j];
        mean /= n;
        double var = 0.0, cov = 0.0;
        for (std::size_t r = begin; r < end; ++r) {
            const double d = table.rows[r][j] - mean;
            var += d * d;
            cov += d * (table.labels[r] - label_mean);
        }
        if (var > 0.0 && label_var > 0.0) {
            abs_r[j] = std::abs(cov / std::sqrt(var * label_var));
        }
    }

    std::vector<std::size_t> kept;
    for (std::size_t j = 0; j < f; ++j) {
        if (abs_r[j] >= threshold) kept.push_back(j);
    }
    if (kept.empty()) {
        // Retain the strongest feature rather than none.
        std::size_t best = 0;
        for (std::size_t j = 1; j < f; ++j) {
            if (abs_r[j] > abs_r[best]) best = j;
        }
        kept.push_back(best);
    }
    return kept;
}

namespace {

// Logistic probe used by the simplified RFE: a single affine layer trained
// for 5 Adam epochs on min-max-normalized features. Zero init keeps the
// convex fit honest: irrelevant features stay near zero weight instead of
// inheriting a large random starting point.
std::vector<double> probe_weights(const std::vector<std::vector<double>>& x,
                                  const std::vector<int>& y, Rng& rng) {
    const std::size_t f = x.empty() ? 0 : x[0].size();
    Tensor w({f});
    Tensor b({1});

    AdamState opt_w = AdamState::for_param(w, 0.1);
    AdamState opt_b = AdamState::for_param(b, 0.1);
    std::vector<std::size_t> order(x.size());
    std::iota(order.begin(), order.end(), std::size_t{0});

    const std::size_t batch = 32;
    for (int epoch = 0; epoch < 5; ++epoch) {
        rng.shuffle(order);
        for (std::size_t start = 0; start < order.size(); start += batch) {
            const std::size_t stop = std::min(order.size(), start + batch);
            Tensor gw({f});
            Tensor gb({1});
            const double inv = 1.0 / static_cast<double>(stop - start);
            for (std::size_t k = start; k < stop; ++k) {
                const auto& row = x[order[k]];
                double o = b[0];
                for (std::size_t j = 0; j < f; ++j) o += w[j] * row[j];
                const double p = 1.0 / (1.0 + std::exp(-o));
                const double g = (p - y[order[k]]) * inv;
                for (std::size_t j = 0; j < f; ++j) gw[j] += g * row[j];
                gb[0] += g;
            }
            adam_step(opt_w, w, gw);
            adam_step(opt_b, b, gb);
        }
    }
    return w.raw();
}

}  // namespace

std::vector<std::size_t> rfe(const FlowTable& table, std::size_t begin, std::size_t end,
                             std::size_t keep_k, Rng& rng) {
    const std::size_t f = table.feature_count();
    if (keep_k == 0 || keep_k > f) {
        throw ConfigError("rfe: keep_k must be in [1, feature count]");
    }
    if (end - begin < 2 || end > table.row_count()) {
        throw DataError("rfe: needs at least 2 rows");
    }

    std::vector<std::size_t> active(f);
    std::iota(active.begin(), active.end(), std::size_t{0});
    if (keep_k == f) return active;

    const NormStats stats = minmax_fit(table, begin, end);
    const FlowTable normalized = minmax_apply(stats, table);

    std::vector<int> y(table.labels.begin() + static_cast<std::ptrdiff_t>(begin),
                       table.labels.begin() + static_cast<std::ptrdiff_t>(end));
    while (active.size() > keep_k) {
        std::vector<std::vector<double>> x;
        x.reserve(end - begin);
        for (std::size_t r = begin; r < end; ++r) {
            std::vector<double> row;
            row.reserve(active.size());
            for (std::size_t j : active) row.push_back(normalized.rows[r][j]);
            x.push_back(std::move(row));
        }
        const std::vector<double> w = probe_weights(x, y, rng);
        std::size_t weakest = 0;
        for (std::size_t j = 1; j < w.size(); ++j) {
            if (std::abs(w[j]) < std::abs(w[weakest])) weakest = j;
        }
        active.erase(active.begin() + static_cast<std::ptrdiff_t>(weakest));
    }
    return active;
}

FlowTable select_features(const FlowTable& table, const std::vector<std::size_t>& kept) {
    FlowTable out;
    out.provenance = table.provenance;
    out.labels = table.labels;
    out.row_tags = table.row_tags;
    out.dropped_rows = table.dropped_rows;
    out.dropped_columns = table.dropped_columns;
    for (std::size_t j : kept) {
        if (j >= table.feature_count()) throw ConfigError("select_features: index out of range");
        out.feature_names.push_back(table.feature_names[j]);
    }
    out.rows.reserve(table.row_count());
    for (const auto& row : table.rows) {
        std::vector<double> r;
        r.reserve(kept.size());
        for (std::size_t j : kept) r.push_back(row[j]);
        out.rows.push_back(std::move(r));
    }
    return out;
}

std::vector<std::vector<double>> smote_oversample(
    const std::vector<std::vector<double>>& minority, std::size_t k_neighbors,
    std::size_t target_count, Rng& rng) {
    if (minority.size() < 2) {
        throw DataError("smote_oversample: need at least 2 minority rows");
    }
    if (k_neighbors == 0) throw ConfigError("smote_oversample: k must be >= 1");
    const std::size_t n = minority.size();
    const std::size_t k = std::min(k_neighbors, n - 1);

    // k nearest neighbours per point, squared Euclidean.
    std::vector<std::vector<std::size_t>> neighbors(n);
    std::vector<std::pair<double, std::size_t>> dist;
    for (std::size_t i = 0; i < n; ++i) {
        dist.clear();
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) continue;
            double d2 = 0.0;
            for (std::size_t c = 0; c < minority[i].size(); ++c) {
                const double d = minority[i][c] - minority[j][c];
                d2 += d * d;
            }
            dist.emplace_back(d2, j);
        }
        std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k),
                          dist.end());
        for (std::size_t q = 0; q < k; ++q) neighbors[i].push_back(dist[q].second);
    }

    std::vector<std::vector<double>> synthetic;
    synthetic.reserve(target_count);
    for (std::size_t s = 0; s < target_count; ++s) {
        const std::size_t i = rng.below(n);
        const std::size_t j = neighbors[i][rng.below(k)];
        const double lambda = rng.uniform();
        std::vector<double> row(minority[i].size());
        for (std::size_t c = 0; c < row.size(); ++c) {
            row[c] = minority[i][c] + lambda * (minority[j][c] - minority[i][c]);
        }
        synthetic.push_back(std::move(row));
    }
    return synthetic;
}

std::vector<std::vector<double>> undersample(const std::vector<std::vector<double>>& rows,
                                             std::size_t target_count, Rng& rng) {
    if (target_count > rows.size()) {
        throw ConfigError("undersample: target exceeds available rows");
    }
    std::vector<std::size_t> idx(rows.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    for (std::size_t i = 0; i < target_count; ++i) {
        const std::size_t j = i + rng.below(idx.size() - i);
        std::swap(idx[i], idx[j]);
    }
    std::vector<std::vector<double>> out;
    out.reserve(target_count);
    for (std::size_t i = 0; i < target_count; ++i) out.push_back(rows[idx[i]]);
    return out;
}

WindowSet make_windows(const FlowTable& table, const WindowOptions& options) {
    const std::size_t r = table.row_count();
    const std::size_t w = options.width;
    if (w == 0 || options.hop == 0) throw ConfigError("make_windows: width and hop must be >= 1");
    if (w > r) throw DataError("make_windows: window is longer than the series");
    const std::size_t f = table.feature_count();

    WindowSet set;
    set.options = options;
    for (std::size_t start = 0; start + w <= r; start += options.hop) {
        if (options.regress_next && start + w >= r) break;
        Tensor features({w, f});
        for (std::size_t t = 0; t < w; ++t) {
            for (std::size_t j = 0; j < f; ++j) features(t, j) = table.rows[start + t][j];
        }
        Window win{std::move(features), 0.0, "normal"};
        if (options.regress_next) {
            win.target = table.rows[start + w][0];
        } else {
            std::size_t anomalous = 0;
            for (std::size_t t = 0; t < w; ++t) {
                if (table.labels[start + t] == 1) {
                    ++anomalous;
                    if (win.tag == "normal" && !table.row_tags.empty()) {
                        win.tag = table.row_tags[start + t];
                    }
                }
            }
            const bool positive =
                options.rule == LabelRule::any
                    ? anomalous > 0
                    : static_cast<double>(anomalous) / static_cast<double>(w) >=
                          options.fraction;
            win.target = positive ? 1.0 : 0.0;
            if (!positive) win.tag = "normal";
        }
        set.windows.push_back(std::move(win));
    }
    return set;
}

std::string to_string(EventType t) {
    switch (t) {
        case EventType::burst: return "burst";
        case EventType::periodic: return "periodic";
        case EventType::drift: return "drift";
    }
    return "burst";
}

EventType event_type_from_string(const std::string& s) {
    if (s == "burst") return EventType::burst;
    if (s == "periodic") return EventType::periodic;
    if (s == "drift") return EventType::drift;
    throw ConfigError("unknown event type '" + s + "'");
}

void SynthSpec::validate() const {
    if (length == 0 || features == 0) {
        throw ConfigError("synth spec: length and features must be >= 1");
    }
    if (std::abs(ar_phi) >= 1.0) throw ConfigError("synth spec: |ar_phi| must be < 1");
    if (ar_sigma < 0.0) throw ConfigError("synth spec: ar_sigma must be >= 0");
    for (const auto& s : sines) {
        if (s.period <= 0.0) throw ConfigError("synth spec: sine period must be > 0");
    }
    for (const auto& e : events) {
        if (e.rate < 0.0 || e.rate > 1.0) throw ConfigError("synth spec: event rate must be in [0, 1]");
        if (e.duration == 0) throw ConfigError("synth spec: event duration must be >= 1");
    }
}

FlowTable synth_generate(const SynthSpec& spec) {
    spec.validate();
    const std::size_t l = spec.length;
    const std::size_t f = spec.features;

    std::vector<double> baselines(f, 0.0);
    for (std::size_t j = 0; j < f; ++j) {
        if (!spec.baselines.empty()) {
            baselines[j] = j < spec.baselines.size() ? spec.baselines[j] : spec.baselines.back();
        }
    }

    FlowTable table;
    table.provenance = "synth(seed=" + std::to_string(spec.seed) + ")";
    for (std::size_t j = 0; j < f; ++j) table.feature_names.push_back("f" + std::to_string(j));
    table.rows.assign(l, std::vector<double>(f, 0.0));
    table.labels.assign(l, 0);
    table.row_tags.assign(l, "normal");

    Rng noise_rng(spec.seed, "synth.noise");
    std::vector<double> ar(f, 0.0);
    for (std::size_t t = 0; t < l; ++t) {
        double wave = 0.0;
        for (const auto& s : spec.sines) {
            wave += s.amplitude *
                    std::sin(2.0 * std::numbers::pi * static_cast<double>(t) / s.period +
                             s.phase);
        }
        for (std::size_t j = 0; j < f; ++j) {
            ar[j] = spec.ar_phi * ar[j] + noise_rng.normal() * spec.ar_sigma;
            table.rows[t][j] = baselines[j] + wave + ar[j];
        }
    }

    // Events: non-overlapping placements, count chosen so each type covers
    // roughly rate * length samples.
    Rng event_rng(spec.seed, "synth.events");
    std::vector<bool> occupied(l, false);
    for (const auto& e : spec.events) {
        if (e.duration > l) continue;
        const std::size_t count = static_cast<std::size_t>(
            std::llround(e.rate * static_cast<double>(l) / static_cast<double>(e.duration)));
        for (std::size_t ev = 0; ev < count; ++ev) {
            std::size_t start = 0;
            bool placed = false;
            for (int attempt = 0; attempt < 1000; ++attempt) {
                start = event_rng.below(l - e.duration + 1);
                bool clash = false;
                for (std::size_t t = start; t < start + e.duration; ++t) {
                    if (occupied[t]) {
                        clash = true;
                        break;
                    }
                }
                if (!clash) {
                    placed = true;
                    break;
                }
            }
            if (!placed) continue;
            for (std::size_t t = start; t < start + e.duration; ++t) {
                occupied[t] = true;
                table.labels[t] = 1;
                table.row_tags[t] = to_string(e.type);
                double delta = 0.0;
                const double rel = static_cast<double>(t - start);
                switch (e.type) {
                    case EventType::burst:
                        delta = e.magnitude;
                        break;
                    case EventType::periodic:
                        delta = e.magnitude *
                                std::sin(2.0 * std::numbers::pi * rel / 8.0);
                        break;
                    case EventType::drift:
                        delta = e.duration == 1
                                    ? e.magnitude
                                    : e.magnitude * rel /
                                          static_cast<double>(e.duration - 1);
                        break;
                }
                for (std::size_t j = 0; j < f; ++j) table.rows[t][j] += delta;
            }
        }
    }
    return table;
}

namespace {

std::vector<std::string> split_trimmed(const std::string& text, char sep) {
    std::vector<std::string> parts;
    for (const std::string& piece : split(text, sep)) {
        const std::string t = trim(piece);
        if (!t.empty()) parts.push_back(t);
    }
    return parts;
}

double require_double(const std::string& text, const std::string& what) {
    const auto v = parse_double(text);
    if (!v) throw ConfigError("cannot parse '" + text + "' as a number in " + what);
    return *v;
}

std::string format_double(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

}  // namespace

std::vector<double> parse_double_list(const std::string& text) {
    std::vector<double> values;
    for (const std::string& part : split_trimmed(text, ',')) {
        values.push_back(require_double(part, "list"));
    }
    return values;
}

std::vector<SineComponent> parse_sines(const std::string& text) {
    std::vector<SineComponent> sines;
    for (const std::string& part : split_trimmed(text, ';')) {
        const std::vector<std::string> fields = split_trimmed(part, ':');
        if (fields.size() != 3) {
            throw ConfigError("sine component '" + part + "' must be amp:period:phase");
        }
        sines.push_back({require_double(fields[0], "sine amplitude"),
                         require_double(fields[1], "sine period"),
                         require_double(fields[2], "sine phase")});
    }
    return sines;
}

std::vector<EventSpec> parse_events(const std::string& text) {
    std::vector<EventSpec> events;
    for (const std::string& part : split_trimmed(text, ';')) {
        const std::vector<std::string> fields = split_trimmed(part, ':');
        if (fields.size() != 4) {
            throw ConfigError("event '" + part + "' must be type:rate:magnitude:duration");
        }
        EventSpec e;
        e.type = event_type_from_string(fields[0]);
        e.rate = require_double(fields[1], "event rate");
        e.magnitude = require_double(fields[2], "event magnitude");
        const double dur = require_double(fields[3], "event duration");
        if (dur < 1.0) throw ConfigError("event duration must be >= 1");
        e.duration = static_cast<std::size_t>(dur);
        events.push_back(e);
    }
    return events;
}

std::string double_list_to_string(const std::vector<double>& values) {
    std::string out;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i) out += ", ";
        out += format_double(values[i]);
    }
    return out;
}

std::string sines_to_string(const std::vector<SineComponent>& sines) {
    std::string out;
    for (std::size_t i = 0; i < sines.size(); ++i) {
        if (i) out += " ; ";
        out += format_double(sines[i].amplitude) + ":" + format_double(sines[i].period) +
               ":" + format_double(sines[i].phase);
    }
    return out;
}

std::string events_to_string(const std::vector<EventSpec>& events) {
    std::string out;
    for (std::size_t i = 0; i < events.size(); ++i) {
        if (i) out += " ; ";
        out += to_string(events[i].type) + ":" + format_double(events[i].rate) + ":" +
               format_double(events[i].magnitude) + ":" +
               std::to_string(events[i].duration);
    }
    return out;
}

std::string synth_spec_to_text(const SynthSpec& spec) {
    std::ostringstream os;
    os << "synth_length = " << spec.length << "\n"
       << "synth_features = " << spec.features << "\n"
       << "synth_baselines = " << double_list_to_string(spec.baselines) << "\n"
       << "synth_sines = " << sines_to_string(spec.sines) << "\n"
       << "synth_ar_phi = " << format_double(spec.ar_phi) << "\n"
       << "synth_ar_sigma = " << format_double(spec.ar_sigma) << "\n"
       << "synth_events = " << events_to_string(spec.events) << "\n"
       << "seed = " << spec.seed << "\n";
    return os.str();
}

SynthSpec synth_spec_from_text(const std::string& text) {
    SynthSpec spec;
    spec.baselines.clear();
    spec.sines.clear();
    spec.events.clear();
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        const std::size_t eq = t.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("synth spec line '" + t + "' is not key = value");
        }
        const std::string key = trim(t.substr(0, eq));
        const std::string value = trim(t.substr(eq + 1));
        if (key == "synth_length") {
            spec.length = static_cast<std::size_t>(require_double(value, key));
        } else if (key == "synth_features") {
            spec.features = static_cast<std::size_t>(require_double(value, key));
        } else if (key == "synth_baselines") {
            spec.baselines = parse_double_list(value);
        } else if (key == "synth_sines") {
            spec.sines = parse_sines(value);
        } else if (key == "synth_ar_phi") {
            spec.ar_phi = require_double(value, key);
        } else if (key == "synth_ar_sigma") {
            spec.ar_sigma = require_double(value, key);
        } else if (key == "synth_events") {
            spec.events = parse_events(value);
        } else if (key == "seed") {
            spec.seed = static_cast<std::uint64_t>(require_double(value, key));
        } else {
            throw ConfigError("unknown synth spec key '" + key + "'");
        }
    }
    spec.validate();
    return spec;
}

std::string to_string(BalanceMode m) {
    switch (m) {
        case BalanceMode::none: return "none";
        case BalanceMode::smote: return "smote";
        case BalanceMode::under: return "under";
        case BalanceMode::both: return "both";
    }
    return "none";
}

BalanceMode balance_mode_from_string(const std::string& s) {
    if (s == "none") return BalanceMode::none;
    if (s == "smote") return BalanceMode::smote;
    if (s == "under") return BalanceMode::under;
    if (s == "both") return BalanceMode::both;
    throw ConfigError("unknown balance mode '" + s + "'");
}

namespace {

std::vector<double> flatten(const Tensor& features) { return features.raw(); }

Tensor unflatten(const std::vector<double>& flat, std::size_t w, std::size_t f) {
    return Tensor({w, f}, flat);
}

}  // namespace

void balance_window_set(WindowSet& set, BalanceMode mode, double ratio,
                        std::uint64_t seed) {
    if (mode == BalanceMode::none || set.windows.empty()) return;
    std::vector<std::vector<double>> pos, neg;
    std::string pos_tag = "normal";
    for (const Window& w : set.windows) {
        if (w.target >= 0.5) {
            pos.push_back(flatten(w.features));
            if (pos_tag == "normal" && w.tag != "normal") pos_tag = w.tag;
        } else {
            neg.push_back(flatten(w.features));
        }
    }
    if (pos.empty() || neg.empty()) return;

    const bool pos_minority = pos.size() <= neg.size();
    auto& minority = pos_minority ? pos : neg;
    auto& majority = pos_minority ? neg : pos;

    Rng under_rng(seed, "balance.under");
    Rng smote_rng(seed, "balance.smote");

    if (mode == BalanceMode::under || mode == BalanceMode::both) {
        std::size_t target = majority.size();
        if (mode == BalanceMode::under) {
            target = std::max<std::size_t>(
                1, static_cast<std::size_t>(std::llround(
                       static_cast<double>(minority.size()) / std::max(ratio, 1e-9))));
        } else {
            // Meet in the middle before oversampling the rest of the way.
            target = std::max(minority.size(),
                              static_cast<std::size_t>(std::llround(std::sqrt(
                                  static_cast<double>(minority.size()) *
                                  static_cast<double>(majority.size())))));
        }
        if (target < majority.size()) {
            majority = undersample(majority, target, under_rng);
        }
    }

    std::vector<std::vector<double>> synthetic;
    if (mode == BalanceMode::smote || mode == BalanceMode::both) {
        const std::size_t target = static_cast<std::size_t>(
            std::llround(ratio * static_cast<double>(majority.size())));
        if (target > minority.size() && minority.size() >= 2) {
            synthetic = smote_oversample(minority, 5, target - minority.size(), smote_rng);
        }
    }

    const std::size_t w = set.options.width;
    const std::size_t f = set.windows.front().features.cols();
    const double min_label = pos_minority ? 1.0 : 0.0;
    const std::string min_tag = pos_minority ? pos_tag : "normal";

    std::vector<Window> rebuilt;
    rebuilt.reserve(majority.size() + minority.size() + synthetic.size());
    for (auto& row : majority) {
        rebuilt.push_back({unflatten(row, w, f), pos_minority ? 0.0 : 1.0,
                           pos_minority ? "normal" : pos_tag});
    }
    for (auto& row : minority) {
        rebuilt.push_back({unflatten(row, w, f), min_label, min_tag});
    }
    for (auto& row : synthetic) {
        rebuilt.push_back({unflatten(row, w, f), min_label, "smote"});
    }
    set.windows = std::move(rebuilt);
}

namespace {

FlowTable slice_rows(const FlowTable& table, std::size_t begin, std::size_t end) {
    FlowTable out;
    out.feature_names = table.feature_names;
    out.provenance = table.provenance;
    out.rows.assign(table.rows.begin() + static_cast<std::ptrdiff_t>(begin),
                    table.rows.begin() + static_cast<std::ptrdiff_t>(end));
    out.labels.assign(table.labels.begin() + static_cast<std::ptrdiff_t>(begin),
                      table.labels.begin() + static_cast<std::ptrdiff_t>(end));
    if (!table.row_tags.empty()) {
        out.row_tags.assign(table.row_tags.begin() + static_cast<std::ptrdiff_t>(begin),
                            table.row_tags.begin() + static_cast<std::ptrdiff_t>(end));
    }
    return out;
}

}  // namespace

PreparedData prepare_data(const FlowTable& table, const PipelineOptions& options,
                          std::uint64_t seed) {
    if (options.split_fraction <= 0.0 || options.split_fraction >= 1.0) {
        throw ConfigError("prepare_data: split_fraction must be in (0, 1)");
    }
    const std::size_t split = static_cast<std::size_t>(
        static_cast<double>(table.row_count()) * options.split_fraction);
    if (split < 2 || split >= table.row_count()) {
        throw DataError("prepare_data: not enough rows for the requested split");
    }

    PreparedData prep;
    prep.selected_features.resize(table.feature_count());
    std::iota(prep.selected_features.begin(), prep.selected_features.end(), std::size_t{0});
    if (options.correlation) {
        prep.selected_features =
            correlation_filter(table, 0, split, options.correlation_threshold);
    }
    if (options.rfe_keep > 0 && options.rfe_keep < prep.selected_features.size()) {
        const FlowTable candidate = select_features(table, prep.selected_features);
        Rng rfe_rng(seed, "rfe");
        const std::vector<std::size_t> local =
            rfe(candidate, 0, split, options.rfe_keep, rfe_rng);
        std::vector<std::size_t> mapped;
        mapped.reserve(local.size());
        for (std::size_t j : local) mapped.push_back(prep.selected_features[j]);
        prep.selected_features = std::move(mapped);
    }

    const FlowTable selected = select_features(table, prep.selected_features);
    prep.stats = minmax_fit(selected, 0, split);
    const FlowTable normalized = minmax_apply(prep.stats, selected);

    prep.train = make_windows(slice_rows(normalized, 0, split), options.window);
    prep.test = make_windows(slice_rows(normalized, split, normalized.row_count()),
                             options.window);
    if (!options.window.regress_next) {
        balance_window_set(prep.train, options.balance, options.balance_ratio, seed);
    }
    return prep;
}

WindowSet apply_preprocessing(const FlowTable& table,
                              const std::vector<std::size_t>& selected_features,
                              const NormStats& stats, const WindowOptions& window) {
    const FlowTable selected = select_features(table, selected_features);
    const FlowTable normalized = minmax_apply(stats, selected);
    return make_windows(normalized, window);
}

}  // namespace mamnet
