#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>

#include "mamnet/data.hpp"
#include "mamnet/error.hpp"

using namespace mamnet;

namespace {

struct TempFile {
    std::string path;
    explicit TempFile(const std::string& name, const std::string& content)
        : path("mamnet_test_" + name) {
        std::ofstream out(path);
        out << content;
    }
    ~TempFile() { std::remove(path.c_str()); }
};

FlowTable tiny_table() {
    FlowTable t;
    t.feature_names = {"a", "b", "c"};
    t.rows = {{2, 1, 5}, {4, 2, 5}, {6, 3, 5}, {8, 4, 5}};
    t.labels = {0, 0, 1, 1};
    return t;
}

}  // namespace

TEST_CASE("load_flows parses a well-formed CSV") {
    TempFile f("ok.csv", "a,b,label\n1,2,0\n3,4,1\n5,6,0\n");
    const FlowTable t = load_flows(f.path);
    CHECK(t.row_count() == 3);
    CHECK(t.feature_count() == 2);
    CHECK(t.labels[1] == 1);
    CHECK(t.dropped_rows == 0);
    CHECK(t.dropped_columns == 0);
}

TEST_CASE("load_flows drops rows with bad cells in numeric columns") {
    TempFile f("bad.csv", "a,b,label\n1,2,0\nabc,4,1\n5,6,0\n");
    const FlowTable t = load_flows(f.path);
    CHECK(t.row_count() == 2);
    CHECK(t.dropped_rows == 1);
}

TEST_CASE("load_flows drops textual columns and counts them") {
    std::string header;
    std::string row;
    for (int i = 0; i < 49; ++i) {
        header += "f" + std::to_string(i) + ",";
        row += i == 3 || i == 7 ? "tcp," : "1.5,";
    }
    header += "label\n";
    row += "0\n";
    TempFile f("unsw.csv", header + row + row + row);
    const FlowTable t = load_flows(f.path);
    CHECK(t.feature_count() == 47);
    CHECK(t.dropped_columns == 2);
    CHECK(t.row_count() == 3);
}

TEST_CASE("load_flows names missing inputs") {
    CHECK_THROWS_AS(load_flows("definitely_not_here.csv"), DataError);
    TempFile f("nolabel.csv", "a,b\n1,2\n");
    CHECK_THROWS_AS(load_flows(f.path), DataError);
}

TEST_CASE("load_flows skips comment lines") {
    TempFile f("comment.csv", "# config_hash = 123\na,label\n1,0\n2,1\n");
    const FlowTable t = load_flows(f.path);
    CHECK(t.row_count() == 2);
}

TEST_CASE("save_flows round-trips through load_flows") {
    const FlowTable t = tiny_table();
    TempFile f("roundtrip.csv", "");
    save_flows(t, f.path, "test");
    const FlowTable back = load_flows(f.path);
    REQUIRE(back.row_count() == t.row_count());
    for (std::size_t r = 0; r < t.row_count(); ++r) {
        CHECK(back.labels[r] == t.labels[r]);
        for (std::size_t c = 0; c < t.feature_count(); ++c) {
            CHECK(back.rows[r][c] == t.rows[r][c]);
        }
    }
}

TEST_CASE("minmax maps the fit range onto [0, 1] and clamps outside values") {
    FlowTable t;
    t.feature_names = {"x"};
    t.rows = {{2}, {4}, {6}, {8}};
    t.labels = {0, 0, 0, 0};
    const NormStats stats = minmax_fit(t, 0, 3);
    const FlowTable norm = minmax_apply(stats, t);
    CHECK(norm.rows[0][0] == 0.0);
    CHECK(norm.rows[1][0] == 0.5);
    CHECK(norm.rows[2][0] == 1.0);
    CHECK(norm.rows[3][0] == 1.0);  // 8 clamps against the fitted max of 6
}

TEST_CASE("minmax maps a constant feature to zero") {
    FlowTable t;
    t.feature_names = {"x"};
    t.rows = {{5}, {5}};
    t.labels = {0, 0};
    const FlowTable norm = minmax_apply(minmax_fit(t, 0, 2), t);
    CHECK(norm.rows[0][0] == 0.0);
    CHECK(norm.rows[1][0] == 0.0);
}

TEST_CASE("correlation filter keeps strong features of either sign, drops constants") {
    FlowTable t;
    t.feature_names = {"same", "inverse", "constant", "weak"};
    for (int i = 0; i < 40; ++i) {
        const int label = i % 2;
        // weak feature: alternates independently of the label
        t.rows.push_back({static_cast<double>(label), 1.0 - label, 3.0,
                          static_cast<double>(i % 3 == 0)});
        t.labels.push_back(label);
    }
    const auto kept = correlation_filter(t, 0, t.row_count(), 0.5);
    REQUIRE(kept.size() == 2);
    CHECK(kept[0] == 0);
    CHECK(kept[1] == 1);
}

TEST_CASE("correlation filter retains the strongest feature when all fall below") {
    FlowTable t;
    t.feature_names = {"noise1", "noise2"};
    Rng rng(3, "test.corr");
    for (int i = 0; i < 50; ++i) {
        t.rows.push_back({rng.uniform(), rng.uniform()});
        t.labels.push_back(i % 2);
    }
    const auto kept = correlation_filter(t, 0, t.row_count(), 0.99);
    CHECK(kept.size() == 1);
}

TEST_CASE("rfe keeps everything when keep_k equals the feature count") {
    const FlowTable t = tiny_table();
    Rng rng(1, "rfe");
    const auto kept = rfe(t, 0, t.row_count(), 3, rng);
    REQUIRE(kept.size() == 3);
    CHECK(kept[0] == 0);
    CHECK(kept[1] == 1);
    CHECK(kept[2] == 2);
}

TEST_CASE("rfe finds the predictive feature among noise in most seeds") {
    int hits = 0;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        FlowTable t;
        t.feature_names = {"n0", "signal", "n1", "n2"};
        Rng noise(seed, "test.rfe.noise");
        for (int i = 0; i < 120; ++i) {
            const int label = i % 2;
            t.rows.push_back({noise.uniform(), static_cast<double>(label),
                              noise.uniform(), noise.uniform()});
            t.labels.push_back(label);
        }
        Rng rng(seed, "rfe");
        const auto kept = rfe(t, 0, t.row_count(), 1, rng);
        if (kept.size() == 1 && kept[0] == 1) ++hits;
    }
    CHECK(hits >= 9);  // pilot over seeds 1..10 scored 10/10
}

TEST_CASE("rfe is deterministic under a fixed seed") {
    const FlowTable t = tiny_table();
    Rng r1(9, "rfe");
    Rng r2(9, "rfe");
    CHECK(rfe(t, 0, t.row_count(), 2, r1) == rfe(t, 0, t.row_count(), 2, r2));
}

TEST_CASE("rfe validates keep_k") {
    const FlowTable t = tiny_table();
    Rng rng(1, "rfe");
    CHECK_THROWS_AS(rfe(t, 0, t.row_count(), 4, rng), ConfigError);
    CHECK_THROWS_AS(rfe(t, 0, t.row_count(), 0, rng), ConfigError);
}

TEST_CASE("smote interpolates strictly between two points") {
    Rng rng(5, "smote");
    const std::vector<std::vector<double>> minority = {{0, 0}, {2, 2}};
    const auto synth = smote_oversample(minority, 1, 20, rng);
    REQUIRE(synth.size() == 20);
    for (const auto& row : synth) {
        CHECK(row[0] == doctest::Approx(row[1]).epsilon(1e-12));  // on the diagonal
        CHECK(row[0] >= 0.0);
        CHECK(row[0] <= 2.0);
    }
}

TEST_CASE("smote with target zero returns nothing") {
    Rng rng(5, "smote");
    CHECK(smote_oversample({{0.0}, {1.0}}, 1, 0, rng).empty());
}

TEST_CASE("smote output lies on segments between minority points") {
    Rng rng(11, "smote");
    std::vector<std::vector<double>> minority;
    Rng gen(2, "test.smote.points");
    for (int i = 0; i < 5; ++i) {
        minority.push_back({gen.uniform(), gen.uniform(), gen.uniform()});
    }
    const auto synth = smote_oversample(minority, 3, 50, rng);
    REQUIRE(synth.size() == 50);
    for (const auto& s : synth) {
        bool on_some_segment = false;
        for (std::size_t i = 0; i < minority.size() && !on_some_segment; ++i) {
            for (std::size_t j = 0; j < minority.size(); ++j) {
                if (i == j) continue;
                // s = p + lambda (q - p) must hold with one lambda in [0, 1]
                // across every dimension.
                double lambda = -1.0;
                bool ok = true;
                for (std::size_t d = 0; d < s.size(); ++d) {
                    const double seg = minority[j][d] - minority[i][d];
                    const double off = s[d] - minority[i][d];
                    if (std::abs(seg) < 1e-12) {
                        if (std::abs(off) > 1e-9) ok = false;
                        continue;
                    }
                    const double l = off / seg;
                    if (lambda < 0.0) lambda = l;
                    if (std::abs(l - lambda) > 1e-9) ok = false;
                }
                if (ok && lambda >= -1e-9 && lambda <= 1.0 + 1e-9) {
                    on_some_segment = true;
                    break;
                }
            }
        }
        CHECK(on_some_segment);
    }
}

TEST_CASE("smote needs at least two minority rows") {
    Rng rng(1, "smote");
    CHECK_THROWS_AS(smote_oversample({{1.0}}, 1, 5, rng), DataError);
}

TEST_CASE("undersample without replacement is seeded and size-checked") {
    const std::vector<std::vector<double>> rows = {{1}, {2}, {3}, {4}, {5}};
    Rng r1(8, "under");
    Rng r2(8, "under");
    const auto a = undersample(rows, 3, r1);
    const auto b = undersample(rows, 3, r2);
    CHECK(a == b);
    CHECK(a.size() == 3);
    Rng r3(8, "under");
    CHECK(undersample(rows, 0, r3).empty());
    Rng r4(8, "under");
    CHECK(undersample(rows, 5, r4).size() == 5);
    Rng r5(8, "under");
    CHECK_THROWS_AS(undersample(rows, 6, r5), ConfigError);
}

TEST_CASE("make_windows lays out starts at multiples of the hop") {
    FlowTable t;
    t.feature_names = {"x"};
    for (int i = 0; i < 10; ++i) {
        t.rows.push_back({static_cast<double>(i)});
        t.labels.push_back(0);
    }
    WindowOptions opt;
    opt.width = 4;
    opt.hop = 2;
    const WindowSet set = make_windows(t, opt);
    REQUIRE(set.windows.size() == 4);
    for (std::size_t w = 0; w < 4; ++w) {
        CHECK(set.windows[w].features(0, 0) == static_cast<double>(2 * w));
        CHECK(set.windows[w].target == 0.0);
    }
}

TEST_CASE("window count follows floor((rows - W)/hop) + 1") {
    Rng rng(3, "test.windows");
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t rows = 5 + rng.below(100);
        const std::size_t width = 1 + rng.below(rows);
        const std::size_t hop = 1 + rng.below(8);
        FlowTable t;
        t.feature_names = {"x"};
        for (std::size_t i = 0; i < rows; ++i) {
            t.rows.push_back({0.0});
            t.labels.push_back(0);
        }
        WindowOptions opt;
        opt.width = width;
        opt.hop = hop;
        CHECK(make_windows(t, opt).windows.size() == (rows - width) / hop + 1);
    }
}

TEST_CASE("the any-rule marks exactly the windows covering an anomalous row") {
    FlowTable t;
    t.feature_names = {"x"};
    for (int i = 0; i < 10; ++i) {
        t.rows.push_back({0.0});
        t.labels.push_back(i == 5 ? 1 : 0);
    }
    WindowOptions opt;
    opt.width = 4;
    opt.hop = 1;
    const WindowSet set = make_windows(t, opt);
    REQUIRE(set.windows.size() == 7);
    for (std::size_t start = 0; start < 7; ++start) {
        const bool covers = start <= 5 && 5 < start + 4;
        CHECK(set.windows[start].target == (covers ? 1.0 : 0.0));
    }
}

TEST_CASE("the fraction rule requires enough anomalous rows") {
    FlowTable t;
    t.feature_names = {"x"};
    for (int i = 0; i < 8; ++i) {
        t.rows.push_back({0.0});
        t.labels.push_back(i < 3 ? 1 : 0);  // rows 0..2 anomalous
    }
    WindowOptions opt;
    opt.width = 4;
    opt.hop = 4;
    opt.rule = LabelRule::fraction;
    opt.fraction = 0.8;
    const WindowSet strict = make_windows(t, opt);
    REQUIRE(strict.windows.size() == 2);
    CHECK(strict.windows[0].target == 0.0);  // 3/4 anomalous falls short of 0.8
    opt.fraction = 0.75;
    const WindowSet at_threshold = make_windows(t, opt);
    CHECK(at_threshold.windows[0].target == 1.0);  // >= convention
    CHECK(at_threshold.windows[1].target == 0.0);
}

TEST_CASE("make_windows rejects windows longer than the series") {
    FlowTable t;
    t.feature_names = {"x"};
    t.rows = {{1.0}};
    t.labels = {0};
    WindowOptions opt;
    opt.width = 2;
    CHECK_THROWS_AS(make_windows(t, opt), DataError);
}

TEST_CASE("regress_next targets the following row's first feature") {
    FlowTable t;
    t.feature_names = {"x"};
    for (int i = 0; i < 6; ++i) {
        t.rows.push_back({static_cast<double>(i)});
        t.labels.push_back(0);
    }
    WindowOptions opt;
    opt.width = 3;
    opt.hop = 1;
    opt.regress_next = true;
    const WindowSet set = make_windows(t, opt);
    REQUIRE(set.windows.size() == 3);
    CHECK(set.windows[0].target == 3.0);
    CHECK(set.windows[2].target == 5.0);
}

TEST_CASE("synth with no noise and no events is the exact sinusoid") {
    SynthSpec spec;
    spec.length = 100;
    spec.features = 2;
    spec.baselines = {5.0};
    spec.sines = {{1.0, 25.0, 0.0}};
    spec.ar_sigma = 0.0;
    spec.events.clear();
    const FlowTable t = synth_generate(spec);
    REQUIRE(t.row_count() == 100);
    for (std::size_t i = 0; i < 100; ++i) {
        const double expect =
            5.0 + std::sin(2.0 * 3.14159265358979323846 * static_cast<double>(i) / 25.0);
        CHECK(t.rows[i][0] == doctest::Approx(expect).epsilon(1e-12));
        CHECK(t.rows[i][1] == t.rows[i][0]);
        CHECK(t.labels[i] == 0);
    }
}

TEST_CASE("synth with zero event rate emits no positive labels") {
    SynthSpec spec;
    spec.length = 500;
    for (auto& e : spec.events) e.rate = 0.0;
    const FlowTable t = synth_generate(spec);
    for (int label : t.labels) CHECK(label == 0);
}

TEST_CASE("the reference synthetic dataset has a 1-10% positive fraction") {
    const SynthSpec spec;  // defaults are the reference dataset
    const FlowTable t = synth_generate(spec);
    std::size_t positives = 0;
    for (int label : t.labels) positives += label;
    const double fraction = static_cast<double>(positives) / static_cast<double>(t.row_count());
    CHECK(fraction >= 0.01);
    CHECK(fraction <= 0.10);  // measured 0.0195 at seed 42
}

TEST_CASE("synth is deterministic and tags event rows") {
    SynthSpec spec;
    spec.length = 2000;
    const FlowTable a = synth_generate(spec);
    const FlowTable b = synth_generate(spec);
    CHECK(a.rows == b.rows);
    CHECK(a.labels == b.labels);
    bool saw_burst = false;
    for (std::size_t i = 0; i < a.row_count(); ++i) {
        if (a.labels[i] == 1) {
            CHECK(a.row_tags[i] != "normal");
            saw_burst = saw_burst || a.row_tags[i] == "burst";
        }
    }
    CHECK(saw_burst);
}

TEST_CASE("synth spec text round-trips") {
    SynthSpec spec;
    spec.length = 1234;
    spec.features = 3;
    spec.baselines = {1.0, 2.0, 3.0};
    spec.sines = {{0.5, 100.0, 0.25}};
    spec.ar_phi = -0.4;
    spec.events = {{EventType::drift, 0.05, 1.5, 7}};
    spec.seed = 99;
    const SynthSpec back = synth_spec_from_text(synth_spec_to_text(spec));
    CHECK(back.length == spec.length);
    CHECK(back.features == spec.features);
    CHECK(back.baselines == spec.baselines);
    CHECK(back.ar_phi == spec.ar_phi);
    CHECK(back.seed == spec.seed);
    REQUIRE(back.events.size() == 1);
    CHECK(back.events[0].type == EventType::drift);
    CHECK(back.events[0].duration == 7);
}

TEST_CASE("prepare_data is deterministic and never sees test rows") {
    SynthSpec spec;
    spec.length = 3000;
    const FlowTable table = synth_generate(spec);

    PipelineOptions opt;
    opt.window.width = 16;
    opt.window.hop = 4;

    const PreparedData a = prepare_data(table, opt, 7);
    const PreparedData b = prepare_data(table, opt, 7);
    CHECK(a.selected_features == b.selected_features);
    CHECK(a.stats.mins == b.stats.mins);
    REQUIRE(a.train.windows.size() == b.train.windows.size());
    for (std::size_t i = 0; i < a.train.windows.size(); ++i) {
        CHECK(a.train.windows[i].target == b.train.windows[i].target);
        for (std::size_t e = 0; e < a.train.windows[i].features.size(); ++e) {
            CHECK(a.train.windows[i].features[e] == b.train.windows[i].features[e]);
        }
    }

    // Perturb rows strictly inside the test split; stats and selection must
    // not move.
    FlowTable poked = table;
    const std::size_t split = static_cast<std::size_t>(0.7 * poked.row_count());
    for (std::size_t r = split; r < poked.row_count(); ++r) {
        for (double& v : poked.rows[r]) v += 1000.0;
    }
    const PreparedData c = prepare_data(poked, opt, 7);
    CHECK(c.selected_features == a.selected_features);
    CHECK(c.stats.mins == a.stats.mins);
    CHECK(c.stats.maxs == a.stats.maxs);
}

TEST_CASE("training windows of the train split stay inside [0, 1]") {
    SynthSpec spec;
    spec.length = 2000;
    const FlowTable table = synth_generate(spec);
    PipelineOptions opt;
    opt.window.width = 16;
    opt.window.hop = 8;
    opt.balance = BalanceMode::none;
    const PreparedData prep = prepare_data(table, opt, 3);
    for (const Window& w : prep.train.windows) {
        for (std::size_t i = 0; i < w.features.size(); ++i) {
            CHECK(w.features[i] >= 0.0);
            CHECK(w.features[i] <= 1.0);
        }
    }
}

TEST_CASE("balancing evens the training class counts") {
    SynthSpec spec;
    spec.length = 4000;
    const FlowTable table = synth_generate(spec);
    PipelineOptions opt;
    opt.window.width = 16;
    opt.window.hop = 4;
    opt.balance = BalanceMode::smote;
    const PreparedData prep = prepare_data(table, opt, 5);
    std::size_t pos = 0, neg = 0;
    for (const Window& w : prep.train.windows) (w.target >= 0.5 ? pos : neg) += 1;
    CHECK(pos == neg);
}
