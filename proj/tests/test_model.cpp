#include <doctest.h>

#include <cmath>
#include <vector>

#include "mamnet/error.hpp"
#include "mamnet/model.hpp"

using namespace mamnet;

namespace {

ModelConfig small_config(Variant variant = Variant::full) {
    ModelConfig c;
    c.window_len = 16;
    c.feature_dim = 3;
    c.state_dim = 4;
    c.fusion_dim = 4;
    c.spectral_bins = 5;
    c.variant = variant;
    c.dropout_rate = 0.0;  // gradient work wants the deterministic path
    return c;
}

Tensor random_window(const ModelConfig& c, std::uint64_t seed) {
    Rng rng(seed, "test.model.window");
    Tensor w({c.window_len, c.feature_dim});
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = rng.uniform(-1.0, 1.0);
    return w;
}

std::size_t census(const ModelConfig& c) {
    // Independent closed-form count from the declared shapes.
    const std::size_t n = c.state_dim, f = c.feature_dim, m = c.fusion_dim;
    const std::size_t k = c.bins();
    std::size_t count = m + 1;  // head
    switch (c.variant) {
        case Variant::full:
            count += (n + n * f + m * n + m * f) + 1 + (m * f * k + m) + 1;
            break;
        case Variant::no_time:
            count += (m * f * k + m) + 1;
            break;
        case Variant::no_freq:
            count += (n + n * f + m * n + m * f) + 1;
            break;
        case Variant::no_both:
            count += m * f + m;
            break;
    }
    return count;
}

}  // namespace

TEST_CASE("model_init is deterministic with alpha and beta at one") {
    const ModelConfig c = small_config();
    Rng r1(9, "model_init");
    Rng r2(9, "model_init");
    ModelParams a = model_init(c, r1);
    ModelParams b = model_init(c, r2);
    CHECK(a.alpha.value() == 1.0);
    CHECK(a.beta.value() == 1.0);
    CHECK(a.head_b.value() == 0.0);
    const auto refs_a = param_refs(a, c);
    const auto refs_b = param_refs(b, c);
    for (std::size_t p = 0; p < refs_a.size(); ++p) {
        for (std::size_t i = 0; i < refs_a[p].tensor->size(); ++i) {
            CHECK((*refs_a[p].tensor)[i] == (*refs_b[p].tensor)[i]);
        }
    }
}

TEST_CASE("parameter count matches the closed-form census for every variant") {
    for (Variant v : {Variant::full, Variant::no_time, Variant::no_freq, Variant::no_both}) {
        const ModelConfig c = small_config(v);
        CHECK(param_count(c) == census(c));
        Rng rng(1, "model_init");
        ModelParams params = model_init(c, rng);
        std::size_t total = 0;
        for (const ParamRef& ref : param_refs(params, c)) total += ref.tensor->size();
        CHECK(total == param_count(c));
    }
}

TEST_CASE("fuse is the weighted elementwise sum") {
    Tensor ht({2}, {1, 0});
    Tensor hf({2}, {0, 1});
    const Tensor keep_time = fuse(ht, hf, 1.0, 0.0);
    CHECK(keep_time[0] == 1.0);
    CHECK(keep_time[1] == 0.0);
    const Tensor zero = fuse(ht, hf, 0.0, 0.0);
    CHECK(zero[0] == 0.0);
    CHECK(zero[1] == 0.0);
    const Tensor mix = fuse(ht, hf, 2.0, 3.0);
    CHECK(mix[0] == 2.0);
    CHECK(mix[1] == 3.0);
}

TEST_CASE("fuse is bilinear in the weights and the inputs") {
    Rng rng(3, "test.fuse");
    Tensor ht({4}), hf({4}), ht2({4});
    for (std::size_t i = 0; i < 4; ++i) {
        ht[i] = rng.uniform(-1, 1);
        hf[i] = rng.uniform(-1, 1);
        ht2[i] = rng.uniform(-1, 1);
    }
    const double a1 = 0.7, a2 = -1.3, b = 0.4;
    const Tensor lhs = fuse(ht, hf, a1 + a2, b);
    const Tensor r1 = fuse(ht, hf, a1, b);
    const Tensor r2 = fuse(ht, hf, a2, 0.0);
    Tensor sum_in({4});
    for (std::size_t i = 0; i < 4; ++i) sum_in[i] = ht[i] + ht2[i];
    const Tensor lhs_in = fuse(sum_in, hf, a1, b);
    const Tensor r3 = fuse(ht, hf, a1, b);
    const Tensor r4 = fuse(ht2, hf, a1, 0.0);
    for (std::size_t i = 0; i < 4; ++i) {
        CHECK(lhs[i] == doctest::Approx(r1[i] + r2[i]).epsilon(1e-12));
        CHECK(lhs_in[i] == doctest::Approx(r3[i] + r4[i]).epsilon(1e-12));
    }
}

TEST_CASE("classify output lies strictly inside (0, 1)") {
    const ModelConfig c = small_config();
    Rng rng(5, "model_init");
    const ModelParams params = model_init(c, rng);
    for (std::uint64_t s = 0; s < 5; ++s) {
        const double out = model_forward(params, c, random_window(c, s), nullptr, false);
        CHECK(out > 0.0);
        CHECK(out < 1.0);
    }
}

TEST_CASE("full forward composes the branch operations") {
    const ModelConfig c = small_config();
    Rng rng(8, "model_init");
    const ModelParams params = model_init(c, rng);
    const Tensor window = random_window(c, 17);

    ForwardCache cache;
    const double out = model_forward(params, c, window, nullptr, false, &cache);

    // Oracle: call the published pieces one by one.
    const Tensor h_time = ssm_forward(params.ssm, window, nullptr, c.pool);
    const Tensor spect = spectral_features(window, c.bins(), c.taper);
    const Tensor h_freq = linear_forward(params.proj_freq_w, params.proj_freq_b, spect);
    const Tensor z = fuse(h_time, h_freq, params.alpha.value(), params.beta.value());
    double logit = params.head_b.value();
    for (std::size_t i = 0; i < z.size(); ++i) logit += params.head_w[i] * z[i];
    const double expect = 1.0 / (1.0 + std::exp(-logit));

    CHECK(cache.pre_activation == doctest::Approx(logit).epsilon(1e-12));
    CHECK(out == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("no_both depends only on column means while no_freq does not") {
    const ModelConfig time_only = small_config(Variant::no_freq);
    const ModelConfig mean_only = small_config(Variant::no_both);
    Rng r1(4, "model_init"), r2(4, "model_init");
    const ModelParams params_time = model_init(time_only, r1);
    const ModelParams params_mean = model_init(mean_only, r2);

    const Tensor window = random_window(time_only, 23);
    Tensor rotated({window.rows(), window.cols()});
    for (std::size_t t = 0; t < window.rows(); ++t) {
        for (std::size_t j = 0; j < window.cols(); ++j) {
            rotated((t + 5) % window.rows(), j) = window(t, j);
        }
    }

    const double mean_a = model_forward(params_mean, mean_only, window, nullptr, false);
    const double mean_b = model_forward(params_mean, mean_only, rotated, nullptr, false);
    CHECK(mean_a == doctest::Approx(mean_b).epsilon(1e-12));

    const double time_a = model_forward(params_time, time_only, window, nullptr, false);
    const double time_b = model_forward(params_time, time_only, rotated, nullptr, false);
    CHECK(time_a != time_b);
}

TEST_CASE("with beta zero the output ignores the spectral projection") {
    const ModelConfig c = small_config();
    Rng rng(6, "model_init");
    ModelParams params = model_init(c, rng);
    params.beta = Tensor::scalar(0.0);
    const Tensor window = random_window(c, 31);
    const double before = model_forward(params, c, window, nullptr, false);
    for (std::size_t i = 0; i < params.proj_freq_w.size(); ++i) {
        params.proj_freq_w[i] += 7.5;
    }
    const double after = model_forward(params, c, window, nullptr, false);
    CHECK(before == after);
}

TEST_CASE("loss values match the stated cases") {
    CHECK(model_loss(0.0, 1.0, Task::classify) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
    CHECK(model_loss(2.5, 2.5, Task::regress) == 0.0);
    const double big = model_loss(100.0, 1.0, Task::classify);
    CHECK(std::isfinite(big));
    CHECK(big < 1e-10);
    const double other_side = model_loss(-100.0, 0.0, Task::classify);
    CHECK(std::isfinite(other_side));
    CHECK(other_side < 1e-10);
}

TEST_CASE("backward of a zero loss gradient is zero everywhere") {
    const ModelConfig c = small_config();
    Rng rng(2, "model_init");
    ModelParams params = model_init(c, rng);
    ForwardCache cache;
    model_forward(params, c, random_window(c, 40), nullptr, false, &cache);
    ModelParams grads = model_backward(params, c, cache, 0.0);
    for (const ParamRef& ref : param_refs(grads, c)) {
        for (std::size_t i = 0; i < ref.tensor->size(); ++i) {
            CHECK((*ref.tensor)[i] == 0.0);
        }
    }
}

TEST_CASE("no_freq alpha gradient equals grad_z dot h_time") {
    const ModelConfig c = small_config(Variant::no_freq);
    Rng rng(12, "model_init");
    ModelParams params = model_init(c, rng);
    const Tensor window = random_window(c, 50);
    ForwardCache cache;
    model_forward(params, c, window, nullptr, false, &cache);
    const double go = 0.8;
    const ModelParams grads = model_backward(params, c, cache, go);

    double expect = 0.0;  // eval mask is all ones, so grad_z = head_w * go
    for (std::size_t i = 0; i < c.fusion_dim; ++i) {
        expect += params.head_w[i] * go * cache.h_time[i];
    }
    CHECK(grads.alpha.value() == doctest::Approx(expect).epsilon(1e-12));
    CHECK(grads.beta.size() == 0);  // no spectral branch, no beta
}

TEST_CASE("end-to-end gradients pass finite differences on the full variant") {
    const ModelConfig c = small_config();
    Rng rng(33, "model_init");
    ModelParams params = model_init(c, rng);
    const Tensor window = random_window(c, 60);
    const double label = 1.0;

    auto loss = [&] {
        ForwardCache cache;
        model_forward(params, c, window, nullptr, false, &cache);
        return model_loss(cache.pre_activation, label, c.task);
    };
    auto analytic = [&] {
        ForwardCache cache;
        model_forward(params, c, window, nullptr, false, &cache);
        const double go = model_loss_grad(cache.pre_activation, label, c.task);
        ModelParams g = model_backward(params, c, cache, go);
        std::vector<Tensor> out;
        for (const ParamRef& ref : param_refs(g, c)) out.push_back(*ref.tensor);
        return out;
    };
    std::vector<std::pair<std::string, Tensor*>> refs;
    for (const ParamRef& ref : param_refs(params, c)) refs.emplace_back(ref.name, ref.tensor);
    const GradCheckReport report = grad_check(loss, refs, analytic);
    CHECK(report.worst() < 1e-4);
}

TEST_CASE("dropout mask is replayed exactly through backward") {
    ModelConfig c = small_config();
    c.dropout_rate = 0.5;
    Rng init(3, "model_init");
    ModelParams params = model_init(c, init);
    const Tensor window = random_window(c, 70);

    Rng drop(19, "dropout");
    ForwardCache cache;
    model_forward(params, c, window, &drop, true, &cache);
    const ModelParams grads = model_backward(params, c, cache, 1.0);
    for (std::size_t i = 0; i < c.fusion_dim; ++i) {
        if (cache.mask[i] == 0.0) {
            // A dropped unit contributes nothing to the head weight grad.
            CHECK(grads.head_w[i] == 0.0);
        }
    }
}

TEST_CASE("fit with zero epochs leaves parameters untouched") {
    const ModelConfig c = small_config();
    Rng rng(14, "model_init");
    ModelParams params = model_init(c, rng);
    ModelParams before = params;
    std::vector<Tensor> windows{random_window(c, 1), random_window(c, 2)};
    std::vector<double> targets{0.0, 1.0};
    const FitTrace trace = fit(params, c, windows, targets, {0, 32, 1e-3, 7});
    CHECK(trace.epoch_loss.empty());
    const auto refs_a = param_refs(params, c);
    const auto refs_b = param_refs(before, c);
    for (std::size_t p = 0; p < refs_a.size(); ++p) {
        for (std::size_t i = 0; i < refs_a[p].tensor->size(); ++i) {
            CHECK((*refs_a[p].tensor)[i] == (*refs_b[p].tensor)[i]);
        }
    }
}

TEST_CASE("fit is deterministic under the same seed and data") {
    ModelConfig c = small_config();
    c.dropout_rate = 0.3;
    std::vector<Tensor> windows;
    std::vector<double> targets;
    for (std::uint64_t s = 0; s < 24; ++s) {
        windows.push_back(random_window(c, s));
        targets.push_back(s % 2 ? 1.0 : 0.0);
    }
    auto train_once = [&] {
        Rng rng(77, "model_init");
        ModelParams params = model_init(c, rng);
        fit(params, c, windows, targets, {3, 8, 1e-3, 55});
        return params;
    };
    ModelParams a = train_once();
    ModelParams b = train_once();
    const auto refs_a = param_refs(a, c);
    const auto refs_b = param_refs(b, c);
    for (std::size_t p = 0; p < refs_a.size(); ++p) {
        for (std::size_t i = 0; i < refs_a[p].tensor->size(); ++i) {
            CHECK((*refs_a[p].tensor)[i] == (*refs_b[p].tensor)[i]);
        }
    }
}

TEST_CASE("fit on a linearly separable toy drives the loss down") {
    ModelConfig c = small_config();
    c.dropout_rate = 0.1;
    std::vector<Tensor> windows;
    std::vector<double> targets;
    Rng noise(5, "test.toy");
    for (int i = 0; i < 200; ++i) {
        const double level = i % 2 ? 0.9 : 0.1;
        Tensor w({c.window_len, c.feature_dim});
        for (std::size_t e = 0; e < w.size(); ++e) {
            w[e] = level + 0.05 * noise.uniform(-1.0, 1.0);
        }
        windows.push_back(std::move(w));
        targets.push_back(i % 2 ? 1.0 : 0.0);
    }
    Rng rng(21, "model_init");
    ModelParams params = model_init(c, rng);
    const FitTrace trace = fit(params, c, windows, targets, {50, 32, 1e-3, 9});
    REQUIRE(trace.epoch_loss.size() == 50);
    // Measured at this seed: epoch 1 = 1.2117, epoch 50 = 0.2328 (ratio 0.19).
    CHECK(trace.epoch_loss.back() < 0.25 * trace.epoch_loss.front());
}

TEST_CASE("fit refuses single-class classification data") {
    const ModelConfig c = small_config();
    Rng rng(1, "model_init");
    ModelParams params = model_init(c, rng);
    std::vector<Tensor> windows{random_window(c, 1)};
    std::vector<double> targets{1.0};
    CHECK_THROWS_AS(fit(params, c, windows, targets, {1, 32, 1e-3, 1}), DataError);
}

TEST_CASE("predict applies the >= threshold convention and is deterministic") {
    ModelConfig c = small_config();
    Rng rng(2, "model_init");
    ModelParams params = model_init(c, rng);
    // Zero head forces logit 0, score exactly 0.5.
    params.head_w.fill(0.0);
    params.head_b = Tensor::scalar(0.0);
    std::vector<Tensor> windows{random_window(c, 5)};
    const Prediction p = predict(params, c, windows);
    CHECK(p.scores[0] == 0.5);
    CHECK(p.labels[0] == 1);
    const Prediction q = predict(params, c, windows);
    CHECK(p.scores[0] == q.scores[0]);
}

TEST_CASE("predict equals training-mode forward with dropout disabled") {
    ModelConfig c = small_config();
    c.dropout_rate = 0.0;
    Rng rng(31, "model_init");
    ModelParams params = model_init(c, rng);
    const Tensor window = random_window(c, 3);
    std::vector<Tensor> windows{window};
    const Prediction p = predict(params, c, windows);
    Rng unused(1, "unused");
    const double train_mode = model_forward(params, c, window, &unused, true);
    CHECK(p.scores[0] == train_mode);
}
