#include "mamnet/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mamnet/error.hpp"

namespace mamnet {

std::string to_string(Task t) { return t == Task::classify ? "classify" : "regress"; }

std::string to_string(Variant v) {
    switch (v) {
        case Variant::full: return "full";
        case Variant::no_time: return "no_time";
        case Variant::no_freq: return "no_freq";
        case Variant::no_both: return "no_both";
    }
    return "full";
}

Task task_from_string(const std::string& s) {
    if (s == "classify") return Task::classify;
    if (s == "regress") return Task::regress;
    throw ConfigError("unknown task '" + s + "' (expected classify or regress)");
}

Variant variant_from_string(const std::string& s) {
    if (s == "full") return Variant::full;
    if (s == "no_time") return Variant::no_time;
    if (s == "no_freq") return Variant::no_freq;
    if (s == "no_both") return Variant::no_both;
    throw ConfigError("unknown variant '" + s +
                      "' (expected full, no_time, no_freq, or no_both)");
}

std::size_t ModelConfig::bins() const {
    const std::size_t cap = window_len / 2 + 1;
    if (spectral_bins == 0) return std::min<std::size_t>(16, cap);
    return spectral_bins;
}

std::size_t ModelConfig::spectral_len() const { return feature_dim * bins(); }

void ModelConfig::validate() const {
    if (window_len == 0 || feature_dim == 0 || state_dim == 0 || fusion_dim == 0) {
        throw ConfigError("model config: all dimensions must be >= 1");
    }
    if (bins() > window_len / 2 + 1) {
        throw ConfigError("model config: spectral_bins exceeds floor(W/2)+1");
    }
    if (dropout_rate < 0.0 || dropout_rate >= 1.0) {
        throw ConfigError("model config: dropout_rate must be in [0, 1)");
    }
}

namespace {

bool uses_time(Variant v) { return v == Variant::full || v == Variant::no_freq; }
bool uses_freq(Variant v) { return v == Variant::full || v == Variant::no_time; }

double fan_bound(std::size_t fan_in, std::size_t fan_out) {
    return std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
}

void fill_uniform(Tensor& t, double bound, Rng& rng) {
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(-bound, bound);
}

double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

}  // namespace

std::vector<ParamRef> param_refs(ModelParams& p, Variant variant) {
    std::vector<ParamRef> refs;
    if (uses_time(variant)) {
        refs.push_back({"ssm.rho", &p.ssm.rho});
        refs.push_back({"ssm.B", &p.ssm.B});
        refs.push_back({"ssm.C", &p.ssm.C});
        refs.push_back({"ssm.D", &p.ssm.D});
        refs.push_back({"alpha", &p.alpha});
    }
    if (uses_freq(variant)) {
        refs.push_back({"proj_freq.w", &p.proj_freq_w});
        refs.push_back({"proj_freq.b", &p.proj_freq_b});
        refs.push_back({"beta", &p.beta});
    }
    if (variant == Variant::no_both) {
        refs.push_back({"proj_res.w", &p.proj_res_w});
        refs.push_back({"proj_res.b", &p.proj_res_b});
    }
    refs.push_back({"head.w", &p.head_w});
    refs.push_back({"head.b", &p.head_b});
    return refs;
}

std::vector<ParamRef> param_refs(ModelParams& p, const ModelConfig& config) {
    return param_refs(p, config.variant);
}

std::size_t param_count(const ModelConfig& config) {
    const std::size_t n = config.state_dim;
    const std::size_t f = config.feature_dim;
    const std::size_t m = config.fusion_dim;
    std::size_t count = m + 1;  // head
    if (uses_time(config.variant)) count += n + n * f + m * n + m * f + 1;
    if (uses_freq(config.variant)) count += m * config.spectral_len() + m + 1;
    if (config.variant == Variant::no_both) count += m * f + m;
    return count;
}

ModelParams zeros_like(const ModelConfig& config) {
    const std::size_t n = config.state_dim;
    const std::size_t f = config.feature_dim;
    const std::size_t m = config.fusion_dim;
    ModelParams p;
    if (uses_time(config.variant)) {
        p.ssm.rho = Tensor({n});
        p.ssm.B = Tensor({n, f});
        p.ssm.C = Tensor({m, n});
        p.ssm.D = Tensor({m, f});
        p.alpha = Tensor({1});
    }
    if (uses_freq(config.variant)) {
        p.proj_freq_w = Tensor({m, config.spectral_len()});
        p.proj_freq_b = Tensor({m});
        p.beta = Tensor({1});
    }
    if (config.variant == Variant::no_both) {
        p.proj_res_w = Tensor({m, f});
        p.proj_res_b = Tensor({m});
    }
    p.head_w = Tensor({m});
    p.head_b = Tensor({1});
    return p;
}

ModelParams model_init(const ModelConfig& config, Rng& rng) {
    config.validate();
    const std::size_t f = config.feature_dim;
    const std::size_t m = config.fusion_dim;
    ModelParams p = zeros_like(config);
    if (uses_time(config.variant)) {
        p.ssm = ssm_init(config.state_dim, f, m, rng);
        p.alpha = Tensor::scalar(1.0);
    }
    if (uses_freq(config.variant)) {
        fill_uniform(p.proj_freq_w, fan_bound(config.spectral_len(), m), rng);
        p.beta = Tensor::scalar(1.0);
    }
    if (config.variant == Variant::no_both) {
        fill_uniform(p.proj_res_w, fan_bound(f, m), rng);
    }
    fill_uniform(p.head_w, fan_bound(m, 1), rng);
    return p;
}

Tensor fuse(const Tensor& h_time, const Tensor& h_freq, double alpha, double beta) {
    if (!h_time.same_shape(h_freq)) throw ConfigError("fuse: shape mismatch");
    Tensor z(h_time.shape());
    for (std::size_t i = 0; i < z.size(); ++i) {
        z[i] = alpha * h_time[i] + beta * h_freq[i];
    }
    return z;
}

double model_forward(const ModelParams& params, const ModelConfig& config,
                     const Tensor& window, Rng* rng, bool training,
                     ForwardCache* cache) {
    if (window.rank() != 2 || window.rows() != config.window_len ||
        window.cols() != config.feature_dim) {
        throw ConfigError("model_forward: window must be W x F per config");
    }
    if (!window.finite()) throw DataError("model_forward: non-finite window");
    const std::size_t m = config.fusion_dim;

    ForwardCache local;
    ForwardCache& c = cache ? *cache : local;

    Tensor z;
    switch (config.variant) {
        case Variant::full: {
            c.h_time = ssm_forward(params.ssm, window, &c.ssm, config.pool);
            c.spectral = spectral_features(window, config.bins(), config.taper);
            LinearCache lc;
            c.h_freq = linear_forward(params.proj_freq_w, params.proj_freq_b, c.spectral, &lc);
            z = fuse(c.h_time, c.h_freq, params.alpha.value(), params.beta.value());
            break;
        }
        case Variant::no_time: {
            c.spectral = spectral_features(window, config.bins(), config.taper);
            c.h_freq = linear_forward(params.proj_freq_w, params.proj_freq_b, c.spectral);
            z = Tensor({m});
            const double beta = params.beta.value();
            for (std::size_t i = 0; i < m; ++i) z[i] = beta * c.h_freq[i];
            break;
        }
        case Variant::no_freq: {
            c.h_time = ssm_forward(params.ssm, window, &c.ssm, config.pool);
            z = Tensor({m});
            const double alpha = params.alpha.value();
            for (std::size_t i = 0; i < m; ++i) z[i] = alpha * c.h_time[i];
            break;
        }
        case Variant::no_both: {
            c.col_means = Tensor({config.feature_dim});
            for (std::size_t t = 0; t < config.window_len; ++t) {
                for (std::size_t j = 0; j < config.feature_dim; ++j) {
                    c.col_means[j] += window(t, j);
                }
            }
            for (std::size_t j = 0; j < config.feature_dim; ++j) {
                c.col_means[j] /= static_cast<double>(config.window_len);
            }
            z = linear_forward(params.proj_res_w, params.proj_res_b, c.col_means);
            break;
        }
    }
    if (!z.finite()) throw NumericError("model_forward: non-finite fused vector");
    c.fused = z;

    if (training && config.dropout_rate > 0.0) {
        if (!rng) throw ConfigError("model_forward: training with dropout needs an Rng");
        DropoutResult d = dropout(z, config.dropout_rate, *rng, true);
        c.dropped = std::move(d.output);
        c.mask = std::move(d.mask);
    } else {
        c.dropped = z;
        c.mask = Tensor(z.shape());
        c.mask.fill(1.0);
    }

    double out = params.head_b.value();
    for (std::size_t i = 0; i < m; ++i) out += params.head_w[i] * c.dropped[i];
    if (!std::isfinite(out)) throw NumericError("model_forward: non-finite head output");
    c.pre_activation = out;

    return config.task == Task::classify ? sigmoid(out) : out;
}

double model_loss(double pre_activation, double label, Task task) {
    if (task == Task::regress) {
        const double d = pre_activation - label;
        return d * d;
    }
    // Stable BCE on the logit: max(o,0) - o*y + log(1 + exp(-|o|)).
    const double o = pre_activation;
    return std::max(o, 0.0) - o * label + std::log1p(std::exp(-std::abs(o)));
}

double model_loss_grad(double pre_activation, double label, Task task) {
    if (task == Task::regress) return 2.0 * (pre_activation - label);
    return sigmoid(pre_activation) - label;
}

ModelParams model_backward(const ModelParams& params, const ModelConfig& config,
                           const ForwardCache& cache, double grad_out) {
    const std::size_t m = config.fusion_dim;
    ModelParams g = zeros_like(config);

    // Head.
    g.head_b[0] = grad_out;
    Tensor grad_dropped({m});
    for (std::size_t i = 0; i < m; ++i) {
        g.head_w[i] = grad_out * cache.dropped[i];
        grad_dropped[i] = params.head_w[i] * grad_out;
    }

    // Replay the dropout mask.
    Tensor grad_z({m});
    for (std::size_t i = 0; i < m; ++i) grad_z[i] = grad_dropped[i] * cache.mask[i];

    switch (config.variant) {
        case Variant::full: {
            double ga = 0.0, gb = 0.0;
            Tensor grad_h_time({m}), grad_h_freq({m});
            const double alpha = params.alpha.value();
            const double beta = params.beta.value();
            for (std::size_t i = 0; i < m; ++i) {
                ga += grad_z[i] * cache.h_time[i];
                gb += grad_z[i] * cache.h_freq[i];
                grad_h_time[i] = alpha * grad_z[i];
                grad_h_freq[i] = beta * grad_z[i];
            }
            g.alpha[0] = ga;
            g.beta[0] = gb;
            LinearCache lc{cache.spectral};
            LinearGrads pg = linear_backward(params.proj_freq_w, lc, grad_h_freq);
            g.proj_freq_w = std::move(pg.weights);
            g.proj_freq_b = std::move(pg.bias);
            SsmGrads sg = ssm_backward(params.ssm, cache.ssm, grad_h_time);
            g.ssm.rho = std::move(sg.rho);
            g.ssm.B = std::move(sg.B);
            g.ssm.C = std::move(sg.C);
            g.ssm.D = std::move(sg.D);
            break;
        }
        case Variant::no_time: {
            double gb = 0.0;
            Tensor grad_h_freq({m});
            const double beta = params.beta.value();
            for (std::size_t i = 0; i < m; ++i) {
                gb += grad_z[i] * cache.h_freq[i];
                grad_h_freq[i] = beta * grad_z[i];
            }
            g.beta[0] = gb;
            LinearCache lc{cache.spectral};
            LinearGrads pg = linear_backward(params.proj_freq_w, lc, grad_h_freq);
            g.proj_freq_w = std::move(pg.weights);
            g.proj_freq_b = std::move(pg.bias);
            break;
        }
        case Variant::no_freq: {
            double ga = 0.0;
            Tensor grad_h_time({m});
            const double alpha = params.alpha.value();
            for (std::size_t i = 0; i < m; ++i) {
                ga += grad_z[i] * cache.h_time[i];
                grad_h_time[i] = alpha * grad_z[i];
            }
            g.alpha[0] = ga;
            SsmGrads sg = ssm_backward(params.ssm, cache.ssm, grad_h_time);
            g.ssm.rho = std::move(sg.rho);
            g.ssm.B = std::move(sg.B);
            g.ssm.C = std::move(sg.C);
            g.ssm.D = std::move(sg.D);
            break;
        }
        case Variant::no_both: {
            LinearCache lc{cache.col_means};
            LinearGrads pg = linear_backward(params.proj_res_w, lc, grad_z);
            g.proj_res_w = std::move(pg.weights);
            g.proj_res_b = std::move(pg.bias);
            break;
        }
    }
    return g;
}

FitTrace fit(ModelParams& params, const ModelConfig& config,
             std::span<const Tensor> windows, std::span<const double> targets,
             const FitOptions& options) {
    if (windows.empty()) throw DataError("fit: no training windows");
    if (windows.size() != targets.size()) {
        throw DataError("fit: window and target counts differ");
    }
    if (options.batch_size == 0) throw ConfigError("fit: batch_size must be >= 1");
    if (config.task == Task::classify) {
        bool has0 = false, has1 = false;
        for (double t : targets) (t >= 0.5 ? has1 : has0) = true;
        if (!has0 || !has1) {
            throw DataError("fit: classify task requires both labels present");
        }
    }

    std::vector<ParamRef> refs = param_refs(params, config);
    std::vector<AdamState> opt;
    opt.reserve(refs.size());
    for (const ParamRef& r : refs) {
        opt.push_back(AdamState::for_param(*r.tensor, options.learning_rate));
    }

    Rng shuffle_rng(options.seed, "fit.shuffle");
    Rng dropout_rng(options.seed, "fit.dropout");
    std::vector<std::size_t> order(windows.size());
    std::iota(order.begin(), order.end(), std::size_t{0});

    FitTrace trace;
    for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
        shuffle_rng.shuffle(order);
        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < order.size(); start += options.batch_size) {
            const std::size_t stop = std::min(order.size(), start + options.batch_size);
            const double inv = 1.0 / static_cast<double>(stop - start);
            ModelParams acc = zeros_like(config);
            std::vector<ParamRef> acc_refs = param_refs(acc, config);
            for (std::size_t k = start; k < stop; ++k) {
                const std::size_t idx = order[k];
                ForwardCache cache;
                model_forward(params, config, windows[idx], &dropout_rng, true, &cache);
                const double loss =
                    model_loss(cache.pre_activation, targets[idx], config.task);
                if (std::isnan(loss)) {
                    throw NumericError("fit: NaN loss at epoch " + std::to_string(epoch + 1));
                }
                epoch_loss += loss;
                const double go =
                    model_loss_grad(cache.pre_activation, targets[idx], config.task);
                ModelParams g = model_backward(params, config, cache, go);
                std::vector<ParamRef> g_refs = param_refs(g, config);
                for (std::size_t p = 0; p < acc_refs.size(); ++p) {
                    axpy(*acc_refs[p].tensor, inv, *g_refs[p].tensor);
                }
            }
            for (std::size_t p = 0; p < refs.size(); ++p) {
                adam_step(opt[p], *refs[p].tensor, *acc_refs[p].tensor);
            }
        }
        trace.epoch_loss.push_back(epoch_loss / static_cast<double>(windows.size()));
    }
    return trace;
}

Prediction predict(const ModelParams& params, const ModelConfig& config,
                   std::span<const Tensor> windows) {
    Prediction pred;
    pred.scores.reserve(windows.size());
    pred.labels.reserve(windows.size());
    for (const Tensor& w : windows) {
        const double score = model_forward(params, config, w, nullptr, false);
        pred.scores.push_back(score);
        pred.labels.push_back(
            config.task == Task::classify && score >= config.threshold ? 1 : 0);
    }
    return pred;
}

}  // namespace mamnet
