#include "mamnet/numerics.hpp"

#include <algorithm>
#include <cmath>

#include "mamnet/error.hpp"

namespace mamnet {

Tensor linear_forward(const Tensor& weights, const Tensor& bias, const Tensor& input,
                      LinearCache* cache) {
    const std::size_t m = weights.rows();
    const std::size_t p = weights.cols();
    if (bias.size() != m || input.size() != p) {
        throw ConfigError("linear_forward shape mismatch");
    }
    Tensor out({m});
    for (std::size_t i = 0; i < m; ++i) {
        double acc = bias[i];
        const double* w = weights.data() + i * p;
        for (std::size_t j = 0; j < p; ++j) acc += w[j] * input[j];
        out[i] = acc;
    }
    if (cache) cache->input = input;
    return out;
}

LinearGrads linear_backward(const Tensor& weights, const LinearCache& cache,
                            const Tensor& grad_out) {
    const std::size_t m = weights.rows();
    const std::size_t p = weights.cols();
    if (grad_out.size() != m || cache.input.size() != p) {
        throw ConfigError("linear_backward shape mismatch");
    }
    LinearGrads g{Tensor({m, p}), grad_out, Tensor({p})};
    for (std::size_t i = 0; i < m; ++i) {
        const double go = grad_out[i];
        double* gw = g.weights.data() + i * p;
        const double* w = weights.data() + i * p;
        for (std::size_t j = 0; j < p; ++j) {
            gw[j] = go * cache.input[j];
            g.input[j] += w[j] * go;
        }
    }
    return g;
}

AdamState AdamState::for_param(const Tensor& param, double lr) {
    AdamState s;
    s.m = Tensor(param.shape());
    s.v = Tensor(param.shape());
    s.lr = lr;
    return s;
}

void adam_step(AdamState& state, Tensor& param, const Tensor& grad) {
    if (!param.same_shape(grad) || !param.same_shape(state.m)) {
        throw ConfigError("adam_step shape mismatch");
    }
    if (!grad.finite()) throw NumericError("adam_step: non-finite gradient");
    state.t += 1;
    const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
    const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));
    for (std::size_t i = 0; i < param.size(); ++i) {
        const double g = grad[i];
        state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * g;
        state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * g * g;
        const double m_hat = state.m[i] / bc1;
        const double v_hat = state.v[i] / bc2;
        param[i] -= state.lr * m_hat / (std::sqrt(v_hat) + state.eps);
    }
}

DropoutResult dropout(const Tensor& input, double rate, Rng& rng, bool training) {
    if (rate < 0.0 || rate >= 1.0) throw ConfigError("dropout rate must be in [0, 1)");
    DropoutResult r{input, Tensor(input.shape())};
    if (!training || rate == 0.0) {
        r.mask.fill(1.0);
        return r;
    }
    const double scale = 1.0 / (1.0 - rate);
    for (std::size_t i = 0; i < input.size(); ++i) {
        const double keep = rng.uniform() >= rate ? scale : 0.0;
        r.mask[i] = keep;
        r.output[i] = input[i] * keep;
    }
    return r;
}

double GradCheckReport::worst() const {
    double w = 0.0;
    for (const auto& e : entries) w = std::max(w, e.max_rel_err);
    return w;
}

GradCheckReport grad_check(const std::function<double()>& loss,
                           const std::vector<std::pair<std::string, Tensor*>>& params,
                           const std::function<std::vector<Tensor>()>& analytic,
                           double h) {
    const std::vector<Tensor> grads = analytic();
    if (grads.size() != params.size()) {
        throw ConfigError("grad_check: analytic gradient count does not match parameters");
    }
    GradCheckReport report;
    for (std::size_t p = 0; p < params.size(); ++p) {
        Tensor& theta = *params[p].second;
        if (!theta.same_shape(grads[p])) {
            throw ConfigError("grad_check: gradient shape mismatch for " + params[p].first);
        }
        GradCheckEntry entry{params[p].first, 0.0};
        for (std::size_t i = 0; i < theta.size(); ++i) {
            const double saved = theta[i];
            theta[i] = saved + h;
            const double up = loss();
            theta[i] = saved - h;
            const double down = loss();
            theta[i] = saved;
            const double fd = (up - down) / (2.0 * h);
            const double a = grads[p][i];
            const double denom = std::max({std::abs(a), std::abs(fd), 1e-8});
            entry.max_rel_err = std::max(entry.max_rel_err, std::abs(a - fd) / denom);
        }
        report.entries.push_back(entry);
    }
    return report;
}

}  // namespace mamnet
