#include "mamnet/ssm.hpp"

#include <cmath>

#include "mamnet/error.hpp"

namespace mamnet {

namespace {

double fan_bound(std::size_t fan_in, std::size_t fan_out) {
    return std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
}

void fill_uniform(Tensor& t, double bound, Rng& rng) {
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(-bound, bound);
}

}  // namespace

SsmParams ssm_init(std::size_t state_dim, std::size_t input_dim, std::size_t output_dim,
                   Rng& rng) {
    if (state_dim == 0 || input_dim == 0 || output_dim == 0) {
        throw ConfigError("ssm_init: dimensions must be >= 1");
    }
    SsmParams p;
    p.rho = Tensor({state_dim});
    for (std::size_t i = 0; i < state_dim; ++i) {
        p.rho[i] = std::atanh(rng.uniform(0.5, 0.95));
    }
    p.B = Tensor({state_dim, input_dim});
    p.C = Tensor({output_dim, state_dim});
    p.D = Tensor({output_dim, input_dim});
    fill_uniform(p.B, fan_bound(input_dim, state_dim), rng);
    fill_uniform(p.C, fan_bound(state_dim, output_dim), rng);
    fill_uniform(p.D, fan_bound(input_dim, output_dim), rng);
    return p;
}

Tensor ssm_forward(const SsmParams& params, const Tensor& window, SsmCache* cache,
                   PoolMode pool) {
    const std::size_t n = params.state_dim();
    const std::size_t f = params.input_dim();
    const std::size_t m = params.output_dim();
    if (window.rank() != 2 || window.cols() != f) {
        throw ConfigError("ssm_forward: window must be W x F");
    }
    if (!window.finite()) throw DataError("ssm_forward: non-finite input window");
    const std::size_t w = window.rows();

    Tensor a({n});
    for (std::size_t i = 0; i < n; ++i) a[i] = std::tanh(params.rho[i]);

    Tensor states({w + 1, n});
    Tensor outputs({w, m});
    Tensor pooled({m});

    for (std::size_t t = 0; t < w; ++t) {
        const double* x = states.data() + t * n;
        const double* u = window.data() + t * f;
        double* y = outputs.data() + t * m;
        for (std::size_t i = 0; i < m; ++i) {
            double acc = 0.0;
            const double* c = params.C.data() + i * n;
            for (std::size_t j = 0; j < n; ++j) acc += c[j] * x[j];
            const double* d = params.D.data() + i * f;
            for (std::size_t j = 0; j < f; ++j) acc += d[j] * u[j];
            y[i] = acc;
        }
        double* xn = states.data() + (t + 1) * n;
        for (std::size_t i = 0; i < n; ++i) {
            double acc = a[i] * x[i];
            const double* b = params.B.data() + i * f;
            for (std::size_t j = 0; j < f; ++j) acc += b[j] * u[j];
            xn[i] = acc;
        }
        if (pool == PoolMode::mean) {
            for (std::size_t i = 0; i < m; ++i) pooled[i] += y[i];
        }
    }
    if (pool == PoolMode::mean) {
        for (std::size_t i = 0; i < m; ++i) pooled[i] /= static_cast<double>(w);
    } else {
        for (std::size_t i = 0; i < m; ++i) pooled[i] = outputs(w - 1, i);
    }

    if (cache) {
        cache->window = window;
        cache->states = std::move(states);
        cache->outputs = std::move(outputs);
        cache->pool = pool;
    }
    return pooled;
}

SsmGrads ssm_backward(const SsmParams& params, const SsmCache& cache,
                      const Tensor& grad_pooled) {
    const std::size_t n = params.state_dim();
    const std::size_t f = params.input_dim();
    const std::size_t m = params.output_dim();
    const std::size_t w = cache.window.rows();
    if (grad_pooled.size() != m) throw ConfigError("ssm_backward: gradient shape mismatch");

    Tensor a({n});
    for (std::size_t i = 0; i < n; ++i) a[i] = std::tanh(params.rho[i]);

    SsmGrads g{Tensor({n}), Tensor({n, f}), Tensor({m, n}), Tensor({m, f}),
               Tensor({w, f})};
    Tensor grad_a({n});
    Tensor lambda({n});  // dL/dx_{t+1} while stepping backwards; starts at zero

    for (std::size_t ti = w; ti-- > 0;) {
        const double* x = cache.states.data() + ti * n;
        const double* u = cache.window.data() + ti * f;
        double* gu = g.window.data() + ti * f;

        // dL/dy_t from the pooling rule.
        Tensor gy({m});
        if (cache.pool == PoolMode::mean) {
            for (std::size_t i = 0; i < m; ++i) {
                gy[i] = grad_pooled[i] / static_cast<double>(w);
            }
        } else if (ti == w - 1) {
            gy = grad_pooled;
        }

        // Contributions through x_{t+1} = A x_t + B u_t.
        for (std::size_t i = 0; i < n; ++i) {
            const double l = lambda[i];
            if (l == 0.0) continue;
            grad_a[i] += l * x[i];
            double* gb = g.B.data() + i * f;
            const double* b = params.B.data() + i * f;
            for (std::size_t j = 0; j < f; ++j) {
                gb[j] += l * u[j];
                gu[j] += b[j] * l;
            }
        }

        // Contributions through y_t = C x_t + D u_t, and the new lambda.
        Tensor next_lambda({n});
        for (std::size_t i = 0; i < n; ++i) next_lambda[i] = a[i] * lambda[i];
        for (std::size_t i = 0; i < m; ++i) {
            const double gyi = gy[i];
            if (gyi == 0.0) continue;
            double* gc = g.C.data() + i * n;
            const double* c = params.C.data() + i * n;
            for (std::size_t j = 0; j < n; ++j) {
                gc[j] += gyi * x[j];
                next_lambda[j] += c[j] * gyi;
            }
            double* gd = g.D.data() + i * f;
            const double* d = params.D.data() + i * f;
            for (std::size_t j = 0; j < f; ++j) {
                gd[j] += gyi * u[j];
                gu[j] += d[j] * gyi;
            }
        }
        lambda = std::move(next_lambda);
    }

    for (std::size_t i = 0; i < n; ++i) {
        g.rho[i] = grad_a[i] * (1.0 - a[i] * a[i]);
    }
    return g;
}

}  // namespace mamnet
