#pragma once

#include <cstddef>

#include "mamnet/rng.hpp"
#include "mamnet/tensor.hpp"

namespace mamnet {

/// How a window of per-step outputs collapses to one summary vector.
enum class PoolMode { mean, last };

/// Parameters of the linear state-space recurrence
///   x_{t+1} = A x_t + B u_t,   y_t = C x_t + D u_t
/// with A = diag(tanh(rho)). The tanh reparameterization keeps every
/// effective diagonal entry inside (-1, 1), so the scan is stable for any
/// finite rho.
struct SsmParams {
    Tensor rho;  // N, pre-activation transition diagonal
    Tensor B;    // N x F
    Tensor C;    // M x N
    Tensor D;    // M x F

    std::size_t state_dim() const { return rho.size(); }
    std::size_t input_dim() const { return B.cols(); }
    std::size_t output_dim() const { return C.rows(); }
};

struct SsmCache {
    Tensor window;   // W x F input
    Tensor states;   // (W+1) x N hidden states; row 0 is the zero vector
    Tensor outputs;  // W x M per-step outputs
    PoolMode pool = PoolMode::mean;
};

/// Draws tanh(rho) uniformly in [0.5, 0.95] (long-memory bias) and B, C, D
/// uniformly in +-sqrt(6/(fan_in+fan_out)).
SsmParams ssm_init(std::size_t state_dim, std::size_t input_dim, std::size_t output_dim,
                   Rng& rng);

/// Scans the window with x_0 = 0, observing before transitioning, and pools
/// the outputs. Throws DataError on non-finite input.
Tensor ssm_forward(const SsmParams& params, const Tensor& window, SsmCache* cache = nullptr,
                   PoolMode pool = PoolMode::mean);

struct SsmGrads {
    Tensor rho;
    Tensor B;
    Tensor C;
    Tensor D;
    Tensor window;
};

/// Adjoint of the scan: distributes the pooled gradient to each y_t and runs
/// lambda_t = A^T lambda_{t+1} + C^T dL/dy_t backwards. The rho gradient
/// carries the tanh'(rho) factor.
SsmGrads ssm_backward(const SsmParams& params, const SsmCache& cache,
                      const Tensor& grad_pooled);

}  // namespace mamnet
