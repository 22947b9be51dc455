#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "mamnet/rng.hpp"
#include "mamnet/tensor.hpp"

namespace mamnet {

// ---------------------------------------------------------------------------
// Affine map y = W x + b and its adjoint.
// ---------------------------------------------------------------------------

struct LinearCache {
    Tensor input;
};

/// weights: M x P, bias: M, input: P -> output: M.
Tensor linear_forward(const Tensor& weights, const Tensor& bias, const Tensor& input,
                      LinearCache* cache = nullptr);

struct LinearGrads {
    Tensor weights;
    Tensor bias;
    Tensor input;
};

LinearGrads linear_backward(const Tensor& weights, const LinearCache& cache,
                            const Tensor& grad_out);

// ---------------------------------------------------------------------------
// Adam optimizer.
// ---------------------------------------------------------------------------

struct AdamState {
    Tensor m;  // first-moment accumulator, same shape as the parameter
    Tensor v;  // second-moment accumulator, elementwise >= 0
    std::uint64_t t = 0;
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;

    static AdamState for_param(const Tensor& param, double lr = 1e-3);
};

/// One bias-corrected Adam update in place. Throws NumericError on a
/// non-finite gradient.
void adam_step(AdamState& state, Tensor& param, const Tensor& grad);

// ---------------------------------------------------------------------------
// Inverted dropout.
// ---------------------------------------------------------------------------

struct DropoutResult {
    Tensor output;
    Tensor mask;  // per-element multiplier: 0 or 1/(1-rate); all ones in eval
};

/// Training: keep each element with probability 1-rate and scale the kept
/// ones by 1/(1-rate). Eval: exact identity. rate must be in [0, 1).
DropoutResult dropout(const Tensor& input, double rate, Rng& rng, bool training);

// ---------------------------------------------------------------------------
// Finite-difference gradient checking.
// ---------------------------------------------------------------------------

struct GradCheckEntry {
    std::string name;
    double max_rel_err = 0.0;
};

struct GradCheckReport {
    std::vector<GradCheckEntry> entries;
    double worst() const;
};

/// Compares analytic gradients against central differences with step h.
/// `loss` must re-evaluate the objective at the parameters' current values;
/// `analytic` is evaluated once at the base point and must return one
/// gradient tensor per parameter, in order. Relative error uses
/// max(|analytic|, |fd|, 1e-8) as the denominator. Call with dropout
/// disabled.
GradCheckReport grad_check(const std::function<double()>& loss,
                           const std::vector<std::pair<std::string, Tensor*>>& params,
                           const std::function<std::vector<Tensor>()>& analytic,
                           double h = 1e-5);

}  // namespace mamnet
