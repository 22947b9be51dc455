#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mamnet/numerics.hpp"
#include "mamnet/rng.hpp"
#include "mamnet/spectral.hpp"
#include "mamnet/ssm.hpp"
#include "mamnet/tensor.hpp"

namespace mamnet {

enum class Task { classify, regress };

/// Ablation variants: the full two-branch network, each branch alone, and a
/// column-mean residual path with both branches removed.
enum class Variant { full, no_time, no_freq, no_both };

std::string to_string(Task t);
std::string to_string(Variant v);
Task task_from_string(const std::string& s);
Variant variant_from_string(const std::string& s);

struct ModelConfig {
    std::size_t window_len = 64;    // W
    std::size_t feature_dim = 4;    // F
    std::size_t state_dim = 16;     // N
    std::size_t fusion_dim = 16;    // M
    std::size_t spectral_bins = 0;  // K; 0 resolves to min(16, floor(W/2)+1)
    Task task = Task::classify;
    Variant variant = Variant::full;
    double dropout_rate = 0.3;
    double threshold = 0.5;
    Taper taper = Taper::rectangular;
    PoolMode pool = PoolMode::mean;

    std::size_t bins() const;          // resolved K
    std::size_t spectral_len() const;  // F * K
    void validate() const;             // throws ConfigError
};

/// Learnable parameters. Only the branches the variant uses are populated:
/// the SSM and alpha on full/no_freq, the spectral projection and beta on
/// full/no_time, the residual projection on no_both, the head always.
/// Scalars live in shape-{1} tensors so the optimizer, checkpointing, and
/// gradient checks treat every parameter uniformly.
struct ModelParams {
    SsmParams ssm;
    Tensor proj_freq_w;  // M x (F*K)
    Tensor proj_freq_b;  // M
    Tensor alpha;        // {1}
    Tensor beta;         // {1}
    Tensor proj_res_w;   // M x F
    Tensor proj_res_b;   // M
    Tensor head_w;       // M
    Tensor head_b;       // {1}
};

struct ParamRef {
    std::string name;
    Tensor* tensor;
};

/// Named references to the parameters the variant actually trains, in a
/// fixed order shared by the optimizer, checkpoints, and gradient checks.
std::vector<ParamRef> param_refs(ModelParams& params, const ModelConfig& config);
std::vector<ParamRef> param_refs(ModelParams& params, Variant variant);

/// Closed-form count of trainable scalars for the config.
std::size_t param_count(const ModelConfig& config);

/// Zero tensors shaped like the variant's parameters; used as a gradient
/// accumulator.
ModelParams zeros_like(const ModelConfig& config);

/// SSM via ssm_init, projections via the same uniform fan rule, alpha and
/// beta at exactly 1, head bias at zero.
ModelParams model_init(const ModelConfig& config, Rng& rng);

/// Eq-style weighted fusion z = alpha * h_time + beta * h_freq.
Tensor fuse(const Tensor& h_time, const Tensor& h_freq, double alpha, double beta);

struct ForwardCache {
    SsmCache ssm;
    Tensor spectral;   // F*K
    Tensor col_means;  // F, no_both only
    Tensor h_time;     // M
    Tensor h_freq;     // M
    Tensor fused;      // z before dropout
    Tensor dropped;    // z after dropout
    Tensor mask;
    double pre_activation = 0.0;
};

/// Returns sigmoid(pre_activation) for classify, the raw affine value for
/// regress. `rng` is only consulted when training with a positive dropout
/// rate. Throws NumericError naming the stage that produced a non-finite
/// value.
double model_forward(const ModelParams& params, const ModelConfig& config,
                     const Tensor& window, Rng* rng, bool training,
                     ForwardCache* cache = nullptr);

/// Classify: numerically stable binary cross-entropy from the pre-sigmoid
/// value. Regress: squared error.
double model_loss(double pre_activation, double label, Task task);

/// dL/d(pre-activation).
double model_loss_grad(double pre_activation, double label, Task task);

/// Gradients for every parameter the variant trains, replaying the cached
/// dropout mask. `grad_out` is dL/d(pre-activation).
ModelParams model_backward(const ModelParams& params, const ModelConfig& config,
                           const ForwardCache& cache, double grad_out);

struct FitOptions {
    std::size_t epochs = 20;
    std::size_t batch_size = 32;
    double learning_rate = 1e-3;
    std::uint64_t seed = 42;
};

struct FitTrace {
    std::vector<double> epoch_loss;  // mean training loss per epoch
};

/// Mini-batch Adam training with a seeded shuffle per epoch, mean-over-batch
/// gradients, and dropout active. Throws NumericError on NaN loss and
/// DataError on empty data.
FitTrace fit(ModelParams& params, const ModelConfig& config,
             std::span<const Tensor> windows, std::span<const double> targets,
             const FitOptions& options);

struct Prediction {
    std::vector<double> scores;  // sigmoid probability (classify) or value (regress)
    std::vector<int> labels;     // score >= threshold (classify only; else 0)
};

/// Eval-mode forward per window; deterministic.
Prediction predict(const ModelParams& params, const ModelConfig& config,
                   std::span<const Tensor> windows);

}  // namespace mamnet
