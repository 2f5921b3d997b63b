#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

namespace missddim {

/// Sinusoidal timestep embedding, layout [sin_0, cos_0, sin_1, cos_1, ...].
/// Requires t >= 1 and an even dimension.
Eigen::VectorXd time_embedding(int t, int dim);

/// One assembled network input: observed positions carry clean values,
/// generation targets carry the diffused iterate, and cond_mask tells the
/// network which is which.
struct ConditioningInput {
    Eigen::VectorXd x_noisy_full;  // length d_enc
    Eigen::VectorXd cond_mask;     // length d_enc, entries 0 or 1
    int t = 1;
};

/// Activations saved by a forward pass, consumed by the matching backward.
struct ForwardCache {
    Eigen::MatrixXd input;  // [x_full | cond_mask | embedding]
    Eigen::MatrixXd embed;
    Eigen::MatrixXd pre_input;            // pre-activation of the input projection
    std::vector<Eigen::MatrixXd> pre;     // per-block pre-activation
    std::vector<Eigen::MatrixXd> post;    // per-block post-nonlinearity
    std::vector<Eigen::MatrixXd> hidden;  // hidden[0] after input proj, hidden[k] after block k
};

/// Conditional noise-prediction network: an input projection, `depth`
/// residual MLP blocks with per-block time-embedding injection, and an
/// output projection back to encoded width. All math is 64-bit; forward and
/// backward are deterministic functions of (parameters, input).
///
/// Parameter tensors in declared (checkpoint) order:
///   input.W, input.b, then per block {W1, b1, P, bp, W2, b2}, then
///   output.W, output.b. Biases are stored as n-by-1 matrices.
class NoisePredictor {
public:
    using Gradients = std::vector<Eigen::MatrixXd>;

    /// Weights uniform in +-1/sqrt(fan_in), biases zero, deterministic in seed.
    static NoisePredictor init(int d_enc, int depth, int width, int time_embed_dim,
                               std::uint64_t seed);

    int d_enc() const { return d_enc_; }
    int depth() const { return depth_; }
    int width() const { return width_; }
    int time_embed_dim() const { return time_embed_dim_; }
    int input_width() const { return 2 * d_enc_ + time_embed_dim_; }
    std::uint64_t init_seed() const { return init_seed_; }

    std::vector<Eigen::MatrixXd>& parameters() { return params_; }
    const std::vector<Eigen::MatrixXd>& parameters() const { return params_; }
    std::size_t parameter_count() const;
    std::string tensor_name(std::size_t index) const;

    /// Batched forward: one row per example. `timesteps` has one entry per
    /// row. Pass a cache to enable a matching backward_batch call.
    Eigen::MatrixXd forward_batch(const Eigen::MatrixXd& x_full,
                                  const Eigen::MatrixXd& cond_mask,
                                  const std::vector<int>& timesteps,
                                  ForwardCache* cache = nullptr) const;

    /// Exact reverse-mode gradients of sum_i loss_i given d(loss)/d(output).
    Gradients backward_batch(const ForwardCache& cache, const Eigen::MatrixXd& output_grad) const;

    /// Single-example forward; retains activations so backward() can run.
    Eigen::VectorXd forward(const ConditioningInput& input);

    /// Gradients for the most recent forward(). State error if none is pending.
    Gradients backward(const Eigen::VectorXd& loss_grad);

    /// Zero-filled gradient buffers in declared order.
    Gradients zero_gradients() const;

    void check_parameters_finite(const char* when) const;

private:
    NoisePredictor() = default;

    // Declared-order parameter indices.
    std::size_t idx_input_w() const { return 0; }
    std::size_t idx_input_b() const { return 1; }
    std::size_t idx_block(int k, int slot) const { return 2 + 6 * static_cast<std::size_t>(k) + slot; }
    std::size_t idx_output_w() const { return 2 + 6 * static_cast<std::size_t>(depth_); }
    std::size_t idx_output_b() const { return idx_output_w() + 1; }

    int d_enc_ = 0;
    int depth_ = 0;
    int width_ = 0;
    int time_embed_dim_ = 0;
    std::uint64_t init_seed_ = 0;
    std::vector<Eigen::MatrixXd> params_;

    bool has_pending_forward_ = false;
    ForwardCache pending_cache_;
};

}  // namespace missddim
