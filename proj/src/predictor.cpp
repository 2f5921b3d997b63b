#include "predictor.hpp"

#include <cmath>

#include "error.hpp"
#include "rng.hpp"

namespace missddim {

namespace {

Eigen::ArrayXXd sigmoid(const Eigen::ArrayXXd& x) {
    return 1.0 / (1.0 + (-x).exp());
}

Eigen::MatrixXd silu(const Eigen::MatrixXd& x) {
    const Eigen::ArrayXXd a = x.array();
    return (a * sigmoid(a)).matrix();
}

// d/dx silu(x) = s(x) * (1 + x * (1 - s(x)))
Eigen::MatrixXd silu_grad(const Eigen::MatrixXd& x) {
    const Eigen::ArrayXXd a = x.array();
    const Eigen::ArrayXXd s = sigmoid(a);
    return (s * (1.0 + a * (1.0 - s))).matrix();
}

void fill_embedding_row(double t, int dim, Eigen::Ref<Eigen::RowVectorXd> out) {
    for (int i = 0; i < dim / 2; ++i) {
        const double freq = std::pow(10000.0, 2.0 * i / dim);
        out(2 * i) = std::sin(t / freq);
        out(2 * i + 1) = std::cos(t / freq);
    }
}

void check_layer_finite(const Eigen::MatrixXd& m, int layer) {
    if (!m.allFinite()) {
        fail(ErrorCode::numeric, "non-finite activation at layer ", layer);
    }
}

}  // namespace

Eigen::VectorXd time_embedding(int t, int dim) {
    require(t >= 1, ErrorCode::param, "time_embedding requires t >= 1, got ", t);
    require(dim >= 2 && dim % 2 == 0, ErrorCode::param,
            "time_embedding requires an even dim >= 2, got ", dim);
    Eigen::RowVectorXd row(dim);
    fill_embedding_row(static_cast<double>(t), dim, row);
    return row.transpose();
}

NoisePredictor NoisePredictor::init(int d_enc, int depth, int width, int time_embed_dim,
                                    std::uint64_t seed) {
    require(d_enc >= 1, ErrorCode::param, "d_enc must be >= 1, got ", d_enc);
    require(depth >= 1, ErrorCode::param, "depth must be >= 1, got ", depth);
    require(width >= 1, ErrorCode::param, "width must be >= 1, got ", width);
    require(time_embed_dim >= 2 && time_embed_dim % 2 == 0, ErrorCode::param,
            "time_embed_dim must be even and >= 2, got ", time_embed_dim);

    NoisePredictor net;
    net.d_enc_ = d_enc;
    net.depth_ = depth;
    net.width_ = width;
    net.time_embed_dim_ = time_embed_dim;
    net.init_seed_ = seed;

    RandomStream rng(seed);
    auto affine = [&rng](int rows, int cols) {
        Eigen::MatrixXd w(rows, cols);
        const double limit = 1.0 / std::sqrt(static_cast<double>(cols));
        for (int r = 0; r < rows; ++r) {
            for (int c = 0; c < cols; ++c) {
                w(r, c) = rng.uniform(-limit, limit);
            }
        }
        return w;
    };

    const int d_in = net.input_width();
    net.params_.push_back(affine(width, d_in));
    net.params_.push_back(Eigen::MatrixXd::Zero(width, 1));
    for (int k = 0; k < depth; ++k) {
        net.params_.push_back(affine(width, width));            // W1
        net.params_.push_back(Eigen::MatrixXd::Zero(width, 1));  // b1
        net.params_.push_back(affine(width, time_embed_dim));    // P
        net.params_.push_back(Eigen::MatrixXd::Zero(width, 1));  // bp
        net.params_.push_back(affine(width, width));             // W2
        net.params_.push_back(Eigen::MatrixXd::Zero(width, 1));  // b2
    }
    net.params_.push_back(affine(d_enc, width));
    net.params_.push_back(Eigen::MatrixXd::Zero(d_enc, 1));

    net.check_parameters_finite("initialization");
    return net;
}

std::size_t NoisePredictor::parameter_count() const {
    std::size_t n = 0;
    for (const auto& p : params_) {
        n += static_cast<std::size_t>(p.size());
    }
    return n;
}

std::string NoisePredictor::tensor_name(std::size_t index) const {
    if (index == idx_input_w()) return "input.W";
    if (index == idx_input_b()) return "input.b";
    if (index == idx_output_w()) return "output.W";
    if (index == idx_output_b()) return "output.b";
    const std::size_t k = (index - 2) / 6;
    static const char* slots[] = {"W1", "b1", "P", "bp", "W2", "b2"};
    return "block" + std::to_string(k) + "." + slots[(index - 2) % 6];
}

Eigen::MatrixXd NoisePredictor::forward_batch(const Eigen::MatrixXd& x_full,
                                              const Eigen::MatrixXd& cond_mask,
                                              const std::vector<int>& timesteps,
                                              ForwardCache* cache) const {
    const auto batch = x_full.rows();
    require(x_full.cols() == d_enc_, ErrorCode::param, "input width ", x_full.cols(),
            " does not match model d_enc ", d_enc_);
    require(cond_mask.rows() == batch && cond_mask.cols() == d_enc_, ErrorCode::param,
            "cond_mask shape does not match input");
    require(static_cast<Eigen::Index>(timesteps.size()) == batch, ErrorCode::param,
            "timesteps size does not match batch");

    Eigen::MatrixXd embed(batch, time_embed_dim_);
    for (Eigen::Index r = 0; r < batch; ++r) {
        require(timesteps[r] >= 1, ErrorCode::param, "timestep must be >= 1, got ", timesteps[r]);
        fill_embedding_row(static_cast<double>(timesteps[r]), time_embed_dim_, embed.row(r));
    }

    Eigen::MatrixXd input(batch, input_width());
    input << x_full, cond_mask, embed;

    const auto& w_in = params_[idx_input_w()];
    const auto& b_in = params_[idx_input_b()];
    Eigen::MatrixXd pre_input = input * w_in.transpose();
    pre_input.rowwise() += b_in.col(0).transpose();
    check_layer_finite(pre_input, 0);
    Eigen::MatrixXd h = silu(pre_input);

    if (cache) {
        cache->input = input;
        cache->embed = embed;
        cache->pre_input = pre_input;
        cache->pre.clear();
        cache->post.clear();
        cache->hidden.clear();
        cache->hidden.push_back(h);
    }

    for (int k = 0; k < depth_; ++k) {
        const auto& w1 = params_[idx_block(k, 0)];
        const auto& b1 = params_[idx_block(k, 1)];
        const auto& p = params_[idx_block(k, 2)];
        const auto& bp = params_[idx_block(k, 3)];
        const auto& w2 = params_[idx_block(k, 4)];
        const auto& b2 = params_[idx_block(k, 5)];

        Eigen::MatrixXd pre = h * w1.transpose() + embed * p.transpose();
        pre.rowwise() += (b1.col(0) + bp.col(0)).transpose();
        Eigen::MatrixXd post = silu(pre);
        Eigen::MatrixXd delta = post * w2.transpose();
        delta.rowwise() += b2.col(0).transpose();
        h += delta;
        check_layer_finite(h, k + 1);
        if (cache) {
            cache->pre.push_back(std::move(pre));
            cache->post.push_back(std::move(post));
            cache->hidden.push_back(h);
        }
    }

    Eigen::MatrixXd out = h * params_[idx_output_w()].transpose();
    out.rowwise() += params_[idx_output_b()].col(0).transpose();
    check_layer_finite(out, depth_ + 1);
    return out;
}

NoisePredictor::Gradients NoisePredictor::backward_batch(const ForwardCache& cache,
                                                         const Eigen::MatrixXd& output_grad) const {
    require(cache.hidden.size() == static_cast<std::size_t>(depth_) + 1, ErrorCode::state,
            "backward called without a matching forward pass");
    require(output_grad.cols() == d_enc_ && output_grad.rows() == cache.input.rows(),
            ErrorCode::param, "output_grad shape does not match forward pass");

    Gradients grads = zero_gradients();

    grads[idx_output_w()] = output_grad.transpose() * cache.hidden.back();
    grads[idx_output_b()] = output_grad.colwise().sum().transpose();
    Eigen::MatrixXd dh = output_grad * params_[idx_output_w()];

    for (int k = depth_ - 1; k >= 0; --k) {
        const auto& w1 = params_[idx_block(k, 0)];
        const auto& w2 = params_[idx_block(k, 4)];
        const Eigen::MatrixXd dpost = dh * w2;
        grads[idx_block(k, 4)] = dh.transpose() * cache.post[k];
        grads[idx_block(k, 5)] = dh.colwise().sum().transpose();
        const Eigen::MatrixXd dpre = dpost.cwiseProduct(silu_grad(cache.pre[k]));
        grads[idx_block(k, 0)] = dpre.transpose() * cache.hidden[k];
        grads[idx_block(k, 1)] = dpre.colwise().sum().transpose();
        grads[idx_block(k, 2)] = dpre.transpose() * cache.embed;
        grads[idx_block(k, 3)] = grads[idx_block(k, 1)];
        dh += dpre * w1;
    }

    const Eigen::MatrixXd dpre_in = dh.cwiseProduct(silu_grad(cache.pre_input));
    grads[idx_input_w()] = dpre_in.transpose() * cache.input;
    grads[idx_input_b()] = dpre_in.colwise().sum().transpose();
    return grads;
}

Eigen::VectorXd NoisePredictor::forward(const ConditioningInput& input) {
    require(input.x_noisy_full.size() == d_enc_, ErrorCode::param, "input width ",
            input.x_noisy_full.size(), " does not match model d_enc ", d_enc_);
    require(input.cond_mask.size() == d_enc_, ErrorCode::param, "cond_mask width ",
            input.cond_mask.size(), " does not match model d_enc ", d_enc_);
    const Eigen::MatrixXd out = forward_batch(input.x_noisy_full.transpose(),
                                              input.cond_mask.transpose(), {input.t},
                                              &pending_cache_);
    has_pending_forward_ = true;
    return out.row(0).transpose();
}

NoisePredictor::Gradients NoisePredictor::backward(const Eigen::VectorXd& loss_grad) {
    require(has_pending_forward_, ErrorCode::state,
            "backward called without a pending forward pass");
    require(loss_grad.size() == d_enc_, ErrorCode::param, "loss_grad width ", loss_grad.size(),
            " does not match model d_enc ", d_enc_);
    has_pending_forward_ = false;
    return backward_batch(pending_cache_, loss_grad.transpose());
}

NoisePredictor::Gradients NoisePredictor::zero_gradients() const {
    Gradients grads;
    grads.reserve(params_.size());
    for (const auto& p : params_) {
        grads.push_back(Eigen::MatrixXd::Zero(p.rows(), p.cols()));
    }
    return grads;
}

void NoisePredictor::check_parameters_finite(const char* when) const {
    for (std::size_t i = 0; i < params_.size(); ++i) {
        if (!params_[i].allFinite()) {
            fail(ErrorCode::numeric, "non-finite parameter tensor ", tensor_name(i), " after ",
                 when);
        }
    }
}

}  // namespace missddim
