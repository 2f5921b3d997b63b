#include "training.hpp"

#include <algorithm>
#include <cmath>

#include "data.hpp"
#include "error.hpp"
#include "rng.hpp"

namespace missddim {

void TrainConfig::validate() const {
    require(epochs >= 0, ErrorCode::param, "epochs must be >= 0, got ", epochs);
    require(batch_size >= 1, ErrorCode::param, "batch_size must be >= 1, got ", batch_size);
    require(learning_rate > 0.0, ErrorCode::param, "learning_rate must be > 0, got ",
            learning_rate);
    require(adam_beta1 >= 0.0 && adam_beta1 < 1.0 && adam_beta2 >= 0.0 && adam_beta2 < 1.0,
            ErrorCode::param, "adam betas must lie in [0,1)");
    require(adam_eps > 0.0, ErrorCode::param, "adam_eps must be > 0");
    require(0.0 <= mask_ratio_min && mask_ratio_min <= mask_ratio_max && mask_ratio_max <= 1.0,
            ErrorCode::param, "mask ratios require 0 <= min <= max <= 1, got min=",
            mask_ratio_min, " max=", mask_ratio_max);
    require(checkpoint_every >= 0, ErrorCode::param, "checkpoint_every must be >= 0");
    require(depth >= 1 && width >= 1, ErrorCode::param, "depth and width must be >= 1");
    require(time_embed_dim >= 2 && time_embed_dim % 2 == 0, ErrorCode::param,
            "time_embed_dim must be even and >= 2");
}

SelfMaskSplit self_mask(const std::vector<int>& row_observed_idx, double ratio,
                        RandomStream& rng, const std::vector<int>& native_missing_idx) {
    require(ratio >= 0.0 && ratio <= 1.0, ErrorCode::param, "mask ratio must be in [0,1], got ",
            ratio);
    SelfMaskSplit split;
    split.native_missing_idx = native_missing_idx;
    if (row_observed_idx.empty()) {
        return split;  // row skipped: no targets, no context
    }
    const auto n_obs = static_cast<int>(row_observed_idx.size());
    const int n_target = static_cast<int>(std::ceil(ratio * n_obs));

    std::vector<int> pool = row_observed_idx;
    for (int i = 0; i < n_target; ++i) {
        const auto j = static_cast<int>(rng.uniform_int(i, n_obs - 1));
        std::swap(pool[i], pool[j]);
    }
    split.target_idx.assign(pool.begin(), pool.begin() + n_target);
    split.cond_idx.assign(pool.begin() + n_target, pool.end());
    std::sort(split.target_idx.begin(), split.target_idx.end());
    std::sort(split.cond_idx.begin(), split.cond_idx.end());
    return split;
}

Eigen::VectorXd forward_corrupt(const Eigen::VectorXd& x0_target, int t,
                                const NoiseSchedule& schedule, const Eigen::VectorXd& eps) {
    require(t >= 0 && t <= schedule.steps(), ErrorCode::param, "timestep ", t, " outside [0, ",
            schedule.steps(), "]");
    require(eps.size() == x0_target.size(), ErrorCode::param,
            "eps length does not match x0_target");
    const double a = schedule.alpha_bar(t);
    return std::sqrt(a) * x0_target + std::sqrt(1.0 - a) * eps;
}

namespace {

// Assembles the network input for one row under a self-mask split:
// conditioning positions keep clean values, target positions are diffused,
// everything else is zero with mask 0.
struct AssembledRow {
    Eigen::VectorXd x_full;
    Eigen::VectorXd cond_mask;
    Eigen::VectorXd target_mask;
};

AssembledRow assemble(const Eigen::VectorXd& encoded_row, const SelfMaskSplit& split, int t,
                      const Eigen::VectorXd& eps, const NoiseSchedule& schedule) {
    const auto d = encoded_row.size();
    AssembledRow out;
    out.x_full = Eigen::VectorXd::Zero(d);
    out.cond_mask = Eigen::VectorXd::Zero(d);
    out.target_mask = Eigen::VectorXd::Zero(d);
    for (const int i : split.cond_idx) {
        out.x_full(i) = encoded_row(i);
        out.cond_mask(i) = 1.0;
    }
    const double a = schedule.alpha_bar(t);
    const double sa = std::sqrt(a);
    const double sb = std::sqrt(1.0 - a);
    for (const int i : split.target_idx) {
        out.x_full(i) = sa * encoded_row(i) + sb * eps(i);
        out.target_mask(i) = 1.0;
    }
    return out;
}

}  // namespace

double loss(NoisePredictor& model, const Eigen::VectorXd& encoded_row, const SelfMaskSplit& split,
            int t, const Eigen::VectorXd& eps, const NoiseSchedule& schedule) {
    require(!split.target_idx.empty(), ErrorCode::param, "self-mask split has no targets");
    require(t >= 1 && t <= schedule.steps(), ErrorCode::param, "timestep ", t, " outside [1, ",
            schedule.steps(), "]");
    const AssembledRow row = assemble(encoded_row, split, t, eps, schedule);
    const Eigen::VectorXd pred = model.forward({row.x_full, row.cond_mask, t});
    double acc = 0.0;
    for (const int i : split.target_idx) {
        const double d = eps(i) - pred(i);
        acc += d * d;
    }
    return acc / static_cast<double>(split.target_idx.size());
}

AdamState AdamState::zeros_like(const std::vector<Eigen::MatrixXd>& params) {
    AdamState state;
    state.m.reserve(params.size());
    state.v.reserve(params.size());
    for (const auto& p : params) {
        state.m.push_back(Eigen::MatrixXd::Zero(p.rows(), p.cols()));
        state.v.push_back(Eigen::MatrixXd::Zero(p.rows(), p.cols()));
    }
    return state;
}

void adam_step(std::vector<Eigen::MatrixXd>& params, const NoisePredictor::Gradients& grads,
               AdamState& state, const TrainConfig& config, const NoisePredictor* names) {
    require(params.size() == grads.size() && params.size() == state.m.size(), ErrorCode::param,
            "adam_step tensor counts do not match");
    for (std::size_t i = 0; i < grads.size(); ++i) {
        require(grads[i].rows() == params[i].rows() && grads[i].cols() == params[i].cols(),
                ErrorCode::param, "gradient shape mismatch at tensor ", i);
        if (!grads[i].allFinite()) {
            fail(ErrorCode::numeric, "non-finite gradient for tensor ",
                 names ? names->tensor_name(i) : std::to_string(i));
        }
    }
    state.step += 1;
    const double bc1 = 1.0 - std::pow(config.adam_beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(config.adam_beta2, static_cast<double>(state.step));
    for (std::size_t i = 0; i < params.size(); ++i) {
        state.m[i] = config.adam_beta1 * state.m[i] + (1.0 - config.adam_beta1) * grads[i];
        state.v[i] = config.adam_beta2 * state.v[i] +
                     (1.0 - config.adam_beta2) * grads[i].cwiseProduct(grads[i]);
        const Eigen::ArrayXXd m_hat = state.m[i].array() / bc1;
        const Eigen::ArrayXXd v_hat = state.v[i].array() / bc2;
        params[i].array() -= config.learning_rate * m_hat / (v_hat.sqrt() + config.adam_eps);
    }
}

namespace {

std::vector<std::vector<int>> observed_index_lists(const TabularDataset& dataset) {
    const auto& mask = dataset.encoded_observed_mask();
    std::vector<std::vector<int>> lists(mask.rows());
    for (Eigen::Index r = 0; r < mask.rows(); ++r) {
        for (Eigen::Index c = 0; c < mask.cols(); ++c) {
            if (mask(r, c) == 1.0) {
                lists[r].push_back(static_cast<int>(c));
            }
        }
    }
    return lists;
}

}  // namespace

void train_epochs(NoisePredictor& model, AdamState& adam, const TabularDataset& dataset,
                  const NoiseSchedule& schedule, const TrainConfig& config, int first_epoch,
                  int last_epoch, std::vector<double>& loss_history,
                  const EpochCallback& callback) {
    config.validate();
    const auto& encoded = dataset.encoded();
    const int n = static_cast<int>(encoded.rows());
    const int d = static_cast<int>(encoded.cols());
    const auto observed_idx = observed_index_lists(dataset);

    bool trainable = false;
    for (const auto& idx : observed_idx) {
        if (idx.size() >= 2) {
            trainable = true;
            break;
        }
    }
    require(trainable, ErrorCode::param,
            "dataset has no trainable rows (need >= 2 observed encoded entries in some row)");

    const int steps = schedule.steps();
    for (int epoch = first_epoch; epoch < last_epoch; ++epoch) {
        RandomStream rng(derive_seed(config.seed, 0x45504F43ull, static_cast<std::uint64_t>(epoch)));
        std::vector<int> order(n);
        for (int i = 0; i < n; ++i) {
            order[i] = i;
        }
        for (int i = n - 1; i > 0; --i) {
            const auto j = static_cast<int>(rng.uniform_int(0, i));
            std::swap(order[i], order[j]);
        }

        double epoch_loss = 0.0;
        long epoch_rows = 0;
        for (int start = 0; start < n; start += config.batch_size) {
            const int b = std::min(config.batch_size, n - start);

            Eigen::MatrixXd x_full = Eigen::MatrixXd::Zero(b, d);
            Eigen::MatrixXd cond_mask = Eigen::MatrixXd::Zero(b, d);
            Eigen::MatrixXd target_mask = Eigen::MatrixXd::Zero(b, d);
            Eigen::MatrixXd eps = Eigen::MatrixXd::Zero(b, d);
            std::vector<int> timesteps(b, 1);
            std::vector<double> n_targets(b, 0.0);
            int contributing = 0;

            for (int i = 0; i < b; ++i) {
                const int row = order[start + i];
                const double ratio = rng.uniform(config.mask_ratio_min, config.mask_ratio_max);
                const SelfMaskSplit split = self_mask(observed_idx[row], ratio, rng);
                const int t = static_cast<int>(rng.uniform_int(1, steps));
                timesteps[i] = t;
                if (split.target_idx.empty()) {
                    continue;  // no pseudo-targets drawn; row contributes no loss
                }
                const double sa = std::sqrt(schedule.alpha_bar(t));
                const double sb = std::sqrt(1.0 - schedule.alpha_bar(t));
                for (const int c : split.cond_idx) {
                    x_full(i, c) = encoded(row, c);
                    cond_mask(i, c) = 1.0;
                }
                for (const int c : split.target_idx) {
                    const double e = rng.normal();
                    eps(i, c) = e;
                    x_full(i, c) = sa * encoded(row, c) + sb * e;
                    target_mask(i, c) = 1.0;
                }
                n_targets[i] = static_cast<double>(split.target_idx.size());
                ++contributing;
            }
            if (contributing == 0) {
                continue;
            }

            ForwardCache cache;
            const Eigen::MatrixXd pred = model.forward_batch(x_full, cond_mask, timesteps, &cache);
            const Eigen::MatrixXd diff = (pred - eps).cwiseProduct(target_mask);

            // Batch loss is the mean over contributing rows of the per-row
            // mean squared error over that row's targets.
            Eigen::MatrixXd grad = Eigen::MatrixXd::Zero(b, d);
            double batch_loss = 0.0;
            for (int i = 0; i < b; ++i) {
                if (n_targets[i] == 0.0) {
                    continue;
                }
                const double row_ss = diff.row(i).squaredNorm();
                batch_loss += row_ss / n_targets[i];
                grad.row(i) = diff.row(i) * (2.0 / (n_targets[i] * contributing));
            }
            batch_loss /= contributing;

            const auto grads = model.backward_batch(cache, grad);
            adam_step(model.parameters(), grads, adam, config, &model);
            model.check_parameters_finite("optimizer step");

            epoch_loss += batch_loss * contributing;
            epoch_rows += contributing;
        }

        const double mean_loss = epoch_rows > 0 ? epoch_loss / static_cast<double>(epoch_rows) : 0.0;
        loss_history.push_back(mean_loss);
        if (callback) {
            callback(epoch, mean_loss, model, adam);
        }
    }
}

TrainResult train(const TabularDataset& dataset, const NoiseSchedule& schedule,
                  const TrainConfig& config, const EpochCallback& callback) {
    config.validate();
    const int d_enc = dataset.schema().d_enc;
    TrainResult result{
        NoisePredictor::init(d_enc, config.depth, config.width, config.time_embed_dim,
                             derive_seed(config.seed, 0x696E6974ull)),
        AdamState{},
        {}};
    result.adam = AdamState::zeros_like(result.model.parameters());
    train_epochs(result.model, result.adam, dataset, schedule, config, 0, config.epochs,
                 result.loss_history, callback);
    return result;
}

}  // namespace missddim
