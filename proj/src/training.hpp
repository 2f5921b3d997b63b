#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <functional>
#include <vector>

#include "predictor.hpp"
#include "schedule.hpp"

namespace missddim {

class TabularDataset;
class RandomStream;

/// Partition of one row's observed encoded positions into conditioning
/// context and pseudo-targets. Natively missing positions belong to neither.
struct SelfMaskSplit {
    std::vector<int> cond_idx;
    std::vector<int> target_idx;
    std::vector<int> native_missing_idx;
};

struct TrainConfig {
    int epochs = 200;
    int batch_size = 64;
    double learning_rate = 1e-3;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    double mask_ratio_min = 0.1;
    double mask_ratio_max = 0.9;
    std::uint64_t seed = 0;
    int checkpoint_every = 0;  // epochs; 0 disables periodic checkpoints

    // Backbone dimensions used when train() initializes the network.
    int depth = 4;
    int width = 128;
    int time_embed_dim = 16;

    void validate() const;
};

/// Uniformly samples ceil(ratio * |observed|) observed indices as targets;
/// the remainder conditions. Never touches missing positions.
SelfMaskSplit self_mask(const std::vector<int>& row_observed_idx, double ratio,
                        RandomStream& rng, const std::vector<int>& native_missing_idx = {});

/// x_t = sqrt(alpha_bar[t]) * x0 + sqrt(1 - alpha_bar[t]) * eps, elementwise.
/// t == 0 is the identity by the alpha_bar[0] = 1 convention.
Eigen::VectorXd forward_corrupt(const Eigen::VectorXd& x0_target, int t,
                                const NoiseSchedule& schedule, const Eigen::VectorXd& eps);

/// Mean squared error between eps and the predicted noise over target
/// positions only. Param error when the split has no targets.
double loss(NoisePredictor& model, const Eigen::VectorXd& encoded_row, const SelfMaskSplit& split,
            int t, const Eigen::VectorXd& eps, const NoiseSchedule& schedule);

struct AdamState {
    std::vector<Eigen::MatrixXd> m;
    std::vector<Eigen::MatrixXd> v;
    long step = 0;

    static AdamState zeros_like(const std::vector<Eigen::MatrixXd>& params);
};

/// Standard Adam with bias correction; deterministic, updates in place.
void adam_step(std::vector<Eigen::MatrixXd>& params, const NoisePredictor::Gradients& grads,
               AdamState& state, const TrainConfig& config,
               const NoisePredictor* names = nullptr);

struct TrainResult {
    NoisePredictor model;
    AdamState adam;
    std::vector<double> loss_history;  // mean per-row loss per epoch
};

/// Called after each epoch; used for loss logging and periodic checkpoints.
using EpochCallback =
    std::function<void(int epoch, double mean_loss, const NoisePredictor&, const AdamState&)>;

/// Self-masked denoising training from a fresh initialization.
TrainResult train(const TabularDataset& dataset, const NoiseSchedule& schedule,
                  const TrainConfig& config, const EpochCallback& callback = {});

/// Runs epochs [first_epoch, last_epoch) against existing model/optimizer
/// state. Epoch randomness is derived from (config.seed, epoch), so resuming
/// from a checkpoint replays the exact trajectory of an uninterrupted run.
void train_epochs(NoisePredictor& model, AdamState& adam, const TabularDataset& dataset,
                  const NoiseSchedule& schedule, const TrainConfig& config, int first_epoch,
                  int last_epoch, std::vector<double>& loss_history,
                  const EpochCallback& callback = {});

}  // namespace missddim
