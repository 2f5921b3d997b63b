#pragma once

#include <string>
#include <vector>

namespace missddim {

enum class ScheduleKind { linear, quadratic };

ScheduleKind schedule_kind_from_string(const std::string& name);
const char* to_string(ScheduleKind kind);

/// Forward-process noise schedule: the beta sequence and the cumulative
/// alpha-bar products all samplers and the trainer read from.
///
/// Indexing convention: beta(t) is defined for t in [1, T]; alpha_bar(t) for
/// t in [0, T] with alpha_bar(0) == 1, so t_prev == 0 means "fully denoised".
class NoiseSchedule {
public:
    static NoiseSchedule build(ScheduleKind kind, int steps, double beta_min, double beta_max);

    int steps() const { return static_cast<int>(beta_.size()); }
    double beta(int t) const;       // t in [1, T]
    double alpha_bar(int t) const;  // t in [0, T]

    ScheduleKind kind() const { return kind_; }
    double beta_min() const { return beta_min_; }
    double beta_max() const { return beta_max_; }

private:
    NoiseSchedule() = default;

    ScheduleKind kind_ = ScheduleKind::quadratic;
    double beta_min_ = 0.0;
    double beta_max_ = 0.0;
    std::vector<double> beta_;       // size T, index t-1
    std::vector<double> alpha_bar_;  // size T+1, index t
};

/// Per-step standard deviation of the eta-interpolated sampler. eta == 0 is
/// the deterministic path; eta == 1 reproduces the ancestral posterior std
/// over adjacent steps.
double sigma_eta(const NoiseSchedule& schedule, int t_prev, int t_cur, double eta);

/// Strictly increasing timestep subsequence ending at T, used for
/// accelerated sampling.
struct StepSubsequence {
    std::vector<int> tau;

    int length() const { return static_cast<int>(tau.size()); }

    /// Evenly spaced: tau[i] = round(i*T/S) for i = 1..S, deduplicated.
    static StepSubsequence evenly_spaced(int total_steps, int count);
};

}  // namespace missddim
