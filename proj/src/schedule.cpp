#include "schedule.hpp"

#include <algorithm>
#include <cmath>

#include "error.hpp"

namespace missddim {

ScheduleKind schedule_kind_from_string(const std::string& name) {
    if (name == "linear") {
        return ScheduleKind::linear;
    }
    if (name == "quadratic") {
        return ScheduleKind::quadratic;
    }
    fail(ErrorCode::param, "unknown schedule kind '", name, "' (expected 'linear' or 'quadratic')");
}

const char* to_string(ScheduleKind kind) {
    return kind == ScheduleKind::linear ? "linear" : "quadratic";
}

NoiseSchedule NoiseSchedule::build(ScheduleKind kind, int steps, double beta_min, double beta_max) {
    require(steps >= 1, ErrorCode::param, "schedule steps must be >= 1, got ", steps);
    require(beta_min > 0.0 && beta_min <= beta_max && beta_max < 1.0, ErrorCode::param,
            "schedule bounds require 0 < beta_min <= beta_max < 1, got beta_min=", beta_min,
            " beta_max=", beta_max);

    NoiseSchedule s;
    s.kind_ = kind;
    s.beta_min_ = beta_min;
    s.beta_max_ = beta_max;
    s.beta_.resize(steps);
    for (int t = 1; t <= steps; ++t) {
        const double frac = steps == 1 ? 0.0 : static_cast<double>(t - 1) / (steps - 1);
        if (kind == ScheduleKind::linear) {
            s.beta_[t - 1] = beta_min + frac * (beta_max - beta_min);
        } else {
            const double root = std::sqrt(beta_min) + frac * (std::sqrt(beta_max) - std::sqrt(beta_min));
            s.beta_[t - 1] = root * root;
        }
    }
    s.alpha_bar_.resize(steps + 1);
    s.alpha_bar_[0] = 1.0;
    for (int t = 1; t <= steps; ++t) {
        s.alpha_bar_[t] = s.alpha_bar_[t - 1] * (1.0 - s.beta_[t - 1]);
    }
    return s;
}

double NoiseSchedule::beta(int t) const {
    require(t >= 1 && t <= steps(), ErrorCode::param, "beta index ", t, " outside [1, ", steps(), "]");
    return beta_[t - 1];
}

double NoiseSchedule::alpha_bar(int t) const {
    require(t >= 0 && t <= steps(), ErrorCode::param, "alpha_bar index ", t, " outside [0, ", steps(), "]");
    return alpha_bar_[t];
}

double sigma_eta(const NoiseSchedule& schedule, int t_prev, int t_cur, double eta) {
    require(t_prev >= 0 && t_prev < t_cur && t_cur <= schedule.steps(), ErrorCode::param,
            "sigma_eta requires 0 <= t_prev < t_cur <= T, got t_prev=", t_prev, " t_cur=", t_cur);
    require(eta >= 0.0, ErrorCode::param, "eta must be >= 0, got ", eta);
    const double a_prev = schedule.alpha_bar(t_prev);
    const double a_cur = schedule.alpha_bar(t_cur);
    return eta * std::sqrt((1.0 - a_prev) / (1.0 - a_cur)) * std::sqrt(1.0 - a_cur / a_prev);
}

StepSubsequence StepSubsequence::evenly_spaced(int total_steps, int count) {
    require(total_steps >= 1, ErrorCode::param, "total_steps must be >= 1, got ", total_steps);
    require(count >= 1 && count <= total_steps, ErrorCode::param,
            "subsequence length must be in [1, ", total_steps, "], got ", count);

    StepSubsequence sub;
    sub.tau.reserve(count);
    for (int i = 1; i <= count; ++i) {
        const int step = static_cast<int>(
            std::llround(static_cast<double>(i) * total_steps / count));
        sub.tau.push_back(std::max(step, 1));
    }
    sub.tau.back() = total_steps;
    sub.tau.erase(std::unique(sub.tau.begin(), sub.tau.end()), sub.tau.end());
    return sub;
}

}  // namespace missddim
