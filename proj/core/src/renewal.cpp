#include "rrl/renewal.hpp"

#include <cmath>
#include <string>

namespace rrl {

CycleTruncated::CycleTruncated(int limit, RegenerativeCycle partial_cycle)
    : std::runtime_error("no renewal within " + std::to_string(limit) + " steps"),
      step_limit(limit),
      partial(std::move(partial_cycle)) {}

CycleCollector::CycleCollector(const Environment& env, RenewalSet renewal, int max_cycle_steps)
    : env_(&env), renewal_(renewal), max_cycle_steps_(max_cycle_steps) {
  if (max_cycle_steps_ < 1)
    throw std::invalid_argument("CycleCollector: max_cycle_steps must be >= 1");
  if (renewal_.radius < 0.0)
    throw std::invalid_argument("CycleCollector: negative renewal radius");
}

RegenerativeCycle CycleCollector::collect(const PolicyParams& policy, Rng& rng,
                                          bool with_scores) {
  if (!mid_chain_) {
    state_ = env_->trajectory_start(rng);
    mid_chain_ = true;
  }
  RegenerativeCycle cycle;
  double state = state_;
  for (int k = 0; k < max_cycle_steps_; ++k) {
    const double action = sample_action(policy, state, rng);
    const StepOutcome out = env_->step(state, action, rng);
    ++samples_;
    ScoredStep step{state, action, out.reward, {}};
    if (with_scores) {
      if (policy.differentiable())
        step.score = score(policy, state, action);
      else
        step.score.assign(policy.dim(), 0.0);
    }
    cycle.steps.push_back(std::move(step));
    state = out.next_state;
    const double probe = env_->has_post_decision_state() ? out.post_state : out.next_state;
    if (renewal_.contains(*env_, probe)) {
      state_ = state;
      return cycle;
    }
  }
  // Leave the collector in a restartable state for a retry.
  mid_chain_ = false;
  throw CycleTruncated(max_cycle_steps_, std::move(cycle));
}

std::vector<RegenerativeCycle> CycleCollector::collect_batch(int n, const PolicyParams& policy,
                                                             Rng& rng, bool with_scores) {
  if (n < 1) throw std::invalid_argument("collect_batch: need at least one cycle");
  std::vector<RegenerativeCycle> cycles;
  cycles.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) cycles.push_back(collect(policy, rng, with_scores));
  return cycles;
}

CycleStats cycle_stats(const RegenerativeCycle& cycle, double gamma) {
  if (cycle.steps.empty()) throw std::invalid_argument("cycle_stats: empty cycle");
  if (gamma <= 0.0 || gamma > 1.0)
    throw std::invalid_argument("cycle_stats: gamma must be in (0, 1]");
  CycleStats stats;
  double weight = 1.0;
  for (const ScoredStep& step : cycle.steps) {
    stats.reward_sum += weight * step.reward;
    stats.time_sum += weight;
    weight *= gamma;
  }
  stats.length = static_cast<int>(cycle.steps.size());
  return stats;
}

std::pair<double, double> suffix_stats(const RegenerativeCycle& cycle, std::size_t sigma,
                                       double gamma, bool biased) {
  const std::size_t length = cycle.steps.size();
  if (sigma >= length) throw std::out_of_range("suffix_stats: sigma out of range");
  if (gamma <= 0.0 || gamma > 1.0)
    throw std::invalid_argument("suffix_stats: gamma must be in (0, 1]");
  // Backward recursion in restarted exponents, scaled by gamma^sigma for the
  // unbiased convention; avoids gamma^{-sigma} blowups.
  double reward_suffix = 0.0;
  double time_suffix = 0.0;
  for (std::size_t k = length; k-- > sigma;) {
    reward_suffix = cycle.steps[k].reward + gamma * reward_suffix;
    time_suffix = 1.0 + gamma * time_suffix;
  }
  if (!biased) {
    const double scale = std::pow(gamma, static_cast<double>(sigma));
    reward_suffix *= scale;
    time_suffix *= scale;
  }
  return {reward_suffix, time_suffix};
}

std::pair<double, double> estimate_cycle_means(std::span<const CycleStats> stats) {
  if (stats.empty()) throw std::invalid_argument("estimate_cycle_means: empty batch");
  double reward_mean = 0.0;
  double time_mean = 0.0;
  for (const CycleStats& s : stats) {
    reward_mean += s.reward_sum;
    time_mean += s.time_sum;
  }
  const double n = static_cast<double>(stats.size());
  return {reward_mean / n, time_mean / n};
}

double performance(double reward_mean, double time_mean, double gamma, RewardMode mode) {
  if (time_mean <= 0.0) throw std::invalid_argument("performance: nonpositive mean cycle time");
  if (mode == RewardMode::Average) return reward_mean / time_mean;
  if (gamma <= 0.0 || gamma >= 1.0)
    throw std::invalid_argument("performance: discounted mode needs gamma in (0, 1)");
  return reward_mean / ((1.0 - gamma) * time_mean);
}

}  // namespace rrl
