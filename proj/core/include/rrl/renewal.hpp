#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "rrl/environment.hpp"
#include "rrl/policy.hpp"

namespace rrl {

/// One transition inside a regenerative cycle.
struct ScoredStep {
  double state;
  double action;
  double reward;
  Vec score;  ///< grad log pi at (state, action); empty when not recorded
};

/// Trajectory segment between successive visits to the renewal set. The last
/// step is the one whose (post-decision) state re-entered the set.
struct RegenerativeCycle {
  std::vector<ScoredStep> steps;

  std::size_t length() const { return steps.size(); }
};

/// Discounted aggregates of one cycle. Discount exponents are cycle-relative
/// (offset 0 at the first step of the cycle), which is algebraically
/// identical to scaling global-time sums by the inverse discount of the cycle
/// start, but never overflows on long runs. gamma == 1 gives the
/// average-reward aggregates (plain sum and cycle length).
struct CycleStats {
  double reward_sum = 0.0;  ///< R: sum of gamma^k r_k over the cycle
  double time_sum = 0.0;    ///< T: sum of gamma^k over the cycle
  int length = 0;
};

/// Renewal test: fires when the state lies within `radius` of `anchor` in the
/// environment's metric. radius == 0 is the exact-return test.
struct RenewalSet {
  double anchor = 0.0;
  double radius = 0.0;

  bool contains(const Environment& env, double state) const {
    return env.state_distance(state, anchor) <= radius;
  }
};

/// Raised when a cycle exceeds the step limit, i.e. the policy failed to
/// revisit the renewal set. Carries the partial cycle for diagnostics.
class CycleTruncated : public std::runtime_error {
 public:
  CycleTruncated(int step_limit, RegenerativeCycle partial_cycle);

  int step_limit;
  RegenerativeCycle partial;
};

/// Rolls an environment forward and slices the trajectory into regenerative
/// cycles. The chain is continuous: each cycle resumes where the previous one
/// ended, which is required for approximate (ball) renewals and free for
/// exact ones. For post-decision models the renewal test is applied to the
/// post-decision state of the step just taken.
class CycleCollector {
 public:
  CycleCollector(const Environment& env, RenewalSet renewal, int max_cycle_steps = 100000);

  /// Collects one cycle. When with_scores is set, each step records the
  /// policy score (the zero vector for non-differentiable families).
  RegenerativeCycle collect(const PolicyParams& policy, Rng& rng, bool with_scores);

  std::vector<RegenerativeCycle> collect_batch(int n, const PolicyParams& policy, Rng& rng,
                                               bool with_scores);

  /// Total environment transitions taken so far.
  std::uint64_t samples() const { return samples_; }

  /// Drops the carried chain state; the next cycle starts a fresh trajectory.
  void restart() { mid_chain_ = false; }

  const RenewalSet& renewal() const { return renewal_; }

 private:
  const Environment* env_;
  RenewalSet renewal_;
  int max_cycle_steps_;
  bool mid_chain_ = false;
  double state_ = 0.0;
  std::uint64_t samples_ = 0;
};

/// Cycle aggregates at the given discount (gamma in (0, 1]; 1 = average
/// mode). The cycle must be nonempty.
CycleStats cycle_stats(const RegenerativeCycle& cycle, double gamma);

/// Suffix aggregates (R_sigma, T_sigma) from within-cycle offset sigma.
/// Unbiased form keeps cycle-relative exponents gamma^k; the biased variant
/// restarts discounting at sigma (exponents gamma^{k - sigma}). They satisfy
/// biased == gamma^{-sigma} * unbiased.
std::pair<double, double> suffix_stats(const RegenerativeCycle& cycle, std::size_t sigma,
                                       double gamma, bool biased);

/// Sample means of (R, T) over a nonempty batch of cycles.
std::pair<double, double> estimate_cycle_means(std::span<const CycleStats> stats);

enum class RewardMode { Discounted, Average };

/// Policy performance from the cycle means: R / ((1-gamma) T) in discounted
/// mode, R / T in average mode.
double performance(double reward_mean, double time_mean, double gamma, RewardMode mode);

}  // namespace rrl
