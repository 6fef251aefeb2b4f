#pragma once

#include <cmath>

#include "rrl/rng.hpp"

namespace rrl {

/// Result of one environment transition.
struct StepOutcome {
  double next_state;  ///< state entering the next decision epoch
  double post_state;  ///< post-decision state produced by this step
  double reward;
};

/// A stateless simulation model with a designated start state.
///
/// All randomness flows through the rng argument, so trajectories are fully
/// reproducible from a seed and instances are safe to share across threads.
///
/// Models with a post-decision structure (controlled move to a post-decision
/// state followed by an exogenous move to the next state) set
/// has_post_decision_state() and fill StepOutcome::post_state; renewals are
/// then detected on the post-decision state, which is what keeps the cycle
/// reward/time formulas unchanged. Standard models just mirror next_state
/// into post_state.
class Environment {
 public:
  virtual ~Environment() = default;

  /// Designated start state s0 (for post-decision models: the post-decision
  /// state that anchors renewals). Deterministic.
  virtual double start_state() const = 0;

  /// State occupied when a fresh trajectory begins. Standard models start at
  /// start_state(); post-decision models start at the state reached by the
  /// exogenous transition out of start_state().
  virtual double trajectory_start(Rng& rng) const {
    (void)rng;
    return start_state();
  }

  virtual bool has_post_decision_state() const { return false; }

  virtual StepOutcome step(double state, double action, Rng& rng) const = 0;

  /// Metric used by approximate renewal sets.
  virtual double state_distance(double a, double b) const { return std::abs(a - b); }
};

}  // namespace rrl
