#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "rrl/environment.hpp"
#include "rrl/policy.hpp"

namespace rrl {

/// Finite MDP with explicit per-action transition matrices and per
/// (state, action) rewards. Used both as a simulation model and as the input
/// to the exact solvers.
struct TabularMDP {
  int n_states = 0;
  int n_actions = 0;
  int start_state = 0;

  /// Generation metadata, kept so instances can be serialized and re-created.
  int branching = 0;
  std::uint64_t seed = 0;

  Vec transitions;  ///< [action][state][next] row-major
  Vec rewards;      ///< [state][action]

  double p(int action, int state, int next) const {
    return transitions[(static_cast<std::size_t>(action) * n_states + state) * n_states + next];
  }
  double& p(int action, int state, int next) {
    return transitions[(static_cast<std::size_t>(action) * n_states + state) * n_states + next];
  }
  double reward(int state, int action) const {
    return rewards[static_cast<std::size_t>(state) * n_actions + action];
  }
  double& reward(int state, int action) {
    return rewards[static_cast<std::size_t>(state) * n_actions + action];
  }

  /// Checks shapes and that every transition row is a distribution.
  void validate(double tol = 1e-12) const;
};

/// Randomly generated finite MDP: every (state, action) row has `branching`
/// distinct successors with Unif[0,1] masses normalized to sum to one, and
/// with probability reward_prob the (state, action) reward is drawn uniformly
/// from [reward_lo, reward_hi] (zero otherwise). State 0 is the start state.
TabularMDP garnet(int n_states, int n_actions, int branching, double reward_prob,
                  double reward_lo, double reward_hi, Rng& rng);

/// Convenience overload that records the seed and draws from a fresh stream.
TabularMDP garnet(int n_states, int n_actions, int branching, double reward_prob,
                  double reward_lo, double reward_hi, std::uint64_t seed);

/// Flat text serialization: "n_states n_actions branching seed" header, then
/// the transition matrices [action][state][next] one row per line, then the
/// reward array one state per line, all at 17 significant digits. The format
/// presumes start state 0.
void save_tabular_mdp(const TabularMDP& mdp, std::ostream& out);
void save_tabular_mdp(const TabularMDP& mdp, const std::string& path);
TabularMDP load_tabular_mdp(std::istream& in);
TabularMDP load_tabular_mdp(const std::string& path);

/// Simulation adapter: states and actions are integer-valued doubles.
class TabularEnv : public Environment {
 public:
  explicit TabularEnv(TabularMDP mdp);

  double start_state() const override { return mdp_.start_state; }
  StepOutcome step(double state, double action, Rng& rng) const override;

  const TabularMDP& mdp() const { return mdp_; }

 private:
  TabularMDP mdp_;
};

}  // namespace rrl
