#pragma once

#include "rrl/rmc.hpp"
#include "rrl/tabular_mdp.hpp"

namespace rrl {

/// Output of value iteration.
struct ValueSolution {
  Vec values;               ///< V per state
  std::vector<int> greedy;  ///< argmax action per state
  double optimum = 0.0;     ///< V at the start state
  long iterations = 0;
  double residual = 0.0;    ///< final sup-norm Bellman residual
};

/// Value iteration to a sup-norm Bellman residual <= tol. The returned
/// optimum is within tol * gamma / (1 - gamma) of the true optimal value.
ValueSolution value_iteration(const TabularMDP& mdp, double gamma, double tol,
                              long max_iterations = 1000000);

/// Exact evaluation of a Gibbs tabular policy by linear solves, together with
/// the renewal-cycle quantities of the start state:
///  - performance J = V(s0) from (I - gamma P_pi) V = r_pi;
///  - cycle_reward R and cycle_time T from the absorbing-chain construction
///    (re-entry to s0 stops accumulation);
///  - expected_discount Tbar = E[gamma^(return time)] from an independent
///    solve, so Tbar = 1 - (1-gamma) T can be cross-checked;
///  - central finite-difference gradients of J, R, and T (optional).
struct PolicyValueSolution {
  double performance = 0.0;
  Vec state_values;
  double cycle_reward = 0.0;
  double cycle_time = 0.0;
  double expected_discount = 0.0;
  Vec grad_performance;
  Vec grad_cycle_reward;
  Vec grad_cycle_time;
};

PolicyValueSolution exact_policy_value(const TabularMDP& mdp, const PolicyParams& policy,
                                       double gamma, bool with_gradients = false,
                                       double fd_step = 1e-5);

/// Stationary distribution of the chain induced by a Gibbs tabular policy
/// (the chain must be ergodic), and the stationary expected per-step reward.
Vec stationary_distribution(const TabularMDP& mdp, const PolicyParams& policy);
double exact_average_reward(const TabularMDP& mdp, const PolicyParams& policy);

/// Actor-critic comparison learner: tabular critic updated by TD(lambda)
/// with accumulating eligibility traces, Gibbs actor updated per step by
/// score x TD-error through its own optimizer. Iterations are blocks of
/// cycles so records line up with the other algorithms.
struct SarsaConfig {
  double lambda = 0.0;
  double critic_rate = 0.1;
  AdamConfig actor_adam{};
  double gamma = 0.9;
  int cycles_per_iteration = 5;
  std::uint64_t sample_budget = 0;
  long max_iterations = -1;
  int max_cycle_steps = 100000;
  int record_every = 1;
  int eval_every = 0;
};

RunResult sarsa_lambda_run(const TabularMDP& mdp, PolicyParams actor, const SarsaConfig& config,
                           Rng& rng, const PolicyEvaluator* evaluator = nullptr);

/// Monte Carlo sweep over candidate thresholds of a scalar policy family:
/// each grid point is evaluated by `reps` truncated rollouts of `horizon`
/// steps. Returns per-point means with standard errors and the maximizing
/// point. Points use independent derived substreams, so results do not
/// depend on the worker count.
struct GridSearchResult {
  Vec thetas;
  Vec means;
  Vec std_errors;
  std::size_t best_index = 0;
  double best_theta = 0.0;
};

GridSearchResult grid_search_threshold(const Environment& env, const PolicyParams& prototype,
                                       Vec grid, int horizon, int reps, double gamma, Rng& rng,
                                       int workers = 1);

/// Evenly spaced grid helper: lo, lo + step, ..., up to and including hi
/// (within half a step).
Vec linear_grid(double lo, double hi, double step);

}  // namespace rrl
