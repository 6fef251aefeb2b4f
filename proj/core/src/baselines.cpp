#include "rrl/baselines.hpp"

#include <Eigen/Dense>

#include <atomic>
#include <cmath>
#include <stdexcept>
#include <thread>

#include "rrl/evaluate.hpp"

namespace rrl {

ValueSolution value_iteration(const TabularMDP& mdp, double gamma, double tol,
                              long max_iterations) {
  mdp.validate();
  if (gamma <= 0.0 || gamma >= 1.0)
    throw std::invalid_argument("value_iteration: gamma must be in (0, 1)");
  if (tol <= 0.0) throw std::invalid_argument("value_iteration: tol must be positive");

  ValueSolution solution;
  solution.values.assign(mdp.n_states, 0.0);
  solution.greedy.assign(mdp.n_states, 0);
  Vec next(mdp.n_states, 0.0);

  for (long it = 0; it < max_iterations; ++it) {
    double residual = 0.0;
    for (int s = 0; s < mdp.n_states; ++s) {
      double best = -std::numeric_limits<double>::infinity();
      int best_action = 0;
      for (int a = 0; a < mdp.n_actions; ++a) {
        double q = mdp.reward(s, a);
        for (int t = 0; t < mdp.n_states; ++t) q += gamma * mdp.p(a, s, t) * solution.values[t];
        if (q > best) {
          best = q;
          best_action = a;
        }
      }
      next[s] = best;
      solution.greedy[s] = best_action;
      residual = std::max(residual, std::abs(best - solution.values[s]));
    }
    solution.values.swap(next);
    solution.iterations = it + 1;
    solution.residual = residual;
    if (residual <= tol) break;
  }
  solution.optimum = solution.values[mdp.start_state];
  return solution;
}

namespace {

// Chain and reward under a fixed Gibbs policy.
struct InducedChain {
  Eigen::MatrixXd transition;  // P_pi
  Eigen::VectorXd reward;      // r_pi
};

InducedChain induced_chain(const TabularMDP& mdp, const PolicyParams& policy) {
  if (policy.family != PolicyFamily::GibbsTabular || policy.n_states != mdp.n_states ||
      policy.n_actions != mdp.n_actions)
    throw std::invalid_argument("exact_policy_value: policy does not match the model");
  const int n = mdp.n_states;
  InducedChain chain{Eigen::MatrixXd::Zero(n, n), Eigen::VectorXd::Zero(n)};
  for (int s = 0; s < n; ++s) {
    const Vec probs = action_probabilities(policy, s);
    for (int a = 0; a < mdp.n_actions; ++a) {
      chain.reward(s) += probs[a] * mdp.reward(s, a);
      for (int t = 0; t < n; ++t) chain.transition(s, t) += probs[a] * mdp.p(a, s, t);
    }
  }
  return chain;
}

struct CycleQuantities {
  double performance;
  Eigen::VectorXd values;
  double cycle_reward;
  double cycle_time;
  double expected_discount;
};

CycleQuantities solve_cycle_quantities(const TabularMDP& mdp, const PolicyParams& policy,
                                       double gamma) {
  const int n = mdp.n_states;
  const int s0 = mdp.start_state;
  const InducedChain chain = induced_chain(mdp, policy);
  const Eigen::MatrixXd identity = Eigen::MatrixXd::Identity(n, n);

  CycleQuantities q;
  q.values = (identity - gamma * chain.transition).partialPivLu().solve(chain.reward);
  q.performance = q.values(s0);

  // Absorb on re-entry to s0: zero that column so mass flowing back
  // contributes nothing after absorption.
  Eigen::MatrixXd stopped = chain.transition;
  stopped.col(s0).setZero();
  const Eigen::PartialPivLU<Eigen::MatrixXd> lu(identity - gamma * stopped);

  q.cycle_reward = lu.solve(chain.reward)(s0);
  q.cycle_time = lu.solve(Eigen::VectorXd::Ones(n))(s0);
  q.expected_discount = gamma * lu.solve(chain.transition.col(s0))(s0);
  return q;
}

}  // namespace

PolicyValueSolution exact_policy_value(const TabularMDP& mdp, const PolicyParams& policy,
                                       double gamma, bool with_gradients, double fd_step) {
  mdp.validate();
  if (gamma <= 0.0 || gamma >= 1.0)
    throw std::invalid_argument("exact_policy_value: gamma must be in (0, 1)");

  const CycleQuantities q = solve_cycle_quantities(mdp, policy, gamma);
  PolicyValueSolution solution;
  solution.performance = q.performance;
  solution.state_values.assign(q.values.data(), q.values.data() + q.values.size());
  solution.cycle_reward = q.cycle_reward;
  solution.cycle_time = q.cycle_time;
  solution.expected_discount = q.expected_discount;

  if (with_gradients) {
    const std::size_t dim = policy.dim();
    solution.grad_performance.assign(dim, 0.0);
    solution.grad_cycle_reward.assign(dim, 0.0);
    solution.grad_cycle_time.assign(dim, 0.0);
    PolicyParams probe = policy;
    for (std::size_t i = 0; i < dim; ++i) {
      const double original = policy.theta[i];
      probe.theta[i] = original + fd_step;
      const CycleQuantities hi = solve_cycle_quantities(mdp, probe, gamma);
      probe.theta[i] = original - fd_step;
      const CycleQuantities lo = solve_cycle_quantities(mdp, probe, gamma);
      probe.theta[i] = original;
      solution.grad_performance[i] = (hi.performance - lo.performance) / (2.0 * fd_step);
      solution.grad_cycle_reward[i] = (hi.cycle_reward - lo.cycle_reward) / (2.0 * fd_step);
      solution.grad_cycle_time[i] = (hi.cycle_time - lo.cycle_time) / (2.0 * fd_step);
    }
  }
  return solution;
}

Vec stationary_distribution(const TabularMDP& mdp, const PolicyParams& policy) {
  mdp.validate();
  const int n = mdp.n_states;
  const InducedChain chain = induced_chain(mdp, policy);
  // Solve pi^T P = pi^T with the normalization sum(pi) = 1 replacing one
  // equation of the singular system.
  Eigen::MatrixXd system = chain.transition.transpose() - Eigen::MatrixXd::Identity(n, n);
  system.row(n - 1).setOnes();
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
  rhs(n - 1) = 1.0;
  const Eigen::VectorXd pi = system.partialPivLu().solve(rhs);
  Vec result(pi.data(), pi.data() + n);
  for (double mass : result)
    if (!(mass > -1e-9))
      throw std::runtime_error("stationary_distribution: chain is not ergodic");
  return result;
}

double exact_average_reward(const TabularMDP& mdp, const PolicyParams& policy) {
  const Vec pi = stationary_distribution(mdp, policy);
  const InducedChain chain = induced_chain(mdp, policy);
  double average = 0.0;
  for (int s = 0; s < mdp.n_states; ++s) average += pi[s] * chain.reward(s);
  return average;
}

RunResult sarsa_lambda_run(const TabularMDP& mdp, PolicyParams actor, const SarsaConfig& config,
                           Rng& rng, const PolicyEvaluator* evaluator) {
  mdp.validate();
  if (!actor.differentiable())
    throw std::invalid_argument("sarsa_lambda_run: actor must be a Gibbs tabular policy");
  if (config.lambda < 0.0 || config.lambda > 1.0)
    throw std::invalid_argument("sarsa_lambda_run: lambda must be in [0, 1]");
  if (config.gamma <= 0.0 || config.gamma >= 1.0)
    throw std::invalid_argument("sarsa_lambda_run: gamma must be in (0, 1)");
  if (config.sample_budget == 0 && config.max_iterations < 0)
    throw std::invalid_argument("sarsa_lambda_run: set a sample budget or an iteration cap");

  const TabularEnv env(mdp);
  Vec critic(mdp.n_states, 0.0);
  Vec traces(mdp.n_states, 0.0);
  AdamOptimizer actor_optimizer(actor.dim(), config.actor_adam);
  Vec step_score(actor.dim(), 0.0);
  Vec actor_gradient(actor.dim(), 0.0);

  RunResult result;
  std::uint64_t samples = 0;
  double state = env.start_state();

  long iteration = 0;
  while (!(config.sample_budget > 0 && samples >= config.sample_budget) &&
         !(config.max_iterations >= 0 && iteration >= config.max_iterations)) {
    std::vector<CycleStats> block;
    block.reserve(config.cycles_per_iteration);
    RegenerativeCycle cycle;
    while (static_cast<int>(block.size()) < config.cycles_per_iteration) {
      const double action = sample_action(actor, state, rng);
      const StepOutcome out = env.step(state, action, rng);
      ++samples;
      cycle.steps.push_back(ScoredStep{state, action, out.reward, {}});

      const int s = static_cast<int>(state);
      const int next = static_cast<int>(out.next_state);
      const double td_error = out.reward + config.gamma * critic[next] - critic[s];

      // Critic: accumulating traces.
      for (double& trace : traces) trace *= config.gamma * config.lambda;
      traces[s] += 1.0;
      for (int i = 0; i < mdp.n_states; ++i) critic[i] += config.critic_rate * td_error * traces[i];

      // Actor: one-step score ascent on the TD error.
      score_into(actor, state, action, step_score);
      for (std::size_t i = 0; i < actor_gradient.size(); ++i)
        actor_gradient[i] = step_score[i] * td_error;
      const Vec update = actor_optimizer.step(actor_gradient);
      for (std::size_t i = 0; i < actor.theta.size(); ++i) actor.theta[i] += update[i];
      actor.theta = project(std::move(actor.theta), actor.bounds);

      state = out.next_state;
      if (static_cast<int>(out.next_state) == mdp.start_state) {
        block.push_back(cycle_stats(cycle, config.gamma));
        cycle.steps.clear();
      } else if (static_cast<int>(cycle.steps.size()) >= config.max_cycle_steps) {
        throw CycleTruncated(config.max_cycle_steps, std::move(cycle));
      }
    }

    const bool evaluate =
        evaluator != nullptr && config.eval_every > 0 && iteration % config.eval_every == 0;
    if (iteration % config.record_every == 0 || evaluate) {
      const auto [reward_mean, time_mean] = estimate_cycle_means(block);
      IterationRecord record;
      record.iteration = iteration;
      record.samples = samples;
      record.reward_mean = reward_mean;
      record.time_mean = time_mean;
      record.perf = performance(reward_mean, time_mean, config.gamma, RewardMode::Discounted);
      record.theta = actor.theta;
      if (evaluate) {
        const EvalResult eval = (*evaluator)(actor);
        record.eval_mean = eval.mean;
        record.eval_std = eval.stddev;
      }
      result.records.push_back(std::move(record));
    }
    ++iteration;
  }
  result.final_theta = actor.theta;
  result.total_samples = samples;
  result.iterations = iteration;
  return result;
}

Vec linear_grid(double lo, double hi, double step) {
  if (step <= 0.0) throw std::invalid_argument("linear_grid: step must be positive");
  if (hi < lo) throw std::invalid_argument("linear_grid: hi < lo");
  Vec grid;
  const long count = static_cast<long>(std::floor((hi - lo) / step + 0.5)) + 1;
  grid.reserve(count);
  for (long i = 0; i < count; ++i) grid.push_back(lo + step * static_cast<double>(i));
  return grid;
}

GridSearchResult grid_search_threshold(const Environment& env, const PolicyParams& prototype,
                                       Vec grid, int horizon, int reps, double gamma, Rng& rng,
                                       int workers) {
  if (grid.empty()) throw std::invalid_argument("grid_search_threshold: empty grid");
  if (prototype.dim() != 1)
    throw std::invalid_argument("grid_search_threshold: needs a scalar policy family");
  if (reps < 1) throw std::invalid_argument("grid_search_threshold: reps must be >= 1");

  GridSearchResult result;
  result.thetas = std::move(grid);
  result.means.assign(result.thetas.size(), 0.0);
  result.std_errors.assign(result.thetas.size(), 0.0);

  const auto evaluate_point = [&](std::size_t index) {
    PolicyParams policy = prototype;
    policy.theta[0] = result.thetas[index];
    Rng point_rng = rng.derive(index);
    const EvalResult eval = evaluate_policy(env, policy, horizon, reps, gamma, point_rng);
    result.means[index] = eval.mean;
    result.std_errors[index] = eval.stddev / std::sqrt(static_cast<double>(reps));
  };

  if (workers <= 1) {
    for (std::size_t i = 0; i < result.thetas.size(); ++i) evaluate_point(i);
  } else {
    std::atomic<std::size_t> cursor{0};
    std::vector<std::thread> pool;
    const int thread_count = static_cast<int>(
        std::min<std::size_t>(static_cast<std::size_t>(workers), result.thetas.size()));
    pool.reserve(thread_count);
    for (int w = 0; w < thread_count; ++w)
      pool.emplace_back([&] {
        for (std::size_t i = cursor.fetch_add(1); i < result.thetas.size();
             i = cursor.fetch_add(1))
          evaluate_point(i);
      });
    for (std::thread& worker : pool) worker.join();
  }

  for (std::size_t i = 1; i < result.thetas.size(); ++i)
    if (result.means[i] > result.means[result.best_index]) result.best_index = i;
  result.best_theta = result.thetas[result.best_index];
  return result;
}

}  // namespace rrl
