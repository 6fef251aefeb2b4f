#include "rrl/rmc.hpp"

#include <cmath>
#include <stdexcept>

namespace rrl {

namespace {

constexpr std::uint64_t kRetryStream = 0x52455452;  // substream id for truncation retries

double effective_gamma(const RmcConfig& config) {
  return config.mode == RewardMode::Average ? 1.0 : config.gamma;
}

void validate_common(const RmcConfig& config) {
  if (config.cycles_per_batch < 1)
    throw std::invalid_argument("rmc: cycles_per_batch must be >= 1");
  if (config.mode == RewardMode::Discounted &&
      (config.gamma <= 0.0 || config.gamma >= 1.0))
    throw std::invalid_argument("rmc: discounted mode needs gamma in (0, 1)");
  if (config.sample_budget == 0 && config.max_iterations < 0)
    throw std::invalid_argument("rmc: set a sample budget or an iteration cap");
  if (config.record_every < 1) throw std::invalid_argument("rmc: record_every must be >= 1");
  if (config.renewal_radius < 0.0) throw std::invalid_argument("rmc: negative renewal radius");
}

bool budget_reached(const RmcConfig& config, std::uint64_t samples, long iteration) {
  if (config.sample_budget > 0 && samples >= config.sample_budget) return true;
  if (config.max_iterations >= 0 && iteration >= config.max_iterations) return true;
  return false;
}

std::vector<CycleStats> stats_of(const std::vector<RegenerativeCycle>& cycles, double gamma) {
  std::vector<CycleStats> stats;
  stats.reserve(cycles.size());
  for (const RegenerativeCycle& cycle : cycles) stats.push_back(cycle_stats(cycle, gamma));
  return stats;
}

struct DriverState {
  PolicyParams policy;
  CycleCollector collector;
  std::unique_ptr<Optimizer> optimizer;
  RunResult result;
};

void record_iteration(DriverState& state, const RmcConfig& config, long iteration,
                      double reward_mean, double time_mean,
                      const PolicyEvaluator* evaluator) {
  const bool evaluate =
      evaluator != nullptr && config.eval_every > 0 && iteration % config.eval_every == 0;
  if (iteration % config.record_every != 0 && !evaluate) return;
  IterationRecord record;
  record.iteration = iteration;
  record.samples = state.collector.samples();
  record.reward_mean = reward_mean;
  record.time_mean = time_mean;
  record.perf = performance(reward_mean, time_mean, config.gamma, config.mode);
  record.theta = state.policy.theta;
  if (evaluate) {
    const EvalResult eval = (*evaluator)(state.policy);
    record.eval_mean = eval.mean;
    record.eval_std = eval.stddev;
  }
  state.result.records.push_back(std::move(record));
}

void apply_update(DriverState& state, const Vec& h) {
  const Vec step = state.optimizer->step(h);
  for (std::size_t i = 0; i < state.policy.theta.size(); ++i)
    state.policy.theta[i] += step[i];
  state.policy.theta = project(std::move(state.policy.theta), state.policy.bounds);
}

// Shared iteration skeleton of both drivers; `body` performs one iteration
// (batch collection, H statistic, record, update). A cycle truncation fails
// the iteration; it is retried once on a fresh derived substream before the
// error propagates to the caller.
template <typename IterationBody>
RunResult drive(const Environment& env, PolicyParams policy, const RmcConfig& config,
                Rng& rng, IterationBody&& body) {
  validate_common(config);
  policy.bounds.validate(policy.dim());
  policy.theta = project(std::move(policy.theta), policy.bounds);
  const std::size_t dim = policy.dim();

  DriverState state{std::move(policy),
                    CycleCollector(env, RenewalSet{env.start_state(), config.renewal_radius},
                                   config.max_cycle_steps),
                    make_optimizer(config.optimizer, dim, config.adam, config.sgd_rate),
                    RunResult{}};
  const Rng retry_base = rng.derive(kRetryStream);

  long iteration = 0;
  while (!budget_reached(config, state.collector.samples(), iteration)) {
    try {
      body(state, rng, iteration);
    } catch (const CycleTruncated&) {
      Rng retry_rng = retry_base.derive(static_cast<std::uint64_t>(iteration));
      state.collector.restart();
      body(state, retry_rng, iteration);
    }
    ++iteration;
  }
  state.result.final_theta = state.policy.theta;
  state.result.total_samples = state.collector.samples();
  state.result.iterations = iteration;
  return state.result;
}

}  // namespace

RunResult rmc_run_lr(const Environment& env, PolicyParams policy, const RmcConfig& config,
                     Rng& rng, const PolicyEvaluator* evaluator) {
  if (!policy.differentiable())
    throw std::invalid_argument(
        "rmc_run_lr: likelihood-ratio gradients need a differentiable policy family");
  const double gamma = effective_gamma(config);

  const auto body = [&, gamma](DriverState& state, Rng& run_rng, long iteration) {
    const auto estimation_batch = state.collector.collect_batch(
        config.cycles_per_batch, state.policy, run_rng, config.shared_run);
    const auto [reward_mean, time_mean] =
        estimate_cycle_means(stats_of(estimation_batch, gamma));

    GradientEstimate grad;
    if (config.shared_run) {
      grad = lr_gradient(estimation_batch, state.policy.dim(), gamma, config.biased);
    } else {
      const auto gradient_batch =
          state.collector.collect_batch(config.cycles_per_batch, state.policy, run_rng, true);
      grad = lr_gradient(gradient_batch, state.policy.dim(), gamma, config.biased);
    }
    const Vec h = h_from_lr(reward_mean, time_mean, grad);

    record_iteration(state, config, iteration, reward_mean, time_mean, evaluator);
    apply_update(state, h);
  };
  return drive(env, std::move(policy), config, rng, body);
}

RunResult rmc_run_sp(const Environment& env, PolicyParams policy, const RmcConfig& config,
                     Rng& rng, const PolicyEvaluator* evaluator) {
  if (config.perturb_scale <= 0.0)
    throw std::invalid_argument("rmc_run_sp: perturb_scale (c) must be positive");
  const double gamma = effective_gamma(config);

  const auto body = [&, gamma](DriverState& state, Rng& run_rng, long iteration) {
    const auto batch =
        state.collector.collect_batch(config.cycles_per_batch, state.policy, run_rng, false);
    const auto [reward_mean, time_mean] = estimate_cycle_means(stats_of(batch, gamma));

    const Perturbation perturbation = sample_perturbation(
        state.policy.dim(), config.perturb_scale, config.perturb, run_rng);
    PolicyParams perturbed = state.policy;
    perturbed.theta = perturbed_theta(state.policy, perturbation);

    const auto perturbed_batch =
        state.collector.collect_batch(config.cycles_per_batch, perturbed, run_rng, false);
    const auto [reward_mean_perturbed, time_mean_perturbed] =
        estimate_cycle_means(stats_of(perturbed_batch, gamma));

    const Vec h = h_from_sp(reward_mean, time_mean, reward_mean_perturbed,
                            time_mean_perturbed, perturbation);

    record_iteration(state, config, iteration, reward_mean, time_mean, evaluator);
    apply_update(state, h);
  };
  return drive(env, std::move(policy), config, rng, body);
}

double approx_bound(double lipschitz, double rho, double gamma) {
  if (lipschitz < 0.0 || rho < 0.0) throw std::invalid_argument("approx_bound: negative input");
  if (gamma <= 0.0 || gamma >= 1.0)
    throw std::invalid_argument("approx_bound: gamma must be in (0, 1)");
  return gamma / (1.0 - gamma) * lipschitz * rho;
}

double approx_bound(double lipschitz, double rho, double gamma, double expected_discount,
                    double expected_cycle_time) {
  if (lipschitz < 0.0 || rho < 0.0) throw std::invalid_argument("approx_bound: negative input");
  if (gamma <= 0.0 || gamma >= 1.0)
    throw std::invalid_argument("approx_bound: gamma must be in (0, 1)");
  if (expected_discount > gamma)
    throw std::invalid_argument("approx_bound: expected cycle discount exceeds gamma");
  if (expected_cycle_time < 1.0)
    throw std::invalid_argument("approx_bound: expected cycle time below 1");
  return lipschitz * expected_discount * rho / ((1.0 - gamma) * expected_cycle_time);
}

}  // namespace rrl
