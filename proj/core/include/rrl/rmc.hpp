#pragma once

#include <functional>
#include <limits>
#include <optional>

#include "rrl/gradient.hpp"
#include "rrl/optimizer.hpp"
#include "rrl/renewal.hpp"

namespace rrl {

struct EvalResult {
  double mean = 0.0;
  double stddev = 0.0;
};

/// Optional external evaluation hook, invoked on the pre-update policy.
using PolicyEvaluator = std::function<EvalResult(const PolicyParams&)>;

/// Settings of one renewal-cycle policy-gradient run.
struct RmcConfig {
  int cycles_per_batch = 5;  ///< N: cycles per estimation batch
  double gamma = 0.9;
  RewardMode mode = RewardMode::Discounted;

  bool biased = false;      ///< LR only: restarted-discount suffix weights
  bool shared_run = false;  ///< LR only: reuse the estimation batch for gradients

  double perturb_scale = 0.0;  ///< c (SP only)
  PerturbationKind perturb = PerturbationKind::Normal;

  double renewal_radius = 0.0;  ///< rho; 0 = exact renewal at the start state
  int max_cycle_steps = 100000;

  std::uint64_t sample_budget = 0;  ///< stop once total transitions reach this
  long max_iterations = -1;         ///< optional cap; < 0 means unlimited

  OptimizerKind optimizer = OptimizerKind::Adam;
  AdamConfig adam{};
  double sgd_rate = 0.1;

  int record_every = 1;  ///< keep every k-th iteration record
  int eval_every = 0;    ///< evaluator cadence in iterations (0 = never)
};

/// State of the run after iteration `iteration`, measured before the
/// parameter update: theta is the policy the batch was collected under and
/// the means/performance describe that policy.
struct IterationRecord {
  long iteration = 0;
  std::uint64_t samples = 0;  ///< cumulative environment transitions
  double reward_mean = 0.0;   ///< R-hat
  double time_mean = 0.0;     ///< T-hat
  double perf = 0.0;          ///< J-hat
  Vec theta;
  double eval_mean = std::numeric_limits<double>::quiet_NaN();
  double eval_std = std::numeric_limits<double>::quiet_NaN();
};

struct RunResult {
  std::vector<IterationRecord> records;
  Vec final_theta;
  std::uint64_t total_samples = 0;
  long iterations = 0;
};

/// Likelihood-ratio driven run: per iteration, estimate the cycle means, the
/// cycle-mean gradients (from the same batch when shared_run is set, from a
/// fresh one otherwise), form H = T grad R - R grad T, and take a projected
/// ascent step. Requires a differentiable policy family.
RunResult rmc_run_lr(const Environment& env, PolicyParams policy, const RmcConfig& config,
                     Rng& rng, const PolicyEvaluator* evaluator = nullptr);

/// Simultaneous-perturbation driven run: per iteration, estimate the cycle
/// means at theta, re-estimate at the projected perturbation theta + c delta,
/// form H = delta (T R' - R T') / c, and take a projected ascent step. Works
/// for any policy family.
RunResult rmc_run_sp(const Environment& env, PolicyParams policy, const RmcConfig& config,
                     Rng& rng, const PolicyEvaluator* evaluator = nullptr);

/// Performance gap bound for approximate (radius rho) renewals given a local
/// Lipschitz constant of the value function. The loose form is
/// gamma L rho / (1 - gamma); supplying the expected cycle discount
/// (<= gamma) and expected cycle time (>= 1) tightens it to
/// L Tbar rho / ((1 - gamma) T).
double approx_bound(double lipschitz, double rho, double gamma);
double approx_bound(double lipschitz, double rho, double gamma, double expected_discount,
                    double expected_cycle_time);

}  // namespace rrl
