#include "rrl/gradient.hpp"

#include <cmath>
#include <stdexcept>

namespace rrl {

GradientEstimate lr_gradient(std::span<const RegenerativeCycle> cycles, std::size_t dim,
                             double gamma, bool biased) {
  if (cycles.empty()) throw std::invalid_argument("lr_gradient: empty batch");
  if (gamma <= 0.0 || gamma > 1.0)
    throw std::invalid_argument("lr_gradient: gamma must be in (0, 1]");

  GradientEstimate estimate;
  estimate.grad_reward.assign(dim, 0.0);
  estimate.grad_time.assign(dim, 0.0);
  estimate.n_cycles = static_cast<int>(cycles.size());

  Vec discount_pow;
  for (const RegenerativeCycle& cycle : cycles) {
    const std::size_t length = cycle.steps.size();
    if (length == 0) throw std::invalid_argument("lr_gradient: empty cycle");
    if (!biased) {
      discount_pow.resize(length);
      double w = 1.0;
      for (std::size_t k = 0; k < length; ++k) {
        discount_pow[k] = w;
        w *= gamma;
      }
    }
    // Single backward sweep: maintain the restarted-exponent suffix sums and
    // rescale by gamma^sigma for the unbiased convention.
    double reward_suffix = 0.0;
    double time_suffix = 0.0;
    for (std::size_t sigma = length; sigma-- > 0;) {
      const ScoredStep& step = cycle.steps[sigma];
      if (step.score.size() != dim)
        throw std::invalid_argument("lr_gradient: cycle collected without scores");
      reward_suffix = step.reward + gamma * reward_suffix;
      time_suffix = 1.0 + gamma * time_suffix;
      const double scale = biased ? 1.0 : discount_pow[sigma];
      const double wr = scale * reward_suffix;
      const double wt = scale * time_suffix;
      for (std::size_t i = 0; i < dim; ++i) {
        estimate.grad_reward[i] += wr * step.score[i];
        estimate.grad_time[i] += wt * step.score[i];
      }
    }
  }
  const double n = static_cast<double>(cycles.size());
  for (std::size_t i = 0; i < dim; ++i) {
    estimate.grad_reward[i] /= n;
    estimate.grad_time[i] /= n;
  }
  return estimate;
}

Vec h_from_lr(double reward_mean, double time_mean, const GradientEstimate& grad) {
  if (grad.grad_reward.size() != grad.grad_time.size())
    throw std::invalid_argument("h_from_lr: gradient dimension mismatch");
  Vec h(grad.grad_reward.size());
  for (std::size_t i = 0; i < h.size(); ++i)
    h[i] = time_mean * grad.grad_reward[i] - reward_mean * grad.grad_time[i];
  return h;
}

Perturbation sample_perturbation(std::size_t dim, double scale, PerturbationKind kind,
                                 Rng& rng) {
  if (scale <= 0.0) throw std::invalid_argument("sample_perturbation: scale must be positive");
  Perturbation perturbation;
  perturbation.scale = scale;
  perturbation.delta.resize(dim);
  for (double& d : perturbation.delta)
    d = kind == PerturbationKind::Rademacher ? rng.rademacher() : rng.normal();
  return perturbation;
}

Vec perturbed_theta(const PolicyParams& policy, const Perturbation& perturbation) {
  if (perturbation.delta.size() != policy.dim())
    throw std::invalid_argument("perturbed_theta: dimension mismatch");
  Vec theta = policy.theta;
  for (std::size_t i = 0; i < theta.size(); ++i)
    theta[i] += perturbation.scale * perturbation.delta[i];
  return project(std::move(theta), policy.bounds);
}

Vec h_from_sp(double reward_mean, double time_mean, double reward_mean_perturbed,
              double time_mean_perturbed, const Perturbation& perturbation) {
  const double difference =
      (time_mean * reward_mean_perturbed - reward_mean * time_mean_perturbed) /
      perturbation.scale;
  Vec h(perturbation.delta.size());
  for (std::size_t i = 0; i < h.size(); ++i) h[i] = perturbation.delta[i] * difference;
  return h;
}

}  // namespace rrl
