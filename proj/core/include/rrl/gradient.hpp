#pragma once

#include <span>

#include "rrl/renewal.hpp"

namespace rrl {

/// Likelihood-ratio estimates of the cycle-mean gradients.
struct GradientEstimate {
  Vec grad_reward;  ///< estimate of grad R_theta
  Vec grad_time;    ///< estimate of grad T_theta
  int n_cycles = 0;
};

/// Likelihood-ratio gradient over a batch of score-carrying cycles:
/// (1/N) sum_n sum_sigma R_sigma^(n) * score_sigma, and the same with
/// T_sigma for the time gradient. `biased` selects the restarted-discount
/// suffix convention, which trades a small bias for lower variance.
/// gamma == 1 gives the average-reward form.
GradientEstimate lr_gradient(std::span<const RegenerativeCycle> cycles, std::size_t dim,
                             double gamma, bool biased);

/// H = T * grad R - R * grad T; shares its root and sign with grad J.
Vec h_from_lr(double reward_mean, double time_mean, const GradientEstimate& grad);

enum class PerturbationKind { Rademacher, Normal };

/// One random search direction plus its step size.
struct Perturbation {
  Vec delta;
  double scale = 0.0;  ///< c
};

Perturbation sample_perturbation(std::size_t dim, double scale, PerturbationKind kind,
                                 Rng& rng);

/// theta + c * delta, projected back onto the policy bounds.
Vec perturbed_theta(const PolicyParams& policy, const Perturbation& perturbation);

/// Simultaneous-perturbation form of H from two independently estimated
/// batches: delta * (T * R' - R * T') / c.
Vec h_from_sp(double reward_mean, double time_mean, double reward_mean_perturbed,
              double time_mean_perturbed, const Perturbation& perturbation);

}  // namespace rrl
