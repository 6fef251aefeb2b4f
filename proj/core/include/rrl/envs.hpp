#pragma once

#include "rrl/environment.hpp"

namespace rrl {

/// Remote state estimation over an erasure channel. The tracked quantity is
/// the estimation error of a first-order autoregressive source: transmitting
/// (action 1) resets the post-decision error to zero unless the packet is
/// erased (probability erasure_prob); the error then drifts as
/// next = ar_coeff * post + N(0, 1). Per-step reward is the negated cost
/// comm_cost * action + post^2, so maximizing reward minimizes cost.
struct EventTriggerModel {
  double ar_coeff = 1.0;
  double comm_cost = 500.0;
  double erasure_prob = 0.0;
  double discount = 0.9;
};

class EventTriggerEnv : public Environment {
 public:
  explicit EventTriggerEnv(EventTriggerModel model);

  double start_state() const override { return 0.0; }
  double trajectory_start(Rng& rng) const override;
  bool has_post_decision_state() const override { return true; }
  StepOutcome step(double state, double action, Rng& rng) const override;

  const EventTriggerModel& model() const { return model_; }

 private:
  EventTriggerModel model_;
};

/// Single-item inventory with backlogging, exponential demand, and the
/// normalized cost
///   C(s) = a_p s (1-g)/g + a_h s 1{s >= 0} - a_b s 1{s < 0}.
/// Stock evolves as next = clip(s + a - D), D ~ Exp(demand_rate); the
/// per-step reward is -C(next). The optimal policy is base-stock, which makes
/// the exact value of a threshold available in closed form for validation.
struct InventoryModel {
  double procurement_cost = 1.5;  // a_p
  double holding_cost = 1.0;      // a_h
  double backlog_cost = 1.0;      // a_b
  double demand_rate = 0.025;     // rate of the exponential demand
  double discount = 0.9;
  double clip_lo = -100.0;
  double clip_hi = 100.0;
  double start_stock = 1.0;

  void validate() const;
};

class InventoryEnv : public Environment {
 public:
  explicit InventoryEnv(InventoryModel model);

  double start_state() const override { return model_.start_stock; }
  StepOutcome step(double state, double action, Rng& rng) const override;

  /// The normalized per-period cost C(s).
  double normalized_cost(double stock) const;

  const InventoryModel& model() const { return model_; }

 private:
  InventoryModel model_;
};

/// Base-stock threshold minimizing the expected cost:
/// (1/rate) * log((a_h + a_b) / (a_h + a_p (1-g)/g)).
double inventory_optimal_threshold(const InventoryModel& model);

/// Expected discounted cost of the base-stock policy with the given
/// threshold, started from the model's start stock:
///   C(s0) + g/(1-g) * E[C(threshold - D)],
/// with the expectation computed by adaptive quadrature to 1e-8 absolute
/// tolerance. Valid for start_stock <= threshold.
double inventory_value(double threshold, const InventoryModel& model);

/// Lipschitz constant of that value on intervals below the threshold:
/// a_h + a_p (1-g)/g.
double inventory_value_lipschitz(const InventoryModel& model);

/// Synthetic one-state model: every step renews, and the per-step reward is
/// -(action - optimum)^2 plus optional Gaussian noise. Under a base-stock
/// policy the action equals the policy parameter, so the performance is an
/// analytic quadratic with a known maximizer; used to validate optimizers
/// end to end.
class QuadraticEnv : public Environment {
 public:
  explicit QuadraticEnv(double optimum, double noise_std = 0.0);

  double start_state() const override { return 0.0; }
  StepOutcome step(double state, double action, Rng& rng) const override;

  double optimum() const { return optimum_; }

 private:
  double optimum_;
  double noise_std_;
};

}  // namespace rrl
