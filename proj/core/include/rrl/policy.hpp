#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "rrl/rng.hpp"

namespace rrl {

using Vec = std::vector<double>;

enum class PolicyFamily { GibbsTabular, Threshold, BaseStock };

/// Per-coordinate closed box for policy parameters.
struct Bounds {
  Vec lo;
  Vec hi;

  static Bounds uniform(std::size_t dim, double lo, double hi);
  void validate(std::size_t dim) const;
};

/// A parameterized policy. Three families:
///  - GibbsTabular: softmax over per-(state, action) logits, one parameter
///    per pair, with a fixed temperature. Differentiable.
///  - Threshold: emit action 1 iff |state| >= theta[0]. Deterministic.
///  - BaseStock: order up to theta[0], i.e. action = max(theta[0] - state, 0).
///    Deterministic.
/// Parameters live in a box; callers re-project after every update.
struct PolicyParams {
  PolicyFamily family = PolicyFamily::Threshold;
  Vec theta;
  Bounds bounds;
  int n_states = 0;    // GibbsTabular only
  int n_actions = 0;   // GibbsTabular only
  double temperature = 1.0;

  static PolicyParams gibbs_tabular(int n_states, int n_actions, double temperature,
                                    double lo, double hi);
  static PolicyParams threshold(double theta0, double lo, double hi);
  static PolicyParams base_stock(double theta0, double lo, double hi);

  bool differentiable() const { return family == PolicyFamily::GibbsTabular; }
  std::size_t dim() const { return theta.size(); }

  /// Flat parameter index of the (state, action) logit (GibbsTabular).
  std::size_t coord(int state, int action) const;
};

/// Coordinate-wise clamp onto the box; idempotent.
Vec project(Vec theta, const Bounds& bounds);

double sample_action(const PolicyParams& policy, double state, Rng& rng);

/// pi_theta(. | state) for the Gibbs family.
Vec action_probabilities(const PolicyParams& policy, double state);

/// log pi_theta(action | state) for the Gibbs family.
double log_action_probability(const PolicyParams& policy, double state, double action);

/// Gradient of log pi_theta(action | state) with respect to theta. Defined
/// for the Gibbs family only; deterministic families throw.
Vec score(const PolicyParams& policy, double state, double action);
void score_into(const PolicyParams& policy, double state, double action,
                std::span<double> out);

}  // namespace rrl
