#include "rrl/policy.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace rrl {

Bounds Bounds::uniform(std::size_t dim, double lo, double hi) {
  if (lo > hi) throw std::invalid_argument("Bounds: lo > hi");
  return Bounds{Vec(dim, lo), Vec(dim, hi)};
}

void Bounds::validate(std::size_t dim) const {
  if (lo.size() != dim || hi.size() != dim)
    throw std::invalid_argument("Bounds: dimension mismatch");
  for (std::size_t i = 0; i < dim; ++i)
    if (lo[i] > hi[i]) throw std::invalid_argument("Bounds: lo > hi");
}

PolicyParams PolicyParams::gibbs_tabular(int n_states, int n_actions, double temperature,
                                         double lo, double hi) {
  if (n_states <= 0 || n_actions <= 0)
    throw std::invalid_argument("gibbs_tabular: need positive state/action counts");
  if (temperature <= 0.0)
    throw std::invalid_argument("gibbs_tabular: temperature must be positive");
  PolicyParams p;
  p.family = PolicyFamily::GibbsTabular;
  p.n_states = n_states;
  p.n_actions = n_actions;
  p.temperature = temperature;
  const std::size_t dim = static_cast<std::size_t>(n_states) * n_actions;
  p.theta.assign(dim, 0.0);
  p.bounds = Bounds::uniform(dim, lo, hi);
  return p;
}

PolicyParams PolicyParams::threshold(double theta0, double lo, double hi) {
  PolicyParams p;
  p.family = PolicyFamily::Threshold;
  p.theta = {theta0};
  p.bounds = Bounds::uniform(1, lo, hi);
  return p;
}

PolicyParams PolicyParams::base_stock(double theta0, double lo, double hi) {
  PolicyParams p;
  p.family = PolicyFamily::BaseStock;
  p.theta = {theta0};
  p.bounds = Bounds::uniform(1, lo, hi);
  return p;
}

std::size_t PolicyParams::coord(int state, int action) const {
  return static_cast<std::size_t>(state) * n_actions + action;
}

Vec project(Vec theta, const Bounds& bounds) {
  bounds.validate(theta.size());
  for (std::size_t i = 0; i < theta.size(); ++i)
    theta[i] = std::clamp(theta[i], bounds.lo[i], bounds.hi[i]);
  return theta;
}

namespace {

int tabular_state_index(const PolicyParams& policy, double state) {
  const double rounded = std::nearbyint(state);
  if (rounded != state || rounded < 0.0 || rounded >= policy.n_states)
    throw std::out_of_range("GibbsTabular policy: state " + std::to_string(state) +
                            " is not a valid state index");
  return static_cast<int>(rounded);
}

int tabular_action_index(const PolicyParams& policy, double action) {
  const double rounded = std::nearbyint(action);
  if (rounded != action || rounded < 0.0 || rounded >= policy.n_actions)
    throw std::out_of_range("GibbsTabular policy: action " + std::to_string(action) +
                            " is not a valid action index");
  return static_cast<int>(rounded);
}

}  // namespace

Vec action_probabilities(const PolicyParams& policy, double state) {
  if (policy.family != PolicyFamily::GibbsTabular)
    throw std::invalid_argument("action_probabilities: policy family has no distribution");
  const int s = tabular_state_index(policy, state);
  Vec probs(policy.n_actions);
  double max_logit = -std::numeric_limits<double>::infinity();
  for (int a = 0; a < policy.n_actions; ++a)
    max_logit = std::max(max_logit, policy.theta[policy.coord(s, a)]);
  double sum = 0.0;
  for (int a = 0; a < policy.n_actions; ++a) {
    probs[a] = std::exp((policy.theta[policy.coord(s, a)] - max_logit) / policy.temperature);
    sum += probs[a];
  }
  for (double& p : probs) p /= sum;
  return probs;
}

double log_action_probability(const PolicyParams& policy, double state, double action) {
  const Vec probs = action_probabilities(policy, state);
  const int a = tabular_action_index(policy, action);
  return std::log(probs[a]);
}

double sample_action(const PolicyParams& policy, double state, Rng& rng) {
  switch (policy.family) {
    case PolicyFamily::GibbsTabular: {
      const Vec probs = action_probabilities(policy, state);
      const double u = rng.uniform();
      double cumulative = 0.0;
      for (int a = 0; a + 1 < policy.n_actions; ++a) {
        cumulative += probs[a];
        if (u < cumulative) return a;
      }
      return policy.n_actions - 1;
    }
    case PolicyFamily::Threshold:
      return std::abs(state) >= policy.theta[0] ? 1.0 : 0.0;
    case PolicyFamily::BaseStock:
      return std::max(policy.theta[0] - state, 0.0);
  }
  throw std::logic_error("sample_action: unknown policy family");
}

void score_into(const PolicyParams& policy, double state, double action,
                std::span<double> out) {
  if (policy.family != PolicyFamily::GibbsTabular)
    throw std::invalid_argument("score: policy family is not differentiable");
  if (out.size() != policy.dim())
    throw std::invalid_argument("score: output dimension mismatch");
  const int s = tabular_state_index(policy, state);
  const int a = tabular_action_index(policy, action);
  const Vec probs = action_probabilities(policy, state);
  std::fill(out.begin(), out.end(), 0.0);
  for (int b = 0; b < policy.n_actions; ++b)
    out[policy.coord(s, b)] = ((b == a ? 1.0 : 0.0) - probs[b]) / policy.temperature;
}

Vec score(const PolicyParams& policy, double state, double action) {
  Vec out(policy.dim());
  score_into(policy, state, action, out);
  return out;
}

}  // namespace rrl
