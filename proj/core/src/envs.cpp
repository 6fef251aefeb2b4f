#include "rrl/envs.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace rrl {

EventTriggerEnv::EventTriggerEnv(EventTriggerModel model) : model_(model) {
  if (model_.erasure_prob < 0.0 || model_.erasure_prob > 1.0)
    throw std::invalid_argument("EventTriggerEnv: erasure_prob must be in [0, 1]");
  if (model_.comm_cost < 0.0)
    throw std::invalid_argument("EventTriggerEnv: comm_cost must be nonnegative");
}

double EventTriggerEnv::trajectory_start(Rng& rng) const {
  return model_.ar_coeff * start_state() + rng.normal();
}

StepOutcome EventTriggerEnv::step(double state, double action, Rng& rng) const {
  const bool transmit = action != 0.0;
  double post = state;
  if (transmit && rng.uniform() >= model_.erasure_prob) post = 0.0;
  const double next = model_.ar_coeff * post + rng.normal();
  const double cost = model_.comm_cost * (transmit ? 1.0 : 0.0) + post * post;
  return StepOutcome{next, post, -cost};
}

void InventoryModel::validate() const {
  if (procurement_cost <= 0.0 || holding_cost <= 0.0 || backlog_cost <= 0.0)
    throw std::invalid_argument("InventoryModel: costs must be positive");
  if (demand_rate <= 0.0)
    throw std::invalid_argument("InventoryModel: demand_rate must be positive");
  if (discount <= 0.0 || discount >= 1.0)
    throw std::invalid_argument("InventoryModel: discount must be in (0, 1)");
  if (clip_lo >= clip_hi) throw std::invalid_argument("InventoryModel: empty clip interval");
}

InventoryEnv::InventoryEnv(InventoryModel model) : model_(model) { model_.validate(); }

double InventoryEnv::normalized_cost(double stock) const {
  const double g = model_.discount;
  double cost = model_.procurement_cost * stock * (1.0 - g) / g;
  if (stock >= 0.0)
    cost += model_.holding_cost * stock;
  else
    cost -= model_.backlog_cost * stock;
  return cost;
}

StepOutcome InventoryEnv::step(double state, double action, Rng& rng) const {
  if (action < 0.0) throw std::invalid_argument("InventoryEnv::step: negative order");
  const double demand = rng.exponential(model_.demand_rate);
  const double next =
      std::clamp(state + action - demand, model_.clip_lo, model_.clip_hi);
  return StepOutcome{next, state + action, -normalized_cost(next)};
}

double inventory_value_lipschitz(const InventoryModel& model) {
  const double g = model.discount;
  return model.holding_cost + model.procurement_cost * (1.0 - g) / g;
}

double inventory_optimal_threshold(const InventoryModel& model) {
  model.validate();
  const double g = model.discount;
  const double denom = model.holding_cost + model.procurement_cost * (1.0 - g) / g;
  const double ratio = (model.holding_cost + model.backlog_cost) / denom;
  if (ratio <= 0.0)
    throw std::domain_error("inventory_optimal_threshold: nonpositive log argument");
  return std::log(ratio) / model.demand_rate;
}

namespace {

// Adaptive Simpson quadrature with an absolute tolerance.
double simpson_rule(double a, double fa, double b, double fb, double fm) {
  return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

template <typename F>
double adaptive_simpson(const F& f, double a, double b, double fa, double fb, double fm,
                        double whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = simpson_rule(a, fa, m, fm, flm);
  const double right = simpson_rule(m, fm, b, fb, frm);
  if (depth <= 0 || std::abs(left + right - whole) <= 15.0 * tol)
    return left + right + (left + right - whole) / 15.0;
  return adaptive_simpson(f, a, m, fa, fm, flm, left, tol / 2.0, depth - 1) +
         adaptive_simpson(f, m, b, fm, fb, frm, right, tol / 2.0, depth - 1);
}

template <typename F>
double integrate(const F& f, double a, double b, double tol) {
  const double fa = f(a);
  const double fb = f(b);
  const double fm = f(0.5 * (a + b));
  const double whole = simpson_rule(a, fa, b, fb, fm);
  return adaptive_simpson(f, a, b, fa, fb, fm, whole, tol, 48);
}

}  // namespace

double inventory_value(double threshold, const InventoryModel& model) {
  model.validate();
  if (model.start_stock > threshold)
    throw std::domain_error("inventory_value: defined only for start_stock <= threshold");
  if (threshold < model.clip_lo || threshold > model.clip_hi)
    throw std::domain_error("inventory_value: threshold outside the state interval");

  const InventoryEnv env(model);
  const double rate = model.demand_rate;
  const auto integrand = [&](double d) {
    return env.normalized_cost(threshold - d) * rate * std::exp(-rate * d);
  };
  // The density tail beyond 45/rate contributes < 1e-12 for any reasonable
  // cost slope; split at the kink of C at d = threshold.
  const double upper = threshold + 45.0 / rate;
  double expected_cost;
  if (threshold > 0.0) {
    expected_cost = integrate(integrand, 0.0, threshold, 5e-9) +
                    integrate(integrand, threshold, upper, 5e-9);
  } else {
    expected_cost = integrate(integrand, 0.0, upper, 1e-8);
  }
  const double g = model.discount;
  return env.normalized_cost(model.start_stock) + g / (1.0 - g) * expected_cost;
}

QuadraticEnv::QuadraticEnv(double optimum, double noise_std)
    : optimum_(optimum), noise_std_(noise_std) {
  if (noise_std_ < 0.0) throw std::invalid_argument("QuadraticEnv: negative noise");
}

StepOutcome QuadraticEnv::step(double /*state*/, double action, Rng& rng) const {
  const double gap = action - optimum_;
  double reward = -gap * gap;
  if (noise_std_ > 0.0) reward += noise_std_ * rng.normal();
  return StepOutcome{0.0, 0.0, reward};
}

}  // namespace rrl
