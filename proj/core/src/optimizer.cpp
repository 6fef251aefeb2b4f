#include "rrl/optimizer.hpp"

#include <cmath>
#include <stdexcept>

namespace rrl {

AdamOptimizer::AdamOptimizer(std::size_t dim, AdamConfig config)
    : config_(config), first_moment_(dim, 0.0), second_moment_(dim, 0.0) {
  if (config_.alpha <= 0.0) throw std::invalid_argument("AdamOptimizer: alpha must be positive");
  if (config_.beta1 < 0.0 || config_.beta1 >= 1.0 || config_.beta2 < 0.0 || config_.beta2 >= 1.0)
    throw std::invalid_argument("AdamOptimizer: betas must be in [0, 1)");
}

Vec AdamOptimizer::step(std::span<const double> gradient) {
  if (gradient.size() != first_moment_.size())
    throw std::invalid_argument("AdamOptimizer: gradient dimension mismatch");
  ++t_;
  const double correction1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
  const double correction2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));
  Vec result(gradient.size());
  for (std::size_t i = 0; i < gradient.size(); ++i) {
    first_moment_[i] = config_.beta1 * first_moment_[i] + (1.0 - config_.beta1) * gradient[i];
    second_moment_[i] =
        config_.beta2 * second_moment_[i] + (1.0 - config_.beta2) * gradient[i] * gradient[i];
    const double m_hat = first_moment_[i] / correction1;
    const double v_hat = second_moment_[i] / correction2;
    result[i] = config_.alpha * m_hat / (std::sqrt(v_hat) + config_.epsilon);
  }
  return result;
}

DecayingSgd::DecayingSgd(double a) : a_(a) {
  if (a_ <= 0.0) throw std::invalid_argument("DecayingSgd: rate must be positive");
}

Vec DecayingSgd::step(std::span<const double> gradient) {
  const double rate = a_ / (1.0 + static_cast<double>(t_));
  ++t_;
  Vec result(gradient.size());
  for (std::size_t i = 0; i < gradient.size(); ++i) result[i] = rate * gradient[i];
  return result;
}

std::unique_ptr<Optimizer> make_optimizer(OptimizerKind kind, std::size_t dim,
                                          const AdamConfig& adam, double sgd_rate) {
  if (kind == OptimizerKind::Adam) return std::make_unique<AdamOptimizer>(dim, adam);
  return std::make_unique<DecayingSgd>(sgd_rate);
}

}  // namespace rrl
