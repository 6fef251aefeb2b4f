#pragma once

#include <memory>
#include <span>

#include "rrl/policy.hpp"

namespace rrl {

/// Produces ascent steps from gradient(-like) estimates.
class Optimizer {
 public:
  virtual ~Optimizer() = default;
  virtual Vec step(std::span<const double> gradient) = 0;
  virtual long iterations() const = 0;
};

struct AdamConfig {
  double alpha = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Adam with bias correction, used as an ascent method.
class AdamOptimizer : public Optimizer {
 public:
  AdamOptimizer(std::size_t dim, AdamConfig config);

  Vec step(std::span<const double> gradient) override;
  long iterations() const override { return t_; }

 private:
  AdamConfig config_;
  Vec first_moment_;
  Vec second_moment_;
  long t_ = 0;
};

/// Plain projected stochastic approximation with the classic decaying
/// schedule alpha_m = a / (1 + m), which satisfies the usual summability
/// conditions.
class DecayingSgd : public Optimizer {
 public:
  explicit DecayingSgd(double a);

  Vec step(std::span<const double> gradient) override;
  long iterations() const override { return t_; }

 private:
  double a_;
  long t_ = 0;
};

enum class OptimizerKind { Adam, DecayingSgd };

std::unique_ptr<Optimizer> make_optimizer(OptimizerKind kind, std::size_t dim,
                                          const AdamConfig& adam, double sgd_rate);

}  // namespace rrl
