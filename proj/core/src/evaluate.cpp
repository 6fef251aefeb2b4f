#include "rrl/evaluate.hpp"

#include <cmath>
#include <stdexcept>

namespace rrl {

EvalResult evaluate_policy(const Environment& env, const PolicyParams& policy, int horizon,
                           int reps, double gamma, Rng& rng) {
  if (horizon < 1) throw std::invalid_argument("evaluate_policy: horizon must be >= 1");
  if (reps < 1) throw std::invalid_argument("evaluate_policy: reps must be >= 1");
  if (gamma <= 0.0 || gamma > 1.0)
    throw std::invalid_argument("evaluate_policy: gamma must be in (0, 1]");

  double sum = 0.0;
  double sum_squares = 0.0;
  for (int rep = 0; rep < reps; ++rep) {
    double state = env.trajectory_start(rng);
    double ret = 0.0;
    double weight = 1.0;
    for (int t = 0; t < horizon; ++t) {
      const double action = sample_action(policy, state, rng);
      const StepOutcome out = env.step(state, action, rng);
      ret += weight * out.reward;
      weight *= gamma;
      state = out.next_state;
    }
    sum += ret;
    sum_squares += ret * ret;
  }
  const double n = static_cast<double>(reps);
  const double mean = sum / n;
  const double variance = reps > 1 ? std::max(0.0, (sum_squares - n * mean * mean) / (n - 1.0))
                                   : 0.0;
  return EvalResult{mean, std::sqrt(variance)};
}

}  // namespace rrl
