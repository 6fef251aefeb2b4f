#pragma once

#include "rrl/environment.hpp"
#include "rrl/policy.hpp"
#include "rrl/rmc.hpp"

namespace rrl {

/// Monte Carlo policy evaluation: mean and standard deviation of the
/// truncated discounted return sum_{t < horizon} gamma^t r_t over `reps`
/// independent rollouts from the environment's trajectory start. The
/// truncation error against the infinite-horizon value is at most
/// gamma^horizon r_max / (1 - gamma).
EvalResult evaluate_policy(const Environment& env, const PolicyParams& policy, int horizon,
                           int reps, double gamma, Rng& rng);

}  // namespace rrl
