#include "rrl/tabular_mdp.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace rrl {

void TabularMDP::validate(double tol) const {
  if (n_states <= 0 || n_actions <= 0)
    throw std::invalid_argument("TabularMDP: empty state or action space");
  const auto ns = static_cast<std::size_t>(n_states);
  const auto na = static_cast<std::size_t>(n_actions);
  if (transitions.size() != na * ns * ns || rewards.size() != ns * na)
    throw std::invalid_argument("TabularMDP: array shape mismatch");
  if (start_state < 0 || start_state >= n_states)
    throw std::invalid_argument("TabularMDP: start state out of range");
  for (int a = 0; a < n_actions; ++a) {
    for (int s = 0; s < n_states; ++s) {
      double sum = 0.0;
      for (int t = 0; t < n_states; ++t) {
        const double mass = p(a, s, t);
        if (mass < 0.0) throw std::invalid_argument("TabularMDP: negative transition mass");
        sum += mass;
      }
      if (std::abs(sum - 1.0) > tol)
        throw std::invalid_argument("TabularMDP: transition row does not sum to 1");
    }
  }
}

TabularMDP garnet(int n_states, int n_actions, int branching, double reward_prob,
                  double reward_lo, double reward_hi, Rng& rng) {
  if (branching < 1 || branching > n_states)
    throw std::invalid_argument("garnet: branching must be in [1, n_states]");
  if (reward_prob < 0.0 || reward_prob > 1.0)
    throw std::invalid_argument("garnet: reward_prob must be in [0, 1]");

  TabularMDP mdp;
  mdp.n_states = n_states;
  mdp.n_actions = n_actions;
  mdp.branching = branching;
  mdp.start_state = 0;
  mdp.transitions.assign(static_cast<std::size_t>(n_actions) * n_states * n_states, 0.0);
  mdp.rewards.assign(static_cast<std::size_t>(n_states) * n_actions, 0.0);

  std::vector<int> pool(n_states);
  for (int a = 0; a < n_actions; ++a) {
    for (int s = 0; s < n_states; ++s) {
      // Partial Fisher-Yates: the first `branching` entries of pool become a
      // uniform sample of distinct successor states.
      std::iota(pool.begin(), pool.end(), 0);
      for (int k = 0; k < branching; ++k) {
        const int j = k + rng.uniform_int(n_states - k);
        std::swap(pool[k], pool[j]);
      }
      double sum = 0.0;
      Vec mass(branching);
      for (int k = 0; k < branching; ++k) {
        mass[k] = rng.uniform();
        sum += mass[k];
      }
      if (sum <= 0.0) {  // vanishing probability; keep the row stochastic
        mass.assign(branching, 1.0);
        sum = branching;
      }
      for (int k = 0; k < branching; ++k) mdp.p(a, s, pool[k]) = mass[k] / sum;
    }
  }
  for (int s = 0; s < n_states; ++s)
    for (int a = 0; a < n_actions; ++a)
      if (rng.uniform() < reward_prob)
        mdp.reward(s, a) = rng.uniform(reward_lo, reward_hi);
  return mdp;
}

TabularMDP garnet(int n_states, int n_actions, int branching, double reward_prob,
                  double reward_lo, double reward_hi, std::uint64_t seed) {
  Rng rng(seed);
  TabularMDP mdp = garnet(n_states, n_actions, branching, reward_prob, reward_lo, reward_hi, rng);
  mdp.seed = seed;
  return mdp;
}

namespace {

void print_g17(std::ostream& out, double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  out << buf;
}

}  // namespace

void save_tabular_mdp(const TabularMDP& mdp, std::ostream& out) {
  if (mdp.start_state != 0)
    throw std::invalid_argument("save_tabular_mdp: format presumes start state 0");
  out << mdp.n_states << ' ' << mdp.n_actions << ' ' << mdp.branching << ' ' << mdp.seed << '\n';
  for (int a = 0; a < mdp.n_actions; ++a) {
    for (int s = 0; s < mdp.n_states; ++s) {
      for (int t = 0; t < mdp.n_states; ++t) {
        if (t) out << ' ';
        print_g17(out, mdp.p(a, s, t));
      }
      out << '\n';
    }
  }
  for (int s = 0; s < mdp.n_states; ++s) {
    for (int a = 0; a < mdp.n_actions; ++a) {
      if (a) out << ' ';
      print_g17(out, mdp.reward(s, a));
    }
    out << '\n';
  }
}

void save_tabular_mdp(const TabularMDP& mdp, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_tabular_mdp: cannot open " + path);
  save_tabular_mdp(mdp, out);
}

TabularMDP load_tabular_mdp(std::istream& in) {
  TabularMDP mdp;
  if (!(in >> mdp.n_states >> mdp.n_actions >> mdp.branching >> mdp.seed))
    throw std::runtime_error("load_tabular_mdp: malformed header");
  if (mdp.n_states <= 0 || mdp.n_actions <= 0)
    throw std::runtime_error("load_tabular_mdp: invalid dimensions");
  const auto ns = static_cast<std::size_t>(mdp.n_states);
  const auto na = static_cast<std::size_t>(mdp.n_actions);
  mdp.transitions.resize(na * ns * ns);
  mdp.rewards.resize(ns * na);
  for (double& x : mdp.transitions)
    if (!(in >> x)) throw std::runtime_error("load_tabular_mdp: truncated transitions");
  for (double& x : mdp.rewards)
    if (!(in >> x)) throw std::runtime_error("load_tabular_mdp: truncated rewards");
  mdp.validate();
  return mdp;
}

TabularMDP load_tabular_mdp(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_tabular_mdp: cannot open " + path);
  return load_tabular_mdp(in);
}

TabularEnv::TabularEnv(TabularMDP mdp) : mdp_(std::move(mdp)) { mdp_.validate(); }

StepOutcome TabularEnv::step(double state, double action, Rng& rng) const {
  const int s = static_cast<int>(state);
  const int a = static_cast<int>(action);
  if (s < 0 || s >= mdp_.n_states || static_cast<double>(s) != state)
    throw std::out_of_range("TabularEnv::step: invalid state");
  if (a < 0 || a >= mdp_.n_actions || static_cast<double>(a) != action)
    throw std::out_of_range("TabularEnv::step: invalid action");
  const double u = rng.uniform();
  double cumulative = 0.0;
  int next = mdp_.n_states - 1;
  for (int t = 0; t < mdp_.n_states; ++t) {
    cumulative += mdp_.p(a, s, t);
    if (u < cumulative) {
      next = t;
      break;
    }
  }
  return StepOutcome{static_cast<double>(next), static_cast<double>(next),
                     mdp_.reward(s, a)};
}

}  // namespace rrl
