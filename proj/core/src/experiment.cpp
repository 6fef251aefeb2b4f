#include "rrl/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <thread>

#include "rrl/evaluate.hpp"

namespace rrl {

namespace fs = std::filesystem;

std::string format_g17(double value) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  return buf;
}

namespace {

// ---------------------------------------------------------------------------
// Config parsing
// ---------------------------------------------------------------------------

std::string trim(const std::string& text) {
  const auto begin = text.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  const auto end = text.find_last_not_of(" \t\r\n");
  return text.substr(begin, end - begin + 1);
}

/// One parsed section; typed access marks keys as consumed so leftovers can
/// be reported as unknown.
class Section {
 public:
  std::string name;

  void insert(const std::string& key, const std::string& value) {
    if (values_.count(key)) throw ConfigError("[" + name + "] duplicate key '" + key + "'");
    values_[key] = value;
  }

  bool has(const std::string& key) const { return values_.count(key) != 0; }

  std::string get_string(const std::string& key, const std::string& fallback) {
    const auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    consumed_.insert(key);
    return it->second;
  }

  std::string require_string(const std::string& key) {
    const auto it = values_.find(key);
    if (it == values_.end())
      throw ConfigError("[" + name + "] missing required key '" + key + "'");
    consumed_.insert(key);
    return it->second;
  }

  double get_double(const std::string& key, double fallback) {
    return has(key) ? parse_double(key, require_string(key)) : fallback;
  }
  double require_double(const std::string& key) {
    return parse_double(key, require_string(key));
  }
  long get_long(const std::string& key, long fallback) {
    return has(key) ? parse_long(key, require_string(key)) : fallback;
  }
  int get_int(const std::string& key, int fallback) {
    return static_cast<int>(get_long(key, fallback));
  }
  int require_int(const std::string& key) {
    return static_cast<int>(parse_long(key, require_string(key)));
  }
  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) {
    if (!has(key)) return fallback;
    const std::string text = require_string(key);
    try {
      return std::stoull(text);
    } catch (const std::exception&) {
      throw ConfigError("[" + name + "] key '" + key + "': expected an unsigned integer, got '" +
                        text + "'");
    }
  }
  bool get_bool(const std::string& key, bool fallback) {
    if (!has(key)) return fallback;
    std::string text = require_string(key);
    std::transform(text.begin(), text.end(), text.begin(), ::tolower);
    if (text == "true" || text == "1" || text == "yes" || text == "on") return true;
    if (text == "false" || text == "0" || text == "no" || text == "off") return false;
    throw ConfigError("[" + name + "] key '" + key + "': expected a boolean, got '" + text + "'");
  }

  void reject_unconsumed() const {
    for (const auto& [key, value] : values_)
      if (!consumed_.count(key))
        throw ConfigError("[" + name + "] unknown key '" + key + "'");
  }

 private:
  double parse_double(const std::string& key, const std::string& text) const {
    try {
      std::size_t used = 0;
      const double value = std::stod(text, &used);
      if (used != text.size()) throw std::invalid_argument(text);
      return value;
    } catch (const std::exception&) {
      throw ConfigError("[" + name + "] key '" + key + "': expected a number, got '" + text +
                        "'");
    }
  }
  long parse_long(const std::string& key, const std::string& text) const {
    try {
      std::size_t used = 0;
      const long value = std::stol(text, &used);
      if (used != text.size()) throw std::invalid_argument(text);
      return value;
    } catch (const std::exception&) {
      throw ConfigError("[" + name + "] key '" + key + "': expected an integer, got '" + text +
                        "'");
    }
  }

  std::map<std::string, std::string> values_;
  std::set<std::string> consumed_;
};

std::vector<Section> split_sections(const std::string& text) {
  std::vector<Section> sections;
  std::istringstream stream(text);
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(stream, line)) {
    ++line_number;
    const auto comment = line.find('#');
    if (comment != std::string::npos) line.erase(comment);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ConfigError("line " + std::to_string(line_number) + ": malformed section header");
      Section section;
      section.name = trim(line.substr(1, line.size() - 2));
      if (section.name.empty())
        throw ConfigError("line " + std::to_string(line_number) + ": empty section name");
      sections.push_back(std::move(section));
      continue;
    }
    const auto equals = line.find('=');
    if (equals == std::string::npos)
      throw ConfigError("line " + std::to_string(line_number) + ": expected 'key = value'");
    if (sections.empty())
      throw ConfigError("line " + std::to_string(line_number) + ": key outside of a section");
    sections.back().insert(trim(line.substr(0, equals)), trim(line.substr(equals + 1)));
  }
  if (sections.empty()) throw ConfigError("config has no experiment sections");
  return sections;
}

EnvFamily parse_env_family(const std::string& name, const std::string& text) {
  if (text == "garnet") return EnvFamily::Garnet;
  if (text == "event_trigger") return EnvFamily::EventTrigger;
  if (text == "inventory") return EnvFamily::Inventory;
  if (text == "quadratic") return EnvFamily::Quadratic;
  throw ConfigError("[" + name + "] unknown environment '" + text + "'");
}

Algorithm parse_algorithm(const std::string& name, const std::string& text) {
  if (text == "rmc_lr") return Algorithm::RmcLr;
  if (text == "rmc_lr_biased") return Algorithm::RmcLrBiased;
  if (text == "rmc_sp") return Algorithm::RmcSp;
  if (text == "sarsa_lambda") return Algorithm::SarsaLambda;
  if (text == "value_iteration") return Algorithm::ValueIteration;
  if (text == "grid_search") return Algorithm::GridSearch;
  if (text == "closed_form") return Algorithm::ClosedForm;
  throw ConfigError("[" + name + "] unknown algorithm '" + text + "'");
}

std::string algorithm_name(Algorithm algorithm) {
  switch (algorithm) {
    case Algorithm::RmcLr: return "rmc_lr";
    case Algorithm::RmcLrBiased: return "rmc_lr_biased";
    case Algorithm::RmcSp: return "rmc_sp";
    case Algorithm::SarsaLambda: return "sarsa_lambda";
    case Algorithm::ValueIteration: return "value_iteration";
    case Algorithm::GridSearch: return "grid_search";
    case Algorithm::ClosedForm: return "closed_form";
  }
  return "?";
}

std::string env_name(EnvFamily family) {
  switch (family) {
    case EnvFamily::Garnet: return "garnet";
    case EnvFamily::EventTrigger: return "event_trigger";
    case EnvFamily::Inventory: return "inventory";
    case EnvFamily::Quadratic: return "quadratic";
  }
  return "?";
}

bool is_learning_algorithm(Algorithm algorithm) {
  return algorithm == Algorithm::RmcLr || algorithm == Algorithm::RmcLrBiased ||
         algorithm == Algorithm::RmcSp || algorithm == Algorithm::SarsaLambda;
}

ExperimentConfig parse_section(Section& section) {
  ExperimentConfig config;
  config.name = section.name;
  config.env_family = parse_env_family(section.name, section.require_string("environment"));
  config.algorithm = parse_algorithm(section.name, section.require_string("algorithm"));

  switch (config.env_family) {
    case EnvFamily::Garnet:
      config.garnet.load_path = section.get_string("load_mdp", "");
      config.garnet.save_path = section.get_string("save_mdp", "");
      if (config.garnet.load_path.empty()) {
        config.garnet.n_states = section.require_int("n_states");
        config.garnet.n_actions = section.require_int("n_actions");
        config.garnet.branching = section.require_int("branching");
        config.garnet.reward_prob = section.require_double("reward_prob");
        config.garnet.reward_lo = section.require_double("reward_lo");
        config.garnet.reward_hi = section.require_double("reward_hi");
        config.garnet.env_seed = section.get_u64("env_seed", 1);
      }
      break;
    case EnvFamily::EventTrigger:
      config.event.ar_coeff = section.get_double("ar_coeff", 1.0);
      config.event.comm_cost = section.require_double("comm_cost");
      config.event.erasure_prob = section.get_double("p_d", 0.0);
      break;
    case EnvFamily::Inventory:
      config.inventory.procurement_cost = section.require_double("a_p");
      config.inventory.holding_cost = section.require_double("a_h");
      config.inventory.backlog_cost = section.require_double("a_b");
      config.inventory.demand_rate = section.require_double("demand_rate");
      config.inventory.clip_lo = section.get_double("clip_lo", -100.0);
      config.inventory.clip_hi = section.get_double("clip_hi", 100.0);
      config.inventory.start_stock = section.get_double("start_stock", 1.0);
      break;
    case EnvFamily::Quadratic:
      config.quad_optimum = section.get_double("optimum", 5.0);
      config.quad_noise = section.get_double("noise_std", 0.0);
      break;
  }

  config.gamma = section.get_double("gamma", 0.9);
  config.event.discount = config.gamma;
  config.inventory.discount = config.gamma;

  const std::string mode = section.get_string("mode", "discounted");
  if (mode == "discounted")
    config.mode = RewardMode::Discounted;
  else if (mode == "average")
    config.mode = RewardMode::Average;
  else
    throw ConfigError("[" + section.name + "] unknown mode '" + mode + "'");

  if (section.has("policy")) {
    const std::string family = section.require_string("policy");
    if (family == "gibbs")
      config.policy_family = PolicyFamily::GibbsTabular;
    else if (family == "threshold")
      config.policy_family = PolicyFamily::Threshold;
    else if (family == "base_stock")
      config.policy_family = PolicyFamily::BaseStock;
    else
      throw ConfigError("[" + section.name + "] unknown policy family '" + family + "'");
  }
  config.theta0 = section.get_double("theta0", 0.0);
  config.theta_lo = section.get_double("theta_lo", -30.0);
  config.theta_hi = section.get_double("theta_hi", 30.0);
  config.temperature = section.get_double("temperature", 1.0);

  config.n_cycles = section.get_int("N", 5);
  if (section.has("c")) config.c = section.require_double("c");
  if (section.has("perturb")) {
    const std::string kind = section.require_string("perturb");
    if (kind == "normal")
      config.perturb = PerturbationKind::Normal;
    else if (kind == "rademacher")
      config.perturb = PerturbationKind::Rademacher;
    else
      throw ConfigError("[" + section.name + "] unknown perturbation '" + kind + "'");
  }
  config.shared_run = section.get_bool("shared_run", false);

  const std::string optimizer = section.get_string("optimizer", "adam");
  if (optimizer == "adam")
    config.optimizer = OptimizerKind::Adam;
  else if (optimizer == "sgd")
    config.optimizer = OptimizerKind::DecayingSgd;
  else
    throw ConfigError("[" + section.name + "] unknown optimizer '" + optimizer + "'");
  config.adam_alpha = section.get_double("adam_alpha", 0.0);
  config.sgd_rate = section.get_double("sgd_a", 0.0);

  config.rho = section.get_double("rho", 0.0);
  config.max_cycle_steps = section.get_int("max_cycle_steps", 100000);
  config.seed = section.get_u64("seed", 1);
  config.replications = section.get_int("replications", 1);
  config.budget = section.get_u64("budget", 0);
  config.max_iterations = section.get_long("max_iterations", -1);
  config.record_every = section.get_int("record_every", 1);
  config.eval_every = section.get_int("eval_every", 0);
  config.eval_horizon = section.get_int("eval_horizon", 250);
  config.eval_reps = section.get_int("eval_reps", 100);

  if (section.has("lambda")) config.lambda = section.require_double("lambda");
  config.critic_rate = section.get_double("critic_rate", 0.1);

  config.vi_tol = section.get_double("vi_tol", 1e-10);
  config.grid_lo = section.get_double("grid_lo", 0.0);
  config.grid_hi = section.get_double("grid_hi", 0.0);
  config.grid_step = section.get_double("grid_step", 0.0);
  config.grid_reps = section.get_int("grid_reps", 0);
  config.horizon = section.get_int("horizon", 0);

  config.out_dir = section.get_string("out_dir", "");
  config.dump_theta = section.get_bool("dump_theta", false);
  config.workers = section.get_int("workers", 1);

  // `c`, `perturb`, `shared_run`, and `lambda` are algorithm-specific; flag
  // them when they cannot take effect.
  if (section.has("c") && config.algorithm != Algorithm::RmcSp)
    throw ConfigError("[" + section.name + "] 'c' is only meaningful for rmc_sp");
  if (section.has("perturb") && config.algorithm != Algorithm::RmcSp)
    throw ConfigError("[" + section.name + "] 'perturb' is only meaningful for rmc_sp");
  if (section.has("shared_run") && config.algorithm != Algorithm::RmcLr &&
      config.algorithm != Algorithm::RmcLrBiased)
    throw ConfigError("[" + section.name + "] 'shared_run' is only meaningful for rmc_lr*");
  if (section.has("lambda") && config.algorithm != Algorithm::SarsaLambda)
    throw ConfigError("[" + section.name + "] 'lambda' is only meaningful for sarsa_lambda");

  section.reject_unconsumed();
  config.validate();
  return config;
}

PolicyFamily default_policy_family(EnvFamily env) {
  switch (env) {
    case EnvFamily::Garnet: return PolicyFamily::GibbsTabular;
    case EnvFamily::EventTrigger: return PolicyFamily::Threshold;
    case EnvFamily::Inventory: return PolicyFamily::BaseStock;
    case EnvFamily::Quadratic: return PolicyFamily::BaseStock;
  }
  return PolicyFamily::Threshold;
}

}  // namespace

void ExperimentConfig::validate() const {
  const auto fail = [this](const std::string& message) {
    throw ConfigError("[" + name + "] " + message);
  };
  if (replications < 1) fail("replications must be >= 1");
  if (n_cycles < 1) fail("N must be >= 1");
  if (max_cycle_steps < 1) fail("max_cycle_steps must be >= 1");
  if (record_every < 1) fail("record_every must be >= 1");
  if (rho < 0.0) fail("rho must be nonnegative");
  if (workers < 1) fail("workers must be >= 1");
  if (mode == RewardMode::Discounted && (gamma <= 0.0 || gamma >= 1.0))
    fail("discounted mode needs gamma in (0, 1)");
  if (theta_lo > theta_hi) fail("theta_lo > theta_hi");
  if (temperature <= 0.0) fail("temperature must be positive");

  const PolicyFamily family = policy_family.value_or(default_policy_family(env_family));
  if (family == PolicyFamily::GibbsTabular && env_family != EnvFamily::Garnet)
    fail("gibbs policies need a tabular environment");

  if (algorithm == Algorithm::RmcSp) {
    if (c <= 0.0) fail("rmc_sp requires a positive perturbation size 'c'");
  }
  if (algorithm == Algorithm::RmcLr || algorithm == Algorithm::RmcLrBiased) {
    if (family != PolicyFamily::GibbsTabular)
      fail("likelihood-ratio algorithms need the differentiable gibbs family");
  }
  if (algorithm == Algorithm::SarsaLambda) {
    if (env_family != EnvFamily::Garnet) fail("sarsa_lambda needs a tabular environment");
    if (lambda < 0.0 || lambda > 1.0) fail("lambda must be in [0, 1]");
    if (critic_rate <= 0.0) fail("critic_rate must be positive");
    if (mode == RewardMode::Average) fail("sarsa_lambda supports discounted mode only");
  }
  if (is_learning_algorithm(algorithm)) {
    if (optimizer == OptimizerKind::Adam && adam_alpha <= 0.0)
      fail("adam_alpha must be set (positive) for learning algorithms");
    if (optimizer == OptimizerKind::DecayingSgd && sgd_rate <= 0.0)
      fail("sgd_a must be set (positive) when optimizer = sgd");
  }
  if (algorithm == Algorithm::GridSearch) {
    if (grid_step <= 0.0 || grid_hi < grid_lo) fail("grid_search needs grid_lo/grid_hi/grid_step");
    if (grid_reps < 1) fail("grid_search needs grid_reps >= 1");
    if (horizon < 1) fail("grid_search needs horizon >= 1");
  }
  if (algorithm == Algorithm::ValueIteration) {
    if (env_family != EnvFamily::Garnet) fail("value_iteration needs a tabular environment");
    if (vi_tol <= 0.0) fail("vi_tol must be positive");
  }
  if (algorithm == Algorithm::ClosedForm && env_family != EnvFamily::Inventory)
    fail("closed_form oracles exist for the inventory environment only");
  if (eval_every > 0 && (eval_horizon < 1 || eval_reps < 1))
    fail("eval_horizon and eval_reps must be >= 1");
  if (env_family == EnvFamily::Garnet && garnet.load_path.empty()) {
    if (garnet.n_states < 1 || garnet.n_actions < 1) fail("garnet needs n_states and n_actions");
    if (garnet.branching < 1 || garnet.branching > garnet.n_states)
      fail("garnet branching must be in [1, n_states]");
    if (garnet.reward_prob < 0.0 || garnet.reward_prob > 1.0)
      fail("garnet reward_prob must be in [0, 1]");
  }
}

std::vector<ExperimentConfig> parse_config_text(const std::string& text) {
  std::vector<Section> sections = split_sections(text);
  std::vector<ExperimentConfig> configs;
  configs.reserve(sections.size());
  for (Section& section : sections) configs.push_back(parse_section(section));
  return configs;
}

std::vector<ExperimentConfig> parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_config_text(buffer.str());
}

std::string resolve_out_root(const ExperimentConfig& config, const RunOverrides& overrides) {
  if (overrides.out_dir && !overrides.out_dir->empty()) return *overrides.out_dir;
  if (!config.out_dir.empty()) return config.out_dir;
  if (const char* env_root = std::getenv("RENEWAL_RL_OUT"); env_root && *env_root)
    return env_root;
  return "out";
}

// ---------------------------------------------------------------------------
// Experiment construction and execution
// ---------------------------------------------------------------------------

BuiltExperiment build_experiment(const ExperimentConfig& config) {
  BuiltExperiment built;

  switch (config.env_family) {
    case EnvFamily::Garnet: {
      TabularMDP mdp;
      if (!config.garnet.load_path.empty()) {
        mdp = load_tabular_mdp(config.garnet.load_path);
      } else {
        mdp = garnet(config.garnet.n_states, config.garnet.n_actions, config.garnet.branching,
                     config.garnet.reward_prob, config.garnet.reward_lo, config.garnet.reward_hi,
                     config.garnet.env_seed);
        if (!config.garnet.save_path.empty()) save_tabular_mdp(mdp, config.garnet.save_path);
      }
      built.mdp = mdp;
      built.env = std::make_shared<TabularEnv>(std::move(mdp));
      break;
    }
    case EnvFamily::EventTrigger: {
      EventTriggerModel model = config.event;
      model.discount = config.gamma;
      built.env = std::make_shared<EventTriggerEnv>(model);
      break;
    }
    case EnvFamily::Inventory: {
      InventoryModel model = config.inventory;
      model.discount = config.gamma;
      built.env = std::make_shared<InventoryEnv>(model);
      break;
    }
    case EnvFamily::Quadratic:
      built.env = std::make_shared<QuadraticEnv>(config.quad_optimum, config.quad_noise);
      break;
  }

  const PolicyFamily family =
      config.policy_family.value_or(default_policy_family(config.env_family));
  switch (family) {
    case PolicyFamily::GibbsTabular: {
      if (!built.mdp) throw ConfigError("[" + config.name + "] gibbs policy needs a tabular model");
      built.initial_policy =
          PolicyParams::gibbs_tabular(built.mdp->n_states, built.mdp->n_actions,
                                      config.temperature, config.theta_lo, config.theta_hi);
      break;
    }
    case PolicyFamily::Threshold:
      built.initial_policy = PolicyParams::threshold(config.theta0, config.theta_lo,
                                                     config.theta_hi);
      break;
    case PolicyFamily::BaseStock:
      built.initial_policy = PolicyParams::base_stock(config.theta0, config.theta_lo,
                                                      config.theta_hi);
      break;
  }

  RmcConfig rmc;
  rmc.cycles_per_batch = config.n_cycles;
  rmc.gamma = config.gamma;
  rmc.mode = config.mode;
  rmc.biased = config.algorithm == Algorithm::RmcLrBiased;
  rmc.shared_run = config.shared_run;
  rmc.perturb_scale = config.c;
  rmc.perturb = config.perturb;
  rmc.renewal_radius = config.rho;
  rmc.max_cycle_steps = config.max_cycle_steps;
  rmc.sample_budget = config.budget;
  rmc.max_iterations = config.max_iterations;
  rmc.optimizer = config.optimizer;
  rmc.adam.alpha = config.adam_alpha;
  rmc.sgd_rate = config.sgd_rate;
  rmc.record_every = config.record_every;
  rmc.eval_every = config.eval_every;
  built.rmc = rmc;

  SarsaConfig sarsa;
  sarsa.lambda = config.lambda;
  sarsa.critic_rate = config.critic_rate;
  sarsa.actor_adam.alpha = config.adam_alpha;
  sarsa.gamma = config.gamma;
  sarsa.cycles_per_iteration = config.n_cycles;
  sarsa.sample_budget = config.budget;
  sarsa.max_iterations = config.max_iterations;
  sarsa.max_cycle_steps = config.max_cycle_steps;
  sarsa.record_every = config.record_every;
  sarsa.eval_every = config.eval_every;
  built.sarsa = sarsa;

  return built;
}

namespace {

// Per-replication substream labels.
constexpr std::uint64_t kTrainStream = 0;
constexpr std::uint64_t kEvalStream = 1;

ReplicationOutcome run_one_replication(const ExperimentConfig& config,
                                       const BuiltExperiment& built, int replication) {
  const Rng master(config.seed);
  const Rng rep_base = master.derive(static_cast<std::uint64_t>(replication));
  Rng train_rng = rep_base.derive(kTrainStream);

  // Evaluation consumes its own substream per call so enabling it never
  // perturbs the training trajectory.
  const Rng eval_base = rep_base.derive(kEvalStream);
  long eval_calls = 0;
  PolicyEvaluator evaluator = [&](const PolicyParams& policy) {
    Rng eval_rng = eval_base.derive(static_cast<std::uint64_t>(eval_calls++));
    return evaluate_policy(*built.env, policy, config.eval_horizon, config.eval_reps,
                           config.gamma, eval_rng);
  };
  const PolicyEvaluator* eval_ptr = config.eval_every > 0 ? &evaluator : nullptr;

  ReplicationOutcome outcome;
  // A zero budget with no iteration cap is an empty run by contract.
  if (config.budget == 0 && config.max_iterations < 0) {
    outcome.result.final_theta = built.initial_policy.theta;
    return outcome;
  }
  try {
    switch (config.algorithm) {
      case Algorithm::RmcLr:
      case Algorithm::RmcLrBiased:
        outcome.result =
            rmc_run_lr(*built.env, built.initial_policy, built.rmc, train_rng, eval_ptr);
        break;
      case Algorithm::RmcSp:
        outcome.result =
            rmc_run_sp(*built.env, built.initial_policy, built.rmc, train_rng, eval_ptr);
        break;
      case Algorithm::SarsaLambda:
        outcome.result = sarsa_lambda_run(*built.mdp, built.initial_policy, built.sarsa,
                                          train_rng, eval_ptr);
        break;
      default:
        throw ConfigError("[" + config.name + "] algorithm '" +
                          algorithm_name(config.algorithm) +
                          "' is an oracle; use the oracle subcommand");
    }
  } catch (const CycleTruncated& error) {
    outcome.truncated = true;
    outcome.error = error.what();
  }
  return outcome;
}

}  // namespace

std::vector<ReplicationOutcome> run_replications(const ExperimentConfig& config,
                                                 const BuiltExperiment& built, int workers) {
  std::vector<ReplicationOutcome> outcomes(config.replications);
  if (workers <= 1 || config.replications == 1) {
    for (int rep = 0; rep < config.replications; ++rep)
      outcomes[rep] = run_one_replication(config, built, rep);
    return outcomes;
  }
  std::atomic<int> cursor{0};
  std::vector<std::thread> pool;
  const int thread_count = std::min(workers, config.replications);
  pool.reserve(thread_count);
  for (int w = 0; w < thread_count; ++w)
    pool.emplace_back([&] {
      for (int rep = cursor.fetch_add(1); rep < config.replications;
           rep = cursor.fetch_add(1))
        outcomes[rep] = run_one_replication(config, built, rep);
    });
  for (std::thread& worker : pool) worker.join();
  return outcomes;
}

// ---------------------------------------------------------------------------
// Artifact writers
// ---------------------------------------------------------------------------

namespace {

bool is_gibbs(const PolicyParams& policy) {
  return policy.family == PolicyFamily::GibbsTabular;
}

double norm2(const Vec& values) {
  double sum = 0.0;
  for (double v : values) sum += v * v;
  return std::sqrt(sum);
}

std::string greedy_actions_summary(const PolicyParams& prototype, const Vec& theta) {
  std::string summary;
  for (int s = 0; s < prototype.n_states; ++s) {
    int best = 0;
    for (int a = 1; a < prototype.n_actions; ++a)
      if (theta[prototype.coord(s, a)] > theta[prototype.coord(s, best)]) best = a;
    if (s) summary += ';';
    summary += std::to_string(best);
  }
  return summary;
}

std::ofstream open_artifact(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write artifact '" + path.string() + "'");
  return out;
}

void write_runs_csv(const fs::path& path, const ExperimentConfig& config,
                    const BuiltExperiment& built,
                    const std::vector<ReplicationOutcome>& outcomes) {
  std::ofstream out = open_artifact(path);
  const bool gibbs = is_gibbs(built.initial_policy);
  const bool with_eval = config.eval_every > 0;

  out << "experiment,algorithm,replication,iteration,samples,J_hat,R_hat,T_hat";
  if (gibbs)
    out << ",theta_norm,greedy_actions";
  else
    for (std::size_t i = 0; i < built.initial_policy.dim(); ++i) out << ",theta_" << i;
  if (with_eval) out << ",eval_mean,eval_std";
  out << '\n';

  for (std::size_t rep = 0; rep < outcomes.size(); ++rep) {
    for (const IterationRecord& record : outcomes[rep].result.records) {
      out << config.name << ',' << algorithm_name(config.algorithm) << ',' << rep << ','
          << record.iteration << ',' << record.samples << ',' << format_g17(record.perf) << ','
          << format_g17(record.reward_mean) << ',' << format_g17(record.time_mean);
      if (gibbs) {
        out << ',' << format_g17(norm2(record.theta)) << ','
            << greedy_actions_summary(built.initial_policy, record.theta);
      } else {
        for (double t : record.theta) out << ',' << format_g17(t);
      }
      if (with_eval) {
        if (std::isnan(record.eval_mean))
          out << ",,";
        else
          out << ',' << format_g17(record.eval_mean) << ',' << format_g17(record.eval_std);
      }
      out << '\n';
    }
  }
}

void write_summary_csv(const fs::path& path, const ExperimentConfig& config,
                       const BuiltExperiment& built,
                       const std::vector<ReplicationOutcome>& outcomes) {
  std::ofstream out = open_artifact(path);
  const bool gibbs = is_gibbs(built.initial_policy);
  const bool with_eval = config.eval_every > 0;

  out << "experiment,algorithm,iteration,n,samples_mean,J_hat_mean,J_hat_std";
  if (gibbs)
    out << ",theta_norm_mean,theta_norm_std";
  else
    for (std::size_t i = 0; i < built.initial_policy.dim(); ++i)
      out << ",theta_" << i << "_mean,theta_" << i << "_std";
  if (with_eval) out << ",eval_n,eval_mean_mean,eval_mean_std";
  out << '\n';

  std::map<long, std::vector<const IterationRecord*>> by_iteration;
  for (const ReplicationOutcome& outcome : outcomes)
    for (const IterationRecord& record : outcome.result.records)
      by_iteration[record.iteration].push_back(&record);

  const auto mean_std = [](const std::vector<double>& values) {
    const double n = static_cast<double>(values.size());
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= n;
    double variance = 0.0;
    for (double v : values) variance += (v - mean) * (v - mean);
    variance = values.size() > 1 ? variance / (n - 1.0) : 0.0;
    return std::pair<double, double>(mean, std::sqrt(variance));
  };

  for (const auto& [iteration, records] : by_iteration) {
    std::vector<double> samples, perf, eval_means;
    for (const IterationRecord* record : records) {
      samples.push_back(static_cast<double>(record->samples));
      perf.push_back(record->perf);
      if (!std::isnan(record->eval_mean)) eval_means.push_back(record->eval_mean);
    }
    const auto [samples_mean, samples_std] = mean_std(samples);
    const auto [perf_mean, perf_std] = mean_std(perf);
    out << config.name << ',' << algorithm_name(config.algorithm) << ',' << iteration << ','
        << records.size() << ',' << format_g17(samples_mean) << ',' << format_g17(perf_mean)
        << ',' << format_g17(perf_std);
    if (gibbs) {
      std::vector<double> norms;
      for (const IterationRecord* record : records) norms.push_back(norm2(record->theta));
      const auto [norm_mean, norm_std] = mean_std(norms);
      out << ',' << format_g17(norm_mean) << ',' << format_g17(norm_std);
    } else {
      for (std::size_t i = 0; i < built.initial_policy.dim(); ++i) {
        std::vector<double> coords;
        for (const IterationRecord* record : records) coords.push_back(record->theta[i]);
        const auto [coord_mean, coord_std] = mean_std(coords);
        out << ',' << format_g17(coord_mean) << ',' << format_g17(coord_std);
      }
    }
    if (with_eval) {
      if (eval_means.empty()) {
        out << ",0,,";
      } else {
        const auto [eval_mean, eval_std] = mean_std(eval_means);
        out << ',' << eval_means.size() << ',' << format_g17(eval_mean) << ','
            << format_g17(eval_std);
      }
    }
    out << '\n';
  }
}

void dump_theta_sidecars(const fs::path& directory, const ExperimentConfig& config,
                         const std::vector<ReplicationOutcome>& outcomes) {
  fs::create_directories(directory);
  for (std::size_t rep = 0; rep < outcomes.size(); ++rep) {
    for (const IterationRecord& record : outcomes[rep].result.records) {
      const fs::path file =
          directory / ("rep" + std::to_string(rep) + "_iter" + std::to_string(record.iteration) +
                       ".txt");
      std::ofstream out = open_artifact(file);
      for (double t : record.theta) out << format_g17(t) << '\n';
    }
  }
}

void write_manifest(const fs::path& path, const ExperimentConfig& config,
                    const RunOverrides& overrides,
                    const std::vector<ReplicationOutcome>* outcomes,
                    const std::vector<std::string>& artifacts) {
  std::ofstream out = open_artifact(path);
  out << "experiment = " << config.name << '\n';
  out << "environment = " << env_name(config.env_family) << '\n';
  out << "algorithm = " << algorithm_name(config.algorithm) << '\n';
  out << "mode = " << (config.mode == RewardMode::Average ? "average" : "discounted") << '\n';
  out << "gamma = " << format_g17(config.gamma) << '\n';
  out << "N = " << config.n_cycles << '\n';
  out << "rho = " << format_g17(config.rho) << '\n';
  out << "max_cycle_steps = " << config.max_cycle_steps << '\n';
  out << "optimizer = " << (config.optimizer == OptimizerKind::Adam ? "adam" : "sgd") << '\n';
  out << "adam_alpha = " << format_g17(config.adam_alpha) << '\n';
  if (config.optimizer == OptimizerKind::DecayingSgd)
    out << "sgd_a = " << format_g17(config.sgd_rate) << '\n';
  if (config.algorithm == Algorithm::RmcSp) {
    out << "c = " << format_g17(config.c) << '\n';
    out << "perturb = "
        << (config.perturb == PerturbationKind::Normal ? "normal" : "rademacher") << '\n';
  }
  if (config.algorithm == Algorithm::RmcLr || config.algorithm == Algorithm::RmcLrBiased)
    out << "shared_run = " << (config.shared_run ? "true" : "false") << '\n';
  if (config.algorithm == Algorithm::SarsaLambda) {
    out << "lambda = " << format_g17(config.lambda) << '\n';
    out << "critic_rate = " << format_g17(config.critic_rate) << '\n';
  }
  switch (config.env_family) {
    case EnvFamily::Garnet:
      if (!config.garnet.load_path.empty()) {
        out << "load_mdp = " << config.garnet.load_path << '\n';
      } else {
        out << "n_states = " << config.garnet.n_states << '\n';
        out << "n_actions = " << config.garnet.n_actions << '\n';
        out << "branching = " << config.garnet.branching << '\n';
        out << "reward_prob = " << format_g17(config.garnet.reward_prob) << '\n';
        out << "reward_lo = " << format_g17(config.garnet.reward_lo) << '\n';
        out << "reward_hi = " << format_g17(config.garnet.reward_hi) << '\n';
        out << "env_seed = " << config.garnet.env_seed << '\n';
      }
      break;
    case EnvFamily::EventTrigger:
      out << "ar_coeff = " << format_g17(config.event.ar_coeff) << '\n';
      out << "comm_cost = " << format_g17(config.event.comm_cost) << '\n';
      out << "p_d = " << format_g17(config.event.erasure_prob) << '\n';
      break;
    case EnvFamily::Inventory:
      out << "a_p = " << format_g17(config.inventory.procurement_cost) << '\n';
      out << "a_h = " << format_g17(config.inventory.holding_cost) << '\n';
      out << "a_b = " << format_g17(config.inventory.backlog_cost) << '\n';
      out << "demand_rate = " << format_g17(config.inventory.demand_rate) << '\n';
      out << "clip_lo = " << format_g17(config.inventory.clip_lo) << '\n';
      out << "clip_hi = " << format_g17(config.inventory.clip_hi) << '\n';
      out << "start_stock = " << format_g17(config.inventory.start_stock) << '\n';
      break;
    case EnvFamily::Quadratic:
      out << "optimum = " << format_g17(config.quad_optimum) << '\n';
      out << "noise_std = " << format_g17(config.quad_noise) << '\n';
      break;
  }
  out << "theta0 = " << format_g17(config.theta0) << '\n';
  out << "theta_lo = " << format_g17(config.theta_lo) << '\n';
  out << "theta_hi = " << format_g17(config.theta_hi) << '\n';
  out << "budget = " << config.budget << '\n';
  out << "max_iterations = " << config.max_iterations << '\n';
  out << "replications = " << config.replications << '\n';
  out << "record_every = " << config.record_every << '\n';
  out << "eval_every = " << config.eval_every << '\n';
  if (config.eval_every > 0) {
    out << "eval_horizon = " << config.eval_horizon << '\n';
    out << "eval_reps = " << config.eval_reps << '\n';
  }

  const std::uint64_t master_seed = overrides.seed.value_or(config.seed);
  out << "master_seed = " << master_seed << '\n';
  const Rng master(master_seed);
  out << "replication_seeds =";
  for (int rep = 0; rep < config.replications; ++rep)
    out << (rep ? "," : "") << ' ' << master.derive(static_cast<std::uint64_t>(rep)).seed();
  out << '\n';

  if (outcomes) {
    out << "replication_status =";
    bool any_truncated = false;
    for (std::size_t rep = 0; rep < outcomes->size(); ++rep) {
      const bool truncated = (*outcomes)[rep].truncated;
      any_truncated = any_truncated || truncated;
      out << (rep ? "," : "") << ' ' << (truncated ? "truncated" : "ok");
    }
    out << '\n';
    out << "status = " << (any_truncated ? "partial" : "ok") << '\n';
    if (any_truncated) {
      for (std::size_t rep = 0; rep < outcomes->size(); ++rep)
        if (!(*outcomes)[rep].error.empty())
          out << "error_" << rep << " = " << (*outcomes)[rep].error << '\n';
    }
  } else {
    out << "status = ok" << '\n';
  }
  out << "artifacts =";
  for (std::size_t i = 0; i < artifacts.size(); ++i) out << (i ? "," : "") << ' ' << artifacts[i];
  out << '\n';
}

fs::path experiment_directory(const ExperimentConfig& config, const RunOverrides& overrides) {
  const fs::path directory = fs::path(resolve_out_root(config, overrides)) / config.name;
  fs::create_directories(directory);
  return directory;
}

}  // namespace

int run_experiment(const ExperimentConfig& config, const RunOverrides& overrides) {
  config.validate();
  if (!is_learning_algorithm(config.algorithm))
    throw ConfigError("[" + config.name + "] algorithm '" + algorithm_name(config.algorithm) +
                      "' is an oracle; use the oracle subcommand");

  ExperimentConfig effective = config;
  if (overrides.seed) effective.seed = *overrides.seed;
  const int workers = overrides.workers.value_or(config.workers);

  const BuiltExperiment built = build_experiment(effective);
  const std::vector<ReplicationOutcome> outcomes = run_replications(effective, built, workers);

  const fs::path directory = experiment_directory(config, overrides);
  write_runs_csv(directory / "runs.csv", effective, built, outcomes);
  write_summary_csv(directory / "summary.csv", effective, built, outcomes);
  std::vector<std::string> artifacts{"runs.csv", "summary.csv"};
  if (effective.dump_theta) {
    dump_theta_sidecars(directory / "theta", effective, outcomes);
    artifacts.push_back("theta/");
  }
  write_manifest(directory / "manifest.txt", effective, overrides, &outcomes, artifacts);

  for (const ReplicationOutcome& outcome : outcomes)
    if (outcome.truncated) return 3;
  return 0;
}

int evaluate_experiment(const ExperimentConfig& config, const RunOverrides& overrides) {
  config.validate();
  ExperimentConfig effective = config;
  if (overrides.seed) effective.seed = *overrides.seed;

  const BuiltExperiment built = build_experiment(effective);
  Rng rng = Rng(effective.seed).derive(kEvalStream);
  const EvalResult result = evaluate_policy(*built.env, built.initial_policy,
                                            effective.eval_horizon, effective.eval_reps,
                                            effective.gamma, rng);

  const fs::path directory = experiment_directory(config, overrides);
  {
    std::ofstream out = open_artifact(directory / "evaluation.csv");
    out << "experiment,theta_0,horizon,reps,mean,std\n";
    out << config.name << ',' << format_g17(effective.theta0) << ',' << effective.eval_horizon
        << ',' << effective.eval_reps << ',' << format_g17(result.mean) << ','
        << format_g17(result.stddev) << '\n';
  }
  write_manifest(directory / "manifest.txt", effective, overrides, nullptr,
                 {"evaluation.csv"});
  return 0;
}

int oracle_experiment(const ExperimentConfig& config, const RunOverrides& overrides) {
  config.validate();
  ExperimentConfig effective = config;
  if (overrides.seed) effective.seed = *overrides.seed;
  const int workers = overrides.workers.value_or(config.workers);

  const BuiltExperiment built = build_experiment(effective);
  const fs::path directory = experiment_directory(config, overrides);
  std::vector<std::string> artifacts;

  switch (effective.algorithm) {
    case Algorithm::ValueIteration: {
      const ValueSolution solution =
          value_iteration(*built.mdp, effective.gamma, effective.vi_tol);
      std::ofstream out = open_artifact(directory / "oracle.csv");
      out << "state,V,greedy_action\n";
      for (int s = 0; s < built.mdp->n_states; ++s)
        out << s << ',' << format_g17(solution.values[s]) << ',' << solution.greedy[s] << '\n';
      std::ofstream summary = open_artifact(directory / "oracle_summary.csv");
      summary << "J_star,iterations,residual\n";
      summary << format_g17(solution.optimum) << ',' << solution.iterations << ','
              << format_g17(solution.residual) << '\n';
      artifacts = {"oracle.csv", "oracle_summary.csv"};
      break;
    }
    case Algorithm::GridSearch: {
      Rng rng = Rng(effective.seed).derive(0x47524944 /* grid stream */);
      const GridSearchResult result = grid_search_threshold(
          *built.env, built.initial_policy,
          linear_grid(effective.grid_lo, effective.grid_hi, effective.grid_step),
          effective.horizon, effective.grid_reps, effective.gamma, rng, workers);
      std::ofstream out = open_artifact(directory / "grid.csv");
      out << "theta,J_mean,J_se\n";
      for (std::size_t i = 0; i < result.thetas.size(); ++i)
        out << format_g17(result.thetas[i]) << ',' << format_g17(result.means[i]) << ','
            << format_g17(result.std_errors[i]) << '\n';
      std::ofstream summary = open_artifact(directory / "grid_summary.csv");
      summary << "best_theta,best_J_mean,best_J_se\n";
      summary << format_g17(result.best_theta) << ',' << format_g17(result.means[result.best_index])
              << ',' << format_g17(result.std_errors[result.best_index]) << '\n';
      artifacts = {"grid.csv", "grid_summary.csv"};
      break;
    }
    case Algorithm::ClosedForm: {
      InventoryModel model = effective.inventory;
      model.discount = effective.gamma;
      const double theta_star = inventory_optimal_threshold(model);
      const double value_at_star = inventory_value(theta_star, model);
      const double lipschitz = inventory_value_lipschitz(model);
      const double bound = approx_bound(lipschitz, effective.rho, effective.gamma);
      std::ofstream out = open_artifact(directory / "closed_form.csv");
      out << "theta_star,value_at_theta_star,lipschitz,rho,loose_bound\n";
      out << format_g17(theta_star) << ',' << format_g17(value_at_star) << ','
          << format_g17(lipschitz) << ',' << format_g17(effective.rho) << ','
          << format_g17(bound) << '\n';
      artifacts = {"closed_form.csv"};
      break;
    }
    default:
      throw ConfigError("[" + config.name + "] algorithm '" +
                        algorithm_name(effective.algorithm) +
                        "' is not an oracle; use the run subcommand");
  }
  write_manifest(directory / "manifest.txt", effective, overrides, nullptr, artifacts);
  return 0;
}

}  // namespace rrl
