#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "rrl/baselines.hpp"
#include "rrl/envs.hpp"
#include "rrl/rmc.hpp"
#include "rrl/tabular_mdp.hpp"

namespace rrl {

/// Invalid or inconsistent experiment configuration. Raised before any
/// simulation starts.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class EnvFamily { Garnet, EventTrigger, Inventory, Quadratic };

enum class Algorithm {
  RmcLr,
  RmcLrBiased,
  RmcSp,
  SarsaLambda,
  ValueIteration,
  GridSearch,
  ClosedForm,
};

struct GarnetSpec {
  int n_states = 0;
  int n_actions = 0;
  int branching = 0;
  double reward_prob = 0.0;
  double reward_lo = 0.0;
  double reward_hi = 0.0;
  std::uint64_t env_seed = 1;
  std::string load_path;  ///< read the instance from this file instead of generating
  std::string save_path;  ///< write the generated instance here
};

/// Declarative description of one experiment: environment, algorithm,
/// hyperparameters, seeds, and budgets. Parsed from flat key=value sections;
/// see parse_config_text for the accepted keys.
struct ExperimentConfig {
  std::string name = "experiment";
  EnvFamily env_family = EnvFamily::Quadratic;
  Algorithm algorithm = Algorithm::RmcSp;

  GarnetSpec garnet;
  EventTriggerModel event;
  InventoryModel inventory;
  double quad_optimum = 5.0;
  double quad_noise = 0.0;

  std::optional<PolicyFamily> policy_family;  ///< default chosen by environment
  double theta0 = 0.0;                        ///< scalar families; Gibbs starts at zero
  double theta_lo = -30.0;
  double theta_hi = 30.0;
  double temperature = 1.0;

  double gamma = 0.9;
  RewardMode mode = RewardMode::Discounted;
  int n_cycles = 5;
  double c = 0.0;
  PerturbationKind perturb = PerturbationKind::Normal;
  bool shared_run = false;
  OptimizerKind optimizer = OptimizerKind::Adam;
  double adam_alpha = 0.0;
  double sgd_rate = 0.0;
  double rho = 0.0;
  int max_cycle_steps = 100000;

  std::uint64_t seed = 1;
  int replications = 1;
  std::uint64_t budget = 0;
  long max_iterations = -1;
  int record_every = 1;
  int eval_every = 0;
  int eval_horizon = 250;
  int eval_reps = 100;

  double lambda = 0.0;       ///< sarsa_lambda: trace decay
  double critic_rate = 0.1;  ///< sarsa_lambda: critic learning rate

  double vi_tol = 1e-10;
  double grid_lo = 0.0;
  double grid_hi = 0.0;
  double grid_step = 0.0;
  int grid_reps = 0;
  int horizon = 0;

  std::string out_dir;
  bool dump_theta = false;
  int workers = 1;

  /// Cross-field consistency checks; throws ConfigError with a description.
  void validate() const;
};

/// Parses the flat key=value config format: one `[name]` section per
/// experiment, `key = value` lines, `#` comments. Unknown keys are errors.
std::vector<ExperimentConfig> parse_config_text(const std::string& text);
std::vector<ExperimentConfig> parse_config_file(const std::string& path);

/// Command-line overrides applied on top of every section.
struct RunOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::optional<std::string> out_dir;
};

/// Output root: override > config out_dir > $RENEWAL_RL_OUT > ./out.
std::string resolve_out_root(const ExperimentConfig& config, const RunOverrides& overrides);

/// One learning run per replication, on seeds derived from the master seed.
struct ReplicationOutcome {
  RunResult result;
  bool truncated = false;
  std::string error;
};

/// The environment and initial policy an experiment describes.
struct BuiltExperiment {
  std::shared_ptr<const Environment> env;
  std::optional<TabularMDP> mdp;  ///< populated for tabular environments
  PolicyParams initial_policy;
  RmcConfig rmc;      ///< populated for rmc_* algorithms
  SarsaConfig sarsa;  ///< populated for sarsa_lambda
};

BuiltExperiment build_experiment(const ExperimentConfig& config);

/// Runs all replications (in parallel up to `workers`; results are
/// independent of the worker count) and returns them in replication order.
std::vector<ReplicationOutcome> run_replications(const ExperimentConfig& config,
                                                 const BuiltExperiment& built, int workers);

/// Learning-run driver behind `run`: executes the replications and writes
/// runs.csv, summary.csv, and manifest.txt under <out root>/<name>/.
/// Returns 0 on success, 3 when any replication failed on cycle truncation
/// (partial artifacts are still written and flagged in the manifest).
int run_experiment(const ExperimentConfig& config, const RunOverrides& overrides = {});

/// Driver behind `evaluate`: Monte Carlo evaluation of the configured policy,
/// written to evaluation.csv. Returns 0.
int evaluate_experiment(const ExperimentConfig& config, const RunOverrides& overrides = {});

/// Driver behind `oracle`: value iteration, grid search, or closed forms,
/// written to oracle.csv / grid.csv / closed_form.csv. Returns 0.
int oracle_experiment(const ExperimentConfig& config, const RunOverrides& overrides = {});

/// 17-significant-digit decimal rendering used for all emitted numbers;
/// round-trips doubles exactly.
std::string format_g17(double value);

}  // namespace rrl
