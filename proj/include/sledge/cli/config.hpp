#pragma once

#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "sledge/fledge/fledge.hpp"
#include "sledge/optim/optim.hpp"
#include "sledge/problems/federated.hpp"
#include "sledge/problems/problem.hpp"

namespace sledge::cli {

using json = nlohmann::json;

// Config/schema problem: the what() names the offending field path, e.g.
// "algorithms[2].eta: expected a positive number".
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
  ConfigError(const std::string& path, const std::string& msg)
      : std::runtime_error(path + ": " + msg) {}
};

// Exactly one of the two pointers is set.
struct BuiltProblem {
  ProblemPtr central;
  FederatedPtr federated;
};

BuiltProblem build_problem(const json& spec, const std::string& path);

// One algorithm entry.  Numeric fields hold one value for `run` and may
// hold value lists for `sweep`; parse enforces the singleton rule per
// command.
struct AlgorithmSpec {
  std::string tag;   // output label, unique per config
  std::string kind;  // sledge | sgd | saga | sarah | fledge
  std::vector<double> eta;
  std::vector<int> b;
  std::vector<long> m;  // sarah epoch length
  std::vector<int> p;   // fledge cohort
  std::vector<int> K;   // fledge local steps
  std::vector<double> r;
  TableMode mode = TableMode::Efficient;
  InitOption init = InitOption::FullTable;

  // Cartesian size of the value lists.
  std::size_t grid_size() const;
};

// Fully resolved single-value setting produced by grid expansion.
struct AlgorithmSetting {
  std::string tag;
  std::string kind;
  double eta = 0.0;
  int b = 1;
  long m = 1;
  int p = 1;
  int K = 1;
  double r = 0.0;
  TableMode mode = TableMode::Efficient;
  InitOption init = InitOption::FullTable;

  json params() const;  // scalar hyperparameters for summaries
};

std::vector<AlgorithmSetting> expand_grid(const AlgorithmSpec& spec);

struct DiscrepancySpec {
  double eta = 0.01;
  int b = 1;
  long m = 10;
  long steps = 500;
  double r = 0.0;
};

struct ExperimentConfig {
  json problem;
  std::vector<AlgorithmSpec> algorithms;
  std::optional<DiscrepancySpec> discrepancy;
  std::vector<std::uint64_t> seeds;
  long max_steps = 1000;
  int audit_interval = 1;
  StoppingCriteria stop;
  bool track_lambda_min = false;
  std::string output_dir = "out";
  std::string sweep_objective = "grad_calls_to_eps";

  json resolved() const;  // normalized form for validate/summary output
};

enum class Command { Run, Sweep, Discrepancy, Validate };

// Parses and validates; throws ConfigError naming the field path on any
// unknown key, type mismatch, or cross-field violation.
ExperimentConfig parse_config(const json& root, Command cmd);

// Per-run seeds are shifted by the integer in SLEDGE_OPT_SEED_OFFSET (when
// set); problem-generation seeds stay fixed.
std::uint64_t seed_offset_from_env();

}  // namespace sledge::cli
