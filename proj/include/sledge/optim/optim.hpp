#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sledge/estimator/estimator.hpp"
#include "sledge/metrics/metrics.hpp"
#include "sledge/problems/problem.hpp"

namespace sledge {

enum class RunStatus { BudgetExhausted, Converged, Diverged };

std::string to_string(RunStatus s);

struct RunOptions {
  std::uint64_t seed = 1;
  Vec x0;                  // empty: all zeros
  long max_steps = 1000;
  int audit_interval = 1;  // trace + stopping cadence, in steps
  StoppingCriteria stop;
  bool track_lambda_min = false;  // adds a dense/iterative eig per audit
  Exec exec = Exec::Serial;
};

struct RunResult {
  RunStatus status = RunStatus::BudgetExhausted;
  long steps = 0;
  long grad_calls = 0;
  long vectors_sent = -1;  // centralized algorithms never send
  Vec x_final;
  double final_f = 0.0;
  double final_grad_norm = 0.0;
  std::vector<TraceRecord> trace;
};

struct SgdConfig {
  double eta = 0.1;
  int b = 1;
};

struct SagaConfig {
  double eta = 0.1;
  int b = 1;
};

struct SarahConfig {
  double eta = 0.1;
  int b = 1;
  long m = 10;     // epoch length: full-gradient anchor every m steps
  double r = 0.0;  // perturbation radius (0: plain variant)
};

RunResult run_sledge(const FiniteSumProblem& prob, const SledgeConfig& cfg,
                     const RunOptions& opts);
RunResult run_sgd(const FiniteSumProblem& prob, const SgdConfig& cfg,
                  const RunOptions& opts);
RunResult run_saga(const FiniteSumProblem& prob, const SagaConfig& cfg,
                   const RunOptions& opts);
RunResult run_sarah(const FiniteSumProblem& prob, const SarahConfig& cfg,
                    const RunOptions& opts);

// Head-to-head estimator quality: each algorithm runs its own trajectory
// from the same seed, recording || v - grad f(x) ||^2 for the direction v it
// is about to step with.  Step indices run 0..steps-1.
struct DiscrepancyConfig {
  double eta = 0.01;
  int b = 1;
  long m = 10;  // epoch length of the anchored baseline
  long steps = 500;
  double r = 0.0;
  std::vector<std::uint64_t> seeds = {1};
  InitOption init = InitOption::FullTable;
  Vec x0;  // empty: all zeros
  Exec exec = Exec::Serial;
};

struct DiscrepancyReport {
  std::vector<std::string> algorithms;                   // sledge, saga, sarah
  std::vector<std::vector<std::vector<double>>> series;  // [algo][seed][step]
  std::vector<double> pooled_median;                     // [algo], all seeds+steps

  double median_of(const std::string& algorithm) const;
};

DiscrepancyReport compare_estimator_discrepancy(const FiniteSumProblem& prob,
                                                const DiscrepancyConfig& cfg);

double median(std::vector<double> values);

}  // namespace sledge
