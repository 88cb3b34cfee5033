#pragma once

#include <cstdint>
#include <vector>

#include "sledge/core/kernels.hpp"
#include "sledge/core/rng.hpp"
#include "sledge/problems/problem.hpp"

namespace sledge {

// Naive keeps the n x d gradient table materialized and rewrites every row
// each step (reference semantics).  Efficient stores the same table
// implicitly through a running correction vector plus per-row snapshots, so
// a step writes only the 2b rows it touches while reproducing the naive
// iterates up to floating-point reassociation.
enum class TableMode { Naive, Efficient };

// SharedMinibatch seeds every table row with one b-sample gradient estimate
// (b gradient calls); FullTable evaluates each component at x0 (n calls).
enum class InitOption { SharedMinibatch, FullTable };

struct SledgeConfig {
  double eta = 0.1;    // step size
  int b = 1;           // minibatch size
  double r = 0.0;      // perturbation radius (0 disables noise)
  TableMode mode = TableMode::Efficient;
  InitOption init = InitOption::FullTable;
  long max_steps = 1000;  // step budget enforced by sledge_step
};

struct MinibatchSample {
  std::vector<int> indices;  // distinct, ascending
};

struct EstimatorState {
  TableMode mode = TableMode::Efficient;
  long t = 0;  // completed steps
  Vec x;
  Vec aggregate;  // (1/n) sum_i y_i at the current iterate
  long grad_calls = 0;
  long rows_written_last = 0;  // table-row writes during the latest step
  long rows_written_total = 0;

  // Naive representation.
  Mat table;  // n x d, row i = y_i

  // Efficient representation: y_i = w.row(i) + (v - v_snap.row(i)).
  Vec v;
  Mat w;
  Mat v_snap;

  // y_i under either representation.
  Vec table_row(int i) const;
};

// Deterministic per-step draws; step ids start at 1 (0 is initialization).
MinibatchSample draw_minibatch(std::uint64_t seed, long step, int n, int b);
Vec draw_noise(std::uint64_t seed, long step, int d, double r);

using rng::sample_ball;

EstimatorState init_estimator(const FiniteSumProblem& prob,
                              const SledgeConfig& cfg, const Vec& x0,
                              std::uint64_t seed, Exec exec = Exec::Serial);

// One step with injected randomness (noise xi and minibatch I); the budget
// guard throws std::runtime_error once cfg.max_steps steps have run.
void sledge_step(EstimatorState& state, const FiniteSumProblem& prob,
                 const SledgeConfig& cfg, const Vec& xi,
                 const MinibatchSample& batch, Exec exec = Exec::Serial);

// One step drawing noise/minibatch from the run's substreams.
void sledge_step(EstimatorState& state, const FiniteSumProblem& prob,
                 const SledgeConfig& cfg, std::uint64_t seed,
                 Exec exec = Exec::Serial);

// || aggregate - grad f(x) ||^2 at the current iterate.
double estimator_error(const EstimatorState& state, const FiniteSumProblem& prob,
                       Exec exec = Exec::Serial);

// Fully materialized table (n x d) under either mode, for audits and tests.
Mat materialize_table(const EstimatorState& state, int n);

}  // namespace sledge
