#pragma once

#include <cstdint>

#include "sledge/estimator/estimator.hpp"
#include "sledge/optim/optim.hpp"
#include "sledge/problems/federated.hpp"

namespace sledge {

struct FledgeConfig {
  double eta = 0.1;  // local step size
  int p = 1;         // refresh cohort size per round
  int b = 1;         // local minibatch size
  int K = 1;         // local steps per round
  double r = 0.0;    // local perturbation radius
  TableMode mode = TableMode::Efficient;
  InitOption init = InitOption::FullTable;
  long max_rounds = 100;
};

// Exact transfer accounting.  A "vector" is one d-dimensional payload; a
// broadcast to k recipients costs k vectors.  Scalars (client ids, round
// headers) are tallied separately and treated as free by every budget.
struct CommLedger {
  long rounds = 0;
  long grad_calls = 0;    // component-gradient evaluations across all clients
  long vectors_sent = 0;  // d-dimensional payloads
  long scalars_sent = 0;
};

// Server-side state.  The per-client summaries y_i live either materialized
// (Naive) or implicitly as y_i = w.row(i) + (cum_delta - d_snap.row(i))
// (Efficient), mirroring the centralized estimator layout.
struct FederatedState {
  TableMode mode = TableMode::Efficient;
  long t = 0;  // completed rounds
  Vec x;
  Vec aggregate;  // (1/P) sum_i y_i
  CommLedger ledger;
  long rows_written_last = 0;
  long rows_written_total = 0;

  Mat table;  // naive: P x d

  Vec cum_delta;  // efficient
  Mat w;
  Mat d_snap;

  Vec client_y(int i) const;
};

FederatedState init_fledge(const FederatedProblem& fed, const FledgeConfig& cfg,
                           const Vec& x0, std::uint64_t seed,
                           Exec exec = Exec::Serial);

// One communication round: one sampled client runs K differenced local
// steps from the server aggregate, then a cohort of p clients refreshes its
// summaries at (x^t, x^{t-1}) and the server folds them in with O(p) work.
void fledge_round(FederatedState& state, const FederatedProblem& fed,
                  const FledgeConfig& cfg, std::uint64_t seed,
                  Exec exec = Exec::Serial);

// || maintained aggregate - mean of the P client summaries ||, the
// summaries being reconstructed row by row.  Detects drift of the
// incremental server update.
double audit_server_aggregate(const FederatedState& state,
                              const FederatedProblem& fed);

// Rounds until stopping fires on the audited global gradient or the budget
// runs out.  opts.max_steps caps rounds; trace steps are round indices.
RunResult run_fledge(const FederatedProblem& fed, const FledgeConfig& cfg,
                     const RunOptions& opts);

}  // namespace sledge
