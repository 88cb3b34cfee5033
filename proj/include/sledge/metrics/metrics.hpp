#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "sledge/core/kernels.hpp"
#include "sledge/problems/federated.hpp"
#include "sledge/problems/problem.hpp"

namespace sledge {

// One audited row of a run.  NaN-valued optional columns serialize as empty
// cells; wall_time is kept in memory for summaries but never serialized into
// the CSV bytes, so reruns of the same seed produce identical files.
struct TraceRecord {
  long step = 0;
  double f_value = std::numeric_limits<double>::quiet_NaN();
  double grad_norm = std::numeric_limits<double>::quiet_NaN();
  double estimator_error_sq = std::numeric_limits<double>::quiet_NaN();
  long cum_grad_calls = 0;
  long cum_vectors_sent = -1;  // -1: centralized run, column left empty
  double lambda_min = std::numeric_limits<double>::quiet_NaN();
  double accuracy = std::numeric_limits<double>::quiet_NaN();
  double wall_time = std::numeric_limits<double>::quiet_NaN();
};

// Shortest round-trip decimal rendering (to_chars); deterministic across
// runs and platforms with IEEE doubles.
std::string format_double(double v);

void write_trace_csv(std::ostream& out, const std::vector<TraceRecord>& trace);
void write_trace_csv_file(const std::string& path,
                          const std::vector<TraceRecord>& trace);

// (1/n) sum_i grad f_i(x), ascending reduction.
Vec true_gradient(const FiniteSumProblem& prob, const Vec& x,
                  Exec exec = Exec::Serial);
// Mean over clients of client means, clients ascending.
Vec true_gradient(const FederatedProblem& fed, const Vec& x,
                  Exec exec = Exec::Serial);

struct EigOptions {
  // sigma defaults to metadata smoothness (or a measured bound) for the
  // shifted iteration; only consulted on the iterative path.
  std::optional<double> sigma;
  int dense_threshold = 512;
  int max_iterations = 20000;
  double tolerance = 1e-9;
};

struct EigResult {
  double lambda_min = 0.0;
  double residual = 0.0;  // ||H v - lambda v|| at the returned pair
  int iterations = 0;
  bool dense = false;
};

// Smallest eigenvalue of the mean Hessian at x.  Dense solve below
// dense_threshold; otherwise power iteration on sigma*I - H, which converges
// to the extreme shifted eigenvalue since the shift makes the spectrum
// nonnegative.  The residual field reports the achieved accuracy bound.
EigResult min_eigenvalue(const FiniteSumProblem& prob, const Vec& x,
                         const EigOptions& opts = {}, Exec exec = Exec::Serial);

struct StoppingCriteria {
  std::optional<double> grad_eps;    // ||grad f|| <= eps
  std::optional<double> hess_delta;  // lambda_min >= -delta (second order)
  std::optional<double> value_gap;   // f - f* <= gap (needs known f*)
};

struct StopVerdict {
  bool stop = false;
  bool grad_ok = false;
  bool hess_ok = false;
  bool gap_ok = false;
};

// All configured criteria must hold simultaneously; with none configured the
// verdict never fires (budget-only run).
StopVerdict check_stopping(const StoppingCriteria& crit, double grad_norm,
                           std::optional<double> lambda_min,
                           std::optional<double> value_gap);

}  // namespace sledge
