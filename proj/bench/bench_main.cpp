// Timing comparison of (a) serial vs OpenMP batch gradient kernels and
// (b) the materialized-table vs incremental estimator step.  Prints a small
// table; wall times vary, the computed checksums must not.

#include <chrono>
#include <cstdio>

#include "sledge/core/kernels.hpp"
#include "sledge/estimator/estimator.hpp"
#include "sledge/problems/dataset.hpp"
#include "sledge/problems/logistic.hpp"
#include "sledge/problems/quadratic.hpp"

using namespace sledge;

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void bench_kernels(const FiniteSumProblem& prob, const char* name, int reps) {
  Vec x = Vec::Constant(prob.dim(), 0.01);
  double checksum_serial = 0.0, checksum_parallel = 0.0;

  auto t0 = std::chrono::steady_clock::now();
  for (int rep = 0; rep < reps; ++rep)
    checksum_serial += kernels::full_gradient(prob, x, Exec::Serial).sum();
  const double serial = seconds_since(t0);

  t0 = std::chrono::steady_clock::now();
  for (int rep = 0; rep < reps; ++rep)
    checksum_parallel += kernels::full_gradient(prob, x, Exec::Parallel).sum();
  const double parallel = seconds_since(t0);

  std::printf("%-28s serial %8.4fs  parallel %8.4fs  speedup %5.2fx  %s\n", name,
              serial, parallel, serial / parallel,
              checksum_serial == checksum_parallel ? "bitwise-equal" : "MISMATCH");
}

void bench_estimator(const FiniteSumProblem& prob, int b, long steps) {
  SledgeConfig cfg;
  cfg.eta = 0.01;
  cfg.b = b;
  cfg.r = 0.0;
  cfg.max_steps = steps;

  for (TableMode mode : {TableMode::Naive, TableMode::Efficient}) {
    cfg.mode = mode;
    EstimatorState st =
        init_estimator(prob, cfg, Vec::Zero(prob.dim()), 7, Exec::Serial);
    const auto t0 = std::chrono::steady_clock::now();
    for (long t = 0; t < steps; ++t) sledge_step(st, prob, cfg, 7, Exec::Serial);
    const double secs = seconds_since(t0);
    std::printf("estimator %-9s n=%d b=%d  %ld steps  %8.4fs  (%.1f us/step, "
                "row writes/step %ld)\n",
                mode == TableMode::Naive ? "naive" : "efficient", prob.components(),
                b, steps, secs, 1e6 * secs / static_cast<double>(steps),
                st.rows_written_last);
  }
}

}  // namespace

int main() {
  std::printf("== batch gradient kernels ==\n");
  {
    auto quad = make_quadratic_pl(64, 256, 0.1, 1.0, 0.3, 11);
    bench_kernels(*quad, "quadratic d=64 n=256", 200);
  }
  {
    auto data = std::make_shared<LabeledDataset>(make_blobs(26, 500, 3, 4.0, 5));
    auto logi = make_logistic(data, 0.01, 100);
    bench_kernels(*logi, "softmax n=130 groups of 100", 20);
  }

  std::printf("\n== estimator step: table modes ==\n");
  {
    auto quad = make_quadratic_pl(64, 1024, 0.1, 1.0, 0.3, 13);
    bench_estimator(*quad, 32, 300);
  }
  {
    auto data = std::make_shared<LabeledDataset>(make_blobs(26, 500, 3, 4.0, 5));
    auto logi = make_logistic(data, 0.01, 100);
    bench_estimator(*logi, 12, 300);
  }
  return 0;
}
