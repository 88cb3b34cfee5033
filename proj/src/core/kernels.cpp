#include "sledge/core/kernels.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace sledge::kernels {

namespace {
// Parallelism only pays off once each slot carries real work; below this the
// team launch dominates.  Correctness never depends on the branch taken.
constexpr int kParallelCutoff = 4;
}  // namespace

void component_gradients(const FiniteSumProblem& prob, const Vec& x,
                         const std::vector<int>& idx, Mat& out, Exec exec) {
  const int m = static_cast<int>(idx.size());
  if (out.rows() != m || out.cols() != prob.dim())
    throw std::invalid_argument("component_gradients: output shape mismatch");
#ifdef _OPENMP
  if (exec == Exec::Parallel && m >= kParallelCutoff) {
#pragma omp parallel
    {
      Vec g(prob.dim());
#pragma omp for schedule(static)
      for (int k = 0; k < m; ++k) {
        prob.component_gradient(idx[k], x, g);
        out.row(k) = g;
      }
    }
    return;
  }
#else
  (void)exec;
#endif
  Vec g(prob.dim());
  for (int k = 0; k < m; ++k) {
    prob.component_gradient(idx[k], x, g);
    out.row(k) = g;
  }
}

Vec mean_component_gradient(const FiniteSumProblem& prob, const Vec& x,
                            const std::vector<int>& idx, Exec exec) {
  if (idx.empty())
    throw std::invalid_argument("mean_component_gradient: empty index set");
  Mat rows(static_cast<int>(idx.size()), prob.dim());
  component_gradients(prob, x, idx, rows, exec);
  Vec acc = Vec::Zero(prob.dim());
  for (int k = 0; k < rows.rows(); ++k) acc += rows.row(k).transpose();
  return acc / static_cast<double>(idx.size());
}

Vec full_gradient(const FiniteSumProblem& prob, const Vec& x, Exec exec) {
  std::vector<int> idx(prob.components());
  for (int i = 0; i < prob.components(); ++i) idx[i] = i;
  return mean_component_gradient(prob, x, idx, exec);
}

double mean_value(const FiniteSumProblem& prob, const Vec& x, Exec exec) {
  const int n = prob.components();
  std::vector<double> vals(static_cast<std::size_t>(n));
#ifdef _OPENMP
  if (exec == Exec::Parallel && n >= kParallelCutoff) {
#pragma omp parallel for schedule(static)
    for (int i = 0; i < n; ++i) vals[i] = prob.component_value(i, x);
  } else {
    for (int i = 0; i < n; ++i) vals[i] = prob.component_value(i, x);
  }
#else
  (void)exec;
  for (int i = 0; i < n; ++i) vals[i] = prob.component_value(i, x);
#endif
  double acc = 0.0;
  for (int i = 0; i < n; ++i) acc += vals[i];
  return acc / static_cast<double>(n);
}

Vec mean_hessian_vec(const FiniteSumProblem& prob, const Vec& x, const Vec& v,
                     Exec exec) {
  const int n = prob.components();
  const int d = prob.dim();
  Mat rows(n, d);
#ifdef _OPENMP
  if (exec == Exec::Parallel && n >= kParallelCutoff) {
#pragma omp parallel
    {
      Vec hv(d);
#pragma omp for schedule(static)
      for (int i = 0; i < n; ++i) {
        prob.component_hessian_vec(i, x, v, hv);
        rows.row(i) = hv;
      }
    }
  } else {
    Vec hv(d);
    for (int i = 0; i < n; ++i) {
      prob.component_hessian_vec(i, x, v, hv);
      rows.row(i) = hv;
    }
  }
#else
  (void)exec;
  Vec hv(d);
  for (int i = 0; i < n; ++i) {
    prob.component_hessian_vec(i, x, v, hv);
    rows.row(i) = hv;
  }
#endif
  Vec acc = Vec::Zero(d);
  for (int i = 0; i < n; ++i) acc += rows.row(i).transpose();
  return acc / static_cast<double>(n);
}

}  // namespace sledge::kernels
