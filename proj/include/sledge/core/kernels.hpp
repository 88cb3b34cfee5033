#pragma once

#include <vector>

#include "sledge/problems/problem.hpp"

namespace sledge {

// Execution policy for batch component evaluations.  Parallel fills
// per-component slots concurrently and then reduces serially in ascending
// index order, so results are bit-identical to Serial regardless of thread
// count.
enum class Exec { Serial, Parallel };

namespace kernels {

// out.row(k) = grad f_{idx[k]}(x).  out must be presized (idx.size() x d).
void component_gradients(const FiniteSumProblem& prob, const Vec& x,
                         const std::vector<int>& idx, Mat& out, Exec exec);

// (1/|idx|) * sum_k grad f_{idx[k]}(x), reduced ascending over k.
Vec mean_component_gradient(const FiniteSumProblem& prob, const Vec& x,
                            const std::vector<int>& idx, Exec exec);

// Full gradient (1/n) * sum_i grad f_i(x).
Vec full_gradient(const FiniteSumProblem& prob, const Vec& x, Exec exec);

// Mean objective value over all components.
double mean_value(const FiniteSumProblem& prob, const Vec& x, Exec exec);

// Mean Hessian-vector product (1/n) * sum_i H_i(x) v, reduced ascending.
Vec mean_hessian_vec(const FiniteSumProblem& prob, const Vec& x, const Vec& v,
                     Exec exec);

}  // namespace kernels
}  // namespace sledge
