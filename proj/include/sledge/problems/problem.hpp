#pragma once

#include <Eigen/Core>
#include <memory>
#include <optional>
#include <stdexcept>
#include <vector>

#include "sledge/core/rng.hpp"

namespace sledge {

// Constants of the objective that generators can certify at construction
// time.  Everything is optional: data-driven problems leave most unset.
struct ProblemMetadata {
  std::optional<double> smoothness;          // L: max component smoothness
  std::optional<double> pl_constant;         // mu: Polyak-Lojasiewicz constant
  std::optional<double> heterogeneity;       // zeta: max pairwise Hessian gap
  std::optional<double> hessian_lipschitz;   // rho
  std::optional<double> optimal_value;       // f*: exact minimum when known
};

// f(x) = (1/n) * sum_i f_i(x).  Component oracles are pure and const; every
// call with the same arguments returns the same bits, which the reproducible
// run machinery relies on.
class FiniteSumProblem {
 public:
  virtual ~FiniteSumProblem() = default;

  int components() const { return n_; }
  int dim() const { return d_; }
  const ProblemMetadata& meta() const { return meta_; }

  virtual double component_value(int i, const Vec& x) const = 0;
  virtual void component_gradient(int i, const Vec& x, Vec& g) const = 0;

  virtual bool has_hessian() const { return false; }
  virtual void component_hessian(int i, const Vec& x, Mat& h) const {
    (void)i; (void)x; (void)h;
    throw std::logic_error("component_hessian: not available for this problem");
  }
  // H_i(x) * v; default assembles the component Hessian.  Overridden where a
  // matrix-free product is cheaper.
  virtual void component_hessian_vec(int i, const Vec& x, const Vec& v, Vec& out) const {
    Mat h(d_, d_);
    component_hessian(i, x, h);
    out.noalias() = h * v;
  }

  // Fraction of correctly classified samples, when the problem wraps labeled
  // data.
  virtual std::optional<double> accuracy(const Vec& x) const {
    (void)x;
    return std::nullopt;
  }

  // Mean objective value, components accumulated in ascending index order.
  double value(const Vec& x) const {
    double acc = 0.0;
    for (int i = 0; i < n_; ++i) acc += component_value(i, x);
    return acc / static_cast<double>(n_);
  }

  Vec gradient_of(int i, const Vec& x) const {
    Vec g(d_);
    component_gradient(i, x, g);
    return g;
  }

 protected:
  FiniteSumProblem(int n, int d) : n_(n), d_(d) {
    if (n < 1) throw std::invalid_argument("FiniteSumProblem: need n >= 1");
    if (d < 1) throw std::invalid_argument("FiniteSumProblem: need d >= 1");
  }

  int n_;
  int d_;
  ProblemMetadata meta_;
};

using ProblemPtr = std::shared_ptr<const FiniteSumProblem>;

}  // namespace sledge
