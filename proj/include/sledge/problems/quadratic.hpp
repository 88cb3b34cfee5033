#pragma once

#include "sledge/problems/problem.hpp"

namespace sledge {

// f_i(x) = 1/2 x^T A_i x + c_i^T x with symmetric A_i.  The mean Hessian is
// positive definite for the generated family, so the average objective is a
// strongly convex quadratic with a closed-form optimum.
class QuadraticProblem final : public FiniteSumProblem {
 public:
  QuadraticProblem(std::vector<Mat> A, std::vector<Vec> c);

  double component_value(int i, const Vec& x) const override;
  void component_gradient(int i, const Vec& x, Vec& g) const override;
  bool has_hessian() const override { return true; }
  void component_hessian(int i, const Vec& x, Mat& h) const override;
  void component_hessian_vec(int i, const Vec& x, const Vec& v, Vec& out) const override;

  const Mat& matrix(int i) const { return A_[static_cast<std::size_t>(i)]; }
  const Vec& linear(int i) const { return c_[static_cast<std::size_t>(i)]; }
  const Mat& mean_matrix() const { return mean_A_; }
  const Vec& mean_linear() const { return mean_c_; }
  Vec minimizer() const;

  ProblemMetadata& mutable_meta() { return meta_; }

 private:
  std::vector<Mat> A_;
  std::vector<Vec> c_;
  Mat mean_A_;
  Vec mean_c_;
};

// Random family whose mean Hessian has spectrum spread over [mu, L] and whose
// component Hessians differ pairwise by at most `zeta` in spectral norm
// (attained).  Metadata is measured from the instantiated matrices, not
// copied from the request.  Linear terms are heterogeneous even at zeta = 0.
std::shared_ptr<QuadraticProblem> make_quadratic_pl(int d, int n, double mu,
                                                    double L, double zeta,
                                                    std::uint64_t seed);

// f_i(x) = 1/2 x^T H_i x + 1/4 ||x||^4 where the mean of H_i is
// diag(1,..,1,-gamma): the origin is a strict saddle with escape value
// -gamma^2/4 at +/- sqrt(gamma) e_d.  Every component gradient vanishes at
// the origin, so only injected perturbation can leave it.
class SaddleProblem final : public FiniteSumProblem {
 public:
  SaddleProblem(std::vector<Mat> H, double gamma);

  double component_value(int i, const Vec& x) const override;
  void component_gradient(int i, const Vec& x, Vec& g) const override;
  bool has_hessian() const override { return true; }
  void component_hessian(int i, const Vec& x, Mat& h) const override;
  void component_hessian_vec(int i, const Vec& x, const Vec& v, Vec& out) const override;

  double gamma() const { return gamma_; }

 private:
  std::vector<Mat> H_;
  double gamma_;
};

std::shared_ptr<SaddleProblem> make_saddle_ensemble(int d, int n, double gamma,
                                                    std::uint64_t seed);

}  // namespace sledge
