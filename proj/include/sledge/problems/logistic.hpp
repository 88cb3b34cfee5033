#pragma once

#include <memory>

#include "sledge/problems/dataset.hpp"
#include "sledge/problems/problem.hpp"

namespace sledge {

// Multiclass softmax cross-entropy with L2 regularization.  Component i is
// the mean loss over one contiguous block of `group_size` samples plus the
// regularizer, so the finite-sum mean equals the dataset mean loss plus
// (lambda/2)||x||^2.  The parameter vector stacks the C x F weight matrix
// row-major: x[k*F + f] is class k, feature f.
class LogisticProblem final : public FiniteSumProblem {
 public:
  LogisticProblem(std::shared_ptr<const LabeledDataset> data, double lambda,
                  int group_size);

  double component_value(int i, const Vec& x) const override;
  void component_gradient(int i, const Vec& x, Vec& g) const override;
  bool has_hessian() const override { return true; }
  void component_hessian(int i, const Vec& x, Mat& h) const override;
  std::optional<double> accuracy(const Vec& x) const override;

  double lambda() const { return lambda_; }
  int group_size() const { return group_size_; }

 private:
  int group_begin(int i) const { return i * group_size_; }
  int group_end(int i) const;

  std::shared_ptr<const LabeledDataset> data_;
  double lambda_;
  int group_size_;
};

// n = ceil(samples / group_size) components over consecutive sample blocks.
std::shared_ptr<LogisticProblem> make_logistic(
    std::shared_ptr<const LabeledDataset> data, double lambda, int group_size);

}  // namespace sledge
