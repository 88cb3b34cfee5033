#include "sledge/problems/logistic.hpp"

#include <cmath>

namespace sledge {

namespace {

// logits[k] = <x_k, u> for sparse row u; then stable softmax in place.
// Returns log(sum exp(logits - max)) + max for the loss term.
double softmax_inplace(Vec& logits) {
  const double mx = logits.maxCoeff();
  double z = 0.0;
  for (int k = 0; k < logits.size(); ++k) {
    logits[k] = std::exp(logits[k] - mx);
    z += logits[k];
  }
  logits /= z;
  return std::log(z) + mx;
}

void compute_logits(const std::vector<std::pair<int, double>>& row, const Vec& x,
                    int classes, int features, Vec& logits) {
  logits.setZero();
  for (const auto& [f, v] : row)
    for (int k = 0; k < classes; ++k) logits[k] += x[k * features + f] * v;
}

}  // namespace

LogisticProblem::LogisticProblem(std::shared_ptr<const LabeledDataset> data,
                                 double lambda, int group_size)
    : FiniteSumProblem(
          data ? (data->size() + group_size - 1) / std::max(group_size, 1) : 0,
          data ? data->num_classes * data->num_features : 0),
      data_(std::move(data)),
      lambda_(lambda),
      group_size_(group_size) {
  if (!data_) throw std::invalid_argument("LogisticProblem: null dataset");
  if (group_size_ < 1)
    throw std::invalid_argument("LogisticProblem: group_size must be >= 1");
  if (lambda_ < 0.0) throw std::invalid_argument("LogisticProblem: lambda < 0");
  if (data_->num_classes < 2)
    throw std::invalid_argument("LogisticProblem: need >= 2 classes");
}

int LogisticProblem::group_end(int i) const {
  return std::min((i + 1) * group_size_, data_->size());
}

double LogisticProblem::component_value(int i, const Vec& x) const {
  const int C = data_->num_classes;
  const int F = data_->num_features;
  const int lo = group_begin(i), hi = group_end(i);
  Vec logits(C);
  double loss = 0.0;
  for (int s = lo; s < hi; ++s) {
    compute_logits(data_->rows[static_cast<std::size_t>(s)], x, C, F, logits);
    const double target = logits[data_->labels[static_cast<std::size_t>(s)]];
    const double lse = softmax_inplace(logits);
    loss += lse - target;
  }
  loss /= static_cast<double>(hi - lo);
  return loss + 0.5 * lambda_ * x.squaredNorm();
}

void LogisticProblem::component_gradient(int i, const Vec& x, Vec& g) const {
  const int C = data_->num_classes;
  const int F = data_->num_features;
  const int lo = group_begin(i), hi = group_end(i);
  g.setZero();
  Vec logits(C);
  for (int s = lo; s < hi; ++s) {
    const auto& row = data_->rows[static_cast<std::size_t>(s)];
    compute_logits(row, x, C, F, logits);
    softmax_inplace(logits);
    logits[data_->labels[static_cast<std::size_t>(s)]] -= 1.0;
    for (const auto& [f, v] : row)
      for (int k = 0; k < C; ++k) g[k * F + f] += logits[k] * v;
  }
  g /= static_cast<double>(hi - lo);
  g += lambda_ * x;
}

void LogisticProblem::component_hessian(int i, const Vec& x, Mat& h) const {
  const int C = data_->num_classes;
  const int F = data_->num_features;
  const int lo = group_begin(i), hi = group_end(i);
  h.setZero();
  Vec logits(C);
  /* d^2/dx^2 = E_s[ (diag(p) - p p^T) (x) u u^T ] + lambda I with the
     Kronecker blocks laid out to match the row-major weight stacking. */
  for (int s = lo; s < hi; ++s) {
    const auto& row = data_->rows[static_cast<std::size_t>(s)];
    compute_logits(row, x, C, F, logits);
    softmax_inplace(logits);
    for (const auto& [f1, v1] : row)
      for (const auto& [f2, v2] : row) {
        const double uu = v1 * v2;
        for (int k1 = 0; k1 < C; ++k1)
          for (int k2 = 0; k2 < C; ++k2) {
            const double pk = logits[k1] * ((k1 == k2 ? 1.0 : 0.0) - logits[k2]);
            h(k1 * F + f1, k2 * F + f2) += pk * uu;
          }
      }
  }
  h /= static_cast<double>(hi - lo);
  h += lambda_ * Mat::Identity(d_, d_);
}

std::optional<double> LogisticProblem::accuracy(const Vec& x) const {
  const int C = data_->num_classes;
  const int F = data_->num_features;
  Vec logits(C);
  int hits = 0;
  for (int s = 0; s < data_->size(); ++s) {
    compute_logits(data_->rows[static_cast<std::size_t>(s)], x, C, F, logits);
    Eigen::Index best = 0;
    logits.maxCoeff(&best);
    if (static_cast<int>(best) == data_->labels[static_cast<std::size_t>(s)]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(data_->size());
}

std::shared_ptr<LogisticProblem> make_logistic(
    std::shared_ptr<const LabeledDataset> data, double lambda, int group_size) {
  return std::make_shared<LogisticProblem>(std::move(data), lambda, group_size);
}

}  // namespace sledge
