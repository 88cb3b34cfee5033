#include "sledge/problems/quadratic.hpp"

#include <Eigen/Dense>

namespace sledge {

namespace {

Mat random_symmetric(rng::Engine& eng, int d) {
  Mat m(d, d);
  for (int r = 0; r < d; ++r)
    for (int c = 0; c <= r; ++c) {
      const double v = eng.next_normal();
      m(r, c) = v;
      m(c, r) = v;
    }
  return m;
}

Mat random_orthogonal(rng::Engine& eng, int d) {
  Mat g(d, d);
  for (int r = 0; r < d; ++r)
    for (int c = 0; c < d; ++c) g(r, c) = eng.next_normal();
  Eigen::HouseholderQR<Mat> qr(g);
  Mat q = qr.householderQ();
  // Fix the sign convention so the factorization is unique.
  Mat rmat = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int c = 0; c < d; ++c)
    if (rmat(c, c) < 0.0) q.col(c) = -q.col(c);
  return q;
}

double spectral_norm(const Mat& m) {
  Eigen::SelfAdjointEigenSolver<Mat> es(m, Eigen::EigenvaluesOnly);
  const auto& ev = es.eigenvalues();
  return std::max(std::abs(ev(0)), std::abs(ev(ev.size() - 1)));
}

double max_pairwise_gap(const std::vector<Mat>& mats) {
  double worst = 0.0;
  for (std::size_t i = 0; i < mats.size(); ++i)
    for (std::size_t j = i + 1; j < mats.size(); ++j)
      worst = std::max(worst, spectral_norm(mats[i] - mats[j]));
  return worst;
}

// Mean-zero symmetric offsets whose maximum pairwise spectral gap is exactly
// `gap` (zero offsets when gap == 0 or n == 1).
std::vector<Mat> heterogeneity_offsets(rng::Engine& eng, int d, int n, double gap) {
  std::vector<Mat> off(static_cast<std::size_t>(n), Mat::Zero(d, d));
  if (gap == 0.0 || n < 2) return off;
  for (auto& m : off) m = random_symmetric(eng, d);
  Mat mean = Mat::Zero(d, d);
  for (const auto& m : off) mean += m;
  mean /= static_cast<double>(n);
  for (auto& m : off) m -= mean;
  const double worst = max_pairwise_gap(off);
  if (worst == 0.0) throw std::logic_error("heterogeneity_offsets: degenerate draw");
  for (auto& m : off) m *= gap / worst;
  return off;
}

}  // namespace

QuadraticProblem::QuadraticProblem(std::vector<Mat> A, std::vector<Vec> c)
    : FiniteSumProblem(static_cast<int>(A.size()),
                       A.empty() ? 1 : static_cast<int>(A.front().rows())),
      A_(std::move(A)),
      c_(std::move(c)) {
  if (A_.size() != c_.size())
    throw std::invalid_argument("QuadraticProblem: |A| != |c|");
  for (const auto& m : A_)
    if (m.rows() != d_ || m.cols() != d_)
      throw std::invalid_argument("QuadraticProblem: inconsistent matrix shape");
  for (const auto& v : c_)
    if (v.size() != d_)
      throw std::invalid_argument("QuadraticProblem: inconsistent vector shape");
  mean_A_ = Mat::Zero(d_, d_);
  mean_c_ = Vec::Zero(d_);
  for (int i = 0; i < n_; ++i) {
    mean_A_ += A_[static_cast<std::size_t>(i)];
    mean_c_ += c_[static_cast<std::size_t>(i)];
  }
  mean_A_ /= static_cast<double>(n_);
  mean_c_ /= static_cast<double>(n_);
}

double QuadraticProblem::component_value(int i, const Vec& x) const {
  const auto& A = A_[static_cast<std::size_t>(i)];
  const auto& c = c_[static_cast<std::size_t>(i)];
  return 0.5 * x.dot(A * x) + c.dot(x);
}

void QuadraticProblem::component_gradient(int i, const Vec& x, Vec& g) const {
  g.noalias() = A_[static_cast<std::size_t>(i)] * x;
  g += c_[static_cast<std::size_t>(i)];
}

void QuadraticProblem::component_hessian(int i, const Vec& x, Mat& h) const {
  (void)x;
  h = A_[static_cast<std::size_t>(i)];
}

void QuadraticProblem::component_hessian_vec(int i, const Vec& x, const Vec& v,
                                             Vec& out) const {
  (void)x;
  out.noalias() = A_[static_cast<std::size_t>(i)] * v;
}

Vec QuadraticProblem::minimizer() const {
  return Eigen::LDLT<Mat>(mean_A_).solve(-mean_c_);
}

std::shared_ptr<QuadraticProblem> make_quadratic_pl(int d, int n, double mu,
                                                    double L, double zeta,
                                                    std::uint64_t seed) {
  if (d < 1 || n < 1) throw std::invalid_argument("make_quadratic_pl: bad shape");
  if (!(0.0 < mu && mu <= L))
    throw std::invalid_argument("make_quadratic_pl: need 0 < mu <= L");
  if (zeta < 0.0) throw std::invalid_argument("make_quadratic_pl: zeta < 0");
  if (zeta > 0.0 && n < 2)
    throw std::invalid_argument("make_quadratic_pl: zeta > 0 needs n >= 2");

  rng::Engine eng(seed, rng::kProblemGen, 0);
  const Mat q = random_orthogonal(eng, d);
  const Vec spectrum = Vec::LinSpaced(d, mu, L);
  const Mat mean_A = q * spectrum.asDiagonal() * q.transpose();

  const std::vector<Mat> off = heterogeneity_offsets(eng, d, n, zeta);
  std::vector<Mat> A(static_cast<std::size_t>(n));
  std::vector<Vec> c(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    A[static_cast<std::size_t>(i)] = mean_A + off[static_cast<std::size_t>(i)];
    Vec ci(d);
    for (int k = 0; k < d; ++k) ci[k] = eng.next_normal();
    c[static_cast<std::size_t>(i)] = ci;
  }

  auto prob = std::make_shared<QuadraticProblem>(std::move(A), std::move(c));

  // Measured constants: trust the matrices, not the request.
  Eigen::SelfAdjointEigenSolver<Mat> es(prob->mean_matrix(), Eigen::EigenvaluesOnly);
  ProblemMetadata& meta = prob->mutable_meta();
  meta.pl_constant = es.eigenvalues()(0);
  double worst_l = 0.0;
  for (int i = 0; i < n; ++i) worst_l = std::max(worst_l, spectral_norm(prob->matrix(i)));
  meta.smoothness = worst_l;
  std::vector<Mat> mats;
  mats.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) mats.push_back(prob->matrix(i));
  meta.heterogeneity = (n > 1) ? max_pairwise_gap(mats) : 0.0;
  meta.hessian_lipschitz = 0.0;
  const Vec xstar = prob->minimizer();
  meta.optimal_value = 0.5 * xstar.dot(prob->mean_matrix() * xstar) +
                       prob->mean_linear().dot(xstar);
  return prob;
}

SaddleProblem::SaddleProblem(std::vector<Mat> H, double gamma)
    : FiniteSumProblem(static_cast<int>(H.size()),
                       H.empty() ? 1 : static_cast<int>(H.front().rows())),
      H_(std::move(H)),
      gamma_(gamma) {
  meta_.optimal_value = -gamma_ * gamma_ / 4.0;
  std::vector<Mat> mats(H_.begin(), H_.end());
  meta_.heterogeneity = (n_ > 1) ? max_pairwise_gap(mats) : 0.0;
}

double SaddleProblem::component_value(int i, const Vec& x) const {
  const double s = x.squaredNorm();
  return 0.5 * x.dot(H_[static_cast<std::size_t>(i)] * x) + 0.25 * s * s;
}

void SaddleProblem::component_gradient(int i, const Vec& x, Vec& g) const {
  g.noalias() = H_[static_cast<std::size_t>(i)] * x;
  g += x.squaredNorm() * x;
}

void SaddleProblem::component_hessian(int i, const Vec& x, Mat& h) const {
  h = H_[static_cast<std::size_t>(i)];
  h += x.squaredNorm() * Mat::Identity(d_, d_);
  h += 2.0 * x * x.transpose();
}

void SaddleProblem::component_hessian_vec(int i, const Vec& x, const Vec& v,
                                          Vec& out) const {
  out.noalias() = H_[static_cast<std::size_t>(i)] * v;
  out += x.squaredNorm() * v;
  out += 2.0 * x.dot(v) * x;
}

std::shared_ptr<SaddleProblem> make_saddle_ensemble(int d, int n, double gamma,
                                                    std::uint64_t seed) {
  if (d < 1 || n < 1) throw std::invalid_argument("make_saddle_ensemble: bad shape");
  if (gamma <= 0.0) throw std::invalid_argument("make_saddle_ensemble: need gamma > 0");

  Mat base = Mat::Identity(d, d);
  base(d - 1, d - 1) = -gamma;

  // Offsets cancel in +/- pairs so the mean Hessian is exactly `base`; the
  // odd trailing component (if any) carries no offset.  Their size is capped
  // well below gamma so the escape direction keeps its sign structure.
  rng::Engine eng(seed, rng::kProblemGen, 1);
  std::vector<Mat> H(static_cast<std::size_t>(n), base);
  const double scale = 0.25 * gamma;
  for (int i = 0; i + 1 < n; i += 2) {
    Mat s = random_symmetric(eng, d);
    const double nrm = spectral_norm(s);
    if (nrm > 0.0) s *= scale / nrm;
    H[static_cast<std::size_t>(i)] += s;
    H[static_cast<std::size_t>(i + 1)] -= s;
  }
  return std::make_shared<SaddleProblem>(std::move(H), gamma);
}

}  // namespace sledge
