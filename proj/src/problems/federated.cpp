#include "sledge/problems/federated.hpp"

#include <Eigen/Dense>
#include <cmath>

#include "sledge/core/rng.hpp"
#include "sledge/problems/logistic.hpp"
#include "sledge/problems/quadratic.hpp"

namespace sledge {

FederatedProblem::FederatedProblem(std::vector<ProblemPtr> clients)
    : clients_(std::move(clients)) {
  if (clients_.empty())
    throw std::invalid_argument("FederatedProblem: need at least one client");
  for (const auto& c : clients_)
    if (!c) throw std::invalid_argument("FederatedProblem: null client");
  d_ = clients_.front()->dim();
  for (const auto& c : clients_)
    if (c->dim() != d_)
      throw std::invalid_argument("FederatedProblem: dimension mismatch");
}

double FederatedProblem::value(const Vec& x) const {
  double acc = 0.0;
  for (const auto& c : clients_) acc += c->value(x);
  return acc / static_cast<double>(clients_.size());
}

std::vector<LabeledDataset> partition_clients(const LabeledDataset& data, int P,
                                              double q, int per_client,
                                              std::uint64_t seed,
                                              int dedicated_per_class) {
  const int C = data.num_classes;
  if (P < 1) throw std::invalid_argument("partition_clients: P < 1");
  if (per_client < 1) throw std::invalid_argument("partition_clients: per_client < 1");
  if (q < 0.0 || q > 1.0) throw std::invalid_argument("partition_clients: q outside [0,1]");
  if (dedicated_per_class == 0) {
    if (P % C != 0)
      throw std::invalid_argument(
          "partition_clients: P must be a multiple of the class count when "
          "dedicated_per_class is unset");
    dedicated_per_class = P / C;
  }
  if (dedicated_per_class * C != P)
    throw std::invalid_argument(
        "partition_clients: dedicated_per_class * classes != P");

  // One shuffled pool per class, consumed front-to-back across clients.
  std::vector<std::vector<int>> pools(static_cast<std::size_t>(C));
  for (int s = 0; s < data.size(); ++s)
    pools[static_cast<std::size_t>(data.labels[static_cast<std::size_t>(s)])].push_back(s);
  for (int c = 0; c < C; ++c) {
    auto& pool = pools[static_cast<std::size_t>(c)];
    rng::Engine eng(seed, rng::kPartition, static_cast<std::uint64_t>(c));
    for (std::size_t i = pool.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(eng.below(i));
      std::swap(pool[i - 1], pool[j]);
    }
  }
  std::vector<std::size_t> cursor(static_cast<std::size_t>(C), 0);
  auto take = [&](int cls) {
    auto& cur = cursor[static_cast<std::size_t>(cls)];
    const auto& pool = pools[static_cast<std::size_t>(cls)];
    if (cur >= pool.size())
      throw std::invalid_argument(
          "partition_clients: class " + std::to_string(cls) +
          " pool exhausted; lower per_client or q");
    return pool[cur++];
  };

  const int own = static_cast<int>(std::lround(q * per_client));
  std::vector<LabeledDataset> shards;
  shards.reserve(static_cast<std::size_t>(P));
  for (int cl = 0; cl < P; ++cl) {
    const int home = cl / dedicated_per_class;
    std::vector<int> sample_ids;
    sample_ids.reserve(static_cast<std::size_t>(per_client));
    for (int k = 0; k < own; ++k) sample_ids.push_back(take(home));
    int cls = home;
    for (int k = own; k < per_client; ++k) {
      do {
        cls = (cls + 1) % C;
      } while (cls == home);
      sample_ids.push_back(take(cls));
    }
    LabeledDataset shard;
    shard.num_features = data.num_features;
    shard.num_classes = data.num_classes;
    for (int s : sample_ids) {
      shard.labels.push_back(data.labels[static_cast<std::size_t>(s)]);
      shard.rows.push_back(data.rows[static_cast<std::size_t>(s)]);
    }
    shards.push_back(std::move(shard));
  }
  return shards;
}

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

double spectral_norm(const Mat& m) {
  Eigen::SelfAdjointEigenSolver<Mat> es(m, Eigen::EigenvaluesOnly);
  const auto& ev = es.eigenvalues();
  return std::max(std::abs(ev(0)), std::abs(ev(ev.size() - 1)));
}

std::vector<Mat> mean_zero_offsets(rng::Engine& eng, int d, int count, double gap) {
  std::vector<Mat> off(static_cast<std::size_t>(count), Mat::Zero(d, d));
  if (gap == 0.0 || count < 2) return off;
  for (auto& m : off) m = random_symmetric(eng, d);
  Mat mean = Mat::Zero(d, d);
  for (const auto& m : off) mean += m;
  mean /= static_cast<double>(count);
  for (auto& m : off) m -= mean;
  double worst = 0.0;
  for (std::size_t i = 0; i < off.size(); ++i)
    for (std::size_t j = i + 1; j < off.size(); ++j)
      worst = std::max(worst, spectral_norm(off[i] - off[j]));
  if (worst == 0.0) throw std::logic_error("mean_zero_offsets: degenerate draw");
  for (auto& m : off) m *= gap / worst;
  return off;
}

}  // namespace

std::shared_ptr<FederatedProblem> make_federated_quadratic(
    int d, int P, int components_per_client, double mu, double L, double zeta,
    double intra, std::uint64_t seed) {
  if (d < 1 || P < 1 || components_per_client < 1)
    throw std::invalid_argument("make_federated_quadratic: bad shape");
  if (!(0.0 < mu && mu <= L))
    throw std::invalid_argument("make_federated_quadratic: need 0 < mu <= L");
  if (zeta < 0.0 || intra < 0.0)
    throw std::invalid_argument("make_federated_quadratic: negative heterogeneity");

  rng::Engine eng(seed, rng::kProblemGen, 3);
  // Global mean Hessian with spectrum [mu, L] in a random basis.
  Mat g(d, d);
  for (int r = 0; r < d; ++r)
    for (int c = 0; c < d; ++c) g(r, c) = eng.next_normal();
  Eigen::HouseholderQR<Mat> qr(g);
  Mat q = qr.householderQ();
  Mat rmat = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int c = 0; c < d; ++c)
    if (rmat(c, c) < 0.0) q.col(c) = -q.col(c);
  const Vec spectrum = Vec::LinSpaced(d, mu, L);
  const Mat mean_A = q * spectrum.asDiagonal() * q.transpose();

  const std::vector<Mat> across = mean_zero_offsets(eng, d, P, zeta);

  std::vector<ProblemPtr> clients;
  clients.reserve(static_cast<std::size_t>(P));
  Mat global_mean_check = Mat::Zero(d, d);
  Vec global_mean_c = Vec::Zero(d);
  for (int i = 0; i < P; ++i) {
    const Mat client_A = mean_A + across[static_cast<std::size_t>(i)];
    const std::vector<Mat> within =
        mean_zero_offsets(eng, d, components_per_client, intra);
    std::vector<Mat> A(static_cast<std::size_t>(components_per_client));
    std::vector<Vec> c(static_cast<std::size_t>(components_per_client));
    for (int j = 0; j < components_per_client; ++j) {
      A[static_cast<std::size_t>(j)] = client_A + within[static_cast<std::size_t>(j)];
      Vec cj(d);
      for (int k = 0; k < d; ++k) cj[k] = eng.next_normal();
      c[static_cast<std::size_t>(j)] = cj;
      global_mean_c += cj;
    }
    global_mean_check += client_A;
    clients.push_back(std::make_shared<QuadraticProblem>(std::move(A), std::move(c)));
  }
  global_mean_check /= static_cast<double>(P);
  global_mean_c /= static_cast<double>(P * components_per_client);

  auto fed = std::make_shared<FederatedProblem>(std::move(clients));
  ProblemMetadata& meta = fed->mutable_meta();
  Eigen::SelfAdjointEigenSolver<Mat> es(global_mean_check, Eigen::EigenvaluesOnly);
  meta.pl_constant = es.eigenvalues()(0);
  meta.smoothness = es.eigenvalues()(d - 1) + zeta + intra;  // upper bound
  double worst = 0.0;
  for (int i = 0; i < P; ++i)
    for (int j = i + 1; j < P; ++j)
      worst = std::max(worst, spectral_norm(across[static_cast<std::size_t>(i)] -
                                            across[static_cast<std::size_t>(j)]));
  meta.heterogeneity = worst;
  meta.hessian_lipschitz = 0.0;
  const Vec xstar = Eigen::LDLT<Mat>(global_mean_check).solve(-global_mean_c);
  meta.optimal_value = 0.5 * xstar.dot(global_mean_check * xstar) + global_mean_c.dot(xstar);
  return fed;
}

std::shared_ptr<FederatedProblem> make_federated_logistic(
    const LabeledDataset& data, int P, double q, int per_client, double lambda,
    std::uint64_t seed, int dedicated_per_class) {
  auto shards = partition_clients(data, P, q, per_client, seed, dedicated_per_class);
  std::vector<ProblemPtr> clients;
  clients.reserve(shards.size());
  for (auto& shard : shards) {
    // Force a shared label space: shard class count follows the parent.
    auto owned = std::make_shared<LabeledDataset>(std::move(shard));
    clients.push_back(make_logistic(owned, lambda, 1));
  }
  return std::make_shared<FederatedProblem>(std::move(clients));
}

}  // namespace sledge
