#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>

#include "sledge/problems/dataset.hpp"
#include "sledge/problems/federated.hpp"
#include "sledge/problems/logistic.hpp"
#include "sledge/problems/quadratic.hpp"

using namespace sledge;

namespace {

Vec random_vec(rng::Engine& eng, int d) {
  Vec x(d);
  for (int k = 0; k < d; ++k) x[k] = eng.next_normal();
  return x;
}

// Central finite differences against the analytic gradient.
void check_gradient_fd(const FiniteSumProblem& prob, int i, const Vec& x,
                       double h, double tol) {
  Vec g(prob.dim());
  prob.component_gradient(i, x, g);
  for (int k = 0; k < prob.dim(); ++k) {
    Vec xp = x, xm = x;
    xp[k] += h;
    xm[k] -= h;
    const double fd =
        (prob.component_value(i, xp) - prob.component_value(i, xm)) / (2 * h);
    CHECK(g[k] == doctest::Approx(fd).epsilon(tol).scale(1.0));
  }
}

}  // namespace

TEST_CASE("quadratic component oracles match hand values") {
  // f_0 = 1/2 x^T I x + [1,0]^T x, f_1 = 1/2 x^T diag(2,4) x - [0,1]^T x
  std::vector<Mat> A(2, Mat::Identity(2, 2));
  A[1] = Mat::Zero(2, 2);
  A[1](0, 0) = 2.0;
  A[1](1, 1) = 4.0;
  std::vector<Vec> c(2, Vec::Zero(2));
  c[0][0] = 1.0;
  c[1][1] = -1.0;
  QuadraticProblem prob(A, c);

  Vec x(2);
  x << 3.0, -2.0;
  CHECK(prob.component_value(0, x) == doctest::Approx(0.5 * 13 + 3.0));
  CHECK(prob.component_value(1, x) == doctest::Approx(0.5 * (2 * 9 + 4 * 4) + 2.0));
  Vec g(2);
  prob.component_gradient(0, x, g);
  CHECK(g[0] == doctest::Approx(4.0));
  CHECK(g[1] == doctest::Approx(-2.0));
  prob.component_gradient(1, x, g);
  CHECK(g[0] == doctest::Approx(6.0));
  CHECK(g[1] == doctest::Approx(-9.0));

  // Mean value accumulates components in ascending order.
  CHECK(prob.value(x) ==
        doctest::Approx(0.5 * (prob.component_value(0, x) + prob.component_value(1, x))));
}

TEST_CASE("generated quadratic family: measured constants and closed forms") {
  const int d = 20, n = 64;
  const double mu = 0.1, L = 1.0, zeta = 0.2;
  auto prob = make_quadratic_pl(d, n, mu, L, zeta, 17);
  REQUIRE(prob->components() == n);
  REQUIRE(prob->dim() == d);

  // Mean Hessian spectrum pins mu and L; offsets cancel exactly.
  Eigen::SelfAdjointEigenSolver<Mat> es(prob->mean_matrix(), Eigen::EigenvaluesOnly);
  CHECK(es.eigenvalues()(0) == doctest::Approx(mu).epsilon(1e-9));
  CHECK(es.eigenvalues()(d - 1) == doctest::Approx(L).epsilon(1e-9));
  CHECK(*prob->meta().pl_constant == doctest::Approx(mu).epsilon(1e-9));

  // Requested pairwise heterogeneity is attained (it is a max, normalized).
  CHECK(*prob->meta().heterogeneity == doctest::Approx(zeta).epsilon(1e-9));

  // f* from metadata equals the value at the solved minimizer, and the
  // gradient vanishes there.
  const Vec xstar = prob->minimizer();
  const double fstar = prob->value(xstar);
  CHECK(*prob->meta().optimal_value == doctest::Approx(fstar).epsilon(1e-9));
  Vec mean_grad = prob->mean_matrix() * xstar + prob->mean_linear();
  CHECK(mean_grad.norm() < 1e-10);

  // Gradient-of-mean equals mean-of-gradients at random points.
  rng::Engine eng(99);
  for (int trial = 0; trial < 100; ++trial) {
    const Vec x = random_vec(eng, d);
    Vec acc = Vec::Zero(d);
    Vec g(d);
    for (int i = 0; i < n; ++i) {
      prob->component_gradient(i, x, g);
      acc += g;
    }
    acc /= n;
    const Vec direct = prob->mean_matrix() * x + prob->mean_linear();
    CHECK((acc - direct).norm() < 1e-10 * std::max(1.0, direct.norm()));
  }

  // Gradient-domination (PL) inequality with the measured constant.
  for (int trial = 0; trial < 1000; ++trial) {
    const Vec x = random_vec(eng, d);
    const Vec g = prob->mean_matrix() * x + prob->mean_linear();
    const double gap = prob->value(x) - *prob->meta().optimal_value;
    CHECK(0.5 * g.squaredNorm() + 1e-9 >= *prob->meta().pl_constant * gap);
  }

  check_gradient_fd(*prob, 3, random_vec(eng, d), 1e-5, 1e-6);

  SUBCASE("zeta = 0 collapses all component Hessians") {
    auto homo = make_quadratic_pl(6, 10, 0.5, 2.0, 0.0, 5);
    for (int i = 1; i < homo->components(); ++i)
      CHECK((homo->matrix(i) - homo->matrix(0)).norm() == 0.0);
    CHECK(*homo->meta().heterogeneity == 0.0);
    // Linear terms still differ: components disagree even with equal Hessians.
    CHECK((homo->linear(0) - homo->linear(1)).norm() > 1e-3);
  }

  SUBCASE("argument validation") {
    CHECK_THROWS_AS(make_quadratic_pl(0, 4, 0.1, 1.0, 0.0, 1), std::invalid_argument);
    CHECK_THROWS_AS(make_quadratic_pl(4, 4, 0.0, 1.0, 0.0, 1), std::invalid_argument);
    CHECK_THROWS_AS(make_quadratic_pl(4, 4, 2.0, 1.0, 0.0, 1), std::invalid_argument);
    CHECK_THROWS_AS(make_quadratic_pl(4, 1, 0.1, 1.0, 0.5, 1), std::invalid_argument);
  }
}

TEST_CASE("saddle ensemble: strict saddle at origin with known escape value") {
  const int d = 10, n = 32;
  const double gamma = 0.5;
  auto prob = make_saddle_ensemble(d, n, gamma, 23);

  // Every component gradient vanishes at the origin.
  Vec zero = Vec::Zero(d), g(d);
  for (int i = 0; i < n; ++i) {
    prob->component_gradient(i, zero, g);
    CHECK(g.norm() == 0.0);
  }
  CHECK(prob->value(zero) == 0.0);

  // Mean Hessian at the origin: offsets cancel pairwise, diag(1,..,1,-gamma).
  Mat mean = Mat::Zero(d, d), h(d, d);
  for (int i = 0; i < n; ++i) {
    prob->component_hessian(i, zero, h);
    mean += h;
  }
  mean /= n;
  Mat expect = Mat::Identity(d, d);
  expect(d - 1, d - 1) = -gamma;
  CHECK((mean - expect).norm() < 1e-12);

  // Escape profile along the unstable axis: minimum -gamma^2/4 at sqrt(gamma).
  Vec e = Vec::Zero(d);
  e[d - 1] = std::sqrt(gamma);
  CHECK(prob->value(e) == doctest::Approx(-gamma * gamma / 4).epsilon(1e-12));
  CHECK(*prob->meta().optimal_value == doctest::Approx(-gamma * gamma / 4));
  e[d - 1] = 0.9 * std::sqrt(gamma);
  CHECK(prob->value(e) > -gamma * gamma / 4);

  rng::Engine eng(41);
  check_gradient_fd(*prob, 1, 0.3 * random_vec(eng, d), 1e-5, 1e-5);

  // Hessian-vector product agrees with the assembled Hessian.
  const Vec x = 0.5 * random_vec(eng, d);
  const Vec v = random_vec(eng, d);
  prob->component_hessian(2, x, h);
  Vec hv(d);
  prob->component_hessian_vec(2, x, v, hv);
  CHECK((hv - h * v).norm() < 1e-12 * std::max(1.0, hv.norm()));
}

TEST_CASE("blobs generator shapes and determinism") {
  const auto data = make_blobs(26, 50, 3, 4.0, 9);
  CHECK(data.size() == 26 * 50);
  CHECK(data.num_classes == 26);
  CHECK(data.num_features == 3);
  // Sorted by class: block c holds label c.
  for (int s = 0; s < data.size(); ++s) CHECK(data.labels[s] == s / 50);

  const auto again = make_blobs(26, 50, 3, 4.0, 9);
  for (int s = 0; s < data.size(); ++s) {
    CHECK(again.labels[s] == data.labels[s]);
    for (std::size_t k = 0; k < data.rows[s].size(); ++k)
      CHECK(again.rows[s][k].second == data.rows[s][k].second);
  }
  const auto other = make_blobs(26, 50, 3, 4.0, 10);
  CHECK(other.rows[0][0].second != data.rows[0][0].second);
}

TEST_CASE("softmax objective: known values and consistency") {
  auto data = std::make_shared<LabeledDataset>(make_blobs(4, 30, 5, 3.0, 3));
  const double lambda = 0.01;
  auto prob = make_logistic(data, lambda, 10);
  REQUIRE(prob->components() == 12);
  REQUIRE(prob->dim() == 4 * 5);

  // At zero weights every class is equally likely: loss = ln(C), plus no reg.
  const Vec zero = Vec::Zero(prob->dim());
  CHECK(prob->value(zero) == doctest::Approx(std::log(4.0)).epsilon(1e-12));

  rng::Engine eng(77);
  const Vec x = 0.2 * random_vec(eng, prob->dim());
  check_gradient_fd(*prob, 5, x, 1e-6, 1e-5);

  // Component mean equals the direct dataset mean plus regularizer.
  double direct = 0.0;
  for (int i = 0; i < prob->components(); ++i)
    direct += prob->component_value(i, x);
  direct /= prob->components();
  CHECK(prob->value(x) == doctest::Approx(direct).epsilon(1e-14));

  // Hessian against gradient finite differences along random directions.
  Mat h(prob->dim(), prob->dim());
  prob->component_hessian(2, x, h);
  CHECK((h - h.transpose()).norm() < 1e-12);
  for (int trial = 0; trial < 3; ++trial) {
    const Vec v = random_vec(eng, prob->dim());
    const double step = 1e-6;
    Vec gp(prob->dim()), gm(prob->dim());
    prob->component_gradient(2, x + step * v, gp);
    prob->component_gradient(2, x - step * v, gm);
    const Vec fd = (gp - gm) / (2 * step);
    CHECK((h * v - fd).norm() < 1e-5 * std::max(1.0, fd.norm()));
  }

  // Accuracy is a valid fraction and improves from chance after a step in
  // the negative gradient direction from zero.
  const double acc0 = *prob->accuracy(zero);
  CHECK(acc0 >= 0.0);
  CHECK(acc0 <= 1.0);
  Vec g0 = Vec::Zero(prob->dim()), gi(prob->dim());
  for (int i = 0; i < prob->components(); ++i) {
    prob->component_gradient(i, zero, gi);
    g0 += gi;
  }
  g0 /= prob->components();
  CHECK(*prob->accuracy(zero - 5.0 * g0) > acc0);
}

TEST_CASE("libsvm io: parsing, remapping, round-trip, and error lines") {
  const std::string path = "libsvm_test_tmp.txt";
  {
    std::ofstream out(path);
    out << "3 1:0.5 4:-2.0\n";
    out << "-1 2:1.25\n";
    out << "\n";
    out << "3 1:1 2:2 3:3 # trailing comment\n";
  }
  const auto data = load_libsvm(path);
  REQUIRE(data.size() == 3);
  CHECK(data.num_features == 4);
  CHECK(data.num_classes == 2);
  // Labels remap by sorted value: -1 -> 0, 3 -> 1.
  CHECK(data.labels == std::vector<int>{1, 0, 1});
  REQUIRE(data.rows[0].size() == 2);
  CHECK(data.rows[0][0].first == 0);
  CHECK(data.rows[0][0].second == doctest::Approx(0.5));
  CHECK(data.rows[0][1].first == 3);
  CHECK(data.rows[0][1].second == doctest::Approx(-2.0));

  // Round trip preserves structure (labels already contiguous ids).
  const std::string path2 = "libsvm_test_tmp2.txt";
  save_libsvm(data, path2);
  const auto back = load_libsvm(path2);
  REQUIRE(back.size() == data.size());
  CHECK(back.num_features == data.num_features);
  for (int s = 0; s < data.size(); ++s) {
    CHECK(back.labels[s] == data.labels[s]);
    REQUIRE(back.rows[s].size() == data.rows[s].size());
    for (std::size_t k = 0; k < data.rows[s].size(); ++k) {
      CHECK(back.rows[s][k].first == data.rows[s][k].first);
      CHECK(back.rows[s][k].second == data.rows[s][k].second);
    }
  }

  auto expect_error_with = [&](const char* body, const char* needle) {
    std::ofstream out(path);
    out << body;
    out.close();
    try {
      load_libsvm(path);
      FAIL_CHECK("expected parse failure for: " << body);
    } catch (const std::runtime_error& e) {
      CHECK(std::string(e.what()).find(needle) != std::string::npos);
    }
  };
  expect_error_with("1 nonsense\n", ":1:");
  expect_error_with("1 1:0.5\nx2 0.5\n", ":2:");
  expect_error_with("1 0:0.5\n", "1-based");
  expect_error_with("1 2:0.5 2:0.5\n", "increasing");

  std::remove(path.c_str());
  std::remove(path2.c_str());
  CHECK_THROWS_AS(load_libsvm("does_not_exist_anywhere.txt"), std::runtime_error);
}

TEST_CASE("client partitioning: sizes, dominance, determinism") {
  const auto data = make_blobs(4, 200, 3, 3.0, 21);
  const int P = 8, per_client = 60;
  const double q = 0.75;
  const auto shards = partition_clients(data, P, q, per_client, 31);
  REQUIRE(static_cast<int>(shards.size()) == P);

  const int own = static_cast<int>(std::lround(q * per_client));  // 45
  std::set<int> seen;
  for (int cl = 0; cl < P; ++cl) {
    const auto& shard = shards[cl];
    REQUIRE(shard.size() == per_client);
    CHECK(shard.num_classes == 4);
    const int home = cl / 2;  // 8 clients over 4 classes
    int home_count = 0;
    for (int lab : shard.labels) home_count += lab == home;
    CHECK(home_count == own);
    for (const auto& row : shard.rows)
      for (const auto& [f, v] : row) {
        (void)f;
        // Value-based fingerprint to detect duplicate assignment.
        seen.insert(static_cast<int>(v * 1e6));
      }
  }

  // Deterministic under the same seed, different under another.
  const auto again = partition_clients(data, P, q, per_client, 31);
  for (int cl = 0; cl < P; ++cl) {
    CHECK(again[cl].labels == shards[cl].labels);
    CHECK(again[cl].rows == shards[cl].rows);
  }
  // A different seed keeps the label pattern (it is structural) but draws
  // different samples.
  const auto moved = partition_clients(data, P, q, per_client, 32);
  bool any_diff = false;
  for (int cl = 0; cl < P; ++cl)
    for (int s = 0; s < per_client; ++s)
      any_diff |= moved[cl].rows[s] != shards[cl].rows[s];
  CHECK(any_diff);

  SUBCASE("q = 1 gives single-class shards") {
    const auto pure = partition_clients(data, 4, 1.0, 100, 7);
    for (int cl = 0; cl < 4; ++cl)
      for (int lab : pure[cl].labels) CHECK(lab == cl);
  }
  SUBCASE("pool exhaustion and bad arguments throw") {
    CHECK_THROWS_AS(partition_clients(data, 4, 1.0, 500, 7), std::invalid_argument);
    CHECK_THROWS_AS(partition_clients(data, 5, 0.5, 10, 7), std::invalid_argument);
    CHECK_THROWS_AS(partition_clients(data, 4, 1.5, 10, 7), std::invalid_argument);
  }
}

TEST_CASE("paper-scale partition shapes") {
  const auto data = make_blobs(26, 500, 3, 4.0, 12);
  const int P = 104, per_client = 125;
  const auto shards = partition_clients(data, P, 0.9, per_client, 13);
  REQUIRE(static_cast<int>(shards.size()) == P);
  const int own = static_cast<int>(std::lround(0.9 * 125));  // 113
  for (int cl = 0; cl < P; ++cl) {
    REQUIRE(shards[cl].size() == per_client);
    const int home = cl / 4;
    int home_count = 0;
    for (int lab : shards[cl].labels) home_count += lab == home;
    CHECK(home_count == own);
  }
}

TEST_CASE("federated quadratic family: structure and metadata") {
  const int d = 8, P = 12, m = 5;
  auto fed = make_federated_quadratic(d, P, m, 0.2, 1.0, 0.4, 0.1, 19);
  REQUIRE(fed->clients() == P);
  REQUIRE(fed->dim() == d);
  for (int i = 0; i < P; ++i) CHECK(fed->client(i).components() == m);
  CHECK(*fed->meta().heterogeneity == doctest::Approx(0.4).epsilon(1e-9));
  CHECK(*fed->meta().pl_constant == doctest::Approx(0.2).epsilon(1e-9));

  // Global value = mean over clients of client means.
  rng::Engine eng(3);
  const Vec x = random_vec(eng, d);
  double acc = 0.0;
  for (int i = 0; i < P; ++i) acc += fed->client(i).value(x);
  CHECK(fed->value(x) == doctest::Approx(acc / P).epsilon(1e-14));

  // Optimal value is attained: gradient at the implied minimizer is ~0 and
  // every perturbation increases the global objective.
  const double fstar = *fed->meta().optimal_value;
  Vec best = Vec::Zero(d);
  // Reconstruct the minimizer from client matrices.
  Mat mean_A = Mat::Zero(d, d);
  Vec mean_c = Vec::Zero(d);
  for (int i = 0; i < P; ++i) {
    const auto& quad = dynamic_cast<const QuadraticProblem&>(fed->client(i));
    mean_A += quad.mean_matrix();
    mean_c += quad.mean_linear();
  }
  mean_A /= P;
  mean_c /= P;
  best = Eigen::LDLT<Mat>(mean_A).solve(-mean_c);
  CHECK(fed->value(best) == doctest::Approx(fstar).epsilon(1e-9));
  for (int trial = 0; trial < 10; ++trial)
    CHECK(fed->value(best + 0.1 * random_vec(eng, d)) >= fstar - 1e-12);
}
