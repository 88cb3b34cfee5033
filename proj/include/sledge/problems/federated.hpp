#pragma once

#include <memory>
#include <vector>

#include "sledge/problems/dataset.hpp"
#include "sledge/problems/problem.hpp"

namespace sledge {

// Global objective F(x) = (1/P) * sum_i F_i(x) where each client objective
// F_i is itself a finite-sum mean over that client's components.
class FederatedProblem {
 public:
  explicit FederatedProblem(std::vector<ProblemPtr> clients);

  int clients() const { return static_cast<int>(clients_.size()); }
  int dim() const { return d_; }
  const FiniteSumProblem& client(int i) const {
    return *clients_[static_cast<std::size_t>(i)];
  }
  ProblemPtr client_ptr(int i) const { return clients_[static_cast<std::size_t>(i)]; }
  const ProblemMetadata& meta() const { return meta_; }
  ProblemMetadata& mutable_meta() { return meta_; }

  // Mean of client objective values, clients visited in ascending order.
  double value(const Vec& x) const;

 private:
  std::vector<ProblemPtr> clients_;
  int d_;
  ProblemMetadata meta_;
};

using FederatedPtr = std::shared_ptr<const FederatedProblem>;

// Splits `data` into P single-home-class shards: each client draws
// round(q * per_client) samples from its home class and fills the rest
// one-by-one cycling over the remaining classes.  Home classes are assigned
// `dedicated_per_class` clients per class (0 means P / num_classes, which
// must then divide evenly).  Per-class pools are shuffled by `seed` and
// consumed without replacement; overdrawing a pool throws.
std::vector<LabeledDataset> partition_clients(const LabeledDataset& data, int P,
                                              double q, int per_client,
                                              std::uint64_t seed,
                                              int dedicated_per_class = 0);

// Quadratic federated family.  Client mean Hessians differ pairwise by at
// most `zeta` (attained) around a global mean with spectrum in [mu, L];
// within-client component Hessians differ by at most `intra`.  Linear terms
// are heterogeneous throughout.  Metadata carries measured constants of the
// global objective.
std::shared_ptr<FederatedProblem> make_federated_quadratic(
    int d, int P, int components_per_client, double mu, double L, double zeta,
    double intra, std::uint64_t seed);

// Partition `data` across P clients (see partition_clients) and give each a
// per-sample-component softmax objective with L2 strength lambda.
std::shared_ptr<FederatedProblem> make_federated_logistic(
    const LabeledDataset& data, int P, double q, int per_client, double lambda,
    std::uint64_t seed, int dedicated_per_class = 0);

}  // namespace sledge
