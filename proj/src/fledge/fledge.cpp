#include "sledge/fledge/fledge.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace sledge {

namespace {

void validate(const FederatedProblem& fed, const FledgeConfig& cfg) {
  if (cfg.eta <= 0.0) throw std::invalid_argument("FledgeConfig: eta must be positive");
  if (cfg.r < 0.0) throw std::invalid_argument("FledgeConfig: r must be nonnegative");
  if (cfg.K < 1) throw std::invalid_argument("FledgeConfig: need K >= 1");
  if (cfg.b < 1) throw std::invalid_argument("FledgeConfig: need b >= 1");
  if (cfg.p < 1 || cfg.p > fed.clients())
    throw std::invalid_argument("FledgeConfig: need 1 <= p <= P (p=" +
                                std::to_string(cfg.p) + ", P=" +
                                std::to_string(fed.clients()) + ")");
  if (cfg.max_rounds < 0)
    throw std::invalid_argument("FledgeConfig: max_rounds must be nonnegative");
}

// Mean component gradient over `idx` (drawn with replacement, reduced in
// draw order) evaluated at x.
Vec replay_mean_gradient(const FiniteSumProblem& client, const Vec& x,
                         const std::vector<int>& idx, Exec exec) {
  Mat rows(static_cast<int>(idx.size()), client.dim());
  kernels::component_gradients(client, x, idx, rows, exec);
  Vec acc = Vec::Zero(client.dim());
  for (int k = 0; k < rows.rows(); ++k) acc += rows.row(k).transpose();
  return acc / static_cast<double>(idx.size());
}

}  // namespace

Vec FederatedState::client_y(int i) const {
  if (mode == TableMode::Naive) return table.row(i).transpose();
  return w.row(i).transpose() + (cum_delta - d_snap.row(i).transpose());
}

FederatedState init_fledge(const FederatedProblem& fed, const FledgeConfig& cfg,
                           const Vec& x0, std::uint64_t seed, Exec exec) {
  validate(fed, cfg);
  if (x0.size() != fed.dim())
    throw std::invalid_argument("init_fledge: x0 dimension mismatch");
  const int P = fed.clients();
  const int d = fed.dim();
  const long kb = static_cast<long>(cfg.K) * cfg.b;

  FederatedState st;
  st.mode = cfg.mode;
  st.x = x0;

  auto client_seed_mean = [&](int i) {
    rng::Engine eng(seed, rng::kInit, static_cast<std::uint64_t>(i));
    const std::vector<int> idx = rng::sample_with_replacement(
        eng, fed.client(i).components(), static_cast<int>(kb));
    return replay_mean_gradient(fed.client(i), x0, idx, exec);
  };

  if (cfg.init == InitOption::FullTable) {
    // Every client reports a Kb-sample summary; server broadcasts x0 back.
    Mat rows(P, d);
#ifdef _OPENMP
#pragma omp parallel for schedule(static) if (exec == Exec::Parallel && P >= 4)
#endif
    for (int i = 0; i < P; ++i) rows.row(i) = client_seed_mean(i).transpose();
    Vec mean = Vec::Zero(d);
    for (int i = 0; i < P; ++i) mean += rows.row(i).transpose();
    mean /= static_cast<double>(P);
    st.aggregate = mean;
    if (cfg.mode == TableMode::Naive) {
      st.table = rows;
    } else {
      st.w = rows;
      st.cum_delta = Vec::Zero(d);
      st.d_snap = Mat::Zero(P, d);
    }
    st.rows_written_total = P;
    st.ledger.grad_calls = static_cast<long>(P) * kb;
    st.ledger.vectors_sent = 2L * P;
  } else {
    // A p-client cohort reports; the shared mean seeds every row.  The
    // efficient layout broadcasts through cum_delta with zero row writes.
    rng::Engine pick(seed, rng::kInit, 0x10c0);
    const std::vector<int> cohort = rng::sample_without_replacement(pick, P, cfg.p);
    Mat rows(cfg.p, d);
#ifdef _OPENMP
#pragma omp parallel for schedule(static) if (exec == Exec::Parallel && cfg.p >= 4)
#endif
    for (int k = 0; k < cfg.p; ++k)
      rows.row(k) = client_seed_mean(cohort[static_cast<std::size_t>(k)]).transpose();
    Vec mean = Vec::Zero(d);
    for (int k = 0; k < cfg.p; ++k) mean += rows.row(k).transpose();
    mean /= static_cast<double>(cfg.p);
    st.aggregate = mean;
    if (cfg.mode == TableMode::Naive) {
      st.table = Mat::Zero(P, d);
      for (int i = 0; i < P; ++i) st.table.row(i) = mean.transpose();
      st.rows_written_total = P;
    } else {
      st.w = Mat::Zero(P, d);
      st.cum_delta = mean;
      st.d_snap = Mat::Zero(P, d);
      st.rows_written_total = 0;
    }
    st.ledger.grad_calls = static_cast<long>(cfg.p) * kb;
    st.ledger.vectors_sent = 2L * cfg.p;
  }
  st.ledger.scalars_sent = 0;
  return st;
}

void fledge_round(FederatedState& state, const FederatedProblem& fed,
                  const FledgeConfig& cfg, std::uint64_t seed, Exec exec) {
  validate(fed, cfg);
  if (state.t >= cfg.max_rounds)
    throw std::runtime_error("fledge_round: round budget exhausted (max_rounds=" +
                             std::to_string(cfg.max_rounds) + ")");
  const int P = fed.clients();
  const int d = fed.dim();
  const long t = state.t;
  const long kb = static_cast<long>(cfg.K) * cfg.b;

  // Active client: K locally differenced steps seeded by the server
  // aggregate (server -> client: aggregate and x^{t-1}, 2 vectors).
  rng::Engine pick(seed, rng::kClientPick, static_cast<std::uint64_t>(t));
  const int active = static_cast<int>(pick.below(static_cast<std::uint64_t>(P)));
  const FiniteSumProblem& aprob = fed.client(active);
  const Vec x_prev_round = state.x;
  Vec x_local = state.x;
  Vec z = Vec::Zero(d);
  for (int k = 0; k < cfg.K; ++k) {
    const std::uint64_t ctr = static_cast<std::uint64_t>(t) *
                                  static_cast<std::uint64_t>(cfg.K) +
                              static_cast<std::uint64_t>(k);
    rng::Engine noise_eng(seed, rng::kNoise, ctr);
    const Vec xi = rng::sample_ball(noise_eng, d, cfg.r);
    Vec x_next = x_local - cfg.eta * (state.aggregate + z);
    x_next += xi;
    rng::Engine batch_eng(seed, rng::kMinibatch, ctr);
    const std::vector<int> J =
        rng::sample_with_replacement(batch_eng, aprob.components(), cfg.b);
    Mat g_new(cfg.b, d), g_old(cfg.b, d);
    kernels::component_gradients(aprob, x_next, J, g_new, exec);
    kernels::component_gradients(aprob, x_local, J, g_old, exec);
    Vec delta = Vec::Zero(d);
    for (int j = 0; j < cfg.b; ++j) delta += (g_new.row(j) - g_old.row(j)).transpose();
    z += delta / static_cast<double>(cfg.b);
    x_local = x_next;
  }
  const Vec x_new = x_local;
  state.ledger.grad_calls += 2L * kb;

  // Refresh cohort: p clients summarize one Kb-sample minibatch at the new
  // and previous round iterates (client -> server: 2 vectors each; the
  // active client fans x^t out to them: p vectors).
  rng::Engine cohort_eng(seed, rng::kRefreshSet, static_cast<std::uint64_t>(t));
  const std::vector<int> cohort = rng::sample_without_replacement(cohort_eng, P, cfg.p);
  Mat y_new(cfg.p, d), dy(cfg.p, d);
#ifdef _OPENMP
#pragma omp parallel for schedule(static) if (exec == Exec::Parallel && cfg.p >= 2)
#endif
  for (int k = 0; k < cfg.p; ++k) {
    const int i = cohort[static_cast<std::size_t>(k)];
    rng::Engine eng(seed, rng::kClientBatch,
                    static_cast<std::uint64_t>(t) * static_cast<std::uint64_t>(P) +
                        static_cast<std::uint64_t>(i));
    const std::vector<int> J = rng::sample_with_replacement(
        eng, fed.client(i).components(), static_cast<int>(kb));
    const Vec fresh = replay_mean_gradient(fed.client(i), x_new, J, exec);
    const Vec stale = replay_mean_gradient(fed.client(i), x_prev_round, J, exec);
    y_new.row(k) = fresh.transpose();
    dy.row(k) = (fresh - stale).transpose();
  }
  state.ledger.grad_calls += 2L * cfg.p * kb;

  Vec delta_mean = Vec::Zero(d);
  for (int k = 0; k < cfg.p; ++k) delta_mean += dy.row(k).transpose();
  delta_mean /= static_cast<double>(cfg.p);

  if (state.mode == TableMode::Naive) {
    long writes = 0;
    int cursor = 0;
    for (int i = 0; i < P; ++i) {
      if (cursor < cfg.p && cohort[static_cast<std::size_t>(cursor)] == i) {
        state.table.row(i) = y_new.row(cursor);
        ++cursor;
      } else {
        state.table.row(i) += delta_mean.transpose();
      }
      ++writes;
    }
    Vec mean = Vec::Zero(d);
    for (int i = 0; i < P; ++i) mean += state.table.row(i).transpose();
    state.aggregate = mean / static_cast<double>(P);
    state.rows_written_last = writes;
    state.rows_written_total += writes;
  } else {
    Vec swap_gain = Vec::Zero(d);
    for (int k = 0; k < cfg.p; ++k) {
      const int i = cohort[static_cast<std::size_t>(k)];
      const Vec stale_y = state.w.row(i).transpose() +
                          (state.cum_delta - state.d_snap.row(i).transpose());
      swap_gain += y_new.row(k).transpose() - stale_y;
    }
    state.aggregate += swap_gain / static_cast<double>(P) +
                       (static_cast<double>(P - cfg.p) / static_cast<double>(P)) *
                           delta_mean;
    state.cum_delta += delta_mean;
    for (int k = 0; k < cfg.p; ++k) {
      const int i = cohort[static_cast<std::size_t>(k)];
      state.w.row(i) = y_new.row(k);
      state.d_snap.row(i) = state.cum_delta.transpose();
    }
    state.rows_written_last = 2L * cfg.p;
    state.rows_written_total += 2L * cfg.p;
  }

  state.x = x_new;
  ++state.t;
  state.ledger.rounds = state.t;
  state.ledger.vectors_sent += 3L * cfg.p + 2;
  state.ledger.scalars_sent += 1L + cfg.p;  // active id + cohort notifications
}

double audit_server_aggregate(const FederatedState& state,
                              const FederatedProblem& fed) {
  const int P = fed.clients();
  Vec mean = Vec::Zero(fed.dim());
  for (int i = 0; i < P; ++i) mean += state.client_y(i);
  mean /= static_cast<double>(P);
  return (state.aggregate - mean).norm();
}

RunResult run_fledge(const FederatedProblem& fed, const FledgeConfig& cfg_in,
                     const RunOptions& opts) {
  FledgeConfig cfg = cfg_in;
  cfg.max_rounds = opts.max_steps;
  RunResult res;
  Vec x0 = opts.x0.size() == 0 ? Vec::Zero(fed.dim()) : opts.x0;
  if (x0.size() != fed.dim())
    throw std::invalid_argument("run_fledge: x0 dimension mismatch");
  FederatedState st = init_fledge(fed, cfg, x0, opts.seed, opts.exec);

  auto record = [&](long round) {
    TraceRecord rec;
    rec.step = round;
    rec.f_value = fed.value(st.x);
    const Vec g = true_gradient(fed, st.x, opts.exec);
    rec.grad_norm = g.norm();
    rec.estimator_error_sq = (st.aggregate - g).squaredNorm();
    rec.cum_grad_calls = st.ledger.grad_calls;
    rec.cum_vectors_sent = st.ledger.vectors_sent;
    std::optional<double> gap;
    if (fed.meta().optimal_value) gap = rec.f_value - *fed.meta().optimal_value;
    res.trace.push_back(rec);
    return check_stopping(opts.stop, rec.grad_norm, std::nullopt, gap).stop;
  };
  auto finish = [&](RunStatus status) {
    res.status = status;
    res.steps = st.t;
    res.grad_calls = st.ledger.grad_calls;
    res.vectors_sent = st.ledger.vectors_sent;
    res.x_final = st.x;
    res.final_f = fed.value(st.x);
    res.final_grad_norm = true_gradient(fed, st.x, opts.exec).norm();
    return res;
  };

  if (record(0)) return finish(RunStatus::Converged);
  while (st.t < opts.max_steps) {
    fledge_round(st, fed, cfg, opts.seed, opts.exec);
    if (!std::isfinite(st.x.squaredNorm())) return finish(RunStatus::Diverged);
    if (st.t % opts.audit_interval == 0 || st.t == opts.max_steps) {
      if (record(st.t)) return finish(RunStatus::Converged);
    }
  }
  return finish(RunStatus::BudgetExhausted);
}

}  // namespace sledge
