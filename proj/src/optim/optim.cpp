#include "sledge/optim/optim.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace sledge {

std::string to_string(RunStatus s) {
  switch (s) {
    case RunStatus::BudgetExhausted: return "budget_exhausted";
    case RunStatus::Converged: return "converged";
    case RunStatus::Diverged: return "diverged";
  }
  return "unknown";
}

double median(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("median: empty input");
  std::sort(values.begin(), values.end());
  const std::size_t h = values.size() / 2;
  if (values.size() % 2 == 1) return values[h];
  return 0.5 * (values[h - 1] + values[h]);
}

namespace {

Vec resolve_x0(const RunOptions& opts, int d) {
  if (opts.x0.size() == 0) return Vec::Zero(d);
  if (opts.x0.size() != d)
    throw std::invalid_argument("RunOptions: x0 dimension mismatch");
  return opts.x0;
}

bool finite(const Vec& x) { return std::isfinite(x.squaredNorm()); }

// Shared per-audit bookkeeping for the centralized drivers.  Returns true
// when the run should stop (converged).  `est_err` is NaN when the
// algorithm has no persistent estimate.
struct Auditor {
  const FiniteSumProblem& prob;
  const RunOptions& opts;
  RunResult& res;

  bool record(long step, const Vec& x, double est_err, long grad_calls) {
    TraceRecord rec;
    rec.step = step;
    rec.f_value = kernels::mean_value(prob, x, opts.exec);
    const Vec g = true_gradient(prob, x, opts.exec);
    rec.grad_norm = g.norm();
    rec.estimator_error_sq = est_err;
    rec.cum_grad_calls = grad_calls;
    if (auto acc = prob.accuracy(x)) rec.accuracy = *acc;
    std::optional<double> lmin;
    if (opts.track_lambda_min && prob.has_hessian()) {
      rec.lambda_min = min_eigenvalue(prob, x, {}, opts.exec).lambda_min;
      lmin = rec.lambda_min;
    }
    std::optional<double> gap;
    if (prob.meta().optimal_value) gap = rec.f_value - *prob.meta().optimal_value;
    res.trace.push_back(rec);
    return check_stopping(opts.stop, rec.grad_norm, lmin, gap).stop;
  }
};

void finalize(RunResult& res, const FiniteSumProblem& prob, const RunOptions& opts,
              const Vec& x, long steps, long grad_calls) {
  res.steps = steps;
  res.grad_calls = grad_calls;
  res.x_final = x;
  res.final_f = kernels::mean_value(prob, x, opts.exec);
  res.final_grad_norm = true_gradient(prob, x, opts.exec).norm();
}

}  // namespace

RunResult run_sledge(const FiniteSumProblem& prob, const SledgeConfig& cfg_in,
                     const RunOptions& opts) {
  SledgeConfig cfg = cfg_in;
  cfg.max_steps = opts.max_steps;
  RunResult res;
  Auditor audit{prob, opts, res};
  EstimatorState st = init_estimator(prob, cfg, resolve_x0(opts, prob.dim()),
                                     opts.seed, opts.exec);
  if (audit.record(0, st.x, estimator_error(st, prob, opts.exec), st.grad_calls)) {
    res.status = RunStatus::Converged;
    finalize(res, prob, opts, st.x, 0, st.grad_calls);
    return res;
  }
  while (st.t < opts.max_steps) {
    sledge_step(st, prob, cfg, opts.seed, opts.exec);
    if (!finite(st.x)) {
      res.status = RunStatus::Diverged;
      finalize(res, prob, opts, st.x, st.t, st.grad_calls);
      return res;
    }
    if (st.t % opts.audit_interval == 0 || st.t == opts.max_steps) {
      if (audit.record(st.t, st.x, estimator_error(st, prob, opts.exec),
                       st.grad_calls)) {
        res.status = RunStatus::Converged;
        finalize(res, prob, opts, st.x, st.t, st.grad_calls);
        return res;
      }
    }
  }
  res.status = RunStatus::BudgetExhausted;
  finalize(res, prob, opts, st.x, st.t, st.grad_calls);
  return res;
}

RunResult run_sgd(const FiniteSumProblem& prob, const SgdConfig& cfg,
                  const RunOptions& opts) {
  if (cfg.eta <= 0.0) throw std::invalid_argument("SgdConfig: eta must be positive");
  if (cfg.b < 1 || cfg.b > prob.components())
    throw std::invalid_argument("SgdConfig: need 1 <= b <= n");
  const double nan = std::numeric_limits<double>::quiet_NaN();
  RunResult res;
  Auditor audit{prob, opts, res};
  Vec x = resolve_x0(opts, prob.dim());
  long grad_calls = 0;
  long t = 0;
  if (audit.record(0, x, nan, 0)) {
    res.status = RunStatus::Converged;
    finalize(res, prob, opts, x, 0, 0);
    return res;
  }
  while (t < opts.max_steps) {
    const MinibatchSample batch =
        draw_minibatch(opts.seed, t + 1, prob.components(), cfg.b);
    const Vec g = kernels::mean_component_gradient(prob, x, batch.indices, opts.exec);
    grad_calls += cfg.b;
    x -= cfg.eta * g;
    ++t;
    if (!finite(x)) {
      res.status = RunStatus::Diverged;
      finalize(res, prob, opts, x, t, grad_calls);
      return res;
    }
    if (t % opts.audit_interval == 0 || t == opts.max_steps) {
      if (audit.record(t, x, nan, grad_calls)) {
        res.status = RunStatus::Converged;
        finalize(res, prob, opts, x, t, grad_calls);
        return res;
      }
    }
  }
  res.status = RunStatus::BudgetExhausted;
  finalize(res, prob, opts, x, t, grad_calls);
  return res;
}

RunResult run_saga(const FiniteSumProblem& prob, const SagaConfig& cfg,
                   const RunOptions& opts) {
  if (cfg.eta <= 0.0) throw std::invalid_argument("SagaConfig: eta must be positive");
  if (cfg.b < 1 || cfg.b > prob.components())
    throw std::invalid_argument("SagaConfig: need 1 <= b <= n");
  const int n = prob.components();
  const int d = prob.dim();
  RunResult res;
  Auditor audit{prob, opts, res};
  Vec x = resolve_x0(opts, d);

  // Exact table at x0, like the full-table option of the single-loop method.
  std::vector<int> all(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) all[static_cast<std::size_t>(i)] = i;
  Mat table(n, d);
  kernels::component_gradients(prob, x, all, table, opts.exec);
  Vec table_mean = Vec::Zero(d);
  for (int i = 0; i < n; ++i) table_mean += table.row(i).transpose();
  table_mean /= static_cast<double>(n);
  long grad_calls = n;
  long t = 0;

  auto table_err = [&](const Vec& at) {
    return (table_mean - true_gradient(prob, at, opts.exec)).squaredNorm();
  };
  if (audit.record(0, x, table_err(x), grad_calls)) {
    res.status = RunStatus::Converged;
    finalize(res, prob, opts, x, 0, grad_calls);
    return res;
  }
  Mat fresh(cfg.b, d);
  while (t < opts.max_steps) {
    const MinibatchSample batch = draw_minibatch(opts.seed, t + 1, n, cfg.b);
    kernels::component_gradients(prob, x, batch.indices, fresh, opts.exec);
    grad_calls += cfg.b;
    Vec dir = table_mean;
    for (int k = 0; k < cfg.b; ++k) {
      const int i = batch.indices[static_cast<std::size_t>(k)];
      dir += (fresh.row(k) - table.row(i)).transpose() / static_cast<double>(cfg.b);
    }
    x -= cfg.eta * dir;
    for (int k = 0; k < cfg.b; ++k) {
      const int i = batch.indices[static_cast<std::size_t>(k)];
      table_mean += (fresh.row(k) - table.row(i)).transpose() / static_cast<double>(n);
      table.row(i) = fresh.row(k);
    }
    ++t;
    if (!finite(x)) {
      res.status = RunStatus::Diverged;
      finalize(res, prob, opts, x, t, grad_calls);
      return res;
    }
    if (t % opts.audit_interval == 0 || t == opts.max_steps) {
      if (audit.record(t, x, table_err(x), grad_calls)) {
        res.status = RunStatus::Converged;
        finalize(res, prob, opts, x, t, grad_calls);
        return res;
      }
    }
  }
  res.status = RunStatus::BudgetExhausted;
  finalize(res, prob, opts, x, t, grad_calls);
  return res;
}

RunResult run_sarah(const FiniteSumProblem& prob, const SarahConfig& cfg,
                    const RunOptions& opts) {
  if (cfg.eta <= 0.0) throw std::invalid_argument("SarahConfig: eta must be positive");
  if (cfg.b < 1 || cfg.b > prob.components())
    throw std::invalid_argument("SarahConfig: need 1 <= b <= n");
  if (cfg.m < 1) throw std::invalid_argument("SarahConfig: need m >= 1");
  if (cfg.r < 0.0) throw std::invalid_argument("SarahConfig: r must be nonnegative");
  const int n = prob.components();
  const int d = prob.dim();
  RunResult res;
  Auditor audit{prob, opts, res};
  Vec x = resolve_x0(opts, d);
  Vec x_prev = x;
  Vec v = Vec::Zero(d);
  long grad_calls = 0;
  long t = 0;
  auto est_err = [&](const Vec& at) {
    return (v - true_gradient(prob, at, opts.exec)).squaredNorm();
  };
  // Step t (1-based): anchor every m steps, otherwise a differenced update,
  // then move.  m = 1 degenerates to full-gradient descent.
  Mat g_new(cfg.b, d), g_old(cfg.b, d);
  bool first_audit_done = false;
  while (t < opts.max_steps) {
    if (t % cfg.m == 0) {
      v = true_gradient(prob, x, opts.exec);
      grad_calls += n;
    } else {
      const MinibatchSample batch = draw_minibatch(opts.seed, t + 1, n, cfg.b);
      kernels::component_gradients(prob, x, batch.indices, g_new, opts.exec);
      kernels::component_gradients(prob, x_prev, batch.indices, g_old, opts.exec);
      grad_calls += 2 * cfg.b;
      Vec delta = Vec::Zero(d);
      for (int k = 0; k < cfg.b; ++k)
        delta += (g_new.row(k) - g_old.row(k)).transpose();
      v += delta / static_cast<double>(cfg.b);
    }
    if (!first_audit_done) {
      // Audit the initial point with the anchored estimate in hand.
      first_audit_done = true;
      if (audit.record(0, x, est_err(x), grad_calls)) {
        res.status = RunStatus::Converged;
        finalize(res, prob, opts, x, 0, grad_calls);
        return res;
      }
    }
    x_prev = x;
    x -= cfg.eta * v;
    if (cfg.r > 0.0) x += draw_noise(opts.seed, t + 1, d, cfg.r);
    ++t;
    if (!finite(x)) {
      res.status = RunStatus::Diverged;
      finalize(res, prob, opts, x, t, grad_calls);
      return res;
    }
    if (t % opts.audit_interval == 0 || t == opts.max_steps) {
      if (audit.record(t, x, est_err(x), grad_calls)) {
        res.status = RunStatus::Converged;
        finalize(res, prob, opts, x, t, grad_calls);
        return res;
      }
    }
  }
  res.status = RunStatus::BudgetExhausted;
  finalize(res, prob, opts, x, t, grad_calls);
  return res;
}

DiscrepancyReport compare_estimator_discrepancy(const FiniteSumProblem& prob,
                                                const DiscrepancyConfig& cfg) {
  if (cfg.seeds.empty())
    throw std::invalid_argument("DiscrepancyConfig: need at least one seed");
  if (cfg.steps < 1) throw std::invalid_argument("DiscrepancyConfig: steps < 1");
  const int n = prob.components();
  const int d = prob.dim();
  Vec x0 = cfg.x0.size() == 0 ? Vec::Zero(d) : cfg.x0;
  if (x0.size() != d)
    throw std::invalid_argument("DiscrepancyConfig: x0 dimension mismatch");

  DiscrepancyReport rep;
  rep.algorithms = {"sledge", "saga", "sarah"};
  rep.series.resize(3);
  for (auto& s : rep.series) s.resize(cfg.seeds.size());

  for (std::size_t si = 0; si < cfg.seeds.size(); ++si) {
    const std::uint64_t seed = cfg.seeds[si];

    {  // single-loop estimator, its own trajectory
      SledgeConfig scfg;
      scfg.eta = cfg.eta;
      scfg.b = cfg.b;
      scfg.r = cfg.r;
      scfg.mode = TableMode::Efficient;
      scfg.init = cfg.init;
      scfg.max_steps = cfg.steps;
      EstimatorState st = init_estimator(prob, scfg, x0, seed, cfg.exec);
      auto& out = rep.series[0][si];
      out.reserve(static_cast<std::size_t>(cfg.steps));
      for (long t = 0; t < cfg.steps; ++t) {
        out.push_back(estimator_error(st, prob, cfg.exec));
        sledge_step(st, prob, scfg, seed, cfg.exec);
      }
    }

    {  // unbiased table baseline
      std::vector<int> all(static_cast<std::size_t>(n));
      for (int i = 0; i < n; ++i) all[static_cast<std::size_t>(i)] = i;
      Mat table(n, d);
      kernels::component_gradients(prob, x0, all, table, cfg.exec);
      Vec table_mean = Vec::Zero(d);
      for (int i = 0; i < n; ++i) table_mean += table.row(i).transpose();
      table_mean /= static_cast<double>(n);
      Vec x = x0;
      Mat fresh(cfg.b, d);
      auto& out = rep.series[1][si];
      out.reserve(static_cast<std::size_t>(cfg.steps));
      for (long t = 0; t < cfg.steps; ++t) {
        const MinibatchSample batch = draw_minibatch(seed, t + 1, n, cfg.b);
        kernels::component_gradients(prob, x, batch.indices, fresh, cfg.exec);
        Vec dir = table_mean;
        for (int k = 0; k < cfg.b; ++k) {
          const int i = batch.indices[static_cast<std::size_t>(k)];
          dir += (fresh.row(k) - table.row(i)).transpose() / static_cast<double>(cfg.b);
        }
        out.push_back((dir - true_gradient(prob, x, cfg.exec)).squaredNorm());
        x -= cfg.eta * dir;
        for (int k = 0; k < cfg.b; ++k) {
          const int i = batch.indices[static_cast<std::size_t>(k)];
          table_mean += (fresh.row(k) - table.row(i)).transpose() / static_cast<double>(n);
          table.row(i) = fresh.row(k);
        }
      }
    }

    {  // anchored differenced baseline
      Vec x = x0, x_prev = x0;
      Vec v = Vec::Zero(d);
      Mat g_new(cfg.b, d), g_old(cfg.b, d);
      auto& out = rep.series[2][si];
      out.reserve(static_cast<std::size_t>(cfg.steps));
      for (long t = 0; t < cfg.steps; ++t) {
        if (t % cfg.m == 0) {
          v = true_gradient(prob, x, cfg.exec);
        } else {
          const MinibatchSample batch = draw_minibatch(seed, t + 1, n, cfg.b);
          kernels::component_gradients(prob, x, batch.indices, g_new, cfg.exec);
          kernels::component_gradients(prob, x_prev, batch.indices, g_old, cfg.exec);
          Vec delta = Vec::Zero(d);
          for (int k = 0; k < cfg.b; ++k)
            delta += (g_new.row(k) - g_old.row(k)).transpose();
          v += delta / static_cast<double>(cfg.b);
        }
        out.push_back((v - true_gradient(prob, x, cfg.exec)).squaredNorm());
        x_prev = x;
        x -= cfg.eta * v;
        if (cfg.r > 0.0) x += draw_noise(seed, t + 1, d, cfg.r);
      }
    }
  }

  rep.pooled_median.resize(3);
  for (std::size_t a = 0; a < 3; ++a) {
    std::vector<double> pool;
    for (const auto& per_seed : rep.series[a])
      pool.insert(pool.end(), per_seed.begin(), per_seed.end());
    rep.pooled_median[a] = median(std::move(pool));
  }
  return rep;
}

double DiscrepancyReport::median_of(const std::string& algorithm) const {
  for (std::size_t a = 0; a < algorithms.size(); ++a)
    if (algorithms[a] == algorithm) return pooled_median[a];
  throw std::invalid_argument("DiscrepancyReport: unknown algorithm " + algorithm);
}

}  // namespace sledge
