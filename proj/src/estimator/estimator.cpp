#include "sledge/estimator/estimator.hpp"

#include <stdexcept>
#include <string>

namespace sledge {

namespace {

void validate(const FiniteSumProblem& prob, const SledgeConfig& cfg) {
  if (cfg.eta <= 0.0) throw std::invalid_argument("SledgeConfig: eta must be positive");
  if (cfg.r < 0.0) throw std::invalid_argument("SledgeConfig: r must be nonnegative");
  if (cfg.b < 1 || cfg.b > prob.components())
    throw std::invalid_argument("SledgeConfig: need 1 <= b <= n (b=" +
                                std::to_string(cfg.b) + ", n=" +
                                std::to_string(prob.components()) + ")");
  if (cfg.max_steps < 0)
    throw std::invalid_argument("SledgeConfig: max_steps must be nonnegative");
}

Vec mean_rows(const Mat& rows) {
  Vec acc = Vec::Zero(rows.cols());
  for (int i = 0; i < rows.rows(); ++i) acc += rows.row(i).transpose();
  return acc / static_cast<double>(rows.rows());
}

}  // namespace

Vec EstimatorState::table_row(int i) const {
  if (mode == TableMode::Naive) return table.row(i).transpose();
  return w.row(i).transpose() + (v - v_snap.row(i).transpose());
}

MinibatchSample draw_minibatch(std::uint64_t seed, long step, int n, int b) {
  rng::Engine eng(seed, rng::kMinibatch, static_cast<std::uint64_t>(step));
  return MinibatchSample{rng::sample_without_replacement(eng, n, b)};
}

Vec draw_noise(std::uint64_t seed, long step, int d, double r) {
  rng::Engine eng(seed, rng::kNoise, static_cast<std::uint64_t>(step));
  return rng::sample_ball(eng, d, r);
}

EstimatorState init_estimator(const FiniteSumProblem& prob,
                              const SledgeConfig& cfg, const Vec& x0,
                              std::uint64_t seed, Exec exec) {
  validate(prob, cfg);
  if (x0.size() != prob.dim())
    throw std::invalid_argument("init_estimator: x0 dimension mismatch");
  const int n = prob.components();
  const int d = prob.dim();

  EstimatorState st;
  st.mode = cfg.mode;
  st.x = x0;
  if (cfg.init == InitOption::FullTable) {
    // Exact table: y_i = grad f_i(x0) for every component.
    std::vector<int> all(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) all[static_cast<std::size_t>(i)] = i;
    Mat rows(n, d);
    kernels::component_gradients(prob, x0, all, rows, exec);
    st.grad_calls = n;
    st.aggregate = mean_rows(rows);
    if (cfg.mode == TableMode::Naive) {
      st.table = rows;
      st.rows_written_total = n;
    } else {
      st.w = rows;
      st.v = Vec::Zero(d);
      st.v_snap = Mat::Zero(n, d);
      st.rows_written_total = n;
    }
  } else {
    // One shared b-sample estimate fills every row.  The efficient layout
    // represents the broadcast through the correction vector alone: with
    // w = 0 and snapshots 0, every row reads v.
    rng::Engine eng(seed, rng::kInit, 0);
    MinibatchSample batch{rng::sample_without_replacement(eng, n, cfg.b)};
    const Vec g = kernels::mean_component_gradient(prob, x0, batch.indices, exec);
    st.grad_calls = cfg.b;
    st.aggregate = g;
    if (cfg.mode == TableMode::Naive) {
      st.table = Mat::Zero(n, d);
      for (int i = 0; i < n; ++i) st.table.row(i) = g.transpose();
      st.rows_written_total = n;
    } else {
      st.w = Mat::Zero(n, d);
      st.v = g;
      st.v_snap = Mat::Zero(n, d);
      st.rows_written_total = 0;
    }
  }
  return st;
}

void sledge_step(EstimatorState& state, const FiniteSumProblem& prob,
                 const SledgeConfig& cfg, const Vec& xi,
                 const MinibatchSample& batch, Exec exec) {
  validate(prob, cfg);
  if (state.t >= cfg.max_steps)
    throw std::runtime_error("sledge_step: step budget exhausted (max_steps=" +
                             std::to_string(cfg.max_steps) + ")");
  const int n = prob.components();
  const int d = prob.dim();
  const int b = static_cast<int>(batch.indices.size());
  if (b != cfg.b)
    throw std::invalid_argument("sledge_step: minibatch size != cfg.b");
  for (int k = 0; k < b; ++k) {
    const int i = batch.indices[static_cast<std::size_t>(k)];
    if (i < 0 || i >= n)
      throw std::invalid_argument("sledge_step: minibatch index out of range");
    if (k > 0 && batch.indices[static_cast<std::size_t>(k - 1)] >= i)
      throw std::invalid_argument("sledge_step: minibatch must be ascending and distinct");
  }
  if (xi.size() != d) throw std::invalid_argument("sledge_step: noise dimension mismatch");

  const Vec x_prev = state.x;
  Vec x_new = x_prev - cfg.eta * state.aggregate;
  x_new += xi;

  // Fresh and stale component gradients on the minibatch (2b calls).
  Mat g_new(b, d), g_old(b, d);
  kernels::component_gradients(prob, x_new, batch.indices, g_new, exec);
  kernels::component_gradients(prob, x_prev, batch.indices, g_old, exec);
  state.grad_calls += 2 * b;

  Vec delta = Vec::Zero(d);
  for (int k = 0; k < b; ++k) delta += (g_new.row(k) - g_old.row(k)).transpose();
  delta /= static_cast<double>(b);

  if (state.mode == TableMode::Naive) {
    // Reference semantics: every row is rewritten, aggregate recomputed.
    long writes = 0;
    int cursor = 0;
    for (int i = 0; i < n; ++i) {
      if (cursor < b && batch.indices[static_cast<std::size_t>(cursor)] == i) {
        state.table.row(i) = g_new.row(cursor);
        ++cursor;
      } else {
        state.table.row(i) += delta.transpose();
      }
      ++writes;
    }
    state.aggregate = mean_rows(state.table);
    state.rows_written_last = writes;
    state.rows_written_total += writes;
  } else {
    // Aggregate moves by the stale->fresh swap on touched rows plus the
    // shared correction picked up by the n-b untouched rows.
    Vec swap_gain = Vec::Zero(d);
    for (int k = 0; k < b; ++k) {
      const int i = batch.indices[static_cast<std::size_t>(k)];
      const Vec stale = state.w.row(i).transpose() +
                        (state.v - state.v_snap.row(i).transpose());
      swap_gain += g_new.row(k).transpose() - stale;
    }
    state.aggregate += swap_gain / static_cast<double>(n) +
                       (static_cast<double>(n - b) / static_cast<double>(n)) * delta;
    state.v += delta;
    for (int k = 0; k < b; ++k) {
      const int i = batch.indices[static_cast<std::size_t>(k)];
      state.w.row(i) = g_new.row(k);
      state.v_snap.row(i) = state.v.transpose();
    }
    state.rows_written_last = 2 * b;
    state.rows_written_total += 2 * b;
  }

  state.x = x_new;
  ++state.t;
}

void sledge_step(EstimatorState& state, const FiniteSumProblem& prob,
                 const SledgeConfig& cfg, std::uint64_t seed, Exec exec) {
  const long step = state.t + 1;
  const Vec xi = draw_noise(seed, step, prob.dim(), cfg.r);
  const MinibatchSample batch = draw_minibatch(seed, step, prob.components(), cfg.b);
  sledge_step(state, prob, cfg, xi, batch, exec);
}

double estimator_error(const EstimatorState& state, const FiniteSumProblem& prob,
                       Exec exec) {
  const Vec g = kernels::full_gradient(prob, state.x, exec);
  return (state.aggregate - g).squaredNorm();
}

Mat materialize_table(const EstimatorState& state, int n) {
  if (state.mode == TableMode::Naive) return state.table;
  Mat out(n, state.v.size());
  for (int i = 0; i < n; ++i) out.row(i) = state.table_row(i).transpose();
  return out;
}

}  // namespace sledge
