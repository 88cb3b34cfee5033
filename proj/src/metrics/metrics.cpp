#include "sledge/metrics/metrics.hpp"

#include <Eigen/Dense>
#include <charconv>
#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>

#include "sledge/core/rng.hpp"

namespace sledge {

std::string format_double(double v) {
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

namespace {
void put_opt(std::ostream& out, double v) {
  if (!std::isnan(v)) out << format_double(v);
}
}  // namespace

void write_trace_csv(std::ostream& out, const std::vector<TraceRecord>& trace) {
  out << "step,f_value,grad_norm,estimator_error_sq,cum_grad_calls,"
         "cum_vectors_sent,lambda_min,accuracy,wall_time\n";
  for (const auto& r : trace) {
    out << r.step << ',';
    put_opt(out, r.f_value);
    out << ',';
    put_opt(out, r.grad_norm);
    out << ',';
    put_opt(out, r.estimator_error_sq);
    out << ',' << r.cum_grad_calls << ',';
    if (r.cum_vectors_sent >= 0) out << r.cum_vectors_sent;
    out << ',';
    put_opt(out, r.lambda_min);
    out << ',';
    put_opt(out, r.accuracy);
    // wall_time cell stays empty: timing would break byte-for-byte
    // reproducibility of reruns.
    out << ",\n";
  }
}

void write_trace_csv_file(const std::string& path,
                          const std::vector<TraceRecord>& trace) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("write_trace_csv_file: cannot open " + path);
  std::ostringstream buf;
  write_trace_csv(buf, trace);
  const std::string bytes = buf.str();
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("write_trace_csv_file: write failed " + path);
}

Vec true_gradient(const FiniteSumProblem& prob, const Vec& x, Exec exec) {
  return kernels::full_gradient(prob, x, exec);
}

Vec true_gradient(const FederatedProblem& fed, const Vec& x, Exec exec) {
  Vec acc = Vec::Zero(fed.dim());
  for (int i = 0; i < fed.clients(); ++i)
    acc += kernels::full_gradient(fed.client(i), x, exec);
  return acc / static_cast<double>(fed.clients());
}

EigResult min_eigenvalue(const FiniteSumProblem& prob, const Vec& x,
                         const EigOptions& opts, Exec exec) {
  const int d = prob.dim();
  EigResult result;
  if (d <= opts.dense_threshold) {
    Mat mean = Mat::Zero(d, d);
    Mat h(d, d);
    for (int i = 0; i < prob.components(); ++i) {
      prob.component_hessian(i, x, h);
      mean += h;
    }
    mean /= static_cast<double>(prob.components());
    Eigen::SelfAdjointEigenSolver<Mat> es(mean);
    result.lambda_min = es.eigenvalues()(0);
    const Vec v = es.eigenvectors().col(0);
    result.residual = (mean * v - result.lambda_min * v).norm();
    result.dense = true;
    return result;
  }

  // Shift so the target becomes the dominant eigenvalue: for sigma >= L the
  // spectrum of sigma*I - H lies in [0, sigma - lambda_min] and power
  // iteration climbs to the top, i.e. to the smallest eigenvalue of H.
  double sigma;
  if (opts.sigma) {
    sigma = *opts.sigma;
  } else if (prob.meta().smoothness) {
    sigma = *prob.meta().smoothness;
  } else {
    rng::Engine probe(0x51eed5u, rng::kProbe, static_cast<std::uint64_t>(d));
    Vec u(d);
    for (int k = 0; k < d; ++k) u[k] = probe.next_normal();
    u /= u.norm();
    double est = 0.0;
    for (int it = 0; it < 50; ++it) {
      Vec hu = kernels::mean_hessian_vec(prob, x, u, exec);
      est = std::abs(u.dot(hu));
      const double nrm = hu.norm();
      if (nrm == 0.0) break;
      u = hu / nrm;
    }
    sigma = 1.05 * est + 1e-12;
  }

  rng::Engine start(0xb1a5edu, rng::kProbe, static_cast<std::uint64_t>(d));
  Vec v(d);
  for (int k = 0; k < d; ++k) v[k] = start.next_normal();
  v /= v.norm();
  double theta = 0.0;
  for (int it = 1; it <= opts.max_iterations; ++it) {
    Vec hv = kernels::mean_hessian_vec(prob, x, v, exec);
    Vec bv = sigma * v - hv;
    theta = v.dot(bv);
    const double res = (bv - theta * v).norm();
    result.iterations = it;
    if (res <= opts.tolerance * std::max(1.0, std::abs(theta))) {
      result.residual = res;
      break;
    }
    const double nrm = bv.norm();
    if (nrm == 0.0) {  // v is exactly an eigenvector of H at sigma
      result.residual = 0.0;
      break;
    }
    v = bv / nrm;
    if (it == opts.max_iterations)
      result.residual = res;
  }
  result.lambda_min = sigma - theta;
  result.dense = false;
  return result;
}

StopVerdict check_stopping(const StoppingCriteria& crit, double grad_norm,
                           std::optional<double> lambda_min,
                           std::optional<double> value_gap) {
  StopVerdict v;
  v.grad_ok = !crit.grad_eps || grad_norm <= *crit.grad_eps;
  v.hess_ok = !crit.hess_delta || (lambda_min && *lambda_min >= -*crit.hess_delta);
  v.gap_ok = !crit.value_gap || (value_gap && *value_gap <= *crit.value_gap);
  const bool any = crit.grad_eps || crit.hess_delta || crit.value_gap;
  v.stop = any && v.grad_ok && v.hess_ok && v.gap_ok;
  return v;
}

}  // namespace sledge
