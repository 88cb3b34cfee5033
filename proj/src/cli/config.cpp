#include "sledge/cli/config.hpp"

#include <algorithm>
#include <cstdlib>
#include <set>

#include "sledge/problems/dataset.hpp"
#include "sledge/problems/logistic.hpp"
#include "sledge/problems/quadratic.hpp"

namespace sledge::cli {

namespace {

std::string type_name(const json& j) { return j.type_name(); }

void reject_unknown_keys(const json& j, const std::string& path,
                         std::initializer_list<const char*> allowed) {
  for (const auto& [key, value] : j.items()) {
    (void)value;
    if (std::find_if(allowed.begin(), allowed.end(), [&](const char* a) {
          return key == a;
        }) == allowed.end())
      throw ConfigError(path + "." + key, "unknown key");
  }
}

const json& require(const json& j, const std::string& path, const char* key) {
  if (!j.contains(key)) throw ConfigError(path + "." + key, "missing required key");
  return j.at(key);
}

double as_number(const json& j, const std::string& path) {
  if (!j.is_number()) throw ConfigError(path, "expected a number, got " + type_name(j));
  return j.get<double>();
}

long as_integer(const json& j, const std::string& path) {
  if (!j.is_number_integer())
    throw ConfigError(path, "expected an integer, got " + type_name(j));
  return j.get<long>();
}

std::uint64_t as_seed(const json& j, const std::string& path) {
  if (!j.is_number_integer() || (j.is_number_integer() && j.get<long long>() < 0))
    throw ConfigError(path, "expected a nonnegative integer seed");
  return j.get<std::uint64_t>();
}

std::string as_string(const json& j, const std::string& path) {
  if (!j.is_string()) throw ConfigError(path, "expected a string, got " + type_name(j));
  return j.get<std::string>();
}

bool as_bool(const json& j, const std::string& path) {
  if (!j.is_boolean()) throw ConfigError(path, "expected a boolean, got " + type_name(j));
  return j.get<bool>();
}

double positive_number(const json& j, const std::string& path) {
  const double v = as_number(j, path);
  if (!(v > 0.0)) throw ConfigError(path, "expected a positive number");
  return v;
}

double nonneg_number(const json& j, const std::string& path) {
  const double v = as_number(j, path);
  if (v < 0.0) throw ConfigError(path, "expected a nonnegative number");
  return v;
}

long positive_integer(const json& j, const std::string& path) {
  const long v = as_integer(j, path);
  if (v < 1) throw ConfigError(path, "expected a positive integer");
  return v;
}

// Scalar or list-of-scalar numeric field for grid expansion.
template <typename T, typename F>
std::vector<T> value_list(const json& j, const std::string& path, F&& one) {
  std::vector<T> out;
  if (j.is_array()) {
    if (j.empty()) throw ConfigError(path, "value list must not be empty");
    int k = 0;
    for (const auto& item : j)
      out.push_back(one(item, path + "[" + std::to_string(k++) + "]"));
  } else {
    out.push_back(one(j, path));
  }
  return out;
}

std::shared_ptr<const LabeledDataset> build_dataset(const json& spec,
                                                    const std::string& path) {
  if (!spec.is_object()) throw ConfigError(path, "expected an object");
  const std::string kind = as_string(require(spec, path, "kind"), path + ".kind");
  if (kind == "blobs") {
    reject_unknown_keys(spec, path,
                        {"kind", "classes", "per_class", "features", "separation", "seed"});
    const int classes =
        static_cast<int>(positive_integer(require(spec, path, "classes"), path + ".classes"));
    const int per_class = static_cast<int>(
        positive_integer(require(spec, path, "per_class"), path + ".per_class"));
    const int features = static_cast<int>(
        positive_integer(require(spec, path, "features"), path + ".features"));
    const double separation =
        nonneg_number(require(spec, path, "separation"), path + ".separation");
    const std::uint64_t seed = as_seed(require(spec, path, "seed"), path + ".seed");
    return std::make_shared<LabeledDataset>(
        make_blobs(classes, per_class, features, separation, seed));
  }
  if (kind == "libsvm") {
    reject_unknown_keys(spec, path, {"kind", "path"});
    const std::string file = as_string(require(spec, path, "path"), path + ".path");
    return std::make_shared<LabeledDataset>(load_libsvm(file));
  }
  throw ConfigError(path + ".kind", "unknown dataset kind '" + kind + "'");
}

}  // namespace

BuiltProblem build_problem(const json& spec, const std::string& path) {
  if (!spec.is_object()) throw ConfigError(path, "expected an object");
  const std::string kind = as_string(require(spec, path, "kind"), path + ".kind");
  BuiltProblem out;
  if (kind == "quadratic_pl") {
    reject_unknown_keys(spec, path, {"kind", "d", "n", "mu", "L", "zeta", "seed"});
    const int d = static_cast<int>(positive_integer(require(spec, path, "d"), path + ".d"));
    const int n = static_cast<int>(positive_integer(require(spec, path, "n"), path + ".n"));
    const double mu = positive_number(require(spec, path, "mu"), path + ".mu");
    const double L = positive_number(require(spec, path, "L"), path + ".L");
    const double zeta = nonneg_number(require(spec, path, "zeta"), path + ".zeta");
    const std::uint64_t seed = as_seed(require(spec, path, "seed"), path + ".seed");
    if (mu > L) throw ConfigError(path + ".mu", "mu must not exceed L");
    out.central = make_quadratic_pl(d, n, mu, L, zeta, seed);
    return out;
  }
  if (kind == "saddle") {
    reject_unknown_keys(spec, path, {"kind", "d", "n", "gamma", "seed"});
    const int d = static_cast<int>(positive_integer(require(spec, path, "d"), path + ".d"));
    const int n = static_cast<int>(positive_integer(require(spec, path, "n"), path + ".n"));
    const double gamma = positive_number(require(spec, path, "gamma"), path + ".gamma");
    const std::uint64_t seed = as_seed(require(spec, path, "seed"), path + ".seed");
    out.central = make_saddle_ensemble(d, n, gamma, seed);
    return out;
  }
  if (kind == "logistic") {
    reject_unknown_keys(spec, path, {"kind", "dataset", "lambda", "group_size"});
    auto data = build_dataset(require(spec, path, "dataset"), path + ".dataset");
    const double lambda = nonneg_number(require(spec, path, "lambda"), path + ".lambda");
    const int group_size = static_cast<int>(
        positive_integer(require(spec, path, "group_size"), path + ".group_size"));
    out.central = make_logistic(std::move(data), lambda, group_size);
    return out;
  }
  if (kind == "federated_quadratic") {
    reject_unknown_keys(
        spec, path,
        {"kind", "d", "P", "components_per_client", "mu", "L", "zeta", "intra", "seed"});
    const int d = static_cast<int>(positive_integer(require(spec, path, "d"), path + ".d"));
    const int P = static_cast<int>(positive_integer(require(spec, path, "P"), path + ".P"));
    const int m = static_cast<int>(positive_integer(
        require(spec, path, "components_per_client"), path + ".components_per_client"));
    const double mu = positive_number(require(spec, path, "mu"), path + ".mu");
    const double L = positive_number(require(spec, path, "L"), path + ".L");
    const double zeta = nonneg_number(require(spec, path, "zeta"), path + ".zeta");
    const double intra = nonneg_number(require(spec, path, "intra"), path + ".intra");
    const std::uint64_t seed = as_seed(require(spec, path, "seed"), path + ".seed");
    if (mu > L) throw ConfigError(path + ".mu", "mu must not exceed L");
    out.federated = make_federated_quadratic(d, P, m, mu, L, zeta, intra, seed);
    return out;
  }
  if (kind == "federated_logistic") {
    reject_unknown_keys(spec, path,
                        {"kind", "dataset", "P", "q", "per_client", "lambda",
                         "dedicated_per_class", "seed"});
    auto data = build_dataset(require(spec, path, "dataset"), path + ".dataset");
    const int P = static_cast<int>(positive_integer(require(spec, path, "P"), path + ".P"));
    const double q = nonneg_number(require(spec, path, "q"), path + ".q");
    if (q > 1.0) throw ConfigError(path + ".q", "q must lie in [0, 1]");
    const int per_client = static_cast<int>(
        positive_integer(require(spec, path, "per_client"), path + ".per_client"));
    const double lambda = nonneg_number(require(spec, path, "lambda"), path + ".lambda");
    int dedicated = 0;
    if (spec.contains("dedicated_per_class"))
      dedicated = static_cast<int>(positive_integer(spec.at("dedicated_per_class"),
                                                    path + ".dedicated_per_class"));
    const std::uint64_t seed = as_seed(require(spec, path, "seed"), path + ".seed");
    try {
      out.federated =
          make_federated_logistic(*data, P, q, per_client, lambda, seed, dedicated);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(path, e.what());
    }
    return out;
  }
  throw ConfigError(path + ".kind", "unknown problem kind '" + kind + "'");
}

std::size_t AlgorithmSpec::grid_size() const {
  return eta.size() * std::max<std::size_t>(b.size(), 1) *
         std::max<std::size_t>(m.size(), 1) * std::max<std::size_t>(p.size(), 1) *
         std::max<std::size_t>(K.size(), 1) * std::max<std::size_t>(r.size(), 1);
}

std::vector<AlgorithmSetting> expand_grid(const AlgorithmSpec& spec) {
  std::vector<AlgorithmSetting> out;
  auto bs = spec.b.empty() ? std::vector<int>{1} : spec.b;
  auto ms = spec.m.empty() ? std::vector<long>{1} : spec.m;
  auto ps = spec.p.empty() ? std::vector<int>{1} : spec.p;
  auto Ks = spec.K.empty() ? std::vector<int>{1} : spec.K;
  auto rs = spec.r.empty() ? std::vector<double>{0.0} : spec.r;
  for (double eta : spec.eta)
    for (int b : bs)
      for (long m : ms)
        for (int p : ps)
          for (int K : Ks)
            for (double r : rs) {
              AlgorithmSetting s;
              s.tag = spec.tag;
              s.kind = spec.kind;
              s.eta = eta;
              s.b = b;
              s.m = m;
              s.p = p;
              s.K = K;
              s.r = r;
              s.mode = spec.mode;
              s.init = spec.init;
              out.push_back(s);
            }
  return out;
}

json AlgorithmSetting::params() const {
  json j;
  j["eta"] = eta;
  j["b"] = b;
  j["r"] = r;
  if (kind == "sarah") j["m"] = m;
  if (kind == "fledge") {
    j["p"] = p;
    j["K"] = K;
  }
  if (kind == "sledge" || kind == "fledge") {
    j["option"] = (init == InitOption::FullTable) ? "II" : "I";
    j["mode"] = (mode == TableMode::Efficient) ? "efficient" : "naive";
  }
  return j;
}

namespace {

AlgorithmSpec parse_algorithm(const json& j, const std::string& path, Command cmd) {
  if (!j.is_object()) throw ConfigError(path, "expected an object");
  AlgorithmSpec spec;
  spec.kind = as_string(require(j, path, "kind"), path + ".kind");
  spec.tag = j.contains("tag") ? as_string(j.at("tag"), path + ".tag") : spec.kind;

  const bool is_sledge = spec.kind == "sledge";
  const bool is_sgd = spec.kind == "sgd";
  const bool is_saga = spec.kind == "saga";
  const bool is_sarah = spec.kind == "sarah";
  const bool is_fledge = spec.kind == "fledge";
  if (!is_sledge && !is_sgd && !is_saga && !is_sarah && !is_fledge)
    throw ConfigError(path + ".kind", "unknown algorithm kind '" + spec.kind + "'");

  if (is_sledge) {
    reject_unknown_keys(j, path, {"kind", "tag", "eta", "b", "r", "option", "mode"});
  } else if (is_sgd || is_saga) {
    reject_unknown_keys(j, path, {"kind", "tag", "eta", "b"});
  } else if (is_sarah) {
    reject_unknown_keys(j, path, {"kind", "tag", "eta", "b", "m", "r"});
  } else {
    reject_unknown_keys(j, path,
                        {"kind", "tag", "eta", "b", "r", "p", "K", "option", "mode"});
  }

  spec.eta = value_list<double>(require(j, path, "eta"), path + ".eta", positive_number);
  spec.b = value_list<int>(require(j, path, "b"), path + ".b",
                           [](const json& v, const std::string& p) {
                             return static_cast<int>(positive_integer(v, p));
                           });
  if (j.contains("r"))
    spec.r = value_list<double>(j.at("r"), path + ".r", nonneg_number);
  if (is_sarah)
    spec.m = value_list<long>(require(j, path, "m"), path + ".m", positive_integer);
  if (is_fledge) {
    spec.p = value_list<int>(require(j, path, "p"), path + ".p",
                             [](const json& v, const std::string& pp) {
                               return static_cast<int>(positive_integer(v, pp));
                             });
    spec.K = value_list<int>(require(j, path, "K"), path + ".K",
                             [](const json& v, const std::string& pp) {
                               return static_cast<int>(positive_integer(v, pp));
                             });
  }
  if (j.contains("option")) {
    const std::string opt = as_string(j.at("option"), path + ".option");
    if (opt == "I")
      spec.init = InitOption::SharedMinibatch;
    else if (opt == "II")
      spec.init = InitOption::FullTable;
    else
      throw ConfigError(path + ".option", "expected \"I\" or \"II\"");
  }
  if (j.contains("mode")) {
    const std::string mode = as_string(j.at("mode"), path + ".mode");
    if (mode == "naive")
      spec.mode = TableMode::Naive;
    else if (mode == "efficient")
      spec.mode = TableMode::Efficient;
    else
      throw ConfigError(path + ".mode", "expected \"naive\" or \"efficient\"");
  }

  if (cmd == Command::Run) {
    auto singleton = [&](std::size_t size, const char* key) {
      if (size > 1)
        throw ConfigError(path + "." + key,
                          "value lists are only allowed with the sweep command");
    };
    singleton(spec.eta.size(), "eta");
    singleton(spec.b.size(), "b");
    singleton(spec.m.size(), "m");
    singleton(spec.p.size(), "p");
    singleton(spec.K.size(), "K");
    singleton(spec.r.size(), "r");
  }
  return spec;
}

DiscrepancySpec parse_discrepancy(const json& j, const std::string& path) {
  if (!j.is_object()) throw ConfigError(path, "expected an object");
  reject_unknown_keys(j, path, {"eta", "b", "m", "steps", "r"});
  DiscrepancySpec d;
  d.eta = positive_number(require(j, path, "eta"), path + ".eta");
  d.b = static_cast<int>(positive_integer(require(j, path, "b"), path + ".b"));
  d.m = positive_integer(require(j, path, "m"), path + ".m");
  d.steps = positive_integer(require(j, path, "steps"), path + ".steps");
  if (j.contains("r")) d.r = nonneg_number(j.at("r"), path + ".r");
  return d;
}

}  // namespace

ExperimentConfig parse_config(const json& root, Command cmd) {
  if (!root.is_object()) throw ConfigError("config", "top level must be an object");
  reject_unknown_keys(root, "config",
                      {"problem", "algorithms", "discrepancy", "seeds", "max_steps",
                       "audit_interval", "stopping", "track_lambda_min", "output_dir",
                       "sweep_objective"});
  ExperimentConfig cfg;
  cfg.problem = require(root, "config", "problem");

  const bool wants_algorithms =
      cmd == Command::Run || cmd == Command::Sweep ||
      (cmd == Command::Validate && root.contains("algorithms"));
  const bool wants_discrepancy =
      cmd == Command::Discrepancy ||
      (cmd == Command::Validate && root.contains("discrepancy"));
  if (cmd == Command::Validate && !wants_algorithms && !wants_discrepancy)
    throw ConfigError("config", "need an 'algorithms' or 'discrepancy' section");

  if (wants_algorithms) {
    const json& algs = require(root, "config", "algorithms");
    if (!algs.is_array() || algs.empty())
      throw ConfigError("algorithms", "expected a non-empty array");
    std::set<std::string> tags;
    int k = 0;
    for (const auto& a : algs) {
      const std::string path = "algorithms[" + std::to_string(k++) + "]";
      AlgorithmSpec spec = parse_algorithm(
          a, path, cmd == Command::Validate ? Command::Sweep : cmd);
      if (!tags.insert(spec.tag).second)
        throw ConfigError(path + ".tag", "duplicate tag '" + spec.tag + "'");
      cfg.algorithms.push_back(std::move(spec));
    }
  }
  if (wants_discrepancy)
    cfg.discrepancy =
        parse_discrepancy(require(root, "config", "discrepancy"), "discrepancy");

  const json& seeds = require(root, "config", "seeds");
  if (!seeds.is_array() || seeds.empty())
    throw ConfigError("seeds", "expected a non-empty array of integers");
  int k = 0;
  for (const auto& s : seeds)
    cfg.seeds.push_back(as_seed(s, "seeds[" + std::to_string(k++) + "]"));

  if (root.contains("max_steps"))
    cfg.max_steps = positive_integer(root.at("max_steps"), "max_steps");
  if (root.contains("audit_interval"))
    cfg.audit_interval =
        static_cast<int>(positive_integer(root.at("audit_interval"), "audit_interval"));
  if (root.contains("track_lambda_min"))
    cfg.track_lambda_min = as_bool(root.at("track_lambda_min"), "track_lambda_min");
  if (root.contains("output_dir"))
    cfg.output_dir = as_string(root.at("output_dir"), "output_dir");
  if (root.contains("stopping")) {
    const json& st = root.at("stopping");
    if (!st.is_object()) throw ConfigError("stopping", "expected an object");
    reject_unknown_keys(st, "stopping", {"grad_eps", "hess_delta", "value_gap"});
    if (st.contains("grad_eps"))
      cfg.stop.grad_eps = positive_number(st.at("grad_eps"), "stopping.grad_eps");
    if (st.contains("hess_delta"))
      cfg.stop.hess_delta = positive_number(st.at("hess_delta"), "stopping.hess_delta");
    if (st.contains("value_gap"))
      cfg.stop.value_gap = positive_number(st.at("value_gap"), "stopping.value_gap");
  }
  if (root.contains("sweep_objective")) {
    cfg.sweep_objective = as_string(root.at("sweep_objective"), "sweep_objective");
    if (cfg.sweep_objective != "grad_calls_to_eps" &&
        cfg.sweep_objective != "final_grad_norm" && cfg.sweep_objective != "final_f")
      throw ConfigError("sweep_objective",
                        "expected grad_calls_to_eps, final_grad_norm, or final_f");
  }
  if (cfg.sweep_objective == "grad_calls_to_eps" && cmd == Command::Sweep &&
      !cfg.stop.grad_eps)
    throw ConfigError("stopping.grad_eps",
                      "required by sweep_objective grad_calls_to_eps");

  // Cross-field checks that need the built problem's shape.
  BuiltProblem built = build_problem(cfg.problem, "problem");
  int idx = 0;
  for (const auto& spec : cfg.algorithms) {
    const std::string path = "algorithms[" + std::to_string(idx++) + "]";
    const bool fed = spec.kind == "fledge";
    if (fed && !built.federated)
      throw ConfigError(path, "fledge requires a federated problem");
    if (!fed && !built.central)
      throw ConfigError(path, "centralized algorithm on a federated problem");
    if (!fed)
      for (int b : spec.b)
        if (b > built.central->components())
          throw ConfigError(path + ".b", "b exceeds the component count n=" +
                                             std::to_string(built.central->components()));
    if (fed)
      for (int p : spec.p)
        if (p > built.federated->clients())
          throw ConfigError(path + ".p", "p exceeds the client count P=" +
                                             std::to_string(built.federated->clients()));
  }
  if (cfg.discrepancy) {
    if (!built.central)
      throw ConfigError("discrepancy", "requires a centralized problem");
    if (cfg.discrepancy->b > built.central->components())
      throw ConfigError("discrepancy.b", "b exceeds the component count");
  }
  return cfg;
}

json ExperimentConfig::resolved() const {
  json out;
  out["problem"] = problem;
  if (!algorithms.empty()) {
    json algs = json::array();
    for (const auto& a : algorithms) {
      json ja;
      ja["kind"] = a.kind;
      ja["tag"] = a.tag;
      ja["eta"] = a.eta.size() == 1 ? json(a.eta.front()) : json(a.eta);
      ja["b"] = a.b.size() == 1 ? json(a.b.front()) : json(a.b);
      if (!a.m.empty()) ja["m"] = a.m.size() == 1 ? json(a.m.front()) : json(a.m);
      if (!a.p.empty()) ja["p"] = a.p.size() == 1 ? json(a.p.front()) : json(a.p);
      if (!a.K.empty()) ja["K"] = a.K.size() == 1 ? json(a.K.front()) : json(a.K);
      if (!a.r.empty()) ja["r"] = a.r.size() == 1 ? json(a.r.front()) : json(a.r);
      if (a.kind == "sledge" || a.kind == "fledge") {
        ja["option"] = (a.init == InitOption::FullTable) ? "II" : "I";
        ja["mode"] = (a.mode == TableMode::Efficient) ? "efficient" : "naive";
      }
      algs.push_back(ja);
    }
    out["algorithms"] = algs;
  }
  if (discrepancy) {
    json jd;
    jd["eta"] = discrepancy->eta;
    jd["b"] = discrepancy->b;
    jd["m"] = discrepancy->m;
    jd["steps"] = discrepancy->steps;
    jd["r"] = discrepancy->r;
    out["discrepancy"] = jd;
  }
  out["seeds"] = seeds;
  out["max_steps"] = max_steps;
  out["audit_interval"] = audit_interval;
  json st = json::object();
  if (stop.grad_eps) st["grad_eps"] = *stop.grad_eps;
  if (stop.hess_delta) st["hess_delta"] = *stop.hess_delta;
  if (stop.value_gap) st["value_gap"] = *stop.value_gap;
  if (!st.empty()) out["stopping"] = st;
  out["track_lambda_min"] = track_lambda_min;
  out["output_dir"] = output_dir;
  out["sweep_objective"] = sweep_objective;
  return out;
}

std::uint64_t seed_offset_from_env() {
  const char* env = std::getenv("SLEDGE_OPT_SEED_OFFSET");
  if (!env || !*env) return 0;
  char* end = nullptr;
  const long long v = std::strtoll(env, &end, 10);
  if (end == env || *end != '\0')
    throw ConfigError("SLEDGE_OPT_SEED_OFFSET", "expected an integer");
  return static_cast<std::uint64_t>(v);
}

}  // namespace sledge::cli
