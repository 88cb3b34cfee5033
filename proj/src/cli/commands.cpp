#include "sledge/cli/commands.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <future>
#include <iostream>
#include <limits>
#include <tuple>

namespace sledge::cli {

namespace fs = std::filesystem;

namespace {

json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file " + path);
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw ConfigError(path, std::string("JSON parse error: ") + e.what());
  }
  return j;
}

// JSON forbids inf/nan; encode them as strings so summaries stay loadable.
json json_number(double v) {
  if (std::isfinite(v)) return v;
  return std::isnan(v) ? json("nan") : json(v > 0 ? "inf" : "-inf");
}

void write_json_file(const std::string& path, const json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << j.dump(2) << '\n';
  if (!out) throw std::runtime_error("write failed for " + path);
}

struct LoadedConfig {
  ExperimentConfig cfg;
  BuiltProblem problem;
  std::string out_dir;
};

LoadedConfig prepare(const CliOptions& opts, Command cmd) {
  LoadedConfig lc;
  const json root = load_json_file(opts.config_path);
  lc.cfg = parse_config(root, cmd);
  lc.problem = build_problem(lc.cfg.problem, "problem");
  lc.out_dir = opts.out_override.empty() ? lc.cfg.output_dir : opts.out_override;
  const std::uint64_t offset = seed_offset_from_env();
  for (auto& s : lc.cfg.seeds) s += offset;
  return lc;
}

struct RunJob {
  AlgorithmSetting setting;
  std::uint64_t seed;
  std::string csv_name;
};

struct RunOutcome {
  RunResult result;
  double wall_seconds = 0.0;
};

RunOutcome execute(const RunJob& job, const LoadedConfig& lc, Exec exec) {
  RunOptions ropts;
  ropts.seed = job.seed;
  ropts.max_steps = lc.cfg.max_steps;
  ropts.audit_interval = lc.cfg.audit_interval;
  ropts.stop = lc.cfg.stop;
  ropts.track_lambda_min = lc.cfg.track_lambda_min;
  ropts.exec = exec;

  const auto& s = job.setting;
  const auto start = std::chrono::steady_clock::now();
  RunOutcome out;
  if (s.kind == "sledge") {
    SledgeConfig cfg;
    cfg.eta = s.eta;
    cfg.b = s.b;
    cfg.r = s.r;
    cfg.mode = s.mode;
    cfg.init = s.init;
    out.result = run_sledge(*lc.problem.central, cfg, ropts);
  } else if (s.kind == "sgd") {
    out.result = run_sgd(*lc.problem.central, SgdConfig{s.eta, s.b}, ropts);
  } else if (s.kind == "saga") {
    out.result = run_saga(*lc.problem.central, SagaConfig{s.eta, s.b}, ropts);
  } else if (s.kind == "sarah") {
    out.result = run_sarah(*lc.problem.central, SarahConfig{s.eta, s.b, s.m, s.r}, ropts);
  } else if (s.kind == "fledge") {
    FledgeConfig cfg;
    cfg.eta = s.eta;
    cfg.p = s.p;
    cfg.b = s.b;
    cfg.K = s.K;
    cfg.r = s.r;
    cfg.mode = s.mode;
    cfg.init = s.init;
    out.result = run_fledge(*lc.problem.federated, cfg, ropts);
  } else {
    throw std::logic_error("execute: unhandled kind " + s.kind);
  }
  out.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

// Bounded-parallel execution over jobs.  Runs are independent; output order
// is fixed by the caller's job order, so --jobs never changes file bytes.
std::vector<RunOutcome> execute_all(const std::vector<RunJob>& jobs,
                                    const LoadedConfig& lc, int parallel) {
  std::vector<RunOutcome> outcomes(jobs.size());
  if (parallel <= 1) {
    for (std::size_t i = 0; i < jobs.size(); ++i)
      outcomes[i] = execute(jobs[i], lc, Exec::Parallel);
    return outcomes;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::future<void>> workers;
  const int width = std::min<int>(parallel, static_cast<int>(jobs.size()));
  for (int w = 0; w < width; ++w)
    workers.push_back(std::async(std::launch::async, [&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= jobs.size()) return;
        outcomes[i] = execute(jobs[i], lc, Exec::Serial);
      }
    }));
  for (auto& w : workers) w.get();
  return outcomes;
}

json run_summary_entry(const RunJob& job, const RunOutcome& out) {
  json e;
  e["tag"] = job.setting.tag;
  e["seed"] = job.seed;
  e["params"] = job.setting.params();
  e["status"] = to_string(out.result.status);
  e["steps"] = out.result.steps;
  e["grad_calls"] = out.result.grad_calls;
  if (out.result.vectors_sent >= 0) e["vectors_sent"] = out.result.vectors_sent;
  e["final_f"] = json_number(out.result.final_f);
  e["final_grad_norm"] = json_number(out.result.final_grad_norm);
  e["wall_time_s"] = out.wall_seconds;
  e["csv"] = job.csv_name;
  return e;
}

void write_outputs(const std::string& out_dir, const std::vector<RunJob>& jobs,
                   const std::vector<RunOutcome>& outcomes) {
  fs::create_directories(out_dir);
  for (std::size_t i = 0; i < jobs.size(); ++i)
    write_trace_csv_file((fs::path(out_dir) / jobs[i].csv_name).string(),
                         outcomes[i].result.trace);
}

int guarded(const std::function<int()>& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
}

}  // namespace

int cmd_run(const CliOptions& opts) {
  return guarded([&] {
    LoadedConfig lc = prepare(opts, Command::Run);
    std::vector<RunJob> jobs;
    for (const auto& spec : lc.cfg.algorithms) {
      const auto settings = expand_grid(spec);
      if (settings.size() != 1)
        throw ConfigError("algorithms", "run expects single-valued settings");
      for (const auto seed : lc.cfg.seeds)
        jobs.push_back({settings.front(), seed,
                        settings.front().tag + "_" + std::to_string(seed) + ".csv"});
    }
    // Sorted (tag, seed) processing keeps summaries and files stable.
    std::sort(jobs.begin(), jobs.end(), [](const RunJob& a, const RunJob& b) {
      return std::tie(a.setting.tag, a.seed) < std::tie(b.setting.tag, b.seed);
    });
    const auto outcomes = execute_all(jobs, lc, opts.jobs);
    write_outputs(lc.out_dir, jobs, outcomes);

    json summary;
    summary["command"] = "run";
    summary["config"] = lc.cfg.resolved();
    json runs = json::array();
    for (std::size_t i = 0; i < jobs.size(); ++i)
      runs.push_back(run_summary_entry(jobs[i], outcomes[i]));
    summary["runs"] = runs;
    write_json_file((fs::path(lc.out_dir) / "summary.json").string(), summary);
    std::cout << "run: " << jobs.size() << " runs -> " << lc.out_dir << '\n';
    return 0;
  });
}

int cmd_sweep(const CliOptions& opts) {
  return guarded([&] {
    LoadedConfig lc = prepare(opts, Command::Sweep);
    struct Group {
      std::string tag;
      std::vector<std::size_t> job_ids;  // per setting x seed
      std::vector<AlgorithmSetting> settings;
    };
    std::vector<RunJob> jobs;
    std::vector<Group> groups;
    for (const auto& spec : lc.cfg.algorithms) {
      Group g;
      g.tag = spec.tag;
      g.settings = expand_grid(spec);
      for (std::size_t gi = 0; gi < g.settings.size(); ++gi)
        for (const auto seed : lc.cfg.seeds) {
          g.job_ids.push_back(jobs.size());
          jobs.push_back({g.settings[gi], seed,
                          spec.tag + "_g" + std::to_string(gi) + "_" +
                              std::to_string(seed) + ".csv"});
        }
      groups.push_back(std::move(g));
    }
    const auto outcomes = execute_all(jobs, lc, opts.jobs);
    write_outputs(lc.out_dir, jobs, outcomes);

    const auto objective = [&](const RunOutcome& out) {
      if (out.result.status == RunStatus::Diverged)
        return std::numeric_limits<double>::infinity();
      if (lc.cfg.sweep_objective == "grad_calls_to_eps")
        return out.result.status == RunStatus::Converged
                   ? static_cast<double>(out.result.grad_calls)
                   : std::numeric_limits<double>::infinity();
      if (lc.cfg.sweep_objective == "final_grad_norm")
        return out.result.final_grad_norm;
      return out.result.final_f;
    };

    json summary;
    summary["command"] = "sweep";
    summary["config"] = lc.cfg.resolved();
    summary["objective"] = lc.cfg.sweep_objective;
    json jgroups = json::array();
    for (const auto& g : groups) {
      json jg;
      jg["tag"] = g.tag;
      json jsettings = json::array();
      double best_val = std::numeric_limits<double>::infinity();
      std::size_t best_idx = 0;
      const std::size_t per = lc.cfg.seeds.size();
      for (std::size_t gi = 0; gi < g.settings.size(); ++gi) {
        json js;
        js["index"] = gi;
        js["params"] = g.settings[gi].params();
        std::vector<double> vals;
        json jruns = json::array();
        bool any_diverged = false;
        for (std::size_t si = 0; si < per; ++si) {
          const std::size_t id = g.job_ids[gi * per + si];
          vals.push_back(objective(outcomes[id]));
          any_diverged |= outcomes[id].result.status == RunStatus::Diverged;
          jruns.push_back(run_summary_entry(jobs[id], outcomes[id]));
        }
        const double med = median(vals);
        js["objective_median"] = json_number(med);
        js["any_diverged"] = any_diverged;
        js["runs"] = jruns;
        jsettings.push_back(js);
        if (med < best_val) {
          best_val = med;
          best_idx = gi;
        }
      }
      jg["settings"] = jsettings;
      jg["best_index"] = best_idx;
      jg["best_params"] = g.settings[best_idx].params();
      jg["best_objective_median"] = json_number(best_val);
      jgroups.push_back(jg);
    }
    summary["groups"] = jgroups;
    write_json_file((fs::path(lc.out_dir) / "summary.json").string(), summary);
    std::cout << "sweep: " << jobs.size() << " runs -> " << lc.out_dir << '\n';
    return 0;
  });
}

int cmd_discrepancy(const CliOptions& opts) {
  return guarded([&] {
    LoadedConfig lc = prepare(opts, Command::Discrepancy);
    const DiscrepancySpec& d = *lc.cfg.discrepancy;
    DiscrepancyConfig dcfg;
    dcfg.eta = d.eta;
    dcfg.b = d.b;
    dcfg.m = d.m;
    dcfg.steps = d.steps;
    dcfg.r = d.r;
    dcfg.seeds = lc.cfg.seeds;
    dcfg.exec = opts.jobs > 1 ? Exec::Serial : Exec::Parallel;
    const DiscrepancyReport rep =
        compare_estimator_discrepancy(*lc.problem.central, dcfg);

    fs::create_directories(lc.out_dir);
    std::ofstream csv(fs::path(lc.out_dir) / "discrepancy.csv", std::ios::binary);
    if (!csv) throw std::runtime_error("cannot open discrepancy.csv");
    csv << "step";
    for (const auto& a : rep.algorithms) csv << ',' << a << "_median";
    csv << '\n';
    for (long t = 0; t < d.steps; ++t) {
      csv << t;
      for (std::size_t a = 0; a < rep.algorithms.size(); ++a) {
        std::vector<double> at;
        for (const auto& per_seed : rep.series[a])
          at.push_back(per_seed[static_cast<std::size_t>(t)]);
        csv << ',' << format_double(median(std::move(at)));
      }
      csv << '\n';
    }
    if (!csv) throw std::runtime_error("write failed for discrepancy.csv");

    json summary;
    summary["command"] = "discrepancy";
    summary["config"] = lc.cfg.resolved();
    json med;
    for (std::size_t a = 0; a < rep.algorithms.size(); ++a)
      med[rep.algorithms[a]] = json_number(rep.pooled_median[a]);
    summary["pooled_median"] = med;
    summary["ratio_sledge_over_saga"] =
        json_number(rep.median_of("sledge") / rep.median_of("saga"));
    summary["ratio_sledge_over_sarah"] =
        json_number(rep.median_of("sledge") / rep.median_of("sarah"));
    summary["csv"] = "discrepancy.csv";
    write_json_file((fs::path(lc.out_dir) / "summary.json").string(), summary);
    std::cout << "discrepancy: medians sledge=" << rep.median_of("sledge")
              << " saga=" << rep.median_of("saga")
              << " sarah=" << rep.median_of("sarah") << '\n';
    return 0;
  });
}

int cmd_validate(const CliOptions& opts) {
  return guarded([&] {
    const json root = load_json_file(opts.config_path);
    const ExperimentConfig cfg = parse_config(root, Command::Validate);
    build_problem(cfg.problem, "problem");
    std::cout << cfg.resolved().dump(2) << '\n';
    return 0;
  });
}

}  // namespace sledge::cli
