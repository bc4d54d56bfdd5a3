#include "neuclust/harness.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <iostream>
#include <map>
#include <mutex>
#include <optional>
#include <thread>

#include "neuclust/clustering.hpp"
#include "neuclust/error.hpp"
#include "neuclust/ingest.hpp"
#include "neuclust/svg.hpp"
#include "neuclust/textio.hpp"

namespace neuclust::harness {

using textio::fmt17;

RunFailure::RunFailure(std::string policy, std::uint64_t seed, std::size_t round, const std::string& cause)
    : std::runtime_error("run failed: policy=" + policy + " seed=" + std::to_string(seed) +
                         " round=" + std::to_string(round) + ": " + cause),
      policy_(std::move(policy)),
      seed_(seed),
      round_(round) {}

std::size_t worker_count(std::size_t jobs) {
  std::size_t n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* v = std::getenv(kWorkersEnv); v != nullptr && *v != '\0') {
    char* end = nullptr;
    const long cap = std::strtol(v, &end, 10);
    if (end != v && *end == '\0' && cap >= 1) n = static_cast<std::size_t>(cap);
  }
  return std::max<std::size_t>(1, std::min(n, jobs));
}

namespace {

env::EnvSpec make_spec(const config::RunConfig& cfg, std::uint64_t seed,
                       const ingest::EnvInputs* files) {
  env::EnvSpec spec = cfg.env;
  spec.seed = seed;
  if (cfg.source == config::EnvSource::Synthetic) {
    env::SyntheticSpec s = cfg.synthetic;
    if (!cfg.synthetic_seed_fixed) s.seed = seed;
    auto world = env::make_synthetic(s);
    spec.user_contexts = std::move(world.user_contexts);
    spec.item_pool = std::move(world.item_pool);
  } else {
    if (files == nullptr) throw InternalConsistencyError("file environment without loaded inputs");
    spec.user_contexts = files->contexts;
    spec.item_pool = files->items;
    spec.initial_counts = files->counts;
  }
  return spec;
}

std::optional<ingest::EnvInputs> load_files(const config::RunConfig& cfg) {
  if (cfg.source != config::EnvSource::Files) return std::nullopt;
  return ingest::read_env_inputs(cfg.env_dir);
}

std::string join_ids(const std::vector<std::size_t>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ' ';
    s += std::to_string(v[i]);
  }
  return s;
}

std::string join_rewards(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ' ';
    s += v[i] != 0.0 ? '1' : '0';
  }
  return s;
}

SeedRun run_with_spec(const config::RunConfig& cfg, const config::NamedPolicy& pol, std::uint64_t seed,
                      env::EnvSpec spec, const std::filesystem::path& rounds_csv) {
  SeedRun out;
  out.policy = pol.name;
  out.seed = seed;
  std::string csv = "t,cluster,arms,base_rewards,super_reward,regret,cum_regret,cum_reward\n";
  const auto start = std::chrono::steady_clock::now();
  std::size_t t = 0;
  auto flush = [&] {
    if (!rounds_csv.empty()) textio::write_file(rounds_csv, csv);
  };
  try {
    env::Environment e(std::move(spec));
    policy::PolicyConfig pc = pol.cfg;
    pc.rng_seed = seed;
    auto p = policy::make_policy(pol.kind, pc, e.arm_count(), e.observations().cols());
    double cum_regret = 0.0, cum_reward = 0.0;
    out.cum_regret.reserve(cfg.T);
    out.cum_reward.reserve(cfg.T);
    for (t = 1; t <= cfg.T; ++t) {
      e.begin_round();
      const policy::RoundContext ctx{e.observations(), e.profiles(), e.current_means(), t};
      const auto sel = p->select(ctx);
      const auto res = e.step(sel.super_arm);
      p->observe(ctx, sel, res.base_rewards, static_cast<double>(res.super_reward));
      cum_regret += res.regret;
      cum_reward += res.super_reward;
      out.cum_regret.push_back(cum_regret);
      out.cum_reward.push_back(cum_reward);
      csv += std::to_string(t) + ',' + std::to_string(sel.cluster_id) + ',' + join_ids(res.played) + ',' +
             join_rewards(res.base_rewards) + ',' + std::to_string(res.super_reward) + ',' +
             fmt17(res.regret) + ',' + fmt17(cum_regret) + ',' + fmt17(cum_reward) + '\n';
    }
  } catch (const std::exception& ex) {
    try {
      flush();
    } catch (...) {
    }
    throw RunFailure(pol.name, seed, t, ex.what());
  }
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  flush();
  return out;
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

void write_svgs(const config::RunConfig& cfg, const RunSummary& summary) {
  svg::Chart regret{"Cumulative regret", "round", "cumulative regret", {}};
  svg::Chart reward{"Cumulative reward", "round", "cumulative reward", {}};
  for (const auto& p : cfg.policies) {
    std::vector<const SeedRun*> runs;
    for (const auto& r : summary.runs)
      if (r.policy == p.name) runs.push_back(&r);
    svg::Series sr{p.name, {}, {}, {}}, sw{p.name, {}, {}, {}};
    for (std::size_t t = 0; t < cfg.T; ++t) {
      std::vector<double> a, b;
      for (auto* r : runs) {
        a.push_back(r->cum_regret[t]);
        b.push_back(r->cum_reward[t]);
      }
      const double x = static_cast<double>(t + 1);
      sr.x.push_back(x);
      sr.y.push_back(mean_of(a));
      sr.spread.push_back(sample_std(a));
      sw.x.push_back(x);
      sw.y.push_back(mean_of(b));
      sw.spread.push_back(sample_std(b));
    }
    regret.series.push_back(std::move(sr));
    reward.series.push_back(std::move(sw));
  }
  textio::write_file(cfg.out_dir / "cum_regret.svg", svg::render(regret));
  textio::write_file(cfg.out_dir / "cum_reward.svg", svg::render(reward));
}

}  // namespace

env::EnvSpec build_env_spec(const config::RunConfig& cfg, std::uint64_t seed) {
  const auto files = load_files(cfg);
  return make_spec(cfg, seed, files ? &*files : nullptr);
}

SeedRun run_single(const config::RunConfig& cfg, const config::NamedPolicy& pol, std::uint64_t seed,
                   const std::filesystem::path& rounds_csv) {
  return run_with_spec(cfg, pol, seed, build_env_spec(cfg, seed), rounds_csv);
}

double sample_std(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

RunSummary run_experiment(const config::RunConfig& cfg, std::ostream* table) {
  config::validate(cfg);
  const auto files = load_files(cfg);
  std::filesystem::create_directories(cfg.out_dir);

  struct Job {
    std::size_t policy;
    std::size_t seed;
  };
  std::vector<Job> jobs;
  for (std::size_t p = 0; p < cfg.policies.size(); ++p)
    for (std::size_t s = 0; s < cfg.seeds.size(); ++s) jobs.push_back({p, s});

  std::vector<std::optional<SeedRun>> results(jobs.size());
  std::vector<std::exception_ptr> errors(jobs.size());
  std::atomic<std::size_t> next{0};
  std::atomic<bool> stop{false};
  auto worker = [&] {
    while (!stop.load()) {
      const std::size_t j = next.fetch_add(1);
      if (j >= jobs.size()) return;
      const auto& pol = cfg.policies[jobs[j].policy];
      const auto seed = cfg.seeds[jobs[j].seed];
      const auto csv = cfg.out_dir / ("rounds_" + pol.name + "_" + std::to_string(seed) + ".csv");
      try {
        results[j] = run_with_spec(cfg, pol, seed, make_spec(cfg, seed, files ? &*files : nullptr), csv);
      } catch (const RunFailure&) {
        errors[j] = std::current_exception();
        stop = true;
      } catch (const std::exception& ex) {
        errors[j] = std::make_exception_ptr(RunFailure(pol.name, seed, 0, ex.what()));
        stop = true;
      }
    }
  };
  const std::size_t n_workers = worker_count(jobs.size());
  if (n_workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < n_workers; ++w) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  RunSummary summary;
  for (auto& r : results) summary.runs.push_back(std::move(*r));

  std::string summary_csv =
      "policy,runs,mean_cum_regret,std_cum_regret,mean_cum_reward,std_cum_reward,mean_seconds\n";
  for (std::size_t p = 0; p < cfg.policies.size(); ++p) {
    const auto& name = cfg.policies[p].name;
    std::vector<const SeedRun*> runs;
    for (const auto& r : summary.runs)
      if (r.policy == name) runs.push_back(&r);
    std::string curve = "t,mean_cum_regret,std_cum_regret,mean_cum_reward,std_cum_reward\n";
    for (std::size_t t = 0; t < cfg.T; ++t) {
      std::vector<double> a, b;
      for (auto* r : runs) {
        a.push_back(r->cum_regret[t]);
        b.push_back(r->cum_reward[t]);
      }
      curve += std::to_string(t + 1) + ',' + fmt17(mean_of(a)) + ',' + fmt17(sample_std(a)) + ',' +
               fmt17(mean_of(b)) + ',' + fmt17(sample_std(b)) + '\n';
    }
    textio::write_file(cfg.out_dir / ("curve_" + name + ".csv"), curve);

    PolicySummary ps;
    ps.policy = name;
    ps.runs = runs.size();
    std::vector<double> fr, fw, secs;
    for (auto* r : runs) {
      fr.push_back(r->cum_regret.back());
      fw.push_back(r->cum_reward.back());
      secs.push_back(r->seconds);
    }
    ps.mean_regret = mean_of(fr);
    ps.std_regret = sample_std(fr);
    ps.mean_reward = mean_of(fw);
    ps.std_reward = sample_std(fw);
    ps.mean_seconds = mean_of(secs);
    summary_csv += name + ',' + std::to_string(ps.runs) + ',' + fmt17(ps.mean_regret) + ',' +
                   fmt17(ps.std_regret) + ',' + fmt17(ps.mean_reward) + ',' + fmt17(ps.std_reward) + ',' +
                   textio::fmt9(ps.mean_seconds) + '\n';
    summary.policies.push_back(ps);
  }
  textio::write_file(cfg.out_dir / "summary.csv", summary_csv);

  if (cfg.emit_svg) {
    // Plots are a convenience; a failure here never fails the run.
    try {
      write_svgs(cfg, summary);
    } catch (const std::exception& ex) {
      std::cerr << "warning: svg output skipped: " << ex.what() << '\n';
    }
  }
  if (table != nullptr) *table << format_summary_table(summary);
  return summary;
}

std::string format_summary_table(const RunSummary& s) {
  std::string out;
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-14s %5s %24s %24s %10s\n", "policy", "runs", "cum. regret (mean+-std)",
                "cum. reward (mean+-std)", "seconds");
  out += buf;
  for (const auto& p : s.policies) {
    char reg[64], rew[64];
    std::snprintf(reg, sizeof reg, "%.2f +- %.2f", p.mean_regret, p.std_regret);
    std::snprintf(rew, sizeof rew, "%.1f +- %.1f", p.mean_reward, p.std_reward);
    std::snprintf(buf, sizeof buf, "%-14s %5zu %24s %24s %10.1f\n", p.policy.c_str(), p.runs, reg, rew,
                  p.mean_seconds);
    out += buf;
  }
  return out;
}

std::vector<std::pair<std::size_t, double>> emit_wcss(const config::RunConfig& cfg,
                                                      const std::vector<std::size_t>& clusters) {
  if (clusters.empty()) throw InvalidArgument("wcss: no cluster counts given");
  const std::uint64_t seed = cfg.seeds.empty() ? 0 : cfg.seeds.front();
  const auto spec = build_env_spec(cfg, seed);
  const auto sweep =
      clustering::wcss_sweep(spec.user_contexts, clusters, cfg.wcss_max_iter, seed, cfg.wcss_restarts);
  std::string csv = "clusters,wcss\n";
  svg::Series line{"WCSS", {}, {}, {}};
  for (const auto& [k, w] : sweep) {
    csv += std::to_string(k) + ',' + fmt17(w) + '\n';
    line.x.push_back(static_cast<double>(k));
    line.y.push_back(w);
  }
  textio::write_file(cfg.out_dir / "wcss.csv", csv);
  if (cfg.emit_svg) {
    try {
      textio::write_file(cfg.out_dir / "wcss.svg",
                         svg::render({"Within-cluster sum of squares", "clusters", "WCSS", {line}}));
    } catch (const std::exception& ex) {
      std::cerr << "warning: svg output skipped: " << ex.what() << '\n';
    }
  }
  return sweep;
}

}  // namespace neuclust::harness
