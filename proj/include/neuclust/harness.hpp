#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "neuclust/config.hpp"
#include "neuclust/environment.hpp"

namespace neuclust::harness {

/// Worker cap read from this environment variable; default is the hardware
/// concurrency.
inline constexpr const char* kWorkersEnv = "NEUCLUST_WORKERS";
std::size_t worker_count(std::size_t jobs);

/// A run failed; identifies where.
class RunFailure : public std::runtime_error {
 public:
  RunFailure(std::string policy, std::uint64_t seed, std::size_t round, const std::string& cause);
  const std::string& policy() const noexcept { return policy_; }
  std::uint64_t seed() const noexcept { return seed_; }
  std::size_t round() const noexcept { return round_; }

 private:
  std::string policy_;
  std::uint64_t seed_;
  std::size_t round_;
};

/// Environment for one run seed: the synthetic world for that seed, or the
/// ingested files.
env::EnvSpec build_env_spec(const config::RunConfig& cfg, std::uint64_t seed);

struct SeedRun {
  std::string policy;
  std::uint64_t seed = 0;
  std::vector<double> cum_regret;  // per round
  std::vector<double> cum_reward;
  double seconds = 0.0;
};

struct PolicySummary {
  std::string policy;
  std::size_t runs = 0;
  double mean_regret = 0.0;
  double std_regret = 0.0;
  double mean_reward = 0.0;
  double std_reward = 0.0;
  double mean_seconds = 0.0;
};

struct RunSummary {
  std::vector<PolicySummary> policies;
  /// policies x seeds, in config order.
  std::vector<SeedRun> runs;
};

/// One (policy, seed) run; writes rounds_<policy>_<seed>.csv when
/// `rounds_csv` is nonempty.
SeedRun run_single(const config::RunConfig& cfg, const config::NamedPolicy& pol,
                   std::uint64_t seed, const std::filesystem::path& rounds_csv);

/// Runs every (policy, seed) pair on worker threads and writes the per-run
/// and aggregate CSVs, summary.csv and optional SVG charts under
/// cfg.out_dir. The summary table goes to `table` when given.
RunSummary run_experiment(const config::RunConfig& cfg, std::ostream* table = nullptr);

/// Sample standard deviation (0 for fewer than two values).
double sample_std(const std::vector<double>& v);

std::string format_summary_table(const RunSummary& s);

/// WCSS for each cluster count over the first seed's contexts; writes
/// wcss.csv (and wcss.svg) under cfg.out_dir.
std::vector<std::pair<std::size_t, double>> emit_wcss(const config::RunConfig& cfg,
                                                      const std::vector<std::size_t>& clusters);

}  // namespace neuclust::harness
