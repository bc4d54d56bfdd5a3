#pragma once

// Flat "section.key = value" experiment configs. Grammar and keys are listed
// in README.md; unknown keys are rejected so typos fail loudly.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "neuclust/environment.hpp"
#include "neuclust/policy.hpp"

namespace neuclust::config {

struct NamedPolicy {
  std::string name;
  policy::PolicyKind kind = policy::PolicyKind::NeuClust;
  policy::PolicyConfig cfg;
};

enum class EnvSource { Synthetic, Files };

struct RunConfig {
  std::size_t T = 1000;
  std::vector<std::uint64_t> seeds{1};
  EnvSource source = EnvSource::Synthetic;
  /// Everything but contexts and items, which come from `synthetic` or `env_dir`.
  env::EnvSpec env;
  env::SyntheticSpec synthetic;
  /// When false the synthetic world is regenerated from each run seed.
  bool synthetic_seed_fixed = false;
  std::filesystem::path env_dir;
  std::vector<NamedPolicy> policies;
  std::filesystem::path out_dir = "out";
  bool emit_svg = true;
  std::size_t wcss_max_iter = 300;
  std::size_t wcss_restarts = 5;
};

/// `base_dir` resolves a relative env.dir.
RunConfig parse_config(std::string_view text, const std::filesystem::path& base_dir = {});
RunConfig load_config(const std::filesystem::path& path);

/// Throws InvalidArgument on the first violated constraint.
void validate(const RunConfig& cfg);

/// "1,2,5" or "1..10" (inclusive); used for run.seeds and wcss cluster lists.
std::vector<std::uint64_t> parse_uint_list(std::string_view text);

}  // namespace neuclust::config
