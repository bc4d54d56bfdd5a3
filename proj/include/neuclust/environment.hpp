#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "neuclust/linalg.hpp"

namespace neuclust::env {

using linalg::DenseMatrix;
using linalg::Vector;

enum class Arrival { Uniform, FixedSequence };

/// What a policy sees for each arm at the start of a round.
///   ItemMasked: the user profile restricted to the arriving item's genres,
///               a_z (.) x_i, divided by observation_scale.
///   Profile:    the raw user profile divided by observation_scale.
///   Joint:      [x_i / observation_scale, a_z], width 2d.
enum class Observation { ItemMasked, Profile, Joint };

/// Width of the observation vectors for profiles of dimension `d`.
std::size_t observation_dim(Observation obs, std::size_t d);

struct EnvSpec {
  std::size_t K = 5;
  /// N x d nonnegative user profiles (average rating per genre).
  DenseMatrix user_contexts;
  /// Z x d binary genre vectors, each with at least one active genre.
  DenseMatrix item_pool;
  Arrival arrival = Arrival::Uniform;
  /// Item indices cycled in order when arrival is FixedSequence.
  std::vector<std::size_t> fixed_sequence;
  double threshold_frac = 0.8;
  /// Rewrite profiles from observed rewards after each round.
  bool online_updates = false;
  double rating_scale = 1.0;
  /// Per-user per-genre rating counts backing the profile means; all
  /// ones when absent.
  std::optional<DenseMatrix> initial_counts;
  Observation observation = Observation::Joint;
  double observation_scale = 5.0;
  std::uint64_t seed = 0;

  std::size_t arm_count() const noexcept { return user_contexts.rows(); }
  std::size_t dim() const noexcept { return user_contexts.cols(); }
};

/// Throws InvalidArgument describing the first violated invariant.
void validate(const EnvSpec& spec);

/// mu = 2 / (1 + exp(-<a, x> / (2 |a (.) x|_0))) - 1, and 0 when the
/// supports of a and x do not overlap.
double true_mean(std::span<const double> item, std::span<const double> context);

/// Independent Bernoulli(mu_i) draws, returned as 0.0 / 1.0.
Vector sample_base_rewards(std::span<const double> means, std::mt19937_64& rng);

/// Integer success count needed: ceil(threshold_frac * K) with a small guard.
std::size_t success_threshold(std::size_t K, double threshold_frac);

/// 1 when at least success_threshold(K) of the base rewards are 1.
int super_reward(std::span<const double> base_rewards, double threshold_frac);

/// Distribution of the number of successes among independent Bernoulli(mu_i).
Vector poisson_binomial_pmf(std::span<const double> means);

/// P(#successes >= threshold) for the super arm with base means `means`.
double expected_super_reward(std::span<const double> means, double threshold_frac);

struct OptimalSet {
  std::vector<std::size_t> arms;  // ascending
  double value = 0.0;
};

/// Top-K arms by mean (ties to lower id) and their expected super reward.
/// The threshold reward is symmetric and coordinatewise monotone, so this is
/// the optimum over all K-subsets.
OptimalSet optimal_expected(std::span<const double> means, std::size_t K, double threshold_frac);

struct RoundOutcome {
  std::size_t round = 0;  // 1-based
  std::size_t item = 0;
  Vector means;
  std::vector<std::size_t> played;
  Vector base_rewards;
  int super_reward = 0;
  double regret = 0.0;
  double expected_super_played = 0.0;
  double expected_super_optimal = 0.0;
};

class Environment {
 public:
  explicit Environment(EnvSpec spec);

  std::size_t arm_count() const noexcept { return spec_.arm_count(); }
  std::size_t dim() const noexcept { return spec_.dim(); }
  std::size_t super_arm_size() const noexcept { return spec_.K; }
  const EnvSpec& spec() const noexcept { return spec_; }

  /// Draws the arriving item for the next round and refreshes observations.
  /// Calling it again before step() is a no-op.
  void begin_round();

  /// Arm features handed to policies for the pending round.
  const DenseMatrix& observations() const noexcept { return observations_; }
  /// Current user profiles; the clustering features.
  const DenseMatrix& profiles() const noexcept { return profiles_; }
  /// True base means for the pending round.
  std::span<const double> current_means() const noexcept { return means_; }
  std::size_t current_item() const noexcept { return item_; }
  std::size_t rounds_played() const noexcept { return round_; }

  /// Plays `super_arm` in the pending round (starting one if needed),
  /// samples base rewards and scores regret against the optimum. In online
  /// mode the played arms' profiles are updated afterwards.
  RoundOutcome step(std::span<const std::size_t> super_arm);

  /// Running-mean update of `arm`'s profile on the genres active in `item`.
  void update_context(std::size_t arm, std::span<const double> item, double reward);

 private:
  void refresh_observations();

  EnvSpec spec_;
  DenseMatrix profiles_;
  DenseMatrix counts_;
  DenseMatrix sums_;
  DenseMatrix observations_;
  Vector means_;
  std::size_t item_ = 0;
  std::size_t round_ = 0;
  bool pending_ = false;
  std::mt19937_64 arrival_rng_;
  std::mt19937_64 reward_rng_;
};

struct SyntheticSpec {
  std::size_t arms = 100;
  std::size_t dim = 20;
  std::size_t planted_clusters = 10;
  std::size_t items = 200;
  std::size_t min_item_genres = 1;
  std::size_t max_item_genres = 4;
  double noise = 0.1;
  /// Probability that a blob center leaves a genre unrated (exactly 0).
  double unrated_prob = 0.0;
  /// Perturb unrated center coordinates too (clipped noise then leaves
  /// small positive "ratings" on about half of them).
  bool noise_on_unrated = false;
  double min_rating = 0.5;
  double max_rating = 5.0;
  std::uint64_t seed = 0;
};

struct SyntheticWorld {
  DenseMatrix user_contexts;
  DenseMatrix item_pool;
  std::vector<std::size_t> planted_labels;
};

/// Clustered users: blob centers on the nonnegative orthant, Gaussian
/// within-blob noise clipped at 0; items with a random number of genres.
SyntheticWorld make_synthetic(const SyntheticSpec& spec);

/// Top-K indices by descending score, ties to the lower index.
std::vector<std::size_t> top_k_indices(std::span<const double> scores, std::size_t K);

}  // namespace neuclust::env
