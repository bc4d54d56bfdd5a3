#include "neuclust/environment.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "neuclust/error.hpp"

namespace neuclust::env {

void validate(const EnvSpec& spec) {
  const std::size_t n = spec.arm_count();
  const std::size_t d = spec.dim();
  if (n == 0 || d == 0) throw InvalidArgument("environment: empty user contexts");
  if (spec.K == 0 || spec.K > n)
    throw InvalidArgument("environment: super arm size " + std::to_string(spec.K) +
                          " must be in [1, " + std::to_string(n) + "]");
  for (double v : spec.user_contexts.data())
    if (!(v >= 0.0) || !std::isfinite(v))
      throw InvalidArgument("environment: user contexts must be finite and nonnegative");
  if (spec.item_pool.rows() == 0) throw InvalidArgument("environment: empty item pool");
  if (spec.item_pool.cols() != d)
    throw InvalidArgument("environment: item dimension " + std::to_string(spec.item_pool.cols()) +
                          " != context dimension " + std::to_string(d));
  for (std::size_t z = 0; z < spec.item_pool.rows(); ++z) {
    bool any = false;
    for (double v : spec.item_pool.row(z)) {
      if (v != 0.0 && v != 1.0) throw InvalidArgument("environment: item vectors must be binary");
      any = any || v == 1.0;
    }
    if (!any) throw InvalidArgument("environment: item " + std::to_string(z) + " has no genre");
  }
  if (!(spec.threshold_frac > 0.0 && spec.threshold_frac <= 1.0))
    throw InvalidArgument("environment: threshold fraction must be in (0, 1]");
  if (spec.arrival == Arrival::FixedSequence) {
    if (spec.fixed_sequence.empty()) throw InvalidArgument("environment: empty fixed sequence");
    for (auto z : spec.fixed_sequence)
      if (z >= spec.item_pool.rows()) throw InvalidArgument("environment: sequence item out of range");
  }
  if (!(spec.observation_scale > 0.0)) throw InvalidArgument("environment: observation scale must be > 0");
  if (spec.initial_counts) {
    const auto& c = *spec.initial_counts;
    if (c.rows() != n || c.cols() != d) throw InvalidArgument("environment: count matrix shape mismatch");
    for (double v : c.data())
      if (!(v >= 0.0)) throw InvalidArgument("environment: counts must be nonnegative");
  }
}

std::size_t observation_dim(Observation obs, std::size_t d) {
  return obs == Observation::Joint ? 2 * d : d;
}

double true_mean(std::span<const double> item, std::span<const double> context) {
  if (item.size() != context.size()) throw InvalidArgument("true_mean: dimension mismatch");
  double inner = 0.0;
  std::size_t overlap = 0;
  for (std::size_t j = 0; j < item.size(); ++j) {
    const double prod = item[j] * context[j];
    inner += prod;
    if (prod != 0.0) ++overlap;
  }
  if (overlap == 0) return 0.0;
  const double arg = inner / (2.0 * static_cast<double>(overlap));
  return 2.0 / (1.0 + std::exp(-arg)) - 1.0;
}

Vector sample_base_rewards(std::span<const double> means, std::mt19937_64& rng) {
  Vector out(means.size());
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (std::size_t i = 0; i < means.size(); ++i) {
    const double mu = means[i];
    if (!(mu >= -1e-12 && mu <= 1.0 + 1e-12))
      throw InvalidArgument("sample_base_rewards: mean " + std::to_string(mu) + " outside [0, 1]");
    // One uniform per arm keeps the stream aligned regardless of mu.
    const double u = unit(rng);
    out[i] = u < mu ? 1.0 : 0.0;
  }
  return out;
}

std::size_t success_threshold(std::size_t K, double threshold_frac) {
  return static_cast<std::size_t>(std::ceil(threshold_frac * static_cast<double>(K) - 1e-9));
}

int super_reward(std::span<const double> base_rewards, double threshold_frac) {
  double sum = 0.0;
  for (double r : base_rewards) sum += r;
  const auto need = success_threshold(base_rewards.size(), threshold_frac);
  return sum + 1e-9 >= static_cast<double>(need) ? 1 : 0;
}

Vector poisson_binomial_pmf(std::span<const double> means) {
  Vector pmf(means.size() + 1, 0.0);
  pmf[0] = 1.0;
  for (std::size_t i = 0; i < means.size(); ++i) {
    const double p = std::clamp(means[i], 0.0, 1.0);
    for (std::size_t k = i + 1; k > 0; --k) pmf[k] = pmf[k] * (1.0 - p) + pmf[k - 1] * p;
    pmf[0] *= 1.0 - p;
  }
  return pmf;
}

double expected_super_reward(std::span<const double> means, double threshold_frac) {
  const Vector pmf = poisson_binomial_pmf(means);
  const std::size_t need = success_threshold(means.size(), threshold_frac);
  double tail = 0.0;
  for (std::size_t k = need; k < pmf.size(); ++k) tail += pmf[k];
  return std::clamp(tail, 0.0, 1.0);
}

std::vector<std::size_t> top_k_indices(std::span<const double> scores, std::size_t K) {
  if (K > scores.size())
    throw InvalidArgument("top_k: K=" + std::to_string(K) + " exceeds " + std::to_string(scores.size()));
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(K), idx.end(),
                    [&](std::size_t a, std::size_t b) {
                      return scores[a] > scores[b] || (scores[a] == scores[b] && a < b);
                    });
  idx.resize(K);
  return idx;
}

OptimalSet optimal_expected(std::span<const double> means, std::size_t K, double threshold_frac) {
  OptimalSet best;
  best.arms = top_k_indices(means, K);
  Vector chosen;
  for (auto a : best.arms) chosen.push_back(means[a]);
  best.value = expected_super_reward(chosen, threshold_frac);
  std::sort(best.arms.begin(), best.arms.end());
  return best;
}

// ---------------------------------------------------------------- Environment

Environment::Environment(EnvSpec spec)
    : spec_(std::move(spec)),
      arrival_rng_(spec_.seed ^ 0xA5A5A5A5DEADBEEFULL),
      reward_rng_(spec_.seed ^ 0x5EED5EED12345678ULL) {
  validate(spec_);
  profiles_ = spec_.user_contexts;
  counts_ = spec_.initial_counts ? *spec_.initial_counts
                                 : DenseMatrix(arm_count(), dim(), 1.0);
  sums_ = DenseMatrix(arm_count(), dim());
  for (std::size_t i = 0; i < arm_count(); ++i)
    for (std::size_t j = 0; j < dim(); ++j) sums_(i, j) = profiles_(i, j) * counts_(i, j);
  observations_ = DenseMatrix(arm_count(), observation_dim(spec_.observation, dim()));
  means_.assign(arm_count(), 0.0);
}

void Environment::begin_round() {
  if (pending_) return;
  if (spec_.arrival == Arrival::Uniform) {
    item_ = std::uniform_int_distribution<std::size_t>(0, spec_.item_pool.rows() - 1)(arrival_rng_);
  } else {
    item_ = spec_.fixed_sequence[round_ % spec_.fixed_sequence.size()];
  }
  refresh_observations();
  pending_ = true;
}

void Environment::refresh_observations() {
  const auto item = spec_.item_pool.row(item_);
  const double inv = 1.0 / spec_.observation_scale;
  for (std::size_t i = 0; i < arm_count(); ++i) {
    auto x = profiles_.row(i);
    auto o = observations_.row(i);
    const std::size_t d = dim();
    switch (spec_.observation) {
      case Observation::ItemMasked:
        for (std::size_t j = 0; j < d; ++j) o[j] = item[j] * x[j] * inv;
        break;
      case Observation::Profile:
        for (std::size_t j = 0; j < d; ++j) o[j] = x[j] * inv;
        break;
      case Observation::Joint:
        for (std::size_t j = 0; j < d; ++j) {
          o[j] = x[j] * inv;
          o[d + j] = item[j];
        }
        break;
    }
    means_[i] = true_mean(item, x);
  }
}

RoundOutcome Environment::step(std::span<const std::size_t> super_arm) {
  begin_round();
  if (super_arm.size() != spec_.K)
    throw InvalidArgument("step: super arm has " + std::to_string(super_arm.size()) +
                          " arms, expected " + std::to_string(spec_.K));
  std::vector<bool> seen(arm_count(), false);
  for (auto a : super_arm) {
    if (a >= arm_count()) throw InvalidArgument("step: arm id " + std::to_string(a) + " out of range");
    if (seen[a]) throw InvalidArgument("step: duplicate arm id " + std::to_string(a));
    seen[a] = true;
  }

  RoundOutcome out;
  out.round = ++round_;
  out.item = item_;
  out.means = means_;
  out.played.assign(super_arm.begin(), super_arm.end());
  Vector played_mu;
  for (auto a : super_arm) played_mu.push_back(means_[a]);
  out.base_rewards = sample_base_rewards(played_mu, reward_rng_);
  out.super_reward = super_reward(out.base_rewards, spec_.threshold_frac);
  out.expected_super_played = expected_super_reward(played_mu, spec_.threshold_frac);
  out.expected_super_optimal = optimal_expected(means_, spec_.K, spec_.threshold_frac).value;
  out.regret = std::max(0.0, out.expected_super_optimal - out.expected_super_played);
  pending_ = false;

  if (spec_.online_updates) {
    const auto item = spec_.item_pool.row(item_);
    for (std::size_t k = 0; k < super_arm.size(); ++k)
      update_context(super_arm[k], item, out.base_rewards[k]);
  }
  return out;
}

void Environment::update_context(std::size_t arm, std::span<const double> item, double reward) {
  if (arm >= arm_count()) throw InvalidArgument("update_context: arm out of range");
  if (item.size() != dim()) throw InvalidArgument("update_context: item dimension mismatch");
  for (std::size_t j = 0; j < dim(); ++j) {
    if (item[j] == 0.0) continue;
    counts_(arm, j) += 1.0;
    sums_(arm, j) += reward * spec_.rating_scale;
    profiles_(arm, j) = sums_(arm, j) / counts_(arm, j);
  }
}

// ---------------------------------------------------------------- synthetic

SyntheticWorld make_synthetic(const SyntheticSpec& s) {
  if (s.arms == 0 || s.dim == 0 || s.items == 0 || s.planted_clusters == 0)
    throw InvalidArgument("make_synthetic: sizes must be >= 1");
  if (s.planted_clusters > s.arms) throw InvalidArgument("make_synthetic: more clusters than arms");
  if (s.min_item_genres == 0 || s.min_item_genres > s.max_item_genres || s.max_item_genres > s.dim)
    throw InvalidArgument("make_synthetic: bad item genre range");

  std::mt19937_64 rng(s.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_real_distribution<double> rating(s.min_rating, s.max_rating);
  std::normal_distribution<double> noise(0.0, s.noise);

  DenseMatrix centers(s.planted_clusters, s.dim);
  for (std::size_t c = 0; c < s.planted_clusters; ++c) {
    bool any = false;
    for (std::size_t j = 0; j < s.dim; ++j) {
      if (unit(rng) >= s.unrated_prob) {
        centers(c, j) = rating(rng);
        any = true;
      }
    }
    if (!any) centers(c, std::uniform_int_distribution<std::size_t>(0, s.dim - 1)(rng)) = rating(rng);
  }

  SyntheticWorld w;
  w.user_contexts = DenseMatrix(s.arms, s.dim);
  w.planted_labels.resize(s.arms);
  for (std::size_t i = 0; i < s.arms; ++i) {
    const std::size_t c = i % s.planted_clusters;
    w.planted_labels[i] = c;
    for (std::size_t j = 0; j < s.dim; ++j) {
      const double e = noise(rng);
      // An unrated blob genre stays unrated for every member.
      w.user_contexts(i, j) =
          centers(c, j) == 0.0 && !s.noise_on_unrated ? 0.0 : std::max(0.0, centers(c, j) + e);
    }
  }

  w.item_pool = DenseMatrix(s.items, s.dim);
  std::vector<std::size_t> genres(s.dim);
  std::iota(genres.begin(), genres.end(), std::size_t{0});
  for (std::size_t z = 0; z < s.items; ++z) {
    const std::size_t count =
        std::uniform_int_distribution<std::size_t>(s.min_item_genres, s.max_item_genres)(rng);
    std::vector<std::size_t> picked;
    std::sample(genres.begin(), genres.end(), std::back_inserter(picked), count, rng);
    for (auto j : picked) w.item_pool(z, j) = 1.0;
  }
  return w;
}

}  // namespace neuclust::env
