#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "neuclust/clustering.hpp"
#include "neuclust/linalg.hpp"
#include "neuclust/neural.hpp"

namespace neuclust::policy {

using linalg::DenseMatrix;
using linalg::Vector;

enum class GammaMode { Constant, Theoretical };
enum class ClusteringMode { Online, Offline };
enum class PolicyKind { NeuClust, CnUcb, KLinUcb, Random, Oracle };

std::string_view to_string(PolicyKind kind);
PolicyKind parse_policy_kind(std::string_view name);

/// Absolute constants of the theoretical exploration width. None of them
/// has a known value; all default to 1.
struct TheoreticalConstants {
  double zeta = 1.0;
  double S = 1.0;
  double delta = 0.1;
  double C1 = 1.0;
  double C_gamma1 = 1.0;
  double C_gamma2 = 1.0;
  double C_gamma3 = 1.0;
};

struct PolicyConfig {
  std::size_t K = 5;
  std::size_t M = 10;
  double lambda1 = 1.0;
  double lambda2 = 1.0;
  double eta1 = 1e-3;
  double eta2 = 1e-3;
  std::size_t J = 40;
  std::size_t m = 20;
  std::size_t n = 12;
  std::size_t L = 1;
  std::size_t Lm = 1;
  std::size_t i_c = 300;
  GammaMode gamma_mode = GammaMode::Constant;
  double gamma_const = 1.0;
  TheoreticalConstants theory;
  ClusteringMode clustering_mode = ClusteringMode::Offline;
  /// Add the super-arm network score once per cluster instead of once per member.
  bool score_f_once = false;
  neural::LossScale loss_scale = neural::LossScale::Mean;
  std::size_t batch_size = 0;
  std::size_t refresh_interval = linalg::ConfidenceState::kDefaultRefreshInterval;
  /// K-LinUCB exploration weight.
  double alpha = 0.1;
  std::uint64_t rng_seed = 0;
};

void validate(const PolicyConfig& cfg, PolicyKind kind);

/// Everything a policy may look at when choosing round t's super arm.
struct RoundContext {
  /// N x d arm features for the networks and linear models.
  const DenseMatrix& features;
  /// N x d features used for clustering (user profiles).
  const DenseMatrix& cluster_features;
  /// True base means; read only by the clairvoyant oracle baseline.
  std::span<const double> true_means;
  std::size_t round = 1;
};

struct Selection {
  /// K distinct arm ids, ascending.
  std::vector<std::size_t> super_arm;
  /// Same arms ordered by descending UCB (ties to lower id).
  std::vector<std::size_t> ranked;
  /// UCB per arm of `ranked`.
  Vector per_arm_ucb;
  /// Chosen cluster; -1 when the policy does not cluster or fell back.
  std::ptrdiff_t cluster_id = -1;
  /// Super-arm network input: relu(f(x)) over `ranked`.
  Vector mono_input;
  double mono_score = 0.0;
  double v_total = 0.0;
  /// No cluster had K members; the global top-K was returned.
  bool fallback = false;
};

Selection make_selection(std::vector<std::size_t> ranked, Vector ucb);

/// Exploration width from the confidence-ellipsoid analysis: Gamma terms
/// grow polynomially in t and K and vanish like m^{-1/6} sqrt(log m).
double gamma_theoretical(std::size_t t, const TheoreticalConstants& c, double log_det_ratio,
                         std::size_t K, std::size_t L, std::size_t m, double eta1, std::size_t J,
                         double lambda1);

struct GammaTerms {
  double gamma1;
  double gamma2;
  double gamma3;
};
GammaTerms gamma_terms(std::size_t t, const TheoreticalConstants& c, std::size_t K, std::size_t L,
                       double m, double lambda1);

/// Base network, its confidence ellipsoid and the base-reward history.
/// Shared by NeUClust and CN-UCB.
struct NeuralUcbCore {
  neural::BaseNet base;
  linalg::ConfidenceState confidence;
  neural::TrainBatch base_history;
  double gamma = 1.0;
  std::size_t round = 0;

  NeuralUcbCore(const PolicyConfig& cfg, std::size_t d);
};

struct NeuClustState {
  NeuralUcbCore core;
  neural::MonoNet mono;
  Vector super_history;
  std::optional<clustering::Clustering> cached_clustering;
  std::optional<clustering::Clustering> last_clustering;

  NeuClustState(const PolicyConfig& cfg, std::size_t d);
};

/// f(x) + gamma ||g(x)/sqrt(m)||_{Z^{-1}}.
double arm_ucb(const NeuralUcbCore& core, std::span<const double> x, double gamma);

struct ArmScores {
  Vector prediction;  // f(x_i)
  Vector ucb;         // v_i
};
ArmScores score_arms(const NeuralUcbCore& core, const DenseMatrix& features, double gamma);

Selection select_neuclust(NeuClustState& state, const RoundContext& ctx, const PolicyConfig& cfg);

/// Same as select_neuclust but with a caller-supplied clustering.
Selection select_neuclust_with(const NeuClustState& state, const DenseMatrix& features,
                               const clustering::Clustering& clust, const PolicyConfig& cfg);

void observe_neuclust(NeuClustState& state, const RoundContext& ctx, const Selection& sel,
                      std::span<const double> base_rewards, double super_reward,
                      const PolicyConfig& cfg);

Selection select_cnucb(const NeuralUcbCore& core, const DenseMatrix& features, std::size_t K);
void observe_cnucb(NeuralUcbCore& core, const DenseMatrix& features, const Selection& sel,
                   std::span<const double> base_rewards, const PolicyConfig& cfg);

/// Ridge state for K-LinUCB: A = I + sum x x^T, b = sum r x.
struct LinUcbState {
  linalg::ConfidenceState A;
  Vector b;

  LinUcbState(std::size_t d, std::size_t refresh_interval);
  Vector theta_hat() const;
};

Selection select_klinucb(const LinUcbState& state, const DenseMatrix& features, double alpha,
                         std::size_t K);
void observe_klinucb(LinUcbState& state, const DenseMatrix& features, const Selection& sel,
                     std::span<const double> base_rewards);

Selection select_random(std::mt19937_64& rng, std::size_t N, std::size_t K);
Selection select_oracle(std::span<const double> means, std::size_t K);

/// FNV-1a over the full numeric state.
std::uint64_t state_digest(const NeuClustState& state);

class Policy {
 public:
  virtual ~Policy() = default;
  virtual Selection select(const RoundContext& ctx) = 0;
  virtual void observe(const RoundContext& ctx, const Selection& sel,
                       std::span<const double> base_rewards, double super_reward) = 0;
  virtual PolicyKind kind() const = 0;
};

std::unique_ptr<Policy> make_policy(PolicyKind kind, const PolicyConfig& cfg, std::size_t N,
                                    std::size_t d);

class NeuClustPolicy final : public Policy {
 public:
  NeuClustPolicy(const PolicyConfig& cfg, std::size_t d) : cfg_(cfg), state_(cfg, d) {}
  Selection select(const RoundContext& ctx) override { return select_neuclust(state_, ctx, cfg_); }
  void observe(const RoundContext& ctx, const Selection& sel, std::span<const double> base_rewards,
               double super_reward) override {
    observe_neuclust(state_, ctx, sel, base_rewards, super_reward, cfg_);
  }
  PolicyKind kind() const override { return PolicyKind::NeuClust; }
  const NeuClustState& state() const noexcept { return state_; }

 private:
  PolicyConfig cfg_;
  NeuClustState state_;
};

}  // namespace neuclust::policy
