#include "neuclust/policy.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <limits>
#include <numeric>

#include "neuclust/environment.hpp"
#include "neuclust/error.hpp"

namespace neuclust::policy {

std::string_view to_string(PolicyKind kind) {
  switch (kind) {
    case PolicyKind::NeuClust: return "neuclust";
    case PolicyKind::CnUcb: return "cnucb";
    case PolicyKind::KLinUcb: return "klinucb";
    case PolicyKind::Random: return "random";
    case PolicyKind::Oracle: return "oracle";
  }
  return "unknown";
}

PolicyKind parse_policy_kind(std::string_view name) {
  for (auto k : {PolicyKind::NeuClust, PolicyKind::CnUcb, PolicyKind::KLinUcb, PolicyKind::Random,
                 PolicyKind::Oracle})
    if (to_string(k) == name) return k;
  throw InvalidArgument("unknown policy type '" + std::string(name) + "'");
}

void validate(const PolicyConfig& cfg, PolicyKind kind) {
  if (cfg.K == 0) throw InvalidArgument("policy: K must be >= 1");
  const bool neural_policy = kind == PolicyKind::NeuClust || kind == PolicyKind::CnUcb;
  if (kind == PolicyKind::NeuClust && cfg.M == 0) throw InvalidArgument("policy: M must be >= 1");
  if (neural_policy) {
    if (!(cfg.lambda1 > 0.0)) throw InvalidArgument("policy: lambda1 must be > 0");
    if (cfg.lambda2 < 0.0) throw InvalidArgument("policy: lambda2 must be >= 0");
    if (!(cfg.eta1 > 0.0) || !(cfg.eta2 > 0.0)) throw InvalidArgument("policy: step sizes must be > 0");
    if (cfg.m == 0 || cfg.L == 0 || cfg.n == 0) throw InvalidArgument("policy: network sizes must be >= 1");
    if (cfg.gamma_mode == GammaMode::Constant && !(cfg.gamma_const > 0.0))
      throw InvalidArgument("policy: gamma must be > 0 in constant mode");
    if (cfg.gamma_mode == GammaMode::Theoretical &&
        !(cfg.theory.delta > 0.0 && cfg.theory.delta < 1.0))
      throw InvalidArgument("policy: confidence delta must be in (0, 1)");
  }
  if (kind == PolicyKind::KLinUcb && cfg.alpha < 0.0) throw InvalidArgument("policy: alpha must be >= 0");
}

Selection make_selection(std::vector<std::size_t> ranked, Vector ucb) {
  Selection s;
  s.super_arm = ranked;
  std::sort(s.super_arm.begin(), s.super_arm.end());
  s.ranked = std::move(ranked);
  s.per_arm_ucb = std::move(ucb);
  s.v_total = std::accumulate(s.per_arm_ucb.begin(), s.per_arm_ucb.end(), 0.0);
  return s;
}

// ---------------------------------------------------------------- gamma

GammaTerms gamma_terms(std::size_t t, const TheoreticalConstants& c, std::size_t K, std::size_t L,
                       double m, double lambda1) {
  const double tk = static_cast<double>(t) * static_cast<double>(K);
  const double l = static_cast<double>(L);
  const double width = std::pow(m, -1.0 / 6.0) * std::sqrt(std::max(0.0, std::log(m)));
  GammaTerms g{};
  g.gamma1 = std::sqrt(1.0 + c.C_gamma1 * std::pow(tk, 7.0 / 6.0) * std::pow(l, 4.0) *
                                 std::pow(lambda1, -7.0 / 6.0) * width);
  g.gamma2 = c.C_gamma2 * std::pow(tk, 5.0 / 3.0) * std::pow(l, 4.0) *
             std::pow(lambda1, -1.0 / 6.0) * width;
  g.gamma3 = c.C_gamma3 * std::pow(tk, 7.0 / 6.0) * std::pow(l, 3.5) *
             std::pow(lambda1, -7.0 / 6.0) * width * (1.0 + std::sqrt(tk / lambda1));
  return g;
}

double gamma_theoretical(std::size_t t, const TheoreticalConstants& c, double log_det_ratio,
                         std::size_t K, std::size_t L, std::size_t m, double eta1, std::size_t J,
                         double lambda1) {
  if (t == 0) throw InvalidArgument("gamma_theoretical: round must be >= 1");
  if (!(lambda1 > 0.0)) throw InvalidArgument("gamma_theoretical: lambda1 must be > 0");
  if (!(c.delta > 0.0 && c.delta < 1.0)) throw InvalidArgument("gamma_theoretical: delta must be in (0, 1)");
  const GammaTerms g = gamma_terms(t, c, K, L, static_cast<double>(m), lambda1);
  const double radicand = log_det_ratio + g.gamma2 - 2.0 * std::log(c.delta);
  if (radicand < 0.0) throw InternalConsistencyError("gamma_theoretical: negative radicand");
  const double tk = static_cast<double>(t) * static_cast<double>(K);
  double base = 1.0 - eta1 * static_cast<double>(m) * lambda1;
  base = std::clamp(base, 0.0, std::nextafter(1.0, 0.0));
  const double decay = std::pow(base, static_cast<double>(J) / 2.0);
  return g.gamma1 * (c.zeta * std::sqrt(radicand) + std::sqrt(lambda1) * c.S) +
         (lambda1 + c.C1 * tk * static_cast<double>(L)) * (decay * std::sqrt(tk / lambda1) + g.gamma3);
}

namespace {

double current_gamma(const NeuralUcbCore& core, const PolicyConfig& cfg) {
  if (cfg.gamma_mode == GammaMode::Constant) return cfg.gamma_const;
  return gamma_theoretical(std::max<std::size_t>(core.round, 1), cfg.theory,
                           core.confidence.log_det_ratio(), cfg.K, cfg.L, cfg.m, cfg.eta1, cfg.J,
                           cfg.lambda1);
}

neural::TrainOptions base_train_options(const PolicyConfig& cfg, std::size_t round) {
  neural::TrainOptions o;
  o.step_size = cfg.eta1;
  o.iterations = cfg.J;
  o.lambda = cfg.lambda1;
  o.loss_scale = cfg.loss_scale;
  o.batch_size = cfg.batch_size;
  o.seed = cfg.rng_seed * 0x9E3779B97F4A7C15ULL + round;
  return o;
}

std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
  std::uint64_t z = a ^ (b + 0x9E3779B97F4A7C15ULL + (a << 6) + (a >> 2));
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

void check_features(const DenseMatrix& features, std::size_t d, std::size_t K, const char* who) {
  if (features.cols() != d)
    throw InvalidArgument(std::string(who) + ": feature dimension " + std::to_string(features.cols()) +
                          " != " + std::to_string(d));
  if (K > features.rows())
    throw InvalidArgument(std::string(who) + ": K=" + std::to_string(K) + " exceeds arm count " +
                          std::to_string(features.rows()));
}

void check_rewards(const Selection& sel, std::span<const double> base_rewards) {
  if (base_rewards.size() != sel.super_arm.size())
    throw InvalidArgument("observe: expected " + std::to_string(sel.super_arm.size()) +
                          " base rewards, got " + std::to_string(base_rewards.size()));
}

// Base reward of arm `a` given rewards aligned with the ascending super arm.
double reward_of(const Selection& sel, std::span<const double> base_rewards, std::size_t a) {
  const auto it = std::lower_bound(sel.super_arm.begin(), sel.super_arm.end(), a);
  return base_rewards[static_cast<std::size_t>(it - sel.super_arm.begin())];
}

// Z update with pre-training gradients, history append, base training.
void absorb_and_train(NeuralUcbCore& core, const DenseMatrix& features, const Selection& sel,
                      std::span<const double> base_rewards, const PolicyConfig& cfg) {
  const double inv_sqrt_m = 1.0 / std::sqrt(static_cast<double>(core.base.width()));
  Vector g(core.base.param_count());
  for (std::size_t a : sel.ranked) {
    const auto x = features.row(a);
    neural::forward_grad_base(core.base, x, g);
    for (double& v : g) v *= inv_sqrt_m;
    core.confidence.rank1_update(g);
    core.base_history.add(x, reward_of(sel, base_rewards, a));
  }
  ++core.round;
  neural::train_base(core.base, core.base_history, base_train_options(cfg, core.round));
}

}  // namespace

// ---------------------------------------------------------------- neural UCB core

NeuralUcbCore::NeuralUcbCore(const PolicyConfig& cfg, std::size_t d)
    : base(neural::init_base_net(d, cfg.m, cfg.L, mix(cfg.rng_seed, 1))),
      confidence(base.param_count(), cfg.lambda1, cfg.refresh_interval),
      base_history(d),
      gamma(cfg.gamma_mode == GammaMode::Constant ? cfg.gamma_const : 0.0) {
  gamma = current_gamma(*this, cfg);
}

NeuClustState::NeuClustState(const PolicyConfig& cfg, std::size_t d)
    : core(cfg, d), mono(neural::init_mono_net(cfg.K, cfg.n, cfg.Lm, mix(cfg.rng_seed, 2))) {}

double arm_ucb(const NeuralUcbCore& core, std::span<const double> x, double gamma) {
  Vector g(core.base.param_count());
  const double f = neural::forward_grad_base(core.base, x, g);
  if (gamma == 0.0) return f;
  const double inv_sqrt_m = 1.0 / std::sqrt(static_cast<double>(core.base.width()));
  for (double& v : g) v *= inv_sqrt_m;
  return f + gamma * core.confidence.mahalanobis_norm(g);
}

ArmScores score_arms(const NeuralUcbCore& core, const DenseMatrix& features, double gamma) {
  const std::size_t n = features.rows();
  ArmScores s;
  s.prediction.resize(n);
  s.ucb.resize(n);
  const double inv_sqrt_m = 1.0 / std::sqrt(static_cast<double>(core.base.width()));
  Vector g(core.base.param_count());
  for (std::size_t i = 0; i < n; ++i) {
    const double f = neural::forward_grad_base(core.base, features.row(i), g);
    s.prediction[i] = f;
    if (gamma == 0.0) {
      s.ucb[i] = f;
      continue;
    }
    for (double& v : g) v *= inv_sqrt_m;
    s.ucb[i] = f + gamma * core.confidence.mahalanobis_norm(g);
  }
  return s;
}

// ---------------------------------------------------------------- NeUClust

namespace {

Vector mono_input_for(const Vector& prediction, const std::vector<std::size_t>& ranked) {
  Vector in;
  in.reserve(ranked.size());
  for (auto a : ranked) in.push_back(std::max(0.0, prediction[a]));
  return in;
}

}  // namespace

Selection select_neuclust_with(const NeuClustState& state, const DenseMatrix& features,
                               const clustering::Clustering& clust, const PolicyConfig& cfg) {
  check_features(features, state.core.base.input_dim(), cfg.K, "select_neuclust");
  if (clust.assignments.size() != features.rows())
    throw InvalidArgument("select_neuclust: clustering covers a different arm count");

  const ArmScores scores = score_arms(state.core, features, state.core.gamma);
  const double f_weight = cfg.score_f_once ? 1.0 : static_cast<double>(cfg.K);

  std::optional<Selection> best;
  for (std::size_t c = 0; c < clust.cluster_count(); ++c) {
    const auto members = clustering::cluster_members(clust, c);
    if (members.size() < cfg.K) continue;
    Vector member_ucb;
    member_ucb.reserve(members.size());
    for (auto a : members) member_ucb.push_back(scores.ucb[a]);
    std::vector<std::size_t> ranked;
    for (auto local : env::top_k_indices(member_ucb, cfg.K)) ranked.push_back(members[local]);

    Vector ucb;
    for (auto a : ranked) ucb.push_back(scores.ucb[a]);
    Selection s = make_selection(ranked, std::move(ucb));
    s.cluster_id = static_cast<std::ptrdiff_t>(c);
    s.mono_input = mono_input_for(scores.prediction, s.ranked);
    s.mono_score = neural::forward_mono(state.mono, s.mono_input);
    s.v_total += f_weight * s.mono_score;
    if (!best || s.v_total > best->v_total) best = std::move(s);
  }
  if (best) return std::move(*best);

  // No cluster holds K arms.
  std::vector<std::size_t> ranked = env::top_k_indices(scores.ucb, cfg.K);
  Vector ucb;
  for (auto a : ranked) ucb.push_back(scores.ucb[a]);
  Selection s = make_selection(ranked, std::move(ucb));
  s.mono_input = mono_input_for(scores.prediction, s.ranked);
  s.mono_score = neural::forward_mono(state.mono, s.mono_input);
  s.v_total += f_weight * s.mono_score;
  s.fallback = true;
  return s;
}

Selection select_neuclust(NeuClustState& state, const RoundContext& ctx, const PolicyConfig& cfg) {
  const std::size_t M = std::min(cfg.M, ctx.cluster_features.rows());
  if (cfg.clustering_mode == ClusteringMode::Offline) {
    if (!state.cached_clustering)
      state.cached_clustering = clustering::kmeans(ctx.cluster_features, M, cfg.i_c, mix(cfg.rng_seed, 3));
    return select_neuclust_with(state, ctx.features, *state.cached_clustering, cfg);
  }
  state.last_clustering =
      clustering::kmeans(ctx.cluster_features, M, cfg.i_c, mix(cfg.rng_seed, 4 + ctx.round));
  return select_neuclust_with(state, ctx.features, *state.last_clustering, cfg);
}

void observe_neuclust(NeuClustState& state, const RoundContext& ctx, const Selection& sel,
                      std::span<const double> base_rewards, double super_reward,
                      const PolicyConfig& cfg) {
  check_rewards(sel, base_rewards);
  if (sel.ranked.size() != cfg.K)
    throw InvalidArgument("observe_neuclust: selection does not hold K arms");
  absorb_and_train(state.core, ctx.features, sel, base_rewards, cfg);
  state.super_history.push_back(super_reward);

  // Super-arm inputs are re-read through the freshly trained base network;
  // rows [t K, (t + 1) K) of the base history are round t's arms in UCB order.
  neural::TrainBatch mono_batch(cfg.K);
  const auto& hist = state.core.base_history;
  Vector in(cfg.K);
  for (std::size_t t = 0; t < state.super_history.size(); ++t) {
    for (std::size_t k = 0; k < cfg.K; ++k)
      in[k] = std::max(0.0, neural::forward_base(state.core.base, hist.input(t * cfg.K + k)));
    mono_batch.add(in, state.super_history[t]);
  }
  neural::TrainOptions o;
  o.step_size = cfg.eta2;
  o.iterations = cfg.J;
  o.lambda = cfg.lambda2;
  o.loss_scale = cfg.loss_scale;
  o.batch_size = cfg.batch_size;
  o.seed = mix(cfg.rng_seed, 0x6d6f6e6f + state.core.round);
  neural::train_mono(state.mono, mono_batch, o);

  state.core.gamma = current_gamma(state.core, cfg);
}

// ---------------------------------------------------------------- CN-UCB

Selection select_cnucb(const NeuralUcbCore& core, const DenseMatrix& features, std::size_t K) {
  check_features(features, core.base.input_dim(), K, "select_cnucb");
  const ArmScores scores = score_arms(core, features, core.gamma);
  std::vector<std::size_t> ranked = env::top_k_indices(scores.ucb, K);
  Vector ucb;
  for (auto a : ranked) ucb.push_back(scores.ucb[a]);
  Selection s = make_selection(ranked, std::move(ucb));
  s.mono_input = mono_input_for(scores.prediction, s.ranked);
  return s;
}

void observe_cnucb(NeuralUcbCore& core, const DenseMatrix& features, const Selection& sel,
                   std::span<const double> base_rewards, const PolicyConfig& cfg) {
  check_rewards(sel, base_rewards);
  absorb_and_train(core, features, sel, base_rewards, cfg);
  core.gamma = current_gamma(core, cfg);
}

// ---------------------------------------------------------------- K-LinUCB

LinUcbState::LinUcbState(std::size_t d, std::size_t refresh_interval)
    : A(d, 1.0, refresh_interval), b(d, 0.0) {}

Vector LinUcbState::theta_hat() const { return A.apply_inverse(b); }

Selection select_klinucb(const LinUcbState& state, const DenseMatrix& features, double alpha,
                         std::size_t K) {
  check_features(features, state.b.size(), K, "select_klinucb");
  const Vector theta = state.theta_hat();
  Vector v(features.rows());
  for (std::size_t i = 0; i < features.rows(); ++i) {
    const auto x = features.row(i);
    v[i] = linalg::dot(x, theta) + (alpha == 0.0 ? 0.0 : alpha * state.A.mahalanobis_norm(x));
  }
  std::vector<std::size_t> ranked = env::top_k_indices(v, K);
  Vector ucb;
  for (auto a : ranked) ucb.push_back(v[a]);
  return make_selection(ranked, std::move(ucb));
}

void observe_klinucb(LinUcbState& state, const DenseMatrix& features, const Selection& sel,
                     std::span<const double> base_rewards) {
  check_rewards(sel, base_rewards);
  for (std::size_t k = 0; k < sel.super_arm.size(); ++k) {
    const auto x = features.row(sel.super_arm[k]);
    state.A.rank1_update(x);
    for (std::size_t j = 0; j < x.size(); ++j) state.b[j] += base_rewards[k] * x[j];
  }
}

// ---------------------------------------------------------------- reference baselines

Selection select_random(std::mt19937_64& rng, std::size_t N, std::size_t K) {
  if (K > N) throw InvalidArgument("select_random: K exceeds N");
  std::vector<std::size_t> all(N);
  std::iota(all.begin(), all.end(), std::size_t{0});
  std::vector<std::size_t> picked;
  std::sample(all.begin(), all.end(), std::back_inserter(picked), K, rng);
  return make_selection(std::move(picked), Vector(K, 0.0));
}

Selection select_oracle(std::span<const double> means, std::size_t K) {
  if (K > means.size()) throw InvalidArgument("select_oracle: K exceeds N");
  std::vector<std::size_t> ranked = env::top_k_indices(means, K);
  Vector v;
  for (auto a : ranked) v.push_back(means[a]);
  return make_selection(std::move(ranked), std::move(v));
}

// ---------------------------------------------------------------- digest

namespace {

struct Fnv {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  void bytes(const void* p, std::size_t n) {
    const auto* c = static_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= c[i];
      h *= 0x100000001b3ULL;
    }
  }
  void doubles(std::span<const double> v) { bytes(v.data(), v.size() * sizeof(double)); }
  void value(std::uint64_t v) { bytes(&v, sizeof v); }
};

}  // namespace

std::uint64_t state_digest(const NeuClustState& state) {
  Fnv f;
  f.doubles(state.core.base.params());
  f.doubles(state.mono.params());
  f.doubles(state.core.confidence.z().data());
  f.doubles(state.core.confidence.z_inv().data());
  const double ld = state.core.confidence.log_det();
  f.doubles({&ld, 1});
  f.doubles({&state.core.gamma, 1});
  f.value(state.core.round);
  f.value(state.core.base_history.size());
  for (std::size_t i = 0; i < state.core.base_history.size(); ++i)
    f.doubles(state.core.base_history.input(i));
  f.doubles(state.core.base_history.targets());
  f.doubles(state.super_history);
  return f.h;
}

// ---------------------------------------------------------------- Policy objects

namespace {

class CnUcbPolicy final : public Policy {
 public:
  CnUcbPolicy(const PolicyConfig& cfg, std::size_t d) : cfg_(cfg), core_(cfg, d) {}
  Selection select(const RoundContext& ctx) override { return select_cnucb(core_, ctx.features, cfg_.K); }
  void observe(const RoundContext& ctx, const Selection& sel, std::span<const double> r, double) override {
    observe_cnucb(core_, ctx.features, sel, r, cfg_);
  }
  PolicyKind kind() const override { return PolicyKind::CnUcb; }

 private:
  PolicyConfig cfg_;
  NeuralUcbCore core_;
};

class KLinUcbPolicy final : public Policy {
 public:
  KLinUcbPolicy(const PolicyConfig& cfg, std::size_t d) : cfg_(cfg), state_(d, cfg.refresh_interval) {}
  Selection select(const RoundContext& ctx) override {
    return select_klinucb(state_, ctx.features, cfg_.alpha, cfg_.K);
  }
  void observe(const RoundContext& ctx, const Selection& sel, std::span<const double> r, double) override {
    observe_klinucb(state_, ctx.features, sel, r);
  }
  PolicyKind kind() const override { return PolicyKind::KLinUcb; }

 private:
  PolicyConfig cfg_;
  LinUcbState state_;
};

class RandomPolicy final : public Policy {
 public:
  RandomPolicy(const PolicyConfig& cfg, std::size_t N) : K_(cfg.K), N_(N), rng_(mix(cfg.rng_seed, 5)) {}
  Selection select(const RoundContext&) override { return select_random(rng_, N_, K_); }
  void observe(const RoundContext&, const Selection&, std::span<const double>, double) override {}
  PolicyKind kind() const override { return PolicyKind::Random; }

 private:
  std::size_t K_;
  std::size_t N_;
  std::mt19937_64 rng_;
};

class OraclePolicy final : public Policy {
 public:
  explicit OraclePolicy(const PolicyConfig& cfg) : K_(cfg.K) {}
  Selection select(const RoundContext& ctx) override { return select_oracle(ctx.true_means, K_); }
  void observe(const RoundContext&, const Selection&, std::span<const double>, double) override {}
  PolicyKind kind() const override { return PolicyKind::Oracle; }

 private:
  std::size_t K_;
};

}  // namespace

std::unique_ptr<Policy> make_policy(PolicyKind kind, const PolicyConfig& cfg, std::size_t N,
                                    std::size_t d) {
  validate(cfg, kind);
  if (cfg.K > N) throw InvalidArgument("policy: K exceeds arm count");
  switch (kind) {
    case PolicyKind::NeuClust: return std::make_unique<NeuClustPolicy>(cfg, d);
    case PolicyKind::CnUcb: return std::make_unique<CnUcbPolicy>(cfg, d);
    case PolicyKind::KLinUcb: return std::make_unique<KLinUcbPolicy>(cfg, d);
    case PolicyKind::Random: return std::make_unique<RandomPolicy>(cfg, N);
    case PolicyKind::Oracle: return std::make_unique<OraclePolicy>(cfg);
  }
  throw InvalidArgument("policy: unknown kind");
}

}  // namespace neuclust::policy
