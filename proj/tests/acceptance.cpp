// Acceptance gate: one PASS/FAIL/SKIP line per criterion, nonzero exit on
// any FAIL. Criterion 9 needs a MovieLens 25M directory (ratings.csv,
// movies.csv) via --movielens or NEUCLUST_MOVIELENS_DIR.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "neuclust/clustering.hpp"
#include "neuclust/config.hpp"
#include "neuclust/environment.hpp"
#include "neuclust/harness.hpp"
#include "neuclust/ingest.hpp"
#include "neuclust/linalg.hpp"
#include "neuclust/neural.hpp"
#include "neuclust/policy.hpp"
#include "neuclust/textio.hpp"

using namespace neuclust;
namespace fs = std::filesystem;
using linalg::DenseMatrix;
using linalg::Vector;

namespace {

enum class Verdict { Pass, Fail, Skip };

struct Outcome {
  Verdict verdict;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

Outcome verdict(bool ok, std::string detail) { return {ok ? Verdict::Pass : Verdict::Fail, std::move(detail)}; }

// ---------------------------------------------------------------- reference code
// Straight-line evaluators, kept apart from the library on purpose.

struct BasePre {
  double out;
  double margin;  // smallest |pre-activation|
};

BasePre ref_base(const neural::BaseNet& net, std::span<const double> x) {
  const auto th = net.params();
  Vector in(x.begin(), x.end());
  double margin = INFINITY;
  std::size_t off = 0;
  for (std::size_t k = 0; k < net.hidden_layers(); ++k) {
    Vector next(net.width());
    for (std::size_t r = 0; r < net.width(); ++r) {
      double s = 0;
      for (std::size_t c = 0; c < in.size(); ++c) s += th[off + r * in.size() + c] * in[c];
      // exactly zero means every input is zero, which no small step revives
      if (s != 0.0) margin = std::min(margin, std::abs(s));
      next[r] = s > 0 ? s : 0;
    }
    off += net.width() * in.size();
    in = std::move(next);
  }
  double s = 0;
  for (std::size_t c = 0; c < in.size(); ++c) s += th[off + c] * in[c];
  return {std::sqrt(static_cast<double>(net.width())) * s, margin};
}

double mono_margin(const neural::MonoNet& net, std::span<const double> u) {
  const auto th = net.params();
  Vector in(u.begin(), u.end());
  double margin = INFINITY;
  for (std::size_t k = 0; k + 1 < net.layer_count(); ++k) {
    Vector next(net.layer_rows(k));
    for (std::size_t r = 0; r < next.size(); ++r) {
      double s = th[net.bias_offset(k) + r];
      for (std::size_t c = 0; c < in.size(); ++c)
        s += 1.0 / (1.0 + std::exp(-th[net.weight_offset(k) + r * in.size() + c])) * in[c];
      margin = std::min(margin, std::abs(s));
      next[r] = std::max(0.0, s);
    }
    in = std::move(next);
  }
  return margin;
}

DenseMatrix gauss_jordan_inverse(DenseMatrix a) {
  const std::size_t n = a.rows();
  DenseMatrix inv = DenseMatrix::identity(n);
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < n; ++r)
      if (std::abs(a(r, c)) > std::abs(a(piv, c))) piv = r;
    for (std::size_t k = 0; k < n; ++k) std::swap(a(c, k), a(piv, k)), std::swap(inv(c, k), inv(piv, k));
    const double d = a(c, c);
    for (std::size_t k = 0; k < n; ++k) a(c, k) /= d, inv(c, k) /= d;
    for (std::size_t r = 0; r < n; ++r) {
      if (r == c) continue;
      const double f = a(r, c);
      if (f == 0.0) continue;
      for (std::size_t k = 0; k < n; ++k) a(r, k) -= f * a(c, k), inv(r, k) -= f * inv(c, k);
    }
  }
  return inv;
}

double lu_log_det(DenseMatrix a) {
  const std::size_t n = a.rows();
  double acc = 0;
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < n; ++r)
      if (std::abs(a(r, c)) > std::abs(a(piv, c))) piv = r;
    for (std::size_t k = 0; k < n; ++k) std::swap(a(c, k), a(piv, k));
    acc += std::log(std::abs(a(c, c)));
    for (std::size_t r = c + 1; r < n; ++r) {
      const double f = a(r, c) / a(c, c);
      for (std::size_t k = c; k < n; ++k) a(r, k) -= f * a(c, k);
    }
  }
  return acc;
}

double enumerate_tail(std::span<const double> mu, std::size_t t) {
  double total = 0;
  for (std::uint32_t mask = 0; mask < (1u << mu.size()); ++mask) {
    double p = 1;
    std::size_t hits = 0;
    for (std::size_t i = 0; i < mu.size(); ++i) {
      const bool on = mask >> i & 1u;
      p *= on ? mu[i] : 1 - mu[i];
      hits += on;
    }
    if (hits >= t) total += p;
  }
  return total;
}

template <class F>
void for_each_subset(std::size_t N, std::size_t K, F&& f) {
  std::vector<bool> pick(N, false);
  std::fill(pick.begin(), pick.begin() + K, true);
  std::vector<std::size_t> s;
  do {
    s.clear();
    for (std::size_t i = 0; i < N; ++i)
      if (pick[i]) s.push_back(i);
    f(s);
  } while (std::prev_permutation(pick.begin(), pick.end()));
}

template <class Net, class Fwd>
double fd_worst(Net& net, std::span<const double> grad, Fwd&& fwd) {
  const double h = 1e-5;
  double worst = 0;
  auto p = net.mutable_params();
  for (std::size_t j = 0; j < p.size(); ++j) {
    const double keep = p[j];
    p[j] = keep + h;
    const double up = fwd();
    p[j] = keep - h;
    const double down = fwd();
    p[j] = keep;
    const double fd = (up - down) / (2 * h);
    worst = std::max(worst, std::abs(fd - grad[j]) / std::max({std::abs(grad[j]), std::abs(fd), 1e-6}));
  }
  return worst;
}

// ---------------------------------------------------------------- criteria 1-7

Outcome gradients() {
  std::mt19937_64 rng(101);
  std::uniform_real_distribution<double> u(-1, 1);
  std::normal_distribution<double> g(0, 0.3);
  double base_worst = 0, mono_worst = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t d = 2 * (1 + trial % 6), m = 2 * (1 + trial % 8), L = 1 + trial % 3;
    auto net = neural::init_base_net(d, m, L, rng());
    for (auto& v : net.mutable_params()) v += g(rng);
    Vector x(d);
    do {
      for (auto& v : x) v = u(rng);
    } while (ref_base(net, x).margin < 1e-3);
    const auto grad = neural::grad_base(net, x);
    base_worst = std::max(base_worst, fd_worst(net, grad, [&] { return neural::forward_base(net, x); }));

    auto mono = neural::init_mono_net(1 + trial % 6, 1 + trial % 7, trial % 4, rng());
    Vector in(mono.input_dim());
    do {
      for (auto& v : in) v = 0.05 + std::abs(u(rng));
    } while (mono_margin(mono, in) < 1e-3);
    const auto mg = neural::grad_mono(mono, in);
    mono_worst = std::max(mono_worst, fd_worst(mono, mg, [&] { return neural::forward_mono(mono, in); }));
  }
  return verdict(base_worst < 1e-4 && mono_worst < 1e-4,
                 "100 pairs per net, max rel err base " + fmt("%.2e", base_worst) + ", mono " +
                     fmt("%.2e", mono_worst));
}

Outcome init_zero() {
  std::mt19937_64 rng(202);
  std::uniform_real_distribution<double> u(0, 5);
  double worst = 0;
  for (std::size_t m : {4, 20, 64}) {
    const auto net = neural::init_base_net(20, m, 1, 7 + m);
    for (int k = 0; k < 1000; ++k) {
      Vector x(20);
      for (std::size_t j = 0; j < 10; ++j) x[j] = x[j + 10] = u(rng);
      worst = std::max(worst, std::abs(neural::forward_base(net, x)));
    }
  }
  return verdict(worst < 1e-8, "3000 contexts, max |f| " + fmt("%.2e", worst));
}

Outcome incremental_inverse() {
  std::mt19937_64 rng(303);
  std::normal_distribution<double> g(0, 1);
  const std::size_t p = 32;
  linalg::ConfidenceState s(p, 1.0);
  double inv_err = 0, ld_err = 0;
  for (int k = 1; k <= 1000; ++k) {
    Vector v(p);
    for (auto& e : v) e = g(rng);
    s.rank1_update(v);
    if (k % 50 == 0) {
      inv_err = std::max(inv_err, linalg::frobenius_norm(linalg::subtract(gauss_jordan_inverse(s.z()), s.z_inv())));
      ld_err = std::max(ld_err, std::abs(lu_log_det(s.z()) - s.log_det()));
    }
  }
  return verdict(inv_err < 1e-6 && ld_err < 1e-6,
                 "p=32, 1000 updates, inverse err " + fmt("%.2e", inv_err) + ", log-det err " + fmt("%.2e", ld_err));
}

Outcome monotone() {
  std::mt19937_64 rng(404);
  std::uniform_real_distribution<double> u(-0.5, 3), step(0, 1);
  int violations = 0;
  double worst = 0;
  for (int k = 0; k < 1000; ++k) {
    const auto net = neural::init_mono_net(5, 1 + k % 16, k % 3, rng());
    Vector a(5), b(5);
    for (std::size_t j = 0; j < 5; ++j) {
      a[j] = u(rng);
      b[j] = a[j] + (k % 7 == 0 && j % 2 ? 0.0 : step(rng));
    }
    const double gap = neural::forward_mono(net, a) - neural::forward_mono(net, b);
    if (gap > 0) ++violations;
    worst = std::max(worst, gap);
  }
  return verdict(violations == 0, "1000 ordered pairs, " + std::to_string(violations) + " violations");
}

Outcome poisson_binomial() {
  std::mt19937_64 rng(505);
  std::uniform_real_distribution<double> u(0, 1);
  double worst = 0;
  for (int k = 0; k < 500; ++k) {
    const std::size_t K = 1 + k % 10;
    Vector mu(K);
    for (auto& v : mu) v = k % 5 == 0 ? std::round(u(rng)) : u(rng);
    const double frac = k % 3 == 0 ? 0.8 : 0.1 + 0.9 * u(rng);
    const double dp = env::expected_super_reward(mu, frac);
    worst = std::max(worst, std::abs(dp - enumerate_tail(mu, env::success_threshold(K, frac))));
  }
  return verdict(worst < 1e-12, "500 vectors, K<=10, max err " + fmt("%.2e", worst));
}

Outcome oracle_equivalence() {
  std::mt19937_64 rng(606);
  std::uniform_real_distribution<double> u(0, 1);
  std::normal_distribution<double> g(0, 0.3);
  int oracle_bad = 0, cnucb_bad = 0;
  for (int k = 0; k < 500; ++k) {
    const std::size_t N = 2 + k % 11;
    const std::size_t K = 1 + k % std::min<std::size_t>(5, N);
    Vector mu(N);
    for (auto& v : mu) v = u(rng);
    double best = -1;
    for_each_subset(N, K, [&](const std::vector<std::size_t>& s) {
      Vector m;
      for (auto a : s) m.push_back(mu[a]);
      best = std::max(best, env::expected_super_reward(m, 0.8));
    });
    if (std::abs(env::optimal_expected(mu, K, 0.8).value - best) > 1e-12) ++oracle_bad;

    policy::PolicyConfig cfg;
    cfg.K = K;
    cfg.m = 4;
    cfg.rng_seed = k;
    policy::NeuralUcbCore core(cfg, 4);
    for (auto& v : core.base.mutable_params()) v += g(rng);
    DenseMatrix x(N, 4);
    for (auto& v : x.data()) v = u(rng);
    const auto v = policy::score_arms(core, x, core.gamma).ucb;
    double best_sum = -1e300;
    std::vector<std::size_t> arg;
    for_each_subset(N, K, [&](const std::vector<std::size_t>& s) {
      double t = 0;
      for (auto a : s) t += v[a];
      if (t > best_sum) best_sum = t, arg = s;
    });
    if (policy::select_cnucb(core, x, K).super_arm != arg) ++cnucb_bad;
  }
  return verdict(oracle_bad == 0 && cnucb_bad == 0,
                 "500 instances, mismatches: top-K " + std::to_string(oracle_bad) + ", CN-UCB " +
                     std::to_string(cnucb_bad));
}

Outcome kmeans_checks() {
  std::mt19937_64 rng(707);
  int increases = 0;
  for (int k = 0; k < 100; ++k) {
    const std::size_t n = 20 + k % 80, d = 1 + k % 8;
    DenseMatrix x(n, d);
    std::uniform_real_distribution<double> u(0, 5);
    for (auto& v : x.data()) v = u(rng);
    const auto c = clustering::kmeans(x, 1 + k % 12, 300, rng());
    for (std::size_t i = 1; i < c.inertia_trace.size(); ++i)
      if (c.inertia_trace[i] > c.inertia_trace[i - 1] + 1e-9) ++increases;
  }
  // Three blobs with centers 10 sigma apart, sigma = 1.
  int recovered = 0;
  const double centers[3][2] = {{0, 0}, {10, 0}, {5, 8.660254037844386}};
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    std::mt19937_64 r(seed);
    std::normal_distribution<double> g(0, 1);
    DenseMatrix x;
    std::vector<std::size_t> label;
    for (std::size_t i = 0; i < 60; ++i) {
      x.append_row(Vector{centers[i % 3][0] + g(r), centers[i % 3][1] + g(r)});
      label.push_back(i % 3);
    }
    const auto c = clustering::kmeans(x, 3, 300, seed);
    std::set<std::pair<std::size_t, std::size_t>> pairs;
    for (std::size_t i = 0; i < 60; ++i) pairs.emplace(c.assignments[i], label[i]);
    std::set<std::size_t> used;
    for (auto [a, b] : pairs) used.insert(a);
    if (pairs.size() == 3 && used.size() == 3) ++recovered;
  }
  return verdict(increases == 0 && recovered == 50,
                 "inertia increases " + std::to_string(increases) + " over 100 datasets, blobs recovered " +
                     std::to_string(recovered) + "/50");
}

// ---------------------------------------------------------------- criterion 8

struct Bench {
  bool ran = false;
  fs::path out;
  config::RunConfig cfg;
};

double curve_at(const fs::path& csv, std::size_t t) {
  std::istringstream in(textio::read_file(csv));
  std::string line;
  std::getline(in, line);
  for (std::size_t i = 1; std::getline(in, line); ++i)
    if (i == t) return textio::parse_double(ingest::split_csv_line(line)[1], "curve");
  throw std::runtime_error("curve too short: " + csv.string());
}

Outcome benchmark(const fs::path& source_dir, const fs::path& work, Bench& bench) {
  auto cfg = config::load_config(source_dir / "configs" / "benchmark.conf");
  cfg.out_dir = work / "benchmark";
  cfg.emit_svg = true;
  fs::remove_all(cfg.out_dir);
  const auto t0 = std::chrono::steady_clock::now();
  const auto summary = harness::run_experiment(cfg, &std::cout);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  bench = {true, cfg.out_dir, cfg};

  double nc = 0, lin = 0, rnd = 0;
  for (const auto& p : summary.policies) {
    if (p.policy == "neuclust") nc = p.mean_regret;
    if (p.policy == "klinucb") lin = p.mean_regret;
    if (p.policy == "random") rnd = p.mean_regret;
  }
  const auto curve = cfg.out_dir / "curve_neuclust.csv";
  const double early = curve_at(curve, 100) / 100.0;
  const double late = (curve_at(curve, 1000) - curve_at(curve, 900)) / 100.0;
  const bool a = nc <= 0.7 * rnd;
  const bool b = nc <= lin;
  const bool c = late < 0.5 * early;
  const bool fast = secs < 15 * 60;
  std::string d = "NeUClust " + fmt("%.1f", nc) + ", K-LinUCB " + fmt("%.1f", lin) + ", random " + fmt("%.1f", rnd) +
                  "; (a) " + (a ? "ok" : "no") + " ratio " + fmt("%.3f", nc / rnd) + ", (b) " + (b ? "ok" : "no") +
                  ", (c) " + (c ? "ok" : "no") + " late/early " + fmt("%.3f", late) + "/" + fmt("%.3f", early) +
                  " = " + fmt("%.2f", late / early) + ", " + fmt("%.0f", secs) + " s" + (fast ? "" : " (over 15 min)");
  return verdict(a && b && c && fast, d);
}

// ---------------------------------------------------------------- criterion 9

Outcome movielens(const fs::path& source_dir, const fs::path& data, const fs::path& work) {
  if (data.empty() || !fs::exists(data / "ratings.csv") || !fs::exists(data / "movies.csv"))
    return {Verdict::Skip, "no MovieLens 25M directory (set NEUCLUST_MOVIELENS_DIR)"};
  const auto t0 = std::chrono::steady_clock::now();
  const auto catalog = ingest::parse_movies(data / "movies.csv");
  const auto table = ingest::parse_ratings(data / "ratings.csv", ingest::kDefaultMinEpoch);
  const auto built = ingest::filter_and_build(table, catalog);
  const auto inputs_dir = work / "movielens_inputs";
  ingest::export_env_inputs(built.inputs, inputs_dir, &built.stats);
  const auto& st = built.stats;
  auto near = [](double got, double want) { return std::abs(got - want) <= 0.1 * want; };
  const bool stats_ok = near(double(st.ratings_kept), 5e6) && near(double(st.movies_kept), 57000) &&
                        near(double(st.users_kept), 10000);

  auto cfg = config::load_config(source_dir / "configs" / "movielens.conf");
  cfg.env_dir = inputs_dir;
  cfg.out_dir = work / "movielens";
  const auto summary = harness::run_experiment(cfg, &std::cout);
  double nc = 0, cn = 0, lin = 0;
  for (const auto& p : summary.policies) {
    if (p.policy == "neuclust") nc = p.mean_regret;
    if (p.policy == "cnucb") cn = p.mean_regret;
    if (p.policy == "klinucb") lin = p.mean_regret;
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const bool order = nc < cn && cn < lin;
  const bool close = std::abs(nc - 152.0) <= 0.3 * 152.0;
  return verdict(stats_ok && order && close && secs < 7200,
                 "ratings " + std::to_string(st.ratings_kept) + ", movies " + std::to_string(st.movies_kept) +
                     ", users " + std::to_string(st.users_kept) + "; regret NeUClust " + fmt("%.1f", nc) +
                     ", CN-UCB " + fmt("%.1f", cn) + ", K-LinUCB " + fmt("%.1f", lin) + ", " + fmt("%.0f", secs) + " s");
}

// ---------------------------------------------------------------- criterion 10

std::string without_last_column(const std::string& csv) {
  std::istringstream in(csv);
  std::string line, out;
  while (std::getline(in, line)) out += line.substr(0, line.rfind(',')) + '\n';
  return out;
}

std::string first_lines(const std::string& text, std::size_t n) {
  std::size_t pos = 0;
  for (std::size_t i = 0; i < n && pos != std::string::npos; ++i) {
    pos = text.find('\n', pos);
    if (pos != std::string::npos) ++pos;
  }
  return text.substr(0, pos);
}

Outcome determinism(const fs::path& source_dir, const fs::path& work, const Bench& bench) {
  Bench base = bench;
  if (!base.ran) {
    base.cfg = config::load_config(source_dir / "configs" / "benchmark.conf");
    base.cfg.T = 250;
    base.cfg.seeds = {1, 2};
    base.out = base.cfg.out_dir = work / "determinism_base";
    fs::remove_all(base.out);
    harness::run_experiment(base.cfg);
  }
  std::size_t compared = 0, differing = 0;
  auto same = [&](const std::string& a, const std::string& b) {
    ++compared;
    if (a != b) ++differing;
  };

  // Cheap policies: full rerun, every file compared.
  auto lin = base.cfg;
  lin.policies.erase(std::remove_if(lin.policies.begin(), lin.policies.end(),
                                    [](const auto& p) { return p.kind == policy::PolicyKind::NeuClust; }),
                     lin.policies.end());
  lin.out_dir = work / "determinism_linear";
  fs::remove_all(lin.out_dir);
  harness::run_experiment(lin);
  for (const auto& p : lin.policies) {
    for (auto s : lin.seeds) {
      const auto f = "rounds_" + p.name + "_" + std::to_string(s) + ".csv";
      same(textio::read_file(base.out / f), textio::read_file(lin.out_dir / f));
    }
    const auto f = "curve_" + p.name + ".csv";
    same(textio::read_file(base.out / f), textio::read_file(lin.out_dir / f));
  }

  // NeUClust: every seed rerun over a shorter horizon; the per-round log is
  // a prefix of the full run's.
  auto nc = base.cfg;
  nc.policies.erase(std::remove_if(nc.policies.begin(), nc.policies.end(),
                                   [](const auto& p) { return p.kind != policy::PolicyKind::NeuClust; }),
                    nc.policies.end());
  nc.T = std::min<std::size_t>(base.cfg.T, 250);
  nc.out_dir = work / "determinism_neuclust";
  fs::remove_all(nc.out_dir);
  harness::run_experiment(nc);
  for (const auto& p : nc.policies)
    for (auto s : nc.seeds) {
      const auto f = "rounds_" + p.name + "_" + std::to_string(s) + ".csv";
      same(first_lines(textio::read_file(base.out / f), nc.T + 1), textio::read_file(nc.out_dir / f));
    }

  // summary.csv minus the wall-clock column, over the linear rerun's policies
  const auto lin_summary = without_last_column(textio::read_file(lin.out_dir / "summary.csv"));
  std::string base_rows;
  {
    std::istringstream in(without_last_column(textio::read_file(base.out / "summary.csv")));
    std::string line;
    std::getline(in, line);
    base_rows = line + '\n';
    while (std::getline(in, line))
      if (line.rfind("neuclust,", 0) != 0) base_rows += line + '\n';
  }
  same(base_rows, lin_summary);
  return verdict(differing == 0, std::to_string(compared) + " CSV comparisons, " + std::to_string(differing) +
                                     " differ");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance criteria"};
  fs::path work = fs::temp_directory_path() / "neuclust_acceptance";
  fs::path source_dir = NEUCLUST_SOURCE_DIR;
  std::string only;
  fs::path data;
  if (const char* e = std::getenv("NEUCLUST_MOVIELENS_DIR")) data = e;
  app.add_option("--work", work, "Scratch directory for run outputs");
  app.add_option("--only", only, "Criteria to run, e.g. 1,2,8");
  app.add_option("--movielens", data, "MovieLens 25M directory");
  CLI11_PARSE(app, argc, argv);

  std::set<std::uint64_t> selected;
  if (!only.empty())
    for (auto v : config::parse_uint_list(only)) selected.insert(v);
  auto wanted = [&](int n) { return selected.empty() || selected.contains(n); };

  fs::create_directories(work);
  Bench bench;
  const std::vector<std::pair<int, std::function<Outcome()>>> criteria{
      {1, gradients},
      {2, init_zero},
      {3, incremental_inverse},
      {4, monotone},
      {5, poisson_binomial},
      {6, oracle_equivalence},
      {7, kmeans_checks},
      {8, [&] { return benchmark(source_dir, work, bench); }},
      {9, [&] { return movielens(source_dir, data, work); }},
      {10, [&] { return determinism(source_dir, work, bench); }},
  };
  // Wall-clock limits for the property criteria.
  const double limit[] = {0, 10, 1, 5, 1, 5, 30, 10};

  int failures = 0;
  for (const auto& [n, run] : criteria) {
    if (!wanted(n)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {Verdict::Fail, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (n <= 7) {
      o.detail += ", " + fmt("%.2f", secs) + " s";
      if (secs >= limit[n] && o.verdict == Verdict::Pass) {
        o.verdict = Verdict::Fail;
        o.detail += " (limit " + fmt("%.0f", limit[n]) + " s)";
      }
    }
    const char* tag = o.verdict == Verdict::Pass ? "PASS" : o.verdict == Verdict::Fail ? "FAIL" : "SKIP";
    if (o.verdict == Verdict::Fail) ++failures;
    std::cout << tag << " criterion " << n << ": " << o.detail << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
