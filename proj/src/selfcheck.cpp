#include "neuclust/selfcheck.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <random>

#include "neuclust/clustering.hpp"
#include "neuclust/environment.hpp"
#include "neuclust/linalg.hpp"
#include "neuclust/neural.hpp"

namespace neuclust::selfcheck {

namespace {

using linalg::DenseMatrix;
using linalg::Vector;

std::string fmt(const char* f, double v) {
  char buf[96];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

double rel_err(double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-6}); }

// Smallest |pre-activation| of the base net on x; finite differences are
// only meaningful away from ReLU kinks.
double base_kink_margin(const neural::BaseNet& net, std::span<const double> x) {
  const auto th = net.params();
  Vector in(x.begin(), x.end());
  double margin = INFINITY;
  for (std::size_t k = 0; k < net.hidden_layers(); ++k) {
    const double* w = th.data() + net.layer_offset(k);
    Vector out(net.width());
    for (std::size_t r = 0; r < net.width(); ++r) {
      double s = 0.0;
      for (std::size_t c = 0; c < in.size(); ++c) s += w[r * in.size() + c] * in[c];
      margin = std::min(margin, std::abs(s));
      out[r] = std::max(0.0, s);
    }
    in = std::move(out);
  }
  return margin;
}

double mono_kink_margin(const neural::MonoNet& net, std::span<const double> u) {
  const auto th = net.params();
  Vector in(u.begin(), u.end());
  double margin = INFINITY;
  for (std::size_t k = 0; k + 1 < net.layer_count(); ++k) {
    const std::size_t rows = net.layer_rows(k), cols = net.layer_cols(k);
    Vector out(rows);
    for (std::size_t r = 0; r < rows; ++r) {
      double s = th[net.bias_offset(k) + r];
      for (std::size_t c = 0; c < cols; ++c) s += neural::weight_transform(th[net.weight_offset(k) + r * cols + c]) * in[c];
      margin = std::min(margin, std::abs(s));
      out[r] = std::max(0.0, s);
    }
    in = std::move(out);
  }
  return margin;
}

template <class Net, class F>
double fd_max_error(Net& net, std::span<const double> analytic, F&& f) {
  constexpr double h = 1e-5;
  double worst = 0.0;
  auto p = net.mutable_params();
  for (std::size_t j = 0; j < p.size(); ++j) {
    const double keep = p[j];
    p[j] = keep + h;
    const double up = f();
    p[j] = keep - h;
    const double down = f();
    p[j] = keep;
    worst = std::max(worst, rel_err(analytic[j], (up - down) / (2 * h)));
  }
  return worst;
}

PropertyResult base_gradient(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  double worst = 0.0;
  int checked = 0;
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t L = 1 + trial % 2;
    auto net = neural::init_base_net(6, 8, L, rng());
    Vector x(6);
    do {
      for (auto& v : x) v = u(rng);
    } while (base_kink_margin(net, x) < 1e-3);
    const Vector g = neural::grad_base(net, x);
    worst = std::max(worst, fd_max_error(net, g, [&] { return neural::forward_base(net, x); }));
    ++checked;
  }
  return {"base_gradient_fd", worst < 1e-4, std::to_string(checked) + " nets, max rel err " + fmt("%.2e", worst)};
}

PropertyResult mono_gradient(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.05, 1.5);
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    auto net = neural::init_mono_net(5, 6, 1 + trial % 2, rng());
    Vector x(5);
    do {
      for (auto& v : x) v = u(rng);
    } while (mono_kink_margin(net, x) < 1e-3);
    const Vector g = neural::grad_mono(net, x);
    worst = std::max(worst, fd_max_error(net, g, [&] { return neural::forward_mono(net, x); }));
  }
  return {"mono_gradient_fd", worst < 1e-4, "20 nets, max rel err " + fmt("%.2e", worst)};
}

PropertyResult init_zero(std::mt19937_64& rng) {
  std::normal_distribution<double> n01(0.0, 1.0);
  double worst = 0.0;
  for (std::size_t m : {4u, 20u, 64u}) {
    auto net = neural::init_base_net(10, m, 2, rng());
    for (int i = 0; i < 50; ++i) {
      Vector x(10);
      for (std::size_t j = 0; j < 5; ++j) x[j] = x[j + 5] = n01(rng);
      worst = std::max(worst, std::abs(neural::forward_base(net, x)));
    }
  }
  return {"init_zero_duplicated_halves", worst < 1e-8, "max |f| " + fmt("%.2e", worst)};
}

std::vector<PropertyResult> confidence_checks(std::mt19937_64& rng, bool corrupt) {
  constexpr std::size_t p = 16;
  linalg::ConfidenceState st(p, 1.0);
  std::normal_distribution<double> n01(0.0, 1.0);
  for (int i = 0; i < 300; ++i) {
    Vector v(p);
    for (auto& x : v) x = n01(rng) * 0.5;
    st.rank1_update(v);
  }
  if (corrupt) st.mutable_z_for_testing()(0, 1) += 0.5;

  const DenseMatrix& z = st.z();
  double asym = 0.0;
  for (std::size_t i = 0; i < p; ++i)
    for (std::size_t j = 0; j < p; ++j) asym = std::max(asym, std::abs(z(i, j) - z(j, i)));
  const DenseMatrix prod = linalg::multiply(z, st.z_inv());
  const DenseMatrix resid = linalg::subtract(prod, DenseMatrix::identity(p));
  const double err = linalg::frobenius_norm(resid);
  const bool sm_ok = asym < 1e-9 && err < 1e-6;

  double ld_err = INFINITY;
  if (auto chol = linalg::cholesky(z)) ld_err = std::abs(linalg::log_det_spd(z) - st.log_det());
  return {
      {"sherman_morrison_inverse", sm_ok,
       "||Z Zinv - I||_F " + fmt("%.2e", err) + ", asymmetry " + fmt("%.2e", asym)},
      {"log_det_lemma", ld_err < 1e-6, "|maintained - direct| " + fmt("%.2e", ld_err)},
  };
}

PropertyResult monotone(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-0.5, 2.0), bump(0.0, 1.0);
  int violations = 0;
  for (int i = 0; i < 500; ++i) {
    auto net = neural::init_mono_net(5, 6, 1 + i % 2, rng());
    Vector a(5), b(5);
    for (std::size_t j = 0; j < 5; ++j) {
      a[j] = u(rng);
      b[j] = a[j] + bump(rng);
    }
    if (neural::forward_mono(net, a) > neural::forward_mono(net, b)) ++violations;
  }
  return {"mono_monotone", violations == 0, std::to_string(violations) + " violations in 500 ordered pairs"};
}

PropertyResult poisson_binomial(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t K = 1 + trial % 10;
    Vector mu(K);
    for (auto& v : mu) v = u(rng);
    const Vector pmf = env::poisson_binomial_pmf(mu);
    Vector brute(K + 1, 0.0);
    for (std::size_t mask = 0; mask < (1u << K); ++mask) {
      double pr = 1.0;
      std::size_t ones = 0;
      for (std::size_t i = 0; i < K; ++i) {
        const bool on = (mask >> i) & 1u;
        pr *= on ? mu[i] : 1.0 - mu[i];
        ones += on;
      }
      brute[ones] += pr;
    }
    for (std::size_t k = 0; k <= K; ++k) worst = std::max(worst, std::abs(pmf[k] - brute[k]));
  }
  return {"poisson_binomial_vs_enumeration", worst < 1e-12, "max abs diff " + fmt("%.2e", worst)};
}

PropertyResult oracle_equivalence(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst = 0.0;
  constexpr std::size_t N = 9, K = 4;
  for (int trial = 0; trial < 30; ++trial) {
    Vector mu(N);
    for (auto& v : mu) v = u(rng);
    const double topk = env::optimal_expected(mu, K, 0.8).value;
    double best = 0.0;
    for (std::size_t mask = 0; mask < (1u << N); ++mask) {
      if (static_cast<std::size_t>(std::popcount(mask)) != K) continue;
      Vector chosen;
      for (std::size_t i = 0; i < N; ++i)
        if ((mask >> i) & 1u) chosen.push_back(mu[i]);
      best = std::max(best, env::expected_super_reward(chosen, 0.8));
    }
    worst = std::max(worst, std::abs(best - topk));
  }
  return {"oracle_topk_equals_exhaustive", worst < 1e-12, "max gap " + fmt("%.2e", worst)};
}

PropertyResult kmeans_inertia(std::mt19937_64& rng) {
  std::normal_distribution<double> n01(0.0, 1.0);
  int bad = 0;
  for (int trial = 0; trial < 20; ++trial) {
    DenseMatrix x(60, 3);
    for (auto& v : x.data()) v = n01(rng);
    const auto c = clustering::kmeans(x, 4, 100, rng());
    for (std::size_t i = 1; i < c.inertia_trace.size(); ++i)
      if (c.inertia_trace[i] > c.inertia_trace[i - 1] * (1 + 1e-12)) ++bad;
  }
  return {"kmeans_inertia_nonincreasing", bad == 0, std::to_string(bad) + " increases over 20 runs"};
}

PropertyResult checkpoint_roundtrip(std::mt19937_64& rng) {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / ("neuclust_selfcheck_" + std::to_string(rng()));
  bool ok = false;
  std::string detail;
  try {
    fs::create_directories(dir);
    auto base = neural::init_base_net(4, 6, 2, rng());
    base.mutable_params()[3] += 0.25;
    auto mono = neural::init_mono_net(3, 5, 1, rng());
    neural::save_checkpoint(base, dir / "b.bin");
    neural::save_checkpoint(mono, dir / "m.bin");
    const auto b2 = neural::load_base_checkpoint(dir / "b.bin");
    const auto m2 = neural::load_mono_checkpoint(dir / "m.bin");
    ok = std::ranges::equal(b2.params(), base.params()) &&
         std::ranges::equal(b2.initial_params(), base.initial_params()) &&
         std::ranges::equal(m2.params(), mono.params());
    detail = ok ? "bit-identical parameters" : "parameters differ after reload";
  } catch (const std::exception& e) {
    detail = e.what();
  }
  std::error_code ec;
  fs::remove_all(dir, ec);
  return {"checkpoint_roundtrip", ok, detail};
}

PropertyResult training_descends(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  auto net = neural::init_base_net(4, 8, 1, rng());
  neural::TrainBatch batch(4);
  for (int i = 0; i < 40; ++i) {
    Vector x(4);
    for (auto& v : x) v = u(rng);
    batch.add(x, x[0] * x[1]);
  }
  const double before = neural::base_loss(net, batch, 1.0);
  neural::TrainOptions o;
  o.step_size = 1e-4;
  o.iterations = 20;
  neural::train_base(net, batch, o);
  const double after = neural::base_loss(net, batch, 1.0);
  return {"training_loss_nonincreasing", after <= before,
          "loss " + fmt("%.6g", before) + " -> " + fmt("%.6g", after)};
}

}  // namespace

std::vector<PropertyResult> run(const Options& opts) {
  std::mt19937_64 rng(opts.seed);
  std::vector<PropertyResult> out;
  auto guard = [&](const char* name, const std::function<void()>& body) {
    try {
      body();
    } catch (const std::exception& e) {
      out.push_back({name, false, std::string("threw: ") + e.what()});
    }
  };
  guard("base_gradient_fd", [&] { out.push_back(base_gradient(rng)); });
  guard("mono_gradient_fd", [&] { out.push_back(mono_gradient(rng)); });
  guard("init_zero_duplicated_halves", [&] { out.push_back(init_zero(rng)); });
  guard("sherman_morrison_inverse", [&] {
    for (auto& r : confidence_checks(rng, opts.corrupt_confidence)) out.push_back(std::move(r));
  });
  guard("mono_monotone", [&] { out.push_back(monotone(rng)); });
  guard("poisson_binomial_vs_enumeration", [&] { out.push_back(poisson_binomial(rng)); });
  guard("oracle_topk_equals_exhaustive", [&] { out.push_back(oracle_equivalence(rng)); });
  guard("kmeans_inertia_nonincreasing", [&] { out.push_back(kmeans_inertia(rng)); });
  guard("checkpoint_roundtrip", [&] { out.push_back(checkpoint_roundtrip(rng)); });
  guard("training_loss_nonincreasing", [&] { out.push_back(training_descends(rng)); });
  return out;
}

std::string format_report(const std::vector<PropertyResult>& results) {
  std::string s;
  for (const auto& r : results) s += std::string(r.passed ? "PASS " : "FAIL ") + r.name + ": " + r.detail + '\n';
  return s;
}

bool all_passed(const std::vector<PropertyResult>& results) {
  return !results.empty() && std::ranges::all_of(results, [](const auto& r) { return r.passed; });
}

}  // namespace neuclust::selfcheck
