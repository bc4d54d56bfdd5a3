#include "neuclust/neural.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <random>
#include <string>

#include "neuclust/error.hpp"

namespace neuclust::neural {

void TrainBatch::add(std::span<const double> input, double target) {
  if (input.size() != dim_)
    throw InvalidArgument("TrainBatch::add: expected input of length " + std::to_string(dim_) +
                          ", got " + std::to_string(input.size()));
  if (!std::isfinite(target)) throw InvalidArgument("TrainBatch::add: non-finite target");
  inputs_.insert(inputs_.end(), input.begin(), input.end());
  targets_.push_back(target);
}

namespace {

void require_input(std::span<const double> x, std::size_t dim, const char* who) {
  if (x.size() != dim)
    throw InvalidArgument(std::string(who) + ": expected input of length " + std::to_string(dim) +
                          ", got " + std::to_string(x.size()));
  for (double v : x)
    if (!std::isfinite(v)) throw InvalidArgument(std::string(who) + ": non-finite input");
}

double relu(double v) { return v > 0.0 ? v : 0.0; }

// Per-sample activations for the base network.
struct BaseWorkspace {
  std::vector<Vector> pre;  // pre-activations per hidden layer
  std::vector<Vector> act;  // relu(pre)
  Vector delta;
  Vector delta_prev;

  explicit BaseWorkspace(const BaseNet& net)
      : pre(net.hidden_layers(), Vector(net.width())),
        act(net.hidden_layers(), Vector(net.width())),
        delta(net.width()),
        delta_prev(net.width()) {}
};

using NonZeros = std::vector<std::uint32_t>;

// Contexts are mostly sparse; the first layer only visits nonzero inputs.
void nonzeros_of(std::span<const double> x, NonZeros& out) {
  out.clear();
  for (std::size_t c = 0; c < x.size(); ++c)
    if (x[c] != 0.0) out.push_back(static_cast<std::uint32_t>(c));
}

// `w0t`, when given, is the first layer transposed (d x m); the column sweep
// vectorizes and adds terms in the same order as the row sweep.
double base_forward_cached(const BaseNet& net, std::span<const double> x, const NonZeros& nz,
                           BaseWorkspace& ws, const double* w0t = nullptr) {
  const std::size_t m = net.width();
  const auto theta = net.params();
  if (w0t != nullptr) {
    double* z = ws.pre[0].data();
    std::fill(z, z + m, 0.0);
    for (auto c : nz) {
      const double xc = x[c];
      const double* col = w0t + static_cast<std::size_t>(c) * m;
      for (std::size_t r = 0; r < m; ++r) z[r] += col[r] * xc;
    }
    for (std::size_t r = 0; r < m; ++r) ws.act[0][r] = relu(z[r]);
  } else {
    const double* w = theta.data();
    const std::size_t cols = x.size();
    for (std::size_t r = 0; r < m; ++r) {
      const double* wr = w + r * cols;
      double s = 0.0;
      for (auto c : nz) s += wr[c] * x[c];
      ws.pre[0][r] = s;
      ws.act[0][r] = relu(s);
    }
  }
  std::span<const double> in = ws.act[0];
  for (std::size_t k = 1; k < net.hidden_layers(); ++k) {
    const double* w = theta.data() + net.layer_offset(k);
    const std::size_t cols = in.size();
    Vector& z = ws.pre[k];
    Vector& a = ws.act[k];
    for (std::size_t r = 0; r < m; ++r) {
      const double* wr = w + r * cols;
      double s = 0.0;
      for (std::size_t c = 0; c < cols; ++c) s += wr[c] * in[c];
      z[r] = s;
      a[r] = relu(s);
    }
    in = a;
  }
  const double* wl = theta.data() + net.layer_offset(net.hidden_layers());
  double out = 0.0;
  for (std::size_t r = 0; r < m; ++r) out += wl[r] * in[r];
  return net.output_scale() * out;
}

// grad += coeff * d f / d theta, using activations from base_forward_cached.
void base_backward_accumulate(const BaseNet& net, std::span<const double> x, const NonZeros& nz,
                              BaseWorkspace& ws, double coeff, std::span<double> grad) {
  const std::size_t m = net.width();
  const std::size_t L = net.hidden_layers();
  const auto theta = net.params();
  const double c = coeff * net.output_scale();

  double* gl = grad.data() + net.layer_offset(L);
  const double* wl = theta.data() + net.layer_offset(L);
  const Vector& top = ws.act[L - 1];
  for (std::size_t r = 0; r < m; ++r) {
    gl[r] += c * top[r];
    ws.delta[r] = ws.pre[L - 1][r] > 0.0 ? c * wl[r] : 0.0;
  }

  for (std::size_t k = L; k-- > 0;) {
    std::span<const double> in = k == 0 ? x : std::span<const double>(ws.act[k - 1]);
    const std::size_t cols = in.size();
    double* g = grad.data() + net.layer_offset(k);
    for (std::size_t r = 0; r < m; ++r) {
      const double dr = ws.delta[r];
      if (dr == 0.0) continue;
      double* gr = g + r * cols;
      if (k == 0) {
        for (auto col : nz) gr[col] += dr * in[col];
      } else {
        for (std::size_t col = 0; col < cols; ++col) gr[col] += dr * in[col];
      }
    }
    if (k == 0) break;
    const double* w = theta.data() + net.layer_offset(k);
    std::fill(ws.delta_prev.begin(), ws.delta_prev.end(), 0.0);
    for (std::size_t r = 0; r < m; ++r) {
      const double dr = ws.delta[r];
      if (dr == 0.0) continue;
      const double* wr = w + r * m;
      for (std::size_t col = 0; col < m; ++col) ws.delta_prev[col] += dr * wr[col];
    }
    for (std::size_t col = 0; col < m; ++col)
      ws.delta[col] = ws.pre[k - 1][col] > 0.0 ? ws.delta_prev[col] : 0.0;
  }
}

// Sample weights of the data and regularizer terms for a batch of `used`
// samples drawn from `total`.
struct TermWeights {
  double data;
  double reg;
};

TermWeights term_weights(LossScale scale, std::size_t used, std::size_t total) {
  const double n = static_cast<double>(std::max<std::size_t>(total, 1));
  const double b = static_cast<double>(std::max<std::size_t>(used, 1));
  if (scale == LossScale::Sum) return {n / b, 1.0};
  return {1.0 / b, 1.0 / n};
}

double squared_offset(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

// Index set for one iteration: all samples, or a seeded subsample.
class BatchSampler {
 public:
  BatchSampler(std::size_t total, std::size_t batch_size, std::uint64_t seed)
      : total_(total), batch_(batch_size), rng_(seed), all_(total) {
    std::iota(all_.begin(), all_.end(), std::size_t{0});
  }

  bool full() const { return batch_ == 0 || batch_ >= total_; }

  const std::vector<std::size_t>& next() {
    if (full()) return all_;
    picked_.clear();
    std::sample(all_.begin(), all_.end(), std::back_inserter(picked_), batch_, rng_);
    return picked_;
  }

 private:
  std::size_t total_;
  std::size_t batch_;
  std::mt19937_64 rng_;
  std::vector<std::size_t> all_;
  std::vector<std::size_t> picked_;
};

void check_train_args(const TrainBatch& batch, const TrainOptions& opts, std::size_t dim,
                      const char* who) {
  if (opts.iterations == 0) return;
  if (batch.dim() != dim && !batch.empty())
    throw InvalidArgument(std::string(who) + ": batch dimension mismatch");
  if (!(opts.step_size > 0.0)) throw InvalidArgument(std::string(who) + ": step size must be > 0");
  if (opts.lambda < 0.0) throw InvalidArgument(std::string(who) + ": lambda must be >= 0");
}

}  // namespace

// ---------------------------------------------------------------- BaseNet

BaseNet::BaseNet(std::size_t input_dim, std::size_t width, std::size_t hidden_layers,
                 std::vector<double> theta)
    : BaseNet(input_dim, width, hidden_layers, theta, theta) {}

BaseNet::BaseNet(std::size_t input_dim, std::size_t width, std::size_t hidden_layers,
                 std::vector<double> theta, std::vector<double> theta0)
    : input_dim_(input_dim),
      width_(width),
      hidden_layers_(hidden_layers),
      output_scale_(std::sqrt(static_cast<double>(width))),
      theta_(std::move(theta)),
      theta0_(std::move(theta0)) {
  if (input_dim == 0 || width == 0 || hidden_layers == 0)
    throw InvalidArgument("BaseNet: sizes must be >= 1");
  const std::size_t p = param_count(input_dim, width, hidden_layers);
  if (theta_.size() != p || theta0_.size() != p)
    throw InvalidArgument("BaseNet: expected " + std::to_string(p) + " parameters, got " +
                          std::to_string(theta_.size()));
}

std::size_t BaseNet::param_count(std::size_t d, std::size_t m, std::size_t L) {
  return m * d + m * m * (L - 1) + m;
}

std::size_t BaseNet::layer_offset(std::size_t k) const {
  if (k > hidden_layers_) throw InvalidArgument("BaseNet::layer_offset: layer out of range");
  if (k == 0) return 0;
  return width_ * input_dim_ + width_ * width_ * (k - 1);
}

BaseNet init_base_net(std::size_t d, std::size_t m, std::size_t L, std::uint64_t seed) {
  if (L < 1) throw InvalidArgument("init_base_net: need at least one hidden layer");
  if (d == 0 || d % 2 != 0) throw InvalidArgument("init_base_net: input dimension must be even");
  if (m == 0 || m % 2 != 0) throw InvalidArgument("init_base_net: width must be even");

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> hidden(0.0, std::sqrt(4.0 / static_cast<double>(m)));
  std::normal_distribution<double> head(0.0, std::sqrt(2.0 / static_cast<double>(m)));

  std::vector<double> theta(BaseNet::param_count(d, m, L), 0.0);
  const std::size_t hm = m / 2;
  std::size_t offset = 0;
  for (std::size_t k = 0; k < L; ++k) {
    const std::size_t cols = k == 0 ? d : m;
    const std::size_t hc = cols / 2;
    for (std::size_t r = 0; r < hm; ++r) {
      for (std::size_t c = 0; c < hc; ++c) {
        const double w = hidden(rng);
        theta[offset + r * cols + c] = w;
        theta[offset + (r + hm) * cols + (c + hc)] = w;
      }
    }
    offset += m * cols;
  }
  for (std::size_t r = 0; r < hm; ++r) {
    const double w = head(rng);
    theta[offset + r] = w;
    theta[offset + hm + r] = -w;
  }
  return BaseNet(d, m, L, std::move(theta));
}

double forward_base(const BaseNet& net, std::span<const double> x) {
  require_input(x, net.input_dim(), "forward_base");
  BaseWorkspace ws(net);
  NonZeros nz;
  nonzeros_of(x, nz);
  return base_forward_cached(net, x, nz, ws);
}

double forward_grad_base(const BaseNet& net, std::span<const double> x, std::span<double> grad) {
  require_input(x, net.input_dim(), "grad_base");
  if (grad.size() != net.param_count()) throw InvalidArgument("grad_base: gradient buffer size");
  BaseWorkspace ws(net);
  NonZeros nz;
  nonzeros_of(x, nz);
  const double f = base_forward_cached(net, x, nz, ws);
  std::fill(grad.begin(), grad.end(), 0.0);
  base_backward_accumulate(net, x, nz, ws, 1.0, grad);
  return f;
}

Vector grad_base(const BaseNet& net, std::span<const double> x) {
  Vector g(net.param_count());
  forward_grad_base(net, x, g);
  return g;
}

double base_loss(const BaseNet& net, const TrainBatch& batch, double lambda1, LossScale scale) {
  BaseWorkspace ws(net);
  NonZeros nz;
  double data = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    nonzeros_of(batch.input(i), nz);
    const double e = base_forward_cached(net, batch.input(i), nz, ws) - batch.target(i);
    data += e * e;
  }
  const TermWeights w = term_weights(scale, batch.size(), batch.size());
  const double reg = static_cast<double>(net.width()) * lambda1 *
                     squared_offset(net.params(), net.initial_params());
  return 0.5 * (w.data * data + w.reg * reg);
}

void train_base(BaseNet& net, const TrainBatch& batch, const TrainOptions& opts) {
  check_train_args(batch, opts, net.input_dim(), "train_base");
  if (opts.iterations == 0) return;

  const std::size_t p = net.param_count();
  const double reg_coeff = static_cast<double>(net.width()) * opts.lambda;
  BaseWorkspace ws(net);
  BatchSampler sampler(batch.size(), opts.batch_size, opts.seed);
  Vector grad(p);
  const std::size_t m = net.width();
  const std::size_t d = net.input_dim();
  Vector w0t(m * d);
  std::vector<NonZeros> nonzeros(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) nonzeros_of(batch.input(i), nonzeros[i]);

  for (std::size_t it = 0; it < opts.iterations; ++it) {
    const auto& idx = sampler.next();
    const TermWeights w = term_weights(opts.loss_scale, idx.size(), batch.size());
    std::fill(grad.begin(), grad.end(), 0.0);
    {
      const auto theta = net.params();
      for (std::size_t r = 0; r < m; ++r)
        for (std::size_t c = 0; c < d; ++c) w0t[c * m + r] = theta[r * d + c];
    }
    double data = 0.0;
    for (std::size_t i : idx) {
      const auto x = batch.input(i);
      const double e = base_forward_cached(net, x, nonzeros[i], ws, w0t.data()) - batch.target(i);
      data += e * e;
      if (e != 0.0) base_backward_accumulate(net, x, nonzeros[i], ws, w.data * e, grad);
    }
    const auto theta = net.params();
    const auto theta0 = net.initial_params();
    double reg = 0.0;
    for (std::size_t j = 0; j < p; ++j) {
      const double off = theta[j] - theta0[j];
      reg += off * off;
      grad[j] += w.reg * reg_coeff * off;
    }
    const double loss = 0.5 * (w.data * data + w.reg * reg_coeff * reg);
    if (!std::isfinite(loss)) throw TrainingDiverged("train_base: non-finite loss", it);

    auto mut = net.mutable_params();
    for (std::size_t j = 0; j < p; ++j) mut[j] -= opts.step_size * grad[j];
  }
  for (double v : net.params())
    if (!std::isfinite(v)) throw TrainingDiverged("train_base: non-finite parameters", opts.iterations);
}

// ---------------------------------------------------------------- MonoNet

MonoNet::MonoNet(std::size_t input_dim, std::size_t width, std::size_t hidden_layers,
                 std::vector<double> params)
    : MonoNet(input_dim, width, hidden_layers, params, params) {}

MonoNet::MonoNet(std::size_t input_dim, std::size_t width, std::size_t hidden_layers,
                 std::vector<double> params, std::vector<double> params0)
    : input_dim_(input_dim),
      width_(width),
      hidden_layers_(hidden_layers),
      params_(std::move(params)),
      params0_(std::move(params0)) {
  if (input_dim == 0 || width == 0) throw InvalidArgument("MonoNet: sizes must be >= 1");
  const std::size_t p = param_count(input_dim, width, hidden_layers);
  if (params_.size() != p || params0_.size() != p)
    throw InvalidArgument("MonoNet: expected " + std::to_string(p) + " parameters, got " +
                          std::to_string(params_.size()));
}

std::size_t MonoNet::param_count(std::size_t K, std::size_t n, std::size_t Lm) {
  std::size_t total = 0;
  std::size_t cols = K;
  for (std::size_t k = 0; k <= Lm; ++k) {
    const std::size_t rows = k == Lm ? 1 : n;
    total += rows * cols + rows;
    cols = rows;
  }
  return total;
}

std::size_t MonoNet::layer_rows(std::size_t k) const { return k == hidden_layers_ ? 1 : width_; }

std::size_t MonoNet::layer_cols(std::size_t k) const { return k == 0 ? input_dim_ : width_; }

std::size_t MonoNet::weight_offset(std::size_t k) const {
  if (k > hidden_layers_) throw InvalidArgument("MonoNet::weight_offset: layer out of range");
  std::size_t off = 0;
  for (std::size_t j = 0; j < k; ++j) off += layer_rows(j) * layer_cols(j) + layer_rows(j);
  return off;
}

std::size_t MonoNet::bias_offset(std::size_t k) const {
  return weight_offset(k) + layer_rows(k) * layer_cols(k);
}

MonoNet init_mono_net(std::size_t K, std::size_t n, std::size_t Lm, std::uint64_t seed) {
  if (K == 0 || n == 0) throw InvalidArgument("init_mono_net: sizes must be >= 1");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> dist(1.0 / static_cast<double>(n), 1.0);
  std::vector<double> params(MonoNet::param_count(K, n, Lm));
  for (double& v : params) v = dist(rng);
  return MonoNet(K, n, Lm, std::move(params));
}

double weight_transform(double raw) { return 1.0 / (1.0 + std::exp(-raw)); }

namespace {

struct MonoWorkspace {
  std::vector<Vector> q;    // transformed weights per layer
  std::vector<Vector> pre;  // pre-activations per layer
  std::vector<Vector> act;  // relu(pre) for hidden layers
  Vector input;             // clamped input
  Vector delta;
  Vector delta_prev;

  explicit MonoWorkspace(const MonoNet& net) {
    for (std::size_t k = 0; k < net.layer_count(); ++k) {
      q.emplace_back(net.layer_rows(k) * net.layer_cols(k));
      pre.emplace_back(net.layer_rows(k));
      act.emplace_back(net.layer_rows(k));
    }
    input.resize(net.input_dim());
    const std::size_t wide = std::max(net.width(), net.input_dim());
    delta.resize(wide);
    delta_prev.resize(wide);
  }

  void transform_weights(const MonoNet& net) {
    const auto params = net.params();
    for (std::size_t k = 0; k < net.layer_count(); ++k) {
      const double* raw = params.data() + net.weight_offset(k);
      for (std::size_t j = 0; j < q[k].size(); ++j) q[k][j] = weight_transform(raw[j]);
    }
  }
};

double mono_forward_cached(const MonoNet& net, std::span<const double> inputs, MonoWorkspace& ws) {
  for (std::size_t j = 0; j < inputs.size(); ++j) ws.input[j] = relu(inputs[j]);
  const auto params = net.params();
  std::span<const double> in = ws.input;
  const std::size_t last = net.hidden_layers();
  for (std::size_t k = 0; k <= last; ++k) {
    const std::size_t rows = net.layer_rows(k);
    const std::size_t cols = net.layer_cols(k);
    const double* q = ws.q[k].data();
    const double* b = params.data() + net.bias_offset(k);
    for (std::size_t r = 0; r < rows; ++r) {
      double s = b[r];
      for (std::size_t c = 0; c < cols; ++c) s += q[r * cols + c] * in[c];
      ws.pre[k][r] = s;
      ws.act[k][r] = k == last ? s : relu(s);
    }
    in = ws.act[k];
  }
  return ws.pre[last][0];
}

void mono_backward_accumulate(const MonoNet& net, MonoWorkspace& ws, double coeff,
                              std::span<double> grad) {
  const std::size_t last = net.hidden_layers();
  ws.delta[0] = coeff;
  for (std::size_t k = last + 1; k-- > 0;) {
    const std::size_t rows = net.layer_rows(k);
    const std::size_t cols = net.layer_cols(k);
    std::span<const double> in = k == 0 ? std::span<const double>(ws.input)
                                        : std::span<const double>(ws.act[k - 1]);
    const double* q = ws.q[k].data();
    double* gw = grad.data() + net.weight_offset(k);
    double* gb = grad.data() + net.bias_offset(k);
    for (std::size_t r = 0; r < rows; ++r) {
      const double dr = ws.delta[r];
      if (dr == 0.0) continue;
      gb[r] += dr;
      for (std::size_t c = 0; c < cols; ++c) {
        const double qv = q[r * cols + c];
        gw[r * cols + c] += dr * in[c] * qv * (1.0 - qv);
      }
    }
    if (k == 0) break;
    std::fill(ws.delta_prev.begin(), ws.delta_prev.begin() + cols, 0.0);
    for (std::size_t r = 0; r < rows; ++r) {
      const double dr = ws.delta[r];
      if (dr == 0.0) continue;
      for (std::size_t c = 0; c < cols; ++c) ws.delta_prev[c] += dr * q[r * cols + c];
    }
    for (std::size_t c = 0; c < cols; ++c)
      ws.delta[c] = ws.pre[k - 1][c] > 0.0 ? ws.delta_prev[c] : 0.0;
  }
}

}  // namespace

double forward_mono(const MonoNet& net, std::span<const double> inputs) {
  require_input(inputs, net.input_dim(), "forward_mono");
  MonoWorkspace ws(net);
  ws.transform_weights(net);
  return mono_forward_cached(net, inputs, ws);
}

Vector grad_mono(const MonoNet& net, std::span<const double> inputs) {
  require_input(inputs, net.input_dim(), "grad_mono");
  MonoWorkspace ws(net);
  ws.transform_weights(net);
  mono_forward_cached(net, inputs, ws);
  Vector g(net.param_count(), 0.0);
  mono_backward_accumulate(net, ws, 1.0, g);
  return g;
}

double mono_loss(const MonoNet& net, const TrainBatch& batch, double lambda2, LossScale scale) {
  MonoWorkspace ws(net);
  ws.transform_weights(net);
  double data = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const double e = mono_forward_cached(net, batch.input(i), ws) - batch.target(i);
    data += e * e;
  }
  const TermWeights w = term_weights(scale, batch.size(), batch.size());
  const double reg = static_cast<double>(net.width()) * lambda2 *
                     squared_offset(net.params(), net.initial_params());
  return 0.5 * (w.data * data + w.reg * reg);
}

void train_mono(MonoNet& net, const TrainBatch& batch, const TrainOptions& opts) {
  check_train_args(batch, opts, net.input_dim(), "train_mono");
  if (opts.iterations == 0) return;

  const std::size_t p = net.param_count();
  const double reg_coeff = static_cast<double>(net.width()) * opts.lambda;
  MonoWorkspace ws(net);
  BatchSampler sampler(batch.size(), opts.batch_size, opts.seed);
  Vector grad(p);
  const std::size_t m = net.width();
  const std::size_t d = net.input_dim();
  Vector w0t(m * d);
  std::vector<NonZeros> nonzeros(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) nonzeros_of(batch.input(i), nonzeros[i]);

  for (std::size_t it = 0; it < opts.iterations; ++it) {
    ws.transform_weights(net);
    const auto& idx = sampler.next();
    const TermWeights w = term_weights(opts.loss_scale, idx.size(), batch.size());
    std::fill(grad.begin(), grad.end(), 0.0);
    double data = 0.0;
    for (std::size_t i : idx) {
      const double e = mono_forward_cached(net, batch.input(i), ws) - batch.target(i);
      data += e * e;
      if (e != 0.0) mono_backward_accumulate(net, ws, w.data * e, grad);
    }
    const auto params = net.params();
    const auto params0 = net.initial_params();
    double reg = 0.0;
    for (std::size_t j = 0; j < p; ++j) {
      const double off = params[j] - params0[j];
      reg += off * off;
      grad[j] += w.reg * reg_coeff * off;
    }
    const double loss = 0.5 * (w.data * data + w.reg * reg_coeff * reg);
    if (!std::isfinite(loss)) throw TrainingDiverged("train_mono: non-finite loss", it);

    auto mut = net.mutable_params();
    for (std::size_t j = 0; j < p; ++j) mut[j] -= opts.step_size * grad[j];
  }
  for (double v : net.params())
    if (!std::isfinite(v)) throw TrainingDiverged("train_mono: non-finite parameters", opts.iterations);
}

// ---------------------------------------------------------------- checkpoints

namespace {

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

template <typename T>
void write_le(std::ofstream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_le(std::ifstream& in, const std::filesystem::path& path) {
  T value{};
  if (!in.read(reinterpret_cast<char*>(&value), sizeof(T)))
    throw ParseError("truncated checkpoint: " + path.string());
  return value;
}

void write_checkpoint(const std::filesystem::path& path, const char magic[4],
                      const std::vector<std::uint64_t>& widths, std::span<const double> params,
                      std::span<const double> params0) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write checkpoint: " + path.string());
  out.write(magic, 4);
  write_le<std::uint32_t>(out, static_cast<std::uint32_t>(widths.size()));
  for (auto w : widths) write_le<std::uint64_t>(out, w);
  write_le<std::uint64_t>(out, params.size());
  for (double v : params) write_le<double>(out, v);
  for (double v : params0) write_le<double>(out, v);
  if (!out) throw IoError("failed writing checkpoint: " + path.string());
}

struct RawCheckpoint {
  std::vector<std::uint64_t> widths;
  std::vector<double> params;
  std::vector<double> params0;
};

RawCheckpoint read_checkpoint(const std::filesystem::path& path, const char magic[4]) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint: " + path.string());
  char got[4];
  if (!in.read(got, 4) || std::memcmp(got, magic, 4) != 0)
    throw ParseError("bad checkpoint magic: " + path.string());
  RawCheckpoint ck;
  const auto count = read_le<std::uint32_t>(in, path);
  if (count < 2 || count > 1024) throw ParseError("bad checkpoint width list: " + path.string());
  for (std::uint32_t i = 0; i < count; ++i) ck.widths.push_back(read_le<std::uint64_t>(in, path));
  const auto p = read_le<std::uint64_t>(in, path);
  if (p > (std::uint64_t{1} << 32)) throw ParseError("bad checkpoint size: " + path.string());
  ck.params.resize(p);
  ck.params0.resize(p);
  for (auto& v : ck.params) v = read_le<double>(in, path);
  for (auto& v : ck.params0) v = read_le<double>(in, path);
  return ck;
}

}  // namespace

void save_checkpoint(const BaseNet& net, const std::filesystem::path& path) {
  std::vector<std::uint64_t> widths{net.input_dim()};
  for (std::size_t k = 0; k < net.hidden_layers(); ++k) widths.push_back(net.width());
  widths.push_back(1);
  write_checkpoint(path, "NCBN", widths, net.params(), net.initial_params());
}

void save_checkpoint(const MonoNet& net, const std::filesystem::path& path) {
  std::vector<std::uint64_t> widths{net.input_dim()};
  for (std::size_t k = 0; k < net.hidden_layers(); ++k) widths.push_back(net.width());
  widths.push_back(1);
  write_checkpoint(path, "NCMN", widths, net.params(), net.initial_params());
}

BaseNet load_base_checkpoint(const std::filesystem::path& path) {
  auto ck = read_checkpoint(path, "NCBN");
  if (ck.widths.size() < 3) throw ParseError("base checkpoint needs a hidden layer: " + path.string());
  return BaseNet(ck.widths.front(), ck.widths[1], ck.widths.size() - 2, std::move(ck.params),
                 std::move(ck.params0));
}

MonoNet load_mono_checkpoint(const std::filesystem::path& path) {
  auto ck = read_checkpoint(path, "NCMN");
  const std::size_t hidden = ck.widths.size() - 2;
  const std::size_t width = hidden > 0 ? ck.widths[1] : 1;
  return MonoNet(ck.widths.front(), width, hidden, std::move(ck.params), std::move(ck.params0));
}

}  // namespace neuclust::neural
