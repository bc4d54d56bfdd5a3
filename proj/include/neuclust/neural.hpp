#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace neuclust::neural {

using Vector = std::vector<double>;

/// How the data term of a training objective is normalized.
///   Sum:  1/2 sum_i (f_i - y_i)^2 + (w lambda / 2) ||theta - theta0||^2
///   Mean: the same objective divided by the number of samples.
/// Both have the same minimizer; Mean keeps a fixed step size stable as the
/// history grows.
enum class LossScale { Sum, Mean };

/// Inputs and regression targets accumulated over rounds. Inputs are stored
/// row-major, one row per sample.
class TrainBatch {
 public:
  explicit TrainBatch(std::size_t dim = 0) : dim_(dim) {}

  void add(std::span<const double> input, double target);

  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return targets_.size(); }
  bool empty() const noexcept { return targets_.empty(); }
  std::span<const double> input(std::size_t i) const { return {inputs_.data() + i * dim_, dim_}; }
  double target(std::size_t i) const { return targets_[i]; }
  std::span<const double> targets() const noexcept { return targets_; }

 private:
  std::size_t dim_;
  std::vector<double> inputs_;
  std::vector<double> targets_;
};

struct TrainOptions {
  double step_size = 1e-3;
  std::size_t iterations = 40;
  double lambda = 1.0;
  LossScale loss_scale = LossScale::Mean;
  /// 0 trains on the full history each iteration; otherwise each iteration
  /// draws this many samples without replacement.
  std::size_t batch_size = 0;
  std::uint64_t seed = 0;
};

/// Fully connected ReLU network without biases:
///   f(x) = sqrt(m) W_L relu(W_{L-1} ... relu(W_0 x))
/// Parameters are flattened as [vec(W_0), ..., vec(W_L)], each matrix
/// row-major, so p = m d + m^2 (L - 1) + m.
class BaseNet {
 public:
  /// theta0 is a copy of theta.
  BaseNet(std::size_t input_dim, std::size_t width, std::size_t hidden_layers,
          std::vector<double> theta);
  BaseNet(std::size_t input_dim, std::size_t width, std::size_t hidden_layers,
          std::vector<double> theta, std::vector<double> theta0);

  static std::size_t param_count(std::size_t input_dim, std::size_t width,
                                 std::size_t hidden_layers);

  std::size_t input_dim() const noexcept { return input_dim_; }
  std::size_t width() const noexcept { return width_; }
  std::size_t hidden_layers() const noexcept { return hidden_layers_; }
  std::size_t param_count() const noexcept { return theta_.size(); }
  double output_scale() const noexcept { return output_scale_; }

  std::span<const double> params() const noexcept { return theta_; }
  std::span<double> mutable_params() noexcept { return theta_; }
  /// Snapshot taken at construction; the regularizer anchor.
  std::span<const double> initial_params() const noexcept { return theta0_; }

  /// Offset of layer `k`'s weight matrix inside params().
  std::size_t layer_offset(std::size_t k) const;

 private:
  std::size_t input_dim_;
  std::size_t width_;
  std::size_t hidden_layers_;
  double output_scale_;
  std::vector<double> theta_;
  std::vector<double> theta0_;
};

/// Block initialization: every W_l = (W, 0; 0, W) with W ~ N(0, 4/m) and
/// W_L = (w^T, -w^T) with w ~ N(0, 2/m), so f(x; theta0) = 0 whenever the
/// two halves of x coincide. Requires even d and m.
BaseNet init_base_net(std::size_t input_dim, std::size_t width, std::size_t hidden_layers,
                      std::uint64_t seed);

double forward_base(const BaseNet& net, std::span<const double> x);
Vector grad_base(const BaseNet& net, std::span<const double> x);
/// Returns f(x) and writes the gradient into `grad` (length p).
double forward_grad_base(const BaseNet& net, std::span<const double> x, std::span<double> grad);

double base_loss(const BaseNet& net, const TrainBatch& batch, double lambda1,
                 LossScale scale = LossScale::Mean);

/// Gradient descent on base_loss starting from the current parameters.
void train_base(BaseNet& net, const TrainBatch& batch, const TrainOptions& opts);

/// Monotone network over K nonnegative inputs:
///   o_{k+1} = relu(q(Theta_k) o_k + b_k) for hidden layers,
///   F = q(Theta_L) o_L + b_L at the output,
/// with q the logistic sigmoid applied elementwise to the raw weights.
/// Layer k stores its raw weights (row-major) followed by its biases.
class MonoNet {
 public:
  MonoNet(std::size_t input_dim, std::size_t width, std::size_t hidden_layers,
          std::vector<double> params);
  MonoNet(std::size_t input_dim, std::size_t width, std::size_t hidden_layers,
          std::vector<double> params, std::vector<double> params0);

  static std::size_t param_count(std::size_t input_dim, std::size_t width,
                                 std::size_t hidden_layers);

  std::size_t input_dim() const noexcept { return input_dim_; }
  std::size_t width() const noexcept { return width_; }
  std::size_t hidden_layers() const noexcept { return hidden_layers_; }
  std::size_t param_count() const noexcept { return params_.size(); }

  std::size_t layer_count() const noexcept { return hidden_layers_ + 1; }
  std::size_t layer_rows(std::size_t k) const;
  std::size_t layer_cols(std::size_t k) const;
  std::size_t weight_offset(std::size_t k) const;
  std::size_t bias_offset(std::size_t k) const;

  std::span<const double> params() const noexcept { return params_; }
  std::span<double> mutable_params() noexcept { return params_; }
  std::span<const double> initial_params() const noexcept { return params0_; }

 private:
  std::size_t input_dim_;
  std::size_t width_;
  std::size_t hidden_layers_;
  std::vector<double> params_;
  std::vector<double> params0_;
};

/// Every raw weight and bias drawn from N(1/n, 1).
MonoNet init_mono_net(std::size_t input_dim, std::size_t width, std::size_t hidden_layers,
                      std::uint64_t seed);

double weight_transform(double raw);

/// Negative inputs are clamped to zero before evaluation.
double forward_mono(const MonoNet& net, std::span<const double> inputs);
/// Gradient with respect to the raw parameters.
Vector grad_mono(const MonoNet& net, std::span<const double> inputs);

double mono_loss(const MonoNet& net, const TrainBatch& batch, double lambda2,
                 LossScale scale = LossScale::Mean);
void train_mono(MonoNet& net, const TrainBatch& batch, const TrainOptions& opts);

/// Checkpoint files: 4-byte magic ("NCBN" or "NCMN"), uint32 count of
/// width entries, that many uint64 widths, uint64 parameter count, then the
/// current and the initial parameter arrays as float64. All little-endian.
void save_checkpoint(const BaseNet& net, const std::filesystem::path& path);
void save_checkpoint(const MonoNet& net, const std::filesystem::path& path);
BaseNet load_base_checkpoint(const std::filesystem::path& path);
MonoNet load_mono_checkpoint(const std::filesystem::path& path);

}  // namespace neuclust::neural
