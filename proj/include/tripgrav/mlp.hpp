#pragma once

// Five-hidden-layer ReLU regression network trained with Adam on L1 loss.
//
// Hidden layer l computes  h = dropout(relu(bn(W_l a + b_l))).  Batch norm is
// optional; when enabled it is skipped for training batches with fewer than 2
// samples (batch variance is undefined there) and uses running statistics at
// inference. Dropout is inverted dropout, active only during training.
//
// All trainable parameters live in one flat vector, laid out per hidden layer
// as [W (column-major, out x in), b, gamma, beta] followed by the output layer
// [w (1 x in), b]. gamma/beta are present only when batch norm is enabled.

#include <array>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "tripgrav/core.hpp"
#include "tripgrav/rng.hpp"

namespace tripgrav {

inline constexpr std::size_t kHiddenLayers = 5;

struct MlpConfig {
  std::array<std::size_t, kHiddenLayers> layer_widths{128, 64, 32, 16, 8};
  double learning_rate = 0.00097;
  double dropout_rate = 0.111;
  std::size_t batch_size = 64;
  std::size_t epochs = 100;
  bool use_batch_norm = true;
  std::uint64_t seed = 0;

  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  double bn_momentum = 0.1;
  double bn_epsilon = 1e-5;

  void validate() const {
    if (!(learning_rate > 0.0)) throw Error("ml_models", ErrorKind::validation, "learning_rate must be > 0");
    if (!(dropout_rate >= 0.0 && dropout_rate < 1.0))
      throw Error("ml_models", ErrorKind::validation, "dropout_rate must lie in [0,1)");
    if (batch_size < 1) throw Error("ml_models", ErrorKind::validation, "batch_size must be >= 1");
    for (auto w : layer_widths)
      if (w < 1) throw Error("ml_models", ErrorKind::validation, "layer widths must be positive");
  }
};

class Mlp {
 public:
  using Matrix = Eigen::MatrixXd;
  using Vector = Eigen::VectorXd;

  Mlp() = default;

  /// Builds an untrained network with He-uniform weights and zero biases.
  Mlp(const MlpConfig& config, std::size_t input_width) : config_(config), input_width_(input_width) {
    config_.validate();
    if (input_width == 0) throw Error("ml_models", ErrorKind::validation, "input width must be positive");
    layout();
    params_.assign(total_, 0.0);
    Rng rng(derive_seed(config_.seed, 0x1417));
    std::size_t fan_in = input_width_;
    for (std::size_t l = 0; l <= kHiddenLayers; ++l) {
      const auto& L = layers_[l];
      const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
      for (std::size_t i = 0; i < L.out * L.in; ++i) params_[L.w + i] = rng.uniform(-bound, bound);
      if (L.has_bn)
        for (std::size_t i = 0; i < L.out; ++i) params_[L.gamma + i] = 1.0;
      fan_in = L.out;
    }
    for (std::size_t l = 0; l < kHiddenLayers; ++l) {
      running_mean_[l] = Vector::Zero(static_cast<Eigen::Index>(layers_[l].out));
      running_var_[l] = Vector::Ones(static_cast<Eigen::Index>(layers_[l].out));
    }
  }

  const MlpConfig& config() const noexcept { return config_; }
  std::size_t input_width() const noexcept { return input_width_; }
  std::span<double> parameters() noexcept { return params_; }
  std::span<const double> parameters() const noexcept { return params_; }
  const std::vector<double>& epoch_losses() const noexcept { return epoch_losses_; }
  void set_epoch_losses(std::vector<double> losses) { epoch_losses_ = std::move(losses); }

  const Vector& running_mean(std::size_t l) const { return running_mean_.at(l); }
  const Vector& running_var(std::size_t l) const { return running_var_.at(l); }
  void set_running_stats(std::size_t l, Vector mean, Vector var) {
    running_mean_.at(l) = std::move(mean);
    running_var_.at(l) = std::move(var);
  }

  /// Mean absolute error of a batch (columns of `x` are samples). With
  /// `training` set, dropout and batch statistics are used and running
  /// statistics are updated; `grad`, when given, receives dLoss/dparams.
  double batch_loss(const Matrix& x, const Vector& y, bool training, Rng* dropout_rng,
                    std::vector<double>* grad) {
    const auto batch = x.cols();
    forward(x, training, dropout_rng);
    const Eigen::RowVectorXd diff = output_ - y.transpose();
    const double loss = diff.cwiseAbs().sum() / static_cast<double>(batch);
    if (!grad) return loss;

    grad->assign(total_, 0.0);
    // dL/dout for mean |out - y|; the subgradient at 0 is taken as 0.
    Eigen::RowVectorXd d_out(batch);
    for (Eigen::Index i = 0; i < batch; ++i)
      d_out(i) = (diff(i) > 0.0 ? 1.0 : (diff(i) < 0.0 ? -1.0 : 0.0)) / static_cast<double>(batch);

    const auto& O = layers_[kHiddenLayers];
    Eigen::Map<Matrix> gWo(grad->data() + O.w, 1, static_cast<Eigen::Index>(O.in));
    gWo = d_out * cache_[kHiddenLayers - 1].h.transpose();
    (*grad)[O.b] = d_out.sum();
    Matrix d_h = weights(kHiddenLayers).transpose() * d_out;

    for (std::size_t l = kHiddenLayers; l-- > 0;) {
      const auto& L = layers_[l];
      auto& c = cache_[l];
      Matrix d_y = d_h;
      if (c.has_mask) d_y = d_y.cwiseProduct(c.mask);
      d_y = d_y.cwiseProduct((c.y.array() > 0.0).cast<double>().matrix());
      Matrix d_z;
      if (c.normalized) {
        Eigen::Map<Vector> g_gamma(grad->data() + L.gamma, static_cast<Eigen::Index>(L.out));
        Eigen::Map<Vector> g_beta(grad->data() + L.beta, static_cast<Eigen::Index>(L.out));
        g_gamma = d_y.cwiseProduct(c.z_hat).rowwise().sum();
        g_beta = d_y.rowwise().sum();
        const Eigen::Map<const Vector> gamma(params_.data() + L.gamma, static_cast<Eigen::Index>(L.out));
        const Matrix d_zhat = d_y.array().colwise() * gamma.array();
        const double b = static_cast<double>(batch);
        const Vector sum_d = d_zhat.rowwise().sum();
        const Vector sum_dz = d_zhat.cwiseProduct(c.z_hat).rowwise().sum();
        d_z = ((b * d_zhat.array()).colwise() - sum_d.array() - (c.z_hat.array().colwise() * sum_dz.array()))
                  .colwise() *
              (c.inv_std.array() / b);
      } else {
        d_z = std::move(d_y);
      }
      Eigen::Map<Matrix> g_w(grad->data() + L.w, static_cast<Eigen::Index>(L.out), static_cast<Eigen::Index>(L.in));
      Eigen::Map<Vector> g_b(grad->data() + L.b, static_cast<Eigen::Index>(L.out));
      g_w = d_z * c.input.transpose();
      g_b = d_z.rowwise().sum();
      if (l > 0) d_h = weights(l).transpose() * d_z;
    }
    return loss;
  }

  /// Deterministic inference.
  std::vector<double> predict(const FeatureMatrix& m) const {
    if (m.cols != input_width_)
      throw Error("ml_models", ErrorKind::schema,
                  "row width " + std::to_string(m.cols) + " does not match trained width " +
                      std::to_string(input_width_));
    std::vector<double> out(m.rows);
    Mlp scratch = *this;
    constexpr std::size_t kChunk = 512;
    for (std::size_t start = 0; start < m.rows; start += kChunk) {
      const std::size_t count = std::min(kChunk, m.rows - start);
      const Eigen::Map<const Matrix> x(m.values.data() + start * m.cols, static_cast<Eigen::Index>(m.cols),
                                       static_cast<Eigen::Index>(count));
      scratch.forward(x, false, nullptr);
      for (std::size_t i = 0; i < count; ++i) out[start + i] = scratch.output_(static_cast<Eigen::Index>(i));
    }
    return out;
  }

 private:
  struct LayerSpec {
    std::size_t in = 0, out = 0;
    std::size_t w = 0, b = 0, gamma = 0, beta = 0;
    bool has_bn = false;
  };

  struct Cache {
    Matrix input, z_hat, y, mask, h;
    Vector inv_std;
    bool normalized = false;
    bool has_mask = false;
  };

  void layout() {
    std::size_t offset = 0;
    std::size_t in = input_width_;
    for (std::size_t l = 0; l <= kHiddenLayers; ++l) {
      LayerSpec L;
      L.in = in;
      L.out = l < kHiddenLayers ? config_.layer_widths[l] : 1;
      L.has_bn = l < kHiddenLayers && config_.use_batch_norm;
      L.w = offset;
      offset += L.in * L.out;
      L.b = offset;
      offset += L.out;
      if (L.has_bn) {
        L.gamma = offset;
        offset += L.out;
        L.beta = offset;
        offset += L.out;
      }
      layers_[l] = L;
      in = L.out;
    }
    total_ = offset;
  }

  Eigen::Map<const Matrix> weights(std::size_t l) const {
    const auto& L = layers_[l];
    return {params_.data() + L.w, static_cast<Eigen::Index>(L.out), static_cast<Eigen::Index>(L.in)};
  }
  Eigen::Map<const Vector> bias(std::size_t l) const {
    const auto& L = layers_[l];
    return {params_.data() + L.b, static_cast<Eigen::Index>(L.out)};
  }

  template <typename Derived>
  void forward(const Eigen::MatrixBase<Derived>& x, bool training, Rng* dropout_rng) {
    const auto batch = x.cols();
    const double keep = 1.0 - config_.dropout_rate;
    Matrix a = x;
    for (std::size_t l = 0; l < kHiddenLayers; ++l) {
      const auto& L = layers_[l];
      auto& c = cache_[l];
      c.input = std::move(a);
      Matrix z = (weights(l) * c.input).colwise() + bias(l);
      c.normalized = false;
      if (L.has_bn && (!training || batch >= 2)) {
        const Eigen::Map<const Vector> gamma(params_.data() + L.gamma, static_cast<Eigen::Index>(L.out));
        const Eigen::Map<const Vector> beta(params_.data() + L.beta, static_cast<Eigen::Index>(L.out));
        Vector mean, var;
        if (training) {
          mean = z.rowwise().mean();
          var = (z.colwise() - mean).array().square().rowwise().mean();
          const double b = static_cast<double>(batch);
          running_mean_[l] = (1.0 - config_.bn_momentum) * running_mean_[l] + config_.bn_momentum * mean;
          running_var_[l] =
              (1.0 - config_.bn_momentum) * running_var_[l] + config_.bn_momentum * (var * (b / (b - 1.0)));
          c.normalized = true;
        } else {
          mean = running_mean_[l];
          var = running_var_[l];
        }
        c.inv_std = (var.array() + config_.bn_epsilon).rsqrt();
        c.z_hat = (z.colwise() - mean).array().colwise() * c.inv_std.array();
        z = (c.z_hat.array().colwise() * gamma.array()).colwise() + beta.array();
      }
      c.y = z;
      c.h = z.cwiseMax(0.0);
      c.has_mask = training && config_.dropout_rate > 0.0;
      if (c.has_mask) {
        c.mask.resize(c.h.rows(), c.h.cols());
        for (Eigen::Index j = 0; j < c.mask.cols(); ++j)
          for (Eigen::Index i = 0; i < c.mask.rows(); ++i)
            c.mask(i, j) = dropout_rng->uniform01() < keep ? 1.0 / keep : 0.0;
        c.h = c.h.cwiseProduct(c.mask);
      }
      a = c.h;
    }
    output_ = (weights(kHiddenLayers) * a).row(0).array() + params_[layers_[kHiddenLayers].b];
  }

  MlpConfig config_;
  std::size_t input_width_ = 0;
  std::array<LayerSpec, kHiddenLayers + 1> layers_{};
  std::size_t total_ = 0;
  std::vector<double> params_;
  std::array<Vector, kHiddenLayers> running_mean_;
  std::array<Vector, kHiddenLayers> running_var_;
  std::array<Cache, kHiddenLayers> cache_;
  Eigen::RowVectorXd output_;
  std::vector<double> epoch_losses_;

};

/// Adam over mini-batches reshuffled every epoch from the seeded stream.
inline Mlp mlp_fit(const FeatureMatrix& x, std::span<const double> y, const MlpConfig& config) {
  if (x.rows == 0 || y.size() != x.rows)
    throw Error("ml_models", ErrorKind::validation, "mlp_fit needs a nonempty training set");
  Mlp net(config, x.cols);
  const std::size_t n = x.rows;
  const auto params = net.parameters();
  std::vector<double> m(params.size(), 0.0), v(params.size(), 0.0), grad;
  const Eigen::Map<const Mlp::Matrix> all(x.values.data(), static_cast<Eigen::Index>(x.cols),
                                          static_cast<Eigen::Index>(n));
  std::vector<std::size_t> order(n);
  std::vector<double> losses;
  losses.reserve(config.epochs);
  Rng dropout_rng(derive_seed(config.seed, 0xD80F));
  double b1_pow = 1.0, b2_pow = 1.0;

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng shuffle_rng(derive_seed(config.seed, 0x5E0C, epoch));
    shuffle(std::span(order), shuffle_rng);
    double total = 0.0;
    for (std::size_t start = 0; start < n; start += config.batch_size) {
      const std::size_t count = std::min(config.batch_size, n - start);
      Mlp::Matrix xb(static_cast<Eigen::Index>(x.cols), static_cast<Eigen::Index>(count));
      Mlp::Vector yb(static_cast<Eigen::Index>(count));
      for (std::size_t i = 0; i < count; ++i) {
        xb.col(static_cast<Eigen::Index>(i)) = all.col(static_cast<Eigen::Index>(order[start + i]));
        yb(static_cast<Eigen::Index>(i)) = y[order[start + i]];
      }
      const double loss = net.batch_loss(xb, yb, true, &dropout_rng, &grad);
      if (!std::isfinite(loss))
        throw Error("ml_models", ErrorKind::training, "non-finite loss at epoch " + std::to_string(epoch + 1));
      total += loss * static_cast<double>(count);

      b1_pow *= config.adam_beta1;
      b2_pow *= config.adam_beta2;
      for (std::size_t i = 0; i < params.size(); ++i) {
        m[i] = config.adam_beta1 * m[i] + (1.0 - config.adam_beta1) * grad[i];
        v[i] = config.adam_beta2 * v[i] + (1.0 - config.adam_beta2) * grad[i] * grad[i];
        const double m_hat = m[i] / (1.0 - b1_pow);
        const double v_hat = v[i] / (1.0 - b2_pow);
        params[i] -= config.learning_rate * m_hat / (std::sqrt(v_hat) + config.adam_epsilon);
      }
    }
    const double epoch_loss = total / static_cast<double>(n);
    if (!std::isfinite(epoch_loss))
      throw Error("ml_models", ErrorKind::training, "non-finite loss at epoch " + std::to_string(epoch + 1));
    losses.push_back(epoch_loss);
  }
  net.set_epoch_losses(std::move(losses));
  return net;
}

}  // namespace tripgrav
