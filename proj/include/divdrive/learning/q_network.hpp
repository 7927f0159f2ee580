#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>

#include <Eigen/Dense>

#include "divdrive/sim/dynamics.hpp"
#include "divdrive/sim/world.hpp"

namespace divdrive::learning {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixView = Eigen::Map<RowMatrix>;
using ConstMatrixView = Eigen::Map<const RowMatrix>;
using VectorView = Eigen::Map<Eigen::VectorXd>;
using ConstVectorView = Eigen::Map<const Eigen::VectorXd>;

inline constexpr int kInputSize = sim::kObservationSize;
inline constexpr int kHiddenSize = 64;
inline constexpr int kOutputSize = sim::kActionCount;
inline constexpr std::array<int, 4> kLayerSizes = {kInputSize, kHiddenSize, kHiddenSize, kOutputSize};

/// The network learns action values divided by this; rewards of O(100) per
/// step otherwise make the TD targets too large for a small tanh network.
inline constexpr double kValueScale = 100.0;

/// Fixed input scaling: ray distances to [0, 1], speed, acceleration and
/// steering by their actuator ranges.
inline Eigen::VectorXd encode(std::span<const double> obs) {
  if (obs.size() != static_cast<std::size_t>(kInputSize))
    throw Error(ErrorCode::kInvalidInput, "observation must have " + std::to_string(kInputSize) + " entries");
  Eigen::VectorXd x(kInputSize);
  constexpr int rays = sim::kRayCount * sim::kRayKinds;
  for (int i = 0; i < rays; ++i) x[i] = obs[static_cast<std::size_t>(i)] / sim::kRayRange;
  for (int i = rays; i < kInputSize; i += 3) {
    x[i] = obs[static_cast<std::size_t>(i)] / sim::kMaxSpeed;
    x[i + 1] = obs[static_cast<std::size_t>(i + 1)] / sim::kMaxAccel;
    x[i + 2] = obs[static_cast<std::size_t>(i + 2)] / sim::kMaxSteer;
  }
  return x;
}

inline Eigen::VectorXd encode(const sim::Observation& obs) { return encode(std::span<const double>(obs.values)); }

/// Activations kept for backpropagation.
struct ForwardCache {
  Eigen::MatrixXd input;  // in x batch
  Eigen::MatrixXd h1;
  Eigen::MatrixXd h2;
  Eigen::MatrixXd q;      // out x batch
};

/// 201 -> 64 -> 64 -> 9 perceptron with tanh hidden units and a linear head.
/// Parameters live in one flat vector: W1 (row-major, out x in), b1, W2, b2,
/// W3, b3.
class QNetwork {
 public:
  static constexpr std::size_t parameter_count() {
    std::size_t n = 0;
    for (std::size_t l = 1; l < kLayerSizes.size(); ++l)
      n += static_cast<std::size_t>(kLayerSizes[l]) * static_cast<std::size_t>(kLayerSizes[l - 1] + 1);
    return n;
  }

  QNetwork() : theta_(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(parameter_count()))) {}

  /// Glorot-uniform weights, zero biases.
  static QNetwork initialized(std::uint64_t seed) {
    QNetwork net;
    std::mt19937_64 rng(seed);
    for (int l = 0; l < 3; ++l) {
      const int in = kLayerSizes[static_cast<std::size_t>(l)];
      const int out = kLayerSizes[static_cast<std::size_t>(l) + 1];
      const double limit = std::sqrt(6.0 / (in + out));
      auto w = net.weight(l);
      for (Eigen::Index r = 0; r < w.rows(); ++r)
        for (Eigen::Index c = 0; c < w.cols(); ++c)
          w(r, c) = (2.0 * (static_cast<double>(rng() >> 11) * 0x1.0p-53) - 1.0) * limit;
    }
    return net;
  }

  [[nodiscard]] Eigen::VectorXd& parameters() { return theta_; }
  [[nodiscard]] const Eigen::VectorXd& parameters() const { return theta_; }

  [[nodiscard]] MatrixView weight(int layer) { return {theta_.data() + offset(layer), rows(layer), cols(layer)}; }
  [[nodiscard]] ConstMatrixView weight(int layer) const {
    return {theta_.data() + offset(layer), rows(layer), cols(layer)};
  }
  [[nodiscard]] VectorView bias(int layer) { return {theta_.data() + offset(layer) + rows(layer) * cols(layer), rows(layer)}; }
  [[nodiscard]] ConstVectorView bias(int layer) const {
    return {theta_.data() + offset(layer) + rows(layer) * cols(layer), rows(layer)};
  }

  /// Action values for a batch of encoded inputs (one column per sample).
  [[nodiscard]] Eigen::MatrixXd forward(const Eigen::MatrixXd& input) const {
    ForwardCache cache;
    forward(input, cache);
    return std::move(cache.q);
  }

  void forward(const Eigen::MatrixXd& input, ForwardCache& cache) const {
    cache.input = input;
    cache.h1 = ((weight(0) * input).colwise() + bias(0)).array().tanh().matrix();
    cache.h2 = ((weight(1) * cache.h1).colwise() + bias(1)).array().tanh().matrix();
    cache.q = (weight(2) * cache.h2).colwise() + bias(2);
  }

  [[nodiscard]] Eigen::VectorXd action_values(const sim::Observation& obs) const {
    return forward(Eigen::MatrixXd(encode(obs))).col(0);
  }

  /// Gradient of a loss with respect to all parameters, given dL/dQ.
  [[nodiscard]] Eigen::VectorXd backward(const ForwardCache& cache, const Eigen::MatrixXd& grad_q) const {
    QNetwork grad;
    grad.weight(2) = grad_q * cache.h2.transpose();
    grad.bias(2) = grad_q.rowwise().sum();
    const Eigen::MatrixXd dz2 = ((weight(2).transpose() * grad_q).array() * (1.0 - cache.h2.array().square())).matrix();
    grad.weight(1) = dz2 * cache.h1.transpose();
    grad.bias(1) = dz2.rowwise().sum();
    const Eigen::MatrixXd dz1 = ((weight(1).transpose() * dz2).array() * (1.0 - cache.h1.array().square())).matrix();
    grad.weight(0) = dz1 * cache.input.transpose();
    grad.bias(0) = dz1.rowwise().sum();
    return std::move(grad.theta_);
  }

  friend bool operator==(const QNetwork& a, const QNetwork& b) { return a.theta_ == b.theta_; }

 private:
  static Eigen::Index rows(int layer) { return kLayerSizes[static_cast<std::size_t>(layer) + 1]; }
  static Eigen::Index cols(int layer) { return kLayerSizes[static_cast<std::size_t>(layer)]; }
  static Eigen::Index offset(int layer) {
    Eigen::Index off = 0;
    for (int l = 0; l < layer; ++l) off += rows(l) * (cols(l) + 1);
    return off;
  }

  Eigen::VectorXd theta_;
};

struct TdBatch {
  Eigen::MatrixXd obs;       // in x batch (encoded)
  std::vector<int> actions;
  Eigen::VectorXd targets;   // fixed TD targets
};

inline double huber(double x) { return std::abs(x) <= 1.0 ? 0.5 * x * x : std::abs(x) - 0.5; }
inline double huber_grad(double x) { return std::clamp(x, -1.0, 1.0); }

/// Mean Huber loss between Q(o, a) and fixed targets; fills `grad` when given.
inline double td_loss(const QNetwork& net, const TdBatch& batch, Eigen::VectorXd* grad = nullptr) {
  ForwardCache cache;
  net.forward(batch.obs, cache);
  const Eigen::Index n = batch.obs.cols();
  Eigen::MatrixXd grad_q = Eigen::MatrixXd::Zero(kOutputSize, n);
  double loss = 0.0;
  for (Eigen::Index b = 0; b < n; ++b) {
    const double err = cache.q(batch.actions[static_cast<std::size_t>(b)], b) - batch.targets[b];
    loss += huber(err);
    grad_q(batch.actions[static_cast<std::size_t>(b)], b) = huber_grad(err) / static_cast<double>(n);
  }
  if (grad) *grad = net.backward(cache, grad_q);
  return loss / static_cast<double>(n);
}

/// First/second-moment adaptive optimiser over a flat parameter vector.
class Adam {
 public:
  explicit Adam(double lr = 1e-3, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

  void step(Eigen::VectorXd& params, const Eigen::VectorXd& grad) {
    if (m_.size() != params.size()) {
      m_ = Eigen::VectorXd::Zero(params.size());
      v_ = Eigen::VectorXd::Zero(params.size());
    }
    ++t_;
    m_ = beta1_ * m_ + (1.0 - beta1_) * grad;
    v_ = beta2_ * v_ + (1.0 - beta2_) * grad.cwiseProduct(grad);
    const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    params.array() -= lr_ * (m_.array() / c1) / ((v_.array() / c2).sqrt() + eps_);
  }

 private:
  double lr_, beta1_, beta2_, eps_;
  std::int64_t t_ = 0;
  Eigen::VectorXd m_, v_;
};

}  // namespace divdrive::learning
