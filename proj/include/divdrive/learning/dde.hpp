#pragma once

#include <memory>
#include <mutex>
#include <span>
#include <vector>

#include "divdrive/learning/snapshot.hpp"

namespace divdrive::learning {

/// KL(p || q) from log-probabilities.
inline double kl_divergence_log(const Eigen::VectorXd& log_p, const Eigen::VectorXd& log_q) {
  return (log_p.array().exp() * (log_p - log_q).array()).sum();
}

inline double kl_divergence(const Eigen::VectorXd& p, const Eigen::VectorXd& q) {
  double kl = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i)
    if (p[i] > 0.0) kl += p[i] * std::log(p[i] / q[i]);
  return kl;
}

/// Environment reward plus the mean weighted KL divergence between this
/// policy's action distribution and each peer's at `encoded_obs`.
inline double intrinsic_reward(double r_env, const QNetwork& self, std::span<const QNetwork* const> peers,
                               const Eigen::VectorXd& encoded_obs, double alpha, double temperature = 1.0) {
  if (peers.empty() || alpha == 0.0) return r_env;
  Eigen::MatrixXd x(encoded_obs);
  const Eigen::VectorXd log_self = log_action_distribution(self.forward(x).col(0), temperature);
  double sum = 0.0;
  for (const QNetwork* peer : peers)
    sum += kl_divergence_log(log_self, log_action_distribution(peer->forward(x).col(0), temperature));
  return r_env + alpha * std::max(sum, 0.0) / static_cast<double>(peers.size());
}

inline double intrinsic_reward(double r_env, const PolicySnapshot& self, std::span<const PolicySnapshot> peers,
                               const sim::Observation& obs, double alpha, double temperature = 1.0) {
  std::vector<const QNetwork*> nets;
  for (const auto& p : peers) nets.push_back(p.network.get());
  return intrinsic_reward(r_env, *self.network, nets, encode(obs), alpha, temperature);
}

/// Latest published parameters of every training session. Publishing swaps
/// in a complete immutable network, so readers never see a partial update.
class SnapshotRegistry {
 public:
  explicit SnapshotRegistry(std::size_t sessions) : latest_(sessions) {}

  void publish(std::size_t session, std::shared_ptr<const QNetwork> net) {
    std::lock_guard lock(mutex_);
    latest_.at(session) = std::move(net);
  }

  /// Current networks of every session except `self` that has published.
  [[nodiscard]] std::vector<std::shared_ptr<const QNetwork>> peers_of(std::size_t self) const {
    std::lock_guard lock(mutex_);
    std::vector<std::shared_ptr<const QNetwork>> out;
    for (std::size_t i = 0; i < latest_.size(); ++i)
      if (i != self && latest_[i]) out.push_back(latest_[i]);
    return out;
  }

 private:
  mutable std::mutex mutex_;
  std::vector<std::shared_ptr<const QNetwork>> latest_;
};

}  // namespace divdrive::learning
