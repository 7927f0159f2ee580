#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "divdrive/learning/dde.hpp"
#include "divdrive/sim/episode.hpp"

namespace divdrive::learning {

/// Piecewise-linear ramp from `start` to `end` over [0, span] steps, constant after.
inline double linear_schedule(std::int64_t step, double start, double end, std::int64_t span) {
  if (span <= 0 || step >= span) return end;
  if (step <= 0) return start;
  return start + (end - start) * (static_cast<double>(step) / static_cast<double>(span));
}

struct TrainerConfig {
  std::int64_t total_steps = 3'000'000;
  std::int64_t snapshot_interval = 20'000;
  double gamma = 0.99;
  double learning_rate = 1e-3;
  double epsilon_start = 1.0;
  double epsilon_end = 0.1;
  std::int64_t epsilon_decay_steps = 100'000;
  double collision_weight_max = 300.0;
  std::int64_t collision_ramp_steps = 300'000;
  sim::RewardWeights rewards{100.0, 0.0, 0.0, 0.0};
  double dde_alpha = 0.01;
  double dde_temperature = 1.0;
  std::int64_t exchange_interval = 1'000;
  std::size_t replay_capacity = 100'000;
  std::size_t batch_size = 32;
  std::int64_t target_sync_interval = 1'000;
  std::int64_t learning_starts = 1'000;
  std::int64_t train_interval = 1;
  std::uint64_t seed = 1;
  std::size_t threads = 1;

  [[nodiscard]] double epsilon(std::int64_t step) const {
    return linear_schedule(step, epsilon_start, epsilon_end, epsilon_decay_steps);
  }
  [[nodiscard]] double collision_weight(std::int64_t step) const {
    return linear_schedule(step, 0.0, collision_weight_max, collision_ramp_steps);
  }

  void validate() const {
    if (!(gamma > 0.0 && gamma < 1.0)) throw Error(ErrorCode::kConfig, "gamma must lie in (0, 1)");
    if (total_steps <= 0 || snapshot_interval <= 0 || exchange_interval <= 0 || target_sync_interval <= 0 ||
        train_interval <= 0)
      throw Error(ErrorCode::kConfig, "trainer step counts and intervals must be positive");
    if (epsilon_decay_steps <= 0 || collision_ramp_steps <= 0)
      throw Error(ErrorCode::kConfig, "schedule breakpoints must be positive");
    if (batch_size == 0 || replay_capacity < batch_size) throw Error(ErrorCode::kConfig, "replay capacity below batch size");
    if (dde_alpha < 0.0) throw Error(ErrorCode::kConfig, "DDE weight must be non-negative");
    if (!(dde_temperature > 0.0)) throw Error(ErrorCode::kConfig, "DDE temperature must be positive");
  }
};

/// Fixed-capacity ring of transitions with float storage of encoded observations.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity)
      : capacity_(capacity),
        obs_(kInputSize, static_cast<Eigen::Index>(capacity)),
        next_obs_(kInputSize, static_cast<Eigen::Index>(capacity)),
        actions_(capacity),
        rewards_(capacity),
        terminal_(capacity) {}

  void push(const Eigen::VectorXd& obs, int action, double reward, const Eigen::VectorXd& next_obs, bool terminal) {
    const auto i = static_cast<Eigen::Index>(head_);
    obs_.col(i) = obs.cast<float>();
    next_obs_.col(i) = next_obs.cast<float>();
    actions_[head_] = action;
    rewards_[head_] = reward;
    terminal_[head_] = terminal ? 1 : 0;
    head_ = (head_ + 1) % capacity_;
    size_ = std::min(size_ + 1, capacity_);
  }

  [[nodiscard]] std::size_t size() const { return size_; }

  struct Sample {
    Eigen::MatrixXd obs, next_obs;
    std::vector<int> actions;
    Eigen::VectorXd rewards;
    std::vector<char> terminal;
  };

  Sample sample(std::size_t batch, std::mt19937_64& rng) const {
    Sample s;
    s.obs.resize(kInputSize, static_cast<Eigen::Index>(batch));
    s.next_obs.resize(kInputSize, static_cast<Eigen::Index>(batch));
    s.rewards.resize(static_cast<Eigen::Index>(batch));
    for (std::size_t b = 0; b < batch; ++b) {
      const std::size_t i = uniform_index(rng, size_);
      const auto col = static_cast<Eigen::Index>(b);
      s.obs.col(col) = obs_.col(static_cast<Eigen::Index>(i)).cast<double>();
      s.next_obs.col(col) = next_obs_.col(static_cast<Eigen::Index>(i)).cast<double>();
      s.actions.push_back(actions_[i]);
      s.rewards[col] = rewards_[i];
      s.terminal.push_back(terminal_[i]);
    }
    return s;
  }

 private:
  std::size_t capacity_;
  std::size_t head_ = 0;
  std::size_t size_ = 0;
  Eigen::MatrixXf obs_, next_obs_;
  std::vector<int> actions_;
  std::vector<double> rewards_;
  std::vector<char> terminal_;
};

struct SessionReport {
  std::size_t session = 0;
  bool failed = false;
  std::string diagnostic;
  std::int64_t steps = 0;
  std::int64_t episodes = 0;
  std::int64_t goals = 0;
  std::int64_t intrinsic_steps = 0;       // transitions that received a DDE term
  std::int64_t intrinsic_violations = 0;  // transitions where the shaped reward fell below r_env
  double intrinsic_bonus_sum = 0.0;
};

struct TrainResult {
  std::vector<PolicySnapshot> snapshots;  // ordered by session, then step
  std::vector<SessionReport> sessions;
};

namespace detail {

class Session {
 public:
  Session(const TrainerConfig& cfg, const sim::Scenario& scenario, std::size_t index, bool dde, std::string tag)
      : cfg_(cfg),
        index_(index),
        dde_(dde),
        tag_(std::move(tag)),
        rng_(mix_seed(cfg.seed, 2 * index + 1)),
        online_(QNetwork::initialized(mix_seed(cfg.seed, 2 * index))),
        target_(online_),
        adam_(cfg.learning_rate),
        replay_(cfg.replay_capacity),
        behaviour_(std::make_shared<QNetwork>(online_)),
        env_(train_scenario(scenario), [this](const sim::Observation& o) { return act(*behaviour_, o.values); }) {
    report_.session = index;
    for (std::size_t i = 0; i < scenario.vehicles.size(); ++i)
      if (scenario.vehicles[i].policy == "ego") learners_.push_back(i);
    env_.reset(rng_);
  }

  [[nodiscard]] std::shared_ptr<const QNetwork> current() const { return std::make_shared<const QNetwork>(online_); }
  [[nodiscard]] const SessionReport& report() const { return report_; }
  [[nodiscard]] std::vector<PolicySnapshot>& snapshots() { return snapshots_; }
  [[nodiscard]] bool failed() const { return report_.failed; }

  void run(std::int64_t until, const std::vector<std::shared_ptr<const QNetwork>>& peers) {
    if (report_.failed) return;
    std::vector<const QNetwork*> peer_ptrs;
    for (const auto& p : peers) peer_ptrs.push_back(p.get());
    try {
      while (step_ < until) one_step(peer_ptrs);
    } catch (const Error& e) {
      report_.failed = true;
      report_.diagnostic = "session " + std::to_string(index_) + " aborted at step " + std::to_string(step_) + ": " + e.what();
    }
  }

 private:
  static sim::Scenario train_scenario(sim::Scenario sc) {
    sc.mode = sim::Mode::kTrain;
    return sc;
  }

  void one_step(const std::vector<const QNetwork*>& peers) {
    ++step_;
    const Eigen::VectorXd x = encode(env_.observe());
    int action = 0;
    if (uniform01(rng_) < cfg_.epsilon(step_ - 1))
      action = static_cast<int>(uniform_index(rng_, sim::kActionCount));
    else
      action = argmax_action(online_.forward(Eigen::MatrixXd(x)).col(0));

    sim::RewardWeights w = cfg_.rewards;
    w.collision = cfg_.collision_weight(step_ - 1);
    const sim::StepResult res = env_.step(sim::action_from_index(action), w);
    const double r_env = res.reward.total();
    const Eigen::VectorXd next_x = encode(env_.observe());
    double r = r_env;
    if (dde_ && !peers.empty()) {
      r = intrinsic_reward(r_env, online_, peers, next_x, cfg_.dde_alpha, cfg_.dde_temperature);
      ++report_.intrinsic_steps;
      report_.intrinsic_bonus_sum += r - r_env;
      if (r < r_env) ++report_.intrinsic_violations;
    }
    replay_.push(x, action, r / kValueScale, next_x, res.terminal);

    if (step_ >= cfg_.learning_starts && step_ % cfg_.train_interval == 0 && replay_.size() >= cfg_.batch_size)
      learn();
    if (step_ % cfg_.target_sync_interval == 0) target_ = online_;
    if (step_ % cfg_.snapshot_interval == 0) {
      PolicySnapshot snap;
      snap.network = std::make_shared<const QNetwork>(online_);
      snap.session_id = static_cast<std::int64_t>(index_);
      snap.training_step = step_;
      snap.tag = tag_;
      snapshots_.push_back(std::move(snap));
    }
    report_.steps = step_;
    if (env_.done()) {
      ++report_.episodes;
      if (env_.outcome() == Outcome::kGoal) ++report_.goals;
      if (learners_.size() > 1) env_.set_ego(learners_[static_cast<std::size_t>(report_.episodes) % learners_.size()]);
      *behaviour_ = online_;
      env_.reset(rng_);
    }
  }

  void learn() {
    const ReplayBuffer::Sample s = replay_.sample(cfg_.batch_size, rng_);
    const Eigen::MatrixXd next_online = online_.forward(s.next_obs);
    const Eigen::MatrixXd next_target = target_.forward(s.next_obs);
    TdBatch batch;
    batch.obs = s.obs;
    batch.actions = s.actions;
    batch.targets.resize(s.rewards.size());
    for (Eigen::Index b = 0; b < s.rewards.size(); ++b) {
      const int best = argmax_action(next_online.col(b));
      const double bootstrap = s.terminal[static_cast<std::size_t>(b)] ? 0.0 : cfg_.gamma * next_target(best, b);
      batch.targets[b] = s.rewards[b] + bootstrap;
    }
    Eigen::VectorXd grad;
    const double loss = td_loss(online_, batch, &grad);
    if (!std::isfinite(loss) || !grad.allFinite())
      throw Error(ErrorCode::kNonFiniteLoss, "TD loss is not finite (" + std::to_string(loss) + ")");
    adam_.step(online_.parameters(), grad);
  }

  const TrainerConfig& cfg_;
  std::size_t index_;
  bool dde_;
  std::string tag_;
  std::mt19937_64 rng_;
  QNetwork online_;
  QNetwork target_;
  Adam adam_;
  ReplayBuffer replay_;
  std::shared_ptr<QNetwork> behaviour_;  // frozen copy driving multi-agent clones during an episode
  sim::Environment env_;
  std::vector<std::size_t> learners_;
  std::int64_t step_ = 0;
  SessionReport report_;
  std::vector<PolicySnapshot> snapshots_;
};

}  // namespace detail

using ProgressFn = std::function<void(std::int64_t step, const std::vector<SessionReport>&)>;

/// Trains `sessions` independent learners on the scenario in TRAIN mode. With
/// `dde`, every stored reward carries the KL bonus against the peers' networks
/// as published at the previous exchange point. Sessions advance in lockstep
/// chunks of `exchange_interval` steps, so results do not depend on thread
/// scheduling.
inline TrainResult train_sessions(const TrainerConfig& cfg, const sim::Scenario& scenario, std::size_t sessions,
                                  bool dde, const std::string& tag = {}, const ProgressFn& progress = {}) {
  cfg.validate();
  if (sessions == 0) throw Error(ErrorCode::kConfig, "at least one training session is required");
  if (dde && sessions < 2) throw Error(ErrorCode::kConfig, "DDE needs at least two sessions");

  std::vector<std::unique_ptr<detail::Session>> workers;
  for (std::size_t i = 0; i < sessions; ++i)
    workers.push_back(std::make_unique<detail::Session>(cfg, scenario, i, dde, tag));
  SnapshotRegistry registry(sessions);
  for (std::size_t i = 0; i < sessions; ++i) registry.publish(i, workers[i]->current());

  const std::size_t threads = std::max<std::size_t>(1, std::min(cfg.threads, sessions));
  for (std::int64_t done = 0; done < cfg.total_steps;) {
    const std::int64_t until = std::min(cfg.total_steps, done + cfg.exchange_interval);
    std::vector<std::vector<std::shared_ptr<const QNetwork>>> peers(sessions);
    if (dde)
      for (std::size_t i = 0; i < sessions; ++i) peers[i] = registry.peers_of(i);
    if (threads == 1) {
      for (std::size_t i = 0; i < sessions; ++i) workers[i]->run(until, peers[i]);
    } else {
      for (std::size_t start = 0; start < sessions; start += threads) {
        std::vector<std::thread> pool;
        for (std::size_t i = start; i < std::min(sessions, start + threads); ++i)
          pool.emplace_back([&, i] { workers[i]->run(until, peers[i]); });
        for (auto& t : pool) t.join();
      }
    }
    for (std::size_t i = 0; i < sessions; ++i) registry.publish(i, workers[i]->current());
    done = until;
    if (progress) {
      std::vector<SessionReport> reports;
      for (const auto& w : workers) reports.push_back(w->report());
      progress(done, reports);
    }
  }

  TrainResult result;
  for (auto& w : workers) {
    result.sessions.push_back(w->report());
    for (auto& s : w->snapshots()) result.snapshots.push_back(std::move(s));
  }
  return result;
}

}  // namespace divdrive::learning
