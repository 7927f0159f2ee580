#pragma once

#include <functional>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "divdrive/sim/scenario.hpp"
#include "divdrive/trajectory_log.hpp"

namespace divdrive::sim {

/// Maps an observation to one of the nine discrete actions. Must not mutate
/// shared state: the simulator may call it from several episodes at once.
using ActionPolicy = std::function<Action(const Observation&)>;

/// Resolves a named vehicle binding from a scenario file to a policy.
using PolicyResolver = std::function<ActionPolicy(const std::string& binding)>;

class Controller {
 public:
  virtual ~Controller() = default;
  virtual Control decide(const World& world, std::size_t self) = 0;
};

/// Drives through the discrete action interface of a learned policy.
class PolicyController final : public Controller {
 public:
  explicit PolicyController(ActionPolicy policy) : policy_(std::move(policy)) {}
  Control decide(const World& world, std::size_t self) override {
    const VehicleState& s = world.vehicle(self).state;
    return apply_action(s, policy_(world.observe(self)), kStepSeconds);
  }

 private:
  ActionPolicy policy_;
};

/// Non-reactive route follower: pure-pursuit steering toward a point ahead on
/// its route and proportional speed tracking. Ignores every other vehicle.
class CruiseController final : public Controller {
 public:
  explicit CruiseController(double cruise_speed, double lookahead = 4.0)
      : cruise_speed_(cruise_speed), lookahead_(lookahead) {}
  Control decide(const World& world, std::size_t self) override {
    const Vehicle& v = world.vehicle(self);
    const Route& route = world.map().routes[v.route];
    const Vec2 target = route.at(route.project(v.state.position()) + lookahead_).position;
    const Vec2 d = target - v.state.position();
    const double omega = wrap_angle(std::atan2(d.y, d.x) - v.state.theta);
    return clamp_control({2.0 * std::sin(omega), 2.0 * (cruise_speed_ - v.state.v)});
  }

 private:
  double cruise_speed_;
  double lookahead_;
};

class HoldController final : public Controller {
 public:
  Control decide(const World& world, std::size_t self) override { return world.vehicle(self).state.control; }
};

struct StepResult {
  RewardTerms reward;
  bool collided = false;
  bool terminal = false;   // episode ended by the environment (goal, collision, collision budget)
  bool truncated = false;  // time limit reached
};

/// Step-wise simulator over one scenario. Vehicle 0..n-1 follow their
/// bindings; the ego's action is supplied by the caller on every step.
class Environment {
 public:
  /// `ego_policy` drives other vehicles bound to "ego" (multi-agent copies);
  /// `resolver` supplies named bindings.
  Environment(Scenario scenario, ActionPolicy ego_policy = {}, const PolicyResolver& resolver = {})
      : scenario_(std::move(scenario)) {
    for (std::size_t i = 0; i < scenario_.vehicles.size(); ++i) {
      const std::string& binding = scenario_.vehicles[i].policy;
      if (i == scenario_.ego) {
        controllers_.push_back(nullptr);
      } else if (binding == "scripted") {
        controllers_.push_back(std::make_unique<CruiseController>(scenario_.vehicles[i].cruise_speed));
      } else if (binding == "hold") {
        controllers_.push_back(std::make_unique<HoldController>());
      } else if (binding == "ego") {
        if (!ego_policy) throw Error(ErrorCode::kConfig, "vehicle " + std::to_string(i) + " copies the ego policy, which is unbound");
        controllers_.push_back(std::make_unique<PolicyController>(ego_policy));
      } else {
        ActionPolicy p = resolver ? resolver(binding) : ActionPolicy{};
        if (!p) throw Error(ErrorCode::kConfig, "unbound policy id '" + binding + "' in scenario " + scenario_.id);
        controllers_.push_back(std::make_unique<PolicyController>(std::move(p)));
      }
    }
    reset();
  }

  /// Resets to the scenario's own seeded placement.
  void reset() {
    std::mt19937_64 rng(scenario_.seed);
    reset(rng);
  }

  /// Resets with placements drawn from an external generator (training).
  void reset(std::mt19937_64& rng) {
    world_ = make_world(scenario_, rng);
    steps_ = 0;
    done_ = false;
    outcome_ = Outcome::kTimeout;
  }

  [[nodiscard]] const Scenario& scenario() const { return scenario_; }
  [[nodiscard]] const World& world() const { return world_; }
  [[nodiscard]] std::size_t ego() const { return scenario_.ego; }
  [[nodiscard]] const VehicleState& ego_state() const { return world_.vehicle(scenario_.ego).state; }
  [[nodiscard]] Observation observe() const { return world_.observe(scenario_.ego); }
  [[nodiscard]] int steps() const { return steps_; }
  [[nodiscard]] bool done() const { return done_; }
  [[nodiscard]] Outcome outcome() const { return outcome_; }

  /// Switches which vehicle is the learner (multi-agent training).
  void set_ego(std::size_t index) {
    if (index >= scenario_.vehicles.size()) throw Error(ErrorCode::kInvalidInput, "ego index out of range");
    if (scenario_.vehicles[index].policy != "ego" || scenario_.vehicles[scenario_.ego].policy != "ego")
      throw Error(ErrorCode::kConfig, "only vehicles bound to the ego policy can swap roles");
    std::swap(controllers_[index], controllers_[scenario_.ego]);
    scenario_.ego = index;
  }

  StepResult step(Action action, const RewardWeights& weights) {
    return step(apply_action(ego_state(), action, kStepSeconds), weights);
  }

  /// Advances every vehicle one step with a direct ego control.
  StepResult step(Control ego_control, const RewardWeights& weights) {
    if (done_) throw Error(ErrorCode::kInvalidInput, "step after episode end");
    const std::size_t ego = scenario_.ego;
    const std::size_t n = scenario_.vehicles.size();
    std::vector<Control> controls(n);
    for (std::size_t i = 0; i < n; ++i) {
      if (!world_.vehicle(i).active) continue;
      controls[i] = i == ego ? clamp_control(ego_control) : controllers_[i]->decide(world_, i);
    }
    const VehicleState prev = world_.vehicle(ego).state;
    for (std::size_t i = 0; i < n; ++i) {
      Vehicle& v = world_.vehicle(i);
      if (v.active) v.state = step_dynamics(v.state, controls[i], kStepSeconds);
    }

    StepResult res;
    res.collided = world_.collides(ego, world_.vehicle(ego).state);
    Vehicle& me = world_.vehicle(ego);
    // TRAIN: the pose does not penetrate; the obstacle stops the car but the
    // new control is kept, so the learner can steer away.
    if (res.collided && scenario_.mode == Mode::kTrain) {
      const Control applied = me.state.control;
      me.state = prev;
      me.state.v = 0.0;
      me.state.control = applied;
      ++me.collisions;
    }
    for (std::size_t i = 0; i < n; ++i)
      if (world_.vehicle(i).active) world_.vehicle(i).push_history();
    res.reward = compute_reward(world_.map(), me.route, prev, me.state, res.collided, weights);
    retire_finished(ego);
    ++steps_;

    if (scenario_.mode == Mode::kEval) {
      if (res.collided) {
        finish(Outcome::kCollision);
        res.terminal = true;
      } else if (world_.reached_goal(ego)) {
        finish(Outcome::kGoal);
        res.terminal = true;
      }
    } else {
      if (me.collisions > scenario_.max_collisions) {
        finish(Outcome::kCollision);
        res.terminal = true;
      } else if (!res.collided && world_.reached_goal(ego)) {
        finish(Outcome::kGoal);
        res.terminal = true;
      }
    }
    if (!done_ && steps_ >= scenario_.max_steps()) {
      finish(Outcome::kTimeout);
      res.truncated = true;
    }
    return res;
  }

 private:
  void finish(Outcome o) {
    done_ = true;
    outcome_ = o;
  }

  // Non-learning vehicles leave the scene once past the end of their route.
  void retire_finished(std::size_t ego) {
    for (std::size_t i = 0; i < scenario_.vehicles.size(); ++i) {
      Vehicle& v = world_.vehicle(i);
      if (i == ego || !v.active || scenario_.vehicles[i].policy == "ego") continue;
      const Segment& last = world_.map().routes[v.route].arrows.back();
      if (dot(v.state.position() - last.b, last.direction()) > 0.0) v.active = false;
    }
  }

  Scenario scenario_;
  std::vector<std::unique_ptr<Controller>> controllers_;
  World world_;
  int steps_ = 0;
  bool done_ = false;
  Outcome outcome_ = Outcome::kTimeout;
};

struct EpisodeResult {
  EpisodeLog log;
  Outcome outcome = Outcome::kTimeout;
  double total_reward = 0.0;
  int steps = 0;

  [[nodiscard]] Trajectory trajectory() const { return log.trajectory(); }
};

inline StepRecord record_of(const VehicleState& s) {
  return {s.x, s.y, s.v, s.theta, s.control.steer, s.control.accel};
}

/// Uniformly random actions from a private seeded generator.
inline ActionPolicy uniform_random_policy(std::uint64_t seed) {
  auto rng = std::make_shared<std::mt19937_64>(seed);
  return [rng](const Observation&) { return action_from_index(static_cast<int>(uniform_index(*rng, kActionCount))); };
}

/// Runs one episode of `scenario` with `ego_policy` driving the ego (and any
/// vehicle bound to "ego"). The initial pose is the first trajectory point.
inline EpisodeResult run_episode(const Scenario& scenario, const ActionPolicy& ego_policy,
                                 const std::string& policy_id = "ego", const RewardWeights& weights = {},
                                 const PolicyResolver& resolver = {}) {
  if (!ego_policy) throw Error(ErrorCode::kConfig, "no ego policy bound");
  Environment env(scenario, ego_policy, resolver);
  EpisodeResult res;
  res.log.scenario_id = scenario.id;
  res.log.policy_id = policy_id;
  res.log.steps.push_back(record_of(env.ego_state()));
  while (!env.done()) {
    const StepResult step = env.step(ego_policy(env.observe()), weights);
    res.total_reward += step.reward.total();
    res.log.steps.push_back(record_of(env.ego_state()));
  }
  res.outcome = env.outcome();
  res.steps = env.steps();
  res.log.outcome = res.outcome;
  res.log.step_count = res.steps;
  return res;
}

}  // namespace divdrive::sim
