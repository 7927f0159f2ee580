#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include "divdrive/random.hpp"
#include "divdrive/sim/episode.hpp"

namespace divdrive::refgen {

/// Hand-drawn expected path, parameterised by arc length.
class CoreTrajectory {
 public:
  CoreTrajectory() = default;
  explicit CoreTrajectory(std::vector<Vec2> points) : points_(std::move(points)) {
    if (points_.size() < 2) throw Error(ErrorCode::kInvalidInput, "core trajectory needs at least two points");
    arc_.push_back(0.0);
    for (std::size_t i = 1; i < points_.size(); ++i) {
      const double seg = distance(points_[i - 1], points_[i]);
      if (!(seg > 0.0)) throw Error(ErrorCode::kInvalidInput, "core trajectory arc length must strictly increase");
      arc_.push_back(arc_.back() + seg);
    }
  }

  [[nodiscard]] double length() const { return arc_.back(); }
  [[nodiscard]] const std::vector<Vec2>& points() const { return points_; }
  [[nodiscard]] Vec2 front() const { return points_.front(); }
  [[nodiscard]] Vec2 back() const { return points_.back(); }

  [[nodiscard]] Vec2 at(double s) const {
    if (s <= 0.0) return points_.front();
    if (s >= length()) return points_.back();
    const std::size_t i = segment_of(s);
    const double t = (s - arc_[i]) / (arc_[i + 1] - arc_[i]);
    return points_[i] + t * (points_[i + 1] - points_[i]);
  }

  [[nodiscard]] Vec2 tangent(double s) const {
    const std::size_t i = segment_of(std::clamp(s, 0.0, length()));
    return Segment{points_[i], points_[i + 1]}.direction();
  }

  /// Unit normal pointing to the right of the direction of travel (the frame
  /// has y to the south, so this is the tangent rotated by +90 degrees).
  [[nodiscard]] Vec2 normal(double s) const {
    const Vec2 t = tangent(s);
    return {-t.y, t.x};
  }

  /// Local radius of curvature near `s`, from the turning angle at the closest
  /// interior vertex; infinite on straight stretches.
  [[nodiscard]] double curvature_radius(double s) const {
    if (points_.size() < 3) return std::numeric_limits<double>::infinity();
    std::size_t best = 1;
    for (std::size_t k = 1; k + 1 < points_.size(); ++k)
      if (std::abs(arc_[k] - s) < std::abs(arc_[best] - s)) best = k;
    const Vec2 d0 = points_[best] - points_[best - 1];
    const Vec2 d1 = points_[best + 1] - points_[best];
    const double turn = std::abs(std::atan2(cross(d0, d1), dot(d0, d1)));
    if (turn < 1e-9) return std::numeric_limits<double>::infinity();
    return 0.5 * (d0.norm() + d1.norm()) / turn;
  }

  /// The remainder of the core starting at the point closest to `start`,
  /// with `start` itself prepended.
  [[nodiscard]] CoreTrajectory suffix_from(Vec2 start) const {
    double best = std::numeric_limits<double>::infinity();
    double best_s = 0.0;
    for (std::size_t i = 0; i + 1 < points_.size(); ++i) {
      const Segment seg{points_[i], points_[i + 1]};
      const Vec2 d = seg.b - seg.a;
      const double t = std::clamp(dot(start - seg.a, d) / dot(d, d), 0.0, 1.0);
      const double dist = distance(start, seg.a + t * d);
      if (dist < best) {
        best = dist;
        best_s = arc_[i] + t * (arc_[i + 1] - arc_[i]);
      }
    }
    std::vector<Vec2> pts{start};
    for (std::size_t i = 0; i < points_.size(); ++i)
      if (arc_[i] > best_s + 1e-9 && distance(points_[i], pts.back()) > 1e-9) pts.push_back(points_[i]);
    if (pts.size() < 2) pts.push_back(points_.back());
    return CoreTrajectory(std::move(pts));
  }

 private:
  [[nodiscard]] std::size_t segment_of(double s) const {
    const auto it = std::upper_bound(arc_.begin(), arc_.end(), s);
    const auto i = static_cast<std::size_t>(std::distance(arc_.begin(), it));
    return std::min(i == 0 ? 0 : i - 1, points_.size() - 2);
  }

  std::vector<Vec2> points_;
  std::vector<double> arc_;
};

struct BridgeParams {
  double sigma_lateral = 0.5;       // m / sqrt(s)
  double sigma_longitudinal = 1.0;  // m / sqrt(s)
  double base_speed = 3.0;          // m/s along the core
  std::size_t sample_count = 50;
  std::uint64_t seed = 0;

  void validate() const {
    if (sigma_lateral < 0.0 || sigma_longitudinal < 0.0) throw Error(ErrorCode::kConfig, "bridge scales must be >= 0");
    if (!(base_speed > 0.0)) throw Error(ErrorCode::kConfig, "base speed must be positive");
  }
};

struct PControlParams {
  double lookahead = 2.0;  // seconds
  double steer_gain = 1.0;
  double accel_gain = 3.0;

  void validate() const {
    if (!(lookahead > 0.0)) throw Error(ErrorCode::kConfig, "P-control lookahead must be positive");
  }
};

/// Brownian bridge on a uniform grid of `n_steps` points over [0, total_time]:
/// a scaled random walk W with the linear correction W(t) - (t/T) W(T).
/// Both endpoints are exactly zero.
inline std::vector<double> brownian_bridge(std::size_t n_steps, double total_time, double sigma, std::mt19937_64& rng) {
  if (n_steps < 2) throw Error(ErrorCode::kInvalidInput, "a bridge needs at least two points");
  if (!(total_time > 0.0)) throw Error(ErrorCode::kInvalidInput, "bridge duration must be positive");
  const double dt = total_time / static_cast<double>(n_steps - 1);
  std::vector<double> walk(n_steps, 0.0);
  for (std::size_t i = 1; i < n_steps; ++i) walk[i] = walk[i - 1] + sigma * std::sqrt(dt) * standard_normal(rng);
  std::vector<double> bridge(n_steps, 0.0);
  const double end = walk.back();
  for (std::size_t i = 1; i + 1 < n_steps; ++i)
    bridge[i] = walk[i] - (static_cast<double>(i) / static_cast<double>(n_steps - 1)) * end;
  return bridge;
}

inline std::vector<double> brownian_bridge(std::size_t n_steps, double total_time, double sigma, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return brownian_bridge(n_steps, total_time, sigma, rng);
}

struct TargetTrajectory {
  Trajectory trajectory;
  bool exceeds_curvature = false;  // some lateral offset is larger than the local curvature radius
};

/// Perturbs the core with a longitudinal bridge on arc length (forced
/// non-decreasing) and a lateral bridge along the right-hand normal. The
/// traversal time is the core length over the base speed, rounded to whole
/// steps; both endpoints coincide with the core's.
inline TargetTrajectory perturb_core(const CoreTrajectory& core, const BridgeParams& params, std::uint64_t seed) {
  params.validate();
  const double length = core.length();
  const auto n = std::max<std::size_t>(2, static_cast<std::size_t>(std::lround(length / params.base_speed / kStepSeconds)) + 1);
  const double duration = static_cast<double>(n - 1) * kStepSeconds;
  std::mt19937_64 rng(seed);
  const std::vector<double> lon = brownian_bridge(n, duration, params.sigma_longitudinal, rng);
  const std::vector<double> lat = brownian_bridge(n, duration, params.sigma_lateral, rng);

  TargetTrajectory out;
  std::vector<Vec2> pts;
  pts.reserve(n);
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double nominal = i + 1 == n ? length : length * static_cast<double>(i) / static_cast<double>(n - 1);
    s = std::clamp(std::max(s, nominal + lon[i]), 0.0, length);
    if (i + 1 == n) s = length;
    if (std::abs(lat[i]) > core.curvature_radius(s)) out.exceeds_curvature = true;
    pts.push_back(core.at(s) + lat[i] * core.normal(s));
  }
  pts.front() = core.front();
  pts.back() = core.back();
  out.trajectory = Trajectory(std::move(pts), kStepSeconds);
  return out;
}

/// Proportional tracking command toward `target`: steering from the sine of
/// the bearing error, acceleration from the distance to cover over the
/// lookahead, both clamped to the actuator limits.
inline sim::Control pcontrol_command(const sim::VehicleState& s, Vec2 target, const PControlParams& p) {
  const Vec2 d = target - s.position();
  const double dist = d.norm();
  const double omega = dist > 0.0 ? wrap_angle(std::atan2(d.y, d.x) - s.theta) : 0.0;
  return sim::clamp_control({p.steer_gain * std::sin(omega), p.accel_gain * dist / p.lookahead - s.v * std::sin(omega)});
}

struct Conversion {
  std::optional<Trajectory> trajectory;  // set when the tracker reached the goal cleanly
  Outcome outcome = Outcome::kTimeout;
  int steps = 0;
  std::vector<sim::VehicleState> states;  // full tracker history, accepted or not
};

/// Runs a P-control tracker of `target` as the scenario's ego among the
/// scenario's traffic (which it does not perceive). Accepted only on a
/// collision-free arrival at the goal area.
inline Conversion pcontrol_convert(const Trajectory& target, const PControlParams& params, const sim::Scenario& scenario) {
  params.validate();
  sim::Scenario sc = scenario;
  sc.mode = sim::Mode::kEval;
  for (auto& v : sc.vehicles)
    if (v.policy == "ego") v.policy = "hold";
  sim::Environment env(sc);
  const auto ahead = static_cast<std::size_t>(std::lround(params.lookahead / target.timestep()));
  Conversion out;
  out.states.push_back(env.ego_state());
  while (!env.done()) {
    const std::size_t idx = std::min(static_cast<std::size_t>(env.steps()) + ahead, target.size() - 1);
    env.step(pcontrol_command(env.ego_state(), target[idx], params), sim::RewardWeights{});
    out.states.push_back(env.ego_state());
  }
  out.outcome = env.outcome();
  out.steps = env.steps();
  if (out.outcome == Outcome::kGoal) {
    std::vector<Vec2> pts;
    std::vector<double> speeds, headings;
    for (const auto& s : out.states) {
      pts.push_back(s.position());
      speeds.push_back(s.v);
      headings.push_back(s.theta);
    }
    out.trajectory = Trajectory(std::move(pts), kStepSeconds, std::move(speeds), std::move(headings));
  }
  return out;
}

struct ReferenceSet {
  std::vector<Trajectory> trajectories;
  std::size_t attempts = 0;
  std::size_t curvature_flags = 0;
};

/// Draws perturbed targets from the core (restarted at the scenario's ego
/// start) and keeps the P-control traces that reach the goal, until `count`
/// are accepted or 20 x `count` attempts are spent.
inline ReferenceSet generate_reference_set(const sim::Scenario& scenario, const CoreTrajectory& core,
                                           const BridgeParams& bridge, const PControlParams& pcontrol,
                                           std::size_t count) {
  if (count == 0) throw Error(ErrorCode::kInvalidInput, "reference set size must be at least 1");
  const sim::World world = sim::make_world(scenario);
  const CoreTrajectory local = core.suffix_from(world.vehicle(scenario.ego).state.position());
  ReferenceSet out;
  const std::size_t cap = 20 * count;
  while (out.trajectories.size() < count && out.attempts < cap) {
    const std::uint64_t seed = mix_seed(bridge.seed ^ scenario.seed, out.attempts);
    ++out.attempts;
    const TargetTrajectory target = perturb_core(local, bridge, seed);
    if (target.exceeds_curvature) ++out.curvature_flags;
    Conversion conv = pcontrol_convert(target.trajectory, pcontrol, scenario);
    if (conv.trajectory) out.trajectories.push_back(std::move(*conv.trajectory));
  }
  if (out.trajectories.empty())
    throw Error(ErrorCode::kInfeasibleReference,
                "no reference trajectory accepted in " + std::to_string(cap) + " attempts for " + scenario.id);
  return out;
}

}  // namespace divdrive::refgen
