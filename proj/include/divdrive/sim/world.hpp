#pragma once

#include <array>
#include <memory>
#include <numbers>
#include <span>
#include <vector>

#include "divdrive/sim/dynamics.hpp"
#include "divdrive/sim/zone_map.hpp"

namespace divdrive::sim {

inline constexpr int kRayCount = 32;
inline constexpr int kRayKinds = 6;
inline constexpr double kRayRange = 50.0;
inline constexpr int kHistoryDepth = 3;
inline constexpr int kObservationSize = kRayCount * kRayKinds + 3 * kHistoryDepth;  // 201

enum class RayKind { kWall = 0, kRoute1, kRoute2, kVehicle, kStraightZone, kIntersectionZone };

/// Flattened observation: six blocks of 32 ray distances followed by the
/// three most recent (v, a, steer) triples, newest first.
struct Observation {
  std::array<double, kObservationSize> values{};

  [[nodiscard]] std::span<const double> rays(RayKind kind) const {
    return std::span<const double>(values).subspan(static_cast<std::size_t>(kind) * kRayCount, kRayCount);
  }
  [[nodiscard]] std::span<const double> history() const {
    return std::span<const double>(values).subspan(kRayCount * kRayKinds);
  }
  [[nodiscard]] std::size_t size() const { return values.size(); }
};

struct HistoryEntry {
  double v = 0.0;
  double accel = 0.0;
  double steer = 0.0;
};

struct Vehicle {
  VehicleState state;
  std::size_t route = 0;
  bool active = true;
  std::vector<std::size_t> ignored;  // vehicles invisible to this one's vehicle rays
  std::array<HistoryEntry, kHistoryDepth> history{};
  int collisions = 0;

  void reset_history() {
    history.fill({state.v, state.control.accel, state.control.steer});
  }
  void push_history() {
    for (int i = kHistoryDepth - 1; i > 0; --i) history[static_cast<std::size_t>(i)] = history[static_cast<std::size_t>(i - 1)];
    history[0] = {state.v, state.control.accel, state.control.steer};
  }
  [[nodiscard]] bool ignores(std::size_t other) const {
    return std::find(ignored.begin(), ignored.end(), other) != ignored.end();
  }
};

struct RewardWeights {
  double move = 100.0;
  double collision = 300.0;
  double angle = 0.0;
  double center = 0.0;
};

struct RewardTerms {
  double move = 0.0;
  double collision = 0.0;
  double angle = 0.0;
  double center = 0.0;

  [[nodiscard]] double total() const { return move + collision + angle + center; }
};

/// Four-term driving reward for one step of a vehicle following `route`.
/// Zone membership is taken at the new position.
inline RewardTerms compute_reward(const ZoneMap& map, std::size_t route, const VehicleState& prev,
                                  const VehicleState& next, bool collided, const RewardWeights& w) {
  RewardTerms r;
  if (collided) r.collision = -w.collision;
  const Zone* zone = map.zone_at(route, next.position());
  if (zone == nullptr) return r;
  const Segment& arrow = map.routes[zone->route].arrows[zone->arrow];
  if (zone->kind == ZoneKind::kIntersection) {
    const double before = distance(prev.position(), arrow.b);
    const double after = distance(next.position(), arrow.b);
    r.move = w.move * std::max(0.0, before - after);
    return r;
  }
  const double progress = dot(next.position() - prev.position(), arrow.direction());
  r.move = w.move * progress;
  if (r.move >= 0.0) {
    const double omega = wrap_angle(next.theta - arrow.angle());
    r.angle = w.angle * (0.5 - (omega / std::numbers::pi) * (omega / std::numbers::pi));
    const double lambda = point_segment_distance(next.position(), arrow);
    r.center = w.center * (5.0 * std::exp(-8.0 * lambda * lambda) - 0.5);
  }
  return r;
}

class World {
 public:
  World() = default;
  World(std::shared_ptr<const ZoneMap> map, std::vector<Vehicle> vehicles)
      : map_(std::move(map)), vehicles_(std::move(vehicles)) {
    if (!map_) throw Error(ErrorCode::kConfig, "world needs a map");
    for (auto& v : vehicles_) {
      if (v.route >= map_->routes.size()) throw Error(ErrorCode::kConfig, "vehicle bound to a missing route");
      v.reset_history();
    }
  }

  [[nodiscard]] const ZoneMap& map() const { return *map_; }
  [[nodiscard]] const std::shared_ptr<const ZoneMap>& map_ptr() const { return map_; }
  [[nodiscard]] std::span<const Vehicle> vehicles() const { return vehicles_; }
  [[nodiscard]] Vehicle& vehicle(std::size_t i) { return vehicles_.at(i); }
  [[nodiscard]] const Vehicle& vehicle(std::size_t i) const { return vehicles_.at(i); }

  [[nodiscard]] bool hits_wall(const VehicleState& s) const {
    const OrientedRect body = s.body();
    for (const auto& w : map_->walls)
      if (overlaps(body, w)) return true;
    return false;
  }

  /// Whether `s`, as the pose of vehicle `self`, overlaps any other active vehicle.
  [[nodiscard]] bool hits_vehicle(std::size_t self, const VehicleState& s) const {
    const OrientedRect body = s.body();
    for (std::size_t i = 0; i < vehicles_.size(); ++i) {
      if (i == self || !vehicles_[i].active) continue;
      if (overlaps(body, vehicles_[i].state.body())) return true;
    }
    return false;
  }

  [[nodiscard]] bool collides(std::size_t self, const VehicleState& s) const {
    return hits_wall(s) || hits_vehicle(self, s);
  }

  [[nodiscard]] bool reached_goal(std::size_t self) const {
    const Vehicle& v = vehicles_.at(self);
    const GoalArea* g = map_->goal_for(v.route);
    return g != nullptr && overlaps(v.state.body(), g->area);
  }

  /// Ray-cast observation of vehicle `self`. Rays start at the vehicle centre,
  /// the first along the heading, spaced uniformly over the full circle.
  [[nodiscard]] Observation observe(std::size_t self) const {
    const Vehicle& ego = vehicles_.at(self);
    const Vec2 origin = ego.state.position();

    // two routes closest to the vehicle centre (ties: lowest index)
    std::size_t r1 = map_->routes.size(), r2 = map_->routes.size();
    double d1 = std::numeric_limits<double>::infinity(), d2 = d1;
    for (std::size_t r = 0; r < map_->routes.size(); ++r) {
      const double d = map_->routes[r].distance_to(origin);
      if (d < d1) {
        r2 = r1, d2 = d1;
        r1 = r, d1 = d;
      } else if (d < d2) {
        r2 = r, d2 = d;
      }
    }

    std::vector<Segment> vehicle_edges;
    for (std::size_t i = 0; i < vehicles_.size(); ++i) {
      if (i == self || !vehicles_[i].active || ego.ignores(i)) continue;
      for (const auto& e : vehicles_[i].state.body().edges()) vehicle_edges.push_back(e);
    }
    std::vector<Segment> straight_edges, intersection_edges;
    for (const auto& z : map_->zones) {
      if (z.route != ego.route) continue;
      auto& bucket = z.kind == ZoneKind::kStraight ? straight_edges : intersection_edges;
      for (const auto& e : z.area.edges()) bucket.push_back(e);
    }
    static const std::vector<Segment> kNone;
    const std::vector<Segment>& route1 = r1 < map_->routes.size() ? map_->routes[r1].arrows : kNone;
    const std::vector<Segment>& route2 = r2 < map_->routes.size() ? map_->routes[r2].arrows : kNone;
    const std::array<const std::vector<Segment>*, kRayKinds> groups = {
        &map_->walls, &route1, &route2, &vehicle_edges, &straight_edges, &intersection_edges};

    Observation obs;
    for (int k = 0; k < kRayKinds; ++k) {
      for (int r = 0; r < kRayCount; ++r) {
        const double angle = ego.state.theta + 2.0 * std::numbers::pi * r / kRayCount;
        const Vec2 dir = unit(angle);
        double best = kRayRange;
        for (const Segment& seg : *groups[static_cast<std::size_t>(k)]) {
          if (auto hit = ray_segment_hit(origin, dir, seg); hit && *hit < best) best = *hit;
        }
        obs.values[static_cast<std::size_t>(k * kRayCount + r)] = best;
      }
    }
    std::size_t pos = kRayCount * kRayKinds;
    for (const HistoryEntry& h : ego.history) {
      obs.values[pos++] = h.v;
      obs.values[pos++] = h.accel;
      obs.values[pos++] = h.steer;
    }
    return obs;
  }

 private:
  std::shared_ptr<const ZoneMap> map_;
  std::vector<Vehicle> vehicles_;
};

}  // namespace divdrive::sim
