#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "divdrive/error.hpp"

namespace divdrive {

/// Simulation step used by every trajectory the simulator records (seconds).
inline constexpr double kStepSeconds = 0.1;

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend constexpr Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend constexpr Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend constexpr Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
  friend constexpr Vec2 operator*(Vec2 a, double s) { return {s * a.x, s * a.y}; }
  friend constexpr bool operator==(Vec2 a, Vec2 b) = default;

  [[nodiscard]] double norm() const { return std::hypot(x, y); }
};

inline constexpr double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline constexpr double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double distance(Vec2 a, Vec2 b) { return (a - b).norm(); }

/// Time-indexed sequence of vehicle-center positions sampled at a constant
/// timestep. Speed and heading channels are optional and, when present, have
/// one entry per point.
class Trajectory {
 public:
  Trajectory() = default;

  explicit Trajectory(std::vector<Vec2> points, double timestep = kStepSeconds,
                      std::vector<double> speeds = {}, std::vector<double> headings = {})
      : points_(std::move(points)),
        timestep_(timestep),
        speeds_(std::move(speeds)),
        headings_(std::move(headings)) {
    if (points_.empty()) throw Error(ErrorCode::kInvalidInput, "trajectory must have at least one point");
    if (!(timestep_ > 0.0) || !std::isfinite(timestep_))
      throw Error(ErrorCode::kInvalidInput, "trajectory timestep must be positive");
    for (const Vec2& p : points_) {
      if (!std::isfinite(p.x) || !std::isfinite(p.y))
        throw Error(ErrorCode::kInvalidInput, "trajectory point is not finite");
    }
    if (!speeds_.empty() && speeds_.size() != points_.size())
      throw Error(ErrorCode::kInvalidInput, "speed channel length differs from point count");
    if (!headings_.empty() && headings_.size() != points_.size())
      throw Error(ErrorCode::kInvalidInput, "heading channel length differs from point count");
  }

  [[nodiscard]] std::size_t size() const { return points_.size(); }
  [[nodiscard]] bool empty() const { return points_.empty(); }
  [[nodiscard]] double timestep() const { return timestep_; }
  [[nodiscard]] std::span<const Vec2> points() const { return points_; }
  [[nodiscard]] std::span<const double> speeds() const { return speeds_; }
  [[nodiscard]] std::span<const double> headings() const { return headings_; }
  [[nodiscard]] const Vec2& operator[](std::size_t i) const { return points_[i]; }
  [[nodiscard]] const Vec2& front() const { return points_.front(); }
  [[nodiscard]] const Vec2& back() const { return points_.back(); }

  friend bool operator==(const Trajectory&, const Trajectory&) = default;

 private:
  std::vector<Vec2> points_;
  double timestep_ = kStepSeconds;
  std::vector<double> speeds_;
  std::vector<double> headings_;
};

inline bool same_timestep(double a, double b) {
  return std::abs(a - b) <= 1e-12 * std::max(std::abs(a), std::abs(b));
}

/// Mean Euclidean distance between two trajectories over their shared prefix
/// (index 0 is the first recorded frame).
inline double trajectory_distance(const Trajectory& a, const Trajectory& b) {
  if (a.empty() || b.empty()) throw Error(ErrorCode::kInvalidInput, "empty trajectory");
  if (!same_timestep(a.timestep(), b.timestep()))
    throw Error(ErrorCode::kInvalidInput, "trajectories have different timesteps");
  const std::size_t horizon = std::min(a.size(), b.size());
  double sum = 0.0;
  for (std::size_t t = 0; t < horizon; ++t) sum += distance(a[t], b[t]);
  return sum / static_cast<double>(horizon);
}

}  // namespace divdrive
