#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <string_view>

#include "divdrive/geometry.hpp"

namespace divdrive::sim {

inline constexpr double kVehicleLength = 4.5;
inline constexpr double kVehicleWidth = 1.8;
inline constexpr double kAxleToCenter = kVehicleLength / 2.0;  // l_f = l_r

inline constexpr double kMinSpeed = 0.0;
inline constexpr double kMaxSpeed = 2.0;
inline constexpr double kMaxSteer = 0.785;
inline constexpr double kMaxAccel = 1.0;

struct Control {
  double steer = 0.0;  // rad
  double accel = 0.0;  // m/s^2

  friend bool operator==(const Control&, const Control&) = default;
};

inline Control clamp_control(Control c) {
  return {std::clamp(c.steer, -kMaxSteer, kMaxSteer), std::clamp(c.accel, -kMaxAccel, kMaxAccel)};
}

struct VehicleState {
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;
  double v = 0.0;
  Control control;  // last applied control

  [[nodiscard]] Vec2 position() const { return {x, y}; }
  [[nodiscard]] OrientedRect body() const { return {{x, y}, theta, kVehicleLength, kVehicleWidth}; }

  friend bool operator==(const VehicleState&, const VehicleState&) = default;
};

/// Centre-of-gravity kinematic bicycle model, explicit Euler. Position and
/// yaw advance with the speed from before the update; speed is clamped after.
inline VehicleState step_dynamics(const VehicleState& s, Control u, double dt) {
  const double beta = std::atan(kAxleToCenter / (2.0 * kAxleToCenter) * std::tan(u.steer));
  VehicleState next = s;
  next.x = s.x + s.v * std::cos(s.theta + beta) * dt;
  next.y = s.y + s.v * std::sin(s.theta + beta) * dt;
  next.theta = s.theta + (s.v / kAxleToCenter) * std::sin(beta) * dt;
  next.v = std::clamp(s.v + u.accel * dt, kMinSpeed, kMaxSpeed);
  next.control = u;
  return next;
}

enum class Action : int {
  kForward = 0,
  kBackward,
  kRight,
  kLeft,
  kHolding,
  kRightForward,
  kLeftForward,
  kRightBackward,
  kLeftBackward,
};

inline constexpr int kActionCount = 9;

struct ActionRates {
  double steer_rate;  // rad/s
  double accel_rate;  // m/s^3
};

inline constexpr std::array<ActionRates, kActionCount> kActionTable = {{
    {0.0, 2.5},      // forward
    {0.0, -2.5},     // backward
    {0.628, 0.0},    // right
    {-0.628, 0.0},   // left
    {0.0, 0.0},      // holding
    {0.628, 2.5},    // right-forward
    {-0.628, 2.5},   // left-forward
    {0.628, -2.5},   // right-backward
    {-0.628, -2.5},  // left-backward
}};

inline constexpr std::array<std::string_view, kActionCount> kActionNames = {
    "Forward", "Backward", "Right", "Left", "Holding", "Right-forward", "Left-forward", "Right-backward",
    "Left-backward"};

inline Action action_from_index(int index) {
  if (index < 0 || index >= kActionCount) throw Error(ErrorCode::kInvalidInput, "unknown action id");
  return static_cast<Action>(index);
}

/// Incremental control: the action's rates integrated over one step on top of
/// the previous control, clamped to the actuator limits.
inline Control apply_action(const VehicleState& s, Action action, double dt) {
  const int idx = static_cast<int>(action);
  if (idx < 0 || idx >= kActionCount) throw Error(ErrorCode::kInvalidInput, "unknown action id");
  const ActionRates r = kActionTable[static_cast<std::size_t>(idx)];
  return clamp_control({r.steer_rate * dt + s.control.steer, r.accel_rate * dt + s.control.accel});
}

}  // namespace divdrive::sim
