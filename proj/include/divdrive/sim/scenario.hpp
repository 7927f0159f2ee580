#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "divdrive/random.hpp"
#include "divdrive/sim/world.hpp"

namespace divdrive::sim {

enum class Mode { kEval, kTrain };

struct VehicleSpec {
  std::string route;
  double start = 0.0;           // arc length along the route (m)
  double lateral = 0.0;         // offset to the right of the route (m)
  double speed = 0.0;           // initial speed (m/s)
  double perturb_min = 0.0;     // uniform offset bounds along the route (m)
  double perturb_max = 0.0;
  std::string policy = "ego";   // "ego", "scripted", "hold", or a named binding
  double cruise_speed = 1.5;    // for scripted vehicles
  std::vector<std::size_t> ignore;
};

/// Deterministic episode specification.
struct Scenario {
  std::string id;
  std::string map_path;
  std::shared_ptr<const ZoneMap> map;
  std::vector<VehicleSpec> vehicles;
  std::size_t ego = 0;
  std::uint64_t seed = 0;
  double time_limit = 25.0;
  Mode mode = Mode::kEval;
  int max_collisions = 150;

  [[nodiscard]] int max_steps() const { return static_cast<int>(std::lround(time_limit / kStepSeconds)); }
};

/// Places every vehicle, drawing start perturbations from `rng` in vehicle order.
inline World make_world(const Scenario& sc, std::mt19937_64& rng) {
  if (!sc.map) throw Error(ErrorCode::kConfig, "scenario " + sc.id + " has no map");
  if (sc.ego >= sc.vehicles.size()) throw Error(ErrorCode::kConfig, "scenario " + sc.id + " has no ego vehicle");
  std::vector<Vehicle> vehicles;
  for (const VehicleSpec& spec : sc.vehicles) {
    Vehicle v;
    v.route = sc.map->route_index(spec.route);
    const double offset = spec.perturb_max > spec.perturb_min ? uniform(rng, spec.perturb_min, spec.perturb_max) : spec.perturb_min;
    const Route::Pose pose = sc.map->routes[v.route].at(spec.start + offset);
    const Vec2 right = unit(pose.heading + std::numbers::pi / 2.0);
    const Vec2 p = pose.position + spec.lateral * right;
    v.state = VehicleState{p.x, p.y, pose.heading, std::clamp(spec.speed, kMinSpeed, kMaxSpeed), {}};
    v.ignored = spec.ignore;
    vehicles.push_back(std::move(v));
  }
  return World(sc.map, std::move(vehicles));
}

inline World make_world(const Scenario& sc) {
  std::mt19937_64 rng(sc.seed);
  return make_world(sc, rng);
}

/// Parses the JSON scenario format. `base_dir` resolves a relative map path.
inline Scenario parse_scenario(const nlohmann::json& j, const std::filesystem::path& base_dir) {
  try {
    Scenario sc;
    sc.id = j.at("id").get<std::string>();
    sc.map_path = (base_dir / j.at("map").get<std::string>()).lexically_normal().string();
    sc.map = std::make_shared<const ZoneMap>(load_map(sc.map_path));
    sc.ego = j.value("ego", std::size_t{0});
    sc.seed = j.value("seed", std::uint64_t{0});
    sc.time_limit = j.value("time_limit", 25.0);
    sc.max_collisions = j.value("max_collisions", 150);
    const std::string mode = j.value("mode", std::string("eval"));
    if (mode == "eval")
      sc.mode = Mode::kEval;
    else if (mode == "train")
      sc.mode = Mode::kTrain;
    else
      throw Error(ErrorCode::kConfig, "unknown scenario mode '" + mode + "'");
    for (const auto& v : j.at("vehicles")) {
      VehicleSpec spec;
      spec.route = v.at("route").get<std::string>();
      spec.start = v.value("start", 0.0);
      spec.lateral = v.value("lateral", 0.0);
      spec.speed = v.value("speed", 0.0);
      if (v.contains("perturbation")) {
        spec.perturb_min = v.at("perturbation").at(0).get<double>();
        spec.perturb_max = v.at("perturbation").at(1).get<double>();
      }
      spec.policy = v.value("policy", std::string("ego"));
      spec.cruise_speed = v.value("cruise_speed", 1.5);
      spec.ignore = v.value("ignore", std::vector<std::size_t>{});
      sc.vehicles.push_back(std::move(spec));
    }
    if (sc.ego >= sc.vehicles.size()) throw Error(ErrorCode::kConfig, "ego index out of range");
    if (!(sc.time_limit > 0.0)) throw Error(ErrorCode::kConfig, "time limit must be positive");
    for (const auto& v : sc.vehicles) (void)sc.map->route_index(v.route);
    return sc;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kConfig, std::string("malformed scenario: ") + e.what());
  }
}

inline Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kConfig, "cannot open scenario file " + path);
  try {
    return parse_scenario(nlohmann::json::parse(in), std::filesystem::path(path).parent_path());
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kConfig, path + ": " + e.what());
  }
}

/// The fixed evaluation suite: `count` copies of `base` whose seeds (and so
/// initial perturbations) are derived from the base seed.
inline std::vector<Scenario> evaluation_suite(const Scenario& base, std::size_t count) {
  std::vector<Scenario> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    Scenario s = base;
    s.mode = Mode::kEval;
    s.seed = mix_seed(base.seed, i);
    s.id = base.id + "-" + std::to_string(i);
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace divdrive::sim
