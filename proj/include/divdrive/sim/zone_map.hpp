#pragma once

#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include <json.hpp>

#include "divdrive/geometry.hpp"

namespace divdrive::sim {

enum class ZoneKind { kStraight, kIntersection };

/// A navigation route: consecutive target arrows forming a polyline.
struct Route {
  std::string name;
  std::vector<Segment> arrows;

  [[nodiscard]] double length() const {
    double total = 0.0;
    for (const auto& a : arrows) total += a.length();
    return total;
  }

  struct Pose {
    Vec2 position;
    double heading = 0.0;
    std::size_t arrow = 0;
  };

  /// Point at arc length `s` along the route, clamped to its ends.
  [[nodiscard]] Pose at(double s) const {
    s = std::max(s, 0.0);
    for (std::size_t i = 0; i < arrows.size(); ++i) {
      const double len = arrows[i].length();
      if (s <= len || i + 1 == arrows.size()) {
        const double t = len > 0.0 ? std::min(s / len, 1.0) : 0.0;
        return {arrows[i].a + t * (arrows[i].b - arrows[i].a), arrows[i].angle(), i};
      }
      s -= len;
    }
    return {};
  }

  /// Arc length of the route point closest to `p`.
  [[nodiscard]] double project(Vec2 p) const {
    double best = std::numeric_limits<double>::infinity();
    double best_s = 0.0;
    double base = 0.0;
    for (const auto& a : arrows) {
      const Vec2 d = a.b - a.a;
      const double len2 = dot(d, d);
      const double t = len2 > 0.0 ? std::clamp(dot(p - a.a, d) / len2, 0.0, 1.0) : 0.0;
      const double dist = distance(p, a.a + t * d);
      if (dist < best) {
        best = dist;
        best_s = base + t * std::sqrt(len2);
      }
      base += std::sqrt(len2);
    }
    return best_s;
  }

  [[nodiscard]] double distance_to(Vec2 p) const {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& a : arrows) best = std::min(best, point_segment_distance(p, a));
    return best;
  }
};

struct Zone {
  OrientedRect area;
  ZoneKind kind = ZoneKind::kStraight;
  std::size_t route = 0;
  std::size_t arrow = 0;
};

struct GoalArea {
  OrientedRect area;
  std::size_t route = 0;
};

/// Static scene: walls, routes, reward zones and goal areas. Units are
/// meters and radians. The frame has x to the east and y to the south, so a
/// positive heading change is a clockwise (rightward) turn and vehicles keep
/// to the left.
struct ZoneMap {
  std::string name;
  std::vector<Segment> walls;
  std::vector<Route> routes;
  std::vector<Zone> zones;
  std::vector<GoalArea> goals;

  [[nodiscard]] std::size_t route_index(const std::string& route_name) const {
    for (std::size_t i = 0; i < routes.size(); ++i)
      if (routes[i].name == route_name) return i;
    throw Error(ErrorCode::kConfig, "map " + name + " has no route named '" + route_name + "'");
  }

  [[nodiscard]] const GoalArea* goal_for(std::size_t route) const {
    for (const auto& g : goals)
      if (g.route == route) return &g;
    return nullptr;
  }

  /// Zone of `route` containing `p`; intersection zones take precedence.
  [[nodiscard]] const Zone* zone_at(std::size_t route, Vec2 p) const {
    const Zone* found = nullptr;
    for (const auto& z : zones) {
      if (z.route != route || !z.area.contains(p)) continue;
      if (z.kind == ZoneKind::kIntersection) return &z;
      if (!found) found = &z;
    }
    return found;
  }

  void validate() const {
    if (routes.empty()) throw Error(ErrorCode::kConfig, "map " + name + " defines no routes");
    for (const auto& r : routes)
      if (r.arrows.empty()) throw Error(ErrorCode::kConfig, "route " + r.name + " has no target arrows");
    for (const auto& z : zones) {
      if (z.route >= routes.size() || z.arrow >= routes[z.route].arrows.size())
        throw Error(ErrorCode::kConfig, "zone references a missing target arrow");
    }
  }
};

namespace detail {

inline Vec2 read_point(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 2) throw Error(ErrorCode::kConfig, "point must be [x, y]");
  return {j[0].get<double>(), j[1].get<double>()};
}

inline Segment read_segment(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 4) throw Error(ErrorCode::kConfig, "segment must be [x1, y1, x2, y2]");
  return {{j[0].get<double>(), j[1].get<double>()}, {j[2].get<double>(), j[3].get<double>()}};
}

inline OrientedRect read_rect(const nlohmann::json& j) {
  return {read_point(j.at("center")), j.value("heading", 0.0), j.at("length").get<double>(),
          j.at("width").get<double>()};
}

}  // namespace detail

/// Parses the JSON map format:
/// {"name", "walls": [[x1,y1,x2,y2]...] or {"polyline": [[x,y]...]},
///  "routes": [{"name", "arrows": [[x1,y1,x2,y2]...]}],
///  "zones": [{"route", "arrow", "type": "straight"|"intersection", "center", "length", "width", "heading"}],
///  "goals": [{"route", "center", "length", "width", "heading"}]}
inline ZoneMap parse_map(const nlohmann::json& j) {
  try {
    ZoneMap map;
    map.name = j.value("name", "map");
    for (const auto& w : j.value("walls", nlohmann::json::array())) {
      if (w.is_object()) {
        const auto& pts = w.at("polyline");
        for (std::size_t i = 1; i < pts.size(); ++i)
          map.walls.push_back({detail::read_point(pts[i - 1]), detail::read_point(pts[i])});
      } else {
        map.walls.push_back(detail::read_segment(w));
      }
    }
    for (const auto& r : j.at("routes")) {
      Route route;
      route.name = r.at("name").get<std::string>();
      for (const auto& a : r.at("arrows")) route.arrows.push_back(detail::read_segment(a));
      map.routes.push_back(std::move(route));
    }
    for (const auto& z : j.value("zones", nlohmann::json::array())) {
      Zone zone;
      zone.area = detail::read_rect(z);
      const std::string type = z.at("type").get<std::string>();
      if (type == "straight")
        zone.kind = ZoneKind::kStraight;
      else if (type == "intersection")
        zone.kind = ZoneKind::kIntersection;
      else
        throw Error(ErrorCode::kConfig, "unknown zone type '" + type + "'");
      zone.route = map.route_index(z.at("route").get<std::string>());
      zone.arrow = z.at("arrow").get<std::size_t>();
      map.zones.push_back(zone);
    }
    for (const auto& g : j.value("goals", nlohmann::json::array()))
      map.goals.push_back({detail::read_rect(g), map.route_index(g.at("route").get<std::string>())});
    map.validate();
    return map;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kConfig, std::string("malformed map: ") + e.what());
  }
}

inline ZoneMap load_map(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kConfig, "cannot open map file " + path);
  try {
    return parse_map(nlohmann::json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kConfig, path + ": " + e.what());
  }
}

}  // namespace divdrive::sim
