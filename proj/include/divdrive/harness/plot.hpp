#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "divdrive/text_format.hpp"
#include "divdrive/trajectory_log.hpp"

namespace divdrive::harness {

struct PlotFiles {
  std::string overlay_svg;
  std::string speed_svg;
  std::string data_csv;
};

namespace detail {

inline std::string color_of(std::size_t i, std::size_t n) {
  const double hue = n ? 300.0 * static_cast<double>(i) / static_cast<double>(std::max<std::size_t>(n, 2) - 1) : 0.0;
  std::ostringstream out;
  out << "hsl(" << std::lround(hue) << ",70%,45%)";
  return out.str();
}

struct Box {
  double x0 = std::numeric_limits<double>::infinity(), x1 = -std::numeric_limits<double>::infinity();
  double y0 = std::numeric_limits<double>::infinity(), y1 = -std::numeric_limits<double>::infinity();
  void add(double x, double y) {
    x0 = std::min(x0, x);
    x1 = std::max(x1, x);
    y0 = std::min(y0, y);
    y1 = std::max(y1, y);
  }
  [[nodiscard]] bool empty() const { return !(x1 >= x0); }
};

inline void svg_open(std::ostringstream& out, const std::string& title, const Box& box, double pad) {
  const double w = box.empty() ? 1.0 : box.x1 - box.x0 + 2 * pad;
  const double h = box.empty() ? 1.0 : box.y1 - box.y0 + 2 * pad;
  const double x = box.empty() ? 0.0 : box.x0 - pad;
  const double y = box.empty() ? 0.0 : box.y0 - pad;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"" << std::lround(640.0 * h / w)
      << "\" viewBox=\"" << text::format_double(x) << ' ' << text::format_double(y) << ' ' << text::format_double(w)
      << ' ' << text::format_double(h) << "\">\n<title>" << title << "</title>\n";
}

}  // namespace detail

/// Per-scenario plots: an x-y overlay of every episode (y grows downward, as in
/// the simulator), speed against time, and the plotted values as CSV.
inline PlotFiles plot_scenario(const std::string& scenario_id, const std::vector<EpisodeLog>& episodes) {
  using text::format_double;
  PlotFiles files;
  std::ostringstream csv;
  csv << "scenario_id,policy_id,step,time,x,y,v\n";
  detail::Box xy, tv;
  tv.add(0.0, 0.0);
  for (const auto& ep : episodes) {
    for (std::size_t i = 0; i < ep.steps.size(); ++i) {
      const StepRecord& r = ep.steps[i];
      const double t = static_cast<double>(i) * kStepSeconds;
      xy.add(r.x, r.y);
      tv.add(t, r.v);
      csv << ep.scenario_id << ',' << ep.policy_id << ',' << i << ',' << format_double(t) << ',' << format_double(r.x)
          << ',' << format_double(r.y) << ',' << format_double(r.v) << '\n';
    }
  }
  files.data_csv = csv.str();

  std::ostringstream svg;
  detail::svg_open(svg, scenario_id + " positions", xy, 2.0);
  if (episodes.empty()) svg << "<text x=\"0\" y=\"0.5\" font-size=\"0.1\">no selected policies</text>\n";
  for (std::size_t e = 0; e < episodes.size(); ++e) {
    svg << "<polyline fill=\"none\" stroke-width=\"0.15\" stroke=\"" << detail::color_of(e, episodes.size())
        << "\" points=\"";
    for (const auto& r : episodes[e].steps) svg << format_double(r.x) << ',' << format_double(r.y) << ' ';
    svg << "\"><title>" << episodes[e].policy_id << ' ' << to_string(episodes[e].outcome) << "</title></polyline>\n";
  }
  svg << "</svg>\n";
  files.overlay_svg = svg.str();

  // Speed plot: time on x (seconds), speed on y, flipped so faster is higher.
  std::ostringstream sp;
  detail::Box flipped;
  if (!tv.empty()) {
    flipped.add(tv.x0, -tv.y1 * 5.0);
    flipped.add(tv.x1, -tv.y0 * 5.0);
  }
  detail::svg_open(sp, scenario_id + " speed (vertical scale x5)", flipped, 1.0);
  if (episodes.empty()) sp << "<text x=\"0\" y=\"0.5\" font-size=\"0.1\">no selected policies</text>\n";
  for (std::size_t e = 0; e < episodes.size(); ++e) {
    sp << "<polyline fill=\"none\" stroke-width=\"0.1\" stroke=\"" << detail::color_of(e, episodes.size())
       << "\" points=\"";
    for (std::size_t i = 0; i < episodes[e].steps.size(); ++i)
      sp << format_double(static_cast<double>(i) * kStepSeconds) << ',' << format_double(-5.0 * episodes[e].steps[i].v)
         << ' ';
    sp << "\"><title>" << episodes[e].policy_id << "</title></polyline>\n";
  }
  sp << "</svg>\n";
  files.speed_svg = sp.str();
  return files;
}

}  // namespace divdrive::harness
