#pragma once

#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "divdrive/text_format.hpp"
#include "divdrive/trajectory.hpp"

namespace divdrive {

enum class Outcome { kGoal, kCollision, kTimeout };

inline std::string_view to_string(Outcome o) {
  switch (o) {
    case Outcome::kGoal: return "GOAL";
    case Outcome::kCollision: return "COLLISION";
    case Outcome::kTimeout: return "TIMEOUT";
  }
  return "?";
}

inline Outcome parse_outcome(std::string_view s) {
  if (s == "GOAL") return Outcome::kGoal;
  if (s == "COLLISION") return Outcome::kCollision;
  if (s == "TIMEOUT") return Outcome::kTimeout;
  throw Error(ErrorCode::kCorrupt, "unknown outcome '" + std::string(s) + "'");
}

struct StepRecord {
  double x = 0.0;
  double y = 0.0;
  double v = 0.0;
  double theta = 0.0;
  double phi = 0.0;
  double a = 0.0;

  friend bool operator==(const StepRecord&, const StepRecord&) = default;
};

/// One episode as written to a trajectory log: per-step records followed by
/// a summary line.
struct EpisodeLog {
  std::string scenario_id;
  std::string policy_id;
  std::vector<StepRecord> steps;
  Outcome outcome = Outcome::kTimeout;
  std::int64_t step_count = 0;

  [[nodiscard]] Trajectory trajectory(double timestep = kStepSeconds) const {
    std::vector<Vec2> pts;
    std::vector<double> speeds, headings;
    pts.reserve(steps.size());
    for (const StepRecord& r : steps) {
      pts.push_back({r.x, r.y});
      speeds.push_back(r.v);
      headings.push_back(r.theta);
    }
    return Trajectory(std::move(pts), timestep, std::move(speeds), std::move(headings));
  }

  friend bool operator==(const EpisodeLog&, const EpisodeLog&) = default;
};

/// Header block of a log file: `# key=value` lines preceding the records.
using LogHeader = std::map<std::string, std::string>;

inline void write_header(std::ostream& out, const LogHeader& header) {
  for (const auto& [k, v] : header) out << "# " << k << '=' << v << '\n';
}

inline void write_episode(std::ostream& out, const EpisodeLog& ep) {
  using text::format_double;
  for (std::size_t i = 0; i < ep.steps.size(); ++i) {
    const StepRecord& r = ep.steps[i];
    out << ep.scenario_id << ',' << ep.policy_id << ',' << i << ',' << format_double(r.x) << ','
        << format_double(r.y) << ',' << format_double(r.v) << ',' << format_double(r.theta) << ','
        << format_double(r.phi) << ',' << format_double(r.a) << '\n';
  }
  out << ep.scenario_id << ',' << ep.policy_id << ',' << to_string(ep.outcome) << ',' << ep.step_count
      << '\n';
}

struct LogFile {
  LogHeader header;
  std::vector<EpisodeLog> episodes;
};

inline LogFile read_log(std::istream& in) {
  LogFile file;
  EpisodeLog current;
  bool open = false;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view = text::trim(line);
    if (view.empty()) continue;
    if (view.front() == '#') {
      view.remove_prefix(1);
      view = text::trim(view);
      const auto eq = view.find('=');
      if (eq != std::string_view::npos)
        file.header[std::string(text::trim(view.substr(0, eq)))] = std::string(text::trim(view.substr(eq + 1)));
      continue;
    }
    const auto fields = text::split(view, ',');
    if (fields.size() == 9) {
      if (!open) {
        current = EpisodeLog{};
        current.scenario_id = std::string(fields[0]);
        current.policy_id = std::string(fields[1]);
        open = true;
      } else if (current.scenario_id != fields[0] || current.policy_id != fields[1]) {
        throw Error(ErrorCode::kCorrupt, "line " + std::to_string(line_no) + ": episode interleaving");
      }
      if (text::parse_int(fields[2]) != static_cast<std::int64_t>(current.steps.size()))
        throw Error(ErrorCode::kCorrupt, "line " + std::to_string(line_no) + ": step index out of order");
      current.steps.push_back({text::parse_double(fields[3]), text::parse_double(fields[4]),
                               text::parse_double(fields[5]), text::parse_double(fields[6]),
                               text::parse_double(fields[7]), text::parse_double(fields[8])});
    } else if (fields.size() == 4) {
      if (!open) {
        current = EpisodeLog{};
        current.scenario_id = std::string(fields[0]);
        current.policy_id = std::string(fields[1]);
      } else if (current.scenario_id != fields[0] || current.policy_id != fields[1]) {
        throw Error(ErrorCode::kCorrupt, "line " + std::to_string(line_no) + ": summary for another episode");
      }
      current.outcome = parse_outcome(fields[2]);
      current.step_count = text::parse_int(fields[3]);
      file.episodes.push_back(std::move(current));
      current = EpisodeLog{};
      open = false;
    } else {
      throw Error(ErrorCode::kCorrupt, "line " + std::to_string(line_no) + ": unexpected field count");
    }
  }
  if (open) throw Error(ErrorCode::kCorrupt, "log ends inside an episode (missing summary record)");
  return file;
}

inline LogFile read_log_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path);
  return read_log(in);
}

}  // namespace divdrive
