#pragma once

// File formats: schedule JSON, run-config JSON, sweep CSV with a provenance
// comment block, and a dependency-free SVG line chart.

#include "toffoli/experiments.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace toffoli {

inline constexpr const char* kVersion = "0.1.0";

/// Malformed input files or configuration; maps to CLI exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace io {

using nlohmann::json;

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// ---------------------------------------------------------------- schedules

struct ScheduleFile {
  ControlSchedule schedule;
  double u_max = 0.0;
};

/// {"n_pulses": N, "u_max": u, "pulses": [[u1, u2, u3], ...]}; row n drives
/// x for even n and y for odd n (0-based). Amplitudes are written with 17
/// significant digits so a read reproduces them exactly.
inline std::string schedule_to_json(const ControlSchedule& s, double u_max, const json& extra = json::object()) {
  std::ostringstream os;
  os << "{\n  \"n_pulses\": " << s.n_pulses() << ",\n  \"u_max\": " << format_double(u_max)
     << ",\n  \"axes\": \"x,y alternating, starting with x\",\n  \"pulses\": [\n";
  for (std::size_t n = 0; n < s.pulses.size(); ++n) {
    os << "    [" << format_double(s.pulses[n][0]) << ", " << format_double(s.pulses[n][1]) << ", "
       << format_double(s.pulses[n][2]) << "]" << (n + 1 < s.pulses.size() ? "," : "") << "\n";
  }
  os << "  ]";
  for (const auto& [key, value] : extra.items()) os << ",\n  \"" << key << "\": " << value.dump();
  os << "\n}\n";
  return os.str();
}

inline ScheduleFile schedule_from_json(const json& doc) {
  if (!doc.is_object()) throw ConfigError("schedule: document is not a JSON object");
  for (const char* key : {"n_pulses", "u_max", "pulses"}) {
    if (!doc.contains(key)) throw ConfigError(std::string("schedule: missing field '") + key + "'");
  }
  if (!doc["n_pulses"].is_number_integer()) throw ConfigError("schedule: n_pulses must be an integer");
  if (!doc["u_max"].is_number()) throw ConfigError("schedule: u_max must be a number");
  if (!doc["pulses"].is_array()) throw ConfigError("schedule: pulses must be an array");
  const int n_pulses = doc["n_pulses"].get<int>();
  const double u_max = doc["u_max"].get<double>();
  if (n_pulses <= 0 || n_pulses % 2 != 0) {
    throw ConfigError("schedule: n_pulses must be a positive even number, got " + std::to_string(n_pulses));
  }
  if (!(u_max > 0.0)) throw ConfigError("schedule: u_max must be positive");
  const auto& rows = doc["pulses"];
  if (rows.size() != static_cast<std::size_t>(n_pulses)) {
    throw ConfigError("schedule: pulses has " + std::to_string(rows.size()) + " rows, n_pulses is " +
                      std::to_string(n_pulses));
  }
  ScheduleFile out;
  out.u_max = u_max;
  out.schedule.pulses.resize(rows.size());
  for (std::size_t n = 0; n < rows.size(); ++n) {
    const auto& row = rows[n];
    if (!row.is_array() || row.size() != 3) throw ConfigError("schedule: row " + std::to_string(n) + " must hold 3 numbers");
    for (std::size_t i = 0; i < 3; ++i) {
      if (!row[i].is_number()) throw ConfigError("schedule: row " + std::to_string(n) + " has a non-numeric entry");
      out.schedule.pulses[n][i] = row[i].get<double>();
    }
  }
  if (const auto bad = out.schedule.first_violation(u_max)) {
    throw ConfigError("schedule: row " + std::to_string(*bad) + " violates |u| <= u_max = " + format_double(u_max));
  }
  return out;
}

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot open '" + path + "' for writing");
  f << text;
  if (!f) throw ConfigError("failed writing '" + path + "'");
}

inline std::string read_text(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot open '" + path + "'");
  std::ostringstream os;
  os << f.rdbuf();
  return os.str();
}

inline void write_schedule(const std::string& path, const ControlSchedule& s, double u_max,
                           const json& extra = json::object()) {
  write_text(path, schedule_to_json(s, u_max, extra));
}

inline ScheduleFile read_schedule(const std::string& path) {
  json doc;
  try {
    doc = json::parse(read_text(path));
  } catch (const json::parse_error& e) {
    throw ConfigError("schedule '" + path + "': " + e.what());
  }
  return schedule_from_json(doc);
}

inline json report_to_json(const OptimizationReport& r) {
  return json{{"objective", to_string(r.kind)},
              {"best_objective", r.best_objective},
              {"best_fidelity_at_nominal", r.best_fidelity_at_nominal},
              {"n_starts", r.n_starts},
              {"best_start", r.best_start},
              {"start_objectives", r.start_objectives},
              {"seed", r.seed}};
}

// ---------------------------------------------------------------- run config

/// Everything a CLI run needs. JSON layout:
/// {
///   "system": {"couplings": {"j12": 1, "j13": 0.1667, "j23": 1} | {"x": [..], "y": [..]},
///              "gate_time": 4.18, "n_pulses": 20, "u_max": 4.3333},
///   "noise": {"n_sources": 1},
///   "weighted": {"delta_j": .., "delta1": .., "delta2": .., "grid_points": ..},
///   "smoothed": {"delta_j": .., "alpha": .., "beta": .., "grid_points": ..},
///   "seed": 7, "threads": 0, "paper_scale": false, "output_dir": "out",
///   "jbar_mhz": 30
/// }
/// All keys are optional except that a seed must come from here or the command line.
struct RunConfig {
  SystemConfig system;
  int n_sources = 1;
  RobustObjectiveSpec weighted = RobustObjectiveSpec::weighted_default();
  RobustObjectiveSpec smoothed = RobustObjectiveSpec::smoothed_default();
  std::optional<std::uint64_t> seed;
  unsigned threads = 0;
  bool paper_scale = false;
  std::string output_dir;
  double jbar_mhz = 30.0;
};

namespace detail {

template <typename T>
void read_opt(const json& j, const char* key, T& dst) {
  if (!j.contains(key)) return;
  try {
    dst = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: field '") + key + "': " + e.what());
  }
}

inline void read_robust(const json& j, RobustObjectiveSpec& r) {
  read_opt(j, "delta_j", r.delta_j);
  read_opt(j, "delta1", r.delta1);
  read_opt(j, "delta2", r.delta2);
  read_opt(j, "alpha", r.alpha);
  read_opt(j, "beta", r.beta);
  read_opt(j, "grid_points", r.grid_points);
  try {
    r.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

}  // namespace detail

inline RunConfig run_config_from_json(const json& doc) {
  if (!doc.is_object()) throw ConfigError("config: document is not a JSON object");
  static const char* known[] = {"system", "noise", "weighted", "smoothed", "seed", "threads", "paper_scale", "output_dir", "jbar_mhz"};
  for (const auto& [key, _] : doc.items()) {
    if (std::find_if(std::begin(known), std::end(known), [&](const char* k) { return key == k; }) == std::end(known)) {
      throw ConfigError("config: unknown field '" + key + "'");
    }
  }
  RunConfig rc;
  if (doc.contains("system")) {
    const json& s = doc["system"];
    detail::read_opt(s, "gate_time", rc.system.gate_time);
    detail::read_opt(s, "n_pulses", rc.system.n_pulses);
    detail::read_opt(s, "u_max", rc.system.u_max);
    if (s.contains("couplings")) {
      const json& c = s["couplings"];
      if (c.contains("x") || c.contains("y")) {
        std::array<double, 3> x = rc.system.couplings.x, y = rc.system.couplings.y;
        detail::read_opt(c, "x", x);
        detail::read_opt(c, "y", y);
        rc.system.couplings = Couplings::anisotropic(x, y);
      } else {
        double j12 = 1.0, j13 = 1.0 / 6.0, j23 = 1.0;
        detail::read_opt(c, "j12", j12);
        detail::read_opt(c, "j13", j13);
        detail::read_opt(c, "j23", j23);
        rc.system.couplings = Couplings::isotropic(j12, j13, j23);
      }
    }
  }
  if (doc.contains("noise")) detail::read_opt(doc["noise"], "n_sources", rc.n_sources);
  if (rc.n_sources != 1 && rc.n_sources != 3 && rc.n_sources != 6) throw ConfigError("config: n_sources must be 1, 3 or 6");
  if (doc.contains("weighted")) detail::read_robust(doc["weighted"], rc.weighted);
  if (doc.contains("smoothed")) detail::read_robust(doc["smoothed"], rc.smoothed);
  if (doc.contains("seed")) {
    std::uint64_t seed = 0;
    detail::read_opt(doc, "seed", seed);
    rc.seed = seed;
  }
  detail::read_opt(doc, "threads", rc.threads);
  detail::read_opt(doc, "paper_scale", rc.paper_scale);
  detail::read_opt(doc, "output_dir", rc.output_dir);
  detail::read_opt(doc, "jbar_mhz", rc.jbar_mhz);
  try {
    rc.system.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return rc;
}

inline json run_config_to_json(const RunConfig& rc) {
  json sys{{"gate_time", rc.system.gate_time}, {"n_pulses", rc.system.n_pulses}, {"u_max", rc.system.u_max}};
  if (rc.system.couplings.is_isotropic()) {
    sys["couplings"] = {{"j12", rc.system.couplings.j12()}, {"j13", rc.system.couplings.j13()}, {"j23", rc.system.couplings.j23()}};
  } else {
    sys["couplings"] = {{"x", rc.system.couplings.x}, {"y", rc.system.couplings.y}};
  }
  const auto robust = [](const RobustObjectiveSpec& r) {
    return json{{"delta_j", r.delta_j}, {"delta1", r.delta1}, {"delta2", r.delta2},
                {"alpha", r.alpha},     {"beta", r.beta},     {"grid_points", r.grid_points}};
  };
  json doc{{"system", sys},
           {"noise", {{"n_sources", rc.n_sources}}},
           {"weighted", robust(rc.weighted)},
           {"smoothed", robust(rc.smoothed)},
           {"threads", rc.threads},
           {"paper_scale", rc.paper_scale},
           {"jbar_mhz", rc.jbar_mhz}};
  if (rc.seed) doc["seed"] = *rc.seed;
  if (!rc.output_dir.empty()) doc["output_dir"] = rc.output_dir;
  return doc;
}

inline RunConfig read_run_config(const std::string& path) {
  try {
    return run_config_from_json(json::parse(read_text(path)));
  } catch (const json::parse_error& e) {
    throw ConfigError("config '" + path + "': " + e.what());
  }
}

// ---------------------------------------------------------------- CSV

/// 64-bit FNV-1a, used to fingerprint configurations in CSV headers.
inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

/// Comment lines written at the top of every CSV.
struct Provenance {
  std::string command;
  json config = json::object();
  std::uint64_t seed = 0;
  std::size_t n_realizations = 0;
  std::string schedule_id;

  std::string block() const {
    const std::string cfg = config.dump();
    std::ostringstream os;
    os << "# toffoli_control " << kVersion << "\n";
    os << "# command: " << command << "\n";
    os << "# config_hash: " << hex64(fnv1a(cfg)) << "\n";
    os << "# config: " << cfg << "\n";
    os << "# seed: " << seed << "\n";
    if (n_realizations != 0) os << "# n_realizations: " << n_realizations << "\n";
    if (!schedule_id.empty()) os << "# schedule: " << schedule_id << "\n";
    return os.str();
  }
};

inline std::string dynamic_sweep_csv(const std::vector<SweepResult>& sweeps, const Provenance& prov) {
  std::ostringstream os;
  os << prov.block() << "tgfc,sigma,mean_fidelity,std_error,n\n";
  for (const auto& r : sweeps) {
    const double tgfc = sweep_tgfc(r);
    for (const auto& p : r.points) {
      os << format_double(tgfc) << ',' << format_double(p.abscissa) << ',' << format_double(p.stats.mean) << ','
         << format_double(p.stats.std_error) << ',' << p.stats.n_realizations << '\n';
    }
  }
  return os.str();
}

inline std::string static_sweep_csv(const SweepResult& r, const Provenance& prov) {
  std::ostringstream os;
  os << prov.block() << "delta,mean_fidelity,std_error,n\n";
  for (const auto& p : r.points) {
    os << format_double(p.abscissa) << ',' << format_double(p.stats.mean) << ',' << format_double(p.stats.std_error)
       << ',' << p.stats.n_realizations << '\n';
  }
  return os.str();
}

inline std::string curve_csv(const std::vector<std::pair<double, double>>& curve, const Provenance& prov) {
  std::ostringstream os;
  os << prov.block() << "j_over_jbar,fidelity\n";
  for (const auto& [j, f] : curve) os << format_double(j) << ',' << format_double(f) << '\n';
  return os.str();
}

inline std::string convergence_csv(const ConvergenceTable& t, const Provenance& prov) {
  std::ostringstream os;
  os << prov.block() << "# slope: " << format_double(t.slope) << "\n" << "n_steps,median_distance,p90_distance\n";
  for (const auto& p : t.points) os << p.n_steps << ',' << format_double(p.median) << ',' << format_double(p.p90) << '\n';
  return os.str();
}

/// Header plus numeric rows; '#' lines are skipped.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  std::size_t column(const std::string& name) const {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw ConfigError("csv: no column '" + name + "'");
    return static_cast<std::size_t>(it - header.begin());
  }
};

inline std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, sep)) out.push_back(cell);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

inline CsvTable parse_csv(const std::string& text) {
  CsvTable t;
  std::istringstream is(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    auto cells = split(line, ',');
    if (t.header.empty()) {
      t.header = std::move(cells);
      continue;
    }
    if (cells.size() != t.header.size()) throw ConfigError("csv: line " + std::to_string(line_no) + " has wrong column count");
    std::vector<double> row;
    for (const auto& c : cells) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(c, &used));
        if (used != c.size()) throw std::invalid_argument(c);
      } catch (const std::exception&) {
        throw ConfigError("csv: line " + std::to_string(line_no) + " has a non-numeric cell '" + c + "'");
      }
    }
    t.rows.push_back(std::move(row));
  }
  if (t.header.empty()) throw ConfigError("csv: no header line");
  return t;
}

// ---------------------------------------------------------------- SVG

struct PlotSpec {
  std::string x_column;
  std::string y_column;
  std::string group_column;  // empty: single series
  std::string title;
};

/// Picks columns from a known header: dynamic sweeps group by tgfc.
inline PlotSpec default_plot_spec(const CsvTable& t) {
  PlotSpec p;
  if (t.header.size() < 2) throw ConfigError("plot: need at least two columns");
  if (t.header[0] == "tgfc" && t.header.size() >= 3) {
    p.group_column = "tgfc";
    p.x_column = t.header[1];
    p.y_column = t.header[2];
  } else {
    p.x_column = t.header[0];
    p.y_column = t.header[1];
  }
  return p;
}

namespace detail {

inline std::string fixed(double v, int digits = 3) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

inline std::string tick_label(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

inline double nice_step(double span, int target) {
  const double raw = span / target;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  const double norm = raw / mag;
  const double nice = norm < 1.5 ? 1.0 : norm < 3.0 ? 2.0 : norm < 7.0 ? 5.0 : 10.0;
  return nice * mag;
}

inline std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace detail

/// Line chart of y against x, one polyline per group, one vertex per row.
/// Output depends only on the table and spec.
inline std::string render_svg(const CsvTable& t, const PlotSpec& spec) {
  const std::size_t xc = t.column(spec.x_column);
  const std::size_t yc = t.column(spec.y_column);
  const bool grouped = !spec.group_column.empty();
  const std::size_t gc = grouped ? t.column(spec.group_column) : 0;
  if (t.rows.empty()) throw ConfigError("plot: csv has no data rows");

  std::vector<double> group_keys;
  std::map<double, std::vector<std::pair<double, double>>> series;
  for (const auto& row : t.rows) {
    const double key = grouped ? row[gc] : 0.0;
    if (!series.count(key)) group_keys.push_back(key);
    series[key].emplace_back(row[xc], row[yc]);
  }

  double xmin = t.rows[0][xc], xmax = xmin, ymin = t.rows[0][yc], ymax = ymin;
  for (const auto& row : t.rows) {
    xmin = std::min(xmin, row[xc]);
    xmax = std::max(xmax, row[xc]);
    ymin = std::min(ymin, row[yc]);
    ymax = std::max(ymax, row[yc]);
  }
  if (xmax == xmin) {
    xmin -= 0.5;
    xmax += 0.5;
  }
  if (ymax == ymin) {
    ymin -= 0.5;
    ymax += 0.5;
  }
  const double ypad = 0.05 * (ymax - ymin);
  ymin -= ypad;
  ymax += ypad;

  const double width = 720, height = 480, left = 80, right = grouped ? 130 : 30, top = 40, bottom = 60;
  const double pw = width - left - right, ph = height - top - bottom;
  const auto px = [&](double x) { return left + (x - xmin) / (xmax - xmin) * pw; };
  const auto py = [&](double y) { return top + (ymax - y) / (ymax - ymin) * ph; };
  static const char* palette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                                  "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

  std::ostringstream os;
  os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
     << "\" viewBox=\"0 0 " << width << ' ' << height << "\">\n";
  os << "<rect x=\"0\" y=\"0\" width=\"" << width << "\" height=\"" << height << "\" fill=\"white\"/>\n";
  if (!spec.title.empty()) {
    os << "<text x=\"" << width / 2 << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"16\">"
       << detail::xml_escape(spec.title) << "</text>\n";
  }
  os << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << pw << "\" height=\"" << ph
     << "\" fill=\"none\" stroke=\"black\"/>\n";

  const auto ticks = [](double lo, double hi) {
    const double step = detail::nice_step(hi - lo, 6);
    std::vector<double> v;
    for (double x = std::ceil(lo / step) * step; x <= hi + 1e-9 * step; x += step) v.push_back(std::abs(x) < 1e-12 * step ? 0.0 : x);
    return v;
  };
  for (double x : ticks(xmin, xmax)) {
    os << "<line x1=\"" << detail::fixed(px(x)) << "\" y1=\"" << top + ph << "\" x2=\"" << detail::fixed(px(x)) << "\" y2=\""
       << top + ph + 5 << "\" stroke=\"black\"/>\n";
    os << "<text x=\"" << detail::fixed(px(x)) << "\" y=\"" << top + ph + 20
       << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" << detail::tick_label(x) << "</text>\n";
  }
  for (double y : ticks(ymin, ymax)) {
    os << "<line x1=\"" << left - 5 << "\" y1=\"" << detail::fixed(py(y)) << "\" x2=\"" << left << "\" y2=\""
       << detail::fixed(py(y)) << "\" stroke=\"black\"/>\n";
    os << "<text x=\"" << left - 8 << "\" y=\"" << detail::fixed(py(y) + 4)
       << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"12\">" << detail::tick_label(y) << "</text>\n";
  }
  os << "<text x=\"" << left + pw / 2 << "\" y=\"" << height - 15
     << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\">" << detail::xml_escape(spec.x_column)
     << "</text>\n";
  os << "<text x=\"20\" y=\"" << top + ph / 2 << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\" "
     << "transform=\"rotate(-90 20 " << top + ph / 2 << ")\">" << detail::xml_escape(spec.y_column) << "</text>\n";

  for (std::size_t g = 0; g < group_keys.size(); ++g) {
    const auto& pts = series[group_keys[g]];
    const char* color = palette[g % std::size(palette)];
    os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\"";
    if (grouped) os << " data-group=\"" << detail::tick_label(group_keys[g]) << "\"";
    os << " points=\"";
    for (std::size_t i = 0; i < pts.size(); ++i) {
      os << (i ? " " : "") << detail::fixed(px(pts[i].first)) << ',' << detail::fixed(py(pts[i].second));
    }
    os << "\"/>\n";
    if (grouped) {
      const double ly = top + 15 + 18 * static_cast<double>(g);
      os << "<line x1=\"" << left + pw + 10 << "\" y1=\"" << ly << "\" x2=\"" << left + pw + 30 << "\" y2=\"" << ly
         << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
      os << "<text x=\"" << left + pw + 35 << "\" y=\"" << ly + 4 << "\" font-family=\"sans-serif\" font-size=\"12\">"
         << detail::xml_escape(spec.group_column) << '=' << detail::tick_label(group_keys[g]) << "</text>\n";
    }
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace io
}  // namespace toffoli
