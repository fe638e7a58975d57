#pragma once

// Invariant-drift reports: per-invariant rows with thresholds plus run
// metadata, renderable as CSV, JSON (schema 1) or text, with a JSON parser
// for round-trips.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <string>
#include <vector>

#include "errors.hpp"
#include "json.hpp"

namespace intlab {

/// Every drift value in the library is normalized as
/// |v(t) - v(0)| / (1 + |v(0)|): absolute for O(1) invariants, relative for
/// large ones.
struct DriftRow {
  std::string name;
  double initial = 0.0;
  double max_drift = 0.0;
  double threshold = 0.0;
  bool pass() const { return max_drift <= threshold; }
};

struct DriftReport {
  std::string experiment;
  std::vector<DriftRow> rows;
  std::string config_hash;
  std::uint64_t steps = 0;
  double wall_ms = 0.0;

  bool pass() const {
    return std::all_of(rows.begin(), rows.end(),
                       [](const DriftRow& r) { return r.pass(); });
  }
  DriftRow& add(const std::string& name, double initial, double threshold) {
    rows.push_back({name, initial, 0.0, threshold});
    return rows.back();
  }
};

/// Tracks running extremes of named scalar time series against their initial
/// values; produces normalized DriftRows.
class DriftTracker {
public:
  void observe(const std::string& name, double value) {
    auto it = series_.find(name);
    if (it == series_.end()) {
      series_.emplace(name, Entry{value, 0.0});
      order_.push_back(name);
    } else {
      it->second.max_drift =
          std::max(it->second.max_drift, std::abs(value - it->second.initial));
    }
  }
  /// Registers the maximum of an already-normalized defect series.
  void observe_defect(const std::string& name, double defect) {
    auto it = series_.find(name);
    if (it == series_.end()) {
      series_.emplace(name, Entry{0.0, defect});
      order_.push_back(name);
    } else {
      it->second.max_drift = std::max(it->second.max_drift, defect);
    }
  }
  void append_rows(DriftReport& report, double threshold) const {
    for (const auto& name : order_) {
      const Entry& e = series_.at(name);
      report.rows.push_back({name, e.initial,
                             e.max_drift / (1.0 + std::abs(e.initial)),
                             threshold});
    }
  }
  double normalized(const std::string& name) const {
    const Entry& e = series_.at(name);
    return e.max_drift / (1.0 + std::abs(e.initial));
  }
  double max_normalized() const {
    double worst = 0.0;
    for (const auto& [k, e] : series_)
      worst = std::max(worst, e.max_drift / (1.0 + std::abs(e.initial)));
    return worst;
  }

private:
  struct Entry {
    double initial;
    double max_drift;
  };
  std::map<std::string, Entry> series_;
  std::vector<std::string> order_;
};

// -- rendering --------------------------------------------------------------

/// 17 significant digits: round-trips doubles exactly, keeps outputs
/// byte-identical across runs.
inline std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::string render_csv(const DriftReport& r) {
  std::string out = "name,initial,max_drift,threshold,pass\n";
  for (const auto& row : r.rows) {
    out += row.name + ',' + format_double(row.initial) + ',' +
           format_double(row.max_drift) + ',' + format_double(row.threshold) +
           ',' + (row.pass() ? "true" : "false") + '\n';
  }
  return out;
}

inline std::string render_text(const DriftReport& r) {
  std::string out;
  for (const auto& row : r.rows) {
    out += row.name + ": initial=" + format_double(row.initial) +
           " max_drift=" + format_double(row.max_drift) +
           " threshold=" + format_double(row.threshold) + ' ' +
           (row.pass() ? "PASS" : "FAIL") + '\n';
  }
  out += r.experiment + ": " + (r.pass() ? "PASS" : "FAIL") + '\n';
  return out;
}

inline nlohmann::ordered_json report_to_json(const DriftReport& r) {
  nlohmann::ordered_json j;
  j["schema"] = 1;
  j["experiment"] = r.experiment;
  j["pass"] = r.pass();
  j["rows"] = nlohmann::ordered_json::array();
  for (const auto& row : r.rows) {
    nlohmann::ordered_json jr;
    jr["name"] = row.name;
    jr["initial"] = format_double(row.initial);
    jr["max_drift"] = format_double(row.max_drift);
    jr["threshold"] = format_double(row.threshold);
    jr["pass"] = row.pass();
    j["rows"].push_back(jr);
  }
  j["meta"] = {{"config_hash", r.config_hash},
               {"steps", r.steps},
               {"wall_ms", r.wall_ms}};
  return j;
}

inline std::string render_json(const DriftReport& r) {
  return report_to_json(r).dump(2) + "\n";
}

inline std::string render_report(const DriftReport& r, const std::string& format) {
  if (format == "csv") return render_csv(r);
  if (format == "json") return render_json(r);
  if (format == "text") return render_text(r);
  throw Error("unknown report format: " + format);
}

inline DriftReport parse_report_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  if (!j.contains("schema") || j["schema"].get<int>() != 1)
    throw Error("report: unsupported schema");
  DriftReport r;
  r.experiment = j["experiment"].get<std::string>();
  for (const auto& jr : j["rows"]) {
    DriftRow row;
    row.name = jr["name"].get<std::string>();
    row.initial = std::stod(jr["initial"].get<std::string>());
    row.max_drift = std::stod(jr["max_drift"].get<std::string>());
    row.threshold = std::stod(jr["threshold"].get<std::string>());
    r.rows.push_back(row);
  }
  r.config_hash = j["meta"]["config_hash"].get<std::string>();
  r.steps = j["meta"]["steps"].get<std::uint64_t>();
  r.wall_ms = j["meta"]["wall_ms"].get<double>();
  return r;
}

} // namespace intlab
