#pragma once

// Flat key-value experiment configs: one `key = value` per line, `#`
// comments, vectors as comma lists, matrices as `;`-separated rows,
// rationals as "p/q" strings. Emission is canonical (sorted keys), so
// emit -> parse round-trips exactly.

#include <cstdint>
#include <cstdio>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "errors.hpp"
#include "linalg.hpp"

namespace intlab {

class ExperimentConfig {
public:
  ExperimentConfig() = default;

  static ExperimentConfig parse(const std::string& text) {
    ExperimentConfig cfg;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      const std::string trimmed = trim(line);
      if (trimmed.empty()) continue;
      const auto eq = trimmed.find('=');
      if (eq == std::string::npos)
        throw ConfigError("expected 'key = value'", lineno);
      const std::string key = trim(trimmed.substr(0, eq));
      const std::string value = trim(trimmed.substr(eq + 1));
      if (key.empty()) throw ConfigError("empty key", lineno);
      if (cfg.kv_.count(key)) throw ConfigError("duplicate key '" + key + "'", lineno);
      cfg.kv_[key] = value;
    }
    return cfg;
  }

  /// Canonical emission: sorted keys, one per line.
  std::string emit() const {
    std::string out;
    for (const auto& [k, v] : kv_) out += k + " = " + v + "\n";
    return out;
  }

  /// FNV-1a of the canonical emission; stable run identifier.
  std::string hash() const {
    std::uint64_t h = 1469598103934665603ull;
    for (char c : emit()) {
      h ^= static_cast<unsigned char>(c);
      h *= 1099511628211ull;
    }
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
  }

  bool has(const std::string& key) const { return kv_.count(key) > 0; }

  void set(const std::string& key, const std::string& value) { kv_[key] = value; }

  std::string get_string(const std::string& key) const {
    const auto it = kv_.find(key);
    if (it == kv_.end()) throw ConfigError("missing key '" + key + "'");
    return it->second;
  }
  std::string get_string(const std::string& key, const std::string& dflt) const {
    const auto it = kv_.find(key);
    return it == kv_.end() ? dflt : it->second;
  }

  double get_double(const std::string& key) const {
    return parse_double(key, get_string(key));
  }
  double get_double(const std::string& key, double dflt) const {
    return has(key) ? get_double(key) : dflt;
  }

  long long get_int(const std::string& key) const {
    try {
      std::size_t pos = 0;
      const std::string s = get_string(key);
      const long long v = std::stoll(s, &pos);
      if (pos != s.size()) throw std::invalid_argument(s);
      return v;
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception&) {
      throw ConfigError("key '" + key + "' is not an integer");
    }
  }
  long long get_int(const std::string& key, long long dflt) const {
    return has(key) ? get_int(key) : dflt;
  }

  Vec get_vector(const std::string& key) const {
    Vec v;
    for (const auto& tok : split(get_string(key), ','))
      v.push_back(parse_double(key, trim(tok)));
    return v;
  }

  /// Rows separated by ';', entries by ','.
  Matrix get_matrix(const std::string& key) const {
    const auto rows = split(get_string(key), ';');
    std::vector<Vec> data;
    for (const auto& row : rows) {
      Vec r;
      for (const auto& tok : split(row, ',')) r.push_back(parse_double(key, trim(tok)));
      data.push_back(std::move(r));
    }
    Matrix m(data.size(), data.empty() ? 0 : data.front().size());
    for (std::size_t i = 0; i < data.size(); ++i) {
      if (data[i].size() != m.cols())
        throw ConfigError("ragged matrix for key '" + key + "'");
      for (std::size_t j = 0; j < m.cols(); ++j) m(i, j) = data[i][j];
    }
    return m;
  }

  const std::map<std::string, std::string>& entries() const { return kv_; }

  bool operator==(const ExperimentConfig& o) const { return kv_ == o.kv_; }

private:
  static std::string trim(const std::string& s) {
    const auto from = s.find_first_not_of(" \t\r\n");
    if (from == std::string::npos) return "";
    const auto to = s.find_last_not_of(" \t\r\n");
    return s.substr(from, to - from + 1);
  }
  static std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
      if (c == sep) {
        out.push_back(cur);
        cur.clear();
      } else {
        cur += c;
      }
    }
    out.push_back(cur);
    return out;
  }
  static double parse_double(const std::string& key, const std::string& s) {
    try {
      std::size_t pos = 0;
      const double v = std::stod(s, &pos);
      if (pos != s.size()) throw std::invalid_argument(s);
      return v;
    } catch (const std::exception&) {
      throw ConfigError("key '" + key + "': cannot parse number '" + s + "'");
    }
  }

  std::map<std::string, std::string> kv_;
};

} // namespace intlab
