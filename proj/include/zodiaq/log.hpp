#pragma once

// Time-series log: fixed columns per run, written as CSV with a one-line
// schema header. Numbers use the shortest round-trip representation, so a log
// read back reproduces the logged doubles exactly and reruns are byte-stable.

#include <charconv>
#include <cmath>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <system_error>
#include <vector>

namespace zodiaq {

inline constexpr const char* kLogSchema = "zodiaq-log/1";

class TimeSeriesLog {
 public:
  TimeSeriesLog() = default;
  explicit TimeSeriesLog(std::vector<std::string> columns, std::string config_hash = {})
      : columns_(std::move(columns)), hash_(std::move(config_hash)) {
    if (columns_.empty() || columns_.front() != "t") throw std::invalid_argument("first log column must be t");
  }

  const std::vector<std::string>& columns() const { return columns_; }
  const std::string& config_hash() const { return hash_; }
  std::size_t size() const { return rows_.size(); }
  bool empty() const { return rows_.empty(); }
  const std::vector<double>& row(std::size_t i) const { return rows_.at(i); }

  void append(std::vector<double> r) {
    if (r.size() != columns_.size())
      throw std::invalid_argument("log row has " + std::to_string(r.size()) + " values, schema has " + std::to_string(columns_.size()));
    if (!rows_.empty() && !(r[0] > rows_.back()[0])) throw std::invalid_argument("log time must increase");
    rows_.push_back(std::move(r));
  }

  std::optional<std::size_t> find(const std::string& name) const {
    for (std::size_t i = 0; i < columns_.size(); ++i)
      if (columns_[i] == name) return i;
    return std::nullopt;
  }
  std::size_t index(const std::string& name) const {
    if (auto i = find(name)) return *i;
    throw std::out_of_range("log has no column '" + name + "'");
  }
  std::vector<double> column(const std::string& name) const {
    const std::size_t k = index(name);
    std::vector<double> out;
    out.reserve(rows_.size());
    for (const auto& r : rows_) out.push_back(r[k]);
    return out;
  }
  double at(std::size_t row, const std::string& name) const { return rows_.at(row)[index(name)]; }

  void write_csv(std::ostream& os) const {
    os << "# " << kLogSchema;
    if (!hash_.empty()) os << " config=" << hash_;
    os << '\n';
    for (std::size_t i = 0; i < columns_.size(); ++i) os << (i ? "," : "") << columns_[i];
    os << '\n';
    std::string line;
    for (const auto& r : rows_) {
      line.clear();
      for (std::size_t i = 0; i < r.size(); ++i) {
        if (i) line += ',';
        append_number(line, r[i]);
      }
      line += '\n';
      os << line;
    }
  }

  static TimeSeriesLog read_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line) || line.rfind("# ", 0) != 0) throw std::runtime_error("log: missing schema header");
    std::istringstream head(line.substr(2));
    std::string schema, extra, hash;
    head >> schema;
    if (schema != kLogSchema) throw std::runtime_error("log: unsupported schema '" + schema + "' (expected " + kLogSchema + ")");
    while (head >> extra)
      if (extra.rfind("config=", 0) == 0) hash = extra.substr(7);
    if (!std::getline(is, line)) throw std::runtime_error("log: missing column header");
    TimeSeriesLog log(split(line), hash);
    std::size_t lineno = 2;
    while (std::getline(is, line)) {
      ++lineno;
      if (line.empty()) continue;
      std::vector<double> r;
      for (const std::string& cell : split(line)) r.push_back(parse_number(cell, lineno));
      log.append(std::move(r));
    }
    return log;
  }

  static void append_number(std::string& out, double v) {
    if (std::isnan(v)) {
      out += "nan";
      return;
    }
    if (std::isinf(v)) {
      out += v > 0 ? "inf" : "-inf";
      return;
    }
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    out.append(buf, res.ptr);
  }

 private:
  static std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
  }

  static double parse_number(const std::string& s, std::size_t lineno) {
    if (s == "nan") return std::nan("");
    if (s == "inf") return HUGE_VAL;
    if (s == "-inf") return -HUGE_VAL;
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
      throw std::runtime_error("log line " + std::to_string(lineno) + ": bad number '" + s + "'");
    return v;
  }

  std::vector<std::string> columns_;
  std::string hash_;
  std::vector<std::vector<double>> rows_;
};

}  // namespace zodiaq
