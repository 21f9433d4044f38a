#pragma once

// CSV writing and the provenance header carried by every output.

#include "ddtune/common.hpp"

#include <nlohmann/json.hpp>

#include <cstdio>
#include <ostream>

namespace ddtune {

/// CSV schema version, bumped when any column set changes.
inline constexpr int kCsvSchema = 1;

/// %.17g: enough digits to round-trip any double.
inline std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string hex64(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

/// Hash of the canonical (sorted-key, compact) dump of a config.
inline std::uint64_t config_hash(const nlohmann::json& config) { return fnv1a64(config.dump()); }

inline std::string header_line(std::uint64_t seed, const nlohmann::json& config) {
  return "# ddtune " + std::string(kVersion) + " schema=" + std::to_string(kCsvSchema) +
         " seed=" + std::to_string(seed) + " config=" + hex64(config_hash(config));
}

inline nlohmann::json header_json(std::uint64_t seed, const nlohmann::json& config) {
  return {{"tool", "ddtune"},
          {"version", kVersion},
          {"schema", kCsvSchema},
          {"seed", seed},
          {"config_hash", hex64(config_hash(config))}};
}

class CsvWriter {
 public:
  explicit CsvWriter(std::ostream& os) : os_(os) {}

  void header(std::uint64_t seed, const nlohmann::json& config) {
    os_ << header_line(seed, config) << '\n';
  }

  void columns(std::initializer_list<std::string_view> names) {
    bool first = true;
    for (auto n : names) {
      if (!first) os_ << ',';
      os_ << n;
      first = false;
    }
    os_ << '\n';
  }

  void columns(const std::vector<std::string>& names) {
    for (std::size_t i = 0; i < names.size(); ++i) os_ << (i ? "," : "") << names[i];
    os_ << '\n';
  }

  CsvWriter& cell(double v) { return put(fmt17(v)); }
  CsvWriter& cell(std::size_t v) { return put(std::to_string(v)); }
  CsvWriter& cell(int v) { return put(std::to_string(v)); }
  CsvWriter& cell(bool v) { return put(v ? "1" : "0"); }
  CsvWriter& cell(std::string_view v) {
    if (v.find_first_of(",\"\n") == std::string_view::npos) return put(std::string(v));
    std::string q = "\"";
    for (char c : v) {
      if (c == '"') q += '"';
      q += c;
    }
    return put(q + "\"");
  }
  CsvWriter& cell(const char* v) { return cell(std::string_view(v)); }

  void end_row() {
    os_ << '\n';
    fresh_ = true;
  }

 private:
  CsvWriter& put(const std::string& s) {
    if (!fresh_) os_ << ',';
    os_ << s;
    fresh_ = false;
    return *this;
  }

  std::ostream& os_;
  bool fresh_ = true;
};

}  // namespace ddtune
