#pragma once
// Machine-readable verification reports: fixed-schema JSON (deterministic
// bytes under a fixed seed) and plot-ready CSV with 12-digit precision.
// Each check carries a `ref` string naming a documented convention anchor
// (see README, Conventions section).

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

namespace bowtn {

struct CheckResult {
  std::string id;
  std::string ref;      // documented convention anchor
  std::string digest;   // reproducible hash of the check inputs
  double residual = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

struct Report {
  std::string suite;
  std::uint64_t seed = 0;
  std::vector<CheckResult> checks;
  bool all_pass() const;
  void add(const std::string& id, const std::string& ref, double residual,
           double tolerance, const std::string& digest = "");
};

// FNV-1a digest of raw input values, hex-encoded (deterministic).
std::string input_digest(const std::vector<double>& vals);

// Fixed schema (schema_version = 1), stable key order, no timestamps:
// identical inputs give identical bytes.
std::string report_json(const Report& rep);
std::string report_json(const std::vector<Report>& reps);

// CSV with header row, stable column order, precision 12.
void write_csv(std::ostream& os, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows);

}  // namespace bowtn
