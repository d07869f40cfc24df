#include "bowtn/report.hpp"

#include <cstdio>
#include <cstring>
#include <iomanip>

#include "json.hpp"

namespace bowtn {

bool Report::all_pass() const {
  for (const auto& c : checks)
    if (!c.pass) return false;
  return true;
}

void Report::add(const std::string& id, const std::string& ref,
                 double residual, double tolerance,
                 const std::string& digest) {
  CheckResult c;
  c.id = id;
  c.ref = ref;
  c.digest = digest;
  c.residual = residual;
  c.tolerance = tolerance;
  c.pass = residual < tolerance;
  checks.push_back(c);
}

std::string input_digest(const std::vector<double>& vals) {
  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&](unsigned char b) {
    h ^= b;
    h *= 1099511628211ull;
  };
  for (double v : vals) {
    unsigned char buf[sizeof(double)];
    std::memcpy(buf, &v, sizeof(double));
    for (unsigned char b : buf) mix(b);
  }
  char out[17];
  std::snprintf(out, sizeof(out), "%016llx",
                static_cast<unsigned long long>(h));
  return out;
}

namespace {

nlohmann::ordered_json check_json(const CheckResult& c) {
  nlohmann::ordered_json j;
  j["id"] = c.id;
  j["ref"] = c.ref;
  j["digest"] = c.digest;
  j["residual"] = c.residual;
  j["tolerance"] = c.tolerance;
  j["pass"] = c.pass;
  return j;
}

nlohmann::ordered_json rep_json(const Report& r) {
  nlohmann::ordered_json j;
  j["suite"] = r.suite;
  j["seed"] = r.seed;
  j["all_pass"] = r.all_pass();
  j["checks"] = nlohmann::ordered_json::array();
  for (const auto& c : r.checks) j["checks"].push_back(check_json(c));
  return j;
}

}  // namespace

std::string report_json(const Report& rep) {
  nlohmann::ordered_json j;
  j["schema_version"] = 1;
  j["report"] = rep_json(rep);
  return j.dump(2) + "\n";
}

std::string report_json(const std::vector<Report>& reps) {
  nlohmann::ordered_json j;
  j["schema_version"] = 1;
  j["reports"] = nlohmann::ordered_json::array();
  for (const auto& r : reps) j["reports"].push_back(rep_json(r));
  return j.dump(2) + "\n";
}

void write_csv(std::ostream& os, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows) {
  for (std::size_t i = 0; i < header.size(); ++i)
    os << (i ? "," : "") << header[i];
  os << "\n";
  os << std::setprecision(12);
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i)
      os << (i ? "," : "") << row[i];
    os << "\n";
  }
}

}  // namespace bowtn
