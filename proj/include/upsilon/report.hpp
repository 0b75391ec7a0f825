#pragma once

// Check outcomes and the machine-readable suite report. Reports are canonical
// JSON (nlohmann sorts object keys; doubles print shortest-round-trip) so two
// runs with equal seeds produce byte-identical files.

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "upsilon/version.hpp"

namespace upsilon {

enum class Tier { exact, asymptotic };

// pass/fail applies to exact-tier checks; asymptotic checks report a defect
// only; refused checks carry the reason instead of a number.
enum class CheckStatus { pass, fail, defect_only, refused };

struct DefectReport {
  std::string check_id;
  std::string fixture;
  Tier tier = Tier::exact;
  CheckStatus status = CheckStatus::defect_only;
  double max_defect = 0.0;
  double tolerance = 0.0;
  double tail_bound = 0.0;
  std::string witness;
  std::uint64_t seed = 0;
  std::string notes;

  std::optional<bool> pass() const {
    if (status == CheckStatus::pass) return true;
    if (status == CheckStatus::fail) return false;
    return std::nullopt;
  }

  // exact tier: pass <=> max_defect <= tolerance + tail_bound
  static DefectReport exact(std::string id, std::string fixture, double defect,
                            double tolerance, double tail = 0.0,
                            std::string witness = {}, std::uint64_t seed = 0) {
    DefectReport r;
    r.check_id = std::move(id);
    r.fixture = std::move(fixture);
    r.tier = Tier::exact;
    r.max_defect = defect;
    r.tolerance = tolerance;
    r.tail_bound = tail;
    r.status = defect <= tolerance + tail ? CheckStatus::pass : CheckStatus::fail;
    r.witness = std::move(witness);
    r.seed = seed;
    return r;
  }

  static DefectReport asymptotic(std::string id, std::string fixture, double defect,
                                 std::string witness = {}, std::uint64_t seed = 0) {
    DefectReport r;
    r.check_id = std::move(id);
    r.fixture = std::move(fixture);
    r.tier = Tier::asymptotic;
    r.status = CheckStatus::defect_only;
    r.max_defect = defect;
    r.witness = std::move(witness);
    r.seed = seed;
    return r;
  }

  // negative control: the underlying inequality must fail by at least `margin`
  static DefectReport control(std::string id, std::string fixture, double defect,
                              double margin, std::string witness = {},
                              std::uint64_t seed = 0) {
    DefectReport r;
    r.check_id = std::move(id);
    r.fixture = std::move(fixture);
    r.tier = Tier::exact;
    r.max_defect = defect;
    r.tolerance = margin;
    r.status = defect >= margin ? CheckStatus::pass : CheckStatus::fail;
    r.witness = std::move(witness);
    r.seed = seed;
    r.notes = "negative control: passes when the violated inequality defects by >= tolerance";
    return r;
  }

  static DefectReport refusal(std::string id, std::string fixture, std::string reason) {
    DefectReport r;
    r.check_id = std::move(id);
    r.fixture = std::move(fixture);
    r.status = CheckStatus::refused;
    r.notes = std::move(reason);
    return r;
  }
};

struct ConvergenceStudy {
  std::string study_id;
  std::string parameter;            // refined quantity, e.g. "circle_n"
  std::vector<double> levels;
  std::vector<double> defects;
  double fitted_order = 0.0;        // least-squares slope of -log(defect) vs log(level)
  double order_floor = 0.0;         // 0 means monotone-only
  bool monotone_only = false;
  bool passed = false;
  std::uint64_t seed = 0;
};

inline double fitted_order(const std::vector<double>& levels,
                           const std::vector<double>& defects) {
  if (levels.size() != defects.size() || levels.size() < 2)
    throw std::invalid_argument("fitted_order needs matched levels/defects, >= 2 points");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const int n = static_cast<int>(levels.size());
  for (int i = 0; i < n; ++i) {
    // defects at the rounding floor would make the fit meaningless; clamp
    const double d = std::max(defects[i], 1e-300);
    const double x = std::log(levels[i]);
    const double y = std::log(d);
    sx += x; sy += y; sxx += x * x; sxy += x * y;
  }
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  return -slope;
}

struct SuiteReport {
  nlohmann::json config_echo;
  std::vector<DefectReport> checks;
  std::vector<ConvergenceStudy> studies;
  std::uint64_t seed = 0;
  double wall_clock_ms = 0.0;  // volatile; kept out of the canonical JSON

  void sort() {
    std::sort(checks.begin(), checks.end(), [](const DefectReport& a, const DefectReport& b) {
      return std::tie(a.check_id, a.fixture) < std::tie(b.check_id, b.fixture);
    });
    std::sort(studies.begin(), studies.end(), [](const ConvergenceStudy& a, const ConvergenceStudy& b) {
      return a.study_id < b.study_id;
    });
  }

  bool all_exact_pass() const {
    for (const auto& c : checks)
      if (c.status == CheckStatus::fail) return false;
    return true;
  }
};

inline const char* to_string(Tier t) { return t == Tier::exact ? "exact" : "asymptotic"; }

inline const char* to_string(CheckStatus s) {
  switch (s) {
    case CheckStatus::pass: return "pass";
    case CheckStatus::fail: return "fail";
    case CheckStatus::defect_only: return "defect_only";
    case CheckStatus::refused: return "refused";
  }
  return "?";
}

inline nlohmann::json to_json(const DefectReport& r) {
  nlohmann::json j;
  j["check_id"] = r.check_id;
  j["fixture"] = r.fixture;
  j["tier"] = to_string(r.tier);
  j["status"] = to_string(r.status);
  j["max_defect"] = r.max_defect;
  j["tolerance"] = r.tolerance;
  j["tail_bound"] = r.tail_bound;
  j["witness"] = r.witness;
  if (auto p = r.pass()) j["pass"] = *p; else j["pass"] = nullptr;
  j["seed"] = r.seed;
  j["notes"] = r.notes;
  return j;
}

inline nlohmann::json to_json(const ConvergenceStudy& s) {
  nlohmann::json j;
  j["study_id"] = s.study_id;
  j["parameter"] = s.parameter;
  j["levels"] = s.levels;
  j["defects"] = s.defects;
  j["fitted_order"] = s.fitted_order;
  j["order_floor"] = s.order_floor;
  j["monotone_only"] = s.monotone_only;
  j["pass"] = s.passed;
  j["seed"] = s.seed;
  return j;
}

inline nlohmann::json to_json(const SuiteReport& r) {
  nlohmann::json j;
  j["schema"] = kReportSchema;
  j["version"] = kVersion;
  j["seed"] = r.seed;
  j["config"] = r.config_echo;
  nlohmann::json checks = nlohmann::json::array();
  for (const auto& c : r.checks) checks.push_back(to_json(c));
  j["checks"] = checks;
  nlohmann::json studies = nlohmann::json::array();
  for (const auto& s : r.studies) studies.push_back(to_json(s));
  j["studies"] = studies;
  return j;
}

// Atomic write: stage to <path>.tmp, then rename over the target.
inline void emit_report(const nlohmann::json& report, const std::string& path) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open for writing: " + tmp);
    out << report.dump(2) << "\n";
    if (!out) throw std::runtime_error("write failed: " + tmp);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0)
    throw std::runtime_error("cannot move report into place: " + path);
}

}  // namespace upsilon
