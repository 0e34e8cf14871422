#include "itedist/report.hpp"

#include <charconv>
#include <cmath>
#include <sstream>

namespace itedist {

nlohmann::json number(double x) {
  if (!std::isfinite(x)) return nullptr;
  return x;
}

nlohmann::json to_json(const IntervalResult& r) {
  return {{"target", to_string(r.target)},
          {"at", number(r.at)},
          {"estimate", number(r.estimate)},
          {"lower", number(r.lower)},
          {"upper", number(r.upper)},
          {"alpha", r.alpha},
          {"replications", r.replications},
          {"redraws", r.redraws}};
}

nlohmann::json to_json(const BandResult& b, const std::string& target) {
  nlohmann::json lower = nlohmann::json::array();
  nlohmann::json upper = nlohmann::json::array();
  for (std::size_t k = 0; k < b.center.size(); ++k) {
    lower.push_back(number(b.lower(k)));
    upper.push_back(number(b.upper(k)));
  }
  return {{"target", target},
          {"kind", to_string(b.kind)},
          {"alpha", b.alpha},
          {"grid_kind", b.grid.kind == GridKind::kLevels ? "levels" : "values"},
          {"grid", b.grid.points},
          {"center", b.center},
          {"half_width", b.half_width},
          {"lower", lower},
          {"upper", upper},
          {"critical_value", number(b.critical_value)},
          {"average_width", number(b.kind == BandKind::kOneSidedLower ? NAN : b.average_width())},
          {"replications", b.replications},
          {"redraws", b.redraws},
          {"floored_points", b.floored_points}};
}

nlohmann::json to_json(const TestResult& t) {
  return {{"hypothesis", to_string(t.hypothesis)},
          {"statistic", number(t.statistic)},
          {"critical_value", number(t.critical_value)},
          {"reject", t.reject},
          {"alpha", t.alpha}};
}

nlohmann::json to_json(const EstimabilityReport& r) {
  nlohmann::json cells = nlohmann::json::array();
  for (const auto& c : r.cells) {
    cells.push_back({{"cell", c.cell},
                     {"n", c.n},
                     {"n_z0", c.n_z0},
                     {"n_z1", c.n_z1},
                     {"n_d0", c.n_d0},
                     {"n_d1", c.n_d1},
                     {"first_stage", number(c.first_stage)},
                     {"flags", c.flags},
                     {"blocking", c.blocking}});
  }
  return cells;
}

nlohmann::json to_json(const LabelDictionary& labels) {
  nlohmann::json out = nlohmann::json::object();
  for (const auto& [column, dict] : labels) {
    nlohmann::json codes = nlohmann::json::object();
    for (const auto& [label, code] : dict) codes[label] = code;
    out[column] = codes;
  }
  return out;
}

nlohmann::json to_json(const bench::CoverageReport& c) {
  return {{"target", c.target},
          {"at", c.at},
          {"range", {c.range_lower, c.range_upper}},
          {"method", bench::to_string(c.method)},
          {"nominal", c.nominal},
          {"coverage", c.coverage},
          {"mean_length", c.mean_length},
          {"mc_standard_error", c.mc_standard_error},
          {"reps", c.reps},
          {"failures", c.failures},
          {"B", c.B},
          {"n", c.n},
          {"redraws", c.redraws}};
}

nlohmann::json error_document(const std::string& command, const std::string& kind,
                              const std::string& message) {
  return {{"schema", kReportSchema},
          {"command", command},
          {"status", "error"},
          {"error", {{"kind", kind}, {"message", message}}}};
}

std::string ReportDocument::to_json() const { return body.dump(2) + "\n"; }

namespace {

std::string cell(const nlohmann::json& v) {
  if (v.is_null()) return "";
  if (v.is_number_float()) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v.get<double>());
    return std::string(buf, end);
  }
  if (v.is_string()) return v.get<std::string>();
  return v.dump();
}

}  // namespace

std::string ReportDocument::to_csv() const {
  if (table) return *table;
  std::ostringstream out;
  out << "section,target,kind,at,estimate,lower,upper,critical_value,reject\n";
  auto row = [&](const std::string& section, const nlohmann::json& target, const std::string& kind,
                 const nlohmann::json& at, const nlohmann::json& estimate,
                 const nlohmann::json& lower, const nlohmann::json& upper,
                 const nlohmann::json& critical, const nlohmann::json& reject) {
    out << section << ',' << cell(target) << ',' << kind << ',' << cell(at) << ',' << cell(estimate)
        << ',' << cell(lower) << ',' << cell(upper) << ',' << cell(critical) << ','
        << cell(reject) << '\n';
  };
  if (body.contains("intervals")) {
    for (const auto& r : body["intervals"]) {
      row("interval", r["target"], "percentile", r["at"], r["estimate"], r["lower"], r["upper"],
          nullptr, nullptr);
    }
  }
  if (body.contains("bands")) {
    for (const auto& b : body["bands"]) {
      const std::string kind = b["kind"].get<std::string>();
      for (std::size_t k = 0; k < b["grid"].size(); ++k) {
        row("band", b["target"], kind, b["grid"][k], b["center"][k], b["lower"][k], b["upper"][k],
            b["critical_value"], nullptr);
      }
    }
  }
  if (body.contains("tests")) {
    for (const auto& t : body["tests"]) {
      row("test", t["hypothesis"], "sup", nullptr, t["statistic"], nullptr, nullptr,
          t["critical_value"], t["reject"]);
    }
  }
  if (body.contains("oracle")) {
    for (const auto& q : body["oracle"]) {
      for (const auto& [name, value] : q["values"].items()) {
        row("oracle", q["query"], name, q["at"], value, nullptr, nullptr, nullptr, nullptr);
      }
    }
  }
  return out.str();
}

}  // namespace itedist
