#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "itedist/benchmark.hpp"
#include "itedist/bootstrap.hpp"
#include "itedist/data_model.hpp"

namespace itedist {

inline constexpr const char* kReportSchema = "itedist.report/1";

/// A finished command result. `body` follows schema/report.schema.json.
struct ReportDocument {
  nlohmann::json body;
  std::vector<std::string> warnings;  // mirrored into body["warnings"]
  std::optional<std::string> table;   // prebuilt CSV rendering, if any

  std::string to_json() const;
  /// Long-format table: one row per interval, band point, test or oracle value.
  std::string to_csv() const;
};

/// Non-finite values become null so every emitted number is finite.
nlohmann::json number(double x);

nlohmann::json to_json(const IntervalResult& r);
nlohmann::json to_json(const BandResult& b, const std::string& target);
nlohmann::json to_json(const TestResult& t);
nlohmann::json to_json(const EstimabilityReport& r);
nlohmann::json to_json(const LabelDictionary& labels);
nlohmann::json to_json(const bench::CoverageReport& c);

/// Error document for a failed command.
nlohmann::json error_document(const std::string& command, const std::string& kind,
                              const std::string& message);

}  // namespace itedist
