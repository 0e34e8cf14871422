#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "itedist/data_model.hpp"
#include "itedist/report.hpp"

namespace itedist::cli {

/// Flag name (without dashes) to raw value. Config files, reproducibility
/// blocks and parsed command lines all reduce to this form.
using Settings = std::map<std::string, std::string>;

using Range = std::pair<double, double>;

struct RunConfig {
  std::string command;  // analyze | compare | simulate | oracle

  std::string input;
  ColumnMap columns;
  std::string group = "all";
  std::string group0;
  std::string group1;

  double alpha = 0.05;
  std::size_t bootstrap = 500;
  std::uint64_t seed = 0;
  std::size_t max_redraws = 100;
  std::size_t min_per_group = kDefaultMinPerGroup;

  Range tau_range{0.1, 0.9};
  std::optional<Range> v_range;
  std::size_t grid_size = 161;
  std::optional<double> step;  // grid spacing; overrides grid_size when set

  std::vector<std::string> report;
  std::string band = "constant";
  bool clip = false;  // clamp reported CDF bands to [0, 1]

  std::vector<double> tau;
  std::vector<double> v;
  std::vector<double> y;

  std::string study;
  std::size_t n = 0;
  std::size_t reps = 0;
  std::vector<double> levels;
  bool split_covariate = false;
  std::size_t bins = 30;

  std::string format;  // json | csv
  std::string output;  // empty: standard output
  std::size_t threads = 0;  // 0: hardware concurrency

  bool wants(const std::string& product) const;
};

/// Flags accepted by a command, in help order.
const std::vector<std::string>& command_keys(const std::string& command);

/// Typed, validated config with every default filled in. Throws ConfigError.
RunConfig resolve(const std::string& command, const Settings& settings);

/// The settings that reproduce `cfg` exactly (no output path or threads).
Settings reproducibility(const RunConfig& cfg);

/// key = value lines (# comments), or a JSON report / flat JSON object.
Settings load_config(const std::string& path);

ReportDocument cmd_analyze(const RunConfig& cfg);
ReportDocument cmd_compare(const RunConfig& cfg);
ReportDocument cmd_simulate(const RunConfig& cfg);
ReportDocument cmd_oracle(const RunConfig& cfg);
ReportDocument run_command(const RunConfig& cfg);

enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,
  kExitConfig = 2,
  kExitIngest = 3,
  kExitEstimability = 4,
  kExitReplication = 5,
};

/// Full command-line entry point. Data goes to --output (or `out`);
/// diagnostics and error documents go to `err`.
int main(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace itedist::cli
