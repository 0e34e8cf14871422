#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace itedist {

/// Integer-coded categorical covariate tuple identifying a cell.
using CovariateKey = std::vector<std::int64_t>;

/// covariate name -> (label -> code)
using LabelDictionary = std::map<std::string, std::map<std::string, std::int64_t>>;

struct Observation {
  double y = 0.0;
  int d = 0;
  int z = 0;
  CovariateKey x;
};

/// Immutable collection of observations grouped into covariate cells.
///
/// Rows are stored column-wise; covariates are kept in a flat row-major
/// buffer of width `covariate_count()`. The cell index maps each distinct
/// covariate tuple to the increasing list of row indices carrying it.
class Sample {
 public:
  Sample() = default;

  /// Validates every row (binary d and z, finite y, consistent covariate
  /// width) and builds the cell index. Throws std::invalid_argument.
  Sample(std::vector<double> y, std::vector<int> d, std::vector<int> z,
         std::vector<std::int64_t> covariates, std::vector<std::string> covariate_names);

  static Sample from_observations(std::span<const Observation> rows,
                                  std::vector<std::string> covariate_names);

  /// Single-cell sample with no covariates.
  static Sample without_covariates(std::vector<double> y, std::vector<int> d, std::vector<int> z);

  std::size_t size() const noexcept { return y_.size(); }
  bool empty() const noexcept { return y_.empty(); }
  std::size_t covariate_count() const noexcept { return names_.size(); }
  const std::vector<std::string>& covariate_names() const noexcept { return names_; }

  double y(std::size_t i) const { return y_[i]; }
  int d(std::size_t i) const { return d_[i]; }
  int z(std::size_t i) const { return z_[i]; }
  std::span<const std::int64_t> x(std::size_t i) const {
    return {x_.data() + i * names_.size(), names_.size()};
  }
  CovariateKey key(std::size_t i) const {
    auto row = x(i);
    return {row.begin(), row.end()};
  }
  Observation row(std::size_t i) const { return {y_[i], d_[i], z_[i], key(i)}; }

  std::span<const double> outcomes() const noexcept { return y_; }
  std::span<const int> treatments() const noexcept { return d_; }
  std::span<const int> instruments() const noexcept { return z_; }
  std::span<const std::int64_t> covariates() const noexcept { return x_; }

  const std::map<CovariateKey, std::vector<std::size_t>>& cells() const noexcept { return cells_; }

  /// Rows in the given order (indices may repeat); used by resampling.
  Sample take(std::span<const std::size_t> rows) const;

  /// Same rows with outcomes replaced by a*y + b.
  Sample with_affine_outcome(double a, double b) const;

 private:
  void build_cells();

  std::vector<double> y_;
  std::vector<int> d_;
  std::vector<int> z_;
  std::vector<std::int64_t> x_;
  std::vector<std::string> names_;
  std::map<CovariateKey, std::vector<std::size_t>> cells_;
};

struct Interval {
  double lower = 0.0;
  double upper = 0.0;
};

/// Outcome support endpoints for every (treatment, cell) pair.
class Bounds {
 public:
  void set(int d, const CovariateKey& cell, Interval bounds);
  /// Throws EstimabilityError when the pair is unknown.
  const Interval& at(int d, const CovariateKey& cell) const;
  bool contains(int d, const CovariateKey& cell) const;
  const std::map<CovariateKey, Interval>& for_treatment(int d) const { return by_d_[d]; }

  Bounds affine(double a, double b) const;

 private:
  std::map<CovariateKey, Interval> by_d_[2];
};

/// Per-cell margin counts and flags.
struct CellReport {
  CovariateKey cell;
  std::size_t n = 0;
  std::size_t n_z0 = 0;
  std::size_t n_z1 = 0;
  std::size_t n_d0 = 0;
  std::size_t n_d1 = 0;
  double first_stage = 0.0;  // Pr[D=1|Z=1] - Pr[D=1|Z=0], NaN if a z-margin is empty
  std::vector<std::string> flags;
  bool blocking = false;  // the leave-one-out objective cannot be formed
};

struct EstimabilityReport {
  std::vector<CellReport> cells;

  bool estimable() const;
  bool has_flags() const;
};

/// Column names used to read a CSV file.
struct ColumnMap {
  std::string outcome = "y";
  std::string treatment = "d";
  std::string instrument = "z";
  std::vector<std::string> covariates;
};

/// Sample plus the label dictionary for covariates whose values were not
/// integers. Codes are assigned in order of first appearance.
struct IngestResult {
  Sample sample;
  LabelDictionary labels;
};

IngestResult ingest_csv(const std::filesystem::path& path, const ColumnMap& columns);
IngestResult ingest_csv_text(const std::string& text, const ColumnMap& columns);

/// min/max of Y per (d, cell). Throws EstimabilityError naming an empty group.
Bounds estimate_bounds(const Sample& sample);

/// Default warning threshold per instrument margin.
inline constexpr std::size_t kDefaultMinPerGroup = 10;

EstimabilityReport check_estimability(const Sample& sample,
                                      std::size_t min_per_group = kDefaultMinPerGroup);

/// Throws EstimabilityError describing the first cell that cannot support
/// leave-one-out estimation (an empty treatment group, or a z-margin that a
/// single removal can empty).
void require_estimable(const Sample& sample);

/// Whether every occupied cell supports leave-one-out estimation.
bool is_estimable(const Sample& sample) noexcept;

enum class CompareOp { kEq, kNe, kLt, kLe, kGt, kGe };

struct SelectorAtom {
  std::size_t position = 0;
  CompareOp op = CompareOp::kEq;
  std::int64_t value = 0;
};

/// Conjunction of comparisons over covariate positions; empty means "all".
class GroupSelector {
 public:
  GroupSelector() = default;
  explicit GroupSelector(std::vector<SelectorAtom> atoms) : atoms_(std::move(atoms)) {}

  /// Parse "name=value,name>value,..." against covariate names. "all" or an
  /// empty string selects everything. Values of label-coded covariates may
  /// be given as labels (equality atoms only). Throws ConfigError.
  static GroupSelector parse(const std::string& expression,
                             const std::vector<std::string>& covariate_names,
                             const LabelDictionary& labels = {});

  bool matches(std::span<const std::int64_t> x) const;
  const std::vector<SelectorAtom>& atoms() const noexcept { return atoms_; }
  bool selects_all() const noexcept { return atoms_.empty(); }

 private:
  std::vector<SelectorAtom> atoms_;
};

/// Sub-sample with the selected rows in their original order. Cells stay
/// keyed by the full covariate tuple. Throws ConfigError if nothing matches.
Sample select_group(const Sample& sample, const GroupSelector& selector);

/// True when some observed cell satisfies both selectors.
bool selectors_overlap(const Sample& sample, const GroupSelector& a, const GroupSelector& b);

std::string format_key(const CovariateKey& key);

}  // namespace itedist
