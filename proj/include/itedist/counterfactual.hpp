#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "itedist/data_model.hpp"

namespace itedist {

/// Left-continuous sign: +1 for u > 0, -1 otherwise (so sgn(0) = -1).
constexpr int sgn(double u) noexcept { return u > 0.0 ? 1 : -1; }

/// The four (D, Z) groups of a cell, named relative to the target
/// treatment d (d' = 1 - d).
enum class Group : std::size_t {
  kKinkSame = 0,   // D = d,  Z = d
  kKinkOther = 1,  // D = d,  Z = d'
  kSignSame = 2,   // D = d', Z = d
  kSignOther = 3,  // D = d', Z = d'
};

/// Leave-one-out sample objective for one cell x and target treatment d:
///
///   U(t, y) = [sum_{Z_j=d}  {1(D_j=d)|Y_j - t| - 1(D_j=d') sgn(Y_j - y) t}] / N_d
///           - [sum_{Z_j=d'} {1(D_j=d)|Y_j - t| - 1(D_j=d') sgn(Y_j - y) t}] / N_d'
///
/// with row i dropped from every sum and from its denominator. Internally
/// the objective is scaled by N_d * N_d' so the kink part and the integer
/// slope of the sign part separate:
///
///   H(t) = N_d' A_same(t) - N_d A_other(t) + (N_d s_other - N_d' s_same) t.
///
/// Group sums are O(log n_x) via sorted arrays and prefix sums.
class ObjectiveContext {
 public:
  /// Throws EstimabilityError if the cell is absent or a z-margin is empty.
  ObjectiveContext(const Sample& sample, const CovariateKey& cell, int d, const Bounds& bounds);

  int target() const noexcept { return d_; }
  const CovariateKey& cell() const noexcept { return cell_; }
  Interval bounds() const noexcept { return bounds_; }

  /// Sorted outcomes of one group and its prefix sums (size + 1 entries).
  std::span<const double> values(Group g) const { return sorted_[index(g)]; }
  std::span<const double> prefix(Group g) const { return prefix_[index(g)]; }

  /// N_{z=d} and N_{z=d'} before any removal.
  std::size_t n_same() const noexcept { return n_same_; }
  std::size_t n_other() const noexcept { return n_other_; }

  /// sum_j |Y_j - t| over a group.
  double abs_sum(Group g, double t) const;
  /// sum_j sgn(Y_j - y) over a group.
  std::int64_t sign_sum(Group g, double y) const;

  /// U^{(-row)}(t, y); `row` is a sample row index inside this cell, or
  /// nullopt for the full-cell objective. Throws std::out_of_range for a
  /// row outside the cell, std::domain_error for t outside the bounds and
  /// EstimabilityError if the removal empties a z-margin.
  double value(std::optional<std::size_t> row, double t, double y) const;

  /// Smallest global minimizer of t -> U^{(-row)}(t, y) on the bounds.
  double minimize(std::optional<std::size_t> row, double y) const;

  /// Sorted candidate set: distinct D=d outcomes inside the bounds plus
  /// both endpoints.
  std::span<const double> candidates() const noexcept { return candidates_; }

  /// Fill `minimizers[k]` for every D=d' row of the cell, in cell order.
  /// Equivalent to minimize(row, Y_row) for each such row, bit for bit.
  void minimize_own_outcomes(std::vector<std::size_t>& rows, std::vector<double>& minimizers) const;

 private:
  struct Removal {
    double y;
    int d;
    int z;
  };

  static constexpr std::size_t index(Group g) noexcept { return static_cast<std::size_t>(g); }

  std::optional<Removal> removal(std::optional<std::size_t> row) const;
  void denominators(const std::optional<Removal>& r, std::int64_t& ns, std::int64_t& no) const;
  std::int64_t slope(const std::optional<Removal>& r, std::int64_t ns, std::int64_t no,
                     double y) const;
  double kink_part(double t, std::int64_t ns, std::int64_t no) const;
  double scaled(const std::optional<Removal>& r, std::int64_t ns, std::int64_t no,
                std::int64_t c, double t) const;

  int d_;
  CovariateKey cell_;
  Interval bounds_;
  std::array<std::vector<double>, 4> sorted_;
  std::array<std::vector<double>, 4> prefix_;
  std::size_t n_same_ = 0;
  std::size_t n_other_ = 0;
  std::vector<double> candidates_;

  // Cell rows (increasing sample indices) with their data, for removals.
  std::vector<std::size_t> rows_;
  std::vector<double> row_y_;
  std::vector<int> row_d_;
  std::vector<int> row_z_;
};

ObjectiveContext build_context(const Sample& sample, const CovariateKey& cell, int d,
                               const Bounds& bounds);

double objective_value(const ObjectiveContext& ctx, std::optional<std::size_t> row, double t,
                       double y);

double minimize_objective(const ObjectiveContext& ctx, std::optional<std::size_t> row, double y);

/// Pseudo ITEs aligned with sample rows.
struct PseudoIteVector {
  std::vector<double> values;
  std::vector<int> target;          // counterfactual treatment 1 - D_i
  std::vector<double> minimizer;    // phi-hat at Y_i

  std::size_t size() const noexcept { return values.size(); }
};

/// Leave-one-out pseudo ITE for every row, cell by cell. Cells are keyed by
/// the full covariate tuple, so a selected sub-sample pools its cells only
/// at the distribution level. Throws EstimabilityError.
PseudoIteVector pseudo_ites(const Sample& sample, const Bounds& bounds);

/// Values only, in row order; skips the bookkeeping vectors.
std::vector<double> pseudo_ite_values(const Sample& sample, const Bounds& bounds);

}  // namespace itedist
