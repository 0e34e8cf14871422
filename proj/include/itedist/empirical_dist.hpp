#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace itedist {

/// 1-based rank ceil(p * count) clamped to [1, count]. Products within 1e-9
/// above an integer are treated as that integer, so grid levels such as
/// 0.29000000000000004 with count 500 select rank 145.
std::size_t order_rank(double p, std::size_t count);

/// The rank-th smallest element (1-based) of a sorted array.
inline double order_statistic(std::span<const double> sorted, std::size_t rank) {
  return sorted[rank - 1];
}

/// Empirical distribution over a sorted copy of the values.
class Ecdf {
 public:
  Ecdf() = default;
  /// Throws std::invalid_argument for empty input or non-finite values.
  explicit Ecdf(std::vector<double> values);

  std::size_t size() const noexcept { return sorted_.size(); }
  std::span<const double> sorted() const noexcept { return sorted_; }

  /// #{x_i <= v} / n.
  double cdf(double v) const;
  /// The ceil(tau n)-th order statistic; tau must lie in (0, 1).
  double quantile(double tau) const;
  double iqr() const { return quantile(0.75) - quantile(0.25); }
  /// #{x_i > 0} / n, computed as a single ratio.
  double prob_positive() const;

 private:
  std::vector<double> sorted_;
};

Ecdf ecdf(std::span<const double> values);
double quantile(std::span<const double> values, double tau);
double iqr(std::span<const double> values);
double prob_positive(std::span<const double> values);

enum class GridKind { kValues, kLevels };

struct Grid {
  GridKind kind = GridKind::kLevels;
  std::vector<double> points;

  std::size_t size() const noexcept { return points.size(); }
  double lower() const { return points.front(); }
  double upper() const { return points.back(); }
};

/// T equally spaced points from lo to hi inclusive. Levels must satisfy
/// 0 < lo < hi < 1. Throws std::invalid_argument.
Grid make_grid(GridKind kind, double lo, double hi, std::size_t T);

/// Number of points of a grid from lo to hi with the given step.
std::size_t grid_size_for_step(double lo, double hi, double step);

/// Grid from an explicit list of points (strictly increasing; at least one).
/// Used for single-point bands and user-supplied evaluation sets.
Grid grid_from_points(GridKind kind, std::vector<double> points);

inline constexpr std::size_t kDefaultGridSize = 161;
inline constexpr double kDefaultLevelLower = 0.1;
inline constexpr double kDefaultLevelUpper = 0.9;

/// Level grid on [0.1, 0.9] with T points.
Grid default_level_grid(std::size_t T = kDefaultGridSize);
/// Value grid on [Q(0.05), Q(0.95)] of the estimate with T points.
Grid default_value_grid(const Ecdf& estimate, std::size_t T = kDefaultGridSize);

}  // namespace itedist
