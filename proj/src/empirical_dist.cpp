#include "itedist/empirical_dist.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace itedist {

std::size_t order_rank(double p, std::size_t count) {
  if (count == 0) throw std::invalid_argument("rank of an empty collection");
  const double raw = std::ceil(p * static_cast<double>(count) - 1e-9);
  if (!(raw >= 1.0)) return 1;
  if (raw >= static_cast<double>(count)) return count;
  return static_cast<std::size_t>(raw);
}

Ecdf::Ecdf(std::vector<double> values) : sorted_(std::move(values)) {
  if (sorted_.empty()) throw std::invalid_argument("empirical distribution of no values");
  for (double v : sorted_) {
    if (!std::isfinite(v)) throw std::invalid_argument("non-finite value");
  }
  std::sort(sorted_.begin(), sorted_.end());
}

double Ecdf::cdf(double v) const {
  const auto count = std::upper_bound(sorted_.begin(), sorted_.end(), v) - sorted_.begin();
  return static_cast<double>(count) / static_cast<double>(sorted_.size());
}

double Ecdf::prob_positive() const {
  const auto above = sorted_.end() - std::upper_bound(sorted_.begin(), sorted_.end(), 0.0);
  return static_cast<double>(above) / static_cast<double>(sorted_.size());
}

double Ecdf::quantile(double tau) const {
  if (!(tau > 0.0 && tau < 1.0)) throw std::invalid_argument("quantile level must lie in (0, 1)");
  return order_statistic(sorted_, order_rank(tau, sorted_.size()));
}

Ecdf ecdf(std::span<const double> values) { return Ecdf({values.begin(), values.end()}); }

double quantile(std::span<const double> values, double tau) {
  if (!(tau > 0.0 && tau < 1.0)) throw std::invalid_argument("quantile level must lie in (0, 1)");
  if (values.empty()) throw std::invalid_argument("quantile of no values");
  std::vector<double> copy(values.begin(), values.end());
  const std::size_t k = order_rank(tau, copy.size()) - 1;
  std::nth_element(copy.begin(), copy.begin() + static_cast<std::ptrdiff_t>(k), copy.end());
  return copy[k];
}

double iqr(std::span<const double> values) { return ecdf(values).iqr(); }

double prob_positive(std::span<const double> values) { return ecdf(values).prob_positive(); }

Grid make_grid(GridKind kind, double lo, double hi, std::size_t T) {
  if (T < 2) throw std::invalid_argument("a grid needs at least 2 points");
  if (!std::isfinite(lo) || !std::isfinite(hi) || !(lo < hi)) {
    throw std::invalid_argument("grid range must satisfy lo < hi");
  }
  if (kind == GridKind::kLevels && !(lo > 0.0 && hi < 1.0)) {
    throw std::invalid_argument("level grid must lie inside (0, 1)");
  }
  Grid grid{kind, std::vector<double>(T)};
  const double span = hi - lo;
  const double steps = static_cast<double>(T - 1);
  for (std::size_t k = 0; k + 1 < T; ++k) grid.points[k] = lo + span * (static_cast<double>(k) / steps);
  grid.points[T - 1] = hi;
  return grid;
}

std::size_t grid_size_for_step(double lo, double hi, double step) {
  if (!(step > 0.0) || !(lo < hi)) throw std::invalid_argument("invalid grid step");
  return static_cast<std::size_t>(std::llround((hi - lo) / step)) + 1;
}

Grid grid_from_points(GridKind kind, std::vector<double> points) {
  if (points.empty()) throw std::invalid_argument("grid has no points");
  for (std::size_t k = 0; k < points.size(); ++k) {
    if (!std::isfinite(points[k])) throw std::invalid_argument("non-finite grid point");
    if (kind == GridKind::kLevels && !(points[k] > 0.0 && points[k] < 1.0)) {
      throw std::invalid_argument("level grid must lie inside (0, 1)");
    }
    if (k > 0 && !(points[k] > points[k - 1])) {
      throw std::invalid_argument("grid points must be strictly increasing");
    }
  }
  return Grid{kind, std::move(points)};
}

Grid default_level_grid(std::size_t T) {
  return make_grid(GridKind::kLevels, kDefaultLevelLower, kDefaultLevelUpper, T);
}

Grid default_value_grid(const Ecdf& estimate, std::size_t T) {
  double lo = estimate.quantile(0.05);
  double hi = estimate.quantile(0.95);
  if (!(lo < hi)) {
    lo -= 0.5;
    hi += 0.5;
  }
  return make_grid(GridKind::kValues, lo, hi, T);
}

}  // namespace itedist
