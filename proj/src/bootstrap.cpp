#include "itedist/bootstrap.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "itedist/error.hpp"
#include "itedist/normal.hpp"
#include "itedist/parallel.hpp"

namespace itedist {

void BootstrapConfig::validate() const {
  if (B < 2) throw ConfigError("bootstrap replications must be at least 2");
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha must lie in (0, 1)");
  if (grid.points.empty()) throw ConfigError("evaluation grid is empty");
}

const char* to_string(TargetKind kind) {
  switch (kind) {
    case TargetKind::kCdf: return "cdf";
    case TargetKind::kQuantile: return "quantile";
    case TargetKind::kIqr: return "iqr";
    case TargetKind::kProbPositive: return "prob_positive";
    case TargetKind::kQuantileDifference: return "quantile_difference";
    case TargetKind::kIqrDifference: return "iqr_difference";
  }
  return "unknown";
}

const char* to_string(BandKind kind) {
  switch (kind) {
    case BandKind::kConstant: return "constant";
    case BandKind::kVariable: return "variable";
    case BandKind::kOneSidedLower: return "one_sided_lower";
  }
  return "unknown";
}

const char* to_string(Hypothesis hypothesis) {
  switch (hypothesis) {
    case Hypothesis::kEquality: return "equality";
    case Hypothesis::kLocationShift: return "location_shift";
    case Hypothesis::kDominance: return "dominance";
  }
  return "unknown";
}

double BandResult::average_width() const {
  if (half_width.empty()) return 0.0;
  double total = 0.0;
  for (double h : half_width) total += 2.0 * h;
  return total / static_cast<double>(half_width.size());
}

bool BandResult::covers(std::span<const double> truth) const {
  if (truth.size() != center.size()) throw std::invalid_argument("truth does not match the grid");
  for (std::size_t k = 0; k < truth.size(); ++k) {
    if (truth[k] < lower(k) || truth[k] > upper(k)) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Resampling

Sample resample(const Sample& sample, Stream& stream) {
  const std::size_t n = sample.size();
  std::vector<std::size_t> rows(n);
  for (auto& r : rows) r = static_cast<std::size_t>(stream.below(n));
  return sample.take(rows);
}

std::uint64_t replication_key(std::uint64_t seed, std::uint64_t group, std::size_t r,
                              std::size_t attempt) {
  return derive_key(seed, {static_cast<std::uint64_t>(StreamTag::kBootstrap), group,
                           static_cast<std::uint64_t>(r), static_cast<std::uint64_t>(attempt)});
}

namespace {

Sample estimable_resample(const Sample& sample, const BootstrapConfig& cfg, std::size_t r,
                          std::uint64_t group, std::size_t& redraws) {
  for (std::size_t attempt = 0; attempt <= cfg.max_redraws; ++attempt) {
    Stream stream(replication_key(cfg.seed, group, r, attempt));
    Sample draw = resample(sample, stream);
    if (is_estimable(draw)) {
      redraws = attempt;
      return draw;
    }
  }
  std::ostringstream msg;
  msg << "bootstrap replication " << r << " (group " << group << ") stayed degenerate after "
      << cfg.max_redraws + 1 << " draws; some cell lacks a treatment group or has fewer than two "
      << "observations in an instrument margin";
  throw ReplicationError(msg.str(), r, cfg.max_redraws + 1);
}

}  // namespace

PseudoIteVector bootstrap_pseudo_ites(const Sample& sample, const Bounds& bounds,
                                      const BootstrapConfig& cfg, std::size_t r,
                                      std::uint64_t group, std::size_t* redraws) {
  if (r >= cfg.B) throw std::out_of_range("replication index exceeds B");
  std::size_t count = 0;
  const Sample draw = estimable_resample(sample, cfg, r, group, count);
  if (redraws) *redraws = count;
  return pseudo_ites(draw, bounds);
}

BootstrapDistribution::BootstrapDistribution(Ecdf estimate, std::vector<Ecdf> replications,
                                             std::size_t redraws)
    : estimate_(std::move(estimate)), replications_(std::move(replications)), redraws_(redraws) {
  if (replications_.empty()) throw std::invalid_argument("no bootstrap replications");
}

BootstrapDistribution BootstrapDistribution::run(const Sample& sample, const Bounds& bounds,
                                                 const BootstrapConfig& cfg, std::uint64_t group) {
  cfg.validate();
  require_estimable(sample);
  Ecdf estimate(pseudo_ite_values(sample, bounds));

  std::vector<Ecdf> reps(cfg.B);
  std::vector<std::size_t> redraws(cfg.B, 0);
  parallel_for(cfg.B, cfg.threads, [&](std::size_t r) {
    const Sample draw = estimable_resample(sample, cfg, r, group, redraws[r]);
    reps[r] = Ecdf(pseudo_ite_values(draw, bounds));
  });
  return BootstrapDistribution(std::move(estimate), std::move(reps),
                               std::accumulate(redraws.begin(), redraws.end(), std::size_t{0}));
}

// ---------------------------------------------------------------------------
// Percentile intervals

std::pair<double, double> percentile_interval(std::vector<double> values, double alpha) {
  if (values.empty()) throw std::invalid_argument("percentile interval of no values");
  std::sort(values.begin(), values.end());
  const std::size_t B = values.size();
  return {order_statistic(values, order_rank(alpha / 2.0, B)),
          order_statistic(values, order_rank(1.0 - alpha / 2.0, B))};
}

namespace {

template <typename Stat>
IntervalResult interval_from(const BootstrapDistribution& dist, TargetKind target, double at,
                             double alpha, Stat&& stat) {
  std::vector<double> values;
  values.reserve(dist.B());
  for (const auto& rep : dist.replications()) values.push_back(stat(rep));
  const auto [lo, hi] = percentile_interval(std::move(values), alpha);
  IntervalResult out;
  out.target = target;
  out.at = at;
  out.estimate = stat(dist.estimate());
  out.lower = lo;
  out.upper = hi;
  out.alpha = alpha;
  out.replications = dist.B();
  out.redraws = dist.redraws();
  return out;
}

void check_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha must lie in (0, 1)");
}

void check_level(double tau) {
  if (!(tau > 0.0 && tau < 1.0)) throw ConfigError("quantile level must lie in (0, 1)");
}

}  // namespace

IntervalResult ci_cdf(const BootstrapDistribution& dist, double v, double alpha) {
  check_alpha(alpha);
  if (!std::isfinite(v)) throw ConfigError("CDF evaluation point must be finite");
  return interval_from(dist, TargetKind::kCdf, v, alpha, [v](const Ecdf& e) { return e.cdf(v); });
}

IntervalResult ci_quantile(const BootstrapDistribution& dist, double tau, double alpha) {
  check_alpha(alpha);
  check_level(tau);
  return interval_from(dist, TargetKind::kQuantile, tau, alpha,
                       [tau](const Ecdf& e) { return e.quantile(tau); });
}

IntervalResult ci_iqr(const BootstrapDistribution& dist, double alpha) {
  check_alpha(alpha);
  return interval_from(dist, TargetKind::kIqr, 0.0, alpha, [](const Ecdf& e) { return e.iqr(); });
}

IntervalResult ci_prob_positive(const BootstrapDistribution& dist, double alpha) {
  check_alpha(alpha);
  return interval_from(dist, TargetKind::kProbPositive, 0.0, alpha,
                       [](const Ecdf& e) { return e.prob_positive(); });
}

// ---------------------------------------------------------------------------
// Bands

BandResult sup_band(const Grid& grid, std::vector<double> center,
                    const std::vector<std::vector<double>>& draws, double alpha, BandKind kind,
                    double floor_scale) {
  check_alpha(alpha);
  const std::size_t T = grid.size();
  const std::size_t B = draws.size();
  if (B == 0) throw std::invalid_argument("no bootstrap replications");
  if (center.size() != T) throw std::invalid_argument("center does not match the grid");

  BandResult band;
  band.grid = grid;
  band.kind = kind;
  band.alpha = alpha;
  band.replications = B;

  std::vector<double> scale(T, 1.0);
  if (kind == BandKind::kVariable) {
    const double floor = 1e-12 * std::max(1.0, floor_scale);
    const std::size_t r_hi = order_rank(0.75, B);
    const std::size_t r_lo = order_rank(0.25, B);
    std::vector<double> column(B);
    for (std::size_t k = 0; k < T; ++k) {
      for (std::size_t r = 0; r < B; ++r) column[r] = draws[r][k];
      std::sort(column.begin(), column.end());
      const double s = (order_statistic(column, r_hi) - order_statistic(column, r_lo)) /
                       kNormalQuartileSpread;
      if (s < floor) {
        scale[k] = floor;
        ++band.floored_points;
      } else {
        scale[k] = s;
      }
    }
    if (band.floored_points > 0) {
      std::ostringstream msg;
      msg << "bootstrap IQR below the floor at " << band.floored_points << " of " << T
          << " grid points; studentizer floored at " << floor;
      band.warnings.push_back(msg.str());
    }
  }

  std::vector<double> sup(B);
  for (std::size_t r = 0; r < B; ++r) {
    if (draws[r].size() != T) throw std::invalid_argument("replication does not match the grid");
    double m = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < T; ++k) {
      const double dev = draws[r][k] - center[k];
      const double stat = kind == BandKind::kOneSidedLower ? dev : std::abs(dev) / scale[k];
      m = std::max(m, stat);
    }
    sup[r] = m;
  }
  std::sort(sup.begin(), sup.end());
  band.critical_value = order_statistic(sup, order_rank(1.0 - alpha, B));
  band.half_width.resize(T);
  for (std::size_t k = 0; k < T; ++k) band.half_width[k] = band.critical_value * scale[k];
  band.center = std::move(center);
  return band;
}

namespace {

template <typename Eval>
BandResult band_from(const BootstrapDistribution& dist, const Grid& grid, double alpha,
                     BandKind kind, Eval&& eval) {
  std::vector<double> center(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) center[k] = eval(dist.estimate(), grid.points[k]);
  std::vector<std::vector<double>> draws(dist.B(), std::vector<double>(grid.size()));
  for (std::size_t r = 0; r < dist.B(); ++r) {
    for (std::size_t k = 0; k < grid.size(); ++k) {
      draws[r][k] = eval(dist.replications()[r], grid.points[k]);
    }
  }
  BandResult band = sup_band(grid, std::move(center), draws, alpha, kind, dist.estimate().iqr());
  band.redraws = dist.redraws();
  return band;
}

void check_two_sided(BandKind kind) {
  if (kind == BandKind::kOneSidedLower) {
    throw ConfigError("one-sided bands are only defined for quantile differences");
  }
}

}  // namespace

BandResult ucb_cdf(const BootstrapDistribution& dist, const Grid& grid, double alpha, BandKind kind) {
  if (grid.kind != GridKind::kValues) throw ConfigError("CDF bands need a value grid");
  check_two_sided(kind);
  return band_from(dist, grid, alpha, kind, [](const Ecdf& e, double v) { return e.cdf(v); });
}

BandResult ucb_quantile(const BootstrapDistribution& dist, const Grid& grid, double alpha,
                        BandKind kind) {
  if (grid.kind != GridKind::kLevels) throw ConfigError("quantile bands need a level grid");
  check_two_sided(kind);
  return band_from(dist, grid, alpha, kind,
                   [](const Ecdf& e, double tau) { return e.quantile(tau); });
}

// ---------------------------------------------------------------------------
// Two-group contrasts

QuantileDifference::QuantileDifference(BootstrapDistribution group0, BootstrapDistribution group1)
    : g0_(std::move(group0)), g1_(std::move(group1)) {
  if (g0_.B() != g1_.B()) throw std::invalid_argument("groups have different replication counts");
}

QuantileDifference QuantileDifference::run(const Sample& sample0, const Sample& sample1,
                                           const Bounds& bounds0, const Bounds& bounds1,
                                           const BootstrapConfig& cfg) {
  auto g0 = BootstrapDistribution::run(sample0, bounds0, cfg, 0);
  auto g1 = BootstrapDistribution::run(sample1, bounds1, cfg, cfg.couple_groups ? 0 : 1);
  return QuantileDifference(std::move(g0), std::move(g1));
}

double QuantileDifference::estimate(double tau) const {
  return g1_.estimate().quantile(tau) - g0_.estimate().quantile(tau);
}

double QuantileDifference::replication(std::size_t r, double tau) const {
  return g1_.replications()[r].quantile(tau) - g0_.replications()[r].quantile(tau);
}

namespace {

IntervalResult difference_interval(const QuantileDifference& diff, TargetKind target, double at,
                                   double alpha, double estimate,
                                   const std::function<double(std::size_t)>& rep) {
  std::vector<double> values(diff.B());
  for (std::size_t r = 0; r < diff.B(); ++r) values[r] = rep(r);
  const auto [lo, hi] = percentile_interval(std::move(values), alpha);
  IntervalResult out;
  out.target = target;
  out.at = at;
  out.estimate = estimate;
  out.lower = lo;
  out.upper = hi;
  out.alpha = alpha;
  out.replications = diff.B();
  out.redraws = diff.redraws();
  return out;
}

std::vector<std::vector<double>> difference_draws(const QuantileDifference& diff, const Grid& grid) {
  std::vector<std::vector<double>> draws(diff.B(), std::vector<double>(grid.size()));
  for (std::size_t r = 0; r < diff.B(); ++r) {
    for (std::size_t k = 0; k < grid.size(); ++k) draws[r][k] = diff.replication(r, grid.points[k]);
  }
  return draws;
}

std::vector<double> difference_center(const QuantileDifference& diff, const Grid& grid) {
  std::vector<double> center(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) center[k] = diff.estimate(grid.points[k]);
  return center;
}

void subtract_mean(std::vector<double>& values) {
  double total = 0.0;
  for (double v : values) total += v;
  const double mean = total / static_cast<double>(values.size());
  for (double& v : values) v -= mean;
}

}  // namespace

IntervalResult ci_quantile_difference(const QuantileDifference& diff, double tau, double alpha) {
  check_alpha(alpha);
  check_level(tau);
  return difference_interval(diff, TargetKind::kQuantileDifference, tau, alpha,
                             diff.estimate(tau),
                             [&](std::size_t r) { return diff.replication(r, tau); });
}

IntervalResult ci_iqr_difference(const QuantileDifference& diff, double alpha) {
  check_alpha(alpha);
  return difference_interval(
      diff, TargetKind::kIqrDifference, 0.0, alpha, diff.estimate(0.75) - diff.estimate(0.25),
      [&](std::size_t r) { return diff.replication(r, 0.75) - diff.replication(r, 0.25); });
}

BandResult ucb_quantile_difference(const QuantileDifference& diff, const Grid& grid, double alpha,
                                   BandKind kind) {
  if (grid.kind != GridKind::kLevels) throw ConfigError("quantile bands need a level grid");
  const double scale = std::max(diff.group(0).estimate().iqr(), diff.group(1).estimate().iqr());
  BandResult band = sup_band(grid, difference_center(diff, grid), difference_draws(diff, grid),
                             alpha, kind, scale);
  band.redraws = diff.redraws();
  return band;
}

TestResult test_distributions(const QuantileDifference& diff, const Grid& grid, double alpha,
                              Hypothesis hypothesis) {
  check_alpha(alpha);
  if (grid.kind != GridKind::kLevels) throw ConfigError("tests need a level grid");
  std::vector<double> center = difference_center(diff, grid);
  std::vector<std::vector<double>> draws = difference_draws(diff, grid);

  TestResult out;
  out.hypothesis = hypothesis;
  out.alpha = alpha;
  BandKind kind = BandKind::kConstant;
  if (hypothesis == Hypothesis::kLocationShift) {
    subtract_mean(center);
    for (auto& row : draws) subtract_mean(row);
  }
  if (hypothesis == Hypothesis::kDominance) {
    kind = BandKind::kOneSidedLower;
    out.statistic = *std::max_element(center.begin(), center.end());
  } else {
    out.statistic = 0.0;
    for (double c : center) out.statistic = std::max(out.statistic, std::abs(c));
  }
  out.critical_value = sup_band(grid, std::move(center), draws, alpha, kind, 0.0).critical_value;
  out.reject = out.statistic > out.critical_value;
  return out;
}

// ---------------------------------------------------------------------------
// One-call forms

IntervalResult ci_cdf(const Sample& sample, const Bounds& bounds, const BootstrapConfig& cfg,
                      double v) {
  return ci_cdf(BootstrapDistribution::run(sample, bounds, cfg), v, cfg.alpha);
}

std::pair<IntervalResult, IntervalResult> ci_quantile_and_iqr(const Sample& sample,
                                                              const Bounds& bounds,
                                                              const BootstrapConfig& cfg,
                                                              double tau) {
  check_level(tau);
  const auto dist = BootstrapDistribution::run(sample, bounds, cfg);
  return {ci_quantile(dist, tau, cfg.alpha), ci_iqr(dist, cfg.alpha)};
}

BandResult ucb_cdf_constant(const Sample& sample, const Bounds& bounds, const BootstrapConfig& cfg) {
  return ucb_cdf(BootstrapDistribution::run(sample, bounds, cfg), cfg.grid, cfg.alpha,
                 BandKind::kConstant);
}

BandResult ucb_cdf_variable(const Sample& sample, const Bounds& bounds, const BootstrapConfig& cfg) {
  return ucb_cdf(BootstrapDistribution::run(sample, bounds, cfg), cfg.grid, cfg.alpha,
                 BandKind::kVariable);
}

BandResult ucb_quantile_constant(const Sample& sample, const Bounds& bounds,
                                 const BootstrapConfig& cfg) {
  return ucb_quantile(BootstrapDistribution::run(sample, bounds, cfg), cfg.grid, cfg.alpha,
                      BandKind::kConstant);
}

BandResult ucb_quantile_variable(const Sample& sample, const Bounds& bounds,
                                 const BootstrapConfig& cfg) {
  return ucb_quantile(BootstrapDistribution::run(sample, bounds, cfg), cfg.grid, cfg.alpha,
                      BandKind::kVariable);
}

std::pair<IntervalResult, IntervalResult> compare_quantiles(const Sample& sample0,
                                                            const Sample& sample1,
                                                            const Bounds& bounds0,
                                                            const Bounds& bounds1,
                                                            const BootstrapConfig& cfg, double tau) {
  check_level(tau);
  const auto diff = QuantileDifference::run(sample0, sample1, bounds0, bounds1, cfg);
  return {ci_quantile_difference(diff, tau, cfg.alpha), ci_iqr_difference(diff, cfg.alpha)};
}

BandResult ucb_quantile_difference(const Sample& sample0, const Sample& sample1,
                                   const Bounds& bounds0, const Bounds& bounds1,
                                   const BootstrapConfig& cfg, BandKind kind) {
  const auto diff = QuantileDifference::run(sample0, sample1, bounds0, bounds1, cfg);
  return ucb_quantile_difference(diff, cfg.grid, cfg.alpha, kind);
}

TestResult test_distributions(const Sample& sample0, const Sample& sample1, const Bounds& bounds0,
                              const Bounds& bounds1, const BootstrapConfig& cfg,
                              Hypothesis hypothesis) {
  const auto diff = QuantileDifference::run(sample0, sample1, bounds0, bounds1, cfg);
  return test_distributions(diff, cfg.grid, cfg.alpha, hypothesis);
}

}  // namespace itedist
