#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "itedist/counterfactual.hpp"
#include "itedist/data_model.hpp"
#include "itedist/empirical_dist.hpp"
#include "itedist/rng.hpp"

namespace itedist {

struct BootstrapConfig {
  std::size_t B = 500;
  std::uint64_t seed = 0;
  double alpha = 0.05;
  std::size_t max_redraws = 100;
  Grid grid = default_level_grid();
  std::size_t threads = 1;
  /// Resample both groups of a comparison with the same streams. Only
  /// meaningful for identical groups; used to check degenerate nulls.
  bool couple_groups = false;

  /// Throws ConfigError.
  void validate() const;
};

enum class TargetKind { kCdf, kQuantile, kIqr, kProbPositive, kQuantileDifference, kIqrDifference };

const char* to_string(TargetKind kind);

struct IntervalResult {
  TargetKind target = TargetKind::kCdf;
  double at = 0.0;        // v for CDF targets, tau for quantile targets, else 0
  double estimate = 0.0;  // point estimate on the original sample
  double lower = 0.0;
  double upper = 0.0;
  double alpha = 0.05;
  std::size_t replications = 0;
  std::size_t redraws = 0;
};

enum class BandKind { kConstant, kVariable, kOneSidedLower };

const char* to_string(BandKind kind);

struct BandResult {
  Grid grid;
  std::vector<double> center;
  std::vector<double> half_width;  // one-sided bands: distance from center to the lower bound
  BandKind kind = BandKind::kConstant;
  double critical_value = 0.0;
  double alpha = 0.05;
  std::size_t replications = 0;
  std::size_t redraws = 0;
  std::size_t floored_points = 0;  // studentizer floor applications
  std::vector<std::string> warnings;

  double lower(std::size_t k) const { return center[k] - half_width[k]; }
  double upper(std::size_t k) const {
    return kind == BandKind::kOneSidedLower ? std::numeric_limits<double>::infinity()
                                            : center[k] + half_width[k];
  }
  /// Mean of the two-sided widths over the grid.
  double average_width() const;
  /// Whether f(points[k]) lies in the band at every grid point.
  bool covers(std::span<const double> truth) const;
};

enum class Hypothesis { kEquality, kLocationShift, kDominance };

const char* to_string(Hypothesis hypothesis);

struct TestResult {
  Hypothesis hypothesis = Hypothesis::kEquality;
  double statistic = 0.0;
  double critical_value = 0.0;
  bool reject = false;
  double alpha = 0.05;
};

/// n rows drawn uniformly with replacement.
Sample resample(const Sample& sample, Stream& stream);

/// Stream key for attempt `attempt` of replication r of group `group`.
std::uint64_t replication_key(std::uint64_t seed, std::uint64_t group, std::size_t r,
                              std::size_t attempt);

/// Pseudo ITEs on the r-th resample, computed with the original-sample
/// bounds. A degenerate resample is redrawn with the next attempt key, at
/// most cfg.max_redraws times; `redraws` receives the count. Throws
/// ReplicationError once the cap is exhausted.
PseudoIteVector bootstrap_pseudo_ites(const Sample& sample, const Bounds& bounds,
                                      const BootstrapConfig& cfg, std::size_t r,
                                      std::uint64_t group = 0, std::size_t* redraws = nullptr);

/// Point estimate plus B bootstrap replications of the pseudo-ITE
/// distribution for one group.
class BootstrapDistribution {
 public:
  /// Runs all replications (in parallel over cfg.threads).
  static BootstrapDistribution run(const Sample& sample, const Bounds& bounds,
                                   const BootstrapConfig& cfg, std::uint64_t group = 0);

  /// Assemble from precomputed values (for synthetic studies and tests).
  BootstrapDistribution(Ecdf estimate, std::vector<Ecdf> replications, std::size_t redraws = 0);

  const Ecdf& estimate() const noexcept { return estimate_; }
  const std::vector<Ecdf>& replications() const noexcept { return replications_; }
  std::size_t B() const noexcept { return replications_.size(); }
  std::size_t redraws() const noexcept { return redraws_; }

 private:
  Ecdf estimate_;
  std::vector<Ecdf> replications_;
  std::size_t redraws_ = 0;
};

/// [x_<ceil(B alpha/2)>, x_<ceil(B (1 - alpha/2))>] of the given values.
std::pair<double, double> percentile_interval(std::vector<double> values, double alpha);

IntervalResult ci_cdf(const BootstrapDistribution& dist, double v, double alpha);
IntervalResult ci_quantile(const BootstrapDistribution& dist, double tau, double alpha);
IntervalResult ci_iqr(const BootstrapDistribution& dist, double alpha);
IntervalResult ci_prob_positive(const BootstrapDistribution& dist, double alpha);

BandResult ucb_cdf(const BootstrapDistribution& dist, const Grid& grid, double alpha, BandKind kind);
BandResult ucb_quantile(const BootstrapDistribution& dist, const Grid& grid, double alpha,
                        BandKind kind);

/// Sup-statistic band around `center` from replications `draws[r][k]`.
/// Two-sided kinds use |draw - center|, the one-sided kind draw - center.
/// `floor_scale` sets the studentizer floor 1e-12 * max(1, floor_scale).
BandResult sup_band(const Grid& grid, std::vector<double> center,
                    const std::vector<std::vector<double>>& draws, double alpha, BandKind kind,
                    double floor_scale);

/// delta(tau) = Q(tau | group 1) - Q(tau | group 0) and its bootstrap
/// analogue, pairing replication r of each group.
class QuantileDifference {
 public:
  QuantileDifference(BootstrapDistribution group0, BootstrapDistribution group1);

  static QuantileDifference run(const Sample& sample0, const Sample& sample1,
                                const Bounds& bounds0, const Bounds& bounds1,
                                const BootstrapConfig& cfg);

  const BootstrapDistribution& group(int g) const { return g == 0 ? g0_ : g1_; }
  std::size_t B() const noexcept { return g0_.B(); }
  std::size_t redraws() const noexcept { return g0_.redraws() + g1_.redraws(); }

  double estimate(double tau) const;
  double replication(std::size_t r, double tau) const;

 private:
  BootstrapDistribution g0_;
  BootstrapDistribution g1_;
};

IntervalResult ci_quantile_difference(const QuantileDifference& diff, double tau, double alpha);
IntervalResult ci_iqr_difference(const QuantileDifference& diff, double alpha);
BandResult ucb_quantile_difference(const QuantileDifference& diff, const Grid& grid, double alpha,
                                   BandKind kind);
TestResult test_distributions(const QuantileDifference& diff, const Grid& grid, double alpha,
                              Hypothesis hypothesis);

// One-call forms: run the bootstrap, then build the product.

IntervalResult ci_cdf(const Sample& sample, const Bounds& bounds, const BootstrapConfig& cfg,
                      double v);
std::pair<IntervalResult, IntervalResult> ci_quantile_and_iqr(const Sample& sample,
                                                              const Bounds& bounds,
                                                              const BootstrapConfig& cfg,
                                                              double tau);
BandResult ucb_cdf_constant(const Sample& sample, const Bounds& bounds, const BootstrapConfig& cfg);
BandResult ucb_cdf_variable(const Sample& sample, const Bounds& bounds, const BootstrapConfig& cfg);
BandResult ucb_quantile_constant(const Sample& sample, const Bounds& bounds,
                                 const BootstrapConfig& cfg);
BandResult ucb_quantile_variable(const Sample& sample, const Bounds& bounds,
                                 const BootstrapConfig& cfg);
std::pair<IntervalResult, IntervalResult> compare_quantiles(const Sample& sample0,
                                                            const Sample& sample1,
                                                            const Bounds& bounds0,
                                                            const Bounds& bounds1,
                                                            const BootstrapConfig& cfg, double tau);
BandResult ucb_quantile_difference(const Sample& sample0, const Sample& sample1,
                                   const Bounds& bounds0, const Bounds& bounds1,
                                   const BootstrapConfig& cfg, BandKind kind);
TestResult test_distributions(const Sample& sample0, const Sample& sample1, const Bounds& bounds0,
                              const Bounds& bounds1, const BootstrapConfig& cfg,
                              Hypothesis hypothesis);

}  // namespace itedist
