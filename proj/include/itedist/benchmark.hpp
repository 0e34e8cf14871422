#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "itedist/bootstrap.hpp"
#include "itedist/data_model.hpp"
#include "itedist/empirical_dist.hpp"
#include "itedist/rng.hpp"

namespace itedist::bench {

// Simulation design:
//   (U, V) ~ N(0, [[1, rho], [rho, 1]]),  eps = Phi(U),  eta = Phi(V)
//   Z = 1(N > 0),  N ~ N(0, 1) independent
//   D = 1(intercept + slope Z + eta >= 0)
//   Y = (1 + eps)^(2 + D)
// so the ITE is eps (1 + eps)^2 with eps ~ U[0, 1].
struct DgpConfig {
  double rho = 0.3;
  double intercept = -0.5;
  double slope = 0.5;

  void validate() const;
};

/// A generated sample plus its latent draws. The estimation code only ever
/// sees `sample`; the latents feed the infeasible comparisons.
struct GeneratedSample {
  Sample sample;
  std::vector<double> epsilon;
  std::vector<double> eta;
};

/// One covariate column "g" with independent fair-coin values is appended
/// when `split_covariate` is set (random halves for null comparisons).
GeneratedSample generate(std::size_t n, Stream& stream, const DgpConfig& cfg = {},
                         bool split_covariate = false);

/// Delta_i = eps_i (1 + eps_i)^2.
std::vector<double> true_ites(const GeneratedSample& generated);

/// Closed-form truth for the default design.
namespace oracle {

double ite(double e);                // e (1 + e)^2
double ite_derivative(double e);     // (1 + e)(1 + 3e)
double ite_inverse(double v);        // bisection on [0, 1]; v in [0, 4]
double cdf(double v);                // F(v), 0 below 0 and 1 above 4
double quantile(double tau);         // tau (1 + tau)^2
double density(double v);            // 1 / ((1 + e)(1 + 3e)) at e = ite_inverse(v)
double iqr();                        // quantile(0.75) - quantile(0.25)
double phi(int d, double y);         // counterfactual map: y^{3/2} (d=1), y^{2/3} (d=0)
inline constexpr double kInstrumentProbability = 0.5;

}  // namespace oracle

/// Asymptotic variance components of the empirical CDF and quantiles for
/// the default design. Each piece is exposed so the chain can be checked.
namespace theory {

double v1(double v);                 // F(v)(1 - F(v))
double complier_density(double e);   // density of eps among compliers
double prob_treated(int d, double e);     // Pr[D = d | eps = e]
double first_stage(int d);           // Pr[D=d|Z=1] - Pr[D=d|Z=0]
double zeta(int d, double y);        // f_{Y(d)|complier}(y) * first_stage(d)
double varsigma(int d, double e);    // (-1)^{1-d} zeta(d, (1+e)^{2+d})
double rho(int d, double v);         // f_{(eps,D)}(e_v, d) * (Delta^{-1})'(v)
double omega(double v);              // -sum_d |rho_{1-d}(v)| / varsigma_d(e_v)
double v2(double v);                 // omega^2 e_v (1 - e_v) (1/p_1 + 1/p_0)
double v1_tilde(double tau);         // V1(Q(tau)) / f(Q(tau))^2
double v2_tilde(double tau);         // V2(Q(tau)) / f(Q(tau))^2
double v1_tilde_closed(double tau);  // tau (1 - tau)(1 + tau)^2 (1 + 3 tau)^2

}  // namespace theory

struct TheoryVariance {
  double v1_tilde = 0.0;
  double v2_tilde = 0.0;
};

/// (V1~, V2~) at level tau in (0, 1). Throws std::invalid_argument.
TheoryVariance theory_variance(double tau);

/// Simulation check of the estimation-error component: n Var(Q-hat) minus
/// n Var(Q-tilde), where Q-tilde uses the true ITEs of the same samples.
struct VarianceDifference {
  double tau = 0.0;
  double n_var_feasible = 0.0;
  double n_var_infeasible = 0.0;
  double difference = 0.0;
  double standard_error = 0.0;  // delta-method s.e. of `difference`
};

std::vector<VarianceDifference> brute_force_variance_difference(const std::vector<double>& taus,
                                                                std::size_t n, std::size_t reps,
                                                                std::uint64_t seed,
                                                                std::size_t threads = 1);

/// F-hat(v) +- z_{1-alpha/2} sqrt(F-hat (1 - F-hat) / n). Ignores the
/// estimation error of the pseudo ITEs; kept as a comparator.
IntervalResult naive_ci_cdf(const Ecdf& values, double v, double alpha);

struct GaussianSummary {
  double tau = 0.0;
  std::size_t n = 0;
  std::size_t reps = 0;
  double truth = 0.0;
  double v_q = 0.0;  // V1~ + V2~
  std::vector<double> estimates;
  std::vector<double> standardized;
  double mean = 0.0;
  double variance = 0.0;
  double skewness = 0.0;
  double excess_kurtosis = 0.0;
  std::vector<double> bin_edges;
  std::vector<std::size_t> bin_counts;
};

/// Standardized draws (Q-hat(tau) - Q(tau)) sqrt(n / V_Q(tau)) over reps
/// generated samples. Throws std::invalid_argument when reps < 30.
GaussianSummary gaussian_diagnostic(double tau, std::size_t n, std::size_t reps,
                                    std::uint64_t seed, std::size_t threads = 1,
                                    std::size_t bins = 30);

enum class Method {
  kPercentile,      // BP
  kNaive,           // NAI
  kConstantWidth,
  kVariableWidth,
  kInterpolatedBp,  // pointwise percentile intervals read as a band
};

const char* to_string(Method method);

struct CoverageStudy {
  std::size_t n = 250;
  std::size_t reps = 300;
  std::size_t B = 200;
  std::uint64_t seed = 0;
  std::size_t max_redraws = 100;
  std::size_t threads = 1;
  std::vector<double> levels = {0.95};  // nominal 1 - alpha

  std::vector<double> cdf_points;    // pointwise CDF targets
  std::vector<double> tau_points;    // pointwise quantile targets
  bool iqr = false;
  std::optional<Grid> cdf_grid;      // CDF band target
  std::optional<Grid> quantile_grid; // quantile band target

  bool naive = true;                 // NAI next to BP for CDF points
  bool interpolated_bp = true;       // next to the CDF bands
  bool variable_width = true;        // next to constant-width bands

  void validate() const;
};

struct CoverageReport {
  std::string target;  // "cdf", "quantile", "iqr", "cdf_band", "quantile_band"
  double at = 0.0;     // v or tau for point targets
  double range_lower = 0.0;
  double range_upper = 0.0;
  Method method = Method::kPercentile;
  double nominal = 0.95;
  double coverage = 0.0;
  double mean_length = 0.0;  // CIL for intervals, CBW for bands
  double mc_standard_error = 0.0;
  std::size_t reps = 0;      // successful Monte Carlo reps
  std::size_t failures = 0;  // reps lost to replication errors
  std::size_t B = 0;
  std::size_t n = 0;
  std::size_t redraws = 0;
};

std::vector<CoverageReport> run_coverage(const CoverageStudy& study);

/// Table layout: one row per (target, method) with CP and CIL/CBW columns
/// for every nominal level.
void write_coverage_csv(std::ostream& out, const std::vector<CoverageReport>& rows);

/// Plot data for the variance curves: tau, V1~, V2~.
void write_variance_curve_csv(std::ostream& out, const Grid& levels);

/// Plot data for the Gaussian diagnostic: moments, standardized draws and
/// histogram bins, one block per level.
void write_gaussian_csv(std::ostream& out, const std::vector<GaussianSummary>& summaries);

/// The generated sample as CSV (columns y,d,z and g when present).
void write_sample_csv(std::ostream& out, const GeneratedSample& generated);

}  // namespace itedist::bench
