#include "itedist/benchmark.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <iomanip>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>
#include <tuple>

#include "itedist/counterfactual.hpp"
#include "itedist/error.hpp"
#include "itedist/normal.hpp"
#include "itedist/parallel.hpp"

namespace itedist::bench {

void DgpConfig::validate() const {
  if (!(std::abs(rho) < 1.0)) throw ConfigError("latent correlation must satisfy |rho| < 1");
  if (!std::isfinite(intercept) || !std::isfinite(slope)) {
    throw ConfigError("selection coefficients must be finite");
  }
}

GeneratedSample generate(std::size_t n, Stream& stream, const DgpConfig& cfg,
                         bool split_covariate) {
  cfg.validate();
  if (n == 0) throw std::invalid_argument("sample size must be positive");
  const double s = std::sqrt(1.0 - cfg.rho * cfg.rho);
  GeneratedSample out;
  out.epsilon.resize(n);
  out.eta.resize(n);
  std::vector<double> y(n);
  std::vector<int> d(n);
  std::vector<int> z(n);
  std::vector<std::int64_t> g;
  if (split_covariate) g.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double u = stream.normal();
    const double v = cfg.rho * u + s * stream.normal();
    const double noise = stream.normal();
    const double eps = normal_cdf(u);
    const double eta = normal_cdf(v);
    z[i] = noise > 0.0 ? 1 : 0;
    d[i] = cfg.intercept + cfg.slope * z[i] + eta >= 0.0 ? 1 : 0;
    y[i] = std::pow(1.0 + eps, 2.0 + d[i]);
    out.epsilon[i] = eps;
    out.eta[i] = eta;
    if (split_covariate) g[i] = static_cast<std::int64_t>(stream() >> 63);
  }
  std::vector<std::string> names;
  if (split_covariate) names.push_back("g");
  out.sample = Sample(std::move(y), std::move(d), std::move(z), std::move(g), std::move(names));
  return out;
}

std::vector<double> true_ites(const GeneratedSample& generated) {
  std::vector<double> out(generated.epsilon.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = oracle::ite(generated.epsilon[i]);
  return out;
}

// ---------------------------------------------------------------------------

namespace oracle {

double ite(double e) { return e * (1.0 + e) * (1.0 + e); }

double ite_derivative(double e) { return (1.0 + e) * (1.0 + 3.0 * e); }

double ite_inverse(double v) {
  if (!(v >= 0.0 && v <= 4.0)) throw std::invalid_argument("ITE value outside [0, 4]");
  double lo = 0.0;
  double hi = 1.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (ite(mid) < v) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return std::abs(ite(lo) - v) <= std::abs(ite(hi) - v) ? lo : hi;
}

double cdf(double v) {
  if (v <= 0.0) return 0.0;
  if (v >= 4.0) return 1.0;
  return ite_inverse(v);
}

double quantile(double tau) {
  if (!(tau > 0.0 && tau < 1.0)) throw std::invalid_argument("level outside (0, 1)");
  return tau * (1.0 + tau) * (1.0 + tau);
}

double density(double v) {
  if (v < 0.0 || v > 4.0) return 0.0;
  return 1.0 / ite_derivative(ite_inverse(v));
}

double iqr() { return quantile(0.75) - quantile(0.25); }

double phi(int d, double y) {
  if (!(y >= 1.0)) throw std::invalid_argument("outcome outside the support");
  return d == 1 ? std::pow(y, 1.5) : std::pow(y, 2.0 / 3.0);
}

}  // namespace oracle

// ---------------------------------------------------------------------------

namespace theory {

namespace {

const DgpConfig kDesign{};

// Instrument-specific treatment thresholds on eta: D = 1 iff eta >= c_z.
double threshold(int z) {
  return std::clamp(-(kDesign.intercept + kDesign.slope * z), 0.0, 1.0);
}

// Pr[eta >= c | eps = e] under the bivariate normal latent structure.
double prob_eta_above(double c, double e) {
  if (c <= 0.0) return 1.0;
  if (c >= 1.0) return 0.0;
  const double s = std::sqrt(1.0 - kDesign.rho * kDesign.rho);
  const double u = normal_quantile(e);
  return 1.0 - normal_cdf((normal_quantile(c) - kDesign.rho * u) / s);
}

double level_of(double v) { return oracle::ite_inverse(v); }

void check_level(double tau) {
  if (!(tau > 0.0 && tau < 1.0)) throw std::invalid_argument("level outside (0, 1)");
}

}  // namespace

double v1(double v) {
  const double f = oracle::cdf(v);
  return f * (1.0 - f);
}

double complier_density(double e) {
  const double c1 = threshold(1);
  const double c0 = threshold(0);
  const double share = c0 - c1;
  return (prob_eta_above(c1, e) - prob_eta_above(c0, e)) / share;
}

double prob_treated(int d, double e) {
  const double p = oracle::kInstrumentProbability;
  const double treated = p * prob_eta_above(threshold(1), e) +
                         (1.0 - p) * prob_eta_above(threshold(0), e);
  return d == 1 ? treated : 1.0 - treated;
}

double first_stage(int d) {
  const double treated = threshold(0) - threshold(1);
  return d == 1 ? treated : -treated;
}

double zeta(int d, double y) {
  const double power = 2.0 + d;
  const double e = std::pow(y, 1.0 / power) - 1.0;
  const double jacobian = power * std::pow(1.0 + e, power - 1.0);
  return complier_density(e) / jacobian * first_stage(d);
}

double varsigma(int d, double e) {
  const double sign = d == 1 ? 1.0 : -1.0;
  return sign * zeta(d, std::pow(1.0 + e, 2.0 + d));
}

double rho(int d, double v) {
  const double e = level_of(v);
  return prob_treated(d, e) / oracle::ite_derivative(e);
}

double omega(double v) {
  const double e = level_of(v);
  double total = 0.0;
  for (int d = 0; d < 2; ++d) total += std::abs(rho(1 - d, v)) / varsigma(d, e);
  return -total;
}

double v2(double v) {
  const double e = level_of(v);
  const double p = oracle::kInstrumentProbability;
  const double w = omega(v);
  return w * w * e * (1.0 - e) * (1.0 / p + 1.0 / (1.0 - p));
}

double v1_tilde(double tau) {
  check_level(tau);
  const double q = oracle::quantile(tau);
  const double f = oracle::density(q);
  return v1(q) / (f * f);
}

double v2_tilde(double tau) {
  check_level(tau);
  const double q = oracle::quantile(tau);
  const double f = oracle::density(q);
  return v2(q) / (f * f);
}

double v1_tilde_closed(double tau) {
  check_level(tau);
  const double a = 1.0 + tau;
  const double b = 1.0 + 3.0 * tau;
  return tau * (1.0 - tau) * a * a * b * b;
}

}  // namespace theory

TheoryVariance theory_variance(double tau) {
  return {theory::v1_tilde(tau), theory::v2_tilde(tau)};
}

// ---------------------------------------------------------------------------

namespace {

std::uint64_t generate_key(std::uint64_t seed, std::size_t rep) {
  return derive_key(seed, {static_cast<std::uint64_t>(StreamTag::kGenerate), rep});
}

std::uint64_t bootstrap_seed(std::uint64_t seed, std::size_t rep) {
  return derive_key(seed, {static_cast<std::uint64_t>(StreamTag::kMonteCarlo), rep});
}

double sample_variance(const std::vector<double>& x) {
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(x.size());
  double ss = 0.0;
  for (double v : x) ss += (v - mean) * (v - mean);
  return ss / static_cast<double>(x.size() - 1);
}

}  // namespace

std::vector<VarianceDifference> brute_force_variance_difference(const std::vector<double>& taus,
                                                                std::size_t n, std::size_t reps,
                                                                std::uint64_t seed,
                                                                std::size_t threads) {
  if (reps < 2) throw std::invalid_argument("need at least 2 replications");
  for (double tau : taus) {
    if (!(tau > 0.0 && tau < 1.0)) throw std::invalid_argument("level outside (0, 1)");
  }
  const std::size_t T = taus.size();
  std::vector<std::vector<double>> feasible(T, std::vector<double>(reps));
  std::vector<std::vector<double>> infeasible(T, std::vector<double>(reps));
  parallel_for(reps, threads, [&](std::size_t rep) {
    Stream stream(generate_key(seed, rep));
    const GeneratedSample g = generate(n, stream);
    const Ecdf hat(pseudo_ite_values(g.sample, estimate_bounds(g.sample)));
    const Ecdf tilde(true_ites(g));
    for (std::size_t k = 0; k < T; ++k) {
      feasible[k][rep] = hat.quantile(taus[k]);
      infeasible[k][rep] = tilde.quantile(taus[k]);
    }
  });

  std::vector<VarianceDifference> out(T);
  const double scale = static_cast<double>(n);
  for (std::size_t k = 0; k < T; ++k) {
    auto& r = out[k];
    r.tau = taus[k];
    r.n_var_feasible = scale * sample_variance(feasible[k]);
    r.n_var_infeasible = scale * sample_variance(infeasible[k]);
    r.difference = r.n_var_feasible - r.n_var_infeasible;

    double ma = 0.0;
    double mb = 0.0;
    for (std::size_t i = 0; i < reps; ++i) {
      ma += feasible[k][i];
      mb += infeasible[k][i];
    }
    ma /= static_cast<double>(reps);
    mb /= static_cast<double>(reps);
    std::vector<double> w(reps);
    for (std::size_t i = 0; i < reps; ++i) {
      const double a = feasible[k][i] - ma;
      const double b = infeasible[k][i] - mb;
      w[i] = a * a - b * b;
    }
    r.standard_error = scale * std::sqrt(sample_variance(w) / static_cast<double>(reps));
  }
  return out;
}

IntervalResult naive_ci_cdf(const Ecdf& values, double v, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha must lie in (0, 1)");
  const double f = values.cdf(v);
  const double se = std::sqrt(f * (1.0 - f) / static_cast<double>(values.size()));
  const double z = normal_quantile(1.0 - alpha / 2.0);
  IntervalResult out;
  out.target = TargetKind::kCdf;
  out.at = v;
  out.estimate = f;
  out.lower = f - z * se;
  out.upper = f + z * se;
  out.alpha = alpha;
  return out;
}

GaussianSummary gaussian_diagnostic(double tau, std::size_t n, std::size_t reps,
                                    std::uint64_t seed, std::size_t threads, std::size_t bins) {
  if (reps < 30) throw std::invalid_argument("the Gaussian diagnostic needs at least 30 reps");
  if (bins == 0) throw std::invalid_argument("histogram needs at least one bin");
  GaussianSummary s;
  s.tau = tau;
  s.n = n;
  s.reps = reps;
  s.truth = oracle::quantile(tau);
  const TheoryVariance tv = theory_variance(tau);
  s.v_q = tv.v1_tilde + tv.v2_tilde;

  s.estimates.resize(reps);
  parallel_for(reps, threads, [&](std::size_t rep) {
    Stream stream(generate_key(seed, rep));
    const GeneratedSample g = generate(n, stream);
    s.estimates[rep] = quantile(pseudo_ite_values(g.sample, estimate_bounds(g.sample)), tau);
  });

  const double factor = std::sqrt(static_cast<double>(n) / s.v_q);
  s.standardized.resize(reps);
  for (std::size_t i = 0; i < reps; ++i) s.standardized[i] = (s.estimates[i] - s.truth) * factor;

  const double r = static_cast<double>(reps);
  double mean = 0.0;
  for (double x : s.standardized) mean += x;
  mean /= r;
  double m2 = 0.0;
  double m3 = 0.0;
  double m4 = 0.0;
  for (double x : s.standardized) {
    const double dx = x - mean;
    m2 += dx * dx;
    m3 += dx * dx * dx;
    m4 += dx * dx * dx * dx;
  }
  s.mean = mean;
  s.variance = m2 / (r - 1.0);
  m2 /= r;
  m3 /= r;
  m4 /= r;
  s.skewness = m2 > 0.0 ? m3 / std::pow(m2, 1.5) : 0.0;
  s.excess_kurtosis = m2 > 0.0 ? m4 / (m2 * m2) - 3.0 : 0.0;

  const double lo = -4.0;
  const double width = 8.0 / static_cast<double>(bins);
  s.bin_edges.resize(bins + 1);
  for (std::size_t b = 0; b <= bins; ++b) s.bin_edges[b] = lo + width * static_cast<double>(b);
  s.bin_counts.assign(bins, 0);
  for (double x : s.standardized) {
    const double pos = std::floor((x - lo) / width);
    const auto b = static_cast<std::size_t>(std::clamp(pos, 0.0, static_cast<double>(bins - 1)));
    ++s.bin_counts[b];
  }
  return s;
}

// ---------------------------------------------------------------------------
// Coverage studies

const char* to_string(Method method) {
  switch (method) {
    case Method::kPercentile: return "BP";
    case Method::kNaive: return "NAI";
    case Method::kConstantWidth: return "constant_width";
    case Method::kVariableWidth: return "variable_width";
    case Method::kInterpolatedBp: return "interpolated_BP";
  }
  return "unknown";
}

void CoverageStudy::validate() const {
  if (n < 4) throw ConfigError("sample size must be at least 4");
  if (reps == 0) throw ConfigError("reps must be at least 1");
  if (B < 2) throw ConfigError("bootstrap replications must be at least 2");
  if (levels.empty()) throw ConfigError("no nominal levels requested");
  for (double l : levels) {
    if (!(l > 0.0 && l < 1.0)) throw ConfigError("nominal levels must lie in (0, 1)");
  }
  for (double t : tau_points) {
    if (!(t > 0.0 && t < 1.0)) throw ConfigError("quantile levels must lie in (0, 1)");
  }
  for (double v : cdf_points) {
    if (!std::isfinite(v)) throw ConfigError("CDF points must be finite");
  }
  if (cdf_grid && cdf_grid->kind != GridKind::kValues) throw ConfigError("CDF band needs a value grid");
  if (quantile_grid && quantile_grid->kind != GridKind::kLevels) {
    throw ConfigError("quantile band needs a level grid");
  }
  if (cdf_points.empty() && tau_points.empty() && !iqr && !cdf_grid && !quantile_grid) {
    throw ConfigError("coverage study has no targets");
  }
}

namespace {

struct Slot {
  std::string target;
  double at = 0.0;
  double range_lower = 0.0;
  double range_upper = 0.0;
  Method method = Method::kPercentile;
  double nominal = 0.95;
};

struct Outcome {
  bool covered = false;
  double length = 0.0;
};

std::vector<Slot> study_slots(const CoverageStudy& s) {
  std::vector<Slot> slots;
  for (double v : s.cdf_points) {
    for (double l : s.levels) slots.push_back({"cdf", v, v, v, Method::kPercentile, l});
    if (s.naive) {
      for (double l : s.levels) slots.push_back({"cdf", v, v, v, Method::kNaive, l});
    }
  }
  if (s.cdf_grid) {
    const double lo = s.cdf_grid->lower();
    const double hi = s.cdf_grid->upper();
    for (double l : s.levels) slots.push_back({"cdf_band", 0.0, lo, hi, Method::kConstantWidth, l});
    if (s.variable_width) {
      for (double l : s.levels) slots.push_back({"cdf_band", 0.0, lo, hi, Method::kVariableWidth, l});
    }
    if (s.interpolated_bp) {
      for (double l : s.levels) slots.push_back({"cdf_band", 0.0, lo, hi, Method::kInterpolatedBp, l});
    }
  }
  for (double t : s.tau_points) {
    for (double l : s.levels) slots.push_back({"quantile", t, t, t, Method::kPercentile, l});
  }
  if (s.iqr) {
    for (double l : s.levels) slots.push_back({"iqr", 0.0, 0.25, 0.75, Method::kPercentile, l});
  }
  if (s.quantile_grid) {
    const double lo = s.quantile_grid->lower();
    const double hi = s.quantile_grid->upper();
    for (double l : s.levels) {
      slots.push_back({"quantile_band", 0.0, lo, hi, Method::kConstantWidth, l});
    }
    if (s.variable_width) {
      for (double l : s.levels) {
        slots.push_back({"quantile_band", 0.0, lo, hi, Method::kVariableWidth, l});
      }
    }
  }
  return slots;
}

Outcome interval_outcome(const IntervalResult& ci, double truth) {
  return {ci.lower <= truth && truth <= ci.upper, ci.upper - ci.lower};
}

Outcome band_outcome(const BandResult& band, const std::vector<double>& truth) {
  return {band.covers(truth), band.average_width()};
}

Outcome evaluate(const Slot& slot, const BootstrapDistribution& dist, const CoverageStudy& s,
                 const std::vector<double>& cdf_truth, const std::vector<double>& q_truth) {
  const double alpha = 1.0 - slot.nominal;
  if (slot.target == "cdf") {
    const double truth = oracle::cdf(slot.at);
    if (slot.method == Method::kNaive) {
      return interval_outcome(naive_ci_cdf(dist.estimate(), slot.at, alpha), truth);
    }
    return interval_outcome(ci_cdf(dist, slot.at, alpha), truth);
  }
  if (slot.target == "quantile") {
    return interval_outcome(ci_quantile(dist, slot.at, alpha), oracle::quantile(slot.at));
  }
  if (slot.target == "iqr") return interval_outcome(ci_iqr(dist, alpha), oracle::iqr());
  if (slot.target == "cdf_band") {
    const Grid& grid = *s.cdf_grid;
    if (slot.method == Method::kInterpolatedBp) {
      Outcome out{true, 0.0};
      for (std::size_t k = 0; k < grid.size(); ++k) {
        const IntervalResult ci = ci_cdf(dist, grid.points[k], alpha);
        if (cdf_truth[k] < ci.lower || cdf_truth[k] > ci.upper) out.covered = false;
        out.length += ci.upper - ci.lower;
      }
      out.length /= static_cast<double>(grid.size());
      return out;
    }
    const BandKind kind =
        slot.method == Method::kVariableWidth ? BandKind::kVariable : BandKind::kConstant;
    return band_outcome(ucb_cdf(dist, grid, alpha, kind), cdf_truth);
  }
  const BandKind kind =
      slot.method == Method::kVariableWidth ? BandKind::kVariable : BandKind::kConstant;
  return band_outcome(ucb_quantile(dist, *s.quantile_grid, alpha, kind), q_truth);
}

}  // namespace

std::vector<CoverageReport> run_coverage(const CoverageStudy& study) {
  study.validate();
  const std::vector<Slot> slots = study_slots(study);

  std::vector<double> cdf_truth;
  if (study.cdf_grid) {
    for (double v : study.cdf_grid->points) cdf_truth.push_back(oracle::cdf(v));
  }
  std::vector<double> q_truth;
  if (study.quantile_grid) {
    for (double t : study.quantile_grid->points) q_truth.push_back(oracle::quantile(t));
  }

  struct RepResult {
    bool failed = false;
    std::size_t redraws = 0;
    std::vector<Outcome> outcomes;
  };
  std::vector<RepResult> results(study.reps);

  parallel_for(study.reps, study.threads, [&](std::size_t rep) {
    Stream stream(generate_key(study.seed, rep));
    const GeneratedSample g = generate(study.n, stream);
    BootstrapConfig cfg;
    cfg.B = study.B;
    cfg.seed = bootstrap_seed(study.seed, rep);
    cfg.max_redraws = study.max_redraws;
    cfg.threads = 1;
    RepResult& out = results[rep];
    try {
      const Bounds bounds = estimate_bounds(g.sample);
      const BootstrapDistribution dist = BootstrapDistribution::run(g.sample, bounds, cfg);
      out.redraws = dist.redraws();
      out.outcomes.reserve(slots.size());
      for (const Slot& slot : slots) {
        out.outcomes.push_back(evaluate(slot, dist, study, cdf_truth, q_truth));
      }
    } catch (const EstimabilityError&) {
      out.failed = true;
    } catch (const ReplicationError&) {
      out.failed = true;
    }
  });

  std::size_t ok = 0;
  std::size_t redraws = 0;
  for (const auto& r : results) {
    if (!r.failed) ++ok;
    redraws += r.redraws;
  }
  std::vector<CoverageReport> reports;
  reports.reserve(slots.size());
  for (std::size_t k = 0; k < slots.size(); ++k) {
    CoverageReport rep;
    rep.target = slots[k].target;
    rep.at = slots[k].at;
    rep.range_lower = slots[k].range_lower;
    rep.range_upper = slots[k].range_upper;
    rep.method = slots[k].method;
    rep.nominal = slots[k].nominal;
    rep.reps = ok;
    rep.failures = study.reps - ok;
    rep.B = study.B;
    rep.n = study.n;
    rep.redraws = redraws;
    if (ok > 0) {
      std::size_t covered = 0;
      double length = 0.0;
      for (const auto& r : results) {
        if (r.failed) continue;
        covered += r.outcomes[k].covered ? 1 : 0;
        length += r.outcomes[k].length;
      }
      rep.coverage = static_cast<double>(covered) / static_cast<double>(ok);
      rep.mean_length = length / static_cast<double>(ok);
      rep.mc_standard_error = std::sqrt(rep.coverage * (1.0 - rep.coverage) / static_cast<double>(ok));
    }
    reports.push_back(rep);
  }
  return reports;
}

// ---------------------------------------------------------------------------
// CSV output

namespace {

std::string fixed(double x, int digits) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(digits) << x;
  return s.str();
}

// Shortest text that reads back to the same double.
std::string full(double x) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, end);
}

}  // namespace

void write_coverage_csv(std::ostream& out, const std::vector<CoverageReport>& rows) {
  std::vector<double> levels;
  for (const auto& r : rows) {
    if (std::find(levels.begin(), levels.end(), r.nominal) == levels.end()) levels.push_back(r.nominal);
  }
  std::sort(levels.begin(), levels.end());

  // Group by (target, at, range, method), keeping first-appearance order.
  using Key = std::tuple<std::string, double, double, double, int>;
  std::vector<Key> order;
  std::map<Key, std::map<double, const CoverageReport*>> table;
  for (const auto& r : rows) {
    Key key{r.target, r.at, r.range_lower, r.range_upper, static_cast<int>(r.method)};
    if (!table.contains(key)) order.push_back(key);
    table[key][r.nominal] = &r;
  }

  out << "target,at,range_lower,range_upper,n,method";
  for (double l : levels) out << ",cp_" << fixed(l, 2);
  for (double l : levels) out << ",length_" << fixed(l, 2);
  for (double l : levels) out << ",mc_se_" << fixed(l, 2);
  out << ",reps,failures,B,redraws\n";
  for (const Key& key : order) {
    const auto& cells = table[key];
    const CoverageReport& first = *cells.begin()->second;
    out << first.target << ',' << full(first.at) << ',' << full(first.range_lower) << ','
        << full(first.range_upper) << ',' << first.n << ',' << to_string(first.method);
    for (double l : levels) {
      auto it = cells.find(l);
      out << ',' << (it == cells.end() ? std::string() : fixed(it->second->coverage, 4));
    }
    for (double l : levels) {
      auto it = cells.find(l);
      out << ',' << (it == cells.end() ? std::string() : fixed(it->second->mean_length, 4));
    }
    for (double l : levels) {
      auto it = cells.find(l);
      out << ',' << (it == cells.end() ? std::string() : fixed(it->second->mc_standard_error, 4));
    }
    out << ',' << first.reps << ',' << first.failures << ',' << first.B << ',' << first.redraws
        << '\n';
  }
}

void write_variance_curve_csv(std::ostream& out, const Grid& levels) {
  out << "tau,v1_tilde,v2_tilde,v_q\n";
  for (double tau : levels.points) {
    const TheoryVariance tv = theory_variance(tau);
    out << full(tau) << ',' << full(tv.v1_tilde) << ',' << full(tv.v2_tilde) << ','
        << full(tv.v1_tilde + tv.v2_tilde) << '\n';
  }
}

void write_gaussian_csv(std::ostream& out, const std::vector<GaussianSummary>& summaries) {
  out << "tau,n,kind,index,value,lower,upper,count\n";
  for (const GaussianSummary& s : summaries) {
    const std::string head = full(s.tau) + ',' + std::to_string(s.n) + ',';
    const std::pair<const char*, double> moments[] = {
        {"truth", s.truth},       {"v_q", s.v_q},           {"mean", s.mean},
        {"variance", s.variance}, {"skewness", s.skewness}, {"excess_kurtosis", s.excess_kurtosis}};
    for (const auto& [name, value] : moments) out << head << name << ",," << full(value) << ",,,\n";
    for (std::size_t i = 0; i < s.standardized.size(); ++i) {
      out << head << "draw," << i << ',' << full(s.standardized[i]) << ",,,\n";
    }
    for (std::size_t b = 0; b < s.bin_counts.size(); ++b) {
      out << head << "bin," << b << ",," << full(s.bin_edges[b]) << ',' << full(s.bin_edges[b + 1])
          << ',' << s.bin_counts[b] << '\n';
    }
  }
}

void write_sample_csv(std::ostream& out, const GeneratedSample& generated) {
  const Sample& s = generated.sample;
  out << "y,d,z";
  for (const auto& name : s.covariate_names()) out << ',' << name;
  out << '\n';
  for (std::size_t i = 0; i < s.size(); ++i) {
    out << full(s.y(i)) << ',' << s.d(i) << ',' << s.z(i);
    for (std::int64_t v : s.x(i)) out << ',' << v;
    out << '\n';
  }
}

}  // namespace itedist::bench
