#pragma once

namespace itedist {

double normal_cdf(double x);
double normal_pdf(double x);
/// Standard normal quantile; p must lie in (0, 1).
double normal_quantile(double p);

/// z_{0.75} - z_{0.25}.
inline constexpr double kNormalQuartileSpread = 1.3489795003921634;

}  // namespace itedist
