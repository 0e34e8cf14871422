#pragma once

// Independent reference implementations used by the unit and acceptance
// tests. Nothing here calls into the code it is meant to check.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include "itedist/data_model.hpp"
#include "itedist/rng.hpp"

namespace oracles {

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

/// Objective by a direct loop over the cell, dropping `skip` from the sums
/// and from its z-margin count.
inline double naive_objective(const itedist::Sample& s, const itedist::CovariateKey& cell, int d,
                              std::optional<std::size_t> skip, double t, double y) {
  double sum[2] = {0.0, 0.0};  // index 0: Z = d, 1: Z = d'
  double count[2] = {0.0, 0.0};
  for (std::size_t j = 0; j < s.size(); ++j) {
    if (skip && *skip == j) continue;
    if (s.key(j) != cell) continue;
    const int side = s.z(j) == d ? 0 : 1;
    count[side] += 1.0;
    if (s.d(j) == d) {
      sum[side] += std::fabs(s.y(j) - t);
    } else {
      const double sign = s.y(j) - y > 0.0 ? 1.0 : -1.0;
      sum[side] -= sign * t;
    }
  }
  return sum[0] / count[0] - sum[1] / count[1];
}

/// Outcome rounded to a multiple of 2^-10 so affine maps by powers of two
/// and small integers stay exact.
inline double dyadic(double y) { return std::round(y * 1024.0) / 1024.0; }

/// Random single-covariate sample whose cells all pass the leave-one-out
/// checks: every z-margin has at least two rows and both treatments occur.
/// `ties` draws outcomes from a small lattice so repeated values occur.
inline itedist::Sample random_instance(itedist::Stream& rng, std::size_t max_per_cell,
                                       std::size_t cells, bool ties) {
  std::vector<double> y;
  std::vector<int> d;
  std::vector<int> z;
  std::vector<std::int64_t> x;
  for (std::size_t c = 0; c < cells; ++c) {
    const std::size_t n = 6 + rng.below(max_per_cell - 5);
    std::vector<int> dz(n), zz(n);
    for (;;) {
      std::size_t margin[2] = {0, 0};
      bool treated[2] = {false, false};
      for (std::size_t i = 0; i < n; ++i) {
        zz[i] = static_cast<int>(rng.below(2));
        dz[i] = static_cast<int>(rng.below(2));
        ++margin[zz[i]];
        treated[dz[i]] = true;
      }
      if (margin[0] >= 2 && margin[1] >= 2 && treated[0] && treated[1]) break;
    }
    for (std::size_t i = 0; i < n; ++i) {
      const double v = ties ? static_cast<double>(rng.below(8)) * 0.5
                            : dyadic(4.0 * rng.uniform() + dz[i]);
      y.push_back(v);
      d.push_back(dz[i]);
      z.push_back(zz[i]);
      x.push_back(static_cast<std::int64_t>(c));
    }
  }
  return itedist::Sample(std::move(y), std::move(d), std::move(z), std::move(x), {"x"});
}

/// Order statistic with rank ceil(p n) computed in exact rational arithmetic
/// for p = num / den.
inline double exact_order_statistic(std::vector<double> v, std::uint64_t num, std::uint64_t den) {
  std::sort(v.begin(), v.end());
  const std::uint64_t n = v.size();
  std::uint64_t rank = (num * n + den - 1) / den;
  rank = std::clamp<std::uint64_t>(rank, 1, n);
  return v[rank - 1];
}

inline double normal_quantile(double p) {
  double lo = -40.0, hi = 40.0;
  for (int k = 0; k < 200; ++k) {
    const double mid = 0.5 * (lo + hi);
    (normal_cdf(mid) < p ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

/// Estimation-error part of the quantile variance for the benchmark design,
/// derived by hand: with u = Phi^{-1}(tau), s = 0.3 u / sqrt(0.91),
///   complier density  f = 2 Phi(-s)
///   Pr[D=1 | eps]     P1 = 1/2 + Phi(s)/2,   Pr[D=0 | eps] P0 = Phi(-s)/2
///   varsigma_0 = f / (4 (1 + tau)),          varsigma_1 = f / (6 (1 + tau)^2)
///   V2~ = 4 tau (1 - tau) (P1 / varsigma_0 + P0 / varsigma_1)^2.
inline double v2_tilde_closed(double tau) {
  const double s = 0.3 * normal_quantile(tau) / std::sqrt(0.91);
  const double f = 2.0 * normal_cdf(-s);
  const double p1 = 0.5 + 0.5 * normal_cdf(s);
  const double p0 = 0.5 * normal_cdf(-s);
  const double vs0 = f / (4.0 * (1.0 + tau));
  const double vs1 = f / (6.0 * (1.0 + tau) * (1.0 + tau));
  const double w = p1 / vs0 + p0 / vs1;
  return 4.0 * tau * (1.0 - tau) * w * w;
}

}  // namespace oracles
