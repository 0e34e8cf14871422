#include "itedist/counterfactual.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "itedist/error.hpp"

namespace itedist {

ObjectiveContext::ObjectiveContext(const Sample& sample, const CovariateKey& cell, int d,
                                   const Bounds& bounds)
    : d_(d), cell_(cell), bounds_(bounds.at(d, cell)) {
  if (d != 0 && d != 1) throw std::invalid_argument("target treatment must be 0 or 1");
  auto it = sample.cells().find(cell);
  if (it == sample.cells().end()) {
    throw EstimabilityError("cell x=" + format_key(cell) + " has no observations");
  }
  rows_ = it->second;
  row_y_.reserve(rows_.size());
  row_d_.reserve(rows_.size());
  row_z_.reserve(rows_.size());
  for (std::size_t i : rows_) {
    const int di = sample.d(i);
    const int zi = sample.z(i);
    row_y_.push_back(sample.y(i));
    row_d_.push_back(di);
    row_z_.push_back(zi);
    const bool kink = di == d;
    const bool same = zi == d;
    const Group g = kink ? (same ? Group::kKinkSame : Group::kKinkOther)
                         : (same ? Group::kSignSame : Group::kSignOther);
    sorted_[index(g)].push_back(sample.y(i));
    if (same) {
      ++n_same_;
    } else {
      ++n_other_;
    }
  }
  if (n_same_ == 0 || n_other_ == 0) {
    throw EstimabilityError("cell x=" + format_key(cell) + " has no Z=" +
                            std::to_string(n_same_ == 0 ? d : 1 - d) + " observations");
  }
  for (std::size_t g = 0; g < 4; ++g) {
    auto& v = sorted_[g];
    std::sort(v.begin(), v.end());
    auto& p = prefix_[g];
    p.assign(v.size() + 1, 0.0);
    for (std::size_t k = 0; k < v.size(); ++k) p[k + 1] = p[k] + v[k];
  }

  candidates_.push_back(bounds_.lower);
  for (Group g : {Group::kKinkSame, Group::kKinkOther}) {
    for (double y : sorted_[index(g)]) {
      if (y > bounds_.lower && y < bounds_.upper) candidates_.push_back(y);
    }
  }
  candidates_.push_back(bounds_.upper);
  std::sort(candidates_.begin(), candidates_.end());
  candidates_.erase(std::unique(candidates_.begin(), candidates_.end()), candidates_.end());
}

double ObjectiveContext::abs_sum(Group g, double t) const {
  const auto& v = sorted_[index(g)];
  const auto& p = prefix_[index(g)];
  const std::size_t m = v.size();
  const std::size_t below = static_cast<std::size_t>(std::upper_bound(v.begin(), v.end(), t) - v.begin());
  const double left = t * static_cast<double>(below) - p[below];
  const double right = (p[m] - p[below]) - t * static_cast<double>(m - below);
  return left + right;
}

std::int64_t ObjectiveContext::sign_sum(Group g, double y) const {
  const auto& v = sorted_[index(g)];
  const auto at_or_below = std::upper_bound(v.begin(), v.end(), y) - v.begin();
  return static_cast<std::int64_t>(v.size()) - 2 * static_cast<std::int64_t>(at_or_below);
}

std::optional<ObjectiveContext::Removal> ObjectiveContext::removal(
    std::optional<std::size_t> row) const {
  if (!row) return std::nullopt;
  auto it = std::lower_bound(rows_.begin(), rows_.end(), *row);
  if (it == rows_.end() || *it != *row) {
    throw std::out_of_range("row " + std::to_string(*row) + " is not in cell x=" +
                            format_key(cell_));
  }
  const auto k = static_cast<std::size_t>(it - rows_.begin());
  return Removal{row_y_[k], row_d_[k], row_z_[k]};
}

void ObjectiveContext::denominators(const std::optional<Removal>& r, std::int64_t& ns,
                                    std::int64_t& no) const {
  ns = static_cast<std::int64_t>(n_same_);
  no = static_cast<std::int64_t>(n_other_);
  if (r) {
    if (r->z == d_) {
      --ns;
    } else {
      --no;
    }
  }
  if (ns == 0 || no == 0) {
    throw EstimabilityError("leave-one-out removal empties the Z=" +
                            std::to_string(ns == 0 ? d_ : 1 - d_) + " margin of cell x=" +
                            format_key(cell_));
  }
}

std::int64_t ObjectiveContext::slope(const std::optional<Removal>& r, std::int64_t ns,
                                     std::int64_t no, double y) const {
  std::int64_t s_same = sign_sum(Group::kSignSame, y);
  std::int64_t s_other = sign_sum(Group::kSignOther, y);
  if (r && r->d != d_) {
    const int own = sgn(r->y - y);
    if (r->z == d_) {
      s_same -= own;
    } else {
      s_other -= own;
    }
  }
  return ns * s_other - no * s_same;
}

double ObjectiveContext::kink_part(double t, std::int64_t ns, std::int64_t no) const {
  return static_cast<double>(no) * abs_sum(Group::kKinkSame, t) -
         static_cast<double>(ns) * abs_sum(Group::kKinkOther, t);
}

double ObjectiveContext::scaled(const std::optional<Removal>& r, std::int64_t ns, std::int64_t no,
                                std::int64_t c, double t) const {
  double kp;
  if (r && r->d == d_) {
    double a_same = abs_sum(Group::kKinkSame, t);
    double a_other = abs_sum(Group::kKinkOther, t);
    if (r->z == d_) {
      a_same -= std::abs(r->y - t);
    } else {
      a_other -= std::abs(r->y - t);
    }
    kp = static_cast<double>(no) * a_same - static_cast<double>(ns) * a_other;
  } else {
    kp = kink_part(t, ns, no);
  }
  return kp + static_cast<double>(c) * t;
}

double ObjectiveContext::value(std::optional<std::size_t> row, double t, double y) const {
  if (!(t >= bounds_.lower && t <= bounds_.upper)) {
    throw std::domain_error("t is outside the outcome bounds of the cell");
  }
  const auto r = removal(row);
  std::int64_t ns = 0;
  std::int64_t no = 0;
  denominators(r, ns, no);
  const std::int64_t c = slope(r, ns, no, y);
  return scaled(r, ns, no, c, t) / (static_cast<double>(ns) * static_cast<double>(no));
}

double ObjectiveContext::minimize(std::optional<std::size_t> row, double y) const {
  const auto r = removal(row);
  std::int64_t ns = 0;
  std::int64_t no = 0;
  denominators(r, ns, no);
  const std::int64_t c = slope(r, ns, no, y);

  // A removed D=d outcome stops being a kink unless another row shares it.
  std::optional<double> dropped;
  if (r && r->d == d_ && r->y > bounds_.lower && r->y < bounds_.upper) {
    std::size_t copies = 0;
    for (Group g : {Group::kKinkSame, Group::kKinkOther}) {
      const auto& v = sorted_[index(g)];
      copies += static_cast<std::size_t>(std::upper_bound(v.begin(), v.end(), r->y) -
                                         std::lower_bound(v.begin(), v.end(), r->y));
    }
    if (copies == 1) dropped = r->y;
  }

  double best = std::numeric_limits<double>::infinity();
  double arg = bounds_.lower;
  for (double t : candidates_) {
    if (dropped && t == *dropped) continue;
    const double h = scaled(r, ns, no, c, t);
    if (h < best) {
      best = h;
      arg = t;
    }
  }
  return arg;
}

void ObjectiveContext::minimize_own_outcomes(std::vector<std::size_t>& rows,
                                             std::vector<double>& minimizers) const {
  rows.clear();
  minimizers.clear();

  // Rows with D = d' never remove a kink, so the kink part depends on the
  // row only through which denominator it decrements.
  const std::size_t k_count = candidates_.size();
  std::vector<double> kp[2];
  std::int64_t ns_v[2];
  std::int64_t no_v[2];
  bool usable[2];
  for (int v = 0; v < 2; ++v) {
    ns_v[v] = static_cast<std::int64_t>(n_same_) - (v == 0 ? 1 : 0);
    no_v[v] = static_cast<std::int64_t>(n_other_) - (v == 1 ? 1 : 0);
    usable[v] = ns_v[v] > 0 && no_v[v] > 0;
    if (!usable[v]) continue;
    kp[v].resize(k_count);
    for (std::size_t k = 0; k < k_count; ++k) kp[v][k] = kink_part(candidates_[k], ns_v[v], no_v[v]);
  }

  const double* t = candidates_.data();
  for (std::size_t k = 0; k < rows_.size(); ++k) {
    if (row_d_[k] == d_) continue;
    const int v = row_z_[k] == d_ ? 0 : 1;
    if (!usable[v]) {
      throw EstimabilityError("leave-one-out removal empties the Z=" +
                              std::to_string(v == 0 ? d_ : 1 - d_) + " margin of cell x=" +
                              format_key(cell_));
    }
    const Removal r{row_y_[k], row_d_[k], row_z_[k]};
    const double c = static_cast<double>(slope(r, ns_v[v], no_v[v], r.y));
    const double* h = kp[v].data();
    double best = std::numeric_limits<double>::infinity();
    std::size_t arg = 0;
    for (std::size_t j = 0; j < k_count; ++j) {
      const double value = h[j] + c * t[j];
      if (value < best) {
        best = value;
        arg = j;
      }
    }
    rows.push_back(rows_[k]);
    minimizers.push_back(t[arg]);
  }
}

ObjectiveContext build_context(const Sample& sample, const CovariateKey& cell, int d,
                               const Bounds& bounds) {
  return ObjectiveContext(sample, cell, d, bounds);
}

double objective_value(const ObjectiveContext& ctx, std::optional<std::size_t> row, double t,
                       double y) {
  return ctx.value(row, t, y);
}

double minimize_objective(const ObjectiveContext& ctx, std::optional<std::size_t> row, double y) {
  return ctx.minimize(row, y);
}

namespace {

template <typename Sink>
void for_each_minimizer(const Sample& sample, const Bounds& bounds, Sink&& sink) {
  require_estimable(sample);
  std::vector<std::size_t> rows;
  std::vector<double> minimizers;
  for (const auto& [cell, cell_rows] : sample.cells()) {
    for (int d = 0; d < 2; ++d) {
      const ObjectiveContext ctx(sample, cell, d, bounds);
      ctx.minimize_own_outcomes(rows, minimizers);
      for (std::size_t k = 0; k < rows.size(); ++k) sink(rows[k], d, minimizers[k]);
    }
  }
}

double ite_from(double y, int observed_d, double phi) {
  return observed_d == 1 ? y - phi : phi - y;
}

}  // namespace

PseudoIteVector pseudo_ites(const Sample& sample, const Bounds& bounds) {
  PseudoIteVector out;
  const std::size_t n = sample.size();
  out.values.assign(n, 0.0);
  out.target.assign(n, 0);
  out.minimizer.assign(n, 0.0);
  for_each_minimizer(sample, bounds, [&](std::size_t i, int d, double phi) {
    out.target[i] = d;
    out.minimizer[i] = phi;
    out.values[i] = ite_from(sample.y(i), sample.d(i), phi);
  });
  return out;
}

std::vector<double> pseudo_ite_values(const Sample& sample, const Bounds& bounds) {
  std::vector<double> values(sample.size(), 0.0);
  for_each_minimizer(sample, bounds, [&](std::size_t i, int, double phi) {
    values[i] = ite_from(sample.y(i), sample.d(i), phi);
  });
  return values;
}

}  // namespace itedist
