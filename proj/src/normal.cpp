#include "itedist/normal.hpp"

#include <boost/math/distributions/normal.hpp>

namespace itedist {

namespace {
const boost::math::normal_distribution<double> kStandard(0.0, 1.0);
}

double normal_cdf(double x) { return boost::math::cdf(kStandard, x); }

double normal_pdf(double x) { return boost::math::pdf(kStandard, x); }

double normal_quantile(double p) { return boost::math::quantile(kStandard, p); }

}  // namespace itedist
