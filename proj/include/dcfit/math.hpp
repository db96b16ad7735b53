#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>

namespace dcfit {

// Logistic function, numerically stable for |x| up to at least 700 and
// clamped so the result stays strictly inside (0, 1).
inline double expit(double x) {
  if (!std::isfinite(x)) {
    throw std::domain_error("expit: non-finite input");
  }
  double p;
  if (x >= 0.0) {
    p = 1.0 / (1.0 + std::exp(-x));
  } else {
    const double e = std::exp(x);
    p = e / (1.0 + e);
  }
  if (p >= 1.0) p = 1.0 - std::numeric_limits<double>::epsilon() / 2.0;
  if (p <= 0.0) p = std::numeric_limits<double>::min();
  return p;
}

inline double logit(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw std::domain_error("logit: argument must lie in (0, 1)");
  }
  return std::log(p / (1.0 - p));
}

}  // namespace dcfit
