#pragma once

#include <cmath>
#include <numbers>

namespace copvi::num {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kLog2Pi = 1.8378770664093454835606594728112;
inline constexpr double kSqrt2 = std::numbers::sqrt2;

inline double norm_logpdf(double x) { return -0.5 * kLog2Pi - 0.5 * x * x; }
inline double norm_pdf(double x) { return std::exp(norm_logpdf(x)); }

double norm_cdf(double x);
double norm_quantile(double p);

// log Phi(x), accurate far into the lower tail.
double log_norm_cdf(double x);

// phi(x) / Phi(x), stable for large negative x.
double inverse_mills(double x);

inline double logistic(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

inline double logit(double p) { return std::log(p) - std::log1p(-p); }

inline double softplus(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

// Inverse of softplus for y > 0.
inline double softplus_inverse(double y) {
  return y > 30.0 ? y + std::log(-std::expm1(-y)) : std::log(std::expm1(y));
}

// log K_nu(x) for x > 0. Orders above 50 use the uniform (Debye) expansion;
// lower orders use boost's Temme/Steed evaluation with a log-domain integral
// fallback when that under- or overflows.
double log_bessel_k(double nu, double x);

// Upper-tail chi-squared quantile: the value c with P(X > c) = q,
// X ~ chi^2(dof).
double chi2_upper_quantile(double dof, double q);

}  // namespace copvi::num
