#include "copvi/numerics.hpp"

#include <boost/math/distributions/normal.hpp>
#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/special_functions/bessel.hpp>
#include <boost/math/special_functions/erf.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <boost/math/tools/minima.hpp>

#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace copvi::num {

namespace {

// Asymptotic tail: Phi(x) ~ phi(x)/(-x) * (1 - 1/x^2 + 3/x^4 - ...), x << 0.
double log_tail_series(double x) {
  const double x2 = 1.0 / (x * x);
  double term = 1.0;
  double sum = 1.0;
  for (int k = 1; k <= 6; ++k) {
    term *= -(2.0 * k - 1.0) * x2;
    sum += term;
  }
  return std::log(sum);
}

double debye_log_bessel_k(double nu, double x) {
  const double z = x / nu;
  const double root = std::sqrt(1.0 + z * z);
  const double eta = root + std::log(z / (1.0 + root));
  const double p = 1.0 / root;
  const double p2 = p * p;
  const double p3 = p2 * p;
  const double p4 = p2 * p2;
  const double p6 = p4 * p2;
  const std::array<double, 5> u = {
      1.0,
      (3.0 * p - 5.0 * p3) / 24.0,
      (81.0 * p2 - 462.0 * p4 + 385.0 * p6) / 1152.0,
      p3 * (30375.0 - 369603.0 * p2 + 765765.0 * p4 - 425425.0 * p6) /
          414720.0,
      p4 *
          (4465125.0 - 94121676.0 * p2 + 349922430.0 * p4 -
           446185740.0 * p6 + 185910725.0 * p6 * p2) /
          39813120.0,
  };
  double series = 0.0;
  double scale = 1.0;
  for (std::size_t k = 0; k < u.size(); ++k) {
    series += (k % 2 == 0 ? 1.0 : -1.0) * u[k] / scale;
    scale *= nu;
  }
  return 0.5 * std::log(kPi / (2.0 * nu)) - nu * eta -
         0.25 * std::log1p(z * z) + std::log(series);
}

// log of int_0^inf exp(-x cosh t) cosh(nu t) dt, shifted by its maximum.
double integral_log_bessel_k(double nu, double x) {
  auto log_integrand = [nu, x](double t) {
    const double a = nu * t;
    // log cosh(a) without overflow
    const double log_cosh = std::abs(a) + std::log1p(std::exp(-2.0 * std::abs(a))) -
                            std::log(2.0);
    return -x * std::cosh(t) + log_cosh;
  };
  const double upper = std::asinh(nu / x) + 1e-12;
  double t_star = 0.0;
  if (nu > 0.0) {
    auto r = boost::math::tools::brent_find_minima(
        [&](double t) { return -log_integrand(t); }, 0.0, upper, 52);
    t_star = r.first;
  }
  const double peak = log_integrand(t_star);
  boost::math::quadrature::exp_sinh<double> integrator;
  const double value = integrator.integrate(
      [&](double t) { return std::exp(log_integrand(t) - peak); });
  return peak + std::log(value);
}

}  // namespace

double norm_cdf(double x) { return 0.5 * std::erfc(-x / kSqrt2); }

double norm_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw std::domain_error("norm_quantile: probability outside (0,1)");
  }
  return -kSqrt2 * boost::math::erfc_inv(2.0 * p);
}

double log_norm_cdf(double x) {
  if (x > -20.0) return std::log(norm_cdf(x));
  return norm_logpdf(x) - std::log(-x) + log_tail_series(x);
}

double inverse_mills(double x) {
  return std::exp(norm_logpdf(x) - log_norm_cdf(x));
}

double log_bessel_k(double nu, double x) {
  if (!(x > 0.0)) throw std::domain_error("log_bessel_k: argument must be > 0");
  nu = std::abs(nu);
  if (nu > 50.0) return debye_log_bessel_k(nu, x);
  double value = std::numeric_limits<double>::quiet_NaN();
  try {
    value = boost::math::cyl_bessel_k(nu, x);
  } catch (const std::exception&) {
    value = std::numeric_limits<double>::quiet_NaN();
  }
  if (std::isfinite(value) && value > std::numeric_limits<double>::min()) {
    return std::log(value);
  }
  return integral_log_bessel_k(nu, x);
}

double chi2_upper_quantile(double dof, double q) {
  if (!(q > 0.0 && q < 1.0)) {
    throw std::domain_error("chi2_upper_quantile: probability outside (0,1)");
  }
  return 2.0 * boost::math::gamma_q_inv(0.5 * dof, q);
}

}  // namespace copvi::num
