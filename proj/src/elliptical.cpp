#include "copvi/elliptical.hpp"

#include "copvi/errors.hpp"
#include "copvi/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace copvi {

namespace {

// Quadratic forms below this are lifted to it for the Laplace kernel, whose
// density is singular at the origin for m >= 2.
constexpr double kLaplaceFloor = 1e-100;
constexpr double kQuantileRelStep = 1e-4;

void require_quadratic(double x, int m) {
  if (!(x >= 0.0)) throw std::domain_error("elliptical: quadratic form must be >= 0");
  if (m < 1) throw std::domain_error("elliptical: dimension must be >= 1");
}

double student_t_quantile(double u, double nu) {
  return nu / num::chi2_upper_quantile(nu, u);
}

}  // namespace

std::string_view to_string(FamilyKind kind) {
  switch (kind) {
    case FamilyKind::Gaussian:
      return "gaussian";
    case FamilyKind::StudentT:
      return "t";
    case FamilyKind::Laplace:
      return "laplace";
    case FamilyKind::ExpPower:
      return "exp-power";
  }
  return "gaussian";
}

FamilyKind family_kind_from_string(std::string_view name) {
  if (name == "gaussian") return FamilyKind::Gaussian;
  if (name == "t") return FamilyKind::StudentT;
  if (name == "laplace") return FamilyKind::Laplace;
  if (name == "exp-power") return FamilyKind::ExpPower;
  throw std::invalid_argument("unknown family: " + std::string(name));
}

double EllipticalFamily::nu() const { return std::exp(omega_raw); }
double EllipticalFamily::beta() const { return num::logistic(omega_raw); }

double EllipticalFamily::omega_chain() const {
  switch (kind) {
    case FamilyKind::StudentT:
      return nu();
    case FamilyKind::ExpPower: {
      const double b = beta();
      return b * (1.0 - b);
    }
    default:
      return 0.0;
  }
}

EllipticalFamily EllipticalFamily::gaussian() { return {FamilyKind::Gaussian, 0.0}; }
EllipticalFamily EllipticalFamily::student_t(double nu) {
  return {FamilyKind::StudentT, std::log(nu)};
}
EllipticalFamily EllipticalFamily::laplace() { return {FamilyKind::Laplace, 0.0}; }
EllipticalFamily EllipticalFamily::exp_power(double beta) {
  return {FamilyKind::ExpPower, num::logit(beta)};
}

double log_gtilde(double x, int m, const EllipticalFamily& fam) {
  require_quadratic(x, m);
  const double half_m = 0.5 * m;
  switch (fam.kind) {
    case FamilyKind::Gaussian:
      return -half_m * num::kLog2Pi - 0.5 * x;
    case FamilyKind::StudentT: {
      const double nu = fam.nu();
      return std::lgamma(0.5 * (nu + m)) - std::lgamma(0.5 * nu) -
             half_m * std::log(num::kPi * nu) - 0.5 * (nu + m) * std::log1p(x / nu);
    }
    case FamilyKind::Laplace: {
      const double xf = std::max(x, kLaplaceFloor);
      const double order = 0.5 * (2.0 - m);
      return std::log(2.0) - half_m * num::kLog2Pi + 0.5 * order * std::log(0.5 * xf) +
             num::log_bessel_k(order, std::sqrt(2.0 * xf));
    }
    case FamilyKind::ExpPower: {
      const double beta = fam.beta();
      const double a = 1.0 + m / (2.0 * beta);
      return std::log(static_cast<double>(m)) + std::lgamma(half_m) - std::lgamma(a) -
             half_m * std::log(num::kPi) - a * std::log(2.0) - 0.5 * std::pow(x, beta);
    }
  }
  return 0.0;
}

double gtilde_log_ratio(double x, int m, const EllipticalFamily& fam) {
  require_quadratic(x, m);
  switch (fam.kind) {
    case FamilyKind::Gaussian:
      return -0.5;
    case FamilyKind::StudentT: {
      const double nu = fam.nu();
      return -(nu + m) / (2.0 * nu) / (1.0 + x / nu);
    }
    case FamilyKind::Laplace: {
      // d/dx [(v/2) log(x/2) + log K_v(sqrt(2x))] = -K_{v-1}(s) / (s K_v(s))
      const double xf = std::max(x, kLaplaceFloor);
      const double order = 0.5 * (2.0 - m);
      const double s = std::sqrt(2.0 * xf);
      return -std::exp(num::log_bessel_k(order - 1.0, s) - num::log_bessel_k(order, s)) / s;
    }
    case FamilyKind::ExpPower: {
      const double beta = fam.beta();
      if (x == 0.0) {
        if (beta < 1.0) {
          throw std::domain_error("exp-power ratio is singular at x = 0 for beta < 1");
        }
        return -0.5;
      }
      return -0.5 * beta * std::pow(x, beta - 1.0);
    }
  }
  return 0.0;
}

double marginal_log_density(double psi, const EllipticalFamily& fam) {
  if (fam.kind == FamilyKind::ExpPower) {
    throw UnsupportedFamilyError(
        "exp-power is not consistent: its marginals leave the family");
  }
  return log_gtilde(psi * psi, 1, fam);
}

double w_quantile(double u, const EllipticalFamily& fam) {
  if (!(u > 0.0 && u < 1.0)) throw std::domain_error("w_quantile: u outside (0,1)");
  switch (fam.kind) {
    case FamilyKind::Gaussian:
      return 1.0;
    case FamilyKind::Laplace:
      return -std::log1p(-u);
    case FamilyKind::StudentT:
      return student_t_quantile(u, fam.nu());
    case FamilyKind::ExpPower:
      break;
  }
  throw UnsupportedFamilyError("w_quantile: exp-power mixing law has no quantile");
}

double w_quantile_domega(double u, const EllipticalFamily& fam) {
  if (fam.kind != FamilyKind::StudentT) {
    throw UnsupportedFamilyError("w_quantile_domega: family has no mixing parameter");
  }
  if (!(u > 0.0 && u < 1.0)) throw std::domain_error("w_quantile_domega: u outside (0,1)");
  const double nu = fam.nu();
  const double h = kQuantileRelStep * nu;
  return (student_t_quantile(u, nu + h) - student_t_quantile(u, nu - h)) / (2.0 * h);
}

}  // namespace copvi
