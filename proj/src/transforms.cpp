#include "copvi/transforms.hpp"

#include "copvi/errors.hpp"
#include "copvi/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace copvi {

namespace {

constexpr double kNewtonTol = 1e-12;
constexpr int kNewtonMaxIter = 100;

void require_finite(double v, const char* what) {
  if (!std::isfinite(v)) {
    throw NumericError(std::string(what) + ": non-finite input");
  }
}

// expm1(a * l) / a with the a -> 0 limit l.
double expm1_over(double a, double l) {
  return a == 0.0 ? l : std::expm1(a * l) / a;
}

// log1p(a * y) / a with the a -> 0 limit y.
double log1p_over(double a, double y) {
  return a == 0.0 ? y : std::log1p(a * y) / a;
}

// d/da [log1p(a y) / a] = [u/(1+u) - log1p(u)] / a^2 with u = a y.
double dlog1p_over_da(double a, double y) {
  const double u = a * y;
  if (std::abs(u) < 1e-4) {
    return y * y * (-0.5 + u * (2.0 / 3.0 + u * (-0.75 + u * 0.8)));
  }
  return (u / (1.0 + u) - std::log1p(u)) / (a * a);
}

// ---- Yeo-Johnson with constrained gamma in [0, 2] ------------------------

double yj_forward(double x, double gamma) {
  if (x >= 0.0) return expm1_over(gamma, std::log1p(x));
  return -expm1_over(2.0 - gamma, std::log1p(-x));
}

double yj_inverse(double psi, double gamma) {
  if (psi >= 0.0) return std::expm1(log1p_over(gamma, psi));
  return -std::expm1(log1p_over(2.0 - gamma, -psi));
}

TransformDerivs yj_derivs(double x, double gamma) {
  if (x >= 0.0) {
    const double l = std::log1p(x);
    return {std::exp((gamma - 1.0) * l), (gamma - 1.0) * std::exp((gamma - 2.0) * l)};
  }
  const double l = std::log1p(-x);
  return {std::exp((1.0 - gamma) * l), (gamma - 1.0) * std::exp(-gamma * l)};
}

double yj_inverse_dpsi(double psi, double gamma) {
  if (psi >= 0.0) {
    return std::exp(log1p_over(gamma, psi) - std::log1p(gamma * psi));
  }
  const double delta = 2.0 - gamma;
  return std::exp(log1p_over(delta, -psi) - std::log1p(-delta * psi));
}

double yj_inverse_dgamma(double psi, double gamma) {
  if (psi >= 0.0) {
    return std::exp(log1p_over(gamma, psi)) * dlog1p_over_da(gamma, psi);
  }
  const double delta = 2.0 - gamma;
  return std::exp(log1p_over(delta, -psi)) * dlog1p_over_da(delta, -psi);
}

// (u e^u - expm1(u)) / u^2
double gh_dg_kernel(double u) {
  if (std::abs(u) < 1e-3) return 0.5 + u * (1.0 / 3.0 + u * (0.125 + u / 30.0));
  return (u * std::exp(u) - std::expm1(u)) / (u * u);
}

double gh_e(double z, double g) { return g == 0.0 ? z : std::expm1(g * z) / g; }

}  // namespace

std::string_view to_string(TransformKind kind) {
  switch (kind) {
    case TransformKind::Identity:
      return "identity";
    case TransformKind::YJ:
      return "yj";
    case TransformKind::IGH:
      return "igh";
    case TransformKind::DoubleYJ:
      return "double-yj";
  }
  return "identity";
}

TransformKind transform_kind_from_string(std::string_view name) {
  if (name == "identity") return TransformKind::Identity;
  if (name == "yj") return TransformKind::YJ;
  if (name == "igh") return TransformKind::IGH;
  if (name == "double-yj") return TransformKind::DoubleYJ;
  throw std::invalid_argument("unknown transform: " + std::string(name));
}

// ---- G-and-H map ---------------------------------------------------------

namespace gh {

double map(double z, double g, double h) {
  return gh_e(z, g) * std::exp(0.5 * h * z * z);
}

double d1(double z, double g, double h) {
  const double s = std::exp(0.5 * h * z * z);
  return s * (std::exp(g * z) + h * z * gh_e(z, g));
}

double d2(double z, double g, double h) {
  const double s = std::exp(0.5 * h * z * z);
  const double egz = std::exp(g * z);
  const double e = gh_e(z, g);
  return s * (2.0 * h * z * egz + h * h * z * z * e + g * egz + h * e);
}

double dg(double z, double g, double h) {
  return std::exp(0.5 * h * z * z) * z * z * gh_dg_kernel(g * z);
}

double dh(double z, double g, double h) {
  return 0.5 * z * z * map(z, g, h);
}

double solve(double x, double g, double h) {
  require_finite(x, "igh");
  if (x == 0.0) return 0.0;
  // T is increasing with T(0) = 0, so the root has the sign of x.
  double lo = 0.0;
  double hi = 0.0;
  if (x > 0.0) {
    hi = 1.0;
    while (map(hi, g, h) < x) {
      lo = hi;
      hi *= 2.0;
      if (hi > 1e8) throw NumericError("igh: target outside the range of T_{g,h}");
    }
  } else {
    lo = -1.0;
    while (map(lo, g, h) > x) {
      hi = lo;
      lo *= 2.0;
      if (lo < -1e8) throw NumericError("igh: target outside the range of T_{g,h}");
    }
  }
  double z = 0.5 * (lo + hi);
  for (int it = 0; it < kNewtonMaxIter; ++it) {
    const double f = map(z, g, h) - x;
    if (f == 0.0) return z;
    if (f > 0.0) {
      hi = z;
    } else {
      lo = z;
    }
    const double slope = d1(z, g, h);
    double next = z - f / slope;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - z) <= kNewtonTol * std::max(1.0, std::abs(z))) return next;
    z = next;
  }
  throw NumericError("igh: root finder did not converge");
}

}  // namespace gh

// ---- TransformParams -----------------------------------------------------

double TransformParams::sigma() const { return std::exp(log_sigma); }

Shape TransformParams::shape() const {
  Shape s;
  s.kind = kind;
  switch (kind) {
    case TransformKind::Identity:
      break;
    case TransformKind::YJ:
      s.v[0] = 2.0 * num::logistic(gamma_raw[0]);
      break;
    case TransformKind::IGH:
      s.v[0] = gamma_raw[0];
      s.v[1] = num::softplus(gamma_raw[1]);
      break;
    case TransformKind::DoubleYJ:
      s.v[0] = 2.0 * num::logistic(gamma_raw[0]);
      s.v[1] = 2.0 * num::logistic(gamma_raw[1]);
      break;
  }
  return s;
}

std::array<double, 2> TransformParams::shape_chain() const {
  auto yj_chain = [](double raw) {
    const double l = num::logistic(raw);
    return 2.0 * l * (1.0 - l);
  };
  switch (kind) {
    case TransformKind::Identity:
      return {0.0, 0.0};
    case TransformKind::YJ:
      return {yj_chain(gamma_raw[0]), 0.0};
    case TransformKind::IGH:
      return {1.0, num::logistic(gamma_raw[1])};
    case TransformKind::DoubleYJ:
      return {yj_chain(gamma_raw[0]), yj_chain(gamma_raw[1])};
  }
  return {0.0, 0.0};
}

TransformParams TransformParams::identity(double mu, double sigma) {
  return {TransformKind::Identity, {0.0, 0.0}, mu, std::log(sigma)};
}

TransformParams TransformParams::yj(double gamma, double mu, double sigma) {
  return {TransformKind::YJ, {num::logit(0.5 * gamma), 0.0}, mu, std::log(sigma)};
}

TransformParams TransformParams::igh(double g, double h, double mu, double sigma) {
  return {TransformKind::IGH, {g, num::softplus_inverse(h)}, mu, std::log(sigma)};
}

TransformParams TransformParams::double_yj(double gamma1, double gamma2, double mu,
                                           double sigma) {
  return {TransformKind::DoubleYJ,
          {num::logit(0.5 * gamma1), num::logit(0.5 * gamma2)},
          mu,
          std::log(sigma)};
}

// ---- t and its inverse ---------------------------------------------------

double t_forward(double x, const TransformParams& p) {
  require_finite(x, "t_forward");
  const Shape s = p.shape();
  switch (s.kind) {
    case TransformKind::Identity:
      return x;
    case TransformKind::YJ:
      return yj_forward(x, s.v[0]);
    case TransformKind::IGH:
      return gh::solve(x, s.v[0], s.v[1]);
    case TransformKind::DoubleYJ:
      return yj_forward(yj_forward(x, s.v[0]), s.v[1]);
  }
  return x;
}

double t_inverse(double psi, const TransformParams& p) {
  require_finite(psi, "t_inverse");
  const Shape s = p.shape();
  switch (s.kind) {
    case TransformKind::Identity:
      return psi;
    case TransformKind::YJ:
      return yj_inverse(psi, s.v[0]);
    case TransformKind::IGH:
      return gh::map(psi, s.v[0], s.v[1]);
    case TransformKind::DoubleYJ:
      return yj_inverse(yj_inverse(psi, s.v[1]), s.v[0]);
  }
  return psi;
}

TransformDerivs t_derivs(double x, const TransformParams& p) {
  require_finite(x, "t_derivs");
  const Shape s = p.shape();
  switch (s.kind) {
    case TransformKind::Identity:
      return {1.0, 0.0};
    case TransformKind::YJ:
      return yj_derivs(x, s.v[0]);
    case TransformKind::IGH:
      return t_derivs_at_psi(gh::solve(x, s.v[0], s.v[1]), p);
    case TransformKind::DoubleYJ: {
      const double y = yj_forward(x, s.v[0]);
      const TransformDerivs inner = yj_derivs(x, s.v[0]);
      const TransformDerivs outer = yj_derivs(y, s.v[1]);
      return {outer.d1 * inner.d1,
              outer.d2 * inner.d1 * inner.d1 + outer.d1 * inner.d2};
    }
  }
  return {1.0, 0.0};
}

TransformDerivs t_derivs_at_psi(double psi, const TransformParams& p) {
  require_finite(psi, "t_derivs_at_psi");
  const Shape s = p.shape();
  if (s.kind == TransformKind::IGH) {
    // inverse-function rule: t' = 1/T', t'' = -T'' / T'^3
    const double tp = gh::d1(psi, s.v[0], s.v[1]);
    const double tpp = gh::d2(psi, s.v[0], s.v[1]);
    return {1.0 / tp, -tpp / (tp * tp * tp)};
  }
  return t_derivs(t_inverse(psi, p), p);
}

InverseGrads t_inverse_param_grads(double psi, const TransformParams& p) {
  require_finite(psi, "t_inverse_param_grads");
  const Shape s = p.shape();
  InverseGrads out;
  switch (s.kind) {
    case TransformKind::Identity:
      break;
    case TransformKind::YJ:
      out.dpsi = yj_inverse_dpsi(psi, s.v[0]);
      out.dshape[0] = yj_inverse_dgamma(psi, s.v[0]);
      break;
    case TransformKind::IGH:
      out.dpsi = gh::d1(psi, s.v[0], s.v[1]);
      out.dshape[0] = gh::dg(psi, s.v[0], s.v[1]);
      out.dshape[1] = gh::dh(psi, s.v[0], s.v[1]);
      break;
    case TransformKind::DoubleYJ: {
      const double v = yj_inverse(psi, s.v[1]);
      const double inner_dpsi = yj_inverse_dpsi(v, s.v[0]);
      out.dpsi = inner_dpsi * yj_inverse_dpsi(psi, s.v[1]);
      out.dshape[0] = yj_inverse_dgamma(v, s.v[0]);
      out.dshape[1] = inner_dpsi * yj_inverse_dgamma(psi, s.v[1]);
      break;
    }
  }
  return out;
}

double k_forward(double theta, const TransformParams& p) {
  require_finite(theta, "k_forward");
  return t_forward((theta - p.mu) / p.sigma(), p);
}

double h_inverse(double psi, const TransformParams& p) {
  return p.mu + p.sigma() * t_inverse(psi, p);
}

}  // namespace copvi
