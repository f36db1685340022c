#pragma once

#include <array>
#include <cstddef>
#include <string_view>

namespace copvi {

// Monotone element-wise maps t_gamma applied after standardizing theta_i.
enum class TransformKind { Identity, YJ, IGH, DoubleYJ };

// Number of unconstrained shape parameters carried by a kind.
constexpr std::size_t shape_size(TransformKind kind) {
  switch (kind) {
    case TransformKind::Identity:
      return 0;
    case TransformKind::YJ:
      return 1;
    case TransformKind::IGH:
    case TransformKind::DoubleYJ:
      return 2;
  }
  return 0;
}

std::string_view to_string(TransformKind kind);
TransformKind transform_kind_from_string(std::string_view name);

// Constrained shape values:
//   YJ        v[0] = gamma in (0,2)
//   IGH       v[0] = g (real), v[1] = h >= 0
//   DoubleYJ  v[0] = gamma_1, v[1] = gamma_2, both in (0,2); t = t_2 o t_1
struct Shape {
  TransformKind kind = TransformKind::Identity;
  std::array<double, 2> v{};
};

// Parameters of the adjusted map psi = t_gamma((theta - mu) / sigma).
// Shape parameters live unconstrained: gamma = 2 logistic(raw) for YJ,
// g = raw[0] and h = softplus(raw[1]) for IGH.
struct TransformParams {
  TransformKind kind = TransformKind::Identity;
  std::array<double, 2> gamma_raw{};
  double mu = 0.0;
  double log_sigma = 0.0;

  double sigma() const;
  Shape shape() const;

  // d(constrained)/d(raw) for each live shape entry.
  std::array<double, 2> shape_chain() const;

  static TransformParams identity(double mu = 0.0, double sigma = 1.0);
  static TransformParams yj(double gamma, double mu = 0.0, double sigma = 1.0);
  static TransformParams igh(double g, double h, double mu = 0.0,
                             double sigma = 1.0);
  static TransformParams double_yj(double gamma1, double gamma2,
                                   double mu = 0.0, double sigma = 1.0);
};

struct TransformDerivs {
  double d1 = 1.0;  // t'(x)
  double d2 = 0.0;  // t''(x)
};

struct InverseGrads {
  double dpsi = 1.0;                 // d t^{-1}(psi) / d psi
  std::array<double, 2> dshape{};    // d t^{-1}(psi) / d (constrained shape)
};

double t_forward(double x, const TransformParams& p);
double t_inverse(double psi, const TransformParams& p);
TransformDerivs t_derivs(double x, const TransformParams& p);

// t', t'' evaluated at x = t^{-1}(psi). Avoids the IGH root solve when psi is
// already known.
TransformDerivs t_derivs_at_psi(double psi, const TransformParams& p);

InverseGrads t_inverse_param_grads(double psi, const TransformParams& p);

double k_forward(double theta, const TransformParams& p);
double h_inverse(double psi, const TransformParams& p);

// The G-and-H map T_{g,h}(z) and its derivatives; exposed for tests.
namespace gh {
double map(double z, double g, double h);
double d1(double z, double g, double h);
double d2(double z, double g, double h);
double dg(double z, double g, double h);
double dh(double z, double g, double h);
// Solves T_{g,h}(z) = x by safeguarded Newton iteration.
double solve(double x, double g, double h);
}  // namespace gh

}  // namespace copvi
