#pragma once

#include <cstddef>
#include <string_view>

namespace copvi {

enum class FamilyKind { Gaussian, StudentT, Laplace, ExpPower };

std::string_view to_string(FamilyKind kind);
FamilyKind family_kind_from_string(std::string_view name);

// Scale mixture of normals psi = sqrt(W) X. The single unconstrained
// parameter is log(nu) for StudentT and logit(beta) for ExpPower; Gaussian
// and Laplace carry none.
struct EllipticalFamily {
  FamilyKind kind = FamilyKind::Gaussian;
  double omega_raw = 0.0;

  std::size_t omega_size() const {
    return kind == FamilyKind::StudentT || kind == FamilyKind::ExpPower ? 1 : 0;
  }
  double nu() const;
  double beta() const;
  // d(constrained omega)/d(omega_raw)
  double omega_chain() const;

  static EllipticalFamily gaussian();
  static EllipticalFamily student_t(double nu);
  static EllipticalFamily laplace();
  static EllipticalFamily exp_power(double beta);
};

// log g~_{m,omega}(x), normalizing constant included.
double log_gtilde(double x, int m, const EllipticalFamily& fam);

// g~'(x) / g~(x).
double gtilde_log_ratio(double x, int m, const EllipticalFamily& fam);

// Univariate marginal log-density g~_{1,omega}(psi^2); consistent families only.
double marginal_log_density(double psi, const EllipticalFamily& fam);

// Quantile of the mixing variable W.
double w_quantile(double u, const EllipticalFamily& fam);

// d/d nu of w_quantile by central differences (relative step 1e-4); StudentT
// only.
double w_quantile_domega(double u, const EllipticalFamily& fam);

}  // namespace copvi
