#pragma once

#include "copvi/copula_va.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>

namespace copvi::testing {

// Richardson-extrapolated central difference, O(h^4).
inline double fd(const std::function<double(double)>& f, double x, double h = 1e-3) {
  const double d1 = (f(x + h) - f(x - h)) / (2.0 * h);
  const double d2 = (f(x + h / 2) - f(x - h / 2)) / h;
  return (4.0 * d2 - d1) / 3.0;
}

inline Eigen::VectorXd fd_gradient(const std::function<double(const Eigen::VectorXd&)>& f,
                                   const Eigen::VectorXd& x, double h = 1e-3) {
  Eigen::VectorXd g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    g(i) = fd(
        [&](double v) {
          Eigen::VectorXd y = x;
          y(i) = v;
          return f(y);
        },
        x(i), h);
  }
  return g;
}

inline Eigen::MatrixXd fd_jacobian(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& f,
                                   const Eigen::VectorXd& x, double h = 1e-3) {
  const Eigen::Index n = f(x).size();
  Eigen::MatrixXd J(n, x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    auto at = [&](double v) {
      Eigen::VectorXd y = x;
      y(i) = v;
      return f(y);
    };
    const Eigen::VectorXd d1 = (at(x(i) + h) - at(x(i) - h)) / (2.0 * h);
    const Eigen::VectorXd d2 = (at(x(i) + h / 2) - at(x(i) - h / 2)) / h;
    J.col(i) = (4.0 * d2 - d1) / 3.0;
  }
  return J;
}

// Largest entrywise |a - b| / max(|a|, |b|, floor).
inline double max_rel_err(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double floor = 1e-3) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      const double s = std::max({std::abs(a(i, j)), std::abs(b(i, j)), floor});
      worst = std::max(worst, std::abs(a(i, j) - b(i, j)) / s);
    }
  }
  return worst;
}

inline double rel_err(double a, double b, double floor = 1e-3) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

// Random variational parameters with moderate shapes.
inline VariationalParams random_params(Eigen::Index m, Eigen::Index K, TransformKind kind,
                                       FamilyKind family, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  VariationalParams p = VariationalParams::initial(m, K, kind, family, rng);
  for (auto& t : p.transforms) {
    t.mu = u(rng);
    t.log_sigma = 0.5 * u(rng);
    if (kind == TransformKind::IGH) {
      t.gamma_raw = {0.4 * u(rng), -3.0 + u(rng)};
    } else {
      t.gamma_raw = {0.8 * u(rng), 0.8 * u(rng)};
    }
  }
  // leading angle kept away from pi/2 so D stays well conditioned
  for (Eigen::Index j = 0; j < m; ++j) {
    for (Eigen::Index k = 0; k < K; ++k) p.scale.tau(j, k) = 0.8 * u(rng);
    if (K > 0) p.scale.tau(j, 0) = -1.28 + 0.5 * u(rng);
  }
  if (family == FamilyKind::StudentT) p.family = EllipticalFamily::student_t(4.0 + 6.0 * (u(rng) + 1.0));
  return p;
}

}  // namespace copvi::testing
