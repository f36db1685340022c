#include "copvi/factor_scale.hpp"

#include "copvi/errors.hpp"
#include "copvi/numerics.hpp"

#include <algorithm>
#include <cmath>

namespace copvi {

namespace {

constexpr double kPhiClamp = 1e-10;

double clamped_phi(double t) {
  return std::clamp(num::norm_cdf(t), kPhiClamp, 1.0 - kPhiClamp);
}

}  // namespace

FactorScale FactorScale::initial(Eigen::Index m, Eigen::Index K, std::mt19937_64& rng) {
  FactorScale fs;
  fs.tau.resize(m, K);
  std::normal_distribution<double> jitter(0.0, 0.01);
  const double first = num::norm_quantile(0.1);
  for (Eigen::Index j = 0; j < m; ++j) {
    for (Eigen::Index k = 0; k < K; ++k) {
      fs.tau(j, k) = k == 0 ? first : jitter(rng);
    }
  }
  return fs;
}

Eigen::VectorXd tau_to_angles(const Eigen::Ref<const Eigen::VectorXd>& tau_row) {
  const Eigen::Index K = tau_row.size();
  Eigen::VectorXd angles(K);
  for (Eigen::Index k = 0; k < K; ++k) {
    const double span = k + 1 == K ? 2.0 * num::kPi : num::kPi;
    angles(k) = span * clamped_phi(tau_row(k));
  }
  return angles;
}

Eigen::VectorXd angle_rates(const Eigen::Ref<const Eigen::VectorXd>& tau_row) {
  const Eigen::Index K = tau_row.size();
  Eigen::VectorXd rates(K);
  for (Eigen::Index k = 0; k < K; ++k) {
    const double span = k + 1 == K ? 2.0 * num::kPi : num::kPi;
    rates(k) = span * num::norm_pdf(tau_row(k));
  }
  return rates;
}

Eigen::VectorXd angles_to_row(const Eigen::Ref<const Eigen::VectorXd>& angles) {
  const Eigen::Index K = angles.size();
  Eigen::VectorXd a(K + 1);
  double running = 1.0;  // prod_{i<k} sin(kappa_i)
  for (Eigen::Index k = 0; k < K; ++k) {
    a(k) = std::cos(angles(k)) * running;
    running *= std::sin(angles(k));
  }
  a(K) = running;
  return a;
}

Eigen::MatrixXd row_jacobian(const Eigen::Ref<const Eigen::VectorXd>& angles) {
  const Eigen::Index K = angles.size();
  const Eigen::VectorXd c = angles.array().cos();
  const Eigen::VectorXd s = angles.array().sin();
  Eigen::VectorXd prefix(K + 1);  // prefix(j) = prod_{i<j} s_i
  prefix(0) = 1.0;
  for (Eigen::Index j = 0; j < K; ++j) prefix(j + 1) = prefix(j) * s(j);

  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(K + 1, K);
  for (Eigen::Index l = 0; l < K; ++l) {
    J(l, l) = -prefix(l + 1);
    double excl = prefix(l);  // prod_{i<j, i != l} s_i, advanced with j
    for (Eigen::Index j = l + 1; j <= K; ++j) {
      if (j < K) {
        J(j, l) = c(j) * c(l) * excl;
        excl *= s(j);
      } else {
        J(K, l) = c(l) * excl;
      }
    }
  }
  return J;
}

FactorLoadings build_B_d(const FactorScale& fs) {
  const Eigen::Index m = fs.m();
  const Eigen::Index K = fs.factors();
  FactorLoadings out{Eigen::MatrixXd(m, K), Eigen::VectorXd(m)};
  for (Eigen::Index j = 0; j < m; ++j) {
    const Eigen::VectorXd a = angles_to_row(tau_to_angles(fs.tau.row(j).transpose()));
    out.d(j) = a(0);
    out.B.row(j) = a.tail(K).transpose();
  }
  return out;
}

Eigen::MatrixXd dense_sigma(const FactorLoadings& loadings) {
  Eigen::MatrixXd sigma = loadings.B * loadings.B.transpose();
  sigma.diagonal() += loadings.d.array().square().matrix();
  return sigma;
}

WoodburySolver::WoodburySolver(const FactorLoadings& loadings) : loadings_(&loadings) {
  const Eigen::Index m = loadings.d.size();
  const Eigen::Index K = loadings.B.cols();
  double log_abs_d = 0.0;
  for (Eigen::Index j = 0; j < m; ++j) {
    const double dj = std::abs(loadings.d(j));
    if (!(dj >= kDiagonalFloor)) throw DegenerateScaleError(static_cast<std::size_t>(j), dj);
    log_abs_d += std::log(dj);
  }
  inv_d2_ = loadings.d.array().square().inverse();
  log_det_ = 2.0 * log_abs_d;
  if (K > 0) {
    Eigen::MatrixXd cap = Eigen::MatrixXd::Identity(K, K);
    cap.noalias() += loadings.B.transpose() * inv_d2_.asDiagonal() * loadings.B;
    capacitance_.compute(cap);
    if (capacitance_.info() != Eigen::Success) {
      throw NumericError("woodbury: capacitance matrix is not positive definite");
    }
    const Eigen::MatrixXd& L = capacitance_.matrixLLT();
    log_det_ += 2.0 * L.diagonal().array().log().sum();
  }
}

Eigen::VectorXd WoodburySolver::solve(const Eigen::Ref<const Eigen::VectorXd>& v) const {
  Eigen::VectorXd y = inv_d2_.cwiseProduct(v);
  if (loadings_->B.cols() == 0) return y;
  const Eigen::VectorXd t = loadings_->B.transpose() * y;
  const Eigen::VectorXd u = capacitance_.solve(t);
  y.noalias() -= inv_d2_.cwiseProduct(loadings_->B * u);
  return y;
}

SigmaSolve sigma_solve_logdet(const FactorLoadings& loadings,
                              const Eigen::Ref<const Eigen::VectorXd>& v) {
  const WoodburySolver solver(loadings);
  return {solver.solve(v), solver.log_det()};
}

Eigen::MatrixXd dpsi_dtau(const Eigen::Ref<const Eigen::VectorXd>& z,
                          const Eigen::Ref<const Eigen::VectorXd>& eps, double w,
                          const FactorScale& fs) {
  const Eigen::Index m = fs.m();
  const Eigen::Index K = fs.factors();
  const double root_w = std::sqrt(w);
  Eigen::MatrixXd out(m, K);
  Eigen::VectorXd coeff(K + 1);  // multipliers of (d_j, b_j1, ..., b_jK)
  coeff.tail(K) = z;
  for (Eigen::Index j = 0; j < m; ++j) {
    const Eigen::VectorXd tau_row = fs.tau.row(j).transpose();
    const Eigen::MatrixXd J = row_jacobian(tau_to_angles(tau_row));
    coeff(0) = eps(j);
    const Eigen::VectorXd rates = angle_rates(tau_row);
    out.row(j) = root_w * (J.transpose() * coeff).cwiseProduct(rates).transpose();
  }
  return out;
}

Eigen::MatrixXd expand_row_blocks(const Eigen::MatrixXd& compact) {
  const Eigen::Index m = compact.rows();
  const Eigen::Index K = compact.cols();
  Eigen::MatrixXd full = Eigen::MatrixXd::Zero(m, m * K);
  for (Eigen::Index j = 0; j < m; ++j) full.block(j, j * K, 1, K) = compact.row(j);
  return full;
}

}  // namespace copvi
