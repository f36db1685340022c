#include "copvi/targets.hpp"

#include "copvi/errors.hpp"
#include "copvi/factor_scale.hpp"
#include "copvi/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace copvi {

namespace {

constexpr double kAngleClamp = 1e-8;
constexpr double kHyperScale = 20.0;
constexpr double kMinCholDiag = 1e-12;

// Scalar sums shared by the log posterior and its gradient.
struct CorrEval {
  double value = 0.0;
  Eigen::VectorXd grad;
};

CorrEval corr_evaluate(const CorrModelParams& p, Eigen::Index r, Eigen::Index n,
                       const Eigen::MatrixXd& scatter, bool want_grad) {
  const Eigen::Index S = pair_count(r);
  if (p.tau_hs.size() != S || p.log_chi.size() != S || p.log_nu_hs.size() != S) {
    throw std::invalid_argument("corr model: parameter blocks do not match r");
  }
  const double xi = std::exp(p.log_xi);
  const double kappa = std::exp(p.log_kappa);
  const Eigen::ArrayXd chi = p.log_chi.array().exp();
  const Eigen::ArrayXd nu = p.log_nu_hs.array().exp();
  const Eigen::ArrayXd root = (xi * chi).sqrt();
  const Eigen::VectorXd eta = (p.tau_hs.array() * root).matrix();
  const Eigen::VectorXd vartheta = angles_from_eta(eta);
  const Eigen::MatrixXd L = chol_from_angles(vartheta, r);

  const Eigen::VectorXd diag = L.diagonal();
  if (diag.minCoeff() < kMinCholDiag) {
    throw IllConditionedError("corr model: correlation matrix is numerically singular");
  }
  const Eigen::MatrixXd Linv =
      L.triangularView<Eigen::Lower>().solve(Eigen::MatrixXd::Identity(r, r));
  const Eigen::MatrixXd omega_inv = Linv.transpose() * Linv;
  const double N = static_cast<double>(n);

  CorrEval out;
  const double loglik = -N * diag.array().log().sum() -
                        0.5 * ((omega_inv.cwiseProduct(scatter)).sum() - scatter.trace());
  const double log_prior =
      (-0.5 * p.tau_hs.array().square() - 0.5 * num::kLog2Pi).sum() +
      (-0.5 * p.log_nu_hs.array() - 0.5 * p.log_chi.array() - 1.0 / (nu * chi)).sum() +
      (-0.5 * p.log_kappa - 0.5 * p.log_xi - 1.0 / (kappa * xi)) +
      (-0.5 * p.log_nu_hs.array() - kHyperScale / nu).sum() +
      (-0.5 * p.log_kappa - kHyperScale / kappa);
  out.value = loglik + log_prior;
  if (!want_grad) return out;

  // d loglik / dL = (Omega^-1 S Omega^-1 - N Omega^-1) L
  const Eigen::MatrixXd G = (omega_inv * scatter * omega_inv - N * omega_inv) * L;
  Eigen::VectorXd g_eta = Eigen::VectorXd::Zero(S);
  for (Eigen::Index i = 1; i < r; ++i) {
    const Eigen::Index base = pair_index(i, 0);
    const Eigen::MatrixXd J = row_jacobian(vartheta.segment(base, i));
    const Eigen::VectorXd g_angle = J.transpose() * G.row(i).head(i + 1).transpose();
    for (Eigen::Index j = 0; j < i; ++j) {
      const Eigen::Index s = base + j;
      const double th = vartheta(s);
      const bool clamped = th <= kAngleClamp || th >= num::kPi - kAngleClamp;
      g_eta(s) = clamped ? 0.0 : g_angle(j) * num::kPi * num::norm_pdf(eta(s));
    }
  }

  const Eigen::ArrayXd inv_nu_chi = 1.0 / (nu * chi);
  const Eigen::ArrayXd g_eta_eta = g_eta.array() * eta.array();
  out.grad.resize(3 * S + 2);
  out.grad.segment(0, S) = (root * g_eta.array() - p.tau_hs.array()).matrix();
  out.grad.segment(S, S) = (0.5 * g_eta_eta - 0.5 + inv_nu_chi).matrix();
  out.grad(2 * S) = 0.5 * g_eta_eta.sum() - 0.5 + 1.0 / (kappa * xi);
  out.grad.segment(2 * S + 1, S) = (-0.5 + inv_nu_chi - 0.5 + kHyperScale / nu).matrix();
  out.grad(3 * S + 1) = -0.5 + 1.0 / (kappa * xi) - 0.5 + kHyperScale / kappa;
  return out;
}

Eigen::MatrixXd scatter_of(const CopulaData& data) {
  if (data.r() < 2) throw DataError("corr model: need at least two columns");
  if (!data.X.allFinite()) throw DataError("corr model: non-finite copula scores");
  return data.X.transpose() * data.X;
}

}  // namespace

// ---- Gaussian -------------------------------------------------------------

GaussianTarget::GaussianTarget(Eigen::VectorXd mean, const Eigen::MatrixXd& cov)
    : mean_(std::move(mean)) {
  if (cov.rows() != mean_.size() || cov.cols() != mean_.size()) {
    throw std::invalid_argument("gaussian target: covariance shape mismatch");
  }
  const Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success) {
    throw std::invalid_argument("gaussian target: covariance is not positive definite");
  }
  precision_ = llt.solve(Eigen::MatrixXd::Identity(cov.rows(), cov.cols()));
  const Eigen::MatrixXd& Lc = llt.matrixLLT();
  log_norm_ = -0.5 * static_cast<double>(mean_.size()) * num::kLog2Pi -
              Lc.diagonal().array().log().sum();
}

GaussianTarget GaussianTarget::standard(const Eigen::VectorXd& mean) {
  return GaussianTarget(mean, Eigen::MatrixXd::Identity(mean.size(), mean.size()));
}

double GaussianTarget::log_g(const Eigen::VectorXd& theta) const {
  const Eigen::VectorXd d = theta - mean_;
  return log_norm_ - 0.5 * d.dot(precision_ * d);
}

Eigen::VectorXd GaussianTarget::grad_log_g(const Eigen::VectorXd& theta) const {
  return -(precision_ * (theta - mean_));
}

// ---- skew normal ----------------------------------------------------------

namespace {

double delta_of(double alpha) { return alpha / std::sqrt(1.0 + alpha * alpha); }

double skewness_of_delta(double delta) {
  const double b = delta * std::sqrt(2.0 / num::kPi);
  return 0.5 * (4.0 - num::kPi) * b * b * b / std::pow(1.0 - b * b, 1.5);
}

}  // namespace

double SkewNormal::mean() const {
  return xi + omega * delta_of(alpha) * std::sqrt(2.0 / num::kPi);
}

double SkewNormal::sd() const {
  const double d = delta_of(alpha);
  return omega * std::sqrt(1.0 - 2.0 * d * d / num::kPi);
}

SnEval sn_log_density_and_grad(double x, const SkewNormal& sn) {
  if (!(sn.omega > 0.0)) throw std::domain_error("skew normal: omega must be positive");
  const double z = (x - sn.xi) / sn.omega;
  const double az = sn.alpha * z;
  SnEval out;
  out.log_density =
      std::log(2.0) - std::log(sn.omega) + num::norm_logpdf(z) + num::log_norm_cdf(az);
  out.grad = (-z + sn.alpha * num::inverse_mills(az)) / sn.omega;
  return out;
}

double sn_skewness(double alpha) { return skewness_of_delta(delta_of(alpha)); }

double sn_max_skewness() { return skewness_of_delta(1.0); }

double skew_to_alpha(double pearson_skew) {
  if (!(std::abs(pearson_skew) < sn_max_skewness())) {
    throw std::domain_error("skew_to_alpha: skewness outside the attainable range");
  }
  if (pearson_skew == 0.0) return 0.0;
  const double target = std::abs(pearson_skew);
  double lo = 0.0;
  double hi = 1.0;
  for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (skewness_of_delta(mid) < target) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  const double delta = 0.5 * (lo + hi);
  const double alpha = delta / std::sqrt(1.0 - delta * delta);
  return pearson_skew < 0.0 ? -alpha : alpha;
}

SkewNormal skew_normal_from_moments(double mean, double sd, double pearson_skew) {
  if (!(sd > 0.0)) throw std::domain_error("skew normal: sd must be positive");
  SkewNormal sn;
  sn.alpha = skew_to_alpha(pearson_skew);
  const double d = delta_of(sn.alpha);
  sn.omega = sd / std::sqrt(1.0 - 2.0 * d * d / num::kPi);
  sn.xi = mean - sn.omega * d * std::sqrt(2.0 / num::kPi);
  return sn;
}

double SkewNormalTarget::log_g(const Eigen::VectorXd& theta) const {
  return sn_log_density_and_grad(theta(0), sn_).log_density;
}

Eigen::VectorXd SkewNormalTarget::grad_log_g(const Eigen::VectorXd& theta) const {
  return Eigen::VectorXd::Constant(1, sn_log_density_and_grad(theta(0), sn_).grad);
}

// ---- correlation model ----------------------------------------------------

Eigen::VectorXd CorrModelParams::flatten() const {
  const Eigen::Index S = tau_hs.size();
  Eigen::VectorXd theta(3 * S + 2);
  theta << tau_hs, log_chi, log_xi, log_nu_hs, log_kappa;
  return theta;
}

CorrModelParams CorrModelParams::from_flat(const Eigen::Ref<const Eigen::VectorXd>& theta,
                                           Eigen::Index r) {
  const Eigen::Index S = pair_count(r);
  if (theta.size() != 3 * S + 2) {
    throw std::invalid_argument("corr model: theta has length " + std::to_string(theta.size()) +
                                ", expected " + std::to_string(3 * S + 2));
  }
  CorrModelParams p;
  p.tau_hs = theta.segment(0, S);
  p.log_chi = theta.segment(S, S);
  p.log_xi = theta(2 * S);
  p.log_nu_hs = theta.segment(2 * S + 1, S);
  p.log_kappa = theta(3 * S + 1);
  return p;
}

CorrModelParams CorrModelParams::neutral(Eigen::Index r) {
  const Eigen::Index S = pair_count(r);
  return {Eigen::VectorXd::Zero(S), Eigen::VectorXd::Zero(S), 0.0, Eigen::VectorXd::Zero(S),
          0.0};
}

Eigen::MatrixXd chol_from_angles(const Eigen::Ref<const Eigen::VectorXd>& vartheta,
                                 Eigen::Index r) {
  if (vartheta.size() != pair_count(r)) {
    throw std::invalid_argument("chol_from_angles: expected r(r-1)/2 angles");
  }
  Eigen::MatrixXd L = Eigen::MatrixXd::Zero(r, r);
  if (r == 0) return L;
  L(0, 0) = 1.0;
  for (Eigen::Index i = 1; i < r; ++i) {
    L.row(i).head(i + 1) = angles_to_row(vartheta.segment(pair_index(i, 0), i)).transpose();
  }
  return L;
}

std::vector<Eigen::MatrixXd> dL_dvartheta(const Eigen::Ref<const Eigen::VectorXd>& vartheta,
                                          Eigen::Index r) {
  if (vartheta.size() != pair_count(r)) {
    throw std::invalid_argument("dL_dvartheta: expected r(r-1)/2 angles");
  }
  std::vector<Eigen::MatrixXd> blocks;
  blocks.reserve(static_cast<std::size_t>(std::max<Eigen::Index>(r - 1, 0)));
  for (Eigen::Index i = 1; i < r; ++i) {
    blocks.push_back(row_jacobian(vartheta.segment(pair_index(i, 0), i)));
  }
  return blocks;
}

Eigen::VectorXd corr_eta(const CorrModelParams& p) {
  const double xi = std::exp(p.log_xi);
  return (p.tau_hs.array() * (xi * p.log_chi.array().exp()).sqrt()).matrix();
}

Eigen::VectorXd angles_from_eta(const Eigen::Ref<const Eigen::VectorXd>& eta) {
  Eigen::VectorXd out(eta.size());
  for (Eigen::Index s = 0; s < eta.size(); ++s) {
    out(s) = std::clamp(num::kPi * num::norm_cdf(eta(s)), kAngleClamp, num::kPi - kAngleClamp);
  }
  return out;
}

Eigen::MatrixXd omega_from_theta(const Eigen::Ref<const Eigen::VectorXd>& theta, Eigen::Index r) {
  const CorrModelParams p = CorrModelParams::from_flat(theta, r);
  const Eigen::MatrixXd L = chol_from_angles(angles_from_eta(corr_eta(p)), r);
  return L * L.transpose();
}

double corr_log_posterior(const CorrModelParams& p, const CopulaData& data) {
  return corr_evaluate(p, data.r(), data.n(), scatter_of(data), false).value;
}

Eigen::VectorXd corr_grad(const CorrModelParams& p, const CopulaData& data) {
  return corr_evaluate(p, data.r(), data.n(), scatter_of(data), true).grad;
}

CorrModel::CorrModel(CopulaData data)
    : r_(data.r()), n_(data.n()), scatter_(scatter_of(data)) {}

double CorrModel::log_g(const Eigen::VectorXd& theta) const {
  return corr_evaluate(CorrModelParams::from_flat(theta, r_), r_, n_, scatter_, false).value;
}

Eigen::VectorXd CorrModel::grad_log_g(const Eigen::VectorXd& theta) const {
  return corr_evaluate(CorrModelParams::from_flat(theta, r_), r_, n_, scatter_, true).grad;
}

std::pair<double, Eigen::VectorXd> CorrModel::log_g_and_grad(const Eigen::VectorXd& theta) const {
  CorrEval e = corr_evaluate(CorrModelParams::from_flat(theta, r_), r_, n_, scatter_, true);
  return {e.value, std::move(e.grad)};
}

Eigen::MatrixXd spearman_from_omega(const Eigen::MatrixXd& omega) {
  if ((omega.array().abs() > 1.0 + 1e-12).any()) {
    throw std::domain_error("spearman_from_omega: entries must lie in [-1, 1]");
  }
  Eigen::MatrixXd out = omega.unaryExpr([](double rho) {
    return 6.0 / num::kPi * std::asin(0.5 * std::clamp(rho, -1.0, 1.0));
  });
  // rho = 1 maps to 1 up to rounding; pin it
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    for (Eigen::Index j = 0; j < out.cols(); ++j) {
      if (omega(i, j) == 1.0) out(i, j) = 1.0;
    }
  }
  return out;
}

}  // namespace copvi
