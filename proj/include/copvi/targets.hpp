#pragma once

#include "copvi/target_model.hpp"

#include <Eigen/Dense>

#include <vector>

namespace copvi {

// N(mean, cov) with a dense covariance.
class GaussianTarget : public TargetModel {
 public:
  GaussianTarget(Eigen::VectorXd mean, const Eigen::MatrixXd& cov);
  static GaussianTarget standard(const Eigen::VectorXd& mean);

  Eigen::Index dim() const override { return mean_.size(); }
  double log_g(const Eigen::VectorXd& theta) const override;
  Eigen::VectorXd grad_log_g(const Eigen::VectorXd& theta) const override;

  const Eigen::VectorXd& mean() const { return mean_; }

 private:
  Eigen::VectorXd mean_;
  Eigen::MatrixXd precision_;
  double log_norm_ = 0.0;
};

// ---- skew normal ----------------------------------------------------------

// Azzalini density 2/omega phi(z) Phi(alpha z), z = (x - xi)/omega.
struct SkewNormal {
  double xi = 0.0;
  double omega = 1.0;
  double alpha = 0.0;

  double mean() const;
  double sd() const;
};

struct SnEval {
  double log_density = 0.0;
  double grad = 0.0;
};

SnEval sn_log_density_and_grad(double x, const SkewNormal& sn);

// Pearson skewness of the SN law with shape alpha.
double sn_skewness(double alpha);

// Largest attainable |skewness|.
double sn_max_skewness();

// Shape with the requested skewness, by bisection on delta = alpha/sqrt(1+alpha^2).
double skew_to_alpha(double pearson_skew);

// SN law with the requested mean, standard deviation and skewness.
SkewNormal skew_normal_from_moments(double mean, double sd, double pearson_skew);

class SkewNormalTarget : public TargetModel {
 public:
  explicit SkewNormalTarget(SkewNormal sn) : sn_(sn) {}
  Eigen::Index dim() const override { return 1; }
  double log_g(const Eigen::VectorXd& theta) const override;
  Eigen::VectorXd grad_log_g(const Eigen::VectorXd& theta) const override;

 private:
  SkewNormal sn_;
};

// ---- regularized correlation matrix ----------------------------------------

// Number of free angles for an r x r correlation matrix.
inline Eigen::Index pair_count(Eigen::Index r) { return r * (r - 1) / 2; }

// Position of angle (i, j), j < i, 0-based, in the stacked vector.
inline Eigen::Index pair_index(Eigen::Index i, Eigen::Index j) { return i * (i - 1) / 2 + j; }

inline Eigen::Index corr_param_dim(Eigen::Index r) { return 3 * pair_count(r) + 2; }

struct CorrModelParams {
  Eigen::VectorXd tau_hs;
  Eigen::VectorXd log_chi;
  double log_xi = 0.0;
  Eigen::VectorXd log_nu_hs;
  double log_kappa = 0.0;

  // (tau_hs, log chi, log xi, log nu_hs, log kappa)
  Eigen::VectorXd flatten() const;
  static CorrModelParams from_flat(const Eigen::Ref<const Eigen::VectorXd>& theta,
                                   Eigen::Index r);
  static CorrModelParams neutral(Eigen::Index r);
};

struct CopulaData {
  Eigen::MatrixXd X;  // N x r normal scores

  Eigen::Index r() const { return X.cols(); }
  Eigen::Index n() const { return X.rows(); }
};

// Lower-triangular factor with unit rows; row i is the spherical row of
// vartheta_{i,0..i-1}.
Eigen::MatrixXd chol_from_angles(const Eigen::Ref<const Eigen::VectorXd>& vartheta,
                                 Eigen::Index r);

// Block i (i = 1..r-1) holds d l_{i,0..i} / d vartheta_{i,0..i-1}, an
// (i+1) x i matrix. Entries across different rows of L are zero.
std::vector<Eigen::MatrixXd> dL_dvartheta(const Eigen::Ref<const Eigen::VectorXd>& vartheta,
                                          Eigen::Index r);

// eta_s = tau_s sqrt(xi chi_s) and vartheta_s = pi Phi(eta_s), clamped to
// [1e-8, pi - 1e-8].
Eigen::VectorXd corr_eta(const CorrModelParams& p);
Eigen::VectorXd angles_from_eta(const Eigen::Ref<const Eigen::VectorXd>& eta);

// Omega implied by a flattened theta.
Eigen::MatrixXd omega_from_theta(const Eigen::Ref<const Eigen::VectorXd>& theta, Eigen::Index r);

double corr_log_posterior(const CorrModelParams& p, const CopulaData& data);
Eigen::VectorXd corr_grad(const CorrModelParams& p, const CopulaData& data);

class CorrModel : public TargetModel {
 public:
  explicit CorrModel(CopulaData data);

  Eigen::Index dim() const override { return corr_param_dim(r_); }
  double log_g(const Eigen::VectorXd& theta) const override;
  Eigen::VectorXd grad_log_g(const Eigen::VectorXd& theta) const override;
  std::pair<double, Eigen::VectorXd> log_g_and_grad(const Eigen::VectorXd& theta) const override;

  Eigen::Index r() const { return r_; }
  Eigen::Index n() const { return n_; }
  const Eigen::MatrixXd& scatter() const { return scatter_; }

 private:
  Eigen::Index r_ = 0;
  Eigen::Index n_ = 0;
  Eigen::MatrixXd scatter_;  // sum_i x_i x_i^T
};

// (6/pi) asin(Omega / 2), element-wise.
Eigen::MatrixXd spearman_from_omega(const Eigen::MatrixXd& omega);

}  // namespace copvi
