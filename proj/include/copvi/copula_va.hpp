#pragma once

#include "copvi/elliptical.hpp"
#include "copvi/factor_scale.hpp"
#include "copvi/target_model.hpp"
#include "copvi/transforms.hpp"

#include <Eigen/Dense>

#include <random>
#include <string_view>
#include <vector>

namespace copvi {

// Offsets of each block inside the flattened lambda.
struct ParamLayout {
  Eigen::Index mu = 0;
  Eigen::Index log_sigma = 0;
  Eigen::Index gamma = 0;
  Eigen::Index tau = 0;
  Eigen::Index omega = 0;
  Eigen::Index total = 0;
  std::vector<Eigen::Index> gamma_offset;  // per coordinate, absolute

  std::string_view block_of(Eigen::Index index) const;
};

struct VariationalParams {
  std::vector<TransformParams> transforms;
  FactorScale scale;
  EllipticalFamily family;

  Eigen::Index dim() const { return static_cast<Eigen::Index>(transforms.size()); }
  Eigen::Index factors() const { return scale.factors(); }

  ParamLayout layout() const;
  Eigen::Index size() const { return layout().total; }

  // (mu, log sigma, gamma_raw blocks, tau row-major, omega_raw)
  Eigen::VectorXd flatten() const;
  void unflatten(const Eigen::Ref<const Eigen::VectorXd>& flat);

  // Throws std::invalid_argument when the pieces disagree on m.
  void validate() const;

  // mu = 0, sigma = 1, neutral shapes, nu = 20 (beta = 0.5 for exp-power),
  // factor scale at its default starting point.
  static VariationalParams initial(Eigen::Index m, Eigen::Index K, TransformKind kind,
                                   FamilyKind family, std::mt19937_64& rng);
};

// Neutral shape for a kind: gamma = 1 for YJ maps, g = 0 and h = 0.01 for IGH.
TransformParams neutral_transform(TransformKind kind);

struct BaseDraw {
  Eigen::VectorXd z;    // K
  Eigen::VectorXd eps;  // m
  double u = 0.5;

  // Draws z, then eps, then u.
  static BaseDraw draw(Eigen::Index m, Eigen::Index K, std::mt19937_64& rng);
};

struct SampleRecord {
  BaseDraw base;
  double w = 1.0;
  Eigen::VectorXd psi;
  Eigen::VectorXd theta;
};

SampleRecord sample(const VariationalParams& lambda, const BaseDraw& base);

// Joint log density of theta.
double log_q(const Eigen::VectorXd& theta, const VariationalParams& lambda);

// Same density using the record's psi instead of re-inverting the transforms.
double log_q_at(const SampleRecord& rec, const VariationalParams& lambda);

double marginal_log_q(double theta_i, Eigen::Index i, const VariationalParams& lambda);

Eigen::VectorXd grad_theta_log_q(const SampleRecord& rec, const VariationalParams& lambda);

// d theta / d lambda at a fixed base draw, by block. All blocks are with
// respect to the unconstrained parameters.
struct ThetaJacobian {
  Eigen::VectorXd dlog_sigma;  // m, diagonal
  Eigen::MatrixXd dgamma;      // m x 2, row i holds the live entries of coordinate i
  Eigen::MatrixXd dtau;        // m x K, d theta_j / d tau_{j,l}
  Eigen::VectorXd domega;      // m, empty when the family carries no omega

  // J^T v over the flattened lambda.
  Eigen::VectorXd apply_transpose(const Eigen::Ref<const Eigen::VectorXd>& v,
                                  const VariationalParams& lambda) const;

  // Dense m x size(lambda) matrix.
  Eigen::MatrixXd dense(const VariationalParams& lambda) const;
};

ThetaJacobian dtheta_dlambda(const SampleRecord& rec, const VariationalParams& lambda);

struct ReparamResult {
  Eigen::VectorXd grad;
  double elbo = 0.0;
  double log_g = 0.0;
  double log_q = 0.0;
};

// Single-draw gradient of the ELBO together with the matching ELBO estimate.
ReparamResult reparam_step(const BaseDraw& base, const VariationalParams& lambda,
                           const TargetModel& target);

Eigen::VectorXd reparam_grad(const BaseDraw& base, const VariationalParams& lambda,
                             const TargetModel& target);

double elbo_estimate(const BaseDraw& base, const VariationalParams& lambda,
                     const TargetModel& target);

}  // namespace copvi
