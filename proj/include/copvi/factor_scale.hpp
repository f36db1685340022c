#pragma once

#include <Eigen/Dense>

#include <random>

namespace copvi {

// Unit-diagonal factor scale Sigma = B B^T + D^2. Row j of [d B] lies on the
// unit sphere and is parameterized by K spherical angles, each obtained from
// an unconstrained tau_{j,k} through a probit map.
struct FactorScale {
  Eigen::MatrixXd tau;  // m x K

  Eigen::Index m() const { return tau.rows(); }
  Eigen::Index factors() const { return tau.cols(); }

  // tau_{j,1} = Phi^{-1}(0.1), remaining entries N(0, 0.01^2).
  static FactorScale initial(Eigen::Index m, Eigen::Index K, std::mt19937_64& rng);
};

// Angle map: kappa_k = pi Phi(tau_k) for k < K, kappa_K = 2 pi Phi(tau_K).
Eigen::VectorXd tau_to_angles(const Eigen::Ref<const Eigen::VectorXd>& tau_row);

// Diagonal of d kappa / d tau for one row.
Eigen::VectorXd angle_rates(const Eigen::Ref<const Eigen::VectorXd>& tau_row);

// (K+1)-vector a = (cos k1, cos k2 sin k1, ..., prod sin k_i).
Eigen::VectorXd angles_to_row(const Eigen::Ref<const Eigen::VectorXd>& angles);

// (K+1) x K matrix d a / d kappa.
Eigen::MatrixXd row_jacobian(const Eigen::Ref<const Eigen::VectorXd>& angles);

struct FactorLoadings {
  Eigen::MatrixXd B;  // m x K
  Eigen::VectorXd d;  // m
};

FactorLoadings build_B_d(const FactorScale& fs);

// Dense Sigma; small m only (tests, reporting).
Eigen::MatrixXd dense_sigma(const FactorLoadings& loadings);

// Woodbury factorization of B B^T + D^2, O(m K^2 + K^3) to build.
class WoodburySolver {
 public:
  static constexpr double kDiagonalFloor = 1e-8;

  // Throws DegenerateScaleError if some |d_j| is below the floor.
  explicit WoodburySolver(const FactorLoadings& loadings);

  Eigen::VectorXd solve(const Eigen::Ref<const Eigen::VectorXd>& v) const;
  double log_det() const { return log_det_; }

 private:
  const FactorLoadings* loadings_;
  Eigen::VectorXd inv_d2_;
  Eigen::LLT<Eigen::MatrixXd> capacitance_;
  double log_det_ = 0.0;
};

struct SigmaSolve {
  Eigen::VectorXd solution;
  double log_det = 0.0;
};

SigmaSolve sigma_solve_logdet(const FactorLoadings& loadings,
                              const Eigen::Ref<const Eigen::VectorXd>& v);

// d psi / d tau for psi = sqrt(w) (B z + D eps). Only the diagonal blocks are
// nonzero, so the result is stored compactly as an m x K matrix whose (j, l)
// entry is d psi_j / d tau_{j,l}.
Eigen::MatrixXd dpsi_dtau(const Eigen::Ref<const Eigen::VectorXd>& z,
                          const Eigen::Ref<const Eigen::VectorXd>& eps, double w,
                          const FactorScale& fs);

// Expands the compact block form to the full m x (m K) Jacobian with tau
// flattened row-major.
Eigen::MatrixXd expand_row_blocks(const Eigen::MatrixXd& compact);

}  // namespace copvi
