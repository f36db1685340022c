#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "copvi/errors.hpp"
#include "copvi/factor_scale.hpp"
#include "copvi/numerics.hpp"
#include "support.hpp"

#include <cmath>
#include <random>

using namespace copvi;
using copvi::testing::fd_jacobian;
using copvi::testing::max_rel_err;

namespace {

FactorScale random_scale(Eigen::Index m, Eigen::Index K, std::mt19937_64& rng, double spread = 1.0) {
  std::normal_distribution<double> n(0.0, spread);
  FactorScale fs;
  fs.tau.resize(m, K);
  for (Eigen::Index j = 0; j < m; ++j) {
    for (Eigen::Index k = 0; k < K; ++k) fs.tau(j, k) = n(rng);
  }
  return fs;
}

// psi = sqrt(w) (B z + D eps) as a function of tau flattened row-major.
Eigen::VectorXd psi_of_tau(const Eigen::VectorXd& flat, Eigen::Index m, Eigen::Index K,
                           const Eigen::VectorXd& z, const Eigen::VectorXd& eps, double w) {
  FactorScale fs;
  fs.tau = Eigen::Map<const Eigen::Matrix<double, -1, -1, Eigen::RowMajor>>(flat.data(), m, K);
  const FactorLoadings l = build_B_d(fs);
  return std::sqrt(w) * (l.B * z + l.d.cwiseProduct(eps));
}

}  // namespace

TEST_CASE("angles") {
  const Eigen::VectorXd a = tau_to_angles(Eigen::VectorXd::Zero(3));
  CHECK(a(0) == doctest::Approx(num::kPi / 2));
  CHECK(a(1) == doctest::Approx(num::kPi / 2));
  CHECK(a(2) == doctest::Approx(num::kPi));
  CHECK(tau_to_angles(Eigen::VectorXd::Constant(1, num::norm_quantile(0.1)))(0) ==
        doctest::Approx(0.2 * num::kPi));

  std::mt19937_64 rng(1);
  std::normal_distribution<double> n(0.0, 2.0);
  for (int rep = 0; rep < 200; ++rep) {
    Eigen::VectorXd t(4);
    for (auto& v : t) v = n(rng);
    const Eigen::VectorXd base = tau_to_angles(t);
    for (Eigen::Index k = 0; k < 4; ++k) {
      Eigen::VectorXd t2 = t;
      t2(k) += 0.05;
      CHECK(tau_to_angles(t2)(k) > base(k));
    }
    const Eigen::VectorXd rates = angle_rates(t);
    for (Eigen::Index k = 0; k < 4; ++k) {
      const double scale = k == 3 ? 2.0 : 1.0;
      CHECK(rates(k) == doctest::Approx(scale * num::kPi * num::norm_pdf(t(k))));
    }
  }
  // extreme tau stays inside the open ranges
  const Eigen::VectorXd far = tau_to_angles(Eigen::VectorXd::Constant(2, 50.0));
  CHECK(far(0) < num::kPi);
  CHECK(far(1) < 2 * num::kPi);
}

TEST_CASE("spherical rows") {
  Eigen::VectorXd r = angles_to_row(Eigen::VectorXd::Constant(1, num::kPi / 3));
  CHECK(r(0) == doctest::Approx(0.5));
  CHECK(r(1) == doctest::Approx(std::sqrt(3.0) / 2));
  r = angles_to_row(Eigen::Vector2d(num::kPi / 2, num::kPi / 2));
  CHECK(std::abs(r(0)) < 1e-15);
  CHECK(std::abs(r(1)) < 1e-15);
  CHECK(r(2) == doctest::Approx(1.0));
  r = angles_to_row(Eigen::Vector2d(num::kPi / 2, num::kPi));
  CHECK(std::abs(r(0)) < 1e-15);
  CHECK(r(1) == doctest::Approx(-1.0));
  CHECK(std::abs(r(2)) < 1e-15);
  CHECK(angles_to_row(Eigen::VectorXd(0)).size() == 1);
}

TEST_CASE("row jacobian") {
  const Eigen::MatrixXd J1 = row_jacobian(Eigen::VectorXd::Constant(1, num::kPi / 3));
  CHECK(J1(0, 0) == doctest::Approx(-std::sqrt(3.0) / 2));
  CHECK(J1(1, 0) == doctest::Approx(0.5));

  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.05, 0.95);
  for (int K : {1, 2, 5}) {
    for (int rep = 0; rep < 200; ++rep) {
      Eigen::VectorXd ang(K);
      for (int k = 0; k < K; ++k) ang(k) = (k == K - 1 ? 2.0 : 1.0) * num::kPi * u(rng);
      const Eigen::MatrixXd J = row_jacobian(ang);
      const Eigen::MatrixXd N = fd_jacobian([](const Eigen::VectorXd& a) { return angles_to_row(a); }, ang);
      CHECK((J - N).cwiseAbs().maxCoeff() < 1e-7);
      const Eigen::VectorXd a = angles_to_row(ang);
      CHECK(std::abs(a.norm() - 1.0) < 1e-14);
      CHECK((a.transpose() * J).cwiseAbs().maxCoeff() < 1e-14);
    }
  }
}

TEST_CASE("loadings") {
  FactorScale fs;
  fs.tau = Eigen::MatrixXd::Zero(4, 1);
  FactorLoadings l = build_B_d(fs);
  CHECK((l.d.array() + 1.0).abs().maxCoeff() < 1e-15);
  CHECK(l.B.cwiseAbs().maxCoeff() < 1e-15);

  // zero tau with K = 2 puts every row on the d = 0 boundary
  fs.tau = Eigen::MatrixXd::Zero(4, 2);
  l = build_B_d(fs);
  CHECK(l.d.cwiseAbs().maxCoeff() < 1e-15);
  CHECK((l.B.col(0).array() + 1.0).abs().maxCoeff() < 1e-15);
  CHECK(l.B.col(1).cwiseAbs().maxCoeff() < 1e-15);

  fs.tau.resize(5, 0);
  l = build_B_d(fs);
  CHECK(l.B.cols() == 0);
  CHECK((l.d.array() == 1.0).all());

  std::mt19937_64 rng(3);
  const FactorScale r = random_scale(6, 3, rng);
  CHECK((dense_sigma(build_B_d(r)).diagonal().array() - 1.0).abs().maxCoeff() < 1e-12);

  const FactorScale init = FactorScale::initial(10, 3, rng);
  const FactorLoadings li = build_B_d(init);
  for (Eigen::Index j = 0; j < 10; ++j) CHECK(li.d(j) == doctest::Approx(std::cos(0.1 * num::kPi)).epsilon(1e-3));
}

TEST_CASE("woodbury") {
  FactorScale fs;
  fs.tau.resize(4, 0);
  Eigen::VectorXd v(4);
  v << 1.0, -2.0, 0.5, 3.0;
  SigmaSolve s = sigma_solve_logdet(build_B_d(fs), v);
  CHECK((s.solution - v).cwiseAbs().maxCoeff() < 1e-15);
  CHECK(s.log_det == 0.0);

  std::mt19937_64 rng(4);
  for (int rep = 0; rep < 50; ++rep) {
    const FactorScale r = random_scale(3, 2, rng);
    const FactorLoadings l = build_B_d(r);
    if (l.d.cwiseAbs().minCoeff() < 1e-3) continue;
    const Eigen::MatrixXd S = dense_sigma(l);
    const Eigen::Vector3d x = Eigen::Vector3d::Random();
    const SigmaSolve ws = sigma_solve_logdet(l, x);
    CHECK(max_rel_err(ws.solution, S.ldlt().solve(x), 1e-12) < 1e-10);
    CHECK(std::abs(ws.log_det - std::log(S.determinant())) < 1e-10);
    const SigmaSolve zero = sigma_solve_logdet(l, Eigen::Vector3d::Zero());
    CHECK(zero.solution.cwiseAbs().maxCoeff() == 0.0);
    CHECK(zero.log_det == doctest::Approx(ws.log_det).epsilon(1e-14));
  }

  FactorScale degen;
  degen.tau = Eigen::MatrixXd::Zero(3, 2);
  degen.tau(0, 0) = -1.0;
  try {
    WoodburySolver bad(build_B_d(degen));
    FAIL("expected DegenerateScaleError");
  } catch (const DegenerateScaleError& e) {
    CHECK(e.row() == 1);
  }
}

TEST_CASE("psi jacobian in tau") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n(0.0, 1.0);
  const Eigen::Index m = 4, K = 2;
  const FactorScale fs = random_scale(m, K, rng);
  CHECK(dpsi_dtau(Eigen::VectorXd::Zero(K), Eigen::VectorXd::Zero(m), 1.3, fs).cwiseAbs().maxCoeff() == 0.0);

  for (int rep = 0; rep < 20; ++rep) {
    const FactorScale f = random_scale(m, K, rng);
    Eigen::VectorXd z(K), eps(m);
    for (auto& v : z) v = n(rng);
    for (auto& v : eps) v = n(rng);
    const double w = 0.5 + std::abs(n(rng));
    const Eigen::MatrixXd full = expand_row_blocks(dpsi_dtau(z, eps, w, f));
    Eigen::VectorXd flat(m * K);
    for (Eigen::Index j = 0; j < m; ++j) {
      for (Eigen::Index k = 0; k < K; ++k) flat(j * K + k) = f.tau(j, k);
    }
    const Eigen::MatrixXd num =
        fd_jacobian([&](const Eigen::VectorXd& t) { return psi_of_tau(t, m, K, z, eps, w); }, flat);
    CHECK((full - num).cwiseAbs().maxCoeff() < 1e-6);
    for (Eigen::Index j = 0; j < m; ++j) {
      for (Eigen::Index c = 0; c < m * K; ++c) {
        if (c / K != j) CHECK(full(j, c) == 0.0);
      }
    }
    const Eigen::MatrixXd twice = dpsi_dtau(z, eps, 2 * w, f);
    CHECK((twice - std::sqrt(2.0) * dpsi_dtau(z, eps, w, f)).cwiseAbs().maxCoeff() < 1e-14);
  }
}

TEST_CASE("sweep: unit diagonal and positive definiteness") {
  std::mt19937_64 rng(6);
  std::uniform_int_distribution<int> dm(1, 50), dk(0, 10);
  for (int rep = 0; rep < 1000; ++rep) {
    const FactorScale f = random_scale(dm(rng), dk(rng), rng, 2.0);
    const FactorLoadings l = build_B_d(f);
    const Eigen::VectorXd diag = l.B.rowwise().squaredNorm() + l.d.cwiseAbs2();
    CHECK((diag.array() - 1.0).abs().maxCoeff() < 1e-12);
    if (f.m() <= 12 && l.d.cwiseAbs().minCoeff() > 1e-6) {
      CHECK(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(dense_sigma(l)).eigenvalues().minCoeff() > 0.0);
    }
  }
}
