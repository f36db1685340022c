#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "copvi/copula_va.hpp"
#include "copvi/errors.hpp"
#include "copvi/numerics.hpp"
#include "copvi/targets.hpp"
#include "oracles.hpp"
#include "support.hpp"

#include <cmath>
#include <random>

using namespace copvi;
using namespace copvi::testing;

namespace {

VariationalParams gaussian_identity(Eigen::Index m, Eigen::Index K, std::mt19937_64& rng) {
  return VariationalParams::initial(m, K, TransformKind::Identity, FamilyKind::Gaussian, rng);
}

}  // namespace

TEST_CASE("layout and flattening") {
  std::mt19937_64 rng(1);
  VariationalParams p = random_params(4, 2, TransformKind::IGH, FamilyKind::StudentT, rng);
  const ParamLayout L = p.layout();
  CHECK(L.mu == 0);
  CHECK(L.log_sigma == 4);
  CHECK(L.gamma == 8);
  CHECK(L.tau == 16);
  CHECK(L.omega == 24);
  CHECK(L.total == 25);
  CHECK(L.block_of(3) == "mu");
  CHECK(L.block_of(24) == "omega");
  const Eigen::VectorXd flat = p.flatten();
  CHECK(flat(L.tau + 1) == p.scale.tau(0, 1));
  VariationalParams q = VariationalParams::initial(4, 2, TransformKind::IGH, FamilyKind::StudentT, rng);
  q.unflatten(flat);
  CHECK((q.flatten() - flat).cwiseAbs().maxCoeff() == 0.0);
  CHECK_THROWS(q.unflatten(Eigen::VectorXd::Zero(3)));

  VariationalParams bad = p;
  bad.transforms.pop_back();
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

  const VariationalParams init = VariationalParams::initial(3, 1, TransformKind::YJ, FamilyKind::StudentT, rng);
  CHECK(init.family.nu() == doctest::Approx(20.0));
  for (const auto& t : init.transforms) CHECK(t.shape().v[0] == doctest::Approx(1.0));
}

TEST_CASE("sampling") {
  std::mt19937_64 rng(2);
  const VariationalParams p = gaussian_identity(4, 2, rng);
  const BaseDraw base = BaseDraw::draw(4, 2, rng);
  CHECK(base.z.size() == 2);
  CHECK(base.eps.size() == 4);
  const FactorLoadings l = build_B_d(p.scale);
  const SampleRecord rec = sample(p, base);
  CHECK(rec.w == 1.0);
  CHECK((rec.theta - (l.B * base.z + l.d.cwiseProduct(base.eps))).cwiseAbs().maxCoeff() < 1e-14);

  VariationalParams c = gaussian_identity(3, 0, rng);
  for (auto& t : c.transforms) t.mu = 2.5;
  const BaseDraw b0 = BaseDraw::draw(3, 0, rng);
  CHECK((sample(c, b0).theta - (b0.eps.array() + 2.5).matrix()).cwiseAbs().maxCoeff() < 1e-14);

  VariationalParams t = VariationalParams::initial(2, 1, TransformKind::Identity, FamilyKind::StudentT, rng);
  t.family = EllipticalFamily::student_t(4.0);
  BaseDraw bt;
  bt.z = Eigen::VectorXd::Zero(1);
  bt.eps = Eigen::Vector2d(1.0, 0.0);
  bt.u = 0.5;
  const double d1 = build_B_d(t.scale).d(0);
  CHECK(sample(t, bt).theta(0) == doctest::Approx(std::sqrt(w_quantile(0.5, t.family)) * d1));

  const SampleRecord again = sample(p, base);
  CHECK((again.theta - rec.theta).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("density values") {
  std::mt19937_64 rng(3);
  VariationalParams one = gaussian_identity(1, 0, rng);
  one.transforms[0].log_sigma = std::log(2.0);
  CHECK(log_q(Eigen::VectorXd::Zero(1), one) == doctest::Approx(std::log(num::norm_pdf(0.0) / 2.0)));

  const VariationalParams two = gaussian_identity(2, 0, rng);
  const Eigen::Vector2d th(0.3, -1.2);
  CHECK(log_q(th, two) == doctest::Approx(-num::kLog2Pi - 0.5 * th.squaredNorm()));

  VariationalParams m = gaussian_identity(1, 0, rng);
  m.transforms[0] = TransformParams::identity(3.0, 2.0);
  CHECK(marginal_log_q(3.0, 0, m) == doctest::Approx(std::log(num::norm_pdf(0.0) / 2.0)));

  // marginal transport under location-scale changes of the same shape
  VariationalParams s = VariationalParams::initial(1, 0, TransformKind::YJ, FamilyKind::StudentT, rng);
  s.transforms[0] = TransformParams::yj(1.3, 0.0, 1.0);
  VariationalParams moved = s;
  moved.transforms[0] = TransformParams::yj(1.3, -4.0, 3.5);
  for (double x : {-2.0, 0.1, 1.7}) {
    CHECK(marginal_log_q(-4.0 + 3.5 * x, 0, moved) == doctest::Approx(marginal_log_q(x, 0, s) - std::log(3.5)));
  }

  // joint and marginal agree when m = 1
  VariationalParams r1 = random_params(1, 0, TransformKind::DoubleYJ, FamilyKind::Laplace, rng);
  CHECK(log_q(Eigen::VectorXd::Constant(1, 0.4), r1) == doctest::Approx(marginal_log_q(0.4, 0, r1)));

  const SampleRecord rec = sample(r1, BaseDraw::draw(1, 0, rng));
  CHECK(log_q_at(rec, r1) == doctest::Approx(log_q(rec.theta, r1)).epsilon(1e-10));
}

TEST_CASE("normalization") {
  std::mt19937_64 rng(4);
  VariationalParams t = random_params(2, 1, TransformKind::YJ, FamilyKind::StudentT, rng);
  t.family = EllipticalFamily::student_t(5.0);
  CHECK(std::abs(normalization_2d(t, 200) - 1.0) < 1e-3);

  VariationalParams one = VariationalParams::initial(1, 0, TransformKind::YJ, FamilyKind::StudentT, rng);
  one.transforms[0] = TransformParams::yj(1.4);
  one.family = EllipticalFamily::student_t(7.0);
  CHECK(std::abs(integrate_line([&](double x) { return std::exp(marginal_log_q(x, 0, one)); }) - 1.0) < 1e-8);
}

TEST_CASE("score of the approximation") {
  std::mt19937_64 rng(5);
  VariationalParams p = gaussian_identity(1, 0, rng);
  SampleRecord rec = sample(p, BaseDraw::draw(1, 0, rng));
  rec.theta(0) = 1.7;
  rec.psi(0) = 1.7;
  CHECK(grad_theta_log_q(rec, p)(0) == doctest::Approx(-1.7));

  // multivariate t score with identity scale
  VariationalParams t = VariationalParams::initial(3, 0, TransformKind::Identity, FamilyKind::StudentT, rng);
  const double nu = 6.0;
  t.family = EllipticalFamily::student_t(nu);
  const SampleRecord r = sample(t, BaseDraw::draw(3, 0, rng));
  const Eigen::VectorXd expect = -(nu + 3.0) / nu * r.theta / (1.0 + r.theta.squaredNorm() / nu);
  CHECK((grad_theta_log_q(r, t) - expect).cwiseAbs().maxCoeff() < 1e-12);

  CHECK(audit_grad_theta_log_q(40, 77).worst < 1e-5);
}

TEST_CASE("jacobian blocks") {
  std::mt19937_64 rng(6);
  VariationalParams p = gaussian_identity(3, 1, rng);
  const SampleRecord rec = sample(p, BaseDraw::draw(3, 1, rng));
  const ThetaJacobian J = dtheta_dlambda(rec, p);
  for (Eigen::Index i = 0; i < 3; ++i) CHECK(J.dlog_sigma(i) == doctest::Approx(rec.psi(i) * p.transforms[0].sigma()));
  CHECK(J.domega.size() == 0);
  CHECK(J.dense(p).cols() == p.size());

  const Eigen::Vector3d v(0.3, -1.0, 2.0);
  CHECK((J.apply_transpose(v, p) - J.dense(p).transpose() * v).cwiseAbs().maxCoeff() < 1e-14);

  CHECK(audit_dtheta_dlambda(40, 78).worst < 1e-5);
}

TEST_CASE("single-draw gradient and ELBO") {
  std::mt19937_64 rng(7);
  const GaussianTarget std_normal = GaussianTarget::standard(Eigen::VectorXd::Zero(1));
  VariationalParams p = gaussian_identity(1, 0, rng);
  p.transforms[0].mu = 0.8;
  for (int rep = 0; rep < 20; ++rep) {
    const BaseDraw b = BaseDraw::draw(1, 0, rng);
    CHECK(reparam_grad(b, p, std_normal)(0) == doctest::Approx(-0.8));
  }
  p.transforms[0].mu = 0.0;
  for (int rep = 0; rep < 20; ++rep) {
    const BaseDraw b = BaseDraw::draw(1, 0, rng);
    CHECK(std::abs(reparam_grad(b, p, std_normal)(0)) < 1e-14);
    CHECK(std::abs(elbo_estimate(b, p, std_normal)) < 1e-12);
  }

  // mean single-draw ELBO for N(mu, 1) against N(0, 1) is -mu^2/2
  p.transforms[0].mu = 0.6;
  const int n = 100000;
  double s = 0.0, s2 = 0.0;
  for (int k = 0; k < n; ++k) {
    const double e = elbo_estimate(BaseDraw::draw(1, 0, rng), p, std_normal);
    s += e;
    s2 += e * e;
  }
  const double mean = s / n, se = std::sqrt((s2 / n - mean * mean) / n);
  CHECK(std::abs(mean + 0.18) < 4 * se + 1e-12);

  const ReparamResult rr = reparam_step(BaseDraw::draw(1, 0, rng), p, std_normal);
  CHECK(rr.elbo == doctest::Approx(rr.log_g - rr.log_q));

  VariationalParams q = random_params(4, 2, TransformKind::YJ, FamilyKind::StudentT, rng);
  const GaussianTarget g4 = GaussianTarget::standard(Eigen::VectorXd::Zero(4));
  for (int k = 0; k < 1000; ++k) CHECK(std::isfinite(elbo_estimate(BaseDraw::draw(4, 2, rng), q, g4)));

  CHECK(audit_reparam_grad(30, 79).worst < 1e-5);
}

TEST_CASE("averaged gradient matches the quadrature ELBO slope") {
  // m = 2, mean-field Gaussian VA against a correlated Gaussian target:
  // ELBO(mu) is closed form, so its mu-derivative is the oracle.
  std::mt19937_64 rng(8);
  Eigen::Matrix2d cov;
  cov << 1.0, 0.5, 0.5, 2.0;
  const Eigen::Vector2d mean(0.4, -0.3);
  const GaussianTarget target(mean, cov);
  VariationalParams p = gaussian_identity(2, 0, rng);
  p.transforms[0].mu = 1.0;
  p.transforms[1].mu = 0.2;
  const Eigen::Vector2d mu(1.0, 0.2);
  const Eigen::Vector2d exact = -cov.inverse() * (mu - mean);
  const int n = 100000;
  Eigen::Vector2d s = Eigen::Vector2d::Zero(), s2 = Eigen::Vector2d::Zero();
  for (int k = 0; k < n; ++k) {
    const Eigen::VectorXd g = reparam_grad(BaseDraw::draw(2, 0, rng), p, target).head(2);
    s += g;
    s2 += g.cwiseAbs2();
  }
  const Eigen::Vector2d avg = s / n;
  const Eigen::Vector2d se = ((s2 / n - avg.cwiseAbs2()) / n).cwiseSqrt();
  for (int i = 0; i < 2; ++i) CHECK(std::abs(avg(i) - exact(i)) < 3 * se(i) + 1e-12);
}

TEST_CASE("families without a sampler") {
  std::mt19937_64 rng(9);
  VariationalParams p = VariationalParams::initial(2, 0, TransformKind::Identity, FamilyKind::ExpPower, rng);
  CHECK(p.family.beta() == doctest::Approx(0.5));
  CHECK_THROWS_AS(sample(p, BaseDraw::draw(2, 0, rng)), UnsupportedFamilyError);
  CHECK(std::isfinite(log_q(Eigen::Vector2d(0.2, 0.1), p)));
}

TEST_CASE("sampler agrees with the marginal density") {
  std::mt19937_64 rng(10);
  VariationalParams p = random_params(3, 1, TransformKind::YJ, FamilyKind::StudentT, rng);
  std::vector<double> draws(20000);
  for (auto& d : draws) d = sample(p, BaseDraw::draw(3, 1, rng)).theta(0);
  CHECK(ks_against_marginal(draws, 0, p) < ks_critical_1pct(draws.size()));
}
