#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "copvi/errors.hpp"
#include "copvi/optimizer.hpp"
#include "copvi/targets.hpp"

#include <cmath>
#include <limits>
#include <random>

using namespace copvi;

namespace {

std::vector<TracePoint> trace_of(const std::vector<double>& v) {
  std::vector<TracePoint> t;
  for (std::size_t i = 0; i < v.size(); ++i) t.push_back({i, v[i]});
  return t;
}

class NanTarget : public TargetModel {
 public:
  Eigen::Index dim() const override { return 2; }
  double log_g(const Eigen::VectorXd&) const override { return 0.0; }
  Eigen::VectorXd grad_log_g(const Eigen::VectorXd&) const override {
    return Eigen::VectorXd::Constant(2, std::numeric_limits<double>::quiet_NaN());
  }
};

class HugeTarget : public TargetModel {
 public:
  Eigen::Index dim() const override { return 1; }
  double log_g(const Eigen::VectorXd&) const override { return -1e13; }
  Eigen::VectorXd grad_log_g(const Eigen::VectorXd&) const override { return Eigen::VectorXd::Zero(1); }
};

}  // namespace

TEST_CASE("step rules") {
  for (StepRule rule : {StepRule::Adadelta, StepRule::Adam}) {
    SgaConfig cfg;
    cfg.rule = rule;
    Eigen::VectorXd lam = Eigen::VectorXd::LinSpaced(4, -1.0, 2.0);
    const Eigen::VectorXd before = lam;
    OptimizerState st = OptimizerState::zeros(4);
    sga_step(lam, Eigen::VectorXd::Zero(4), st, cfg);
    CHECK((lam - before).cwiseAbs().maxCoeff() == 0.0);
    CHECK(step_rule_from_string(to_string(rule)) == rule);
  }

  SgaConfig adam;
  adam.rule = StepRule::Adam;
  Eigen::VectorXd lam = Eigen::VectorXd::Zero(3);
  OptimizerState st = OptimizerState::zeros(3);
  sga_step(lam, Eigen::VectorXd::Ones(3), st, adam);
  for (Eigen::Index i = 0; i < 3; ++i) CHECK(lam(i) == doctest::Approx(0.01 / (1.0 + 1e-8)));

  // first ADADELTA step: sqrt(eps) / sqrt((1 - rho) g^2 + eps) * g
  SgaConfig ad;
  Eigen::VectorXd l2 = Eigen::VectorXd::Zero(1);
  OptimizerState s2 = OptimizerState::zeros(1);
  sga_step(l2, Eigen::VectorXd::Constant(1, 2.0), s2, ad);
  CHECK(l2(0) == doctest::Approx(std::sqrt(1e-6) / std::sqrt(0.05 * 4.0 + 1e-6) * 2.0));

  OptimizerState bad = OptimizerState::zeros(2);
  CHECK_THROWS_AS(sga_step(l2, Eigen::VectorXd::Zero(1), bad, ad), std::invalid_argument);
  CHECK_THROWS(step_rule_from_string("sgd"));

  SgaConfig broken;
  broken.rho = 1.5;
  CHECK_THROWS(broken.validate());
}

TEST_CASE("LB bar") {
  CHECK(lb_bar(trace_of(std::vector<double>(700, 3.25))).value == 3.25);
  std::vector<double> ramp(1000);
  for (int i = 0; i < 1000; ++i) ramp[static_cast<std::size_t>(i)] = i + 1;
  const LbBar tail = lb_bar(trace_of(ramp));
  CHECK(tail.value == 750.5);
  CHECK_FALSE(tail.short_trace);
  CHECK(lb_bar_head(trace_of(ramp)).value == 250.5);
  std::vector<double> short_trace(400);
  for (int i = 0; i < 400; ++i) short_trace[static_cast<std::size_t>(i)] = 400 - i;
  const LbBar s = lb_bar(trace_of(short_trace));
  CHECK(s.value == 200.5);
  CHECK(s.short_trace);
  CHECK_THROWS(lb_bar({}));
}

TEST_CASE("runs") {
  const Eigen::Vector3d mu0(1.0, -1.0, 0.5);
  const GaussianTarget target = GaussianTarget::standard(mu0);
  std::mt19937_64 rng(1);
  const VariationalParams lam0 = VariationalParams::initial(3, 0, TransformKind::Identity, FamilyKind::Gaussian, rng);

  SgaConfig zero;
  zero.steps = 0;
  const FitResult none = run(target, lam0, zero);
  CHECK(none.trace.empty());
  CHECK((none.lambda_star.flatten() - lam0.flatten()).cwiseAbs().maxCoeff() == 0.0);

  SgaConfig cfg;
  cfg.steps = 5000;
  std::size_t seen = 0;
  const FitResult a = run(target, lam0, cfg, [&](const TracePoint&) { ++seen; });
  const FitResult b = run(target, lam0, cfg);
  CHECK(seen == 5000);
  CHECK((a.lambda_star.flatten() - b.lambda_star.flatten()).cwiseAbs().maxCoeff() == 0.0);
  for (std::size_t i = 0; i < a.trace.size(); ++i) CHECK(a.trace[i].elbo == b.trace[i].elbo);
  for (Eigen::Index i = 0; i < 3; ++i) CHECK(std::abs(a.lambda_star.transforms[static_cast<std::size_t>(i)].mu - mu0(i)) < 0.05);
  CHECK(a.lb.value == lb_bar(a.trace).value);
  CHECK(lb_bar(a.trace).value > lb_bar_head(a.trace).value);

  SgaConfig sparse = cfg;
  sparse.steps = 100;
  sparse.trace_every = 10;
  CHECK(run(target, lam0, sparse).trace.size() == 10);

  SgaConfig adam = cfg;
  adam.rule = StepRule::Adam;
  const FitResult c = run(target, lam0, adam);
  for (Eigen::Index i = 0; i < 3; ++i) CHECK(std::abs(c.lambda_star.transforms[static_cast<std::size_t>(i)].mu - mu0(i)) < 0.1);

  const VariationalParams wrong = VariationalParams::initial(2, 0, TransformKind::Identity, FamilyKind::Gaussian, rng);
  CHECK_THROWS_AS(run(target, wrong, cfg), std::invalid_argument);
}

TEST_CASE("divergence guard") {
  std::mt19937_64 rng(2);
  SgaConfig cfg;
  cfg.steps = 10;
  const VariationalParams two = VariationalParams::initial(2, 0, TransformKind::Identity, FamilyKind::Gaussian, rng);
  try {
    run(NanTarget{}, two, cfg);
    FAIL("expected RunError");
  } catch (const RunError& e) {
    CHECK(e.step() == 0);
    CHECK(std::string(e.what()).find("mu") != std::string::npos);
  }
  const VariationalParams one = VariationalParams::initial(1, 0, TransformKind::Identity, FamilyKind::Gaussian, rng);
  CHECK_THROWS_AS(run(HugeTarget{}, one, cfg), RunError);
}
