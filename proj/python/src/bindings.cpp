#include "copvi/artifact.hpp"
#include "copvi/commands.hpp"
#include "copvi/data_prep.hpp"
#include "copvi/errors.hpp"
#include "copvi/kl_bench.hpp"
#include "copvi/optimizer.hpp"
#include "copvi/targets.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <random>
#include <string>
#include <vector>

namespace py = pybind11;
using namespace copvi;

namespace {

TransformParams make_transform(const std::string& kind, const std::vector<double>& shape, double mu,
                               double sigma) {
  const TransformKind k = transform_kind_from_string(kind);
  if (shape.size() != shape_size(k)) {
    throw std::invalid_argument("transform '" + kind + "' takes " + std::to_string(shape_size(k)) +
                                " shape values");
  }
  switch (k) {
    case TransformKind::Identity:
      return TransformParams::identity(mu, sigma);
    case TransformKind::YJ:
      return TransformParams::yj(shape[0], mu, sigma);
    case TransformKind::IGH:
      return TransformParams::igh(shape[0], shape[1], mu, sigma);
    case TransformKind::DoubleYJ:
      return TransformParams::double_yj(shape[0], shape[1], mu, sigma);
  }
  return TransformParams::identity(mu, sigma);
}

EllipticalFamily make_family(const std::string& name, double param) {
  switch (family_kind_from_string(name)) {
    case FamilyKind::Gaussian:
      return EllipticalFamily::gaussian();
    case FamilyKind::StudentT:
      return EllipticalFamily::student_t(param);
    case FamilyKind::Laplace:
      return EllipticalFamily::laplace();
    case FamilyKind::ExpPower:
      return EllipticalFamily::exp_power(param);
  }
  return EllipticalFamily::gaussian();
}

Eigen::MatrixXd trace_matrix(const std::vector<TracePoint>& trace) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(trace.size()), 2);
  for (std::size_t i = 0; i < trace.size(); ++i) {
    out(static_cast<Eigen::Index>(i), 0) = static_cast<double>(trace[i].step);
    out(static_cast<Eigen::Index>(i), 1) = trace[i].elbo;
  }
  return out;
}

py::dict fit_dict(FitResult res, nlohmann::json config, std::uint64_t seed, Eigen::Index r,
                  std::vector<std::string> labels) {
  FitArtifact art;
  art.config = std::move(config);
  art.lambda = res.lambda_star;
  art.lb_bar = res.lb.value;
  art.lb_bar_short = res.lb.short_trace;
  art.steps = res.steps;
  art.seed = seed;
  art.r = r;
  art.column_labels = std::move(labels);
  py::dict d;
  d["artifact"] = artifact_to_string(art);
  d["lambda"] = res.lambda_star.flatten();
  d["lb_bar"] = res.lb.value;
  d["trace"] = trace_matrix(res.trace);
  return d;
}

SgaConfig make_config(std::size_t steps, std::uint64_t seed, const std::string& rule) {
  SgaConfig cfg;
  cfg.steps = steps;
  cfg.seed = seed;
  cfg.rule = step_rule_from_string(rule);
  return cfg;
}

py::dict fit_gaussian(const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov,
                      const std::string& family, const std::string& transform, long factors,
                      std::size_t steps, std::uint64_t seed, const std::string& step_rule) {
  const GaussianTarget target(mean, cov);
  std::mt19937_64 rng(seed);
  const VariationalParams lambda0 = VariationalParams::initial(
      mean.size(), factors, transform_kind_from_string(transform), family_kind_from_string(family), rng);
  FitResult res;
  {
    py::gil_scoped_release release;
    res = run(target, lambda0, make_config(steps, seed, step_rule));
  }
  nlohmann::json config = {{"command", "fit-gaussian"}, {"family", family},   {"transform", transform},
                           {"factors", factors},        {"steps", steps},     {"seed", seed},
                           {"step_rule", step_rule}};
  return fit_dict(std::move(res), std::move(config), seed, 0, {});
}

Panel panel_from(const Eigen::MatrixXd& values) {
  Panel p;
  p.values = values;
  for (Eigen::Index j = 0; j < values.cols(); ++j) p.column_labels.push_back("V" + std::to_string(j + 1));
  for (Eigen::Index i = 0; i < values.rows(); ++i) p.row_labels.push_back(std::to_string(i + 1));
  p.corner_label = "row";
  return p;
}

py::dict fit_corr(const Eigen::MatrixXd& values, const std::string& family, const std::string& transform,
                  long factors, std::size_t steps, std::uint64_t seed, const std::string& step_rule,
                  bool difference, long min_obs) {
  if (factors < 0) throw std::invalid_argument("factors must be >= 0");
  const FamilyKind fam = family_kind_from_string(family);
  if (fam == FamilyKind::ExpPower) throw UnsupportedFamilyError("exp-power has no sampler");
  Panel panel = panel_from(values);
  if (difference) panel = difference_series(panel);
  if (panel.values.cols() < 2) throw DataError("need at least two columns");
  const CorrModel model(to_copula_scores(panel, min_obs));
  const VariationalParams lambda0 =
      corr_initial(model.dim(), factors, transform_kind_from_string(transform), fam, seed);
  FitResult res;
  {
    py::gil_scoped_release release;
    res = run(model, lambda0, make_config(steps, seed, step_rule));
  }
  nlohmann::json config = {{"command", "fit-corr"}, {"difference", difference}, {"family", family},
                           {"transform", transform}, {"factors", factors},      {"steps", steps},
                           {"seed", seed},           {"step_rule", step_rule},  {"min_obs", min_obs}};
  return fit_dict(std::move(res), std::move(config), seed, model.r(), panel.column_labels);
}

Eigen::MatrixXd sample_artifact(const std::string& artifact, std::size_t count, std::uint64_t seed) {
  const FitArtifact art = artifact_from_string(artifact);
  const Eigen::Index m = art.lambda.dim();
  const Eigen::Index K = art.lambda.factors();
  std::mt19937_64 rng(seed);
  Eigen::MatrixXd out(static_cast<Eigen::Index>(count), m);
  for (Eigen::Index n = 0; n < out.rows(); ++n) {
    out.row(n) = sample(art.lambda, BaseDraw::draw(m, K, rng)).theta.transpose();
  }
  return out;
}

Eigen::VectorXd log_q_artifact(const std::string& artifact, const Eigen::MatrixXd& theta) {
  const FitArtifact art = artifact_from_string(artifact);
  if (theta.cols() != art.lambda.dim()) throw std::invalid_argument("theta has the wrong dimension");
  Eigen::VectorXd out(theta.rows());
  for (Eigen::Index n = 0; n < theta.rows(); ++n) out(n) = log_q(theta.row(n).transpose(), art.lambda);
  return out;
}

Eigen::MatrixXd posterior_spearman(const std::string& artifact, std::size_t draws, std::uint64_t seed) {
  const FitArtifact art = artifact_from_string(artifact);
  const Eigen::Index r = art.r;
  if (r < 2 || corr_param_dim(r) != art.lambda.dim()) {
    throw DataError("artifact does not hold a correlation-model fit");
  }
  if (draws == 0) throw std::invalid_argument("draws must be >= 1");
  std::mt19937_64 rng(seed);
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(r, r);
  for (std::size_t d = 0; d < draws; ++d) {
    const SampleRecord rec = sample(art.lambda, BaseDraw::draw(art.lambda.dim(), art.lambda.factors(), rng));
    acc += spearman_from_omega(omega_from_theta(rec.theta, r));
  }
  return acc / static_cast<double>(draws);
}

py::list kl_bench_rows(double skew, const std::vector<double>& mu_grid,
                       const std::vector<double>& sigma_grid, const std::vector<std::string>& families,
                       unsigned threads) {
  KlBenchConfig cfg;
  cfg.skew = skew;
  cfg.mu_grid = mu_grid;
  cfg.sigma_grid = sigma_grid;
  cfg.families.clear();
  for (const auto& f : families) cfg.families.push_back(kl_family_from_string(f));
  std::vector<KlRow> rows;
  {
    py::gil_scoped_release release;
    rows = kl_bench(cfg, threads);
  }
  py::list out;
  for (const KlRow& row : rows) {
    py::dict d;
    d["family"] = std::string(to_string(row.family));
    d["mu"] = row.mu;
    d["sigma"] = row.sigma;
    d["kl"] = row.kl;
    d["converged"] = row.converged;
    d["params"] = row.params;
    out.append(d);
  }
  return out;
}

}  // namespace

PYBIND11_MODULE(_copvi, m) {
  m.doc() = "Elliptical copula variational inference";

  static py::exception<NumericError> numeric_error(m, "NumericError", PyExc_ArithmeticError);
  py::register_exception<DataError>(m, "DataError", PyExc_ValueError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const NumericError& e) {
      py::set_error(numeric_error, e.what());
    }
  });

  m.def(
      "transform_forward",
      [](const Eigen::VectorXd& x, const std::string& kind, const std::vector<double>& shape, double mu,
         double sigma) {
        const TransformParams p = make_transform(kind, shape, mu, sigma);
        return Eigen::VectorXd(x.unaryExpr([&](double v) { return t_forward(v, p); }));
      },
      py::arg("x"), py::arg("kind"), py::arg("shape") = std::vector<double>{}, py::arg("mu") = 0.0,
      py::arg("sigma") = 1.0);
  m.def(
      "transform_inverse",
      [](const Eigen::VectorXd& psi, const std::string& kind, const std::vector<double>& shape, double mu,
         double sigma) {
        const TransformParams p = make_transform(kind, shape, mu, sigma);
        return Eigen::VectorXd(psi.unaryExpr([&](double v) { return t_inverse(v, p); }));
      },
      py::arg("psi"), py::arg("kind"), py::arg("shape") = std::vector<double>{}, py::arg("mu") = 0.0,
      py::arg("sigma") = 1.0);
  m.def(
      "marginal_log_density",
      [](const Eigen::VectorXd& psi, const std::string& family, double param) {
        const EllipticalFamily fam = make_family(family, param);
        return Eigen::VectorXd(psi.unaryExpr([&](double v) { return marginal_log_density(v, fam); }));
      },
      py::arg("psi"), py::arg("family"), py::arg("param") = 20.0);

  m.def("fit_gaussian", &fit_gaussian, py::arg("mean"), py::arg("cov"), py::arg("family") = "gaussian",
        py::arg("transform") = "identity", py::arg("factors") = 0, py::arg("steps") = 5000,
        py::arg("seed") = 1, py::arg("step_rule") = "adadelta");
  m.def("fit_corr", &fit_corr, py::arg("values"), py::arg("family") = "t", py::arg("transform") = "yj",
        py::arg("factors") = 2, py::arg("steps") = 15000, py::arg("seed") = 1,
        py::arg("step_rule") = "adadelta", py::arg("difference") = false, py::arg("min_obs") = 10);
  m.def("sample", &sample_artifact, py::arg("artifact"), py::arg("count"), py::arg("seed") = 1);
  m.def("log_q", &log_q_artifact, py::arg("artifact"), py::arg("theta"));
  m.def("posterior_spearman", &posterior_spearman, py::arg("artifact"), py::arg("draws") = 2000,
        py::arg("seed") = 1);

  m.def("spearman_from_omega", &spearman_from_omega, py::arg("omega"));
  m.def("corr_from_pairs", &corr_from_pairs, py::arg("pairs"), py::arg("r"));
  m.def(
      "simulate_gaussian",
      [](const Eigen::MatrixXd& corr, Eigen::Index n, std::uint64_t seed) {
        return simulate_gaussian_panel(corr, n, seed).values;
      },
      py::arg("corr"), py::arg("n"), py::arg("seed") = 1);
  m.def(
      "copula_scores",
      [](const Eigen::MatrixXd& values, long min_obs) { return to_copula_scores(panel_from(values), min_obs).X; },
      py::arg("values"), py::arg("min_obs") = 10);

  m.def("kl_bench", &kl_bench_rows, py::arg("skew") = 0.8553,
        py::arg("mu_grid") = std::vector<double>{0.0, 15.0, 30.0, 60.0},
        py::arg("sigma_grid") = std::vector<double>{0.1, 1.0, 10.0},
        py::arg("families") = std::vector<std::string>{"adjusted", "sln2020", "gaussian"},
        py::arg("threads") = 1u);
  m.def("skew_to_alpha", &skew_to_alpha, py::arg("skew"));
}
