#include "copvi/copula_va.hpp"

#include "copvi/errors.hpp"
#include "copvi/numerics.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace copvi {

namespace {

constexpr double kInitialNu = 20.0;
constexpr double kInitialBeta = 0.5;
constexpr double kInitialIghH = 0.01;

// Pieces of Sigma shared by density and gradient evaluations at one lambda.
struct ScaleCache {
  FactorLoadings loadings;
  WoodburySolver solver;

  explicit ScaleCache(const FactorScale& fs) : loadings(build_B_d(fs)), solver(loadings) {}
  ScaleCache(const ScaleCache&) = delete;
  ScaleCache& operator=(const ScaleCache&) = delete;
};

SampleRecord sample_with(const VariationalParams& lambda, const FactorLoadings& ld,
                         const BaseDraw& base) {
  const Eigen::Index m = lambda.dim();
  if (base.eps.size() != m || base.z.size() != lambda.factors()) {
    throw std::invalid_argument("sample: base draw does not match lambda dimensions");
  }
  SampleRecord rec;
  rec.base = base;
  rec.w = w_quantile(base.u, lambda.family);
  Eigen::VectorXd v = ld.d.cwiseProduct(base.eps);
  if (ld.B.cols() > 0) v.noalias() += ld.B * base.z;
  rec.psi = std::sqrt(rec.w) * v;
  rec.theta.resize(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    rec.theta(i) = h_inverse(rec.psi(i), lambda.transforms[static_cast<std::size_t>(i)]);
  }
  return rec;
}

struct DensityParts {
  double log_q = 0.0;
  Eigen::VectorXd sigma_inv_psi;
  double quad = 0.0;
  std::vector<TransformDerivs> derivs;
};

DensityParts density_at_psi(const Eigen::VectorXd& psi, const VariationalParams& lambda,
                            const ScaleCache& cache) {
  const Eigen::Index m = lambda.dim();
  DensityParts out;
  out.sigma_inv_psi = cache.solver.solve(psi);
  out.quad = psi.dot(out.sigma_inv_psi);
  out.derivs.resize(static_cast<std::size_t>(m));
  double jac = 0.0;
  for (Eigen::Index i = 0; i < m; ++i) {
    const auto& p = lambda.transforms[static_cast<std::size_t>(i)];
    const TransformDerivs td = t_derivs_at_psi(psi(i), p);
    out.derivs[static_cast<std::size_t>(i)] = td;
    jac += std::log(td.d1) - p.log_sigma;
  }
  out.log_q = -0.5 * cache.solver.log_det() +
              log_gtilde(out.quad, static_cast<int>(m), lambda.family) + jac;
  return out;
}

Eigen::VectorXd grad_from_parts(const DensityParts& parts, const VariationalParams& lambda) {
  const Eigen::Index m = lambda.dim();
  const double ratio = gtilde_log_ratio(parts.quad, static_cast<int>(m), lambda.family);
  Eigen::VectorXd g(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const auto& p = lambda.transforms[static_cast<std::size_t>(i)];
    const double sigma = p.sigma();
    const TransformDerivs& td = parts.derivs[static_cast<std::size_t>(i)];
    g(i) = 2.0 * ratio * td.d1 / sigma * parts.sigma_inv_psi(i) + td.d2 / (td.d1 * sigma);
  }
  return g;
}

ThetaJacobian jacobian_with(const SampleRecord& rec, const VariationalParams& lambda,
                            const FactorLoadings& ld) {
  const Eigen::Index m = lambda.dim();
  const Eigen::Index K = lambda.factors();
  ThetaJacobian J;
  J.dlog_sigma.resize(m);
  J.dgamma = Eigen::MatrixXd::Zero(m, 2);
  J.dtau = dpsi_dtau(rec.base.z, rec.base.eps, rec.w, lambda.scale);

  const bool has_omega = lambda.family.omega_size() > 0;
  double domega_scale = 0.0;
  Eigen::VectorXd v;
  if (has_omega) {
    if (lambda.family.kind != FamilyKind::StudentT) {
      throw UnsupportedFamilyError("dtheta_dlambda: family cannot be sampled");
    }
    J.domega.resize(m);
    v = ld.d.cwiseProduct(rec.base.eps);
    if (K > 0) v.noalias() += ld.B * rec.base.z;
    domega_scale = w_quantile_domega(rec.base.u, lambda.family) / (2.0 * std::sqrt(rec.w)) *
                   lambda.family.omega_chain();
  }

  for (Eigen::Index i = 0; i < m; ++i) {
    const auto& p = lambda.transforms[static_cast<std::size_t>(i)];
    const double sigma = p.sigma();
    const InverseGrads ig = t_inverse_param_grads(rec.psi(i), p);
    const double dtheta_dpsi = sigma * ig.dpsi;
    J.dlog_sigma(i) = sigma * t_inverse(rec.psi(i), p);
    const auto chain = p.shape_chain();
    const std::size_t ns = shape_size(p.kind);
    for (std::size_t k = 0; k < ns; ++k) {
      J.dgamma(i, static_cast<Eigen::Index>(k)) = sigma * ig.dshape[k] * chain[k];
    }
    if (K > 0) J.dtau.row(i) *= dtheta_dpsi;
    if (has_omega) J.domega(i) = dtheta_dpsi * v(i) * domega_scale;
  }
  return J;
}

}  // namespace

std::string_view ParamLayout::block_of(Eigen::Index index) const {
  if (index < 0 || index >= total) return "out-of-range";
  if (index < log_sigma) return "mu";
  if (index < gamma) return "log_sigma";
  if (index < tau) return "gamma";
  if (index < omega) return "tau";
  return "omega";
}

ParamLayout VariationalParams::layout() const {
  const Eigen::Index m = dim();
  ParamLayout L;
  L.mu = 0;
  L.log_sigma = m;
  L.gamma = 2 * m;
  L.gamma_offset.resize(static_cast<std::size_t>(m));
  Eigen::Index at = L.gamma;
  for (Eigen::Index i = 0; i < m; ++i) {
    L.gamma_offset[static_cast<std::size_t>(i)] = at;
    at += static_cast<Eigen::Index>(shape_size(transforms[static_cast<std::size_t>(i)].kind));
  }
  L.tau = at;
  L.omega = L.tau + scale.tau.size();
  L.total = L.omega + static_cast<Eigen::Index>(family.omega_size());
  return L;
}

Eigen::VectorXd VariationalParams::flatten() const {
  const ParamLayout L = layout();
  const Eigen::Index m = dim();
  const Eigen::Index K = factors();
  Eigen::VectorXd flat(L.total);
  for (Eigen::Index i = 0; i < m; ++i) {
    const auto& p = transforms[static_cast<std::size_t>(i)];
    flat(L.mu + i) = p.mu;
    flat(L.log_sigma + i) = p.log_sigma;
    const std::size_t ns = shape_size(p.kind);
    for (std::size_t k = 0; k < ns; ++k) {
      flat(L.gamma_offset[static_cast<std::size_t>(i)] + static_cast<Eigen::Index>(k)) =
          p.gamma_raw[k];
    }
    for (Eigen::Index k = 0; k < K; ++k) flat(L.tau + i * K + k) = scale.tau(i, k);
  }
  if (family.omega_size() > 0) flat(L.omega) = family.omega_raw;
  return flat;
}

void VariationalParams::unflatten(const Eigen::Ref<const Eigen::VectorXd>& flat) {
  const ParamLayout L = layout();
  if (flat.size() != L.total) {
    throw std::invalid_argument("unflatten: expected " + std::to_string(L.total) +
                                " entries, got " + std::to_string(flat.size()));
  }
  const Eigen::Index m = dim();
  const Eigen::Index K = factors();
  for (Eigen::Index i = 0; i < m; ++i) {
    auto& p = transforms[static_cast<std::size_t>(i)];
    p.mu = flat(L.mu + i);
    p.log_sigma = flat(L.log_sigma + i);
    const std::size_t ns = shape_size(p.kind);
    for (std::size_t k = 0; k < ns; ++k) {
      p.gamma_raw[k] =
          flat(L.gamma_offset[static_cast<std::size_t>(i)] + static_cast<Eigen::Index>(k));
    }
    for (Eigen::Index k = 0; k < K; ++k) scale.tau(i, k) = flat(L.tau + i * K + k);
  }
  if (family.omega_size() > 0) family.omega_raw = flat(L.omega);
}

void VariationalParams::validate() const {
  if (scale.m() != dim()) {
    throw std::invalid_argument("variational params: factor scale has " +
                                std::to_string(scale.m()) + " rows for " +
                                std::to_string(dim()) + " transforms");
  }
}

TransformParams neutral_transform(TransformKind kind) {
  switch (kind) {
    case TransformKind::Identity:
      return TransformParams::identity();
    case TransformKind::YJ:
      return TransformParams::yj(1.0);
    case TransformKind::IGH:
      return TransformParams::igh(0.0, kInitialIghH);
    case TransformKind::DoubleYJ:
      return TransformParams::double_yj(1.0, 1.0);
  }
  return TransformParams::identity();
}

VariationalParams VariationalParams::initial(Eigen::Index m, Eigen::Index K, TransformKind kind,
                                             FamilyKind family, std::mt19937_64& rng) {
  VariationalParams lambda;
  lambda.transforms.assign(static_cast<std::size_t>(m), neutral_transform(kind));
  lambda.scale = FactorScale::initial(m, K, rng);
  switch (family) {
    case FamilyKind::Gaussian:
      lambda.family = EllipticalFamily::gaussian();
      break;
    case FamilyKind::StudentT:
      lambda.family = EllipticalFamily::student_t(kInitialNu);
      break;
    case FamilyKind::Laplace:
      lambda.family = EllipticalFamily::laplace();
      break;
    case FamilyKind::ExpPower:
      lambda.family = EllipticalFamily::exp_power(kInitialBeta);
      break;
  }
  return lambda;
}

BaseDraw BaseDraw::draw(Eigen::Index m, Eigen::Index K, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  BaseDraw b;
  b.z.resize(K);
  b.eps.resize(m);
  for (Eigen::Index k = 0; k < K; ++k) b.z(k) = normal(rng);
  for (Eigen::Index j = 0; j < m; ++j) b.eps(j) = normal(rng);
  do {
    b.u = unif(rng);
  } while (b.u <= 0.0);
  return b;
}

SampleRecord sample(const VariationalParams& lambda, const BaseDraw& base) {
  lambda.validate();
  const FactorLoadings ld = build_B_d(lambda.scale);
  return sample_with(lambda, ld, base);
}

double log_q(const Eigen::VectorXd& theta, const VariationalParams& lambda) {
  lambda.validate();
  const Eigen::Index m = lambda.dim();
  if (theta.size() != m) throw std::invalid_argument("log_q: theta has the wrong length");
  Eigen::VectorXd psi(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    psi(i) = k_forward(theta(i), lambda.transforms[static_cast<std::size_t>(i)]);
  }
  const ScaleCache cache(lambda.scale);
  return density_at_psi(psi, lambda, cache).log_q;
}

double log_q_at(const SampleRecord& rec, const VariationalParams& lambda) {
  lambda.validate();
  const ScaleCache cache(lambda.scale);
  return density_at_psi(rec.psi, lambda, cache).log_q;
}

double marginal_log_q(double theta_i, Eigen::Index i, const VariationalParams& lambda) {
  const auto& p = lambda.transforms.at(static_cast<std::size_t>(i));
  const double x = (theta_i - p.mu) / p.sigma();
  const double psi = t_forward(x, p);
  const TransformDerivs td = t_derivs_at_psi(psi, p);
  return marginal_log_density(psi, lambda.family) + std::log(td.d1) - p.log_sigma;
}

Eigen::VectorXd grad_theta_log_q(const SampleRecord& rec, const VariationalParams& lambda) {
  lambda.validate();
  const ScaleCache cache(lambda.scale);
  return grad_from_parts(density_at_psi(rec.psi, lambda, cache), lambda);
}

ThetaJacobian dtheta_dlambda(const SampleRecord& rec, const VariationalParams& lambda) {
  lambda.validate();
  const FactorLoadings ld = build_B_d(lambda.scale);
  return jacobian_with(rec, lambda, ld);
}

Eigen::VectorXd ThetaJacobian::apply_transpose(const Eigen::Ref<const Eigen::VectorXd>& v,
                                               const VariationalParams& lambda) const {
  const ParamLayout L = lambda.layout();
  const Eigen::Index m = lambda.dim();
  const Eigen::Index K = lambda.factors();
  Eigen::VectorXd out(L.total);
  out.segment(L.mu, m) = v;
  out.segment(L.log_sigma, m) = dlog_sigma.cwiseProduct(v);
  for (Eigen::Index i = 0; i < m; ++i) {
    const std::size_t ns = shape_size(lambda.transforms[static_cast<std::size_t>(i)].kind);
    for (std::size_t k = 0; k < ns; ++k) {
      const auto kk = static_cast<Eigen::Index>(k);
      out(L.gamma_offset[static_cast<std::size_t>(i)] + kk) = dgamma(i, kk) * v(i);
    }
    for (Eigen::Index k = 0; k < K; ++k) out(L.tau + i * K + k) = dtau(i, k) * v(i);
  }
  if (L.total > L.omega) out(L.omega) = domega.dot(v);
  return out;
}

Eigen::MatrixXd ThetaJacobian::dense(const VariationalParams& lambda) const {
  const ParamLayout L = lambda.layout();
  const Eigen::Index m = lambda.dim();
  const Eigen::Index K = lambda.factors();
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(m, L.total);
  for (Eigen::Index i = 0; i < m; ++i) {
    D(i, L.mu + i) = 1.0;
    D(i, L.log_sigma + i) = dlog_sigma(i);
    const std::size_t ns = shape_size(lambda.transforms[static_cast<std::size_t>(i)].kind);
    for (std::size_t k = 0; k < ns; ++k) {
      const auto kk = static_cast<Eigen::Index>(k);
      D(i, L.gamma_offset[static_cast<std::size_t>(i)] + kk) = dgamma(i, kk);
    }
    for (Eigen::Index k = 0; k < K; ++k) D(i, L.tau + i * K + k) = dtau(i, k);
    if (L.total > L.omega) D(i, L.omega) = domega(i);
  }
  return D;
}

ReparamResult reparam_step(const BaseDraw& base, const VariationalParams& lambda,
                           const TargetModel& target) {
  lambda.validate();
  if (target.dim() != lambda.dim()) {
    throw std::invalid_argument("reparam: target dimension does not match lambda");
  }
  const ScaleCache cache(lambda.scale);
  const SampleRecord rec = sample_with(lambda, cache.loadings, base);
  const DensityParts parts = density_at_psi(rec.psi, lambda, cache);
  auto [lg, grad_g] = target.log_g_and_grad(rec.theta);
  const Eigen::VectorXd diff = grad_g - grad_from_parts(parts, lambda);
  const ThetaJacobian J = jacobian_with(rec, lambda, cache.loadings);
  ReparamResult out;
  out.grad = J.apply_transpose(diff, lambda);
  out.log_g = lg;
  out.log_q = parts.log_q;
  out.elbo = lg - parts.log_q;
  return out;
}

Eigen::VectorXd reparam_grad(const BaseDraw& base, const VariationalParams& lambda,
                             const TargetModel& target) {
  return reparam_step(base, lambda, target).grad;
}

double elbo_estimate(const BaseDraw& base, const VariationalParams& lambda,
                     const TargetModel& target) {
  lambda.validate();
  const ScaleCache cache(lambda.scale);
  const SampleRecord rec = sample_with(lambda, cache.loadings, base);
  return target.log_g(rec.theta) - density_at_psi(rec.psi, lambda, cache).log_q;
}

}  // namespace copvi
