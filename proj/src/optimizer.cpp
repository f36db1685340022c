#include "copvi/optimizer.hpp"

#include "copvi/errors.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

namespace copvi {

namespace {

constexpr double kDivergenceBound = 1e12;

double median_of(std::vector<double> v) {
  const std::size_t n = v.size();
  const std::size_t mid = n / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  const double hi = v[mid];
  if (n % 2 == 1) return hi;
  const double lo = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lo + hi);
}

LbBar median_window(const std::vector<TracePoint>& trace, std::size_t window, bool tail) {
  if (trace.empty()) throw std::invalid_argument("lb_bar: empty trace");
  LbBar out;
  const std::size_t n = std::min(window, trace.size());
  out.short_trace = trace.size() < window;
  std::vector<double> vals;
  vals.reserve(n);
  const std::size_t first = tail ? trace.size() - n : 0;
  for (std::size_t i = first; i < first + n; ++i) vals.push_back(trace[i].elbo);
  out.value = median_of(std::move(vals));
  return out;
}

}  // namespace

std::string_view to_string(StepRule rule) {
  return rule == StepRule::Adam ? "adam" : "adadelta";
}

StepRule step_rule_from_string(std::string_view name) {
  if (name == "adadelta") return StepRule::Adadelta;
  if (name == "adam") return StepRule::Adam;
  throw std::invalid_argument("unknown step rule: " + std::string(name));
}

void SgaConfig::validate() const {
  auto in_unit = [](double x) { return x > 0.0 && x < 1.0; };
  if (trace_every == 0) throw std::invalid_argument("trace_every must be >= 1");
  if (rule == StepRule::Adadelta && (!in_unit(rho) || !(eps > 0.0))) {
    throw std::invalid_argument("adadelta: rho must lie in (0,1) and eps be positive");
  }
  if (rule == StepRule::Adam &&
      (!in_unit(beta1) || !in_unit(beta2) || !(alpha > 0.0) || !(adam_eps > 0.0))) {
    throw std::invalid_argument("adam: decays must lie in (0,1), alpha and eps positive");
  }
}

OptimizerState OptimizerState::zeros(Eigen::Index n) {
  return {Eigen::VectorXd::Zero(n), Eigen::VectorXd::Zero(n), 0};
}

void sga_step(Eigen::VectorXd& lambda, const Eigen::VectorXd& grad, OptimizerState& state,
              const SgaConfig& cfg) {
  if (grad.size() != lambda.size() || state.acc1.size() != lambda.size()) {
    throw std::invalid_argument("sga_step: dimension mismatch");
  }
  ++state.t;
  if (cfg.rule == StepRule::Adadelta) {
    state.acc1 = cfg.rho * state.acc1 + (1.0 - cfg.rho) * grad.cwiseAbs2();
    const Eigen::VectorXd delta = ((state.acc2.array() + cfg.eps).sqrt() /
                                   (state.acc1.array() + cfg.eps).sqrt() * grad.array())
                                      .matrix();
    state.acc2 = cfg.rho * state.acc2 + (1.0 - cfg.rho) * delta.cwiseAbs2();
    lambda += delta;
    return;
  }
  state.acc1 = cfg.beta1 * state.acc1 + (1.0 - cfg.beta1) * grad;
  state.acc2 = cfg.beta2 * state.acc2 + (1.0 - cfg.beta2) * grad.cwiseAbs2();
  const double t = static_cast<double>(state.t);
  const double c1 = 1.0 - std::pow(cfg.beta1, t);
  const double c2 = 1.0 - std::pow(cfg.beta2, t);
  lambda.array() +=
      cfg.alpha * (state.acc1.array() / c1) / ((state.acc2.array() / c2).sqrt() + cfg.adam_eps);
}

LbBar lb_bar(const std::vector<TracePoint>& trace, std::size_t window) {
  return median_window(trace, window, true);
}

LbBar lb_bar_head(const std::vector<TracePoint>& trace, std::size_t window) {
  return median_window(trace, window, false);
}

FitResult run(const TargetModel& target, const VariationalParams& lambda0, const SgaConfig& cfg,
              const TraceSink& sink) {
  cfg.validate();
  lambda0.validate();
  if (target.dim() != lambda0.dim()) {
    throw std::invalid_argument("run: target dimension does not match lambda");
  }
  FitResult res;
  res.lambda_star = lambda0;
  Eigen::VectorXd flat = lambda0.flatten();
  OptimizerState state = OptimizerState::zeros(flat.size());
  std::mt19937_64 rng(cfg.seed);
  const Eigen::Index m = lambda0.dim();
  const Eigen::Index K = lambda0.factors();
  const ParamLayout layout = lambda0.layout();
  res.trace.reserve(cfg.steps / cfg.trace_every + 1);

  VariationalParams& lam = res.lambda_star;
  for (std::size_t s = 0; s < cfg.steps; ++s) {
    const BaseDraw base = BaseDraw::draw(m, K, rng);
    ReparamResult r;
    try {
      r = reparam_step(base, lam, target);
    } catch (const RunError&) {
      throw;
    } catch (const std::exception& e) {
      throw RunError(s, e.what());
    }
    if (!std::isfinite(r.elbo) || std::abs(r.elbo) > kDivergenceBound) {
      throw RunError(s, "ELBO estimate diverged (" + std::to_string(r.elbo) + ")");
    }
    for (Eigen::Index k = 0; k < r.grad.size(); ++k) {
      if (!std::isfinite(r.grad(k))) {
        throw RunError(s, "non-finite gradient in block " + std::string(layout.block_of(k)) +
                              " at index " + std::to_string(k));
      }
    }
    if (s % cfg.trace_every == 0) {
      res.trace.push_back({s, r.elbo});
      if (sink) sink(res.trace.back());
    }
    sga_step(flat, r.grad, state, cfg);
    lam.unflatten(flat);
  }
  res.steps = cfg.steps;
  if (!res.trace.empty()) res.lb = lb_bar(res.trace);
  return res;
}

}  // namespace copvi
