#pragma once

#include "copvi/copula_va.hpp"
#include "copvi/target_model.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string_view>
#include <vector>

namespace copvi {

enum class StepRule { Adadelta, Adam };

std::string_view to_string(StepRule rule);
StepRule step_rule_from_string(std::string_view name);

struct SgaConfig {
  std::size_t steps = 15000;
  std::uint64_t seed = 1;
  StepRule rule = StepRule::Adadelta;
  double rho = 0.95;  // ADADELTA decay
  double eps = 1e-6;  // ADADELTA conditioner
  double alpha = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  std::size_t trace_every = 1;

  void validate() const;
};

struct OptimizerState {
  Eigen::VectorXd acc1;  // E[g^2] (ADADELTA) or first moment (ADAM)
  Eigen::VectorXd acc2;  // E[dx^2] (ADADELTA) or second moment (ADAM)
  std::size_t t = 0;

  static OptimizerState zeros(Eigen::Index n);
};

// One ascent step lambda += delta o grad, in place.
void sga_step(Eigen::VectorXd& lambda, const Eigen::VectorXd& grad, OptimizerState& state,
              const SgaConfig& cfg);

struct TracePoint {
  std::size_t step = 0;
  double elbo = 0.0;
};

struct LbBar {
  double value = 0.0;
  bool short_trace = false;  // fewer entries than the window
};

// Median of the last `window` estimates (all of them when fewer exist).
LbBar lb_bar(const std::vector<TracePoint>& trace, std::size_t window = 500);

// Median of the first `window` estimates.
LbBar lb_bar_head(const std::vector<TracePoint>& trace, std::size_t window = 500);

struct FitResult {
  VariationalParams lambda_star;
  std::vector<TracePoint> trace;
  LbBar lb;
  std::size_t steps = 0;
};

using TraceSink = std::function<void(const TracePoint&)>;

// Runs cfg.steps SGA iterations from lambda0. Numeric failures are rethrown as
// RunError carrying the step index.
FitResult run(const TargetModel& target, const VariationalParams& lambda0, const SgaConfig& cfg,
              const TraceSink& sink = {});

}  // namespace copvi
