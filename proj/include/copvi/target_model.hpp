#pragma once

#include <Eigen/Dense>

#include <utility>

namespace copvi {

// Unnormalized log posterior g(theta) and its gradient.
class TargetModel {
 public:
  virtual ~TargetModel() = default;

  virtual Eigen::Index dim() const = 0;
  virtual double log_g(const Eigen::VectorXd& theta) const = 0;
  virtual Eigen::VectorXd grad_log_g(const Eigen::VectorXd& theta) const = 0;

  // Targets that share work between the two override this.
  virtual std::pair<double, Eigen::VectorXd> log_g_and_grad(const Eigen::VectorXd& theta) const {
    return {log_g(theta), grad_log_g(theta)};
  }
};

}  // namespace copvi
