#pragma once

#include <functional>
#include <vector>

#include <Eigen/Dense>

namespace snowlink {

struct ObjectiveValue {
  double value;
  Eigen::VectorXd grad;
};

using Objective = std::function<ObjectiveValue(const Eigen::VectorXd&)>;

struct OptimizerOptions {
  double tolerance = 1e-8;  // inf-norm of the projected score
  int max_iterations = 200;
  double max_step = 5.0;
};

struct OptimizerResult {
  Eigen::VectorXd x;
  double value = 0.0;
  Eigen::VectorXd grad;
  double grad_norm = 0.0;
  int iterations = 0;
  bool converged = false;
};

// central differences of the gradient, symmetrized
Eigen::MatrixXd fd_hessian(const Objective& f, const Eigen::VectorXd& x);

// damped Newton ascent; coordinates flagged in `nonnegative` are projected onto [0, inf)
OptimizerResult maximize(const Objective& f, Eigen::VectorXd x0, const std::vector<bool>& nonnegative,
                         const OptimizerOptions& options = {});

}  // namespace snowlink
