#pragma once

#include <Eigen/Core>

#include <functional>
#include <vector>

namespace kandinsky {

using Objective = std::function<double(const Eigen::VectorXd&)>;

/// Central differences with per-component step h_i = step * max(1, |x_i|). Where one
/// side is non-finite the one-sided difference is used; where both are, the component is 0.
Eigen::VectorXd central_difference_gradient(const Objective& f, const Eigen::VectorXd& x,
                                            double step);

struct BfgsOptions {
  int max_iterations = 500;
  double gradient_tolerance = 1e-6;
  double fd_step = 1e-5;
  double armijo = 1e-4;
  int max_backtracks = 60;
};

struct BfgsResult {
  Eigen::VectorXd x;
  double value = 0.0;
  double initial_value = 0.0;
  std::vector<double> history;  // objective at the start and after each accepted step
  int iterations = 0;
  bool converged = false;       // gradient norm fell below tolerance
};

/// Quasi-Newton minimization with the inverse-Hessian BFGS update and a backtracking
/// line search enforcing sufficient decrease. Non-finite trial values are rejected by the
/// line search, so an infinite objective acts as a barrier. Requires f(x0) finite.
BfgsResult bfgs_minimize(const Objective& f, const Eigen::VectorXd& x0, const BfgsOptions& options);

}  // namespace kandinsky
