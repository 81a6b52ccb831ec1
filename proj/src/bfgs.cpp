#include "kandinsky/bfgs.hpp"

#include "kandinsky/error.hpp"
#include "kandinsky/parallel.hpp"

#include <Eigen/Dense>

#include <cmath>

namespace kandinsky {

Eigen::VectorXd central_difference_gradient(const Objective& f, const Eigen::VectorXd& x,
                                            double step) {
  const Eigen::Index n = x.size();
  Eigen::VectorXd grad(n);
  const double fx = f(x);
  parallel_for(0, n, [&](std::ptrdiff_t i) {
    const double h = step * std::max(1.0, std::abs(x(i)));
    Eigen::VectorXd probe = x;
    probe(i) = x(i) + h;
    const double up = f(probe);
    probe(i) = x(i) - h;
    const double down = f(probe);
    const bool up_ok = std::isfinite(up);
    const bool down_ok = std::isfinite(down);
    if (up_ok && down_ok) {
      grad(i) = (up - down) / (2.0 * h);
    } else if (up_ok && std::isfinite(fx)) {
      grad(i) = (up - fx) / h;
    } else if (down_ok && std::isfinite(fx)) {
      grad(i) = (fx - down) / h;
    } else {
      grad(i) = 0.0;
    }
  });
  return grad;
}

BfgsResult bfgs_minimize(const Objective& f, const Eigen::VectorXd& x0, const BfgsOptions& options) {
  const Eigen::Index n = x0.size();
  BfgsResult result;
  result.x = x0;
  result.value = f(x0);
  result.initial_value = result.value;
  if (!std::isfinite(result.value)) throw ValidationError("BFGS start point has a non-finite objective");
  result.history.push_back(result.value);

  Eigen::VectorXd g = central_difference_gradient(f, result.x, options.fd_step);
  Eigen::MatrixXd inv_h = Eigen::MatrixXd::Identity(n, n);
  bool identity = true;

  for (int it = 0; it < options.max_iterations; ++it) {
    if (g.norm() < options.gradient_tolerance) {
      result.converged = true;
      break;
    }
    Eigen::VectorXd dir = -inv_h * g;
    double slope = g.dot(dir);
    if (!(slope < 0)) {
      inv_h.setIdentity();
      identity = true;
      dir = -g;
      slope = -g.squaredNorm();
    }

    double t = 1.0;
    double trial_value = 0.0;
    Eigen::VectorXd trial;
    bool accepted = false;
    for (int k = 0; k < options.max_backtracks; ++k, t *= 0.5) {
      trial = result.x + t * dir;
      trial_value = f(trial);
      if (std::isfinite(trial_value) && trial_value <= result.value + options.armijo * t * slope) {
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      if (identity) break;  // steepest descent made no progress either
      inv_h.setIdentity();
      identity = true;
      continue;
    }

    const Eigen::VectorXd s = trial - result.x;
    const Eigen::VectorXd g_new = central_difference_gradient(f, trial, options.fd_step);
    const Eigen::VectorXd y = g_new - g;
    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      if (identity) inv_h *= sy / y.squaredNorm();
      const double rho = 1.0 / sy;
      const Eigen::MatrixXd left = Eigen::MatrixXd::Identity(n, n) - rho * s * y.transpose();
      inv_h = left * inv_h * left.transpose() + rho * s * s.transpose();
      identity = false;
    }
    result.x = trial;
    result.value = trial_value;
    result.history.push_back(trial_value);
    g = g_new;
    result.iterations = it + 1;
  }
  return result;
}

}  // namespace kandinsky
