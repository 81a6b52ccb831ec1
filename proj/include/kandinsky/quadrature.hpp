#pragma once

#include <Eigen/Core>

namespace kandinsky {

/// Gauss-Legendre rule of the given order on [-1, 1].
struct GaussLegendre {
  Eigen::VectorXd nodes;
  Eigen::VectorXd weights;
};

/// Nodes are roots of P_n found by Newton iteration; exact for polynomials of degree <= 2n - 1.
GaussLegendre gauss_legendre(int order);

}  // namespace kandinsky
