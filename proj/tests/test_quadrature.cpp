#include "kandinsky/quadrature.hpp"

#include "doctest.h"

#include <cmath>

using namespace kandinsky;

TEST_CASE("low-order rules match the closed forms") {
  const auto g1 = gauss_legendre(1);
  CHECK(g1.nodes(0) == doctest::Approx(0.0));
  CHECK(g1.weights(0) == doctest::Approx(2.0));

  const auto g2 = gauss_legendre(2);
  CHECK(std::abs(g2.nodes(0)) == doctest::Approx(1 / std::sqrt(3.0)).epsilon(1e-14));
  CHECK(g2.weights(0) == doctest::Approx(1.0).epsilon(1e-14));

  const auto g3 = gauss_legendre(3);
  const double outer = std::sqrt(0.6);
  double maxnode = 0, midweight = 0;
  for (int i = 0; i < 3; ++i) {
    maxnode = std::max(maxnode, std::abs(g3.nodes(i)));
    if (std::abs(g3.nodes(i)) < 1e-12) midweight = g3.weights(i);
  }
  CHECK(maxnode == doctest::Approx(outer).epsilon(1e-14));
  CHECK(midweight == doctest::Approx(8.0 / 9).epsilon(1e-14));
}

TEST_CASE("rules integrate polynomials up to degree 2n-1 exactly") {
  for (int n : {1, 2, 4, 8, 16, 32}) {
    const auto g = gauss_legendre(n);
    CHECK(g.weights.sum() == doctest::Approx(2.0).epsilon(1e-13));
    CHECK((g.nodes.array().abs() < 1).all());
    CHECK((g.weights.array() > 0).all());
    for (int d = 0; d <= 2 * n - 1; ++d) {
      double q = 0;
      for (int i = 0; i < n; ++i) q += g.weights(i) * std::pow(g.nodes(i), d);
      const double exact = d % 2 ? 0.0 : 2.0 / (d + 1);
      CHECK(q == doctest::Approx(exact).epsilon(1e-12).scale(1));
    }
  }
}

TEST_CASE("smooth integrands converge") {
  const auto g = gauss_legendre(12);
  double q = 0;
  for (int i = 0; i < 12; ++i) q += g.weights(i) * std::exp(g.nodes(i));
  CHECK(q == doctest::Approx(std::exp(1.0) - std::exp(-1.0)).epsilon(1e-14));
}
