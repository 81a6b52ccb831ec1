#pragma once

// Fourier Concentric Clustering: a nested decomposition of the image rectangle into
// star-shaped domains whose boundaries are squared finite Fourier series, chosen to
// minimize the summed within-domain variance of a vector field plus a nesting barrier.

#include "kandinsky/bfgs.hpp"
#include "kandinsky/error.hpp"
#include "kandinsky/grid.hpp"
#include "kandinsky/kmeans.hpp"
#include "kandinsky/quadrature.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <complex>
#include <concepts>
#include <cstdint>
#include <limits>
#include <numbers>
#include <vector>

namespace kandinsky {

struct FCCConfig {
  int m = 3;               // nested sets V_0 .. V_{m-1}; m + 1 domains
  int order = 6;           // Fourier order K
  int angular_nodes = 64;  // K_I
  int gauss_order = 32;    // K_G
  int penalty_nodes = 256; // K_Lambda
  double sigma = -1.0;     // init noise std; <= 0 selects 0.01 sqrt(R_max)
  double penalty_weight = 1e-3;
  double r_max = -1.0;     // <= 0 selects 0.45 min(n1, n2)
  int max_iterations = 500;
  double gradient_step = 1e-5;
  std::uint64_t seed = 0;
};

/// Concentric filtration of the rectangle [0, n1 - 1] x [0, n2 - 1].
/// Curve l has sqrt-radius g_l(theta) = sum_{|k| < K} a_lk e^{ik theta} with
/// a_{l,-k} = conj(a_lk) and a_l0 real; its radius is r_l = g_l^2.
struct FourierFiltration {
  int order = 0;
  std::vector<Eigen::VectorXcd> coeffs;  // m vectors of a_l0 .. a_l,K-1
  Eigen::Vector2d midpoint = Eigen::Vector2d::Zero();  // (p1, p2) = ((n1 - 1)/2, (n2 - 1)/2)
  Eigen::Vector2d extent = Eigen::Vector2d::Zero();    // (n1, n2) = (W, H)

  int levels() const { return static_cast<int>(coeffs.size()); }

  /// Filtration of m circles with the given radii, centered on the image midpoint.
  static FourierFiltration circles(Index rows, Index cols, int order, const std::vector<double>& radii);

  /// Parameters per curve: [Re a_0, Re a_1, Im a_1, ..., Re a_{K-1}, Im a_{K-1}].
  Eigen::VectorXd to_parameters() const;
  static FourierFiltration from_parameters(const Eigen::VectorXd& params, int m, int order,
                                           Index rows, Index cols);
  static Index parameter_count(int m, int order) { return static_cast<Index>(m) * (2 * order - 1); }

  double sqrt_radius(int l, double theta) const;
  /// Mean of r_l over theta: sum_k |a_lk|^2 over both signs of k.
  double mean_radius(int l) const;
  /// (n1 - 1)(n2 - 1).
  double rectangle_area() const { return (extent(0) - 1.0) * (extent(1) - 1.0); }
};

/// r_l(theta), 2 pi periodic and non-negative.
double eval_radius(const FourierFiltration& filtration, int l, double theta);

/// Validates the configuration against the grid shape and fills defaulted fields.
FCCConfig resolve_config(const FCCConfig& config, Index rows, Index cols);

/// Vector-valued field on the image rectangle; writes dims() values at (x, y) = (col, row).
template <typename F>
concept VectorField = requires(const F& f, double x, double y, double* out) {
  { f.dims() } -> std::convertible_to<Index>;
  f(x, y, out);
};

/// Pixel data extended to the rectangle by bilinear interpolation, clamped at the border.
/// Exact at pixel centers.
class FieldJ {
 public:
  FieldJ() = default;
  /// values: (rows * cols) x dims, row r * cols + c for pixel (r, c).
  FieldJ(Index rows, Index cols, Eigen::MatrixXd values);
  explicit FieldJ(const QuantileFeatureGrid& features);
  explicit FieldJ(const PixelArray& scalar);

  Index dims() const { return values_.cols(); }
  Index rows() const { return rows_; }
  Index cols() const { return cols_; }

  void operator()(double x, double y, double* out) const {
    x = std::clamp(x, 0.0, double(cols_ - 1));
    y = std::clamp(y, 0.0, double(rows_ - 1));
    const auto c0 = std::min(static_cast<Index>(x), cols_ > 1 ? cols_ - 2 : 0);
    const auto r0 = std::min(static_cast<Index>(y), rows_ > 1 ? rows_ - 2 : 0);
    const Index c1 = std::min(c0 + 1, cols_ - 1);
    const Index r1 = std::min(r0 + 1, rows_ - 1);
    const double fx = x - double(c0);
    const double fy = y - double(r0);
    const double w00 = (1 - fx) * (1 - fy), w01 = fx * (1 - fy);
    const double w10 = (1 - fx) * fy, w11 = fx * fy;
    const double* v00 = values_t_.data() + (r0 * cols_ + c0) * dims();
    const double* v01 = values_t_.data() + (r0 * cols_ + c1) * dims();
    const double* v10 = values_t_.data() + (r1 * cols_ + c0) * dims();
    const double* v11 = values_t_.data() + (r1 * cols_ + c1) * dims();
    for (Index k = 0; k < dims(); ++k)
      out[k] = w00 * v00[k] + w01 * v01[k] + w10 * v10[k] + w11 * v11[k];
  }

 private:
  Index rows_ = 0;
  Index cols_ = 0;
  Eigen::MatrixXd values_;    // pixels x dims
  Eigen::MatrixXd values_t_;  // dims x pixels, contiguous per pixel
};

/// Adapts a callable (x, y) -> double to a one-component field.
template <typename Fn>
struct ScalarField {
  Fn fn;
  Index dims() const { return 1; }
  void operator()(double x, double y, double* out) const { out[0] = fn(x, y); }
};
template <typename Fn>
ScalarField(Fn) -> ScalarField<Fn>;

/// Angular grid, radial Gauss-Legendre rule, and the 2-D rule on the rectangle.
struct FccQuadrature {
  Eigen::VectorXd cos_theta;
  Eigen::VectorXd sin_theta;
  Eigen::VectorXd theta;
  GaussLegendre radial;

  FccQuadrature(int angular_nodes, int gauss_order);
};

/// Values of r_l at each grid angle: result(l, j) = r_l(theta_j).
Eigen::MatrixXd radius_table(const FourierFiltration& filtration, const Eigen::VectorXd& theta);

namespace detail {

// Accumulates, for each angle, the radial integral of (J, |J|^2) * r over [inner, outer]
// and returns 2 pi times the angular mean (the zeroth Fourier coefficient).
template <VectorField F>
Eigen::VectorXd band_moments(const F& field, const Eigen::Vector2d& center,
                             const FccQuadrature& q, const Eigen::VectorXd& inner,
                             const Eigen::VectorXd& outer) {
  const Index dims = field.dims();
  Eigen::VectorXd total = Eigen::VectorXd::Zero(dims + 1);
  Eigen::VectorXd line(dims + 1);
  Eigen::VectorXd value(dims);
  const Index angles = q.theta.size();
  for (Index j = 0; j < angles; ++j) {
    const double a = inner(j);
    const double b = outer(j);
    const double half = 0.5 * (b - a);
    const double mid = 0.5 * (b + a);
    line.setZero();
    for (Index g = 0; g < q.radial.nodes.size(); ++g) {
      const double r = mid + half * q.radial.nodes(g);
      field(center(0) + r * q.cos_theta(j), center(1) + r * q.sin_theta(j), value.data());
      const double w = q.radial.weights(g) * r;
      line.head(dims) += w * value;
      line(dims) += w * value.squaredNorm();
    }
    total += half * line;
  }
  return (2.0 * std::numbers::pi / double(angles)) * total;
}

template <VectorField F>
Eigen::VectorXd rectangle_moments(const F& field, const FourierFiltration& filtration,
                                  const GaussLegendre& rule) {
  const Index dims = field.dims();
  const double hx = 0.5 * (filtration.extent(0) - 1.0);
  const double hy = 0.5 * (filtration.extent(1) - 1.0);
  Eigen::VectorXd total = Eigen::VectorXd::Zero(dims + 1);
  Eigen::VectorXd value(dims);
  for (Index i = 0; i < rule.nodes.size(); ++i) {
    for (Index j = 0; j < rule.nodes.size(); ++j) {
      field(hx + hx * rule.nodes(i), hy + hy * rule.nodes(j), value.data());
      const double w = rule.weights(i) * rule.weights(j) * hx * hy;
      total.head(dims) += w * value;
      total(dims) += w * value.squaredNorm();
    }
  }
  return total;
}

}  // namespace detail

/// Integrals of (J_1 .. J_p, |J|^2) over every domain A_0 .. A_m.
template <VectorField F>
std::vector<Eigen::VectorXd> domain_moments(const FourierFiltration& filtration, const F& field,
                                            const FccQuadrature& q,
                                            const Eigen::VectorXd& rectangle) {
  const int m = filtration.levels();
  const Eigen::MatrixXd radii = radius_table(filtration, q.theta);
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(q.theta.size());
  std::vector<Eigen::VectorXd> out;
  out.reserve(static_cast<std::size_t>(m + 1));
  Eigen::VectorXd inside = Eigen::VectorXd::Zero(field.dims() + 1);
  for (int l = 0; l < m; ++l) {
    const Eigen::VectorXd inner = l == 0 ? zero : Eigen::VectorXd(radii.row(l - 1).transpose());
    out.push_back(detail::band_moments(field, filtration.midpoint, q, inner, radii.row(l).transpose()));
    inside += out.back();
  }
  // Outer domain: rectangle minus V_{m-1}. The bands telescope to the disk integral.
  out.push_back(rectangle - inside);
  return out;
}

/// Quadrature approximation of the integral of a scalar field f(x, y) over A_l, 0 <= l <= m.
template <typename Fn>
double integrate_domain(const FourierFiltration& filtration, int l, Fn&& f,
                        int angular_nodes = 64, int gauss_order = 32) {
  const int m = filtration.levels();
  if (l < 0 || l > m) throw ValidationError("domain index out of range");
  const FccQuadrature q(angular_nodes, gauss_order);
  const ScalarField<std::decay_t<Fn>> field{f};
  if (l == m) {
    const auto rect = detail::rectangle_moments(field, filtration, q.radial);
    const Eigen::MatrixXd radii = radius_table(filtration, q.theta);
    const auto disk = detail::band_moments(field, filtration.midpoint, q,
                                           Eigen::VectorXd::Zero(q.theta.size()),
                                           radii.row(m - 1).transpose());
    return rect(0) - disk(0);
  }
  const Eigen::MatrixXd radii = radius_table(filtration, q.theta);
  const Eigen::VectorXd inner =
      l == 0 ? Eigen::VectorXd(Eigen::VectorXd::Zero(q.theta.size())) : Eigen::VectorXd(radii.row(l - 1).transpose());
  return detail::band_moments(field, filtration.midpoint, q, inner, radii.row(l).transpose())(0);
}

/// Self-convolution of the two-sided coefficient sequence of g_l; these are the
/// Fourier coefficients of r_l, indexed -2(K-1) .. 2(K-1).
Eigen::VectorXcd radius_coefficients(const FourierFiltration& filtration, int l);

/// Lebesgue measure of A_l computed spectrally: (1/2) int r_l^2 = pi sum_k |b_k|^2 with b
/// the coefficients of r_l; A_m is the rectangle minus V_{m-1}.
double domain_area(const FourierFiltration& filtration, int l);

struct MeanVariance {
  Eigen::VectorXd mean;
  double variance = 0.0;
};

/// Mean of J under the normalized area measure on A_l and E|J - mu|^2.
/// Throws DegenerateDomainError when the domain area vanishes.
template <VectorField F>
MeanVariance domain_mean_variance(const FourierFiltration& filtration, int l, const F& field,
                                  int angular_nodes = 64, int gauss_order = 32) {
  const int m = filtration.levels();
  if (l < 0 || l > m) throw ValidationError("domain index out of range");
  const FccQuadrature q(angular_nodes, gauss_order);
  const auto rect = detail::rectangle_moments(field, filtration, q.radial);
  const auto moments = domain_moments(filtration, field, q, rect)[static_cast<std::size_t>(l)];
  const double area = domain_area(filtration, l);
  if (!(area > 1e-12 * filtration.rectangle_area()))
    throw DegenerateDomainError("domain " + std::to_string(l) + " has vanishing area");
  const Index dims = field.dims();
  MeanVariance mv;
  mv.mean = moments.head(dims) / area;
  mv.variance = moments(dims) / area - mv.mean.squaredNorm();
  return mv;
}

/// Nesting barrier terms Lambda_1 .. Lambda_m on a K_Lambda grid:
/// int dtheta / (r_l - r_{l-1}) and int dtheta / (R_max - r_{m-1}).
/// Returns +infinity when any gap is non-positive on the grid.
std::vector<double> penalty_terms(const FourierFiltration& filtration, double r_max, int penalty_nodes);
double penalty(const FourierFiltration& filtration, const FCCConfig& config);

/// Objective evaluator bound to one field and grid; caches quadrature and the
/// rectangle integral, which do not depend on the coefficients.
template <VectorField F>
class FccProblem {
 public:
  FccProblem(const F& field, Index rows, Index cols, const FCCConfig& config)
      : field_(field), rows_(rows), cols_(cols), config_(resolve_config(config, rows, cols)),
        quad_(config_.angular_nodes, config_.gauss_order) {
    const auto probe = FourierFiltration::circles(rows, cols, config_.order, std::vector<double>(static_cast<std::size_t>(config_.m), 1.0));
    rectangle_ = detail::rectangle_moments(field_, probe, quad_.radial);
  }

  const FCCConfig& config() const { return config_; }
  Index rows() const { return rows_; }
  Index cols() const { return cols_; }

  FourierFiltration decode(const Eigen::VectorXd& params) const {
    return FourierFiltration::from_parameters(params, config_.m, config_.order, rows_, cols_);
  }

  /// Sum of the m + 1 domain variances; +infinity if any domain is degenerate.
  double variance_term(const FourierFiltration& filtration) const {
    const auto moments = domain_moments(filtration, field_, quad_, rectangle_);
    const Index dims = field_.dims();
    const double floor_area = 1e-12 * filtration.rectangle_area();
    double total = 0.0;
    for (int l = 0; l <= config_.m; ++l) {
      const double area = domain_area(filtration, l);
      if (!(area > floor_area)) return std::numeric_limits<double>::infinity();
      const auto& mo = moments[static_cast<std::size_t>(l)];
      const Eigen::VectorXd mean = mo.head(dims) / area;
      total += mo(dims) / area - mean.squaredNorm();
    }
    return total;
  }

  double penalty_term(const FourierFiltration& filtration) const {
    return penalty(filtration, config_);
  }

  /// Total variance plus w times the nesting barrier.
  double objective(const Eigen::VectorXd& params) const {
    const auto filtration = decode(params);
    const double barrier = penalty_term(filtration);
    if (!std::isfinite(barrier)) return std::numeric_limits<double>::infinity();
    const double var = variance_term(filtration);
    if (!std::isfinite(var)) return var;
    return var + config_.penalty_weight * barrier;
  }

  Objective as_objective() const {
    return [this](const Eigen::VectorXd& p) { return objective(p); };
  }

 private:
  F field_;
  Index rows_;
  Index cols_;
  FCCConfig config_;
  FccQuadrature quad_;
  Eigen::VectorXd rectangle_;
};

template <VectorField F>
double fcc_objective(const Eigen::VectorXd& params, const F& field, Index rows, Index cols,
                     const FCCConfig& config) {
  return FccProblem<F>(field, rows, cols, config).objective(params);
}

/// Noisy concentric circles: constant term sqrt((l/m) R_max) plus N(0, sigma) on every
/// real parameter.
Eigen::VectorXd fcc_initial_parameters(const FCCConfig& resolved, std::uint64_t draw);

struct FccResult {
  FourierFiltration filtration;
  FourierFiltration initial;
  double objective = 0.0;
  double initial_objective = 0.0;
  std::vector<double> history;
  int iterations = 0;
};

/// BFGS on the objective from the noisy-circle start, with central-difference gradients.
/// Up to 10 initial draws are tried until one has a finite objective.
template <VectorField F>
FccResult fcc_optimize(const F& field, Index rows, Index cols, const FCCConfig& config) {
  const FccProblem<F> problem(field, rows, cols, config);
  const auto& cfg = problem.config();
  Eigen::VectorXd x0;
  double f0 = std::numeric_limits<double>::infinity();
  for (std::uint64_t draw = 0; draw < 10 && !std::isfinite(f0); ++draw) {
    x0 = fcc_initial_parameters(cfg, draw);
    f0 = problem.objective(x0);
  }
  if (!std::isfinite(f0))
    throw ValidationError("FCC initialization produced no feasible filtration in 10 draws");

  BfgsOptions options;
  options.max_iterations = cfg.max_iterations;
  options.fd_step = cfg.gradient_step;
  const auto run = bfgs_minimize(problem.as_objective(), x0, options);

  FccResult result;
  result.initial = problem.decode(x0);
  result.initial_objective = f0;
  const bool improved = run.value <= f0;
  result.filtration = problem.decode(improved ? run.x : x0);
  result.objective = improved ? run.value : f0;
  result.history = run.history;
  result.iterations = run.iterations;
  return result;
}

/// Pixel (r, c) goes to the first l with distance <= r_l(theta) in polar coordinates
/// about the midpoint; pixels outside every curve go to cluster m. Unused ids are kept.
ClusterMap filtration_to_clusters(const FourierFiltration& filtration, Index rows, Index cols);

}  // namespace kandinsky
