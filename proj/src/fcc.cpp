#include "kandinsky/fcc.hpp"

#include <random>
#include <string>

namespace kandinsky {
namespace {

// Evaluates g(theta) = a_0 + 2 Re sum_{k>=1} a_k e^{ik theta}.
double eval_sqrt_radius(const Eigen::VectorXcd& a, double theta) {
  const std::complex<double> step = std::polar(1.0, theta);
  std::complex<double> phase = step;
  double g = a(0).real();
  for (Index k = 1; k < a.size(); ++k) {
    g += 2.0 * (a(k) * phase).real();
    phase *= step;
  }
  return g;
}

}  // namespace

FourierFiltration FourierFiltration::circles(Index rows, Index cols, int order,
                                             const std::vector<double>& radii) {
  if (order < 1) throw ValidationError("Fourier order must be at least 1");
  FourierFiltration f;
  f.order = order;
  f.midpoint = {0.5 * double(cols - 1), 0.5 * double(rows - 1)};
  f.extent = {double(cols), double(rows)};
  for (double r : radii) {
    if (!(r >= 0)) throw ValidationError("circle radii must be non-negative");
    Eigen::VectorXcd a = Eigen::VectorXcd::Zero(order);
    a(0) = std::sqrt(r);
    f.coeffs.push_back(std::move(a));
  }
  return f;
}

Eigen::VectorXd FourierFiltration::to_parameters() const {
  Eigen::VectorXd p(parameter_count(levels(), order));
  Index i = 0;
  for (const auto& a : coeffs) {
    p(i++) = a(0).real();
    for (Index k = 1; k < a.size(); ++k) {
      p(i++) = a(k).real();
      p(i++) = a(k).imag();
    }
  }
  return p;
}

FourierFiltration FourierFiltration::from_parameters(const Eigen::VectorXd& params, int m,
                                                     int order, Index rows, Index cols) {
  if (m < 1 || order < 1 || params.size() != parameter_count(m, order))
    throw ValidationError("parameter vector does not match m and Fourier order");
  FourierFiltration f;
  f.order = order;
  f.midpoint = {0.5 * double(cols - 1), 0.5 * double(rows - 1)};
  f.extent = {double(cols), double(rows)};
  Index i = 0;
  for (int l = 0; l < m; ++l) {
    Eigen::VectorXcd a(order);
    a(0) = params(i++);
    for (Index k = 1; k < order; ++k) {
      a(k) = {params(i), params(i + 1)};
      i += 2;
    }
    f.coeffs.push_back(std::move(a));
  }
  return f;
}

double FourierFiltration::sqrt_radius(int l, double theta) const {
  if (l < 0 || l >= levels()) throw ValidationError("curve index out of range");
  return eval_sqrt_radius(coeffs[static_cast<std::size_t>(l)], theta);
}

double FourierFiltration::mean_radius(int l) const {
  if (l < 0 || l >= levels()) throw ValidationError("curve index out of range");
  const auto& a = coeffs[static_cast<std::size_t>(l)];
  double s = std::norm(a(0));
  for (Index k = 1; k < a.size(); ++k) s += 2.0 * std::norm(a(k));
  return s;
}

double eval_radius(const FourierFiltration& filtration, int l, double theta) {
  const double g = filtration.sqrt_radius(l, theta);
  return g * g;
}

FCCConfig resolve_config(const FCCConfig& config, Index rows, Index cols) {
  FCCConfig c = config;
  if (c.m < 1) throw ValidationError("FCC needs at least one nested set (m >= 1)");
  if (c.order < 1) throw ValidationError("Fourier order must be at least 1");
  if (c.angular_nodes < 1 || c.gauss_order < 1 || c.penalty_nodes < 1)
    throw ValidationError("quadrature sizes must be positive");
  if (!(c.penalty_weight > 0)) throw ValidationError("penalty weight must be positive");
  if (c.max_iterations < 0) throw ValidationError("max_iterations must be non-negative");
  if (!(c.gradient_step > 0)) throw ValidationError("gradient step must be positive");
  if (rows < 2 || cols < 2) throw ValidationError("FCC needs an image of at least 2 x 2 pixels");
  const double inscribed = 0.5 * double(std::min(rows, cols) - 1);
  if (c.r_max <= 0) c.r_max = 0.45 * double(std::min(rows, cols));
  c.r_max = std::min(c.r_max, inscribed);
  if (config.r_max > inscribed)
    throw ValidationError("R_max " + std::to_string(config.r_max) +
                          " exceeds the inscribed circle radius " + std::to_string(inscribed));
  if (c.sigma <= 0) c.sigma = 0.01 * std::sqrt(c.r_max);
  return c;
}

FieldJ::FieldJ(Index rows, Index cols, Eigen::MatrixXd values)
    : rows_(rows), cols_(cols), values_(std::move(values)) {
  if (rows_ < 1 || cols_ < 1 || values_.rows() != rows_ * cols_ || values_.cols() < 1)
    throw ValidationError("field values must be (rows * cols) x dims");
  if (!values_.allFinite()) throw ValidationError("field values must be finite");
  values_t_ = values_.transpose();
}

FieldJ::FieldJ(const QuantileFeatureGrid& features)
    : FieldJ(features.rows, features.cols, features.features) {}

FieldJ::FieldJ(const PixelArray& scalar)
    : FieldJ(scalar.rows(), scalar.cols(),
             Eigen::Map<const Eigen::VectorXd>(scalar.data(), scalar.size())) {}

FccQuadrature::FccQuadrature(int angular_nodes, int gauss_order)
    : cos_theta(angular_nodes), sin_theta(angular_nodes), theta(angular_nodes),
      radial(gauss_legendre(gauss_order)) {
  if (angular_nodes < 1) throw ValidationError("angular grid must have at least one node");
  for (int j = 0; j < angular_nodes; ++j) {
    theta(j) = 2.0 * std::numbers::pi * j / angular_nodes;
    cos_theta(j) = std::cos(theta(j));
    sin_theta(j) = std::sin(theta(j));
  }
}

Eigen::MatrixXd radius_table(const FourierFiltration& filtration, const Eigen::VectorXd& theta) {
  Eigen::MatrixXd out(filtration.levels(), theta.size());
  for (int l = 0; l < filtration.levels(); ++l) {
    for (Index j = 0; j < theta.size(); ++j) {
      const double g = eval_sqrt_radius(filtration.coeffs[static_cast<std::size_t>(l)], theta(j));
      out(l, j) = g * g;
    }
  }
  return out;
}

Eigen::VectorXcd radius_coefficients(const FourierFiltration& filtration, int l) {
  if (l < 0 || l >= filtration.levels()) throw ValidationError("curve index out of range");
  const auto& a = filtration.coeffs[static_cast<std::size_t>(l)];
  const Index k = a.size() - 1;
  // Two-sided sequence a_{-k} .. a_k with a_{-j} = conj(a_j).
  Eigen::VectorXcd two_sided(2 * k + 1);
  for (Index j = -k; j <= k; ++j)
    two_sided(j + k) = j >= 0 ? a(j) : std::conj(a(-j));
  Eigen::VectorXcd b = Eigen::VectorXcd::Zero(4 * k + 1);
  for (Index i = 0; i < two_sided.size(); ++i) {
    for (Index j = 0; j < two_sided.size(); ++j) b(i + j) += two_sided(i) * two_sided(j);
  }
  return b;
}

double domain_area(const FourierFiltration& filtration, int l) {
  const int m = filtration.levels();
  if (l < 0 || l > m) throw ValidationError("domain index out of range");
  auto disk = [&](int curve) {
    return std::numbers::pi * radius_coefficients(filtration, curve).squaredNorm();
  };
  if (l == 0) return disk(0);
  if (l < m) return disk(l) - disk(l - 1);
  return filtration.rectangle_area() - disk(m - 1);
}

std::vector<double> penalty_terms(const FourierFiltration& filtration, double r_max,
                                  int penalty_nodes) {
  const int m = filtration.levels();
  Eigen::VectorXd theta(penalty_nodes);
  for (int j = 0; j < penalty_nodes; ++j) theta(j) = 2.0 * std::numbers::pi * j / penalty_nodes;
  const Eigen::MatrixXd r = radius_table(filtration, theta);
  std::vector<double> terms;
  const double inf = std::numeric_limits<double>::infinity();
  for (int l = 1; l <= m; ++l) {
    double sum = 0.0;
    for (int j = 0; j < penalty_nodes; ++j) {
      const double gap = l < m ? r(l, j) - r(l - 1, j) : r_max - r(m - 1, j);
      if (!(gap > 0)) { sum = inf; break; }
      sum += 1.0 / gap;
    }
    terms.push_back(std::isfinite(sum) ? 2.0 * std::numbers::pi * sum / penalty_nodes : inf);
  }
  return terms;
}

double penalty(const FourierFiltration& filtration, const FCCConfig& config) {
  double total = 0.0;
  for (double t : penalty_terms(filtration, config.r_max, config.penalty_nodes)) total += t;
  return total;
}

Eigen::VectorXd fcc_initial_parameters(const FCCConfig& c, std::uint64_t draw) {
  std::seed_seq seq{static_cast<std::uint32_t>(c.seed), static_cast<std::uint32_t>(c.seed >> 32),
                    static_cast<std::uint32_t>(draw)};
  std::mt19937_64 rng(seq);
  std::normal_distribution<double> noise(0.0, c.sigma);
  Eigen::VectorXd p(FourierFiltration::parameter_count(c.m, c.order));
  Index i = 0;
  for (int l = 0; l < c.m; ++l) {
    p(i++) = std::sqrt(double(l) / c.m * c.r_max) + noise(rng);
    for (int k = 1; k < c.order; ++k) {
      p(i++) = noise(rng);
      p(i++) = noise(rng);
    }
  }
  return p;
}

ClusterMap filtration_to_clusters(const FourierFiltration& filtration, Index rows, Index cols) {
  ClusterMap map;
  map.n_clusters = filtration.levels() + 1;
  map.assignment.resize(rows, cols);
  for (Index r = 0; r < rows; ++r) {
    for (Index c = 0; c < cols; ++c) {
      const double dx = double(c) - filtration.midpoint(0);
      const double dy = double(r) - filtration.midpoint(1);
      const double rho = std::hypot(dx, dy);
      const double theta = std::atan2(dy, dx);
      int id = 0;
      while (id < filtration.levels() && rho > eval_radius(filtration, id, theta)) ++id;
      map.assignment(r, c) = id;
    }
  }
  return map;
}

}  // namespace kandinsky
