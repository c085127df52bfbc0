#pragma once

// Oriented base manifolds M in R^n: the round unit sphere and immersed charts
// given by declarative expression tables.

#include <span>
#include <utility>
#include <variant>
#include <vector>

#include "linalg.hpp"
#include "rng.hpp"

namespace neckcalib {

using Vec = std::vector<double>;

/// Largest projection residual (relative to max(1,|v|)) still counted as tangent.
inline constexpr double kTangencyTol = 1e-8;
/// Largest distance from M at which a point is still accepted as lying on M.
inline constexpr double kOnManifoldTol = 1e-8;
/// Finite-difference step for chart Jacobians without analytic derivatives.
inline constexpr double kChartFdStep = 1e-6;

/// One factor of a chart term: u_var^k, cos(k u_var) or sin(k u_var).
struct ChartFactor {
  enum class Fn { pow, cos, sin };
  Fn fn = Fn::pow;
  int var = 0;
  int k = 0;

  friend bool operator==(const ChartFactor&, const ChartFactor&) = default;
};

struct ChartTerm {
  double coef = 0.0;
  std::vector<ChartFactor> factors;

  friend bool operator==(const ChartTerm&, const ChartTerm&) = default;
};

enum class JacobianMode { analytic, finite_difference };

struct SphereGeometry {
  int n = 0;
  friend bool operator==(const SphereGeometry&, const SphereGeometry&) = default;
};

/// phi: box in R^k -> R^n, component i = sum of components[i] terms.
struct ChartGeometry {
  std::vector<std::vector<ChartTerm>> components;
  Vec lo;
  Vec hi;
  JacobianMode jacobian = JacobianMode::analytic;

  int dim() const noexcept { return static_cast<int>(lo.size()); }
  friend bool operator==(const ChartGeometry&, const ChartGeometry&) = default;
};

struct OrientedTangentBasis {
  Vec point;
  linalg::DenseMatrix vectors;  // k rows, each a vector in R^n
  int orientation = 1;
};

class Geometry {
public:
  /// M = S^{n-1}, k = n - 1. Requires n >= 2.
  static Geometry sphere(int n);
  /// Validates the table and checks the Jacobian has full rank at 256 sampled parameters.
  static Geometry immersed_chart(ChartGeometry chart);

  bool is_sphere() const noexcept { return std::holds_alternative<SphereGeometry>(kind_); }
  const SphereGeometry* as_sphere() const noexcept { return std::get_if<SphereGeometry>(&kind_); }
  const ChartGeometry* as_chart() const noexcept { return std::get_if<ChartGeometry>(&kind_); }

  int ambient_dim() const noexcept;
  int dim() const noexcept;

  Vec chart_map(std::span<const double> u) const;
  /// k x n; row i is d(phi)/d(u_i).
  linalg::DenseMatrix chart_jacobian(std::span<const double> u) const;
  /// Parameter u with phi(u) = p; throws domain when p is not on M.
  Vec chart_preimage(std::span<const double> p) const;

  /// Distance-style test against kOnManifoldTol.
  bool contains(std::span<const double> p) const;
  void require_on_manifold(std::span<const double> p) const;

  /// Sphere: uniform. Chart: phi of a uniform parameter.
  Vec sample_point(CounterRng& rng) const;

  friend bool operator==(const Geometry&, const Geometry&) = default;

private:
  explicit Geometry(std::variant<SphereGeometry, ChartGeometry> kind) : kind_(std::move(kind)) {}
  std::variant<SphereGeometry, ChartGeometry> kind_;
};

/// Normalized Gaussian vector: uniform on S^{n-1}.
Vec sphere_point(int n, CounterRng& rng);

/// Sphere: euclidean-orthonormal basis of p-perp with det[p | b] > 0.
/// Chart: Jacobian rows at the preimage of p, in chart order.
OrientedTangentBasis tangent_basis(const Geometry& geom, std::span<const double> p);

/// Sign of the determinant of `vectors` (k rows) in the reference tangent basis at p;
/// 0 when they are dependent. Throws invalid_argument for a non-tangent vector.
int orientation_sign(const Geometry& geom, std::span<const double> p, const linalg::DenseMatrix& vectors);
int orientation_sign(const OrientedTangentBasis& basis, const linalg::DenseMatrix& vectors);

/// Coordinates (k x k, row i = coordinates of vector i) of tangent vectors in the
/// reference basis. Throws invalid_argument for a non-tangent vector.
linalg::DenseMatrix tangent_coordinates(const OrientedTangentBasis& basis, const linalg::DenseMatrix& vectors);

}  // namespace neckcalib
