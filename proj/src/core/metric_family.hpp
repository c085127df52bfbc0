#pragma once

// Metric data of a neck M x N with g(q) + h(p):
//   g(q) = (sum_j f_j(q)^2 dx_j^2)|_M  on the base,
//   h(p) (or h(p, q)) on the fiber box N in R^t,
// plus the search for the fiber point q0 minimizing prod_j f_j.

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "geometry.hpp"
#include "linalg.hpp"

namespace neckcalib {

/// Number of radial samples used to check that a profile stays positive.
inline constexpr int kPositivitySamples = 1024;

/// One factor f_j, described through f_j^2 as a function of r^2 = |q|^2.
///   constant:        f = c (so f^2 = c^2)
///   even_polynomial: f^2 = c0 + c2 s^2 + c4 s^4 + ...   (params are c0, c2, c4, ...)
///   jlt:             f^2 = 1/a + s^2
///   reciprocal_jlt:  f^2 = 1 / (1/a + s^2)
struct FactorProfile {
  enum class Kind { constant, even_polynomial, jlt, reciprocal_jlt };

  Kind kind = Kind::constant;
  std::vector<double> params;

  static FactorProfile constant(double c) { return {Kind::constant, {c}}; }
  static FactorProfile even_polynomial(std::vector<double> coeffs) { return {Kind::even_polynomial, std::move(coeffs)}; }
  static FactorProfile jlt(double a) { return {Kind::jlt, {a}}; }
  static FactorProfile reciprocal_jlt(double a) { return {Kind::reciprocal_jlt, {a}}; }

  /// f^2 at fiber point q.
  double squared(std::span<const double> q) const noexcept;
  double squared_at_r2(double r2) const noexcept;

  friend bool operator==(const FactorProfile&, const FactorProfile&) = default;
};

const char* to_string(FactorProfile::Kind kind) noexcept;

/// h on the fiber.
///   euclidean:   identity
///   jlt_induced: t = 1, h = prod_j (1/a_j + s^2) * sum_j x_j^2 / (1/a_j + s^2)
///   explicit:    constant t x t SPD matrix (params, row-major), or an in-process callable
struct FiberMetricSpec {
  enum class Kind { euclidean, jlt_induced, explicit_matrix };
  using Callable = std::function<linalg::DenseMatrix(std::span<const double> p, std::span<const double> q)>;

  Kind kind = Kind::euclidean;
  std::vector<double> params;
  Callable callable;  // only for explicit_matrix; overrides params when set

  static FiberMetricSpec euclidean() { return {}; }
  static FiberMetricSpec jlt_induced(std::vector<double> a) { return {Kind::jlt_induced, std::move(a), {}}; }
  static FiberMetricSpec explicit_matrix(std::vector<double> m) { return {Kind::explicit_matrix, std::move(m), {}}; }
  static FiberMetricSpec explicit_callable(Callable fn) { return {Kind::explicit_matrix, {}, std::move(fn)}; }
};

const char* to_string(FiberMetricSpec::Kind kind) noexcept;

struct FiberBox {
  Vec lo;
  Vec hi;

  int dim() const noexcept { return static_cast<int>(lo.size()); }
  Vec center() const;
  bool contains(std::span<const double> q) const noexcept;

  friend bool operator==(const FiberBox&, const FiberBox&) = default;
};

struct Q0Result {
  Vec q0;
  bool coordinatewise_min = false;
  double product = 0.0;
};

/// Full description of (M x N, g(q) + h(p)). Validated on construction;
/// immutable apart from the one-time q0 assignment through with_q0.
class NeckSpec {
public:
  NeckSpec(std::string id, Geometry geometry, std::vector<FactorProfile> profiles, FiberMetricSpec fiber_metric,
           FiberBox fiber_domain);

  const std::string& id() const noexcept { return id_; }
  int n() const noexcept { return geometry_.ambient_dim(); }
  int k() const noexcept { return geometry_.dim(); }
  int t() const noexcept { return fiber_domain_.dim(); }
  const Geometry& geometry() const noexcept { return geometry_; }
  const std::vector<FactorProfile>& profiles() const noexcept { return profiles_; }
  const FiberMetricSpec& fiber_metric() const noexcept { return fiber_metric_; }
  const FiberBox& fiber_domain() const noexcept { return fiber_domain_; }

  const std::optional<Q0Result>& q0_result() const noexcept { return q0_; }
  bool has_q0() const noexcept { return q0_.has_value(); }
  /// Throws state when q0 has not been set.
  const Vec& q0() const;

  /// Copy with q0 assigned. Throws state if q0 was already set, domain if outside the box.
  NeckSpec with_q0(Q0Result result) const;

private:
  std::string id_;
  Geometry geometry_;
  std::vector<FactorProfile> profiles_;
  FiberMetricSpec fiber_metric_;
  FiberBox fiber_domain_;
  std::optional<Q0Result> q0_;
};

/// Weights w_l = f_l(q)^2. Throws domain when q lies outside the fiber box.
Vec base_weights(const NeckSpec& spec, std::span<const double> q);

/// g(q)(X, Y) = sum_l f_l(q)^2 X_l Y_l.
double eval_g(const NeckSpec& spec, std::span<const double> q, std::span<const double> x, std::span<const double> y);

/// Fiber matrix at (p, q) without checking that p lies on M.
linalg::DenseMatrix fiber_matrix(const NeckSpec& spec, std::span<const double> p, std::span<const double> q);

/// U^T h(p, q) W, with p checked against M.
double eval_h(const NeckSpec& spec, std::span<const double> p, std::span<const double> q, std::span<const double> u,
              std::span<const double> w);

/// prod_j f_j(q).
double product_factor(const NeckSpec& spec, std::span<const double> q);

/// Grid search over the fiber box followed by pattern-search refinement.
/// Ties go to the point nearest the box center, then the lexicographically smallest.
Q0Result find_q0(const NeckSpec& spec, int grid_per_axis, double refine_tol);

/// orientation_sign * sqrt(det Gram) with Gram_ij = g(q)(X_i, X_j); `vectors` holds k rows.
double base_volume_form(const NeckSpec& spec, std::span<const double> q, const linalg::DenseMatrix& vectors,
                        int orientation_sign);

/// Block-diagonal inner product g(q) + h(p) frozen at one point of M x N.
class ProductInnerProduct {
public:
  ProductInnerProduct(const NeckSpec& spec, std::span<const double> p, std::span<const double> q);

  const Vec& weights() const noexcept { return weights_; }
  const linalg::DenseMatrix& fiber() const noexcept { return fiber_; }

  double base(std::span<const double> x, std::span<const double> y) const noexcept;
  double fiber(std::span<const double> u, std::span<const double> w) const noexcept;
  double operator()(std::span<const double> x1, std::span<const double> u1, std::span<const double> x2,
                    std::span<const double> u2) const noexcept {
    return base(x1, x2) + fiber(u1, u2);
  }

private:
  Vec weights_;
  linalg::DenseMatrix fiber_;
};

}  // namespace neckcalib
