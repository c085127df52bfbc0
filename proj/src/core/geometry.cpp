#include "geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>

#include "error.hpp"

namespace neckcalib {

using linalg::DenseMatrix;

namespace {

double factor_value(const ChartFactor& f, double u) {
  switch (f.fn) {
    case ChartFactor::Fn::pow: return std::pow(u, f.k);
    case ChartFactor::Fn::cos: return std::cos(f.k * u);
    case ChartFactor::Fn::sin: return std::sin(f.k * u);
  }
  return 0.0;
}

double factor_derivative(const ChartFactor& f, double u) {
  switch (f.fn) {
    case ChartFactor::Fn::pow: return f.k == 0 ? 0.0 : f.k * std::pow(u, f.k - 1);
    case ChartFactor::Fn::cos: return -f.k * std::sin(f.k * u);
    case ChartFactor::Fn::sin: return f.k * std::cos(f.k * u);
  }
  return 0.0;
}

double term_value(const ChartTerm& t, std::span<const double> u) {
  double v = t.coef;
  for (const auto& f : t.factors) v *= factor_value(f, u[static_cast<std::size_t>(f.var)]);
  return v;
}

// d/du_var of a product of univariate factors.
double term_partial(const ChartTerm& t, std::span<const double> u, int var) {
  double total = 0.0;
  for (std::size_t i = 0; i < t.factors.size(); ++i) {
    if (t.factors[i].var != var) continue;
    double v = t.coef * factor_derivative(t.factors[i], u[static_cast<std::size_t>(var)]);
    for (std::size_t j = 0; j < t.factors.size(); ++j)
      if (j != i) v *= factor_value(t.factors[j], u[static_cast<std::size_t>(t.factors[j].var)]);
    total += v;
  }
  return total;
}

// Relative rank test on k row vectors: det of their Gram against the product of squared norms.
bool full_rank_rows(const DenseMatrix& rows) {
  const DenseMatrix g = linalg::gram(rows);
  double scale = 1.0;
  for (int i = 0; i < rows.rows(); ++i) scale *= g(i, i);
  if (!(scale > 0.0)) return false;
  return linalg::det(g) > 1e-12 * scale;
}

void validate_chart(const ChartGeometry& c) {
  const int k = c.dim();
  require(k >= 1, ErrorKind::invalid_argument, "chart needs at least one parameter");
  require(c.hi.size() == c.lo.size(), ErrorKind::invalid_argument, "chart domain bounds differ in length");
  for (int i = 0; i < k; ++i)
    require(c.lo[static_cast<std::size_t>(i)] < c.hi[static_cast<std::size_t>(i)], ErrorKind::invalid_argument,
            "chart domain must have lo < hi on every axis");
  const int n = static_cast<int>(c.components.size());
  require(n >= k, ErrorKind::invalid_argument, "chart ambient dimension smaller than parameter dimension");
  for (const auto& comp : c.components)
    for (const auto& term : comp) {
      require(std::isfinite(term.coef), ErrorKind::invalid_argument, "non-finite chart coefficient");
      for (const auto& f : term.factors) {
        require(f.var >= 0 && f.var < k, ErrorKind::invalid_argument, "chart factor refers to unknown parameter");
        require(f.fn != ChartFactor::Fn::pow || f.k >= 0, ErrorKind::invalid_argument,
                "chart powers must be non-negative");
      }
    }
}

}  // namespace

Geometry Geometry::sphere(int n) {
  require(n >= 2, ErrorKind::invalid_argument, "sphere needs ambient dimension >= 2");
  return Geometry(SphereGeometry{n});
}

Geometry Geometry::immersed_chart(ChartGeometry chart) {
  validate_chart(chart);
  Geometry g(std::move(chart));
  const ChartGeometry& c = *g.as_chart();
  CounterRng rng = stream_for(0, 0);
  Vec u(c.lo.size());
  for (int trial = 0; trial < 256; ++trial) {
    for (std::size_t i = 0; i < u.size(); ++i) u[i] = rng.uniform(c.lo[i], c.hi[i]);
    require(full_rank_rows(g.chart_jacobian(u)), ErrorKind::spec_violation,
            "degenerate chart: Jacobian loses rank inside the parameter domain");
  }
  return g;
}

int Geometry::ambient_dim() const noexcept {
  if (const auto* s = as_sphere()) return s->n;
  return static_cast<int>(as_chart()->components.size());
}

int Geometry::dim() const noexcept {
  if (const auto* s = as_sphere()) return s->n - 1;
  return as_chart()->dim();
}

Vec Geometry::chart_map(std::span<const double> u) const {
  const ChartGeometry* c = as_chart();
  require(c != nullptr, ErrorKind::invalid_argument, "chart_map on a sphere geometry");
  require(static_cast<int>(u.size()) == c->dim(), ErrorKind::invalid_argument, "chart parameter length mismatch");
  Vec p(c->components.size(), 0.0);
  for (std::size_t i = 0; i < p.size(); ++i)
    for (const auto& t : c->components[i]) p[i] += term_value(t, u);
  return p;
}

DenseMatrix Geometry::chart_jacobian(std::span<const double> u) const {
  const ChartGeometry* c = as_chart();
  require(c != nullptr, ErrorKind::invalid_argument, "chart_jacobian on a sphere geometry");
  const int k = c->dim();
  const int n = ambient_dim();
  DenseMatrix j(k, n);
  if (c->jacobian == JacobianMode::analytic) {
    for (int v = 0; v < k; ++v)
      for (int i = 0; i < n; ++i)
        for (const auto& t : c->components[static_cast<std::size_t>(i)]) j(v, i) += term_partial(t, u, v);
    return j;
  }
  Vec up(u.begin(), u.end());
  for (int v = 0; v < k; ++v) {
    const double orig = up[static_cast<std::size_t>(v)];
    up[static_cast<std::size_t>(v)] = orig + kChartFdStep;
    const Vec plus = chart_map(up);
    up[static_cast<std::size_t>(v)] = orig - kChartFdStep;
    const Vec minus = chart_map(up);
    up[static_cast<std::size_t>(v)] = orig;
    for (int i = 0; i < n; ++i)
      j(v, i) = (plus[static_cast<std::size_t>(i)] - minus[static_cast<std::size_t>(i)]) / (2.0 * kChartFdStep);
  }
  return j;
}

Vec Geometry::chart_preimage(std::span<const double> p) const {
  const ChartGeometry* c = as_chart();
  require(c != nullptr, ErrorKind::invalid_argument, "chart_preimage on a sphere geometry");
  require(static_cast<int>(p.size()) == ambient_dim(), ErrorKind::invalid_argument, "point dimension mismatch");
  const int k = c->dim();

  auto dist2 = [&](const Vec& u) {
    const Vec q = chart_map(u);
    double d = 0.0;
    for (std::size_t i = 0; i < q.size(); ++i) d += (q[i] - p[i]) * (q[i] - p[i]);
    return d;
  };

  // Coarse grid seed, at most ~4096 evaluations.
  const int per_axis = std::clamp(static_cast<int>(std::pow(4096.0, 1.0 / k)), 2, 64);
  Vec best(static_cast<std::size_t>(k));
  double best_d = std::numeric_limits<double>::infinity();
  std::vector<int> counter(static_cast<std::size_t>(k), 0);
  Vec u(static_cast<std::size_t>(k));
  for (;;) {
    for (int i = 0; i < k; ++i) {
      const auto s = static_cast<std::size_t>(i);
      u[s] = c->lo[s] + (c->hi[s] - c->lo[s]) * counter[s] / (per_axis - 1);
    }
    const double d = dist2(u);
    if (d < best_d) {
      best_d = d;
      best = u;
    }
    int axis = 0;
    while (axis < k && ++counter[static_cast<std::size_t>(axis)] == per_axis) counter[static_cast<std::size_t>(axis++)] = 0;
    if (axis == k) break;
  }

  // Gauss-Newton on |phi(u) - p|^2.
  for (int iter = 0; iter < 60 && best_d > 1e-30; ++iter) {
    const DenseMatrix jac = chart_jacobian(best);
    if (!full_rank_rows(jac)) break;
    const Vec q = chart_map(best);
    Vec r(q.size());
    for (std::size_t i = 0; i < q.size(); ++i) r[i] = p[i] - q[i];
    const Vec step = linalg::project_coordinates(jac, r, nullptr);
    Vec next = best;
    for (std::size_t i = 0; i < next.size(); ++i) next[i] += step[i];
    const double d = dist2(next);
    if (!(d < best_d)) break;
    best = std::move(next);
    best_d = d;
  }
  for (int i = 0; i < k; ++i) {
    const auto s = static_cast<std::size_t>(i);
    const double slack = 1e-9 * std::max(1.0, c->hi[s] - c->lo[s]);
    require(best[s] >= c->lo[s] - slack && best[s] <= c->hi[s] + slack, ErrorKind::domain,
            "point has no preimage inside the chart domain");
  }
  require(std::sqrt(best_d) <= kOnManifoldTol, ErrorKind::domain, "point does not lie on the chart image");
  return best;
}

bool Geometry::contains(std::span<const double> p) const {
  if (static_cast<int>(p.size()) != ambient_dim()) return false;
  if (is_sphere()) return std::abs(linalg::norm(p) - 1.0) <= kOnManifoldTol;
  try {
    chart_preimage(p);
    return true;
  } catch (const Error&) {
    return false;
  }
}

void Geometry::require_on_manifold(std::span<const double> p) const {
  require(static_cast<int>(p.size()) == ambient_dim(), ErrorKind::invalid_argument, "point dimension mismatch");
  if (is_sphere()) {
    require(std::abs(linalg::norm(p) - 1.0) <= kOnManifoldTol, ErrorKind::domain, "point is not on the unit sphere");
    return;
  }
  chart_preimage(p);
}

Vec Geometry::sample_point(CounterRng& rng) const {
  if (const auto* s = as_sphere()) return sphere_point(s->n, rng);
  const ChartGeometry& c = *as_chart();
  Vec u(c.lo.size());
  for (std::size_t i = 0; i < u.size(); ++i) u[i] = rng.uniform(c.lo[i], c.hi[i]);
  return chart_map(u);
}

Vec sphere_point(int n, CounterRng& rng) {
  require(n >= 2, ErrorKind::invalid_argument, "sphere needs ambient dimension >= 2");
  Vec x(static_cast<std::size_t>(n));
  for (;;) {
    rng.fill_normal(x);
    const double r = linalg::norm(x);
    if (r < 1e-8) continue;
    for (double& v : x) v /= r;
    return x;
  }
}

OrientedTangentBasis tangent_basis(const Geometry& geom, std::span<const double> p) {
  geom.require_on_manifold(p);
  OrientedTangentBasis out;
  out.point.assign(p.begin(), p.end());
  if (geom.is_sphere()) {
    const int n = geom.ambient_dim();
    // Householder reflection H with H e_0 = -sigma p; columns 1..n-1 span p-perp.
    const double unit = linalg::norm(p);
    Vec pn(p.begin(), p.end());
    for (double& v : pn) v /= unit;
    const double sigma = pn[0] >= 0.0 ? 1.0 : -1.0;
    Vec v = pn;
    v[0] += sigma;
    const double vv = linalg::dot(v, v);
    DenseMatrix b(n - 1, n);
    for (int col = 1; col < n; ++col)
      for (int i = 0; i < n; ++i) {
        const double e = (i == col) ? 1.0 : 0.0;
        b(col - 1, i) = e - 2.0 * v[static_cast<std::size_t>(i)] * v[static_cast<std::size_t>(col)] / vv;
      }
    // det H = -1 and H = [-sigma p | b], so det[p | b] = sigma.
    if (sigma < 0.0)
      for (int i = 0; i < n; ++i) b(n - 2, i) = -b(n - 2, i);
    out.vectors = std::move(b);
    return out;
  }
  const Vec u = geom.chart_preimage(p);
  DenseMatrix jac = geom.chart_jacobian(u);
  require(full_rank_rows(jac), ErrorKind::numerical_degeneracy, "degenerate chart at the requested point");
  out.vectors = std::move(jac);
  return out;
}

DenseMatrix tangent_coordinates(const OrientedTangentBasis& basis, const DenseMatrix& vectors) {
  const int k = basis.vectors.rows();
  require(vectors.cols() == basis.vectors.cols(), ErrorKind::invalid_argument, "vector dimension mismatch");
  DenseMatrix coords(vectors.rows(), k);
  for (int i = 0; i < vectors.rows(); ++i) {
    double residual = 0.0;
    const Vec y = linalg::project_coordinates(basis.vectors, vectors.row(i), &residual);
    require(residual <= kTangencyTol * std::max(1.0, linalg::norm(vectors.row(i))), ErrorKind::invalid_argument,
            "vector " + std::to_string(i) + " is not tangent to M (residual " + format_real(residual) + ")");
    for (int j = 0; j < k; ++j) coords(i, j) = y[static_cast<std::size_t>(j)];
  }
  return coords;
}

int orientation_sign(const OrientedTangentBasis& basis, const DenseMatrix& vectors) {
  require(vectors.rows() == basis.vectors.rows(), ErrorKind::invalid_argument, "need exactly k vectors");
  const DenseMatrix coords = tangent_coordinates(basis, vectors);
  double scale = 1.0;
  for (int i = 0; i < coords.rows(); ++i) scale *= linalg::norm(coords.row(i));
  if (scale == 0.0) return 0;
  const double d = linalg::det(coords);
  if (!(std::abs(d) >= 1e-12 * scale)) return 0;
  return (d > 0.0 ? 1 : -1) * basis.orientation;
}

int orientation_sign(const Geometry& geom, std::span<const double> p, const DenseMatrix& vectors) {
  return orientation_sign(tangent_basis(geom, p), vectors);
}

}  // namespace neckcalib
