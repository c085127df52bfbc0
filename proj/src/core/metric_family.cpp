#include "metric_family.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

#include "error.hpp"

namespace neckcalib {

using linalg::DenseMatrix;

namespace {

// Relative tolerance under which two grid values count as tied (a few ulps).
constexpr double kGridTieRel = 8.0 * std::numeric_limits<double>::epsilon();

double squared_distance(std::span<const double> a, std::span<const double> b) noexcept {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d += (a[i] - b[i]) * (a[i] - b[i]);
  return d;
}

struct Candidate {
  Vec q;
  double value = std::numeric_limits<double>::infinity();
};

// Keeps the preferred candidate: lower value wins; values within kGridTieRel of the
// lowest value seen so far count as tied and go to the point nearer the center,
// then to the lexicographically smaller point. Anchoring ties to the lowest value
// (rather than the current best) keeps a chain of near-ties from drifting uphill.
class BestTracker {
public:
  explicit BestTracker(Vec center) : center_(std::move(center)) {}

  const Candidate& best() const noexcept { return best_; }

  bool offer(Candidate c) {
    if (!have_) {
      best_ = std::move(c);
      floor_ = best_.value;
      have_ = true;
      return true;
    }
    const double tol = kGridTieRel * std::max(std::abs(c.value), std::abs(floor_));
    if (c.value < floor_ - tol) {
      floor_ = c.value;
      best_ = std::move(c);
      return true;
    }
    if (c.value > floor_ + tol || !nearer(c.q, best_.q)) return false;
    floor_ = std::min(floor_, c.value);
    best_ = std::move(c);
    return true;
  }

private:
  bool nearer(const Vec& a, const Vec& b) const {
    const double da = squared_distance(a, center_);
    const double db = squared_distance(b, center_);
    const double dtol = 1e-12 * std::max(da, db);
    if (da < db - dtol) return true;
    if (da > db + dtol) return false;
    return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
  }

  Vec center_;
  Candidate best_;
  double floor_ = 0.0;
  bool have_ = false;
};

template <class Objective>
Candidate minimize_on_box(const FiberBox& box, int grid, double refine_tol, Objective&& objective) {
  const int t = box.dim();
  auto evaluate = [&](const Vec& q) {
    const double v = objective(q);
    require(std::isfinite(v), ErrorKind::spec_violation, "profile product is not finite inside the fiber domain");
    return Candidate{q, v};
  };

  Vec spacing(static_cast<std::size_t>(t));
  for (int i = 0; i < t; ++i) {
    const auto s = static_cast<std::size_t>(i);
    spacing[s] = (box.hi[s] - box.lo[s]) / (grid - 1);
  }

  BestTracker tracker(box.center());
  std::vector<int> counter(static_cast<std::size_t>(t), 0);
  Vec q(static_cast<std::size_t>(t));
  for (;;) {
    for (int i = 0; i < t; ++i) {
      const auto s = static_cast<std::size_t>(i);
      q[s] = counter[s] == grid - 1 ? box.hi[s] : box.lo[s] + (box.hi[s] - box.lo[s]) * counter[s] / (grid - 1);
    }
    tracker.offer(evaluate(q));
    int axis = 0;
    while (axis < t && ++counter[static_cast<std::size_t>(axis)] == grid) counter[static_cast<std::size_t>(axis++)] = 0;
    if (axis == t) break;
  }

  // Compass search with halving steps, same tie rule as the grid.
  Vec step = spacing;
  for (int iter = 0; iter < 200000; ++iter) {
    if (*std::max_element(step.begin(), step.end()) < refine_tol) break;
    bool moved = false;
    for (int i = 0; i < t; ++i) {
      const auto s = static_cast<std::size_t>(i);
      for (double dir : {-1.0, 1.0}) {
        Vec trial = tracker.best().q;
        trial[s] = std::clamp(trial[s] + dir * step[s], box.lo[s], box.hi[s]);
        if (trial[s] == tracker.best().q[s]) continue;
        if (tracker.offer(evaluate(trial))) moved = true;
      }
    }
    if (!moved)
      for (double& s : step) s *= 0.5;
  }
  return tracker.best();
}

}  // namespace

double FactorProfile::squared_at_r2(double r2) const noexcept {
  switch (kind) {
    case Kind::constant: return params[0] * params[0];
    case Kind::even_polynomial: {
      double v = 0.0;
      for (auto it = params.rbegin(); it != params.rend(); ++it) v = v * r2 + *it;
      return v;
    }
    case Kind::jlt: return 1.0 / params[0] + r2;
    case Kind::reciprocal_jlt: return 1.0 / (1.0 / params[0] + r2);
  }
  return std::numeric_limits<double>::quiet_NaN();
}

double FactorProfile::squared(std::span<const double> q) const noexcept {
  double r2 = 0.0;
  for (double x : q) r2 += x * x;
  return squared_at_r2(r2);
}

const char* to_string(FactorProfile::Kind kind) noexcept {
  switch (kind) {
    case FactorProfile::Kind::constant: return "constant";
    case FactorProfile::Kind::even_polynomial: return "even-polynomial";
    case FactorProfile::Kind::jlt: return "jlt";
    case FactorProfile::Kind::reciprocal_jlt: return "reciprocal-jlt";
  }
  return "unknown";
}

const char* to_string(FiberMetricSpec::Kind kind) noexcept {
  switch (kind) {
    case FiberMetricSpec::Kind::euclidean: return "euclidean";
    case FiberMetricSpec::Kind::jlt_induced: return "jlt-induced";
    case FiberMetricSpec::Kind::explicit_matrix: return "explicit";
  }
  return "unknown";
}

Vec FiberBox::center() const {
  Vec c(lo.size());
  for (std::size_t i = 0; i < c.size(); ++i) c[i] = 0.5 * (lo[i] + hi[i]);
  return c;
}

bool FiberBox::contains(std::span<const double> q) const noexcept {
  if (q.size() != lo.size()) return false;
  for (std::size_t i = 0; i < q.size(); ++i) {
    const double slack = 1e-12 * std::max(1.0, hi[i] - lo[i]);
    if (!(q[i] >= lo[i] - slack && q[i] <= hi[i] + slack)) return false;
  }
  return true;
}

NeckSpec::NeckSpec(std::string id, Geometry geometry, std::vector<FactorProfile> profiles,
                   FiberMetricSpec fiber_metric, FiberBox fiber_domain)
    : id_(std::move(id)),
      geometry_(std::move(geometry)),
      profiles_(std::move(profiles)),
      fiber_metric_(std::move(fiber_metric)),
      fiber_domain_(std::move(fiber_domain)) {
  const int t = fiber_domain_.dim();
  require(t >= 1, ErrorKind::invalid_argument, "fiber dimension must be at least 1");
  require(fiber_domain_.hi.size() == fiber_domain_.lo.size(), ErrorKind::invalid_argument,
          "fiber domain bounds differ in length");
  for (int i = 0; i < t; ++i) {
    const auto s = static_cast<std::size_t>(i);
    require(std::isfinite(fiber_domain_.lo[s]) && std::isfinite(fiber_domain_.hi[s]) &&
                fiber_domain_.lo[s] < fiber_domain_.hi[s],
            ErrorKind::invalid_argument, "fiber domain must be a finite box with lo < hi");
  }
  require(static_cast<int>(profiles_.size()) == n(), ErrorKind::invalid_argument,
          "need one factor profile per ambient coordinate (" + std::to_string(n()) + ")");
  require(k() <= n(), ErrorKind::invalid_argument, "base dimension exceeds ambient dimension");

  // Profile sanity: parameters, then positivity on the reachable range of r = |q|.
  double rmin2 = 0.0;
  double rmax2 = 0.0;
  for (int i = 0; i < t; ++i) {
    const auto s = static_cast<std::size_t>(i);
    const double lo = fiber_domain_.lo[s];
    const double hi = fiber_domain_.hi[s];
    const double nearest = std::clamp(0.0, lo, hi);
    rmin2 += nearest * nearest;
    rmax2 += std::max(lo * lo, hi * hi);
  }
  const double rmin = std::sqrt(rmin2);
  const double rmax = std::sqrt(rmax2);
  for (std::size_t j = 0; j < profiles_.size(); ++j) {
    const FactorProfile& prof = profiles_[j];
    const std::string which = "profile " + std::to_string(j + 1);
    require(!prof.params.empty(), ErrorKind::invalid_argument, which + " has no parameters");
    for (double c : prof.params) require(std::isfinite(c), ErrorKind::invalid_argument, which + " has a non-finite parameter");
    if (prof.kind != FactorProfile::Kind::even_polynomial) {
      require(prof.params.size() == 1, ErrorKind::invalid_argument, which + " takes exactly one parameter");
      require(prof.params[0] > 0.0, ErrorKind::invalid_argument, which + " parameter must be positive");
    }
    for (int i = 0; i < kPositivitySamples; ++i) {
      const double r = rmin + (rmax - rmin) * i / (kPositivitySamples - 1);
      const double v = prof.squared_at_r2(r * r);
      require(std::isfinite(v) && v > 0.0, ErrorKind::spec_violation,
              which + " is not positive on the fiber domain (f^2 = " + format_real(v) + " at |q| = " +
                  format_real(r) + ")");
    }
  }

  switch (fiber_metric_.kind) {
    case FiberMetricSpec::Kind::euclidean: break;
    case FiberMetricSpec::Kind::jlt_induced:
      require(t == 1, ErrorKind::invalid_argument, "jlt-induced fiber metric needs a one-dimensional fiber");
      require(static_cast<int>(fiber_metric_.params.size()) == n(), ErrorKind::invalid_argument,
              "jlt-induced fiber metric needs one parameter per ambient coordinate");
      for (double a : fiber_metric_.params)
        require(std::isfinite(a) && a > 0.0, ErrorKind::invalid_argument, "jlt-induced parameters must be positive");
      break;
    case FiberMetricSpec::Kind::explicit_matrix:
      if (!fiber_metric_.callable) {
        require(static_cast<int>(fiber_metric_.params.size()) == t * t, ErrorKind::invalid_argument,
                "explicit fiber metric needs t*t entries");
        const DenseMatrix m(t, t, fiber_metric_.params);
        for (int i = 0; i < t; ++i)
          for (int j = 0; j < i; ++j)
            require(m(i, j) == m(j, i), ErrorKind::spec_violation, "explicit fiber metric is not symmetric");
        try {
          linalg::cholesky(m);
        } catch (const Error&) {
          fail(ErrorKind::spec_violation, "explicit fiber metric is not positive definite");
        }
      }
      break;
  }
}

const Vec& NeckSpec::q0() const {
  require(q0_.has_value(), ErrorKind::state, "q0 has not been set; run find_q0 first");
  return q0_->q0;
}

NeckSpec NeckSpec::with_q0(Q0Result result) const {
  require(!q0_.has_value(), ErrorKind::state, "q0 is already set");
  require(fiber_domain_.contains(result.q0), ErrorKind::domain, "q0 lies outside the fiber domain");
  NeckSpec out = *this;
  out.q0_ = std::move(result);
  return out;
}

Vec base_weights(const NeckSpec& spec, std::span<const double> q) {
  require(spec.fiber_domain().contains(q), ErrorKind::domain, "fiber point outside the fiber domain");
  Vec w(spec.profiles().size());
  for (std::size_t j = 0; j < w.size(); ++j) w[j] = spec.profiles()[j].squared(q);
  return w;
}

double eval_g(const NeckSpec& spec, std::span<const double> q, std::span<const double> x, std::span<const double> y) {
  require(static_cast<int>(x.size()) == spec.n() && static_cast<int>(y.size()) == spec.n(),
          ErrorKind::invalid_argument, "base vectors must have ambient dimension");
  const Vec w = base_weights(spec, q);
  double s = 0.0;
  for (std::size_t l = 0; l < w.size(); ++l) s += w[l] * (x[l] * y[l]);
  return s;
}

DenseMatrix fiber_matrix(const NeckSpec& spec, std::span<const double> p, std::span<const double> q) {
  const int t = spec.t();
  const FiberMetricSpec& fm = spec.fiber_metric();
  switch (fm.kind) {
    case FiberMetricSpec::Kind::euclidean: return DenseMatrix::identity(t);
    case FiberMetricSpec::Kind::jlt_induced: {
      const double s2 = q[0] * q[0];
      double prod = 1.0;
      double sum = 0.0;
      for (std::size_t j = 0; j < fm.params.size(); ++j) {
        const double d = 1.0 / fm.params[j] + s2;
        prod *= d;
        sum += p[j] * p[j] / d;
      }
      return DenseMatrix(1, 1, {prod * sum});
    }
    case FiberMetricSpec::Kind::explicit_matrix: {
      if (!fm.callable) return DenseMatrix(t, t, fm.params);
      DenseMatrix m = fm.callable(p, q);
      require(m.rows() == t && m.cols() == t, ErrorKind::spec_violation, "explicit fiber metric has wrong shape");
      for (int i = 0; i < t; ++i)
        for (int j = 0; j < i; ++j)
          require(std::abs(m(i, j) - m(j, i)) <= 1e-12 * std::max(1.0, std::abs(m(i, j))), ErrorKind::spec_violation,
                  "explicit fiber metric is not symmetric");
      try {
        linalg::cholesky(m);
      } catch (const Error&) {
        fail(ErrorKind::spec_violation, "explicit fiber metric is not positive definite");
      }
      return m;
    }
  }
  return DenseMatrix::identity(t);
}

double eval_h(const NeckSpec& spec, std::span<const double> p, std::span<const double> q, std::span<const double> u,
              std::span<const double> w) {
  spec.geometry().require_on_manifold(p);
  require(spec.fiber_domain().contains(q), ErrorKind::domain, "fiber point outside the fiber domain");
  require(static_cast<int>(u.size()) == spec.t() && static_cast<int>(w.size()) == spec.t(),
          ErrorKind::invalid_argument, "fiber vectors must have fiber dimension");
  const DenseMatrix h = fiber_matrix(spec, p, q);
  double s = 0.0;
  for (int i = 0; i < spec.t(); ++i)
    for (int j = 0; j < spec.t(); ++j) s += u[static_cast<std::size_t>(i)] * h(i, j) * w[static_cast<std::size_t>(j)];
  return s;
}

double product_factor(const NeckSpec& spec, std::span<const double> q) {
  const Vec w = base_weights(spec, q);
  double prod = 1.0;
  for (double x : w) prod *= std::sqrt(x);
  return prod;
}

Q0Result find_q0(const NeckSpec& spec, int grid_per_axis, double refine_tol) {
  require(grid_per_axis >= 3, ErrorKind::invalid_argument, "grid_per_axis must be at least 3");
  require(refine_tol > 0.0, ErrorKind::invalid_argument, "refine_tol must be positive");
  const FiberBox& box = spec.fiber_domain();

  const Candidate best = minimize_on_box(box, grid_per_axis, refine_tol, [&](const Vec& q) {
    double prod = 1.0;
    for (const auto& prof : spec.profiles()) prod *= std::sqrt(prof.squared(q));
    return prod;
  });

  bool coordinatewise = true;
  for (const auto& prof : spec.profiles()) {
    const Candidate own =
        minimize_on_box(box, grid_per_axis, refine_tol, [&](const Vec& q) { return prof.squared(q); });
    if (prof.squared(best.q) > own.value + refine_tol * std::max(1.0, std::abs(own.value))) coordinatewise = false;
  }
  return {best.q, coordinatewise, best.value};
}

double base_volume_form(const NeckSpec& spec, std::span<const double> q, const DenseMatrix& vectors,
                        int orientation_sign) {
  require(vectors.cols() == spec.n(), ErrorKind::invalid_argument, "base vectors must have ambient dimension");
  require(orientation_sign >= -1 && orientation_sign <= 1, ErrorKind::invalid_argument,
          "orientation sign must be -1, 0 or +1");
  const Vec w = base_weights(spec, q);
  const DenseMatrix g = linalg::weighted_gram(vectors, w);
  double scale = 1.0;
  for (int i = 0; i < g.rows(); ++i) scale *= g(i, i);
  const double d = linalg::det(g);
  if (!std::isfinite(d)) fail(ErrorKind::numerical_degeneracy, "g(q) Gram determinant is not finite");
  if (d < -1e-12 * std::max(1.0, scale))
    fail(ErrorKind::numerical_degeneracy, "negative Gram determinant " + format_real(d));
  return orientation_sign * std::sqrt(std::max(d, 0.0));
}

ProductInnerProduct::ProductInnerProduct(const NeckSpec& spec, std::span<const double> p, std::span<const double> q)
    : weights_(base_weights(spec, q)), fiber_(fiber_matrix(spec, p, q)) {}

double ProductInnerProduct::base(std::span<const double> x, std::span<const double> y) const noexcept {
  double s = 0.0;
  for (std::size_t l = 0; l < weights_.size(); ++l) s += weights_[l] * x[l] * y[l];
  return s;
}

double ProductInnerProduct::fiber(std::span<const double> u, std::span<const double> w) const noexcept {
  const int t = fiber_.rows();
  double s = 0.0;
  for (int i = 0; i < t; ++i)
    for (int j = 0; j < t; ++j) s += u[static_cast<std::size_t>(i)] * fiber_(i, j) * w[static_cast<std::size_t>(j)];
  return s;
}

}  // namespace neckcalib
