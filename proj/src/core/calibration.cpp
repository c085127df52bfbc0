#include "calibration.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <utility>

#include "error.hpp"
#include "parallel.hpp"

namespace neckcalib {

using linalg::DenseMatrix;

namespace {

// Salt separating search streams from sweep streams under the same seed.
constexpr std::uint64_t kSearchStreamSalt = 0x5EA7C4ull;

double relative_gram_det(const DenseMatrix& g) {
  double scale = 1.0;
  for (int i = 0; i < g.rows(); ++i) scale *= g(i, i);
  if (!(scale > 0.0)) return 0.0;
  return linalg::det(g) / scale;
}

// Product-metric Gram of a frame.
DenseMatrix frame_gram(const ProductInnerProduct& inner, const TangentFrame& frame) {
  const int k = static_cast<int>(frame.vectors.size());
  DenseMatrix g(k, k);
  for (int i = 0; i < k; ++i)
    for (int j = 0; j <= i; ++j) {
      const auto& a = frame.vectors[static_cast<std::size_t>(i)];
      const auto& b = frame.vectors[static_cast<std::size_t>(j)];
      const double v = inner(a.base, a.fiber, b.base, b.fiber);
      g(i, j) = v;
      g(j, i) = v;
    }
  return g;
}

double sqrt_gram_det(const DenseMatrix& g) {
  double scale = 1.0;
  for (int i = 0; i < g.rows(); ++i) scale *= g(i, i);
  const double d = linalg::det(g);
  if (!std::isfinite(d)) fail(ErrorKind::numerical_degeneracy, "product-metric Gram determinant is not finite");
  if (d < -1e-12 * std::max(1.0, scale)) fail(ErrorKind::numerical_degeneracy, "product-metric Gram is not PSD");
  return std::sqrt(std::max(d, 0.0));
}

// Sign of det of the leading k x k block of the coefficient matrix; 0 when
// the block is numerically singular.
int leading_block_sign(const DenseMatrix& coeffs, int k) {
  DenseMatrix d(k, k);
  double scale = 1.0;
  for (int i = 0; i < k; ++i) {
    double r2 = 0.0;
    for (int j = 0; j < k; ++j) {
      d(i, j) = coeffs(i, j);
      r2 += d(i, j) * d(i, j);
    }
    scale *= std::sqrt(r2);
  }
  if (scale == 0.0) return 0;
  const double v = linalg::det(d);
  if (!(std::abs(v) >= 1e-12 * scale)) return 0;
  return v > 0.0 ? 1 : -1;
}

// Ratio evaluation at one product point, reusing the basis for many frames.
// phi's sign comes from the leading coefficient block because e_1..e_k carry
// the reference orientation of T_pM.
class PointEvaluator {
public:
  PointEvaluator(const NeckSpec& spec, const ProductPoint& at)
      : basis_(spec, at), w0_(base_weights(spec, spec.q0())) {}

  const ProductFrameBasis& basis() const noexcept { return basis_; }

  // Returns -inf for a numerically dependent frame.
  double ratio(const TangentFrame& frame, const DenseMatrix& coeffs) const {
    const DenseMatrix g = frame_gram(basis_.inner(), frame);
    if (!(relative_gram_det(g) > kFrameIndependenceTol)) return -std::numeric_limits<double>::infinity();
    const double vol = sqrt_gram_det(g);
    const int sign = leading_block_sign(coeffs, basis_.k());
    if (sign == 0) return 0.0;
    const DenseMatrix x = frame.base_rows();
    const double d0 = linalg::det(linalg::weighted_gram(x, w0_));
    if (!std::isfinite(d0)) fail(ErrorKind::numerical_degeneracy, "g(q0) Gram determinant is not finite");
    const double calib = std::sqrt(std::max(d0, 0.0));
    return sign * calib / vol;
  }

private:
  ProductFrameBasis basis_;
  Vec w0_;
};

DenseMatrix gaussian_coefficients(int rows, int cols, CounterRng& rng) {
  DenseMatrix c(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) c(i, j) = rng.normal();
  return c;
}

bool coefficients_independent(const DenseMatrix& c) { return relative_gram_det(linalg::gram(c)) > kFrameIndependenceTol; }

DenseMatrix random_coefficients(int k, int cols, CounterRng& rng) {
  for (int attempt = 0; attempt < kFrameResampleLimit; ++attempt) {
    DenseMatrix c = gaussian_coefficients(k, cols, rng);
    if (coefficients_independent(c)) return c;
  }
  fail(ErrorKind::sampling, "could not sample an independent frame in " + std::to_string(kFrameResampleLimit) +
                                " attempts");
}

// Positively oriented lift of a random frame of T_pM.
DenseMatrix lifted_coefficients(int k, int t, CounterRng& rng) {
  for (int attempt = 0; attempt < kFrameResampleLimit; ++attempt) {
    DenseMatrix c(k, k + t);
    const DenseMatrix d = gaussian_coefficients(k, k, rng);
    if (!coefficients_independent(d)) continue;
    const double s = linalg::det(d) < 0.0 ? -1.0 : 1.0;
    for (int i = 0; i < k; ++i)
      for (int j = 0; j < k; ++j) c(i, j) = (i == 0 ? s : 1.0) * d(i, j);
    return c;
  }
  fail(ErrorKind::sampling, "could not sample an independent tangent frame");
}

void normalize_rows(DenseMatrix& c) {
  for (int i = 0; i < c.rows(); ++i) {
    const double r = linalg::norm(c.row(i));
    if (r > 0.0)
      for (int j = 0; j < c.cols(); ++j) c(i, j) /= r;
  }
}

struct PointOutcome {
  double best_ratio = -std::numeric_limits<double>::infinity();
  std::optional<TangentFrame> best_frame;
  std::vector<ComassViolation> violations;
};

void sort_and_trim(std::vector<ComassViolation>& v) {
  std::stable_sort(v.begin(), v.end(), [](const auto& a, const auto& b) { return a.ratio > b.ratio; });
  if (v.size() > kMaxReportedViolations) v.resize(kMaxReportedViolations);
}

struct SearchState {
  Vec u;  // chart parameter (chart geometries only)
  ProductPoint at;
  DenseMatrix coeffs;
  double ratio = -std::numeric_limits<double>::infinity();
};

double evaluate_state(const NeckSpec& spec, SearchState& s, TangentFrame* out) {
  try {
    PointEvaluator ev(spec, s.at);
    TangentFrame f = ev.basis().frame(s.coeffs);
    const double r = ev.ratio(f, s.coeffs);
    if (out != nullptr) *out = std::move(f);
    return r;
  } catch (const Error& e) {
    // A proposal that lands on a degenerate chart point is simply rejected.
    if (e.kind() == ErrorKind::numerical_degeneracy) return -std::numeric_limits<double>::infinity();
    throw;
  }
}

SearchState initial_state(const NeckSpec& spec, CounterRng& rng) {
  SearchState s;
  const Geometry& geom = spec.geometry();
  if (const auto* chart = geom.as_chart()) {
    s.u.resize(chart->lo.size());
    for (std::size_t i = 0; i < s.u.size(); ++i) s.u[i] = rng.uniform(chart->lo[i], chart->hi[i]);
    s.at.p = geom.chart_map(s.u);
  } else {
    s.at.p = geom.sample_point(rng);
  }
  const FiberBox& box = spec.fiber_domain();
  s.at.q.resize(box.lo.size());
  for (std::size_t i = 0; i < s.at.q.size(); ++i) s.at.q[i] = rng.uniform(box.lo[i], box.hi[i]);
  s.coeffs = random_coefficients(spec.k(), spec.k() + spec.t(), rng);
  normalize_rows(s.coeffs);
  return s;
}

SearchState propose(const NeckSpec& spec, const SearchState& s, double step, CounterRng& rng) {
  SearchState next = s;
  const Geometry& geom = spec.geometry();
  if (const auto* chart = geom.as_chart()) {
    for (std::size_t i = 0; i < next.u.size(); ++i)
      next.u[i] = std::clamp(next.u[i] + step * rng.normal(), chart->lo[i], chart->hi[i]);
    next.at.p = geom.chart_map(next.u);
  } else {
    for (double& x : next.at.p) x += step * rng.normal();
    const double r = linalg::norm(next.at.p);
    for (double& x : next.at.p) x /= r;
  }
  const FiberBox& box = spec.fiber_domain();
  for (std::size_t i = 0; i < next.at.q.size(); ++i)
    next.at.q[i] = std::clamp(next.at.q[i] + step * rng.normal(), box.lo[i], box.hi[i]);
  for (int i = 0; i < next.coeffs.rows(); ++i)
    for (int j = 0; j < next.coeffs.cols(); ++j) next.coeffs(i, j) += step * rng.normal();
  normalize_rows(next.coeffs);
  return next;
}

}  // namespace

DenseMatrix TangentFrame::base_rows() const {
  const int k = static_cast<int>(vectors.size());
  const int n = k == 0 ? static_cast<int>(at.p.size()) : static_cast<int>(vectors[0].base.size());
  DenseMatrix m(k, n);
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < n; ++j) m(i, j) = vectors[static_cast<std::size_t>(i)].base[static_cast<std::size_t>(j)];
  return m;
}

DenseMatrix TangentFrame::fiber_rows() const {
  const int k = static_cast<int>(vectors.size());
  const int t = k == 0 ? static_cast<int>(at.q.size()) : static_cast<int>(vectors[0].fiber.size());
  DenseMatrix m(k, t);
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < t; ++j) m(i, j) = vectors[static_cast<std::size_t>(i)].fiber[static_cast<std::size_t>(j)];
  return m;
}

ProductFrameBasis::ProductFrameBasis(const NeckSpec& spec, const ProductPoint& at)
    : at_(at), tangent_(tangent_basis(spec.geometry(), at.p)), inner_(spec, at.p, at.q) {
  const int k = tangent_.vectors.rows();
  const int n = tangent_.vectors.cols();
  base_lower_ = linalg::cholesky(linalg::weighted_gram(tangent_.vectors, inner_.weights()));
  // e = L^{-1} B, column by column.
  base_ = DenseMatrix(k, n);
  Vec col(static_cast<std::size_t>(k));
  for (int c = 0; c < n; ++c) {
    for (int i = 0; i < k; ++i) col[static_cast<std::size_t>(i)] = tangent_.vectors(i, c);
    const Vec e = linalg::forward_substitute(base_lower_, col);
    for (int i = 0; i < k; ++i) base_(i, c) = e[static_cast<std::size_t>(i)];
  }
  const int t = inner_.fiber().rows();
  const DenseMatrix r = linalg::cholesky(inner_.fiber());
  fiber_upper_ = r.transposed();
  fiber_ = DenseMatrix(t, t);
  Vec unit(static_cast<std::size_t>(t));
  for (int c = 0; c < t; ++c) {
    std::fill(unit.begin(), unit.end(), 0.0);
    unit[static_cast<std::size_t>(c)] = 1.0;
    const Vec e = linalg::forward_substitute(r, unit);
    for (int i = 0; i < t; ++i) fiber_(i, c) = e[static_cast<std::size_t>(i)];
  }
}

TangentFrame ProductFrameBasis::frame(const DenseMatrix& coeffs) const {
  const int k = this->k();
  const int t = this->t();
  require(coeffs.rows() == k && coeffs.cols() == k + t, ErrorKind::invalid_argument,
          "frame coefficients must be k x (k + t)");
  const int n = base_.cols();
  TangentFrame f;
  f.at = at_;
  f.vectors.resize(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) {
    auto& v = f.vectors[static_cast<std::size_t>(i)];
    v.base.assign(static_cast<std::size_t>(n), 0.0);
    v.fiber.assign(static_cast<std::size_t>(t), 0.0);
    for (int l = 0; l < k; ++l)
      for (int c = 0; c < n; ++c) v.base[static_cast<std::size_t>(c)] += coeffs(i, l) * base_(l, c);
    for (int m = 0; m < t; ++m)
      for (int c = 0; c < t; ++c) v.fiber[static_cast<std::size_t>(c)] += coeffs(i, k + m) * fiber_(m, c);
  }
  return f;
}

DenseMatrix ProductFrameBasis::coefficients(const TangentFrame& frame) const {
  const int k = this->k();
  const int t = this->t();
  require(static_cast<int>(frame.vectors.size()) == k, ErrorKind::invalid_argument, "frame must have k vectors");
  const DenseMatrix y = tangent_coordinates(tangent_, frame.base_rows());
  DenseMatrix c(k, k + t);
  for (int i = 0; i < k; ++i) {
    for (int l = 0; l < k; ++l) {
      double v = 0.0;
      for (int j = 0; j < k; ++j) v += base_lower_(j, l) * y(i, j);  // L^T y
      c(i, l) = v;
    }
    const Vec& u = frame.vectors[static_cast<std::size_t>(i)].fiber;
    for (int m = 0; m < t; ++m) {
      double v = 0.0;
      for (int j = 0; j < t; ++j) v += fiber_upper_(m, j) * u[static_cast<std::size_t>(j)];
      c(i, k + m) = v;
    }
  }
  return c;
}

ProductPoint sample_product_point(const NeckSpec& spec, CounterRng& rng) {
  ProductPoint at;
  at.p = spec.geometry().sample_point(rng);
  const FiberBox& box = spec.fiber_domain();
  at.q.resize(box.lo.size());
  for (std::size_t i = 0; i < at.q.size(); ++i) at.q[i] = rng.uniform(box.lo[i], box.hi[i]);
  return at;
}

TangentFrame random_frame(const ProductFrameBasis& basis, CounterRng& rng) {
  return basis.frame(random_coefficients(basis.k(), basis.k() + basis.t(), rng));
}

TangentFrame random_frame(const NeckSpec& spec, const ProductPoint& at, CounterRng& rng) {
  return random_frame(ProductFrameBasis(spec, at), rng);
}

void validate_frame(const NeckSpec& spec, const TangentFrame& frame) {
  require(static_cast<int>(frame.vectors.size()) == spec.k(), ErrorKind::invalid_argument,
          "frame must have k = " + std::to_string(spec.k()) + " vectors");
  require(static_cast<int>(frame.at.p.size()) == spec.n() && static_cast<int>(frame.at.q.size()) == spec.t(),
          ErrorKind::invalid_argument, "frame point has wrong dimensions");
  for (const auto& v : frame.vectors)
    require(static_cast<int>(v.base.size()) == spec.n() && static_cast<int>(v.fiber.size()) == spec.t(),
            ErrorKind::invalid_argument, "frame vector has wrong dimensions");
  require(spec.fiber_domain().contains(frame.at.q), ErrorKind::domain, "frame fiber point outside the fiber domain");
  const OrientedTangentBasis basis = tangent_basis(spec.geometry(), frame.at.p);
  tangent_coordinates(basis, frame.base_rows());
  const ProductInnerProduct inner(spec, frame.at.p, frame.at.q);
  require(relative_gram_det(frame_gram(inner, frame)) > kFrameIndependenceTol, ErrorKind::invalid_argument,
          "frame vectors are linearly dependent");
}

double calib_value(const NeckSpec& spec, const TangentFrame& frame) {
  const Vec& q0 = spec.q0();
  const DenseMatrix x = frame.base_rows();
  const int sign = orientation_sign(spec.geometry(), frame.at.p, x);
  if (sign == 0) return 0.0;
  return base_volume_form(spec, q0, x, sign);
}

double frame_volume(const NeckSpec& spec, const TangentFrame& frame) {
  validate_frame(spec, frame);
  const ProductInnerProduct inner(spec, frame.at.p, frame.at.q);
  return sqrt_gram_det(frame_gram(inner, frame));
}

double frame_volume_by_minors(const NeckSpec& spec, const TangentFrame& frame) {
  validate_frame(spec, frame);
  const ProductFrameBasis basis(spec, frame.at);
  return std::sqrt(linalg::cauchy_binet_check(basis.coefficients(frame)).rhs);
}

double pushforward_volume(const NeckSpec& spec, const TangentFrame& frame) {
  return std::abs(base_volume_form(spec, frame.at.q, frame.base_rows(), 1));
}

double comass_ratio(const NeckSpec& spec, const TangentFrame& frame) {
  const double calib = calib_value(spec, frame);
  return calib / frame_volume(spec, frame);
}

ComassReport comass_sweep(const NeckSpec& spec, const SweepOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  const Vec& q0 = spec.q0();
  ComassReport report;
  report.spec_id = spec.id();
  report.seed = options.seed;

  const std::size_t points = options.frames_per_point == 0 ? 0 : static_cast<std::size_t>(options.points);
  std::vector<PointOutcome> outcomes(points);
  const int k = spec.k();
  const int t = spec.t();

  parallel_for(points, options.threads, [&](std::size_t i) {
    CounterRng rng = stream_for(options.seed, i);
    ProductPoint at = sample_product_point(spec, rng);
    if (options.mode == SweepMode::lifted_at_q0) at.q = q0;
    const PointEvaluator ev(spec, at);
    PointOutcome& out = outcomes[i];
    for (std::uint64_t j = 0; j < options.frames_per_point; ++j) {
      const DenseMatrix coeffs = options.mode == SweepMode::lifted_at_q0 ? lifted_coefficients(k, t, rng)
                                                                         : random_coefficients(k, k + t, rng);
      TangentFrame frame = ev.basis().frame(coeffs);
      const double r = ev.ratio(frame, coeffs);
      if (r > 1.0 + kViolationTol) out.violations.push_back({frame, r});
      if (r > out.best_ratio) {
        out.best_ratio = r;
        out.best_frame = std::move(frame);
      }
    }
    sort_and_trim(out.violations);
  });

  for (auto& out : outcomes) {
    report.samples += options.frames_per_point;
    if (out.best_ratio > report.max_ratio) {
      report.max_ratio = out.best_ratio;
      report.argmax = std::move(out.best_frame);
    }
    for (auto& v : out.violations) report.violations.push_back(std::move(v));
  }
  sort_and_trim(report.violations);
  report.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

SearchResult max_ratio_search(const NeckSpec& spec, const SearchOptions& options) {
  spec.q0();
  require(options.restarts >= 0 && options.iters >= 0, ErrorKind::invalid_argument, "search counts must be >= 0");
  require(options.initial_step > 0.0 && options.decay > 0.0 && options.decay < 1.0, ErrorKind::invalid_argument,
          "search step must be positive and decay in (0, 1)");
  const double max_step = 10.0 * options.initial_step;

  std::vector<SearchResult> results(static_cast<std::size_t>(options.restarts));
  parallel_for(results.size(), options.threads, [&](std::size_t r) {
    CounterRng rng = stream_for(options.seed ^ kSearchStreamSalt, r);
    SearchState best = initial_state(spec, rng);
    TangentFrame best_frame;
    best.ratio = evaluate_state(spec, best, &best_frame);
    double step = options.initial_step;
    for (int it = 0; it < options.iters; ++it) {
      SearchState trial = propose(spec, best, step, rng);
      TangentFrame frame;
      trial.ratio = evaluate_state(spec, trial, &frame);
      if (trial.ratio > best.ratio) {
        best = std::move(trial);
        best_frame = std::move(frame);
        step = std::min(step / options.decay, max_step);
      } else {
        step *= options.decay;
      }
    }
    if (std::isfinite(best.ratio)) results[r] = {best.ratio, std::move(best_frame)};
  });

  SearchResult out;
  for (auto& r : results)
    if (r.ratio > out.ratio) out = std::move(r);
  return out;
}

ProbeReport probe_hypothesis(const NeckSpec& spec, const ProbeOptions& options) {
  require(spec.has_q0(), ErrorKind::state, "q0 has not been set; run find_q0 first");
  ProbeReport report;
  report.coordinatewise_min = spec.q0_result()->coordinatewise_min;
  report.sweep = comass_sweep(spec, options.sweep);
  report.search = max_ratio_search(spec, options.search);
  report.max_ratio = std::max(report.sweep.max_ratio, report.search.ratio);
  if (report.max_ratio > 1.0 + kViolationTol) {
    if (report.search.ratio >= report.sweep.max_ratio)
      report.witness = ComassViolation{*report.search.frame, report.search.ratio};
    else
      report.witness = ComassViolation{*report.sweep.argmax, report.sweep.max_ratio};
  }
  return report;
}

}  // namespace neckcalib
