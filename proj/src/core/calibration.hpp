#pragma once

// Candidate calibration phi = pi^* vol_{g(q0)} on (M x N, g(q) + h(p)):
// frame construction, phi and vol_V evaluation, Monte-Carlo comass sweeps,
// local maximization of the comass ratio and the hypothesis probe.

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "geometry.hpp"
#include "linalg.hpp"
#include "metric_family.hpp"
#include "rng.hpp"

namespace neckcalib {

/// Ratios above 1 + kViolationTol are reported as comass violations.
inline constexpr double kViolationTol = 1e-9;
/// Frames whose relative Gram determinant falls below this are treated as dependent.
inline constexpr double kFrameIndependenceTol = 1e-14;
/// Resampling budget for random_frame.
inline constexpr int kFrameResampleLimit = 16;
/// Upper bound on the violation list kept in a ComassReport.
inline constexpr std::size_t kMaxReportedViolations = 1000;

struct ProductPoint {
  Vec p;  // on M, in R^n
  Vec q;  // in the fiber box, R^t
};

struct FrameVector {
  Vec base;   // in T_pM, R^n
  Vec fiber;  // R^t
};

/// k tangent vectors of M x N at one point.
struct TangentFrame {
  ProductPoint at;
  std::vector<FrameVector> vectors;

  /// k x n matrix of base components (the pushforward pi_* v_i).
  linalg::DenseMatrix base_rows() const;
  linalg::DenseMatrix fiber_rows() const;
};

/// Orthonormal basis e_1..e_{k+t} of T_(p,q)(M x N) for g(q) + h(p), with
/// e_1..e_k spanning T_pM in the orientation of the reference tangent basis.
class ProductFrameBasis {
public:
  ProductFrameBasis(const NeckSpec& spec, const ProductPoint& at);

  int k() const noexcept { return base_.rows(); }
  int t() const noexcept { return fiber_.rows(); }
  const ProductPoint& at() const noexcept { return at_; }
  const OrientedTangentBasis& tangent() const noexcept { return tangent_; }
  const ProductInnerProduct& inner() const noexcept { return inner_; }

  /// Frame whose i-th vector is sum_l coeffs(i, l) e_l; coeffs is k x (k + t).
  TangentFrame frame(const linalg::DenseMatrix& coeffs) const;
  /// Coordinates of a frame in this basis (the k x (k + t) matrix C).
  linalg::DenseMatrix coefficients(const TangentFrame& frame) const;

private:
  ProductPoint at_;
  OrientedTangentBasis tangent_;
  ProductInnerProduct inner_;
  linalg::DenseMatrix base_lower_;   // Cholesky factor of the tangent-basis Gram under g(q)
  linalg::DenseMatrix base_;         // k x n, rows e_1..e_k
  linalg::DenseMatrix fiber_upper_;  // R^T with h = R R^T
  linalg::DenseMatrix fiber_;        // t x t, rows e_{k+1}..e_{k+t}
};

/// Uniform point of M times a uniform fiber point.
ProductPoint sample_product_point(const NeckSpec& spec, CounterRng& rng);

/// Gaussian coefficients over the product-orthonormal basis, resampled if dependent.
TangentFrame random_frame(const NeckSpec& spec, const ProductPoint& at, CounterRng& rng);
TangentFrame random_frame(const ProductFrameBasis& basis, CounterRng& rng);

/// Checks dimensions, point membership, tangency and independence; throws invalid_argument/domain.
void validate_frame(const NeckSpec& spec, const TangentFrame& frame);

/// phi(v_1..v_k) = vol_{g(q0)}(pi_* v_1, ..., pi_* v_k), signed by the orientation of M.
double calib_value(const NeckSpec& spec, const TangentFrame& frame);

/// vol_V(v_1..v_k) = sqrt det of the product-metric Gram.
double frame_volume(const NeckSpec& spec, const TangentFrame& frame);

/// sqrt(sum_S det(C_S)^2) with C the coordinates in the product-orthonormal basis.
double frame_volume_by_minors(const NeckSpec& spec, const TangentFrame& frame);

/// |vol_{g(q)}(pi_* v_1..pi_* v_k)| at the frame's own fiber point q.
double pushforward_volume(const NeckSpec& spec, const TangentFrame& frame);

/// calib_value / frame_volume.
double comass_ratio(const NeckSpec& spec, const TangentFrame& frame);

struct ComassViolation {
  TangentFrame frame;
  double ratio = 0.0;
};

struct ComassReport {
  std::string spec_id;
  std::uint64_t samples = 0;
  double max_ratio = -std::numeric_limits<double>::infinity();
  std::optional<TangentFrame> argmax;
  std::vector<ComassViolation> violations;  // descending ratio, at most kMaxReportedViolations
  std::uint64_t seed = 0;
  double wall_time_s = 0.0;
};

enum class SweepMode {
  random_frames,   // random (p, q) and random frames of T(M x N)
  lifted_at_q0,    // q = q0 and positively oriented frames of T_pM with zero fiber part
};

struct SweepOptions {
  std::uint64_t points = 0;
  std::uint64_t frames_per_point = 0;
  std::uint64_t seed = 0;
  unsigned threads = 0;
  SweepMode mode = SweepMode::random_frames;
};

/// Deterministic for a fixed seed regardless of thread count.
ComassReport comass_sweep(const NeckSpec& spec, const SweepOptions& options);

struct SearchOptions {
  int restarts = 0;
  int iters = 0;
  std::uint64_t seed = 0;
  unsigned threads = 0;
  double initial_step = 0.1;
  double decay = 0.7;
};

struct SearchResult {
  double ratio = -std::numeric_limits<double>::infinity();
  std::optional<TangentFrame> frame;
};

/// Multi-start perturb-and-accept ascent of comass_ratio over (p, q, frame).
SearchResult max_ratio_search(const NeckSpec& spec, const SearchOptions& options);

struct ProbeOptions {
  SweepOptions sweep;
  SearchOptions search;
};

struct ProbeReport {
  bool coordinatewise_min = false;
  double max_ratio = -std::numeric_limits<double>::infinity();
  std::optional<ComassViolation> witness;  // set when max_ratio > 1 + kViolationTol
  ComassReport sweep;
  SearchResult search;
};

/// Runs a sweep plus a search and reports any comass ratio above 1 as a witness.
ProbeReport probe_hypothesis(const NeckSpec& spec, const ProbeOptions& options);

}  // namespace neckcalib
