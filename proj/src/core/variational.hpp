#pragma once

// Volumes of graphs of sections u: S^{n-1} -> R over the round sphere in a neck
// with one-dimensional fiber, perturbation experiments against M x {q0}, and
// a central-difference first-variation estimate.

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "geometry.hpp"
#include "linalg.hpp"
#include "metric_family.hpp"

namespace neckcalib {

/// Hyperspherical tensor quadrature is limited to S^{n-1} with n <= 6.
inline constexpr int kMaxQuadratureAmbient = 6;
/// Quadrature nodes per compensated-summation chunk (fixed, independent of threads).
inline constexpr std::size_t kQuadratureChunk = 1024;
/// Relative volume deficit beyond which a competitor beats M x {q0}.
inline constexpr double kExcessTol = 1e-9;

/// Restriction to the sphere of a monomial of degree <= 2 in the ambient coordinates.
struct Mode {
  std::vector<int> vars;  // zero-based, non-decreasing, size 0..2

  double value(std::span<const double> p) const noexcept;
  /// Euclidean gradient of the ambient monomial, dotted with x.
  double derivative(std::span<const double> p, std::span<const double> x) const noexcept;
  /// max |value| over the unit sphere.
  double sup_norm() const noexcept;
  /// "1", "x1", "x1*x3" (one-based names).
  std::string name() const;
  static Mode parse(const std::string& text, int n);

  friend bool operator==(const Mode&, const Mode&) = default;
};

/// All modes of degree <= 2: 1, x_i, x_i x_j (i <= j).
std::vector<Mode> all_modes(int n);

/// u(p) = q0 + sum_m amplitudes[m] * modes[m](p).
struct GraphSection {
  std::vector<Mode> modes;
  Vec amplitudes;

  double value(double q0, std::span<const double> p) const noexcept;
  double derivative(std::span<const double> p, std::span<const double> x) const noexcept;
};

/// Gauss-Legendre tensor rule over the hyperspherical angles of S^{n-1},
/// materialized with the orthonormal tangent basis at every node.
class QuadratureRule {
public:
  QuadratureRule(int n, int nodes_per_angle);

  int ambient_dim() const noexcept { return n_; }
  int nodes_per_angle() const noexcept { return nodes_per_angle_; }
  std::size_t size() const noexcept { return weights_.size(); }

  const std::vector<Vec>& angle_nodes() const noexcept { return angle_nodes_; }
  const std::vector<Vec>& angle_weights() const noexcept { return angle_weights_; }
  const Vec& point(std::size_t i) const noexcept { return points_[i]; }
  double weight(std::size_t i) const noexcept { return weights_[i]; }
  const linalg::DenseMatrix& tangent(std::size_t i) const noexcept { return tangents_[i]; }

private:
  int n_;
  int nodes_per_angle_;
  std::vector<Vec> angle_nodes_;    // per angle
  std::vector<Vec> angle_weights_;  // per angle
  std::vector<Vec> points_;
  Vec weights_;  // includes the area element
  std::vector<linalg::DenseMatrix> tangents_;
};

/// Volume of the graph of u over M = S^{n-1} in (M x N, g(q) + h(p)).
double graph_volume(const NeckSpec& spec, const GraphSection& section, const QuadratureRule& rule,
                    unsigned threads = 1);

/// Largest total amplitude keeping u inside the fiber window for the given modes.
double amplitude_bound(const NeckSpec& spec, const std::vector<Mode>& modes);

struct VolumeEntry {
  Vec amplitudes;
  double volume = 0.0;
  double excess = 0.0;  // (volume - baseline) / baseline
};

struct VolumeReport {
  double baseline_volume = 0.0;
  std::vector<VolumeEntry> entries;
  double min_excess = std::numeric_limits<double>::infinity();
  std::optional<std::size_t> worst;  // index into entries
  std::optional<double> defect;      // minimality runs only
};

struct PerturbationOptions {
  std::vector<Mode> modes;
  Vec amplitudes;  // magnitudes; each trial scales uniform(-1, 1) draws by one of them
  std::uint64_t trials = 0;
  std::uint64_t seed = 0;
  unsigned threads = 0;
};

/// Random graph competitors against u == q0.
VolumeReport perturbation_test(const NeckSpec& spec, const PerturbationOptions& options, const QuadratureRule& rule);

/// Entries hold u = q0 +- step * psi for each mode; defect is the largest
/// |V(step psi) - V(-step psi)| / (2 step).
VolumeReport mean_curvature_defect(const NeckSpec& spec, const std::vector<Mode>& modes, double step,
                                   const QuadratureRule& rule, unsigned threads = 0);

}  // namespace neckcalib
