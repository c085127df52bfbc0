#pragma once

// Independent reference computations for tests. Nothing here calls into the
// library's numerical code, so agreement is a genuine two-path check.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

using Mat = std::vector<std::vector<double>>;

inline Mat zeros(int r, int c) { return Mat(static_cast<std::size_t>(r), std::vector<double>(static_cast<std::size_t>(c))); }

/// Laplace expansion along the first row; fine up to dimension ~8.
inline double cofactor_det(const Mat& a) {
  const std::size_t n = a.size();
  if (n == 0) return 1.0;
  if (n == 1) return a[0][0];
  if (n == 2) return a[0][0] * a[1][1] - a[0][1] * a[1][0];
  double s = 0.0;
  for (std::size_t c = 0; c < n; ++c) {
    Mat sub;
    for (std::size_t r = 1; r < n; ++r) {
      std::vector<double> row;
      for (std::size_t j = 0; j < n; ++j)
        if (j != c) row.push_back(a[r][j]);
      sub.push_back(std::move(row));
    }
    s += ((c % 2 == 0) ? 1.0 : -1.0) * a[0][c] * cofactor_det(sub);
  }
  return s;
}

/// Determinant via Eigen's full-pivot LU (used where cofactor expansion is too slow).
inline double eigen_det(const Mat& a) {
  const auto n = static_cast<Eigen::Index>(a.size());
  Eigen::MatrixXd m(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) m(i, j) = a[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  return n == 0 ? 1.0 : m.fullPivLu().determinant();
}

/// All k-subsets of {0..n-1} by bitmask, sorted lexicographically.
inline std::vector<std::vector<int>> brute_subsets(int n, int k) {
  std::vector<std::vector<int>> out;
  for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
    if (std::popcount(mask) != k) continue;
    std::vector<int> s;
    for (int i = 0; i < n; ++i)
      if (mask & (1u << i)) s.push_back(i);
    out.push_back(std::move(s));
  }
  std::sort(out.begin(), out.end());
  return out;
}

inline Mat columns(const Mat& a, const std::vector<int>& cols) {
  Mat out;
  for (const auto& row : a) {
    std::vector<double> r;
    for (int c : cols) r.push_back(row[static_cast<std::size_t>(c)]);
    out.push_back(std::move(r));
  }
  return out;
}

/// sum_S prod_{l in S} w_l det(A_S)^2 by brute force; w empty means unit weights.
inline double weighted_minor_sum(const Mat& a, const std::vector<double>& w = {}) {
  const int k = static_cast<int>(a.size());
  const int n = k == 0 ? 0 : static_cast<int>(a[0].size());
  double s = 0.0;
  for (const auto& sub : brute_subsets(n, k)) {
    double wp = 1.0;
    if (!w.empty())
      for (int l : sub) wp *= w[static_cast<std::size_t>(l)];
    const double m = eigen_det(columns(a, sub));
    s += wp * m * m;
  }
  return s;
}

/// A diag(w) A^T computed directly.
inline Mat weighted_gram(const Mat& a, const std::vector<double>& w) {
  const std::size_t k = a.size();
  Mat g = zeros(static_cast<int>(k), static_cast<int>(k));
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 0; j < k; ++j)
      for (std::size_t l = 0; l < a[i].size(); ++l) g[i][j] += w[l] * a[i][l] * a[j][l];
  return g;
}

inline std::vector<double> eigenvalues(const Mat& sym) {
  const auto n = static_cast<Eigen::Index>(sym.size());
  Eigen::MatrixXd m(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) m(i, j) = sym[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
  std::vector<double> out(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = es.eigenvalues()(i);
  return out;
}

/// Unit sphere S^{n-1} surface area.
inline double sphere_area(int n) { return 2.0 * std::pow(M_PI, n / 2.0) / std::tgamma(n / 2.0); }

inline double rel(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(a)); }

// ---- hand-rolled generators ---------------------------------------------------

/// Seeded generator for property tests (std::mt19937_64, separate from the library RNG).
class Gen {
public:
  explicit Gen(std::uint64_t seed) : eng_(seed) {}

  double normal() { return std::normal_distribution<double>(0.0, 1.0)(eng_); }
  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(eng_); }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(eng_); }
  std::uint64_t u64() { return eng_(); }

  Mat matrix(int r, int c) {
    Mat m = zeros(r, c);
    for (auto& row : m)
      for (double& x : row) x = normal();
    return m;
  }

  std::vector<double> positive(int n, double lo = 0.1, double hi = 4.0) {
    std::vector<double> w(static_cast<std::size_t>(n));
    for (double& x : w) x = uniform(lo, hi);
    return w;
  }

  std::vector<double> unit_vector(int n) {
    std::vector<double> v(static_cast<std::size_t>(n));
    double s = 0.0;
    for (double& x : v) {
      x = normal();
      s += x * x;
    }
    for (double& x : v) x /= std::sqrt(s);
    return v;
  }

  std::mt19937_64& engine() { return eng_; }

private:
  std::mt19937_64 eng_;
};

}  // namespace oracle
