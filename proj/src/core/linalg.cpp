#include "linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "error.hpp"

namespace neckcalib::linalg {

namespace {

std::string dims(int r, int c) { return std::to_string(r) + "x" + std::to_string(c); }

// Partial-pivot elimination in extended precision; m is row-major n x n.
long double eliminate(std::vector<long double> m, int n) {
  auto at = [&](int r, int c) -> long double& { return m[static_cast<std::size_t>(r * n + c)]; };
  long double result = 1.0L;
  for (int col = 0; col < n; ++col) {
    int pivot = col;
    for (int r = col + 1; r < n; ++r)
      if (std::abs(at(r, col)) > std::abs(at(pivot, col))) pivot = r;
    if (at(pivot, col) == 0.0L) return 0.0L;
    if (pivot != col) {
      for (int c = 0; c < n; ++c) std::swap(at(pivot, c), at(col, c));
      result = -result;
    }
    const long double p = at(col, col);
    result *= p;
    for (int r = col + 1; r < n; ++r) {
      const long double f = at(r, col) / p;
      if (f == 0.0L) continue;
      for (int c = col + 1; c < n; ++c) at(r, c) -= f * at(col, c);
    }
  }
  return result;
}

// Shared by cauchy_binet_check (weights == nullptr) and the weighted expansion,
// so the unit-weight case is the same arithmetic.
double minor_square_sum(const DenseMatrix& a, const double* weights) {
  long double sum = 0.0L;
  for (const IndexSubset& s : enumerate_subsets(a.cols(), a.rows())) {
    const long double m = minor(a, s);
    long double term = m * m;
    if (weights != nullptr) {
      long double w = 1.0L;
      for (int l : s.indices()) w *= weights[l];
      term *= w;
    }
    sum += term;
  }
  return static_cast<double>(sum);
}

}  // namespace

double relative_gap(double a, double b) noexcept { return std::abs(a - b) / std::max(1.0, std::abs(a)); }

std::uint64_t binomial(int n, int k) noexcept {
  if (k < 0 || n < 0 || k > n) return 0;
  k = std::min(k, n - k);
  std::uint64_t r = 1;
  for (int i = 1; i <= k; ++i) r = r * static_cast<std::uint64_t>(n - k + i) / static_cast<std::uint64_t>(i);
  return r;
}

IndexSubset::IndexSubset(std::vector<int> indices, int universe)
    : indices_(std::move(indices)), universe_(universe) {
  require(universe_ >= 0, ErrorKind::invalid_argument, "subset universe must be non-negative");
  require(static_cast<int>(indices_.size()) <= universe_, ErrorKind::invalid_argument,
          "subset larger than its universe");
  for (std::size_t i = 0; i < indices_.size(); ++i) {
    require(indices_[i] >= 0 && indices_[i] < universe_, ErrorKind::invalid_argument,
            "subset index out of range");
    require(i == 0 || indices_[i - 1] < indices_[i], ErrorKind::invalid_argument,
            "subset indices must be strictly increasing");
  }
}

SubsetSequence::SubsetSequence(int n, int k) : n_(n), k_(k) {
  require(n >= 0 && k >= 0, ErrorKind::invalid_argument, "subset sizes must be non-negative");
  require(k <= n, ErrorKind::invalid_argument,
          "cannot choose " + std::to_string(k) + " of " + std::to_string(n));
  require(n <= kMaxUniverse, ErrorKind::invalid_argument,
          "subset universe " + std::to_string(n) + " exceeds cap " + std::to_string(kMaxUniverse));
}

SubsetSequence::iterator SubsetSequence::begin() const {
  iterator it;
  it.current_.universe_ = n_;
  it.current_.indices_.resize(static_cast<std::size_t>(k_));
  std::iota(it.current_.indices_.begin(), it.current_.indices_.end(), 0);
  it.done_ = false;
  return it;
}

SubsetSequence::iterator& SubsetSequence::iterator::operator++() {
  auto& idx = current_.indices_;
  const int n = current_.universe_;
  const int k = static_cast<int>(idx.size());
  int i = k - 1;
  while (i >= 0 && idx[static_cast<std::size_t>(i)] == n - k + i) --i;
  if (i < 0) {
    done_ = true;
    return *this;
  }
  ++idx[static_cast<std::size_t>(i)];
  for (int j = i + 1; j < k; ++j) idx[static_cast<std::size_t>(j)] = idx[static_cast<std::size_t>(j - 1)] + 1;
  return *this;
}

SubsetSequence enumerate_subsets(int n, int k) { return SubsetSequence(n, k); }

DenseMatrix::DenseMatrix(int rows, int cols) : rows_(rows), cols_(cols) {
  require(rows >= 0 && cols >= 0, ErrorKind::invalid_argument, "negative matrix dimension");
  data_.assign(static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols), 0.0);
}

DenseMatrix::DenseMatrix(int rows, int cols, std::vector<double> entries)
    : rows_(rows), cols_(cols), data_(std::move(entries)) {
  require(rows >= 0 && cols >= 0, ErrorKind::invalid_argument, "negative matrix dimension");
  require(data_.size() == static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols),
          ErrorKind::invalid_argument, "entry count does not match " + dims(rows, cols));
  for (double x : data_) require(std::isfinite(x), ErrorKind::invalid_argument, "non-finite matrix entry");
}

DenseMatrix DenseMatrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  const int r = static_cast<int>(rows.size());
  const int c = r == 0 ? 0 : static_cast<int>(rows.begin()->size());
  std::vector<double> entries;
  entries.reserve(static_cast<std::size_t>(r * c));
  for (const auto& row : rows) {
    require(static_cast<int>(row.size()) == c, ErrorKind::invalid_argument, "ragged matrix rows");
    entries.insert(entries.end(), row.begin(), row.end());
  }
  return DenseMatrix(r, c, std::move(entries));
}

DenseMatrix DenseMatrix::identity(int n) {
  DenseMatrix m(n, n);
  for (int i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

DenseMatrix DenseMatrix::transposed() const {
  DenseMatrix t(cols_, rows_);
  for (int i = 0; i < rows_; ++i)
    for (int j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
  return t;
}

DenseMatrix DenseMatrix::scaled_row(int r, double factor) const {
  DenseMatrix out = *this;
  for (int j = 0; j < cols_; ++j) out(r, j) *= factor;
  return out;
}

DenseMatrix operator*(const DenseMatrix& a, const DenseMatrix& b) {
  require(a.cols() == b.rows(), ErrorKind::invalid_argument,
          "cannot multiply " + dims(a.rows(), a.cols()) + " by " + dims(b.rows(), b.cols()));
  DenseMatrix out(a.rows(), b.cols());
  for (int i = 0; i < a.rows(); ++i)
    for (int l = 0; l < a.cols(); ++l) {
      const double x = a(i, l);
      for (int j = 0; j < b.cols(); ++j) out(i, j) += x * b(l, j);
    }
  return out;
}

DenseMatrix gram(const DenseMatrix& a) {
  DenseMatrix g(a.rows(), a.rows());
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j <= i; ++j) {
      const double v = dot(a.row(i), a.row(j));
      g(i, j) = v;
      g(j, i) = v;
    }
  return g;
}

DenseMatrix weighted_gram(const DenseMatrix& b, std::span<const double> w) {
  require(static_cast<int>(w.size()) == b.cols(), ErrorKind::invalid_argument, "weight length mismatch");
  DenseMatrix g(b.rows(), b.rows());
  for (int i = 0; i < b.rows(); ++i)
    for (int j = 0; j <= i; ++j) {
      double v = 0.0;
      for (int l = 0; l < b.cols(); ++l) v += w[static_cast<std::size_t>(l)] * b(i, l) * b(j, l);
      g(i, j) = v;
      g(j, i) = v;
    }
  return g;
}

double det(const DenseMatrix& a) {
  require(a.is_square(), ErrorKind::invalid_argument, "det of non-square " + dims(a.rows(), a.cols()));
  require(a.rows() <= kMaxDetDim, ErrorKind::invalid_argument, "det dimension exceeds cap");
  return static_cast<double>(eliminate(std::vector<long double>(a.data().begin(), a.data().end()), a.rows()));
}

DenseMatrix select_columns(const DenseMatrix& a, const IndexSubset& s) {
  require(s.universe() <= a.cols(), ErrorKind::invalid_argument, "subset universe exceeds column count");
  DenseMatrix out(a.rows(), s.size());
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < s.size(); ++j) out(i, j) = a(i, s[j]);
  return out;
}

double minor(const DenseMatrix& a, const IndexSubset& s) {
  require(s.size() == a.rows(), ErrorKind::invalid_argument,
          "minor needs |S| = " + std::to_string(a.rows()) + ", got " + std::to_string(s.size()));
  return det(select_columns(a, s));
}

CauchyBinetPair cauchy_binet_check(const DenseMatrix& a) {
  require(a.rows() <= a.cols(), ErrorKind::invalid_argument, "Cauchy-Binet needs rows <= cols");
  require(a.cols() <= kMaxUniverse, ErrorKind::invalid_argument, "column count exceeds cap");
  // The Gram entries stay in extended precision; rounding them first costs cond(A)^2 eps.
  const int k = a.rows();
  std::vector<long double> g(static_cast<std::size_t>(k * k));
  for (int i = 0; i < k; ++i)
    for (int j = 0; j <= i; ++j) {
      long double v = 0.0L;
      for (int l = 0; l < a.cols(); ++l) v += static_cast<long double>(a(i, l)) * a(j, l);
      g[static_cast<std::size_t>(i * k + j)] = g[static_cast<std::size_t>(j * k + i)] = v;
    }
  return {static_cast<double>(eliminate(std::move(g), k)), minor_square_sum(a, nullptr)};
}

double weighted_minor_expansion(const DenseMatrix& b, std::span<const double> w) {
  require(static_cast<int>(w.size()) == b.cols(), ErrorKind::invalid_argument, "weight length mismatch");
  require(b.rows() <= b.cols(), ErrorKind::invalid_argument, "weighted expansion needs rows <= cols");
  for (double x : w)
    require(std::isfinite(x) && x > 0.0, ErrorKind::invalid_argument, "weights must be positive");
  return minor_square_sum(b, w.data());
}

DenseMatrix cholesky(const DenseMatrix& spd) {
  require(spd.is_square(), ErrorKind::invalid_argument, "cholesky of non-square matrix");
  const int n = spd.rows();
  DenseMatrix l(n, n);
  for (int j = 0; j < n; ++j) {
    double d = spd(j, j);
    for (int p = 0; p < j; ++p) d -= l(j, p) * l(j, p);
    if (!(d > 0.0)) fail(ErrorKind::numerical_degeneracy, "matrix is not positive definite");
    l(j, j) = std::sqrt(d);
    for (int i = j + 1; i < n; ++i) {
      double v = spd(i, j);
      for (int p = 0; p < j; ++p) v -= l(i, p) * l(j, p);
      l(i, j) = v / l(j, j);
    }
  }
  return l;
}

std::vector<double> forward_substitute(const DenseMatrix& lower, std::span<const double> rhs) {
  const int n = lower.rows();
  std::vector<double> x(rhs.begin(), rhs.end());
  for (int i = 0; i < n; ++i) {
    double v = x[static_cast<std::size_t>(i)];
    for (int p = 0; p < i; ++p) v -= lower(i, p) * x[static_cast<std::size_t>(p)];
    x[static_cast<std::size_t>(i)] = v / lower(i, i);
  }
  return x;
}

std::vector<double> project_coordinates(const DenseMatrix& basis_rows, std::span<const double> v,
                                        double* residual) {
  const int k = basis_rows.rows();
  require(static_cast<int>(v.size()) == basis_rows.cols(), ErrorKind::invalid_argument,
          "vector length does not match basis");
  const DenseMatrix l = cholesky(gram(basis_rows));
  std::vector<double> rhs(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) rhs[static_cast<std::size_t>(i)] = dot(basis_rows.row(i), v);
  // (L L^T) y = rhs: forward then backward.
  std::vector<double> z = forward_substitute(l, rhs);
  std::vector<double> y(static_cast<std::size_t>(k));
  for (int i = k - 1; i >= 0; --i) {
    double s = z[static_cast<std::size_t>(i)];
    for (int p = i + 1; p < k; ++p) s -= l(p, i) * y[static_cast<std::size_t>(p)];
    y[static_cast<std::size_t>(i)] = s / l(i, i);
  }
  if (residual != nullptr) {
    double r2 = 0.0;
    for (int c = 0; c < basis_rows.cols(); ++c) {
      double x = v[static_cast<std::size_t>(c)];
      for (int i = 0; i < k; ++i) x -= y[static_cast<std::size_t>(i)] * basis_rows(i, c);
      r2 += x * x;
    }
    *residual = std::sqrt(r2);
  }
  return y;
}

double dot(std::span<const double> a, std::span<const double> b) noexcept {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm(std::span<const double> a) noexcept { return std::sqrt(dot(a, a)); }

}  // namespace neckcalib::linalg
