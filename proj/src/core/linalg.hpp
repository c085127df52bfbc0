#pragma once

// Small dense determinant machinery: column-subset minors, Gram products and
// the Cauchy-Binet / weighted minor expansions of det(B diag(w) B^T).
//
// Everything here is a pure function of its arguments.

#include <cstdint>
#include <initializer_list>
#include <iterator>
#include <span>
#include <vector>

namespace neckcalib::linalg {

/// Largest ambient size accepted by subset enumeration (C(20,10) = 184756 subsets).
inline constexpr int kMaxUniverse = 20;
/// Largest square dimension accepted by det().
inline constexpr int kMaxDetDim = 20;

/// Relative deviation |a - b| / max(1, |a|).
double relative_gap(double a, double b) noexcept;

std::uint64_t binomial(int n, int k) noexcept;

/// Strictly increasing k-subset of {0, ..., n-1}. Indices are zero-based.
class IndexSubset {
public:
  IndexSubset() = default;
  IndexSubset(std::vector<int> indices, int universe);

  std::span<const int> indices() const noexcept { return indices_; }
  int size() const noexcept { return static_cast<int>(indices_.size()); }
  int universe() const noexcept { return universe_; }
  int operator[](int i) const noexcept { return indices_[static_cast<std::size_t>(i)]; }

  friend bool operator==(const IndexSubset&, const IndexSubset&) = default;

private:
  friend class SubsetSequence;
  std::vector<int> indices_;
  int universe_ = 0;
};

/// Lazy lexicographic enumeration of all k-subsets of an n-set. Only the
/// current subset is held in memory.
class SubsetSequence {
public:
  SubsetSequence(int n, int k);

  class iterator {
  public:
    using value_type = IndexSubset;
    using difference_type = std::ptrdiff_t;
    using reference = const IndexSubset&;
    using iterator_category = std::input_iterator_tag;

    iterator() = default;

    reference operator*() const noexcept { return current_; }
    const IndexSubset* operator->() const noexcept { return &current_; }
    iterator& operator++();
    void operator++(int) { ++*this; }
    friend bool operator==(const iterator& it, std::default_sentinel_t) noexcept { return it.done_; }

  private:
    friend class SubsetSequence;
    IndexSubset current_;
    bool done_ = true;
  };

  iterator begin() const;
  std::default_sentinel_t end() const noexcept { return {}; }
  std::uint64_t size() const noexcept { return binomial(n_, k_); }

private:
  int n_;
  int k_;
};

/// Subsets of size k from {0..n-1}; rejects k > n and n > kMaxUniverse.
SubsetSequence enumerate_subsets(int n, int k);

/// Row-major dense real matrix with finite entries.
class DenseMatrix {
public:
  DenseMatrix() = default;
  DenseMatrix(int rows, int cols);
  DenseMatrix(int rows, int cols, std::vector<double> entries);

  static DenseMatrix from_rows(std::initializer_list<std::initializer_list<double>> rows);
  static DenseMatrix identity(int n);

  int rows() const noexcept { return rows_; }
  int cols() const noexcept { return cols_; }
  bool is_square() const noexcept { return rows_ == cols_; }

  double operator()(int r, int c) const noexcept { return data_[index(r, c)]; }
  double& operator()(int r, int c) noexcept { return data_[index(r, c)]; }

  std::span<const double> row(int r) const noexcept {
    return {data_.data() + static_cast<std::size_t>(r) * static_cast<std::size_t>(cols_),
            static_cast<std::size_t>(cols_)};
  }
  std::span<const double> data() const noexcept { return data_; }

  DenseMatrix transposed() const;
  DenseMatrix scaled_row(int r, double factor) const;

  friend bool operator==(const DenseMatrix&, const DenseMatrix&) = default;

private:
  std::size_t index(int r, int c) const noexcept {
    return static_cast<std::size_t>(r) * static_cast<std::size_t>(cols_) + static_cast<std::size_t>(c);
  }

  int rows_ = 0;
  int cols_ = 0;
  std::vector<double> data_;
};

DenseMatrix operator*(const DenseMatrix& a, const DenseMatrix& b);

/// A A^T.
DenseMatrix gram(const DenseMatrix& a);
/// B diag(w) B^T.
DenseMatrix weighted_gram(const DenseMatrix& b, std::span<const double> w);

/// Determinant by Gaussian elimination with partial pivoting.
double det(const DenseMatrix& a);

/// Square matrix made of the columns of `a` listed in `s`.
DenseMatrix select_columns(const DenseMatrix& a, const IndexSubset& s);

/// det of the column-selected square block; |s| must equal rows(a).
double minor(const DenseMatrix& a, const IndexSubset& s);

struct CauchyBinetPair {
  double lhs;  // det(A A^T)
  double rhs;  // sum over column subsets of minor^2
};

CauchyBinetPair cauchy_binet_check(const DenseMatrix& a);

/// sum_S (prod_{l in S} w_l) det(B_S)^2, which equals det(B diag(w) B^T).
double weighted_minor_expansion(const DenseMatrix& b, std::span<const double> w);

/// Lower-triangular Cholesky factor of a symmetric positive definite matrix.
/// Throws numerical_degeneracy when a pivot is not positive.
DenseMatrix cholesky(const DenseMatrix& spd);

/// Solves L x = rhs for lower-triangular L.
std::vector<double> forward_substitute(const DenseMatrix& lower, std::span<const double> rhs);

/// Least-squares coordinates y minimizing |cols(basis) y - v|, basis given as
/// k row vectors of length n. Returns the coordinates and writes the residual norm.
std::vector<double> project_coordinates(const DenseMatrix& basis_rows, std::span<const double> v,
                                        double* residual);

double dot(std::span<const double> a, std::span<const double> b) noexcept;
double norm(std::span<const double> a) noexcept;

}  // namespace neckcalib::linalg
