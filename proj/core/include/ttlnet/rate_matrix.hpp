#pragma once

// Sparse rate-matrix substrate: Kronecker algebra, block assembly and
// stationary-distribution solving for continuous-time Markov chains.

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace ttlnet {

/// One stored coordinate of a RateMatrix.
struct Entry {
  std::size_t row = 0;
  std::size_t col = 0;
  double value = 0.0;

  friend bool operator==(const Entry&, const Entry&) = default;
};

/// Immutable sparse matrix of rates in canonical triplet form.
///
/// Entries are kept sorted row-major. Duplicate coordinates passed to the
/// constructor are summed, and coordinates whose value ends up exactly zero
/// are dropped, so two matrices compare equal iff every entry is equal.
class RateMatrix {
 public:
  RateMatrix() = default;
  RateMatrix(std::size_t rows, std::size_t cols);
  RateMatrix(std::size_t rows, std::size_t cols, std::vector<Entry> entries);

  static RateMatrix identity(std::size_t n);
  static RateMatrix diagonal(std::span<const double> values);
  static RateMatrix from_dense(std::initializer_list<std::initializer_list<double>> rows);
  static RateMatrix from_dense(const std::vector<std::vector<double>>& rows);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool is_square() const noexcept { return rows_ == cols_; }
  std::size_t nnz() const noexcept { return entries_.size(); }
  std::span<const Entry> entries() const noexcept { return entries_; }

  /// Entry lookup; absent coordinates read as zero.
  double operator()(std::size_t row, std::size_t col) const;

  /// Entries of one row, in column order.
  std::span<const Entry> row(std::size_t r) const;

  std::vector<double> row_sums() const;
  std::vector<std::vector<double>> to_dense() const;

  /// x * A for a row vector x.
  std::vector<double> left_multiply(std::span<const double> x) const;
  /// A * x for a column vector x.
  std::vector<double> multiply(std::span<const double> x) const;

  RateMatrix transposed() const;
  RateMatrix scaled(double factor) const;

  friend RateMatrix operator+(const RateMatrix& a, const RateMatrix& b);
  friend RateMatrix operator-(const RateMatrix& a, const RateMatrix& b);
  friend RateMatrix operator*(double factor, const RateMatrix& a) { return a.scaled(factor); }
  friend bool operator==(const RateMatrix& a, const RateMatrix& b) = default;

  std::string to_string(int precision = 6) const;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<Entry> entries_;
  std::vector<std::size_t> row_start_{0};  // CSR-style offsets, size rows_+1
};

/// Appends `scale * block` at offset (row0, col0) to a triplet list.
void append_block(std::vector<Entry>& out, const RateMatrix& block, std::size_t row0,
                  std::size_t col0, double scale = 1.0);

/// Dense vector of probabilities, non-negative and summing to one within 1e-12.
class ProbabilityVector {
 public:
  static constexpr double kSumTolerance = 1e-12;

  ProbabilityVector() = default;
  explicit ProbabilityVector(std::vector<double> values);
  ProbabilityVector(std::initializer_list<double> values)
      : ProbabilityVector(std::vector<double>(values)) {}

  /// Point mass on `index` in a vector of length `size`.
  static ProbabilityVector unit(std::size_t size, std::size_t index);

  std::size_t size() const noexcept { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }
  std::span<const double> values() const noexcept { return values_; }
  auto begin() const noexcept { return values_.begin(); }
  auto end() const noexcept { return values_.end(); }

  friend bool operator==(const ProbabilityVector&, const ProbabilityVector&) = default;

 private:
  std::vector<double> values_;
};

/// Kronecker product; block (i,j) of the result is a(i,j) * b.
RateMatrix kron_product(const RateMatrix& a, const RateMatrix& b);

/// Kronecker sum a (x) I_n + I_m (x) b of two square matrices.
RateMatrix kron_sum(const RateMatrix& a, const RateMatrix& b);

/// Kronecker product of two dense vectors.
std::vector<double> kron_vector(std::span<const double> a, std::span<const double> b);

/// Throws ValidationError unless q is a conservative generator: square,
/// non-negative off-diagonal, rows summing to zero within 1e-9 (relative to
/// the row's diagonal magnitude when that exceeds one).
void require_generator(const RateMatrix& q);

/// True when the directed graph of positive off-diagonal entries is strongly connected.
bool is_irreducible(const RateMatrix& q);

/// Stationary distribution p with p*q = 0 and sum(p) = 1 of an irreducible generator.
ProbabilityVector steady_state(const RateMatrix& q);

/// Solves a * x = b by sparse LU. Throws ValidationError when a is singular.
std::vector<double> solve(const RateMatrix& a, std::span<const double> b);

/// Max-norm of the residual p*q.
double residual_norm(std::span<const double> p, const RateMatrix& q);

}  // namespace ttlnet
