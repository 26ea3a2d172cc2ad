#include "ttlnet/rate_matrix.hpp"

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <sstream>

#include "ttlnet/errors.hpp"

namespace ttlnet {
namespace {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::ColMajor>;

SparseMatrix to_eigen(std::size_t rows, std::size_t cols, std::span<const Entry> entries) {
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(entries.size());
  for (const auto& e : entries) {
    triplets.emplace_back(static_cast<int>(e.row), static_cast<int>(e.col), e.value);
  }
  SparseMatrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  m.setFromTriplets(triplets.begin(), triplets.end());
  m.makeCompressed();
  return m;
}

// Marks every vertex reachable from `start` along arcs i->j with adj[i] listing j.
std::vector<char> reachable(const std::vector<std::vector<std::size_t>>& adj, std::size_t start) {
  std::vector<char> seen(adj.size(), 0);
  std::vector<std::size_t> stack{start};
  seen[start] = 1;
  while (!stack.empty()) {
    const auto v = stack.back();
    stack.pop_back();
    for (auto w : adj[v]) {
      if (!seen[w]) {
        seen[w] = 1;
        stack.push_back(w);
      }
    }
  }
  return seen;
}

}  // namespace

RateMatrix::RateMatrix(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), row_start_(rows + 1, 0) {}

RateMatrix::RateMatrix(std::size_t rows, std::size_t cols, std::vector<Entry> entries)
    : rows_(rows), cols_(cols) {
  for (const auto& e : entries) {
    if (e.row >= rows || e.col >= cols) {
      throw DimensionError("entry (" + std::to_string(e.row) + "," + std::to_string(e.col) +
                           ") outside a " + std::to_string(rows) + "x" + std::to_string(cols) +
                           " matrix");
    }
    if (!std::isfinite(e.value)) {
      throw ValidationError("non-finite rate at (" + std::to_string(e.row) + "," +
                            std::to_string(e.col) + ")");
    }
  }
  std::stable_sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });
  entries_.reserve(entries.size());
  for (const auto& e : entries) {
    if (!entries_.empty() && entries_.back().row == e.row && entries_.back().col == e.col) {
      entries_.back().value += e.value;
    } else {
      entries_.push_back(e);
    }
  }
  std::erase_if(entries_, [](const Entry& e) { return e.value == 0.0; });

  row_start_.assign(rows_ + 1, 0);
  for (const auto& e : entries_) {
    ++row_start_[e.row + 1];
  }
  std::partial_sum(row_start_.begin(), row_start_.end(), row_start_.begin());
}

RateMatrix RateMatrix::identity(std::size_t n) {
  std::vector<Entry> entries;
  entries.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    entries.push_back({i, i, 1.0});
  }
  return {n, n, std::move(entries)};
}

RateMatrix RateMatrix::diagonal(std::span<const double> values) {
  std::vector<Entry> entries;
  for (std::size_t i = 0; i < values.size(); ++i) {
    entries.push_back({i, i, values[i]});
  }
  return {values.size(), values.size(), std::move(entries)};
}

RateMatrix RateMatrix::from_dense(std::initializer_list<std::initializer_list<double>> rows) {
  std::vector<std::vector<double>> dense;
  for (const auto& r : rows) {
    dense.emplace_back(r);
  }
  return from_dense(dense);
}

RateMatrix RateMatrix::from_dense(const std::vector<std::vector<double>>& rows) {
  const std::size_t n_rows = rows.size();
  const std::size_t n_cols = n_rows == 0 ? 0 : rows.front().size();
  std::vector<Entry> entries;
  for (std::size_t i = 0; i < n_rows; ++i) {
    if (rows[i].size() != n_cols) {
      throw DimensionError("ragged dense matrix: row " + std::to_string(i) + " has " +
                           std::to_string(rows[i].size()) + " columns, expected " +
                           std::to_string(n_cols));
    }
    for (std::size_t j = 0; j < n_cols; ++j) {
      if (rows[i][j] != 0.0) {
        entries.push_back({i, j, rows[i][j]});
      }
    }
  }
  return {n_rows, n_cols, std::move(entries)};
}

double RateMatrix::operator()(std::size_t r, std::size_t c) const {
  if (r >= rows_ || c >= cols_) {
    throw DimensionError("index out of range");
  }
  const auto cells = row(r);
  const auto it = std::lower_bound(cells.begin(), cells.end(), c,
                                   [](const Entry& e, std::size_t col) { return e.col < col; });
  return (it != cells.end() && it->col == c) ? it->value : 0.0;
}

std::span<const Entry> RateMatrix::row(std::size_t r) const {
  if (r >= rows_) {
    throw DimensionError("row index out of range");
  }
  return std::span<const Entry>(entries_).subspan(row_start_[r], row_start_[r + 1] - row_start_[r]);
}

std::vector<double> RateMatrix::row_sums() const {
  std::vector<double> sums(rows_, 0.0);
  for (const auto& e : entries_) {
    sums[e.row] += e.value;
  }
  return sums;
}

std::vector<std::vector<double>> RateMatrix::to_dense() const {
  std::vector<std::vector<double>> dense(rows_, std::vector<double>(cols_, 0.0));
  for (const auto& e : entries_) {
    dense[e.row][e.col] = e.value;
  }
  return dense;
}

std::vector<double> RateMatrix::left_multiply(std::span<const double> x) const {
  if (x.size() != rows_) {
    throw DimensionError("left_multiply: vector length " + std::to_string(x.size()) +
                         " does not match " + std::to_string(rows_) + " rows");
  }
  std::vector<double> y(cols_, 0.0);
  for (const auto& e : entries_) {
    y[e.col] += x[e.row] * e.value;
  }
  return y;
}

std::vector<double> RateMatrix::multiply(std::span<const double> x) const {
  if (x.size() != cols_) {
    throw DimensionError("multiply: vector length " + std::to_string(x.size()) +
                         " does not match " + std::to_string(cols_) + " columns");
  }
  std::vector<double> y(rows_, 0.0);
  for (const auto& e : entries_) {
    y[e.row] += e.value * x[e.col];
  }
  return y;
}

RateMatrix RateMatrix::transposed() const {
  std::vector<Entry> entries;
  entries.reserve(entries_.size());
  for (const auto& e : entries_) {
    entries.push_back({e.col, e.row, e.value});
  }
  return {cols_, rows_, std::move(entries)};
}

RateMatrix RateMatrix::scaled(double factor) const {
  std::vector<Entry> entries = entries_;
  for (auto& e : entries) {
    e.value *= factor;
  }
  return {rows_, cols_, std::move(entries)};
}

RateMatrix operator+(const RateMatrix& a, const RateMatrix& b) {
  if (a.rows_ != b.rows_ || a.cols_ != b.cols_) {
    throw DimensionError("matrix sum of mismatched shapes");
  }
  std::vector<Entry> entries = a.entries_;
  entries.insert(entries.end(), b.entries_.begin(), b.entries_.end());
  return {a.rows_, a.cols_, std::move(entries)};
}

RateMatrix operator-(const RateMatrix& a, const RateMatrix& b) { return a + b.scaled(-1.0); }

std::string RateMatrix::to_string(int precision) const {
  std::ostringstream out;
  out << std::setprecision(precision);
  for (const auto& row : to_dense()) {
    out << '[';
    for (std::size_t j = 0; j < row.size(); ++j) {
      out << (j ? ", " : "") << row[j];
    }
    out << "]\n";
  }
  return out.str();
}

void append_block(std::vector<Entry>& out, const RateMatrix& block, std::size_t row0,
                  std::size_t col0, double scale) {
  if (scale == 0.0) {
    return;
  }
  for (const auto& e : block.entries()) {
    out.push_back({row0 + e.row, col0 + e.col, scale * e.value});
  }
}

ProbabilityVector::ProbabilityVector(std::vector<double> values) : values_(std::move(values)) {
  if (values_.empty()) {
    throw ValidationError("probability vector is empty");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (!(values_[i] >= 0.0) || !std::isfinite(values_[i])) {
      throw ValidationError("probability vector entry " + std::to_string(i) +
                            " is negative or not finite");
    }
    sum += values_[i];
  }
  if (std::abs(sum - 1.0) > kSumTolerance) {
    std::ostringstream msg;
    msg << std::setprecision(17) << "probability vector sums to " << sum << ", not 1";
    throw ValidationError(msg.str());
  }
}

ProbabilityVector ProbabilityVector::unit(std::size_t size, std::size_t index) {
  if (index >= size) {
    throw DimensionError("unit vector index out of range");
  }
  std::vector<double> v(size, 0.0);
  v[index] = 1.0;
  return ProbabilityVector(std::move(v));
}

RateMatrix kron_product(const RateMatrix& a, const RateMatrix& b) {
  std::vector<Entry> entries;
  entries.reserve(a.nnz() * b.nnz());
  for (const auto& ea : a.entries()) {
    for (const auto& eb : b.entries()) {
      entries.push_back({ea.row * b.rows() + eb.row, ea.col * b.cols() + eb.col, ea.value * eb.value});
    }
  }
  return {a.rows() * b.rows(), a.cols() * b.cols(), std::move(entries)};
}

RateMatrix kron_sum(const RateMatrix& a, const RateMatrix& b) {
  if (!a.is_square() || !b.is_square()) {
    throw DimensionError("kron_sum requires square operands, got " + std::to_string(a.rows()) +
                         "x" + std::to_string(a.cols()) + " and " + std::to_string(b.rows()) +
                         "x" + std::to_string(b.cols()));
  }
  const std::size_t m = a.rows();
  const std::size_t n = b.rows();
  std::vector<Entry> entries;
  entries.reserve(a.nnz() * n + m * b.nnz());
  // a (x) I_n
  for (const auto& e : a.entries()) {
    for (std::size_t k = 0; k < n; ++k) {
      entries.push_back({e.row * n + k, e.col * n + k, e.value});
    }
  }
  // I_m (x) b
  for (std::size_t k = 0; k < m; ++k) {
    append_block(entries, b, k * n, k * n);
  }
  return {m * n, m * n, std::move(entries)};
}

std::vector<double> kron_vector(std::span<const double> a, std::span<const double> b) {
  std::vector<double> out;
  out.reserve(a.size() * b.size());
  for (double x : a) {
    for (double y : b) {
      out.push_back(x * y);
    }
  }
  return out;
}

void require_generator(const RateMatrix& q) {
  if (!q.is_square()) {
    throw ValidationError("generator must be square");
  }
  if (q.rows() == 0) {
    throw ValidationError("generator is empty");
  }
  std::vector<double> sums(q.rows(), 0.0);
  std::vector<double> scale(q.rows(), 1.0);
  for (const auto& e : q.entries()) {
    if (e.row != e.col && e.value < 0.0) {
      throw ValidationError("generator has negative off-diagonal rate at (" +
                            std::to_string(e.row) + "," + std::to_string(e.col) + ")");
    }
    if (e.row == e.col) {
      scale[e.row] = std::max(1.0, std::abs(e.value));
    }
    sums[e.row] += e.value;
  }
  for (std::size_t i = 0; i < sums.size(); ++i) {
    if (std::abs(sums[i]) > 1e-9 * scale[i]) {
      throw ValidationError("generator row " + std::to_string(i) + " does not sum to zero");
    }
  }
}

bool is_irreducible(const RateMatrix& q) {
  const std::size_t n = q.rows();
  if (n <= 1) {
    return true;
  }
  std::vector<std::vector<std::size_t>> forward(n);
  std::vector<std::vector<std::size_t>> backward(n);
  for (const auto& e : q.entries()) {
    if (e.row != e.col && e.value > 0.0) {
      forward[e.row].push_back(e.col);
      backward[e.col].push_back(e.row);
    }
  }
  const auto fwd = reachable(forward, 0);
  const auto bwd = reachable(backward, 0);
  return std::all_of(fwd.begin(), fwd.end(), [](char c) { return c != 0; }) &&
         std::all_of(bwd.begin(), bwd.end(), [](char c) { return c != 0; });
}

double residual_norm(std::span<const double> p, const RateMatrix& q) {
  const auto r = q.left_multiply(p);
  double norm = 0.0;
  for (double v : r) {
    norm = std::max(norm, std::abs(v));
  }
  return norm;
}

ProbabilityVector steady_state(const RateMatrix& q) {
  require_generator(q);
  const std::size_t n = q.rows();
  if (n == 1) {
    return ProbabilityVector{1.0};
  }
  if (!is_irreducible(q)) {
    throw NoStationaryDistribution("generator of dimension " + std::to_string(n) +
                                   " is reducible; no unique stationary distribution");
  }

  // Solve q^T p = 0 with the last balance equation replaced by sum(p) = 1.
  std::vector<Entry> system;
  system.reserve(q.nnz() + n);
  double diag_scale = 1.0;
  for (const auto& e : q.entries()) {
    if (e.col != n - 1) {
      system.push_back({e.col, e.row, e.value});
    }
    if (e.row == e.col) {
      diag_scale = std::max(diag_scale, std::abs(e.value));
    }
  }
  for (std::size_t j = 0; j < n; ++j) {
    system.push_back({n - 1, j, 1.0});
  }
  const RateMatrix a(n, n, std::move(system));
  const SparseMatrix lhs = to_eigen(n, n, a.entries());

  Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>> lu;
  lu.analyzePattern(lhs);
  lu.factorize(lhs);
  if (lu.info() != Eigen::Success) {
    throw NoStationaryDistribution("stationary system is singular: " + lu.lastErrorMessage());
  }
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  rhs(static_cast<Eigen::Index>(n - 1)) = 1.0;
  Eigen::VectorXd x = lu.solve(rhs);
  // One step of iterative refinement.
  const Eigen::VectorXd r = rhs - lhs * x;
  x += lu.solve(r);

  std::vector<double> p(x.data(), x.data() + x.size());
  double sum = 0.0;
  for (auto& v : p) {
    if (!std::isfinite(v) || v < -1e-10) {
      throw NoStationaryDistribution("stationary solve produced an invalid probability");
    }
    v = std::max(v, 0.0);
    sum += v;
  }
  for (auto& v : p) {
    v /= sum;
  }
  const double res = residual_norm(p, q);
  if (res >= 1e-10 * diag_scale) {
    throw NoStationaryDistribution("stationary residual " + std::to_string(res) +
                                   " exceeds tolerance");
  }
  return ProbabilityVector(std::move(p));
}

std::vector<double> solve(const RateMatrix& a, std::span<const double> b) {
  if (!a.is_square() || a.rows() != b.size()) {
    throw DimensionError("solve: shape mismatch");
  }
  const std::size_t n = a.rows();
  const SparseMatrix lhs = to_eigen(n, n, a.entries());
  Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>> lu;
  lu.analyzePattern(lhs);
  lu.factorize(lhs);
  if (lu.info() != Eigen::Success) {
    throw ValidationError("matrix is singular: " + lu.lastErrorMessage());
  }
  Eigen::VectorXd rhs(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    rhs(static_cast<Eigen::Index>(i)) = b[i];
  }
  Eigen::VectorXd x = lu.solve(rhs);
  const Eigen::VectorXd r = rhs - lhs * x;
  x += lu.solve(r);
  return {x.data(), x.data() + x.size()};
}

}  // namespace ttlnet
