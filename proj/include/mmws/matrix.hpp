#pragma once

// Dense row-major matrices, deterministic initialization, and the sequential
// multiplication that every parallel variant is checked against bitwise.

#include <cstddef>
#include <cstdint>
#include <cstring>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mmws/error.hpp"

namespace mmws {

namespace detail {

// splitmix64. Fixed here (rather than <random>) so identical (dims, seed)
// produce bitwise-identical matrices on every platform.
inline std::uint64_t splitmix64_next(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Top 53 bits -> [0, 1).
inline double to_unit_double(std::uint64_t bits) {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

}  // namespace detail

// Row-major matrix of 64-bit floats; element (i, j) lives at data()[i * cols() + j].
// Cheap to move, safe to share read-only across any number of workers once built.
class Matrix {
 public:
  Matrix(std::size_t n_rows, std::size_t n_cols)
      : rows_(n_rows), cols_(n_cols), data_(checked_size(n_rows, n_cols), 0.0) {}

  Matrix(std::size_t n_rows, std::size_t n_cols, std::vector<double> values)
      : rows_(n_rows), cols_(n_cols), data_(std::move(values)) {
    if (data_.size() != checked_size(n_rows, n_cols)) {
      throw DimensionError("Matrix: value buffer has " + std::to_string(data_.size()) +
                           " elements, expected " + std::to_string(n_rows * n_cols));
    }
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }

  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }
  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }

  std::span<const double> data() const { return data_; }

  // Contiguous view of rows [first_row, first_row + n_rows).
  std::span<const double> row_span(std::size_t first_row, std::size_t n_rows) const {
    bounds_check(first_row, n_rows);
    return {data_.data() + first_row * cols_, n_rows * cols_};
  }
  std::span<double> row_span(std::size_t first_row, std::size_t n_rows) {
    bounds_check(first_row, n_rows);
    return {data_.data() + first_row * cols_, n_rows * cols_};
  }

 private:
  static std::size_t checked_size(std::size_t n_rows, std::size_t n_cols) {
    if (n_rows == 0 || n_cols == 0) {
      throw DimensionError("Matrix: dimensions must be positive, got " +
                           std::to_string(n_rows) + "x" + std::to_string(n_cols));
    }
    return n_rows * n_cols;
  }

  void bounds_check(std::size_t first_row, std::size_t n_rows) const {
    if (first_row > rows_ || n_rows > rows_ - first_row) {
      throw DimensionError("Matrix: row range [" + std::to_string(first_row) + ", " +
                           std::to_string(first_row + n_rows) + ") exceeds " +
                           std::to_string(rows_) + " rows");
    }
  }

  std::size_t rows_;
  std::size_t cols_;
  std::vector<double> data_;
};

inline Matrix identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

/// Deterministic uniform [0, 1) fill: splitmix64 seeded with `seed`, advanced
/// once per element in row-major order. A pure function of (n_rows, n_cols, seed).
inline Matrix random_matrix(std::size_t n_rows, std::size_t n_cols, std::uint64_t seed) {
  Matrix m(n_rows, n_cols);
  std::uint64_t state = seed;
  auto out = m.row_span(0, n_rows);
  for (double& x : out) x = detail::to_unit_double(detail::splitmix64_next(state));
  return m;
}

/// Sequential product, i/k outer loops with an ascending-j accumulation that
/// starts from exactly 0.0. This per-element summation order is the bitwise
/// reference for all parallel variants.
inline Matrix matmul_seq(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw DimensionError("matmul: inner dimensions differ, " + std::to_string(a.cols()) +
                         " vs " + std::to_string(b.rows()));
  }
  Matrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t k = 0; k < b.cols(); ++k) {
      double acc = 0.0;
      for (std::size_t j = 0; j < a.cols(); ++j) acc += a(i, j) * b(j, k);
      c(i, k) = acc;
    }
  }
  return c;
}

/// Exact floating-point operation count of an NxN product: N^2 * (2N - 1)
/// (N multiplies and N-1 adds per element), in integer arithmetic.
inline std::uint64_t op_count(std::int64_t n) {
  if (n < 1) throw DomainError("op_count: N must be >= 1, got " + std::to_string(n));
  const auto un = static_cast<std::uint64_t>(n);
  return un * un * (2 * un - 1);
}

inline bool bitwise_equal(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
  const auto da = a.data();
  const auto db = b.data();
  for (std::size_t i = 0; i < da.size(); ++i) {
    // Compare representations, not values: 0.0 vs -0.0 must differ, NaNs must match.
    if (std::memcmp(&da[i], &db[i], sizeof(double)) != 0) return false;
  }
  return true;
}

// Flat index of the first element whose bit pattern differs; nullopt when equal.
// Shape mismatches report index 0.
inline std::optional<std::size_t> first_difference(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) return 0;
  const auto da = a.data();
  const auto db = b.data();
  for (std::size_t i = 0; i < da.size(); ++i) {
    if (std::memcmp(&da[i], &db[i], sizeof(double)) != 0) return i;
  }
  return std::nullopt;
}

}  // namespace mmws
