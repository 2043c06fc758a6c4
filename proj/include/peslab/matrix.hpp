#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace pes {

// Dense row-major matrix. Batches are stored as rows everywhere in this
// codebase; a batch of n examples with d features is an n x d matrix.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0)
      : rows(r), cols(c), data(r * c, fill) {}

  double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

  std::span<double> row(std::size_t r) { return {data.data() + r * cols, cols}; }
  std::span<const double> row(std::size_t r) const {
    return {data.data() + r * cols, cols};
  }

  bool empty() const { return data.empty(); }

  static Matrix identity(std::size_t n);
};

// Standard product a * b; requires a.cols == b.rows.
Matrix matmul(const Matrix& a, const Matrix& b);

// a^T * b without forming the transpose.
Matrix matmul_transpose_a(const Matrix& a, const Matrix& b);

// a * b^T without forming the transpose.
Matrix matmul_transpose_b(const Matrix& a, const Matrix& b);

// Copies the given rows of src into a new matrix, in the given order.
Matrix gather_rows(const Matrix& src, std::span<const std::size_t> indices);

// Throws std::runtime_error naming `what` if any entry is NaN or infinite.
void check_finite(const Matrix& m, const char* what);

// FNV-1a over the raw bytes of a double range; used for parameter checksums.
std::uint64_t checksum_doubles(std::span<const double> values,
                               std::uint64_t h = 14695981039346656037ULL);

}  // namespace pes
