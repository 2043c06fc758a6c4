#include "peslab/matrix.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <stdexcept>
#include <string>

namespace pes {

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m.at(i, i) = 1.0;
  return m;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols != b.rows) {
    throw std::invalid_argument("matmul: inner dimensions differ (" +
                                std::to_string(a.cols) + " vs " +
                                std::to_string(b.rows) + ")");
  }
  Matrix out(a.rows, b.cols);
  for (std::size_t i = 0; i < a.rows; ++i) {
    const double* arow = a.data.data() + i * a.cols;
    double* orow = out.data.data() + i * out.cols;
    for (std::size_t k = 0; k < a.cols; ++k) {
      const double aik = arow[k];
      if (aik == 0.0) continue;
      const double* brow = b.data.data() + k * b.cols;
      for (std::size_t j = 0; j < b.cols; ++j) orow[j] += aik * brow[j];
    }
  }
  check_finite(out, "matmul result");
  return out;
}

Matrix matmul_transpose_a(const Matrix& a, const Matrix& b) {
  if (a.rows != b.rows) {
    throw std::invalid_argument("matmul_transpose_a: row counts differ");
  }
  Matrix out(a.cols, b.cols);
  for (std::size_t k = 0; k < a.rows; ++k) {
    const double* arow = a.data.data() + k * a.cols;
    const double* brow = b.data.data() + k * b.cols;
    for (std::size_t i = 0; i < a.cols; ++i) {
      const double aki = arow[i];
      if (aki == 0.0) continue;
      double* orow = out.data.data() + i * out.cols;
      for (std::size_t j = 0; j < b.cols; ++j) orow[j] += aki * brow[j];
    }
  }
  return out;
}

Matrix matmul_transpose_b(const Matrix& a, const Matrix& b) {
  if (a.cols != b.cols) {
    throw std::invalid_argument("matmul_transpose_b: column counts differ");
  }
  Matrix out(a.rows, b.rows);
  for (std::size_t i = 0; i < a.rows; ++i) {
    const double* arow = a.data.data() + i * a.cols;
    for (std::size_t j = 0; j < b.rows; ++j) {
      const double* brow = b.data.data() + j * b.cols;
      double sum = 0.0;
      for (std::size_t k = 0; k < a.cols; ++k) sum += arow[k] * brow[k];
      out.at(i, j) = sum;
    }
  }
  return out;
}

Matrix gather_rows(const Matrix& src, std::span<const std::size_t> indices) {
  Matrix out(indices.size(), src.cols);
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] >= src.rows) {
      throw std::out_of_range("gather_rows: index out of range");
    }
    std::memcpy(out.data.data() + i * out.cols,
                src.data.data() + indices[i] * src.cols,
                src.cols * sizeof(double));
  }
  return out;
}

void check_finite(const Matrix& m, const char* what) {
  for (double v : m.data) {
    if (!std::isfinite(v)) {
      throw std::runtime_error(std::string(what) + ": non-finite entry");
    }
  }
}

std::uint64_t checksum_doubles(std::span<const double> values, std::uint64_t h) {
  for (double v : values) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof(bits));
    for (int i = 0; i < 8; ++i) {
      h ^= (bits >> (8 * i)) & 0xFFu;
      h *= 1099511628211ULL;
    }
  }
  return h;
}

}  // namespace pes
