#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace olss {

/// Dense row-major matrix of doubles. Entries are validated finite on
/// construction from external data; kernels re-check their outputs.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols);
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);
  Matrix(std::initializer_list<std::initializer_list<double>> rows);

  static Matrix identity(std::size_t n);
  static Matrix zeros(std::size_t rows, std::size_t cols) { return {rows, cols}; }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }

  std::span<const double> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }
  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }

  std::span<const double> data() const { return data_; }
  std::span<double> data() { return data_; }

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// Thin SVD A = U diag(s) Vt with r = min(rows, cols) components.
struct ThinSVD {
  Matrix u;                            // n x r, orthonormal columns
  std::vector<double> singular_values; // nonincreasing, >= 0
  Matrix vt;                           // r x d, orthonormal rows
};

// Throws NumericError if any entry is NaN/Inf. `what` names the caller.
void ensure_finite(const Matrix& a, const char* what);

Matrix matmul(const Matrix& a, const Matrix& b);
/// aᵀ·b without materialising the transpose.
Matrix matmul_tn(const Matrix& a, const Matrix& b);
/// a·bᵀ without materialising the transpose.
Matrix matmul_nt(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& a);
Matrix add(const Matrix& a, const Matrix& b);
Matrix subtract(const Matrix& a, const Matrix& b);
Matrix scale(const Matrix& a, double factor);

/// Rows of `top` followed by rows of `bottom`. An empty 0x0 operand is
/// treated as a neutral element.
Matrix vstack(const Matrix& top, const Matrix& bottom);
/// Rows at `indices`, in that order.
Matrix select_rows(const Matrix& a, std::span<const std::size_t> indices);

double frobenius_norm(const Matrix& a);

/// One-sided Jacobi SVD preceded by a Householder QR when rows > cols.
/// Sign convention: the first entry of each right singular vector with
/// magnitude above 1e-12 is positive.
ThinSVD thin_svd(const Matrix& a);

/// Largest singular value.
double spectral_norm(const Matrix& a);

}  // namespace olss
