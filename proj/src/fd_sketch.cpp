#include "olss/fd_sketch.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "olss/error.hpp"

namespace olss {

FDState fd_new(std::size_t capacity, std::size_t feature_dim) {
  if (capacity == 0 || feature_dim == 0)
    throw ArgumentError("fd_new: capacity and feature_dim must be >= 1");
  FDState s;
  s.capacity = capacity;
  s.feature_dim = feature_dim;
  s.buffer = Matrix(0, feature_dim);
  return s;
}

FDState fd_append(FDState state, const Matrix& rows) {
  if (rows.cols() != state.feature_dim)
    throw ShapeError("fd_append: rows have " + std::to_string(rows.cols()) +
                     " columns, sketch expects " + std::to_string(state.feature_dim));
  ensure_finite(rows, "fd_append");
  const std::size_t d = state.feature_dim;
  const std::size_t limit = 2 * state.capacity;

  std::vector<double> buf(state.buffer.data().begin(), state.buffer.data().end());
  std::size_t buf_rows = state.buffer.rows();
  buf.reserve((limit + 1) * d);
  for (std::size_t r = 0; r < rows.rows(); ++r) {
    const auto row = rows.row(r);
    buf.insert(buf.end(), row.begin(), row.end());
    ++buf_rows;
    if (buf_rows > limit) {
      state.buffer = Matrix(buf_rows, d, std::move(buf));
      state = fd_shrink(std::move(state));
      buf.assign(state.buffer.data().begin(), state.buffer.data().end());
      buf.reserve((limit + 1) * d);
      buf_rows = state.buffer.rows();
    }
  }
  state.buffer = Matrix(buf_rows, d, std::move(buf));
  state.rows_seen += rows.rows();
  return state;
}

FDState fd_shrink(FDState state) {
  if (state.buffer.rows() == 0) throw StateError("fd_shrink: buffer is empty");
  const ThinSVD svd = thin_svd(state.buffer);
  const std::size_t ell = state.capacity;
  const auto& sigma = svd.singular_values;
  const double delta = sigma.size() > ell ? sigma[ell] * sigma[ell] : 0.0;
  const std::size_t keep = std::min(ell, sigma.size());

  Matrix next(keep, state.feature_dim);
  for (std::size_t i = 0; i < keep; ++i) {
    const double shrunk = std::sqrt(std::max(sigma[i] * sigma[i] - delta, 0.0));
    const auto v = svd.vt.row(i);
    auto out = next.row(i);
    for (std::size_t j = 0; j < v.size(); ++j) out[j] = shrunk * v[j];
  }
  state.buffer = std::move(next);
  return state;
}

Matrix fd_sketch(const FDState& state) {
  const Matrix& src = state.buffer.rows() > state.capacity ? fd_shrink(state).buffer : state.buffer;
  Matrix out(state.capacity, state.feature_dim);
  std::copy(src.data().begin(), src.data().end(), out.data().begin());
  return out;
}

FDBound fd_error_bound(const Matrix& a, const Matrix& sketch, std::size_t k) {
  const std::size_t ell = sketch.rows();
  if (k >= ell)
    throw ArgumentError("fd_error_bound: k = " + std::to_string(k) + " must be < ell = " +
                        std::to_string(ell));
  if (a.cols() != sketch.cols()) throw ShapeError("fd_error_bound: column mismatch");
  FDBound b;
  b.lhs = spectral_norm(subtract(matmul_tn(a, a), matmul_tn(sketch, sketch)));
  const ThinSVD svd = thin_svd(a);
  double tail = 0.0;
  for (std::size_t i = k; i < svd.singular_values.size(); ++i)
    tail += svd.singular_values[i] * svd.singular_values[i];
  b.rhs = tail / static_cast<double>(ell - k);
  return b;
}

}  // namespace olss
