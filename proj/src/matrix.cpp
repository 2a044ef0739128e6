#include "olss/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "olss/error.hpp"

namespace olss {

namespace {

std::string shape_str(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

double dot(const double* x, const double* y, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += x[i] * y[i];
  return s;
}

// Householder QR of a tall matrix (rows >= cols). Returns the thin Q (n x d)
// and the upper-triangular R (d x d).
void householder_qr(const Matrix& a, Matrix& q, Matrix& r) {
  const std::size_t n = a.rows();
  const std::size_t d = a.cols();
  Matrix m = a;
  std::vector<std::vector<double>> reflectors(d);
  std::vector<double> beta(d, 0.0);

  for (std::size_t k = 0; k < d; ++k) {
    std::vector<double> v(n - k);
    for (std::size_t i = k; i < n; ++i) v[i - k] = m(i, k);
    const double norm = std::sqrt(dot(v.data(), v.data(), v.size()));
    if (norm == 0.0) continue;
    const double alpha = v[0] > 0.0 ? -norm : norm;
    v[0] -= alpha;
    const double vv = dot(v.data(), v.data(), v.size());
    if (vv == 0.0) continue;
    beta[k] = 2.0 / vv;
    std::vector<double> w(d - k, 0.0);
    for (std::size_t i = k; i < n; ++i) {
      const double vi = v[i - k];
      const double* row = &m(i, k);
      for (std::size_t j = 0; j < d - k; ++j) w[j] += vi * row[j];
    }
    for (std::size_t i = k; i < n; ++i) {
      const double f = beta[k] * v[i - k];
      double* row = &m(i, k);
      for (std::size_t j = 0; j < d - k; ++j) row[j] -= f * w[j];
    }
    reflectors[k] = std::move(v);
  }

  r = Matrix(d, d);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = i; j < d; ++j) r(i, j) = m(i, j);

  q = Matrix(n, d);
  for (std::size_t i = 0; i < d; ++i) q(i, i) = 1.0;
  for (std::size_t kk = d; kk-- > 0;) {
    if (beta[kk] == 0.0) continue;
    const auto& v = reflectors[kk];
    std::vector<double> w(d, 0.0);
    for (std::size_t i = kk; i < n; ++i) {
      const double vi = v[i - kk];
      const double* row = &q(i, 0);
      for (std::size_t j = 0; j < d; ++j) w[j] += vi * row[j];
    }
    for (std::size_t i = kk; i < n; ++i) {
      const double f = beta[kk] * v[i - kk];
      double* row = &q(i, 0);
      for (std::size_t j = 0; j < d; ++j) row[j] -= f * w[j];
    }
  }
}

// One-sided (Hestenes) Jacobi on a square matrix. On return `cols` holds the
// columns of R·V (mutually orthogonal) and `vcols` the columns of V.
void one_sided_jacobi(std::vector<std::vector<double>>& cols,
                      std::vector<std::vector<double>>& vcols) {
  const std::size_t d = cols.size();
  const std::size_t n = d == 0 ? 0 : cols[0].size();
  constexpr double eps = std::numeric_limits<double>::epsilon();
  constexpr int kMaxSweeps = 100;
  // Columns below round-off of the whole matrix carry no resolvable direction.
  double total = 0.0;
  for (const auto& c : cols) total += dot(c.data(), c.data(), n);
  const double negligible = eps * eps * total;

  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    bool rotated = false;
    for (std::size_t p = 0; p + 1 < d; ++p) {
      for (std::size_t q = p + 1; q < d; ++q) {
        double* wp = cols[p].data();
        double* wq = cols[q].data();
        const double alpha = dot(wp, wp, n);
        const double beta = dot(wq, wq, n);
        const double gamma = dot(wp, wq, n);
        if (gamma == 0.0 || std::abs(gamma) <= eps * std::sqrt(alpha * beta)) continue;
        if (alpha <= negligible || beta <= negligible) continue;
        rotated = true;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = (zeta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        for (std::size_t i = 0; i < n; ++i) {
          const double x = wp[i];
          const double y = wq[i];
          wp[i] = c * x - s * y;
          wq[i] = s * x + c * y;
        }
        double* vp = vcols[p].data();
        double* vq = vcols[q].data();
        for (std::size_t i = 0; i < d; ++i) {
          const double x = vp[i];
          const double y = vq[i];
          vp[i] = c * x - s * y;
          vq[i] = s * x + c * y;
        }
      }
    }
    if (!rotated) return;
  }
  throw NumericError("thin_svd: Jacobi sweeps did not converge");
}

// Replace column j of the n x r matrix `u` by a unit vector orthogonal to
// columns [0, j). Starts from the existing column and falls back to the
// standard basis vector with the largest residual.
void orthonormalize_column(Matrix& u, std::size_t j) {
  const std::size_t n = u.rows();
  auto project_out = [&](std::vector<double>& w) {
    for (int pass = 0; pass < 2; ++pass) {
      for (std::size_t k = 0; k < j; ++k) {
        double c = 0.0;
        for (std::size_t i = 0; i < n; ++i) c += u(i, k) * w[i];
        for (std::size_t i = 0; i < n; ++i) w[i] -= c * u(i, k);
      }
    }
    return std::sqrt(dot(w.data(), w.data(), n));
  };

  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i) w[i] = u(i, j);
  double norm = std::sqrt(dot(w.data(), w.data(), n));
  if (norm > 0.0) {
    for (auto& x : w) x /= norm;
    norm = project_out(w);
  }
  if (!(norm > 0.5)) {
    double best = -1.0;
    std::vector<double> best_w;
    for (std::size_t e = 0; e < n; ++e) {
      std::vector<double> cand(n, 0.0);
      cand[e] = 1.0;
      const double res = project_out(cand);
      if (res > best + 1e-12) {
        best = res;
        best_w = std::move(cand);
      }
      if (best > 0.7) break;
    }
    w = std::move(best_w);
    norm = best;
  }
  for (std::size_t i = 0; i < n; ++i) u(i, j) = w[i] / norm;
}

ThinSVD tall_svd(const Matrix& a) {
  const std::size_t n = a.rows();
  const std::size_t d = a.cols();
  Matrix q;
  Matrix r;
  householder_qr(a, q, r);

  std::vector<std::vector<double>> cols(d, std::vector<double>(d));
  std::vector<std::vector<double>> vcols(d, std::vector<double>(d, 0.0));
  for (std::size_t j = 0; j < d; ++j) {
    for (std::size_t i = 0; i < d; ++i) cols[j][i] = r(i, j);
    vcols[j][j] = 1.0;
  }
  one_sided_jacobi(cols, vcols);

  std::vector<double> sigma(d);
  for (std::size_t j = 0; j < d; ++j)
    sigma[j] = std::sqrt(dot(cols[j].data(), cols[j].data(), d));

  std::vector<std::size_t> order(d);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return sigma[x] > sigma[y]; });

  ThinSVD out;
  out.singular_values.resize(d);
  Matrix ur(d, d);
  out.vt = Matrix(d, d);
  for (std::size_t jj = 0; jj < d; ++jj) {
    const std::size_t j = order[jj];
    out.singular_values[jj] = sigma[j];
    for (std::size_t i = 0; i < d; ++i) {
      ur(i, jj) = sigma[j] > 0.0 ? cols[j][i] / sigma[j] : 0.0;
      out.vt(jj, i) = vcols[j][i];
    }
  }
  out.u = matmul(q, ur);

  const double sigma_max = out.singular_values.empty() ? 0.0 : out.singular_values[0];
  const double tol = sigma_max * std::numeric_limits<double>::epsilon() *
                     static_cast<double>(std::max(n, d));
  for (std::size_t j = 0; j < d; ++j) {
    if (out.singular_values[j] <= tol) orthonormalize_column(out.u, j);
  }
  return out;
}

void apply_sign_convention(ThinSVD& s) {
  const std::size_t r = s.vt.rows();
  for (std::size_t j = 0; j < r; ++j) {
    auto v = s.vt.row(j);
    auto first = std::find_if(v.begin(), v.end(), [](double x) { return std::abs(x) > 1e-12; });
    if (first == v.end() || *first > 0.0) continue;
    for (auto& x : v) x = -x;
    for (std::size_t i = 0; i < s.u.rows(); ++i) s.u(i, j) = -s.u(i, j);
  }
}

}  // namespace

Matrix::Matrix(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_)
    throw ShapeError("Matrix: data length " + std::to_string(data_.size()) +
                     " does not match " + std::to_string(rows) + "x" + std::to_string(cols));
  ensure_finite(*this, "Matrix");
}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
  rows_ = rows.size();
  cols_ = rows_ == 0 ? 0 : rows.begin()->size();
  data_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    if (r.size() != cols_) throw ShapeError("Matrix: ragged initializer");
    data_.insert(data_.end(), r.begin(), r.end());
  }
  ensure_finite(*this, "Matrix");
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

void ensure_finite(const Matrix& a, const char* what) {
  for (double x : a.data())
    if (!std::isfinite(x)) throw NumericError(std::string(what) + ": non-finite entry");
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows())
    throw ShapeError("matmul: " + shape_str(a) + " * " + shape_str(b));
  Matrix c(a.rows(), b.cols());
  const std::size_t k_dim = a.cols();
  const std::size_t m = b.cols();
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double* crow = &c(i, 0);
    for (std::size_t k = 0; k < k_dim; ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      const double* brow = b.data().data() + k * m;
      for (std::size_t j = 0; j < m; ++j) crow[j] += aik * brow[j];
    }
  }
  ensure_finite(c, "matmul");
  return c;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows())
    throw ShapeError("matmul_tn: " + shape_str(a) + "^T * " + shape_str(b));
  Matrix c(a.cols(), b.cols());
  const std::size_t m = b.cols();
  for (std::size_t k = 0; k < a.rows(); ++k) {
    const auto arow = a.row(k);
    const double* brow = b.data().data() + k * m;
    for (std::size_t i = 0; i < a.cols(); ++i) {
      const double aki = arow[i];
      if (aki == 0.0) continue;
      double* crow = &c(i, 0);
      for (std::size_t j = 0; j < m; ++j) crow[j] += aki * brow[j];
    }
  }
  ensure_finite(c, "matmul_tn");
  return c;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols())
    throw ShapeError("matmul_nt: " + shape_str(a) + " * " + shape_str(b) + "^T");
  Matrix c(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.rows(); ++j)
      c(i, j) = dot(a.row(i).data(), b.row(j).data(), a.cols());
  ensure_finite(c, "matmul_nt");
  return c;
}

Matrix transpose(const Matrix& a) {
  Matrix t(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
  return t;
}

Matrix add(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw ShapeError("add: " + shape_str(a) + " + " + shape_str(b));
  Matrix c = a;
  auto cd = c.data();
  auto bd = b.data();
  for (std::size_t i = 0; i < cd.size(); ++i) cd[i] += bd[i];
  ensure_finite(c, "add");
  return c;
}

Matrix subtract(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw ShapeError("subtract: " + shape_str(a) + " - " + shape_str(b));
  Matrix c = a;
  auto cd = c.data();
  auto bd = b.data();
  for (std::size_t i = 0; i < cd.size(); ++i) cd[i] -= bd[i];
  ensure_finite(c, "subtract");
  return c;
}

Matrix scale(const Matrix& a, double factor) {
  Matrix c = a;
  for (auto& x : c.data()) x *= factor;
  ensure_finite(c, "scale");
  return c;
}

Matrix vstack(const Matrix& top, const Matrix& bottom) {
  if (top.rows() == 0 && top.cols() == 0) return bottom;
  if (bottom.rows() == 0 && bottom.cols() == 0) return top;
  if (top.cols() != bottom.cols())
    throw ShapeError("vstack: " + shape_str(top) + " over " + shape_str(bottom));
  std::vector<double> data;
  data.reserve(top.size() + bottom.size());
  data.insert(data.end(), top.data().begin(), top.data().end());
  data.insert(data.end(), bottom.data().begin(), bottom.data().end());
  return Matrix(top.rows() + bottom.rows(), top.cols(), std::move(data));
}

Matrix select_rows(const Matrix& a, std::span<const std::size_t> indices) {
  Matrix out(indices.size(), a.cols());
  for (std::size_t r = 0; r < indices.size(); ++r) {
    if (indices[r] >= a.rows())
      throw ShapeError("select_rows: index " + std::to_string(indices[r]) + " out of range");
    std::copy_n(a.row(indices[r]).begin(), a.cols(), out.row(r).begin());
  }
  return out;
}

double frobenius_norm(const Matrix& a) {
  double s = 0.0;
  for (double x : a.data()) s += x * x;
  return std::sqrt(s);
}

ThinSVD thin_svd(const Matrix& a) {
  if (a.rows() == 0 || a.cols() == 0)
    throw ArgumentError("thin_svd: empty matrix " + shape_str(a));
  ensure_finite(a, "thin_svd");
  ThinSVD out;
  if (a.rows() >= a.cols()) {
    out = tall_svd(a);
  } else {
    ThinSVD t = tall_svd(transpose(a));
    out.u = transpose(t.vt);
    out.singular_values = std::move(t.singular_values);
    out.vt = transpose(t.u);
  }
  apply_sign_convention(out);
  return out;
}

double spectral_norm(const Matrix& a) {
  if (a.rows() == 0 || a.cols() == 0) return 0.0;
  return thin_svd(a).singular_values.front();
}

}  // namespace olss
