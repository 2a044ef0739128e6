#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>
#include <sstream>

#include "olss/error.hpp"
#include "olss/matrix.hpp"
#include "olss/matrix_io.hpp"
#include "test_util.hpp"

using namespace olss;
using olss::testing::random_matrix;

namespace {

double orthogonality_residual(const Matrix& q_cols) {
  const Matrix g = matmul_tn(q_cols, q_cols);
  return olss::testing::max_abs_diff(g, Matrix::identity(g.rows()));
}

Matrix reconstruct(const ThinSVD& s) {
  Matrix us = s.u;
  for (std::size_t i = 0; i < us.rows(); ++i)
    for (std::size_t j = 0; j < us.cols(); ++j) us(i, j) *= s.singular_values[j];
  return matmul(us, s.vt);
}

void check_svd(const Matrix& a) {
  const ThinSVD s = thin_svd(a);
  const std::size_t r = std::min(a.rows(), a.cols());
  REQUIRE(s.u.rows() == a.rows());
  REQUIRE(s.u.cols() == r);
  REQUIRE(s.vt.rows() == r);
  REQUIRE(s.vt.cols() == a.cols());
  const double tol = 1e-9 * static_cast<double>(std::max(a.rows(), a.cols()));
  CHECK(orthogonality_residual(s.u) <= tol);
  CHECK(orthogonality_residual(transpose(s.vt)) <= tol);
  CHECK(frobenius_norm(subtract(a, reconstruct(s))) <= 1e-8 * frobenius_norm(a) + 1e-300);
  for (std::size_t i = 0; i + 1 < r; ++i) CHECK(s.singular_values[i] >= s.singular_values[i + 1]);
  for (double x : s.singular_values) CHECK(x >= 0.0);
}

}  // namespace

TEST_CASE("matrix construction validates shape and finiteness") {
  CHECK_THROWS_AS(Matrix(2, 2, {1.0, 2.0, 3.0}), ShapeError);
  CHECK_THROWS_AS(Matrix(1, 2, {1.0, std::numeric_limits<double>::quiet_NaN()}), NumericError);
  CHECK_THROWS_AS(Matrix(1, 1, {std::numeric_limits<double>::infinity()}), NumericError);
  const Matrix m{{1, 2, 3}, {4, 5, 6}};
  CHECK(m.rows() == 2);
  CHECK(m.cols() == 3);
  CHECK(m(1, 2) == 6.0);
}

TEST_CASE("matmul") {
  SUBCASE("identity leaves the operand unchanged") {
    const Matrix x = random_matrix(3, 5, 1);
    CHECK(matmul(Matrix::identity(3), x) == x);
  }
  SUBCASE("hand arithmetic") {
    CHECK(matmul(Matrix{{1, 2}, {3, 4}}, Matrix{{1}, {1}}) == Matrix{{3}, {7}});
  }
  SUBCASE("agrees with a triple loop") {
    const Matrix a = random_matrix(5, 4, 2);
    const Matrix b = random_matrix(4, 3, 3);
    CHECK(olss::testing::max_abs_diff(matmul(a, b), olss::testing::triple_loop_product(a, b)) <= 1e-12);
    CHECK(olss::testing::max_abs_diff(matmul_tn(transpose(a), b),
                                      olss::testing::triple_loop_product(a, b)) <= 1e-12);
    CHECK(olss::testing::max_abs_diff(matmul_nt(a, transpose(b)),
                                      olss::testing::triple_loop_product(a, b)) <= 1e-12);
  }
  SUBCASE("shape mismatch") {
    CHECK_THROWS_AS(matmul(Matrix(2, 3), Matrix(2, 3)), ShapeError);
  }
  SUBCASE("overflow is reported, not propagated") {
    CHECK_THROWS_AS(matmul(Matrix{{1e200}}, Matrix{{1e200}}), NumericError);
  }
}

TEST_CASE("matmul is associative on random triples") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Matrix a = random_matrix(4 + seed % 3, 5, seed * 3 + 1);
    const Matrix b = random_matrix(5, 6, seed * 3 + 2);
    const Matrix c = random_matrix(6, 3, seed * 3 + 3);
    const Matrix left = matmul(matmul(a, b), c);
    const Matrix right = matmul(a, matmul(b, c));
    CHECK(frobenius_norm(subtract(left, right)) <= 1e-9 * frobenius_norm(left));
  }
}

TEST_CASE("thin_svd") {
  SUBCASE("identity") {
    const ThinSVD s = thin_svd(Matrix::identity(4));
    for (double x : s.singular_values) CHECK(x == doctest::Approx(1.0).epsilon(1e-14));
  }
  SUBCASE("rank-one outer product") {
    // ‖u‖ = 2, ‖v‖ = 3
    const std::vector<double> u{2.0, 0.0, 0.0, 0.0};
    const std::vector<double> v{1.0, 2.0, 2.0};
    Matrix a(4, 3);
    for (std::size_t i = 0; i < 4; ++i)
      for (std::size_t j = 0; j < 3; ++j) a(i, j) = u[i] * v[j];
    const ThinSVD s = thin_svd(a);
    CHECK(s.singular_values[0] == doctest::Approx(6.0).epsilon(1e-13));
    CHECK(std::abs(s.singular_values[1]) <= 1e-13);
    CHECK(std::abs(s.singular_values[2]) <= 1e-13);
    check_svd(a);
  }
  SUBCASE("random tall, wide and square inputs") {
    check_svd(random_matrix(50, 8, 11));
    check_svd(random_matrix(8, 50, 12));
    check_svd(random_matrix(9, 9, 13));
    check_svd(random_matrix(1, 7, 14));
    check_svd(random_matrix(7, 1, 15));
  }
  SUBCASE("rank-deficient and zero inputs keep orthonormal factors") {
    Matrix a = random_matrix(30, 6, 21);
    for (std::size_t i = 0; i < a.rows(); ++i) {
      a(i, 4) = a(i, 0);
      a(i, 5) = 2.0 * a(i, 1) - a(i, 2);
    }
    check_svd(a);
    for (std::size_t r = 1; r <= 3; ++r)
      for (std::uint64_t seed = 0; seed < 5; ++seed) {
        check_svd(matmul(random_matrix(5 + seed, r, seed), random_matrix(r, 6, seed + 50)));
        check_svd(matmul(random_matrix(9, r, seed + 90), random_matrix(r, 4 + seed, seed + 70)));
      }
    check_svd(Matrix(5, 3));
    check_svd(Matrix(3, 5));
  }
  SUBCASE("sign convention: first significant entry of each right vector is positive") {
    const ThinSVD s = thin_svd(random_matrix(20, 5, 31));
    for (std::size_t j = 0; j < s.vt.rows(); ++j) {
      for (double x : s.vt.row(j)) {
        if (std::abs(x) > 1e-12) {
          CHECK(x > 0.0);
          break;
        }
      }
    }
  }
  SUBCASE("deterministic") {
    const Matrix a = random_matrix(40, 7, 41);
    const ThinSVD s1 = thin_svd(a);
    const ThinSVD s2 = thin_svd(a);
    CHECK(s1.u == s2.u);
    CHECK(s1.vt == s2.vt);
    CHECK(s1.singular_values == s2.singular_values);
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(thin_svd(Matrix(0, 3)), ArgumentError);
  }
}

TEST_CASE("spectral_norm") {
  CHECK(spectral_norm(Matrix{{3, 0}, {0, 1}}) == doctest::Approx(3.0).epsilon(1e-15));
  CHECK(spectral_norm(Matrix(4, 3)) == 0.0);
  const Matrix a = random_matrix(20, 6, 51);
  CHECK(std::abs(spectral_norm(a) - thin_svd(a).singular_values[0]) <= 1e-10);
  CHECK(spectral_norm(a) == doctest::Approx(olss::testing::power_iteration_norm(a)).epsilon(1e-10));
}

TEST_CASE("vstack and select_rows") {
  const Matrix a{{1, 2}, {3, 4}};
  const Matrix b{{5, 6}};
  CHECK(vstack(a, b) == Matrix{{1, 2}, {3, 4}, {5, 6}});
  CHECK(vstack(Matrix(0, 2), b) == b);
  CHECK_THROWS_AS(vstack(a, Matrix(1, 3)), ShapeError);
  const std::size_t idx[] = {2, 0};
  CHECK(select_rows(vstack(a, b), idx) == Matrix{{5, 6}, {1, 2}});
}

TEST_CASE("OLSSMAT1 layout is bit-exact") {
  const Matrix m{{1.0, -2.5}};
  std::ostringstream out(std::ios::binary);
  write_olssmat(out, m);
  const std::string bytes = out.str();
  REQUIRE(bytes.size() == 8 + 8 + 8 + 2 * 8);
  CHECK(bytes.substr(0, 8) == "OLSSMAT1");
  CHECK(static_cast<unsigned char>(bytes[8]) == 1);   // rows LE
  CHECK(static_cast<unsigned char>(bytes[16]) == 2);  // cols LE
  // 1.0 = 0x3FF0000000000000, little-endian: last byte 0x3F, second-last 0xF0.
  CHECK(static_cast<unsigned char>(bytes[31]) == 0x3F);
  CHECK(static_cast<unsigned char>(bytes[30]) == 0xF0);
  std::istringstream in(bytes, std::ios::binary);
  CHECK(read_olssmat(in) == m);
}

TEST_CASE("matrix files round-trip exactly in both formats") {
  const auto dir = olss::testing::scratch_dir("matrix_io");
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Matrix m = random_matrix(3 + seed, 2 + seed, 100 + seed, 1e3);
    save_matrix(dir / "m.mat", m);
    save_matrix(dir / "m.csv", m);
    CHECK(load_matrix(dir / "m.mat") == m);
    CHECK(load_matrix(dir / "m.csv") == m);
  }
}

TEST_CASE("malformed matrix files are format errors") {
  std::istringstream bad_magic("OLSSMAT2xxxxxxxxxxxxxxxx");
  CHECK_THROWS_AS(read_olssmat(bad_magic), FormatError);
  std::istringstream truncated(std::string("OLSSMAT1") + std::string(8, '\1'));
  CHECK_THROWS_AS(read_olssmat(truncated), FormatError);
  std::istringstream no_header("1,2\n");
  CHECK_THROWS_AS(read_matrix_csv(no_header), FormatError);
  std::istringstream ragged("# 2,2\n1,2\n3\n");
  CHECK_THROWS_AS(read_matrix_csv(ragged), FormatError);
  std::istringstream short_rows("# 3,1\n1\n2\n");
  CHECK_THROWS_AS(read_matrix_csv(short_rows), FormatError);
  std::istringstream csv("# 2,2\n1,2\n3,4.5\n");
  CHECK(read_matrix_csv(csv) == Matrix{{1, 2}, {3, 4.5}});
  CHECK_THROWS_AS(load_matrix("/nonexistent/file.mat"), FormatError);
}
