#include "olss/leverage.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "olss/error.hpp"
#include "olss/rng.hpp"

namespace olss {

namespace {

std::size_t numerical_rank(const std::vector<double>& sigma) {
  if (sigma.empty() || sigma.front() == 0.0) return 0;
  const double cutoff = kRankCutoff * sigma.front();
  return static_cast<std::size_t>(
      std::count_if(sigma.begin(), sigma.end(), [&](double s) { return s > cutoff; }));
}

}  // namespace

LeverageScores leverage_scores(const Matrix& a) {
  if (a.rows() == 0) throw ArgumentError("leverage_scores: matrix has no rows");
  const ThinSVD svd = thin_svd(a);
  const std::size_t rank = numerical_rank(svd.singular_values);
  LeverageScores out;
  out.source_rows = a.rows();
  out.feature_dim = a.cols();
  out.scores.resize(a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const auto u = svd.u.row(i);
    double s = 0.0;
    for (std::size_t j = 0; j < rank; ++j) s += u[j] * u[j];
    out.scores[i] = std::min(s, 1.0);
  }
  return out;
}

std::vector<double> sampling_distribution(const LeverageScores& s) {
  double total = 0.0;
  for (double x : s.scores) {
    if (!(x >= 0.0) || !std::isfinite(x))
      throw NumericError("sampling_distribution: invalid score");
    total += x;
  }
  if (total <= 0.0) throw DegenerateInputError("sampling_distribution: all scores are zero");
  std::vector<double> p(s.scores.size());
  for (std::size_t i = 0; i < p.size(); ++i) p[i] = s.scores[i] / total;
  return p;
}

SampleSelection sample_without_replacement(const std::vector<double>& p, std::size_t count,
                                           std::uint64_t seed) {
  if (count == 0) throw ArgumentError("sample_without_replacement: count must be >= 1");
  for (double x : p)
    if (!(x >= 0.0) || !std::isfinite(x))
      throw ArgumentError("sample_without_replacement: probabilities must be finite and >= 0");

  Rng rng(seed);
  const std::size_t n = p.size();
  const std::size_t take = std::min(count, n);

  // log(u)/p orders identically to u^(1/p) and does not underflow.
  struct Keyed {
    double key;
    std::size_t index;
  };
  std::vector<Keyed> keyed;
  std::vector<std::size_t> zero_mass;
  keyed.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (p[i] > 0.0)
      keyed.push_back({std::log(rng.next_open01()) / p[i], i});
    else
      zero_mass.push_back(i);
  }
  std::stable_sort(keyed.begin(), keyed.end(), [](const Keyed& x, const Keyed& y) {
    if (x.key != y.key) return x.key > y.key;
    return x.index < y.index;
  });

  SampleSelection out;
  out.seed = seed;
  out.probabilities = p;
  out.indices.reserve(take);
  for (std::size_t k = 0; k < keyed.size() && out.indices.size() < take; ++k)
    out.indices.push_back(keyed[k].index);

  // Partial Fisher-Yates over the zero-probability rows.
  for (std::size_t k = 0; out.indices.size() < take; ++k) {
    const std::size_t j = k + rng.next_below(zero_mass.size() - k);
    std::swap(zero_mass[k], zero_mass[j]);
    out.indices.push_back(zero_mass[k]);
  }
  return out;
}

LeverageScores approx_leverage_scores(const Matrix& a, std::size_t oversample,
                                      std::uint64_t seed) {
  if (a.rows() == 0) throw ArgumentError("approx_leverage_scores: matrix has no rows");
  if (oversample < a.cols())
    throw ArgumentError("approx_leverage_scores: oversample " + std::to_string(oversample) +
                        " < cols " + std::to_string(a.cols()));
  ensure_finite(a, "approx_leverage_scores");

  const std::size_t n = a.rows();
  const std::size_t d = a.cols();
  Rng rng(seed);
  const double mag = 1.0 / std::sqrt(static_cast<double>(oversample));

  // S·A accumulated row by row of A; S is never materialised.
  Matrix sa(oversample, d);
  for (std::size_t i = 0; i < n; ++i) {
    const auto arow = a.row(i);
    for (std::size_t r = 0; r < oversample; ++r) {
      const double sign = (rng.next_u64() >> 63) ? mag : -mag;
      auto out = sa.row(r);
      for (std::size_t j = 0; j < d; ++j) out[j] += sign * arow[j];
    }
  }

  // S·A = U Σ Vᵀ, so A·V·Σ⁻¹ has approximately orthonormal columns.
  const ThinSVD svd = thin_svd(sa);
  std::size_t rank = numerical_rank(svd.singular_values);
  LeverageScores out;
  out.source_rows = n;
  out.feature_dim = d;
  out.scores.assign(n, 0.0);
  if (rank == 0) return out;

  Matrix precond(d, rank);
  for (std::size_t j = 0; j < rank; ++j)
    for (std::size_t k = 0; k < d; ++k)
      precond(k, j) = svd.vt(j, k) / svd.singular_values[j];
  const Matrix y = matmul(a, precond);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = y.row(i);
    out.scores[i] = std::inner_product(row.begin(), row.end(), row.begin(), 0.0);
    total += out.scores[i];
  }
  if (total > 0.0) {
    const double factor = static_cast<double>(rank) / total;
    for (auto& s : out.scores) s = std::min(s * factor, 1.0);
  }
  return out;
}

}  // namespace olss
