#include "olss/neural.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <string>

#include "olss/error.hpp"
#include "olss/matrix_io.hpp"
#include "olss/rng.hpp"

namespace olss {

namespace {

void check_input(const MLPParams& params, const Matrix& x) {
  if (params.layer_sizes.empty() || x.cols() != params.layer_sizes.front())
    throw ShapeError("forward: input has " + std::to_string(x.cols()) + " columns, network expects " +
                     std::to_string(params.layer_sizes.empty() ? 0 : params.layer_sizes.front()));
}

void check_targets(const MLPParams& params, const Matrix& x, const Matrix& targets,
                   const ClassMask& mask) {
  check_input(params, x);
  if (targets.rows() != x.rows() || targets.cols() != params.layer_sizes.back())
    throw ShapeError("targets must be " + std::to_string(x.rows()) + "x" +
                     std::to_string(params.layer_sizes.back()));
  if (mask.size() != targets.cols()) throw ShapeError("class mask size does not match outputs");
}

// x·W + b
Matrix affine(const Matrix& x, const Matrix& w, const std::vector<double>& b) {
  Matrix z = matmul(x, w);
  for (std::size_t i = 0; i < z.rows(); ++i) {
    auto row = z.row(i);
    for (std::size_t j = 0; j < row.size(); ++j) row[j] += b[j];
  }
  return z;
}

// Pre-activations of every layer for one batch.
std::vector<Matrix> forward_trace(const MLPParams& params, const Matrix& x) {
  std::vector<Matrix> z;
  z.reserve(params.layers());
  const Matrix* in = &x;
  Matrix act;
  for (std::size_t l = 0; l < params.layers(); ++l) {
    z.push_back(affine(*in, params.weights[l], params.biases[l]));
    if (l + 1 < params.layers()) {
      act = z.back();
      for (auto& v : act.data()) v = v > 0.0 ? v : 0.0;
      in = &act;
    }
  }
  return z;
}

Matrix relu(const Matrix& z) {
  Matrix a = z;
  for (auto& v : a.data()) v = v > 0.0 ? v : 0.0;
  return a;
}

// Masked log-softmax of one row; disallowed entries are left untouched.
void log_softmax_row(std::span<const double> logits, const ClassMask& mask,
                     std::span<double> out) {
  double mx = -std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < logits.size(); ++c)
    if (mask.allows(c)) mx = std::max(mx, logits[c]);
  double sum = 0.0;
  for (std::size_t c = 0; c < logits.size(); ++c)
    if (mask.allows(c)) sum += std::exp(logits[c] - mx);
  const double lse = mx + std::log(sum);
  for (std::size_t c = 0; c < logits.size(); ++c)
    out[c] = mask.allows(c) ? logits[c] - lse : 0.0;
}

// Loss and gradient in one pass. Returns the mean loss.
double loss_and_gradients(const MLPParams& params, const Matrix& x, const Matrix& targets,
                          const ClassMask& mask, Gradients& grads) {
  const std::vector<Matrix> z = forward_trace(params, x);
  const Matrix& logits = z.back();
  const std::size_t batch = x.rows();
  const std::size_t m = logits.cols();
  const double inv_b = 1.0 / static_cast<double>(batch);

  Matrix dz(batch, m);
  std::vector<double> logp(m);
  double loss = 0.0;
  for (std::size_t i = 0; i < batch; ++i) {
    const auto t = targets.row(i);
    for (std::size_t c = 0; c < m; ++c)
      if (!mask.allows(c) && t[c] != 0.0)
        throw DataError("target row " + std::to_string(i) + " puts mass on masked class " +
                        std::to_string(c));
    log_softmax_row(logits.row(i), mask, logp);
    auto g = dz.row(i);
    for (std::size_t c = 0; c < m; ++c) {
      if (!mask.allows(c)) continue;
      loss -= t[c] * logp[c];
      g[c] = (std::exp(logp[c]) - t[c]) * inv_b;
    }
  }
  loss *= inv_b;

  for (std::size_t l = params.layers(); l-- > 0;) {
    const Matrix input = l == 0 ? x : relu(z[l - 1]);
    grads.weights[l] = matmul_tn(input, dz);
    auto& db = grads.biases[l];
    std::fill(db.begin(), db.end(), 0.0);
    for (std::size_t i = 0; i < dz.rows(); ++i) {
      const auto row = dz.row(i);
      for (std::size_t j = 0; j < row.size(); ++j) db[j] += row[j];
    }
    if (l == 0) break;
    Matrix da = matmul_nt(dz, params.weights[l]);
    const Matrix& zp = z[l - 1];
    for (std::size_t k = 0; k < da.size(); ++k)
      if (!(zp.data()[k] > 0.0)) da.data()[k] = 0.0;
    dz = std::move(da);
  }
  return loss;
}

std::size_t target_class(std::span<const double> t) {
  return static_cast<std::size_t>(std::max_element(t.begin(), t.end()) - t.begin());
}

void check_anchor_shapes(const MLPParams& params, const EWCAnchors& anchors) {
  const std::size_t n = params.parameter_count();
  for (const auto& a : anchors.anchors)
    if (a.theta_star.size() != n || a.fisher.size() != n)
      throw ShapeError("EWC anchor length does not match parameter count " + std::to_string(n));
}

}  // namespace

std::size_t MLPParams::parameter_count() const {
  std::size_t n = 0;
  for (std::size_t l = 0; l < weights.size(); ++l) n += weights[l].size() + biases[l].size();
  return n;
}

std::vector<double> MLPParams::flatten() const {
  std::vector<double> flat;
  flat.reserve(parameter_count());
  for (std::size_t l = 0; l < weights.size(); ++l) {
    flat.insert(flat.end(), weights[l].data().begin(), weights[l].data().end());
    flat.insert(flat.end(), biases[l].begin(), biases[l].end());
  }
  return flat;
}

void MLPParams::assign_flat(std::span<const double> flat) {
  if (flat.size() != parameter_count())
    throw ShapeError("assign_flat: expected " + std::to_string(parameter_count()) + " values");
  std::size_t pos = 0;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    auto w = weights[l].data();
    std::copy_n(flat.begin() + pos, w.size(), w.begin());
    pos += w.size();
    std::copy_n(flat.begin() + pos, biases[l].size(), biases[l].begin());
    pos += biases[l].size();
  }
}

MLPParams init_mlp(const std::vector<std::size_t>& layer_sizes, std::uint64_t seed) {
  if (layer_sizes.size() < 2) throw ArgumentError("init_mlp: need input and output sizes");
  for (auto s : layer_sizes)
    if (s == 0) throw ArgumentError("init_mlp: layer sizes must be >= 1");
  MLPParams p;
  p.layer_sizes = layer_sizes;
  Rng rng(seed);
  for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
    const std::size_t fan_in = layer_sizes[l];
    const std::size_t fan_out = layer_sizes[l + 1];
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    Matrix w(fan_in, fan_out);
    for (auto& v : w.data()) v = (2.0 * rng.next_open01() - 1.0) * limit;
    p.weights.push_back(std::move(w));
    p.biases.emplace_back(fan_out, 0.0);
  }
  return p;
}

Gradients zeros_like(const MLPParams& params) {
  Gradients g;
  g.layer_sizes = params.layer_sizes;
  for (std::size_t l = 0; l < params.layers(); ++l) {
    g.weights.emplace_back(params.weights[l].rows(), params.weights[l].cols());
    g.biases.emplace_back(params.biases[l].size(), 0.0);
  }
  return g;
}

ClassMask::ClassMask(std::vector<bool> allowed) : allowed_(std::move(allowed)) {
  if (count() == 0) throw ArgumentError("ClassMask: at least one class must be allowed");
}

ClassMask ClassMask::all(std::size_t classes) { return ClassMask(std::vector<bool>(classes, true)); }

std::size_t ClassMask::count() const {
  return static_cast<std::size_t>(std::count(allowed_.begin(), allowed_.end(), true));
}

Matrix forward(const MLPParams& params, const Matrix& x) {
  check_input(params, x);
  Matrix a = x;
  for (std::size_t l = 0; l < params.layers(); ++l) {
    a = affine(a, params.weights[l], params.biases[l]);
    if (l + 1 < params.layers()) a = relu(a);
  }
  return a;
}

double masked_ce_loss(const Matrix& logits, const Matrix& targets, const ClassMask& mask) {
  if (logits.rows() != targets.rows() || logits.cols() != targets.cols() ||
      mask.size() != logits.cols())
    throw ShapeError("masked_ce_loss: logits, targets and mask disagree in shape");
  if (logits.rows() == 0) throw ArgumentError("masked_ce_loss: empty batch");
  std::vector<double> logp(logits.cols());
  double loss = 0.0;
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    const auto t = targets.row(i);
    for (std::size_t c = 0; c < t.size(); ++c)
      if (!mask.allows(c) && t[c] != 0.0)
        throw DataError("target row " + std::to_string(i) + " puts mass on masked class " +
                        std::to_string(c));
    log_softmax_row(logits.row(i), mask, logp);
    for (std::size_t c = 0; c < t.size(); ++c)
      if (mask.allows(c)) loss -= t[c] * logp[c];
  }
  return loss / static_cast<double>(logits.rows());
}

Gradients backward(const MLPParams& params, const Matrix& x, const Matrix& targets,
                   const ClassMask& mask) {
  check_targets(params, x, targets, mask);
  if (x.rows() == 0) throw ArgumentError("backward: empty batch");
  Gradients g = zeros_like(params);
  loss_and_gradients(params, x, targets, mask, g);
  return g;
}

MLPParams sgd_epochs(MLPParams params, const Matrix& data, const Matrix& labels,
                     const ClassMask& mask, const SGDConfig& cfg, const EWCAnchors* anchors) {
  if (!(cfg.lr > 0.0)) throw ArgumentError("sgd_epochs: learning rate must be > 0");
  if (cfg.epochs < 0) throw ArgumentError("sgd_epochs: epochs must be >= 0");
  if (cfg.batch_size == 0) throw ArgumentError("sgd_epochs: batch size must be >= 1");
  check_targets(params, data, labels, mask);
  if (anchors) check_anchor_shapes(params, *anchors);
  if (data.rows() == 0) return params;

  Rng rng(cfg.seed);
  std::vector<std::size_t> order(data.rows());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Gradients g = zeros_like(params);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[rng.next_below(i)]);

    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      const std::span<const std::size_t> idx(order.data() + start, end - start);
      double loss = 0.0;
      try {
        loss = loss_and_gradients(params, select_rows(data, idx), select_rows(labels, idx), mask, g);
      } catch (const NumericError& e) {
        throw TrainingError("training diverged in epoch " + std::to_string(epoch + 1) + ": " +
                                e.what(),
                            epoch + 1);
      }
      if (!std::isfinite(loss))
        throw TrainingError("training diverged in epoch " + std::to_string(epoch + 1) +
                                ": non-finite loss",
                            epoch + 1);
      if (anchors && !anchors->anchors.empty()) g = ewc_step_gradient(params, g, *anchors);

      for (std::size_t l = 0; l < params.layers(); ++l) {
        auto w = params.weights[l].data();
        const auto gw = g.weights[l].data();
        for (std::size_t k = 0; k < w.size(); ++k) w[k] -= cfg.lr * gw[k];
        auto& b = params.biases[l];
        const auto& gb = g.biases[l];
        for (std::size_t k = 0; k < b.size(); ++k) b[k] -= cfg.lr * gb[k];
      }
    }
    for (const auto& w : params.weights)
      for (double v : w.data())
        if (!std::isfinite(v))
          throw TrainingError("training diverged in epoch " + std::to_string(epoch + 1) +
                                  ": non-finite parameters",
                              epoch + 1);
  }
  return params;
}

std::vector<double> fisher_diag(const MLPParams& params, const Matrix& data,
                                const Matrix& labels, const ClassMask& mask) {
  check_targets(params, data, labels, mask);
  if (data.rows() == 0) throw ArgumentError("fisher_diag: empty data");
  std::vector<double> fisher(params.parameter_count(), 0.0);
  Gradients g = zeros_like(params);
  for (std::size_t i = 0; i < data.rows(); ++i) {
    const std::size_t idx[] = {i};
    loss_and_gradients(params, select_rows(data, idx), select_rows(labels, idx), mask, g);
    std::size_t pos = 0;
    for (std::size_t l = 0; l < g.layers(); ++l) {
      for (double v : g.weights[l].data()) fisher[pos++] += v * v;
      for (double v : g.biases[l]) fisher[pos++] += v * v;
    }
  }
  const double inv_n = 1.0 / static_cast<double>(data.rows());
  for (auto& f : fisher) f *= inv_n;
  return fisher;
}

Gradients ewc_step_gradient(const MLPParams& params, const Gradients& grads,
                            const EWCAnchors& anchors) {
  if (grads.parameter_count() != params.parameter_count())
    throw ShapeError("ewc_step_gradient: gradient layout does not match parameters");
  check_anchor_shapes(params, anchors);
  if (anchors.anchors.empty()) return grads;

  const std::vector<double> theta = params.flatten();
  std::vector<double> flat = grads.flatten();
  const double two_lambda = 2.0 * anchors.lambda;
  for (const auto& a : anchors.anchors)
    for (std::size_t p = 0; p < flat.size(); ++p)
      flat[p] += two_lambda * a.fisher[p] * (theta[p] - a.theta_star[p]);
  Gradients out = grads;
  out.assign_flat(flat);
  return out;
}

double ewc_penalty(const MLPParams& params, const EWCAnchors& anchors) {
  check_anchor_shapes(params, anchors);
  const std::vector<double> theta = params.flatten();
  double penalty = 0.0;
  for (const auto& a : anchors.anchors)
    for (std::size_t p = 0; p < theta.size(); ++p) {
      const double diff = theta[p] - a.theta_star[p];
      penalty += anchors.lambda * a.fisher[p] * diff * diff;
    }
  return penalty;
}

double evaluate(const MLPParams& params, const Matrix& data, const Matrix& labels,
                const ClassMask& mask) {
  check_targets(params, data, labels, mask);
  if (data.rows() == 0) throw ArgumentError("evaluate: empty data");
  const Matrix logits = forward(params, data);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    const auto row = logits.row(i);
    std::size_t best = row.size();
    for (std::size_t c = 0; c < row.size(); ++c)
      if (mask.allows(c) && (best == row.size() || row[c] > row[best])) best = c;
    if (best == target_class(labels.row(i))) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(logits.rows());
}

void save_params(const std::filesystem::path& dir, const MLPParams& params, std::uint64_t seed) {
  std::filesystem::create_directories(dir);
  for (std::size_t l = 0; l < params.layers(); ++l) {
    save_matrix(dir / ("W" + std::to_string(l) + ".mat"), params.weights[l]);
    save_matrix(dir / ("b" + std::to_string(l) + ".mat"),
                Matrix(1, params.biases[l].size(), params.biases[l]));
  }
  std::ostringstream m;
  m << "layers";
  for (auto s : params.layer_sizes) m << ' ' << s;
  m << "\nseed " << seed << '\n';
  write_file_atomic(dir / "params.txt", m.str());
}

MLPParams load_params(const std::filesystem::path& dir, std::uint64_t* seed) {
  std::istringstream in(read_file(dir / "params.txt"));
  std::string line;
  MLPParams p;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    if (key == "layers") {
      std::size_t s;
      while (ls >> s) p.layer_sizes.push_back(s);
    } else if (key == "seed") {
      std::uint64_t v = 0;
      if (!(ls >> v)) throw FormatError("params.txt: bad seed");
      if (seed) *seed = v;
    } else if (!key.empty()) {
      throw FormatError("params.txt: unknown key " + key);
    }
  }
  if (p.layer_sizes.size() < 2) throw FormatError("params.txt: missing layer sizes");
  for (std::size_t l = 0; l + 1 < p.layer_sizes.size(); ++l) {
    Matrix w = load_matrix(dir / ("W" + std::to_string(l) + ".mat"));
    Matrix b = load_matrix(dir / ("b" + std::to_string(l) + ".mat"));
    if (w.rows() != p.layer_sizes[l] || w.cols() != p.layer_sizes[l + 1] || b.rows() != 1 ||
        b.cols() != p.layer_sizes[l + 1])
      throw FormatError("checkpoint layer " + std::to_string(l) + " has the wrong shape");
    p.weights.push_back(std::move(w));
    p.biases.emplace_back(b.data().begin(), b.data().end());
  }
  return p;
}

}  // namespace olss
