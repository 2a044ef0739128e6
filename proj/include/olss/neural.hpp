#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "olss/matrix.hpp"

namespace olss {

/// Fully-connected ReLU network. weights[l] is layer_sizes[l] x
/// layer_sizes[l+1] so a layer computes x·W + b on row-major batches.
/// The flat parameter order is layer by layer: W (row-major), then b.
struct MLPParams {
  std::vector<std::size_t> layer_sizes;
  std::vector<Matrix> weights;
  std::vector<std::vector<double>> biases;

  std::size_t layers() const { return weights.size(); }
  std::size_t parameter_count() const;
  std::vector<double> flatten() const;
  void assign_flat(std::span<const double> flat);

  bool operator==(const MLPParams&) const = default;
};

/// Gradients share the parameter layout.
using Gradients = MLPParams;

/// Glorot-uniform weights, zero biases.
MLPParams init_mlp(const std::vector<std::size_t>& layer_sizes, std::uint64_t seed);
Gradients zeros_like(const MLPParams& params);

/// Which output classes take part in the softmax.
class ClassMask {
 public:
  explicit ClassMask(std::vector<bool> allowed);
  static ClassMask all(std::size_t classes);

  bool allows(std::size_t c) const { return allowed_[c]; }
  std::size_t size() const { return allowed_.size(); }
  std::size_t count() const;
  const std::vector<bool>& allowed() const { return allowed_; }

  bool operator==(const ClassMask&) const = default;

 private:
  std::vector<bool> allowed_;
};

struct EWCAnchor {
  std::vector<double> theta_star;
  std::vector<double> fisher;
};

/// One (θ*, F) pair per consolidated task, all weighted by the same λ.
struct EWCAnchors {
  double lambda = 30.0;
  std::vector<EWCAnchor> anchors;
};

struct SGDConfig {
  double lr = 0.1;
  int epochs = 5;
  std::size_t batch_size = 50;
  std::uint64_t seed = 0;
};

Matrix forward(const MLPParams& params, const Matrix& x);

/// Mean cross-entropy of the softmax restricted to allowed classes.
/// Target mass on a disallowed class is a DataError.
double masked_ce_loss(const Matrix& logits, const Matrix& targets, const ClassMask& mask);

/// Exact gradient of masked_ce_loss(forward(params, x), targets, mask).
Gradients backward(const MLPParams& params, const Matrix& x, const Matrix& targets,
                   const ClassMask& mask);

/// Shuffled minibatch SGD. When `anchors` is given, the EWC penalty gradient
/// is added at every step. Throws TrainingError on a non-finite loss.
MLPParams sgd_epochs(MLPParams params, const Matrix& data, const Matrix& labels,
                     const ClassMask& mask, const SGDConfig& cfg,
                     const EWCAnchors* anchors = nullptr);

/// Empirical diagonal Fisher: mean of squared per-sample gradients, flat.
std::vector<double> fisher_diag(const MLPParams& params, const Matrix& data,
                                const Matrix& labels, const ClassMask& mask);

/// grads + Σ_j 2λ F_j ⊙ (θ − θ*_j).
Gradients ewc_step_gradient(const MLPParams& params, const Gradients& grads,
                            const EWCAnchors& anchors);

/// Σ_j Σ_p λ F_j,p (θ_p − θ*_j,p)².
double ewc_penalty(const MLPParams& params, const EWCAnchors& anchors);

/// Fraction of rows whose argmax over allowed logits (lowest index on ties)
/// matches the target class.
double evaluate(const MLPParams& params, const Matrix& data, const Matrix& labels,
                const ClassMask& mask);

/// Checkpoint: `params.txt` manifest plus W<l>.mat / b<l>.mat per layer.
void save_params(const std::filesystem::path& dir, const MLPParams& params, std::uint64_t seed);
MLPParams load_params(const std::filesystem::path& dir, std::uint64_t* seed = nullptr);

}  // namespace olss
