#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "prov/graph.hpp"
#include "prov/matrix.hpp"
#include "prov/rng.hpp"

namespace prov {

// Three-layer graph-convolution autoencoder trained full-batch on one
// graph to reconstruct per-node edge-type count features. Layers 1-2 are
// conv -> batch norm -> ReLU -> dropout; layer 3 is a linear conv. No
// biases: the batch-norm shift carries the affine offset. Gradients are
// computed by hand over this fixed topology so that every step is
// finite-difference verifiable and bitwise reproducible.

struct GcnConfig {
  std::array<std::size_t, 4> layer_dims{9, 256, 128, 23};
  double dropout_rate = 0.5;
  double bn_eps = 1e-5;
  double bn_momentum = 0.1;
  double learning_rate = 0.5;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  std::size_t epochs = 100;
  std::uint64_t seed = 1;

  void validate() const;
  friend bool operator==(const GcnConfig&, const GcnConfig&) = default;
};

struct BatchNorm {
  Matrix gamma, beta;                 // 1 x C, trainable
  Matrix running_mean, running_var;   // 1 x C, updated during training

  friend bool operator==(const BatchNorm&, const BatchNorm&) = default;
};

struct GcnModel {
  GcnConfig config;
  Matrix w1, w2, w3;
  BatchNorm bn1, bn2;

  // Trainable tensors in the fixed flattening order.
  std::vector<Matrix*> trainable();
  std::vector<const Matrix*> trainable() const;
  std::size_t trainable_size() const;

  friend bool operator==(const GcnModel&, const GcnModel&) = default;
};

// Fixed parameter ordering shared by flatten(), checkpoints and the
// federation wire format.
inline constexpr std::array<const char*, 7> kParamNames{
    "w1", "bn1.gamma", "bn1.beta", "w2", "bn2.gamma", "bn2.beta", "w3"};

enum class RunMode { train, eval };

struct BnCache {
  Matrix xhat;                  // normalized pre-affine activations
  std::vector<double> mean, var, inv_std;  // per-channel batch statistics
};

struct ForwardCache {
  RunMode mode = RunMode::eval;
  const NormAdj* adj = nullptr;
  Matrix p0;              // adj * x
  Matrix z1, b1, d1, p1;  // conv1 out, post-bn, post-relu-dropout, adj*d1
  Matrix z2, b2, d2, p2;
  Matrix keep1, keep2;    // dropout keep masks (0/1), empty when rate == 0
  BnCache bn1, bn2;
};

struct Gradients {
  std::vector<Matrix> tensors;  // aligned with GcnModel::trainable()
};

struct AdamState {
  std::vector<Matrix> m, v;
  std::int64_t t = 0;

  static AdamState like(const GcnModel& model);
};

// Glorot-uniform weights, gamma = 1, beta = 0, running stats (0, 1);
// deterministic per config.seed.
GcnModel init_model(const GcnConfig& config);

// Train mode samples dropout from `dropout_rng` (required when
// dropout_rate > 0) and normalizes with batch statistics; eval mode uses
// running statistics and identity dropout.
std::pair<Matrix, ForwardCache> forward(const GcnModel& model, const NormAdj& adj,
                                        const Matrix& x, RunMode mode,
                                        Rng* dropout_rng = nullptr);

// Mean over masked nodes of the squared L2 residual norm.
double mse_loss(const Matrix& pred, const Matrix& target,
                const std::vector<std::uint8_t>& mask);

Gradients backward(const GcnModel& model, const ForwardCache& cache,
                   const Matrix& target, const std::vector<std::uint8_t>& mask);

void adam_step(GcnModel& model, const Gradients& grads, AdamState& state,
               double learning_rate);

// running = (1 - momentum) * running + momentum * batch statistic.
void update_running_stats(GcnModel& model, const ForwardCache& cache);

struct TrainResult {
  std::vector<double> loss_history;  // one entry per epoch
};

TrainResult train(GcnModel& model, const NormAdj& adj, const Matrix& x,
                  const Matrix& target, const SplitMasks& masks,
                  const GcnConfig& config);

struct FlatParams {
  std::vector<std::string> names;
  std::vector<std::array<std::size_t, 2>> shapes;
  std::vector<double> values;  // row-major concatenation in `names` order

  friend bool operator==(const FlatParams&, const FlatParams&) = default;
};

FlatParams flatten(const GcnModel& model);
// Writes values back into the model's trainable tensors. Raises
// Errc::length_mismatch if the layout does not match.
void unflatten(const FlatParams& params, GcnModel& model);

std::string checkpoint_to_json(const GcnModel& model);
GcnModel checkpoint_from_json(const std::string& text);
void save_checkpoint(const GcnModel& model, const std::string& path);
GcnModel load_checkpoint(const std::string& path);

}  // namespace prov
