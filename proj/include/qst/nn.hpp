#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "qst/errors.hpp"

namespace qst {

// Layer widths, input through output, e.g. {66, 300, 300, 66}.
struct LayerSpec {
  std::vector<int> sizes;

  void validate() const;
  int input_dim() const { return sizes.front(); }
  int output_dim() const { return sizes.back(); }
  int n_layers() const { return static_cast<int>(sizes.size()) - 1; }
};

struct ModelParams {
  std::vector<Eigen::MatrixXd> weights; // out x in
  std::vector<Eigen::VectorXd> biases;  // out

  LayerSpec layer_spec() const;
};

struct AdamState {
  long step = 0;
  double lr = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::vector<Eigen::MatrixXd> m_w, v_w;
  std::vector<Eigen::VectorXd> m_b, v_b;

  static AdamState init(const ModelParams& params, double lr = 0.001);
};

struct TrainConfig {
  LayerSpec layer_spec;
  int epochs = 100;
  int batch_size = 512;
  double lr = 0.001;
  std::uint64_t seed = 0;
  bool shuffle_each_epoch = true;
  double validation_fraction = 0.2;
};

struct EpochStats {
  double train_loss;
  double val_loss;
};

// Pre-activations per layer for one forward pass (rows = batch samples).
struct ForwardCache {
  std::vector<Eigen::MatrixXd> pre; // n_layers entries
};

// He-style init: weights uniform with variance 2/fan_in, biases zero.
ModelParams init_params(const LayerSpec& spec, std::uint64_t seed);

// ReLU on hidden layers, affine output layer.
Eigen::MatrixXd forward(const ModelParams& params, const Eigen::MatrixXd& x,
                        ForwardCache* cache = nullptr);
Eigen::VectorXd forward(const ModelParams& params, const Eigen::VectorXd& x);

// loss = -cos(theta) between prediction and target; the returned gradient
// is d loss / d y_pred. Scale-invariant in each argument.
std::pair<double, Eigen::VectorXd> loss_cosine(const Eigen::VectorXd& y_pred,
                                               const Eigen::VectorXd& y_true);

// Mean of per-sample cosine losses over the batch rows; gradient rows are
// already divided by the batch size.
std::pair<double, Eigen::MatrixXd> loss_cosine_batch(const Eigen::MatrixXd& y_pred,
                                                     const Eigen::MatrixXd& y_true);

struct Gradients {
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> biases;
};

// Backprop through the cached forward pass; ReLU subgradient at 0 is 0.
Gradients backward(const ModelParams& params, const ForwardCache& cache,
                   const Eigen::MatrixXd& x, const Eigen::MatrixXd& grad_output);

void adam_step(ModelParams& params, const Gradients& grads, AdamState& state);

struct TrainResult {
  ModelParams params;
  std::vector<EpochStats> history;
};

// Inputs/targets as rows. Splits off validation_fraction from the tail of a
// seeded shuffle, then runs seeded minibatch Adam. Deterministic for a
// fixed (inputs, targets, config).
TrainResult train(const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& targets,
                  const TrainConfig& config);

// Binary checkpoint: magic, length-prefixed JSON header, float64 LE payload.
void save_checkpoint(const ModelParams& params, const std::string& path,
                     const std::string& meta_json = "{}");
std::pair<ModelParams, std::string> load_checkpoint(const std::string& path);

} // namespace qst
