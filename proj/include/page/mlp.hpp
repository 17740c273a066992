#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace page::mlp {

inline constexpr double kLossEpsilon = 1e-12;

struct SgdConfig {
  double learning_rate = 0.005;
  double momentum = 0.9;
  int batch_size = 128;  // must be even: replay batches are half real, half synthetic
  int epochs = 300;
  std::uint64_t seed = 0;

  void validate() const;
};

// Dense MLP with ReLU hidden layers and a softmax output head.
// weights[l] has shape layer_dims[l+1] x layer_dims[l].
struct MlpModel {
  std::vector<int> layer_dims;
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> biases;
  std::uint64_t seed = 0;

  int input_dim() const { return layer_dims.front(); }
  int output_dim() const { return layer_dims.back(); }
  int layers() const { return static_cast<int>(weights.size()); }

  // He-style fan-in scaled uniform weights, zero biases.
  static MlpModel init(std::vector<int> dims, std::uint64_t seed);
};

// Softmax probabilities, one row per input row. Throws DataError on a
// feature-dimension mismatch.
Eigen::MatrixXd forward(const MlpModel& model, const Eigen::MatrixXd& features);

// Soft-target cross-entropy -sum_k t_k ln(p_k + eps) per row. Hard labels
// enter one-hot encoded through the same path.
Eigen::VectorXd per_instance_loss(const MlpModel& model, const Eigen::MatrixXd& features,
                                  const Eigen::MatrixXd& targets);

struct Gradients {
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> biases;
};

// Gradient of the mean batch cross-entropy; also returns the per-instance
// losses evaluated at the current parameters.
Gradients backprop(const MlpModel& model, const Eigen::MatrixXd& features,
                   const Eigen::MatrixXd& targets, Eigen::VectorXd* losses = nullptr);

struct SgdState {
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> biases;

  static SgdState zeros(const MlpModel& model);
};

// v <- momentum * v + g;  p <- p - lr * v
void momentum_update(std::span<double> params, std::span<const double> grads,
                     std::span<double> velocity, double learning_rate, double momentum);

// One momentum-SGD step on the mean batch cross-entropy. Returns the losses
// measured at the pre-update parameters. Throws NumericError if any gradient
// is non-finite.
Eigen::VectorXd sgd_step(MlpModel& model, const Eigen::MatrixXd& features,
                         const Eigen::MatrixXd& targets, const SgdConfig& cfg, SgdState& state);

// Versioned little-endian binary checkpoint; round-trips bit-exactly.
void save_checkpoint(const MlpModel& model, std::ostream& out);
MlpModel load_checkpoint(std::istream& in);
void save_checkpoint_file(const MlpModel& model, const std::string& path);
MlpModel load_checkpoint_file(const std::string& path);

}  // namespace page::mlp
