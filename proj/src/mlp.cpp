#include "page/mlp.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <istream>
#include <ostream>

#include "page/common.hpp"
#include "page/io_audit.hpp"
#include "page/rng.hpp"

namespace page::mlp {

namespace {

constexpr char kMagic[8] = {'P', 'A', 'G', 'E', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;

static_assert(std::endian::native == std::endian::little,
              "checkpoint writer assumes a little-endian host");

Eigen::MatrixXd softmax_rows(Eigen::MatrixXd logits) {
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const double m = logits.row(i).maxCoeff();
    logits.row(i) = (logits.row(i).array() - m).exp();
    logits.row(i) /= logits.row(i).sum();
  }
  return logits;
}

void check_shapes(const MlpModel& model, const Eigen::MatrixXd& features) {
  if (features.cols() != model.input_dim()) {
    throw DataError("feature dimension " + std::to_string(features.cols()) +
                    " does not match model input " + std::to_string(model.input_dim()));
  }
}

void check_targets(const MlpModel& model, const Eigen::MatrixXd& features,
                   const Eigen::MatrixXd& targets) {
  if (targets.rows() != features.rows() || targets.cols() != model.output_dim()) {
    throw DataError("target shape does not match model output");
  }
}

}  // namespace

void SgdConfig::validate() const {
  if (learning_rate <= 0.0) throw ConfigError("learning_rate must be positive");
  if (momentum < 0.0 || momentum >= 1.0) throw ConfigError("momentum must be in [0, 1)");
  if (batch_size <= 0 || batch_size % 2 != 0) {
    throw ConfigError("batch_size must be a positive even integer");
  }
  if (epochs <= 0) throw ConfigError("epochs must be positive");
}

MlpModel MlpModel::init(std::vector<int> dims, std::uint64_t seed) {
  if (dims.size() < 2) throw ConfigError("model needs at least input and output layers");
  for (const int d : dims) {
    if (d <= 0) throw ConfigError("layer dimensions must be positive");
  }
  MlpModel model;
  model.layer_dims = std::move(dims);
  model.seed = seed;
  Rng rng(seed);
  for (std::size_t l = 0; l + 1 < model.layer_dims.size(); ++l) {
    const int fan_in = model.layer_dims[l];
    const int fan_out = model.layer_dims[l + 1];
    const double limit = std::sqrt(6.0 / fan_in);
    Eigen::MatrixXd w(fan_out, fan_in);
    for (Eigen::Index i = 0; i < w.rows(); ++i) {
      for (Eigen::Index j = 0; j < w.cols(); ++j) w(i, j) = rng.uniform(-limit, limit);
    }
    model.weights.push_back(std::move(w));
    model.biases.push_back(Eigen::VectorXd::Zero(fan_out));
  }
  return model;
}

Eigen::MatrixXd forward(const MlpModel& model, const Eigen::MatrixXd& features) {
  check_shapes(model, features);
  Eigen::MatrixXd a = features;
  for (int l = 0; l < model.layers(); ++l) {
    Eigen::MatrixXd z = a * model.weights[l].transpose();
    z.rowwise() += model.biases[l].transpose();
    if (l + 1 < model.layers()) {
      a = z.cwiseMax(0.0);
    } else {
      a = softmax_rows(std::move(z));
    }
  }
  return a;
}

Eigen::VectorXd per_instance_loss(const MlpModel& model, const Eigen::MatrixXd& features,
                                  const Eigen::MatrixXd& targets) {
  check_targets(model, features, targets);
  const Eigen::MatrixXd probs = forward(model, features);
  return -(targets.array() * (probs.array() + kLossEpsilon).log()).rowwise().sum();
}

Gradients backprop(const MlpModel& model, const Eigen::MatrixXd& features,
                   const Eigen::MatrixXd& targets, Eigen::VectorXd* losses) {
  check_shapes(model, features);
  check_targets(model, features, targets);
  const Eigen::Index n = features.rows();
  const int layers = model.layers();

  std::vector<Eigen::MatrixXd> activations;  // activations[l]: input to layer l
  activations.reserve(layers + 1);
  activations.push_back(features);
  for (int l = 0; l < layers; ++l) {
    Eigen::MatrixXd z = activations.back() * model.weights[l].transpose();
    z.rowwise() += model.biases[l].transpose();
    if (l + 1 < layers) {
      activations.push_back(z.cwiseMax(0.0));
    } else {
      activations.push_back(softmax_rows(std::move(z)));
    }
  }
  const Eigen::MatrixXd& probs = activations.back();
  if (losses) {
    *losses = -(targets.array() * (probs.array() + kLossEpsilon).log()).rowwise().sum();
  }

  Gradients grads;
  grads.weights.resize(layers);
  grads.biases.resize(layers);
  // softmax + cross-entropy on the mean batch loss
  Eigen::MatrixXd delta = (probs - targets) / static_cast<double>(n);
  for (int l = layers - 1; l >= 0; --l) {
    grads.weights[l] = delta.transpose() * activations[l];
    grads.biases[l] = delta.colwise().sum().transpose();
    if (l > 0) {
      delta = (delta * model.weights[l]).cwiseProduct(
          (activations[l].array() > 0.0).cast<double>().matrix());
    }
  }
  return grads;
}

SgdState SgdState::zeros(const MlpModel& model) {
  SgdState state;
  for (int l = 0; l < model.layers(); ++l) {
    state.weights.push_back(Eigen::MatrixXd::Zero(model.weights[l].rows(), model.weights[l].cols()));
    state.biases.push_back(Eigen::VectorXd::Zero(model.biases[l].size()));
  }
  return state;
}

void momentum_update(std::span<double> params, std::span<const double> grads,
                     std::span<double> velocity, double learning_rate, double momentum) {
  for (std::size_t i = 0; i < params.size(); ++i) {
    velocity[i] = momentum * velocity[i] + grads[i];
    params[i] -= learning_rate * velocity[i];
  }
}

Eigen::VectorXd sgd_step(MlpModel& model, const Eigen::MatrixXd& features,
                         const Eigen::MatrixXd& targets, const SgdConfig& cfg, SgdState& state) {
  if (features.rows() == 0) throw DataError("sgd_step on an empty batch");
  Eigen::VectorXd losses;
  Gradients grads = backprop(model, features, targets, &losses);
  for (int l = 0; l < model.layers(); ++l) {
    if (!grads.weights[l].allFinite() || !grads.biases[l].allFinite()) {
      throw NumericError("non-finite gradient in layer " + std::to_string(l));
    }
    momentum_update({model.weights[l].data(), static_cast<std::size_t>(model.weights[l].size())},
                    {grads.weights[l].data(), static_cast<std::size_t>(grads.weights[l].size())},
                    {state.weights[l].data(), static_cast<std::size_t>(state.weights[l].size())},
                    cfg.learning_rate, cfg.momentum);
    momentum_update({model.biases[l].data(), static_cast<std::size_t>(model.biases[l].size())},
                    {grads.biases[l].data(), static_cast<std::size_t>(grads.biases[l].size())},
                    {state.biases[l].data(), static_cast<std::size_t>(state.biases[l].size())},
                    cfg.learning_rate, cfg.momentum);
  }
  return losses;
}

namespace {

template <typename T>
void write_pod(std::ostream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in) {
  T value;
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) throw DataError("truncated checkpoint stream");
  return value;
}

}  // namespace

void save_checkpoint(const MlpModel& model, std::ostream& out) {
  out.write(kMagic, sizeof(kMagic));
  write_pod(out, kVersion);
  write_pod(out, model.seed);
  write_pod(out, static_cast<std::uint32_t>(model.layer_dims.size()));
  for (const int d : model.layer_dims) write_pod(out, static_cast<std::uint32_t>(d));
  for (int l = 0; l < model.layers(); ++l) {
    out.write(reinterpret_cast<const char*>(model.weights[l].data()),
              static_cast<std::streamsize>(sizeof(double) * model.weights[l].size()));
    out.write(reinterpret_cast<const char*>(model.biases[l].data()),
              static_cast<std::streamsize>(sizeof(double) * model.biases[l].size()));
  }
  if (!out) throw DataError("failed writing checkpoint stream");
}

MlpModel load_checkpoint(std::istream& in) {
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw DataError("corrupt checkpoint: bad magic");
  }
  const auto version = read_pod<std::uint32_t>(in);
  if (version != kVersion) {
    throw DataError("checkpoint version " + std::to_string(version) + " is not supported");
  }
  MlpModel model;
  model.seed = read_pod<std::uint64_t>(in);
  const auto n_dims = read_pod<std::uint32_t>(in);
  if (n_dims < 2 || n_dims > 64) throw DataError("corrupt checkpoint: implausible layer count");
  for (std::uint32_t i = 0; i < n_dims; ++i) {
    const auto d = read_pod<std::uint32_t>(in);
    if (d == 0) throw DataError("corrupt checkpoint: zero layer dimension");
    model.layer_dims.push_back(static_cast<int>(d));
  }
  for (std::size_t l = 0; l + 1 < model.layer_dims.size(); ++l) {
    Eigen::MatrixXd w(model.layer_dims[l + 1], model.layer_dims[l]);
    in.read(reinterpret_cast<char*>(w.data()),
            static_cast<std::streamsize>(sizeof(double) * w.size()));
    Eigen::VectorXd b(model.layer_dims[l + 1]);
    if (in) {
      in.read(reinterpret_cast<char*>(b.data()),
              static_cast<std::streamsize>(sizeof(double) * b.size()));
    }
    if (!in) throw DataError("truncated checkpoint stream");
    model.weights.push_back(std::move(w));
    model.biases.push_back(std::move(b));
  }
  return model;
}

void save_checkpoint_file(const MlpModel& model, const std::string& path) {
  std::ofstream out = io::open_output(path);
  save_checkpoint(model, out);
}

MlpModel load_checkpoint_file(const std::string& path) {
  std::ifstream in = io::open_input(path);
  return load_checkpoint(in);
}

}  // namespace page::mlp
