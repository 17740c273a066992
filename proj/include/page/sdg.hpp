#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "page/gmm.hpp"
#include "page/mlp.hpp"

namespace page::sdg {

struct SdgConfig {
  int c_max = 10;
  double synth_fraction = 0.9;  // synthetic count as a fraction of |train_gmm|
  std::uint64_t seed = 0;
  gmm::EmConfig em;

  void validate() const;
};

struct SyntheticSet {
  Eigen::MatrixXd features;
  Eigen::MatrixXd pseudo_labels;  // model softmax outputs, one row per feature row
  int chosen_components = 0;
  std::vector<double> bic_trace;  // validation BIC for C = 1..len
  std::vector<std::string> warnings;

  Eigen::Index size() const { return features.rows(); }
  bool empty() const { return features.rows() == 0; }
};

// Fits mixtures for C = 1..c_max on train_gmm, picks the C minimizing BIC on
// valid_gmm (ties to the smallest C), refits with a fresh seed-derived init,
// samples ceil(synth_fraction * |train_gmm|) rows, and pseudo-labels them
// with the current model.
SyntheticSet generate(const mlp::MlpModel& model, const Eigen::MatrixXd& train_gmm,
                      const Eigen::MatrixXd& valid_gmm, const SdgConfig& cfg);

// Runs generate twice: once with (train, valid) for the training set, once
// with the roles swapped for the validation set.
std::pair<SyntheticSet, SyntheticSet> generate_pair(const mlp::MlpModel& model,
                                                    const Eigen::MatrixXd& x_train,
                                                    const Eigen::MatrixXd& x_valid,
                                                    const SdgConfig& cfg);

}  // namespace page::sdg
