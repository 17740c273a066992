#pragma once

#include <Eigen/Dense>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "page/dataset.hpp"
#include "page/mlp.hpp"
#include "page/sdg.hpp"

namespace page::replay {

// Per-training-instance loss bookkeeping across epochs. Indices cover the
// real training rows first, then the synthetic ones, in stable order.
struct LossLedger {
  Eigen::VectorXd sums;
  Eigen::VectorXi counts;  // epochs each instance actually participated in

  Eigen::Index size() const { return sums.size(); }

  // sums / counts; instances that never participated average to 0.
  Eigen::VectorXd averages() const;
};

enum class SelectionMetric { kAccuracy, kLoss };

struct ReplayConfig {
  mlp::SgdConfig sgd;
  SelectionMetric selection = SelectionMetric::kAccuracy;
};

struct TrainReport {
  int best_epoch = -1;  // 0-based; ties resolve to the earliest epoch
  double best_metric = 0.0;
  std::vector<double> validation_trace;
  int batches_per_epoch = 0;
  int effective_batch_size = 0;
  std::vector<std::pair<int, int>> batch_composition;  // (real, synthetic) per batch
  std::vector<std::string> warnings;
};

// Hardened-label accuracy of the model on soft-labeled validation data.
double validation_metric(const mlp::MlpModel& model, const Eigen::MatrixXd& features,
                         const Eigen::MatrixXd& soft_labels);

// Trains on mini-batches of B/2 real + B/2 synthetic instances, validates on
// the concatenated real+synthetic validation sets after every epoch, and
// returns the parameters of the best epoch together with the loss ledger.
// An empty synthetic pool degrades to plain fine-tuning on the real data
// (warned loudly; this is the naive baseline path).
std::tuple<mlp::MlpModel, LossLedger, TrainReport> update(
    const mlp::MlpModel& initial, const LabeledTable& real_train, const LabeledTable& real_valid,
    const sdg::SyntheticSet& synth_train, const sdg::SyntheticSet& synth_valid,
    const ReplayConfig& cfg);

}  // namespace page::replay
