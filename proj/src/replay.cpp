#include "page/replay.hpp"

#include <algorithm>
#include <limits>

#include "page/common.hpp"
#include "page/rng.hpp"

namespace page::replay {

namespace {

// Hands out pool indices in shuffled order, reshuffling when the pool wraps.
// The cursor carries across epoch boundaries so that participation counts
// within a pool never differ by more than one.
class PoolStream {
 public:
  PoolStream(Eigen::Index size, std::uint64_t seed) : rng_(seed), perm_(size) {
    for (Eigen::Index i = 0; i < size; ++i) perm_[i] = static_cast<int>(i);
    rng_.shuffle(perm_);
  }

  void next(int k, std::vector<int>& out) {
    out.clear();
    for (int i = 0; i < k; ++i) {
      if (cursor_ == perm_.size()) {
        rng_.shuffle(perm_);
        cursor_ = 0;
      }
      out.push_back(perm_[cursor_++]);
    }
  }

 private:
  Rng rng_;
  std::vector<int> perm_;
  std::size_t cursor_ = 0;
};

enum : std::uint64_t { kStreamReal = 11, kStreamSynth = 12 };

}  // namespace

Eigen::VectorXd LossLedger::averages() const {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(sums.size());
  for (Eigen::Index i = 0; i < sums.size(); ++i) {
    if (counts[i] > 0) out[i] = sums[i] / counts[i];
  }
  return out;
}

double validation_metric(const mlp::MlpModel& model, const Eigen::MatrixXd& features,
                         const Eigen::MatrixXd& soft_labels) {
  if (features.rows() == 0) throw DataError("validation metric on empty data");
  const Eigen::VectorXi pred = harden(mlp::forward(model, features));
  const Eigen::VectorXi truth = harden(soft_labels);
  return static_cast<double>((pred.array() == truth.array()).count()) /
         static_cast<double>(features.rows());
}

std::tuple<mlp::MlpModel, LossLedger, TrainReport> update(
    const mlp::MlpModel& initial, const LabeledTable& real_train, const LabeledTable& real_valid,
    const sdg::SyntheticSet& synth_train, const sdg::SyntheticSet& synth_valid,
    const ReplayConfig& cfg) {
  cfg.sgd.validate();
  real_train.validate();
  real_valid.validate();
  if (real_train.rows() == 0) throw DataError("empty real training set");
  const int classes = initial.output_dim();
  const Eigen::Index n_real = real_train.rows();
  const Eigen::Index n_synth = synth_train.size();

  const Eigen::MatrixXd real_targets = one_hot(real_train.labels, classes);

  Eigen::MatrixXd valid_x = real_valid.features;
  Eigen::MatrixXd valid_t = one_hot(real_valid.labels, classes);
  if (!synth_valid.empty()) {
    Eigen::MatrixXd x(valid_x.rows() + synth_valid.size(), initial.input_dim());
    x << valid_x, synth_valid.features;
    Eigen::MatrixXd t(valid_t.rows() + synth_valid.size(), classes);
    t << valid_t, synth_valid.pseudo_labels;
    valid_x = std::move(x);
    valid_t = std::move(t);
  }
  if (valid_x.rows() == 0) throw DataError("empty validation set");

  TrainReport report;
  int half = cfg.sgd.batch_size / 2;
  int real_per_batch;
  int synth_per_batch;
  if (n_synth == 0) {
    report.warnings.push_back(
        "empty synthetic pool: plain fine-tuning on real data without replay");
    real_per_batch = static_cast<int>(std::min<Eigen::Index>(cfg.sgd.batch_size, n_real));
    synth_per_batch = 0;
  } else {
    const Eigen::Index smallest = std::min(n_real, n_synth);
    if (half > smallest) {
      half = static_cast<int>(smallest);
      report.warnings.push_back("batch size shrunk to " + std::to_string(2 * half) +
                                " (half-batch exceeded a training pool)");
    }
    real_per_batch = half;
    synth_per_batch = half;
  }
  report.effective_batch_size = real_per_batch + synth_per_batch;
  report.batches_per_epoch =
      n_synth == 0
          ? static_cast<int>(n_real / real_per_batch)
          : static_cast<int>(std::min(n_real, n_synth) / half);

  LossLedger ledger;
  ledger.sums = Eigen::VectorXd::Zero(n_real + n_synth);
  ledger.counts = Eigen::VectorXi::Zero(n_real + n_synth);

  PoolStream real_stream(n_real, mix_seed(cfg.sgd.seed, kStreamReal));
  PoolStream synth_stream(std::max<Eigen::Index>(n_synth, 1), mix_seed(cfg.sgd.seed, kStreamSynth));

  mlp::MlpModel model = initial;
  mlp::SgdState velocity = mlp::SgdState::zeros(model);
  mlp::MlpModel best_model = model;
  double best_metric = -std::numeric_limits<double>::infinity();

  std::vector<int> real_idx, synth_idx;
  const int batch_rows = real_per_batch + synth_per_batch;
  Eigen::MatrixXd batch_x(batch_rows, initial.input_dim());
  Eigen::MatrixXd batch_t(batch_rows, classes);
  for (int epoch = 0; epoch < cfg.sgd.epochs; ++epoch) {
    for (int b = 0; b < report.batches_per_epoch; ++b) {
      real_stream.next(real_per_batch, real_idx);
      if (synth_per_batch > 0) {
        synth_stream.next(synth_per_batch, synth_idx);
      } else {
        synth_idx.clear();
      }
      for (int i = 0; i < real_per_batch; ++i) {
        batch_x.row(i) = real_train.features.row(real_idx[i]);
        batch_t.row(i) = real_targets.row(real_idx[i]);
      }
      for (int i = 0; i < synth_per_batch; ++i) {
        batch_x.row(real_per_batch + i) = synth_train.features.row(synth_idx[i]);
        batch_t.row(real_per_batch + i) = synth_train.pseudo_labels.row(synth_idx[i]);
      }

      Eigen::VectorXd losses;
      try {
        losses = mlp::sgd_step(model, batch_x, batch_t, cfg.sgd, velocity);
      } catch (const NumericError& e) {
        throw NumericError("epoch " + std::to_string(epoch) + " batch " + std::to_string(b) +
                           ": " + e.what());
      }
      for (int i = 0; i < real_per_batch; ++i) {
        ledger.sums[real_idx[i]] += losses[i];
        ledger.counts[real_idx[i]] += 1;
      }
      for (int i = 0; i < synth_per_batch; ++i) {
        ledger.sums[n_real + synth_idx[i]] += losses[real_per_batch + i];
        ledger.counts[n_real + synth_idx[i]] += 1;
      }
      report.batch_composition.emplace_back(real_per_batch, synth_per_batch);
    }

    double metric;
    if (cfg.selection == SelectionMetric::kAccuracy) {
      metric = validation_metric(model, valid_x, valid_t);
    } else {
      metric = -mlp::per_instance_loss(model, valid_x, valid_t).mean();
    }
    report.validation_trace.push_back(metric);
    if (metric > best_metric) {
      best_metric = metric;
      best_model = model;
      report.best_epoch = epoch;
    }
  }
  report.best_metric = best_metric;
  return {std::move(best_model), std::move(ledger), std::move(report)};
}

}  // namespace page::replay
