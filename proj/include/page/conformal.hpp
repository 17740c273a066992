#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "page/dataset.hpp"
#include "page/mlp.hpp"
#include "page/replay.hpp"
#include "page/sdg.hpp"

namespace page::conformal {

struct DsConfig {
  double p_lower = 70.0;
  double p_upper = 90.0;

  void validate() const;
};

struct CertaintyThresholds {
  double min_confidence = 0.90;
  double min_credibility = 0.70;

  void validate() const;
};

enum class Provenance { kRealValid, kSynthValid, kSelectedTrain };

std::string provenance_name(Provenance p);
Provenance provenance_from_name(const std::string& name);

// Non-conformity scores of the (extended) calibration set, each computed
// against the instance's own hardened label.
struct CalibrationSet {
  std::vector<double> scores;
  std::vector<int> labels;
  std::vector<Provenance> provenance;

  std::size_t size() const { return scores.size(); }

  // Ascending copy of the scores, for p-value rank counting.
  std::vector<double> sorted_scores() const;
};

struct ConformalOutput {
  int predicted_label = 0;  // argmax p-value, ties to the lowest index
  Eigen::VectorXd p_values;
  double confidence = 0.0;   // 1 - second largest p-value
  double credibility = 0.0;  // largest p-value
  bool certain = false;
};

// Linear-interpolation percentile of a sample, p in [0, 100].
double percentile(std::vector<double> values, double p);

struct SelectedData {
  Eigen::MatrixXd features;
  Eigen::VectorXi labels;
  std::vector<int> source_indices;  // rows of the concatenated training pool
  std::vector<std::string> warnings;

  Eigen::Index size() const { return features.rows(); }
};

// Data selection for the extended calibration set: per class, keeps the
// instances whose average training loss falls between that class's p_lower-th
// and p_upper-th percentiles (inclusive). Classes with fewer than two
// instances contribute nothing.
SelectedData select_data(const replay::LossLedger& ledger, const Eigen::MatrixXd& features,
                         const Eigen::VectorXi& labels, const DsConfig& cfg);

// alpha = max_{i != j}(o_i) / (o_j * gamma), with o_j floored at 1e-12.
double nonconformity(const Eigen::VectorXd& probs, int label, double gamma);

// Scores real validation data (true labels), synthetic validation data
// (pseudo labels hardened by argmax), and the selected training subset.
// Passing an empty selection yields the plain ICP calibration set.
CalibrationSet build_calibration(const mlp::MlpModel& model, const LabeledTable& real_valid,
                                 const sdg::SyntheticSet& synth_valid,
                                 const SelectedData& selected, double gamma);

ConformalOutput predict(const mlp::MlpModel& model, const Eigen::VectorXd& features,
                        const CalibrationSet& calib, double gamma,
                        const CertaintyThresholds& thresholds);

std::vector<ConformalOutput> predict_batch(const mlp::MlpModel& model,
                                           const Eigen::MatrixXd& features,
                                           const CalibrationSet& calib, double gamma,
                                           const CertaintyThresholds& thresholds);

// p-values for one probability row against pre-sorted calibration scores.
Eigen::VectorXd p_values_for_probs(const Eigen::VectorXd& probs,
                                   const std::vector<double>& sorted_scores, double gamma);

ConformalOutput output_from_p_values(Eigen::VectorXd p_values,
                                     const CertaintyThresholds& thresholds);

// Audit export: one row per calibration instance (alpha, label, provenance).
void export_calibration_csv(const CalibrationSet& calib, const std::string& path);
CalibrationSet import_calibration_csv(const std::string& path);

}  // namespace page::conformal
