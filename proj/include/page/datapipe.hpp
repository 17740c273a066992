#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "page/dataset.hpp"

namespace page::datapipe {

// One sensor's samples for one subject: rows are timesteps.
struct SensorStream {
  std::string name;
  Eigen::MatrixXd samples;
};

struct SubjectStream {
  std::string subject_id;
  int label = 0;
  double rate_hz = 1.0;
  std::vector<SensorStream> sensors;  // all sensors share the subject's timeline
};

// Non-overlapping windows, flattened per sensor and concatenated across
// sensors; one table row per window. Subjects shorter than one window are
// skipped with a warning. Trailing partial windows are dropped.
LabeledTable window(const std::vector<SubjectStream>& subjects, double window_s = 15.0,
                    double shift_s = 15.0, std::vector<std::string>* warnings = nullptr);

// Column-wise min-max bounds learned on training data. Constant columns map
// to zero; transforms of other splits keep out-of-range values unclipped.
struct MinMaxScaler {
  Eigen::VectorXd min;
  Eigen::VectorXd max;

  static MinMaxScaler fit(const Eigen::MatrixXd& train);
  Eigen::MatrixXd apply(const Eigen::MatrixXd& data) const;
};

struct PcaProjection {
  Eigen::VectorXd mean;
  Eigen::VectorXd std_dev;     // z-scoring statistics, sigma floored at 1e-12
  Eigen::MatrixXd components;  // d x k, orthonormal columns
  Eigen::VectorXd eigenvalues; // descending

  int output_dim() const { return static_cast<int>(components.cols()); }
};

PcaProjection pca_fit(const Eigen::MatrixXd& train, int k);
Eigen::MatrixXd pca_apply(const Eigen::MatrixXd& data, const PcaProjection& proj);
// Inverse map back to the original feature space (exact when k = d).
Eigen::MatrixXd pca_reconstruct(const Eigen::MatrixXd& reduced, const PcaProjection& proj);

// SMOTE: upsample every class to the majority count by interpolating between
// a random class member and one of its k nearest same-class neighbors.
// Synthetic rows are appended after the originals. Errors if an imbalanced
// class has fewer than two instances.
LabeledTable smote_balance(const LabeledTable& train, int k_neighbors, std::uint64_t seed);

struct SplitConfig {
  double domain_fraction = 0.8;  // share of each class's subjects in domain 1
  double train_fraction = 0.7;
  double valid_fraction = 0.1;   // test takes the remainder
  std::uint64_t seed = 0;
  bool apply_smote = true;       // balance the training partitions
  int smote_k = 5;

  void validate() const;
};

struct Partition {
  LabeledTable train;
  LabeledTable valid;
  LabeledTable test;
};

struct DomainSplit {
  std::vector<Partition> domains;
  std::vector<std::string> warnings;
};

// Stratifies subjects by class across two domains, then partitions each
// subject's rows temporally (earliest 70% train, next 10% validation, rest
// test by default).
DomainSplit split_domains(const LabeledTable& table, const SplitConfig& cfg);

// Temporal per-subject partition of a single domain's table (used when
// domains arrive as separate files).
Partition split_temporal(const LabeledTable& table, const SplitConfig& cfg);

}  // namespace page::datapipe
