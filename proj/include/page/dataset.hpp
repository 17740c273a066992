#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <string>
#include <vector>

namespace page {

// The universal dataset currency: a feature matrix with one hard class label
// per row, plus optional per-row subject ids and timestamps.
struct LabeledTable {
  Eigen::MatrixXd features;              // n x d
  Eigen::VectorXi labels;                // n
  std::vector<std::string> subject_ids;  // empty or size n
  std::vector<double> timestamps;        // empty or size n

  Eigen::Index rows() const { return features.rows(); }
  Eigen::Index dim() const { return features.cols(); }
  bool has_subjects() const { return !subject_ids.empty(); }
  bool has_timestamps() const { return !timestamps.empty(); }

  // Throws DataError on size mismatches, non-finite features, or negative labels.
  void validate() const;

  LabeledTable select(const std::vector<int>& row_indices) const;
};

LabeledTable concat(const LabeledTable& a, const LabeledTable& b);

// Number of classes implied by the labels (max label + 1).
int class_count(const Eigen::VectorXi& labels);

// Argmax with ties resolved to the lowest index.
int argmax_row(const Eigen::RowVectorXd& row);
Eigen::VectorXi harden(const Eigen::MatrixXd& soft_labels);

Eigen::MatrixXd one_hot(const Eigen::VectorXi& labels, int classes);

// CSV: header row, feature columns in order, then `label` and optional
// `subject_id` / `timestamp` columns. '.' decimal separator, no quoting.
LabeledTable read_csv(const std::string& path);
void write_csv(const LabeledTable& table, const std::string& path);
LabeledTable parse_csv(std::istream& in, const std::string& context);
void format_csv(const LabeledTable& table, std::ostream& out);

// Shortest round-trip formatting used everywhere we serialize doubles,
// so that identical values always print identically.
std::string format_double(double v);

}  // namespace page
