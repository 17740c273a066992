#pragma once

#include <Eigen/Dense>
#include <span>
#include <string>
#include <vector>

#include "page/conformal.hpp"

namespace page::metrics {

// a(task, after) = test accuracy on `task` once `after + 1` tasks have been
// learned; defined only for after >= task (both 0-based).
class AccuracyMatrix {
 public:
  explicit AccuracyMatrix(int tasks);

  void set(int task, int after, double accuracy);
  double at(int task, int after) const;
  bool defined(int task, int after) const;
  int tasks() const { return static_cast<int>(cells_.size()); }

 private:
  std::vector<std::vector<double>> cells_;  // cells_[task][after - task]
};

// BWT = mean over earlier tasks of (final accuracy - accuracy when learned).
// Requires at least two learned tasks.
double bwt(const AccuracyMatrix& matrix);

double accuracy(const Eigen::VectorXi& predictions, const Eigen::VectorXi& labels);

// Collapses to healthy-vs-unhealthy: positives are instances (or predictions)
// of any class other than healthy_class. Degenerate case with no positives
// anywhere is defined as 1.
double f1_binary(const Eigen::VectorXi& predictions, const Eigen::VectorXi& labels,
                 int healthy_class);

struct CpConfusion {
  long certain_correct = 0;
  long certain_incorrect = 0;
  long uncertain_correct = 0;
  long uncertain_incorrect = 0;

  long total() const {
    return certain_correct + certain_incorrect + uncertain_correct + uncertain_incorrect;
  }
  double correctness() const;
  double error_rate() const;
};

CpConfusion cp_confusion(const std::vector<conformal::ConformalOutput>& outputs,
                         const Eigen::VectorXi& labels);

// Unweighted mean across domains.
double domain_average(std::span<const double> values);

// Aligned text rendering of ICP-vs-EICP confusion tables for one domain.
std::string render_cp_table(const std::string& title, const CpConfusion& icp,
                            const CpConfusion& eicp);

}  // namespace page::metrics
