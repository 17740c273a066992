#include "page/metrics.hpp"

#include <cmath>
#include <iomanip>
#include <sstream>

#include "page/common.hpp"

namespace page::metrics {

AccuracyMatrix::AccuracyMatrix(int tasks) {
  if (tasks < 1) throw ConfigError("accuracy matrix needs at least one task");
  cells_.resize(tasks);
}

void AccuracyMatrix::set(int task, int after, double accuracy) {
  if (task < 0 || task >= tasks() || after < task || after >= tasks()) {
    throw ConfigError("accuracy matrix cell (" + std::to_string(task) + ", " +
                      std::to_string(after) + ") is out of range");
  }
  if (accuracy < 0.0 || accuracy > 1.0) throw ConfigError("accuracy must be in [0, 1]");
  auto& row = cells_[task];
  const std::size_t offset = static_cast<std::size_t>(after - task);
  if (row.size() <= offset) row.resize(offset + 1, -1.0);
  row[offset] = accuracy;
}

bool AccuracyMatrix::defined(int task, int after) const {
  if (task < 0 || task >= tasks() || after < task || after >= tasks()) return false;
  const auto& row = cells_[task];
  const std::size_t offset = static_cast<std::size_t>(after - task);
  return offset < row.size() && row[offset] >= 0.0;
}

double AccuracyMatrix::at(int task, int after) const {
  if (!defined(task, after)) {
    throw ConfigError("accuracy matrix cell (" + std::to_string(task) + ", " +
                      std::to_string(after) + ") is undefined");
  }
  return cells_[task][static_cast<std::size_t>(after - task)];
}

double bwt(const AccuracyMatrix& matrix) {
  const int q = matrix.tasks();
  if (q < 2) throw ConfigError("BWT is undefined before the second task");
  double sum = 0.0;
  for (int n = 0; n < q - 1; ++n) {
    sum += matrix.at(n, q - 1) - matrix.at(n, n);
  }
  return sum / static_cast<double>(q - 1);
}

double accuracy(const Eigen::VectorXi& predictions, const Eigen::VectorXi& labels) {
  if (predictions.size() != labels.size()) throw DataError("prediction/label length mismatch");
  if (predictions.size() == 0) throw DataError("accuracy of an empty set");
  return static_cast<double>((predictions.array() == labels.array()).count()) /
         static_cast<double>(predictions.size());
}

double f1_binary(const Eigen::VectorXi& predictions, const Eigen::VectorXi& labels,
                 int healthy_class) {
  if (predictions.size() != labels.size()) throw DataError("prediction/label length mismatch");
  long tp = 0, fp = 0, fn = 0;
  for (Eigen::Index i = 0; i < labels.size(); ++i) {
    const bool actual_positive = labels[i] != healthy_class;
    const bool predicted_positive = predictions[i] != healthy_class;
    if (actual_positive && predicted_positive) ++tp;
    if (!actual_positive && predicted_positive) ++fp;
    if (actual_positive && !predicted_positive) ++fn;
  }
  if (2 * tp + fp + fn == 0) return 1.0;  // no positives present or predicted
  return 2.0 * static_cast<double>(tp) / static_cast<double>(2 * tp + fp + fn);
}

double CpConfusion::correctness() const {
  if (total() == 0) throw DataError("CP confusion over an empty test set");
  return static_cast<double>(certain_correct) / static_cast<double>(total());
}

double CpConfusion::error_rate() const {
  if (total() == 0) throw DataError("CP confusion over an empty test set");
  return static_cast<double>(certain_incorrect) / static_cast<double>(total());
}

CpConfusion cp_confusion(const std::vector<conformal::ConformalOutput>& outputs,
                         const Eigen::VectorXi& labels) {
  if (static_cast<Eigen::Index>(outputs.size()) != labels.size()) {
    throw DataError("conformal outputs do not match label count");
  }
  CpConfusion counts;
  for (std::size_t i = 0; i < outputs.size(); ++i) {
    const bool correct = outputs[i].predicted_label == labels[static_cast<Eigen::Index>(i)];
    if (outputs[i].certain) {
      (correct ? counts.certain_correct : counts.certain_incorrect) += 1;
    } else {
      (correct ? counts.uncertain_correct : counts.uncertain_incorrect) += 1;
    }
  }
  return counts;
}

double domain_average(std::span<const double> values) {
  if (values.empty()) throw DataError("average of an empty set");
  double sum = 0.0;
  for (const double v : values) sum += v;
  return sum / static_cast<double>(values.size());
}

std::string render_cp_table(const std::string& title, const CpConfusion& icp,
                            const CpConfusion& eicp) {
  std::ostringstream out;
  out << title << '\n';
  out << "            |   ICP correct   incorrect |  EICP correct   incorrect\n";
  auto line = [&](const char* name, long a, long b, long c, long d) {
    out << std::left << std::setw(12) << name << '|' << std::right << std::setw(14) << a
        << std::setw(12) << b << " |" << std::setw(14) << c << std::setw(12) << d << '\n';
  };
  line("  certain", icp.certain_correct, icp.certain_incorrect, eicp.certain_correct,
       eicp.certain_incorrect);
  line("  uncertain", icp.uncertain_correct, icp.uncertain_incorrect, eicp.uncertain_correct,
       eicp.uncertain_incorrect);
  out << std::fixed << std::setprecision(3);
  out << "  correctness: ICP " << icp.correctness() << "  EICP " << eicp.correctness() << '\n';
  out << "  error rate:  ICP " << icp.error_rate() << "  EICP " << eicp.error_rate() << '\n';
  return out.str();
}

}  // namespace page::metrics
