#include "page/conformal.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "page/common.hpp"
#include "page/io_audit.hpp"

namespace page::conformal {

namespace {
constexpr double kProbFloor = 1e-12;
}

void DsConfig::validate() const {
  if (p_lower < 0.0 || p_lower >= 100.0) throw ConfigError("p_lower must be in [0, 100)");
  if (p_upper <= 0.0 || p_upper > 100.0) throw ConfigError("p_upper must be in (0, 100]");
  if (p_lower >= p_upper) throw ConfigError("p_lower must be below p_upper");
}

void CertaintyThresholds::validate() const {
  if (min_confidence < 0.0 || min_confidence > 1.0 || min_credibility < 0.0 ||
      min_credibility > 1.0) {
    throw ConfigError("certainty thresholds must be in [0, 1]");
  }
}

std::string provenance_name(Provenance p) {
  switch (p) {
    case Provenance::kRealValid: return "real-valid";
    case Provenance::kSynthValid: return "synth-valid";
    case Provenance::kSelectedTrain: return "selected-train";
  }
  throw ConfigError("unknown provenance");
}

Provenance provenance_from_name(const std::string& name) {
  if (name == "real-valid") return Provenance::kRealValid;
  if (name == "synth-valid") return Provenance::kSynthValid;
  if (name == "selected-train") return Provenance::kSelectedTrain;
  throw DataError("unknown provenance tag '" + name + "'");
}

std::vector<double> CalibrationSet::sorted_scores() const {
  std::vector<double> sorted = scores;
  std::sort(sorted.begin(), sorted.end());
  return sorted;
}

double percentile(std::vector<double> values, double p) {
  if (values.empty()) throw DataError("percentile of an empty sample");
  if (p < 0.0 || p > 100.0) throw ConfigError("percentile must be in [0, 100]");
  std::sort(values.begin(), values.end());
  const double rank = p / 100.0 * static_cast<double>(values.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(std::floor(rank));
  if (lo + 1 >= values.size()) return values.back();
  const double frac = rank - static_cast<double>(lo);
  return values[lo] + frac * (values[lo + 1] - values[lo]);
}

SelectedData select_data(const replay::LossLedger& ledger, const Eigen::MatrixXd& features,
                         const Eigen::VectorXi& labels, const DsConfig& cfg) {
  cfg.validate();
  if (ledger.size() != features.rows() || labels.size() != features.rows()) {
    throw DataError("loss ledger is not aligned with the training pool");
  }
  const Eigen::VectorXd losses = ledger.averages();

  std::map<int, std::vector<int>> by_class;
  for (Eigen::Index i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(static_cast<int>(i));

  SelectedData out;
  std::vector<int> picked;
  for (const auto& [label, indices] : by_class) {
    if (indices.size() < 2) {
      out.warnings.push_back("class " + std::to_string(label) +
                             " has fewer than 2 instances; skipped in data selection");
      continue;
    }
    std::vector<double> class_losses;
    class_losses.reserve(indices.size());
    for (const int i : indices) class_losses.push_back(losses[i]);
    const double t_lower = percentile(class_losses, cfg.p_lower);
    const double t_upper = percentile(class_losses, cfg.p_upper);
    for (const int i : indices) {
      if (losses[i] >= t_lower && losses[i] <= t_upper) picked.push_back(i);
    }
  }

  out.features.resize(static_cast<Eigen::Index>(picked.size()), features.cols());
  out.labels.resize(static_cast<Eigen::Index>(picked.size()));
  for (std::size_t k = 0; k < picked.size(); ++k) {
    out.features.row(static_cast<Eigen::Index>(k)) = features.row(picked[k]);
    out.labels[static_cast<Eigen::Index>(k)] = labels[picked[k]];
  }
  out.source_indices = std::move(picked);
  return out;
}

double nonconformity(const Eigen::VectorXd& probs, int label, double gamma) {
  if (gamma <= 0.0) throw ConfigError("gamma must be positive");
  if (probs.size() < 2) throw ConfigError("non-conformity needs at least two classes");
  if (label < 0 || label >= probs.size()) throw DataError("label out of range");
  double max_other = 0.0;
  for (Eigen::Index i = 0; i < probs.size(); ++i) {
    if (i != label) max_other = std::max(max_other, probs[i]);
  }
  return max_other / (std::max(probs[label], kProbFloor) * gamma);
}

namespace {

void append_scored(CalibrationSet& calib, const mlp::MlpModel& model,
                   const Eigen::MatrixXd& features, const Eigen::VectorXi& labels,
                   Provenance provenance, double gamma) {
  if (features.rows() == 0) return;
  const Eigen::MatrixXd probs = mlp::forward(model, features);
  for (Eigen::Index i = 0; i < features.rows(); ++i) {
    calib.scores.push_back(nonconformity(probs.row(i).transpose(), labels[i], gamma));
    calib.labels.push_back(labels[i]);
    calib.provenance.push_back(provenance);
  }
}

}  // namespace

CalibrationSet build_calibration(const mlp::MlpModel& model, const LabeledTable& real_valid,
                                 const sdg::SyntheticSet& synth_valid,
                                 const SelectedData& selected, double gamma) {
  CalibrationSet calib;
  append_scored(calib, model, real_valid.features, real_valid.labels, Provenance::kRealValid,
                gamma);
  if (!synth_valid.empty()) {
    append_scored(calib, model, synth_valid.features, harden(synth_valid.pseudo_labels),
                  Provenance::kSynthValid, gamma);
  }
  if (selected.size() > 0) {
    append_scored(calib, model, selected.features, selected.labels, Provenance::kSelectedTrain,
                  gamma);
  }
  if (calib.size() == 0) throw DataError("calibration set is empty");
  return calib;
}

Eigen::VectorXd p_values_for_probs(const Eigen::VectorXd& probs,
                                   const std::vector<double>& sorted_scores, double gamma) {
  const auto q = static_cast<double>(sorted_scores.size());
  Eigen::VectorXd p(probs.size());
  for (int j = 0; j < probs.size(); ++j) {
    const double alpha = nonconformity(probs, j, gamma);
    // #{alpha_i >= alpha} among calibration scores, plus the instance itself.
    const auto at_least = sorted_scores.end() -
                          std::lower_bound(sorted_scores.begin(), sorted_scores.end(), alpha);
    p[j] = (static_cast<double>(at_least) + 1.0) / (q + 1.0);
  }
  return p;
}

ConformalOutput output_from_p_values(Eigen::VectorXd p_values,
                                     const CertaintyThresholds& thresholds) {
  ConformalOutput out;
  out.predicted_label = argmax_row(p_values.transpose());
  std::vector<double> sorted(p_values.data(), p_values.data() + p_values.size());
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  out.credibility = sorted[0];
  out.confidence = 1.0 - sorted[1];
  out.p_values = std::move(p_values);
  out.certain =
      out.confidence >= thresholds.min_confidence && out.credibility >= thresholds.min_credibility;
  return out;
}

ConformalOutput predict(const mlp::MlpModel& model, const Eigen::VectorXd& features,
                        const CalibrationSet& calib, double gamma,
                        const CertaintyThresholds& thresholds) {
  if (calib.size() == 0) throw DataError("calibration set is empty");
  thresholds.validate();
  const Eigen::MatrixXd probs = mlp::forward(model, features.transpose());
  return output_from_p_values(
      p_values_for_probs(probs.row(0).transpose(), calib.sorted_scores(), gamma), thresholds);
}

std::vector<ConformalOutput> predict_batch(const mlp::MlpModel& model,
                                           const Eigen::MatrixXd& features,
                                           const CalibrationSet& calib, double gamma,
                                           const CertaintyThresholds& thresholds) {
  if (calib.size() == 0) throw DataError("calibration set is empty");
  thresholds.validate();
  const std::vector<double> sorted = calib.sorted_scores();
  const Eigen::MatrixXd probs = mlp::forward(model, features);
  std::vector<ConformalOutput> out;
  out.reserve(static_cast<std::size_t>(features.rows()));
  for (Eigen::Index i = 0; i < features.rows(); ++i) {
    out.push_back(output_from_p_values(
        p_values_for_probs(probs.row(i).transpose(), sorted, gamma), thresholds));
  }
  return out;
}

void export_calibration_csv(const CalibrationSet& calib, const std::string& path) {
  std::ofstream out = io::open_output(path);
  out << "alpha,label,provenance\n";
  for (std::size_t i = 0; i < calib.size(); ++i) {
    out << format_double(calib.scores[i]) << ',' << calib.labels[i] << ','
        << provenance_name(calib.provenance[i]) << '\n';
  }
  if (!out) throw DataError("failed writing " + path);
}

CalibrationSet import_calibration_csv(const std::string& path) {
  std::ifstream in = io::open_input(path);
  std::string line;
  if (!std::getline(in, line)) throw DataError(path + ": empty calibration file");
  CalibrationSet calib;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto c1 = line.find(',');
    const auto c2 = line.find(',', c1 + 1);
    if (c1 == std::string::npos || c2 == std::string::npos) {
      throw DataError(path + ": malformed row at line " + std::to_string(line_no));
    }
    try {
      calib.scores.push_back(std::stod(line.substr(0, c1)));
      calib.labels.push_back(std::stoi(line.substr(c1 + 1, c2 - c1 - 1)));
    } catch (const std::exception&) {
      throw DataError(path + ": malformed number at line " + std::to_string(line_no));
    }
    calib.provenance.push_back(provenance_from_name(line.substr(c2 + 1)));
  }
  if (calib.size() == 0) throw DataError(path + ": calibration file has no rows");
  return calib;
}

}  // namespace page::conformal
