#include "page/datapipe.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "page/common.hpp"
#include "page/rng.hpp"

namespace page::datapipe {

LabeledTable window(const std::vector<SubjectStream>& subjects, double window_s, double shift_s,
                    std::vector<std::string>* warnings) {
  if (window_s <= 0.0 || shift_s <= 0.0) throw ConfigError("window and shift must be positive");

  std::vector<Eigen::RowVectorXd> rows;
  std::vector<int> labels;
  std::vector<std::string> ids;
  std::vector<double> times;
  Eigen::Index width = -1;

  for (const auto& subject : subjects) {
    if (subject.sensors.empty()) throw DataError("subject " + subject.subject_id + " has no sensors");
    if (subject.rate_hz <= 0.0) throw DataError("subject " + subject.subject_id + " missing sampling rate");
    const auto per_window = static_cast<Eigen::Index>(std::llround(window_s * subject.rate_hz));
    const auto per_shift = static_cast<Eigen::Index>(std::llround(shift_s * subject.rate_hz));
    if (per_window <= 0 || per_shift <= 0) {
      throw ConfigError("window shorter than one sample at the given rate");
    }

    Eigen::Index steps = subject.sensors.front().samples.rows();
    Eigen::Index row_width = 0;
    for (const auto& sensor : subject.sensors) {
      if (sensor.samples.rows() != steps) {
        throw DataError("subject " + subject.subject_id + " has unsynchronized sensor lengths");
      }
      row_width += sensor.samples.cols() * per_window;
    }
    if (width < 0) width = row_width;
    if (width != row_width) throw DataError("subjects disagree on window width");

    if (steps < per_window) {
      if (warnings) {
        warnings->push_back("subject " + subject.subject_id + " shorter than one window; skipped");
      }
      continue;
    }
    const Eigen::Index n_windows = (steps - per_window) / per_shift + 1;
    for (Eigen::Index w = 0; w < n_windows; ++w) {
      Eigen::RowVectorXd row(row_width);
      Eigen::Index offset = 0;
      const Eigen::Index start = w * per_shift;
      for (const auto& sensor : subject.sensors) {
        for (Eigen::Index t = 0; t < per_window; ++t) {
          row.segment(offset, sensor.samples.cols()) = sensor.samples.row(start + t);
          offset += sensor.samples.cols();
        }
      }
      rows.push_back(std::move(row));
      labels.push_back(subject.label);
      ids.push_back(subject.subject_id);
      times.push_back(static_cast<double>(start) / subject.rate_hz);
    }
  }

  LabeledTable out;
  out.features.resize(static_cast<Eigen::Index>(rows.size()), std::max<Eigen::Index>(width, 0));
  for (std::size_t i = 0; i < rows.size(); ++i) out.features.row(static_cast<Eigen::Index>(i)) = rows[i];
  out.labels = Eigen::Map<Eigen::VectorXi>(labels.data(), static_cast<Eigen::Index>(labels.size()));
  out.subject_ids = std::move(ids);
  out.timestamps = std::move(times);
  out.validate();
  return out;
}

MinMaxScaler MinMaxScaler::fit(const Eigen::MatrixXd& train) {
  if (train.rows() == 0) throw DataError("min-max fit on empty data");
  MinMaxScaler scaler;
  scaler.min = train.colwise().minCoeff();
  scaler.max = train.colwise().maxCoeff();
  return scaler;
}

Eigen::MatrixXd MinMaxScaler::apply(const Eigen::MatrixXd& data) const {
  if (data.cols() != min.size()) throw DataError("min-max dimension mismatch");
  Eigen::MatrixXd out(data.rows(), data.cols());
  for (Eigen::Index j = 0; j < data.cols(); ++j) {
    const double range = max[j] - min[j];
    if (range <= 0.0) {
      out.col(j).setZero();  // constant training column
    } else {
      out.col(j) = (data.col(j).array() - min[j]) / range;
    }
  }
  return out;
}

PcaProjection pca_fit(const Eigen::MatrixXd& train, int k) {
  if (train.rows() < 2) throw DataError("PCA needs more than one training row");
  if (k < 1 || k > train.cols()) throw ConfigError("PCA output dimension out of range");

  PcaProjection proj;
  proj.mean = train.colwise().mean();
  Eigen::MatrixXd centered = train.rowwise() - proj.mean.transpose();
  proj.std_dev = (centered.array().square().colwise().sum() / static_cast<double>(train.rows()))
                     .sqrt()
                     .max(1e-12);
  Eigen::MatrixXd standardized = centered.array().rowwise() / proj.std_dev.transpose().array();

  const Eigen::MatrixXd cov = standardized.transpose() * standardized /
                              static_cast<double>(train.rows() - 1);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  if (solver.info() != Eigen::Success) throw NumericError("covariance eigendecomposition failed");

  // Eigen returns ascending eigenvalues; keep the top k in descending order.
  const Eigen::Index d = train.cols();
  proj.components.resize(d, k);
  proj.eigenvalues.resize(k);
  for (int j = 0; j < k; ++j) {
    proj.eigenvalues[j] = solver.eigenvalues()[d - 1 - j];
    proj.components.col(j) = solver.eigenvectors().col(d - 1 - j);
  }
  return proj;
}

Eigen::MatrixXd pca_apply(const Eigen::MatrixXd& data, const PcaProjection& proj) {
  if (data.cols() != proj.mean.size()) throw DataError("PCA dimension mismatch");
  const Eigen::MatrixXd standardized =
      (data.rowwise() - proj.mean.transpose()).array().rowwise() /
      proj.std_dev.transpose().array();
  return standardized * proj.components;
}

Eigen::MatrixXd pca_reconstruct(const Eigen::MatrixXd& reduced, const PcaProjection& proj) {
  if (reduced.cols() != proj.components.cols()) throw DataError("PCA dimension mismatch");
  Eigen::MatrixXd standardized = reduced * proj.components.transpose();
  return (standardized.array().rowwise() * proj.std_dev.transpose().array()).rowwise() +
         proj.mean.transpose().array();
}

LabeledTable smote_balance(const LabeledTable& train, int k_neighbors, std::uint64_t seed) {
  train.validate();
  if (k_neighbors < 1) throw ConfigError("k_neighbors must be >= 1");

  std::map<int, std::vector<int>> by_class;
  for (Eigen::Index i = 0; i < train.rows(); ++i) by_class[train.labels[i]].push_back(static_cast<int>(i));
  Eigen::Index majority = 0;
  for (const auto& [label, idx] : by_class) {
    majority = std::max<Eigen::Index>(majority, static_cast<Eigen::Index>(idx.size()));
  }

  Rng rng(seed);
  std::vector<Eigen::RowVectorXd> synth_rows;
  std::vector<int> synth_labels;
  std::vector<int> synth_source;  // row index of A, for subject/timestamp copies
  for (const auto& [label, idx] : by_class) {
    const auto deficit = majority - static_cast<Eigen::Index>(idx.size());
    if (deficit == 0) continue;
    if (idx.size() < 2) {
      throw DataError("class " + std::to_string(label) +
                      " has fewer than 2 instances; cannot oversample");
    }
    const int k_eff = std::min<int>(k_neighbors, static_cast<int>(idx.size()) - 1);

    // Neighbor lists are small (k out of the class), so brute force is fine.
    std::vector<std::vector<int>> neighbors(idx.size());
    for (std::size_t a = 0; a < idx.size(); ++a) {
      std::vector<std::pair<double, int>> dist;
      dist.reserve(idx.size() - 1);
      for (std::size_t b = 0; b < idx.size(); ++b) {
        if (a == b) continue;
        dist.emplace_back((train.features.row(idx[a]) - train.features.row(idx[b])).squaredNorm(),
                          idx[b]);
      }
      std::partial_sort(dist.begin(), dist.begin() + k_eff, dist.end());
      for (int j = 0; j < k_eff; ++j) neighbors[a].push_back(dist[j].second);
    }

    for (Eigen::Index s = 0; s < deficit; ++s) {
      const int a = rng.index(idx.size());
      const int b = neighbors[a][rng.index(neighbors[a].size())];
      const double lambda = rng.uniform01();
      synth_rows.push_back(train.features.row(idx[a]) +
                           lambda * (train.features.row(b) - train.features.row(idx[a])));
      synth_labels.push_back(label);
      synth_source.push_back(idx[a]);
    }
  }

  if (synth_rows.empty()) return train;

  LabeledTable out;
  const Eigen::Index n = train.rows() + static_cast<Eigen::Index>(synth_rows.size());
  out.features.resize(n, train.dim());
  out.features.topRows(train.rows()) = train.features;
  out.labels.resize(n);
  out.labels.head(train.rows()) = train.labels;
  for (std::size_t i = 0; i < synth_rows.size(); ++i) {
    out.features.row(train.rows() + static_cast<Eigen::Index>(i)) = synth_rows[i];
    out.labels[train.rows() + static_cast<Eigen::Index>(i)] = synth_labels[i];
  }
  if (train.has_subjects()) {
    out.subject_ids = train.subject_ids;
    for (const int src : synth_source) out.subject_ids.push_back(train.subject_ids[src]);
  }
  if (train.has_timestamps()) {
    out.timestamps = train.timestamps;
    for (const int src : synth_source) out.timestamps.push_back(train.timestamps[src]);
  }
  return out;
}

void SplitConfig::validate() const {
  if (domain_fraction <= 0.0 || domain_fraction >= 1.0) {
    throw ConfigError("domain_fraction must be in (0, 1)");
  }
  if (train_fraction <= 0.0 || valid_fraction <= 0.0 ||
      train_fraction + valid_fraction >= 1.0) {
    throw ConfigError("temporal fractions must be positive and sum below 1");
  }
  if (smote_k < 1) throw ConfigError("smote_k must be >= 1");
}

namespace {

struct SubjectRows {
  int label = 0;
  std::vector<int> rows;  // ordered by timestamp
};

std::map<std::string, SubjectRows> group_by_subject(const LabeledTable& table) {
  if (!table.has_subjects()) throw DataError("subject ids are required for splitting");
  std::map<std::string, SubjectRows> subjects;
  for (Eigen::Index i = 0; i < table.rows(); ++i) {
    auto& entry = subjects[table.subject_ids[i]];
    if (entry.rows.empty()) {
      entry.label = table.labels[i];
    } else if (entry.label != table.labels[i]) {
      throw DataError("subject " + table.subject_ids[i] + " has inconsistent labels");
    }
    entry.rows.push_back(static_cast<int>(i));
  }
  if (table.has_timestamps()) {
    for (auto& [id, entry] : subjects) {
      std::stable_sort(entry.rows.begin(), entry.rows.end(),
                       [&](int a, int b) { return table.timestamps[a] < table.timestamps[b]; });
    }
  }
  return subjects;
}

void partition_subject(const SubjectRows& subject, const SplitConfig& cfg,
                       std::vector<int>& train, std::vector<int>& valid, std::vector<int>& test) {
  const auto total = static_cast<Eigen::Index>(subject.rows.size());
  const auto n_train = static_cast<Eigen::Index>(std::floor(cfg.train_fraction * total));
  const auto n_valid = static_cast<Eigen::Index>(std::floor(cfg.valid_fraction * total));
  for (Eigen::Index i = 0; i < total; ++i) {
    if (i < n_train) {
      train.push_back(subject.rows[i]);
    } else if (i < n_train + n_valid) {
      valid.push_back(subject.rows[i]);
    } else {
      test.push_back(subject.rows[i]);
    }
  }
}

}  // namespace

Partition split_temporal(const LabeledTable& table, const SplitConfig& cfg) {
  cfg.validate();
  const auto subjects = group_by_subject(table);
  std::vector<int> train, valid, test;
  for (const auto& [id, subject] : subjects) partition_subject(subject, cfg, train, valid, test);
  Partition out{table.select(train), table.select(valid), table.select(test)};
  if (cfg.apply_smote) out.train = smote_balance(out.train, cfg.smote_k, cfg.seed);
  return out;
}

DomainSplit split_domains(const LabeledTable& table, const SplitConfig& cfg) {
  cfg.validate();
  const auto subjects = group_by_subject(table);

  std::map<int, std::vector<std::string>> subjects_by_class;
  for (const auto& [id, subject] : subjects) subjects_by_class[subject.label].push_back(id);

  std::vector<int> too_small;
  for (const auto& [label, ids] : subjects_by_class) {
    if (ids.size() < 2) too_small.push_back(label);
  }
  if (!too_small.empty()) {
    std::string msg = "classes with fewer than 2 subjects cannot be stratified:";
    for (const int label : too_small) msg += " " + std::to_string(label);
    throw DataError(msg);
  }

  Rng rng(cfg.seed);
  std::vector<std::string> domain1, domain2;
  for (auto& [label, ids] : subjects_by_class) {
    rng.shuffle(ids);
    auto n1 = static_cast<std::size_t>(std::llround(cfg.domain_fraction * ids.size()));
    n1 = std::clamp<std::size_t>(n1, 1, ids.size() - 1);
    domain1.insert(domain1.end(), ids.begin(), ids.begin() + n1);
    domain2.insert(domain2.end(), ids.begin() + n1, ids.end());
  }
  std::sort(domain1.begin(), domain1.end());
  std::sort(domain2.begin(), domain2.end());

  DomainSplit out;
  std::uint64_t domain_tag = 0;
  for (const auto& members : {domain1, domain2}) {
    std::vector<int> train, valid, test;
    for (const auto& id : members) partition_subject(subjects.at(id), cfg, train, valid, test);
    Partition part{table.select(train), table.select(valid), table.select(test)};
    if (cfg.apply_smote) {
      part.train = smote_balance(part.train, cfg.smote_k, mix_seed(cfg.seed, 50 + domain_tag));
    }
    out.domains.push_back(std::move(part));
    ++domain_tag;
  }
  return out;
}

}  // namespace page::datapipe
