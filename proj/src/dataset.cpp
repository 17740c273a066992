#include "page/dataset.hpp"

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <istream>
#include <ostream>
#include <sstream>

#include "page/common.hpp"
#include "page/io_audit.hpp"

namespace page {

void LabeledTable::validate() const {
  if (labels.size() != rows()) {
    throw DataError("label count " + std::to_string(labels.size()) +
                    " does not match row count " + std::to_string(rows()));
  }
  if (has_subjects() && static_cast<Eigen::Index>(subject_ids.size()) != rows()) {
    throw DataError("subject_id count does not match row count");
  }
  if (has_timestamps() && static_cast<Eigen::Index>(timestamps.size()) != rows()) {
    throw DataError("timestamp count does not match row count");
  }
  if (!features.allFinite()) throw DataError("non-finite feature value");
  for (Eigen::Index i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0) throw DataError("negative class label at row " + std::to_string(i));
  }
}

LabeledTable LabeledTable::select(const std::vector<int>& row_indices) const {
  LabeledTable out;
  out.features.resize(static_cast<Eigen::Index>(row_indices.size()), dim());
  out.labels.resize(static_cast<Eigen::Index>(row_indices.size()));
  if (has_subjects()) out.subject_ids.reserve(row_indices.size());
  if (has_timestamps()) out.timestamps.reserve(row_indices.size());
  for (std::size_t k = 0; k < row_indices.size(); ++k) {
    const int i = row_indices[k];
    out.features.row(static_cast<Eigen::Index>(k)) = features.row(i);
    out.labels[static_cast<Eigen::Index>(k)] = labels[i];
    if (has_subjects()) out.subject_ids.push_back(subject_ids[i]);
    if (has_timestamps()) out.timestamps.push_back(timestamps[i]);
  }
  return out;
}

LabeledTable concat(const LabeledTable& a, const LabeledTable& b) {
  if (a.rows() == 0) return b;
  if (b.rows() == 0) return a;
  if (a.dim() != b.dim()) throw DataError("cannot concatenate tables of different dimension");
  LabeledTable out;
  out.features.resize(a.rows() + b.rows(), a.dim());
  out.features << a.features, b.features;
  out.labels.resize(a.rows() + b.rows());
  out.labels << a.labels, b.labels;
  if (a.has_subjects() && b.has_subjects()) {
    out.subject_ids = a.subject_ids;
    out.subject_ids.insert(out.subject_ids.end(), b.subject_ids.begin(), b.subject_ids.end());
  }
  if (a.has_timestamps() && b.has_timestamps()) {
    out.timestamps = a.timestamps;
    out.timestamps.insert(out.timestamps.end(), b.timestamps.begin(), b.timestamps.end());
  }
  return out;
}

int class_count(const Eigen::VectorXi& labels) {
  int c = 0;
  for (Eigen::Index i = 0; i < labels.size(); ++i) c = std::max(c, labels[i] + 1);
  return c;
}

int argmax_row(const Eigen::RowVectorXd& row) {
  int best = 0;
  for (int j = 1; j < row.size(); ++j) {
    if (row[j] > row[best]) best = j;
  }
  return best;
}

Eigen::VectorXi harden(const Eigen::MatrixXd& soft_labels) {
  Eigen::VectorXi out(soft_labels.rows());
  for (Eigen::Index i = 0; i < soft_labels.rows(); ++i) {
    out[i] = argmax_row(soft_labels.row(i));
  }
  return out;
}

Eigen::MatrixXd one_hot(const Eigen::VectorXi& labels, int classes) {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(labels.size(), classes);
  for (Eigen::Index i = 0; i < labels.size(); ++i) {
    if (labels[i] >= classes) {
      throw DataError("label " + std::to_string(labels[i]) + " out of range for " +
                      std::to_string(classes) + " classes");
    }
    out(i, labels[i]) = 1.0;
  }
  return out;
}

std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  return out;
}

double parse_number(const std::string& s, const std::string& context, std::size_t line_no) {
  const char* begin = s.data();
  char* end = nullptr;
  const double v = std::strtod(begin, &end);
  if (end == begin || end != begin + s.size()) {
    throw DataError(context + ": malformed number '" + s + "' at line " + std::to_string(line_no));
  }
  return v;
}

}  // namespace

LabeledTable parse_csv(std::istream& in, const std::string& context) {
  std::string line;
  if (!std::getline(in, line)) throw DataError(context + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();

  const std::vector<std::string> header = split_line(line);
  int label_col = -1, subject_col = -1, time_col = -1;
  std::vector<int> feature_cols;
  for (int c = 0; c < static_cast<int>(header.size()); ++c) {
    if (header[c] == "label") {
      label_col = c;
    } else if (header[c] == "subject_id") {
      subject_col = c;
    } else if (header[c] == "timestamp") {
      time_col = c;
    } else {
      feature_cols.push_back(c);
    }
  }
  if (label_col < 0) throw DataError(context + ": missing 'label' column");

  std::vector<double> values;
  std::vector<int> labels;
  std::vector<std::string> subjects;
  std::vector<double> times;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::vector<std::string> cells = split_line(line);
    if (cells.size() != header.size()) {
      throw DataError(context + ": expected " + std::to_string(header.size()) +
                      " columns, got " + std::to_string(cells.size()) + " at line " +
                      std::to_string(line_no));
    }
    for (const int c : feature_cols) values.push_back(parse_number(cells[c], context, line_no));
    labels.push_back(static_cast<int>(parse_number(cells[label_col], context, line_no)));
    if (subject_col >= 0) subjects.push_back(cells[subject_col]);
    if (time_col >= 0) times.push_back(parse_number(cells[time_col], context, line_no));
  }

  LabeledTable table;
  const Eigen::Index n = static_cast<Eigen::Index>(labels.size());
  const Eigen::Index d = static_cast<Eigen::Index>(feature_cols.size());
  table.features.resize(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) table.features(i, j) = values[i * d + j];
  }
  table.labels = Eigen::Map<Eigen::VectorXi>(labels.data(), n);
  table.subject_ids = std::move(subjects);
  table.timestamps = std::move(times);
  table.validate();
  return table;
}

void format_csv(const LabeledTable& table, std::ostream& out) {
  for (Eigen::Index j = 0; j < table.dim(); ++j) out << 'f' << j << ',';
  out << "label";
  if (table.has_subjects()) out << ",subject_id";
  if (table.has_timestamps()) out << ",timestamp";
  out << '\n';
  for (Eigen::Index i = 0; i < table.rows(); ++i) {
    for (Eigen::Index j = 0; j < table.dim(); ++j) out << format_double(table.features(i, j)) << ',';
    out << table.labels[i];
    if (table.has_subjects()) out << ',' << table.subject_ids[i];
    if (table.has_timestamps()) out << ',' << format_double(table.timestamps[i]);
    out << '\n';
  }
}

LabeledTable read_csv(const std::string& path) {
  std::ifstream in = io::open_input(path);
  return parse_csv(in, path);
}

void write_csv(const LabeledTable& table, const std::string& path) {
  std::ofstream out = io::open_output(path);
  format_csv(table, out);
  if (!out) throw DataError("failed writing " + path);
}

}  // namespace page
