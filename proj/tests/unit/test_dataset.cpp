#include "page/dataset.hpp"

#include <sstream>

#include "doctest.h"
#include "page/common.hpp"

using namespace page;

namespace {

LabeledTable small_table() {
  LabeledTable t;
  t.features.resize(3, 2);
  t.features << 1.0, 2.0, 3.0, 4.0, 5.0, 6.0;
  t.labels.resize(3);
  t.labels << 0, 1, 0;
  t.subject_ids = {"a", "b", "a"};
  t.timestamps = {0.0, 0.0, 1.0};
  return t;
}

}  // namespace

TEST_CASE("validate rejects malformed tables") {
  LabeledTable t = small_table();
  CHECK_NOTHROW(t.validate());

  LabeledTable bad_label = t;
  bad_label.labels[1] = -1;
  CHECK_THROWS_AS(bad_label.validate(), DataError);

  LabeledTable bad_size = t;
  bad_size.labels.resize(2);
  CHECK_THROWS_AS(bad_size.validate(), DataError);

  LabeledTable bad_value = t;
  bad_value.features(0, 0) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(bad_value.validate(), DataError);
}

TEST_CASE("select and concat preserve row metadata") {
  const LabeledTable t = small_table();
  const LabeledTable picked = t.select({2, 0});
  CHECK(picked.rows() == 2);
  CHECK(picked.features(0, 0) == 5.0);
  CHECK(picked.labels[1] == 0);
  CHECK(picked.subject_ids == std::vector<std::string>{"a", "a"});
  CHECK(picked.timestamps == std::vector<double>{1.0, 0.0});

  const LabeledTable both = concat(picked, t);
  CHECK(both.rows() == 5);
  CHECK(both.labels[2] == 0);
  CHECK(both.subject_ids.size() == 5);
}

TEST_CASE("argmax ties resolve to the lowest index") {
  Eigen::RowVectorXd row(4);
  row << 0.2, 0.4, 0.4, 0.1;
  CHECK(argmax_row(row) == 1);
  Eigen::MatrixXd soft(2, 2);
  soft << 0.5, 0.5, 0.2, 0.8;
  const Eigen::VectorXi hard = harden(soft);
  CHECK(hard[0] == 0);
  CHECK(hard[1] == 1);
}

TEST_CASE("one-hot encodes and bounds-checks") {
  Eigen::VectorXi labels(3);
  labels << 0, 2, 1;
  const Eigen::MatrixXd t = one_hot(labels, 3);
  CHECK(t(0, 0) == 1.0);
  CHECK(t(1, 2) == 1.0);
  CHECK(t(2, 1) == 1.0);
  CHECK(t.sum() == 3.0);
  CHECK_THROWS_AS(one_hot(labels, 2), DataError);
}

TEST_CASE("csv round-trips a table") {
  const LabeledTable t = small_table();
  std::ostringstream out;
  format_csv(t, out);
  std::istringstream in(out.str());
  const LabeledTable back = parse_csv(in, "test");
  CHECK(back.features == t.features);
  CHECK(back.labels == t.labels);
  CHECK(back.subject_ids == t.subject_ids);
  CHECK(back.timestamps == t.timestamps);
}

TEST_CASE("csv parser reports malformed inputs") {
  SUBCASE("missing label column") {
    std::istringstream in("f0,f1\n1,2\n");
    CHECK_THROWS_AS(parse_csv(in, "test"), DataError);
  }
  SUBCASE("ragged row") {
    std::istringstream in("f0,label\n1,0\n2\n");
    CHECK_THROWS_AS(parse_csv(in, "test"), DataError);
  }
  SUBCASE("non-numeric feature") {
    std::istringstream in("f0,label\nx,0\n");
    CHECK_THROWS_AS(parse_csv(in, "test"), DataError);
  }
  SUBCASE("empty file") {
    std::istringstream in("");
    CHECK_THROWS_AS(parse_csv(in, "test"), DataError);
  }
}

TEST_CASE("class_count spans the label range") {
  Eigen::VectorXi labels(4);
  labels << 0, 3, 1, 1;
  CHECK(class_count(labels) == 4);
}
