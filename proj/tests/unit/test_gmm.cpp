#include "page/gmm.hpp"

#include <cmath>
#include <numbers>

#include "doctest.h"
#include "page/common.hpp"
#include "page/rng.hpp"

using namespace page;

namespace {

Eigen::MatrixXd two_cluster_data(int per_cluster, std::uint64_t seed, double separation = 10.0) {
  Rng rng(seed);
  Eigen::MatrixXd data(2 * per_cluster, 2);
  for (int i = 0; i < per_cluster; ++i) {
    data(i, 0) = rng.normal();
    data(i, 1) = rng.normal();
    data(per_cluster + i, 0) = separation + rng.normal();
    data(per_cluster + i, 1) = separation + rng.normal();
  }
  return data;
}

// Mixture density of one point summed term by term, no log-sum-exp.
double naive_log_density(const gmm::GmmModel& model, const Eigen::VectorXd& x) {
  double density = 0.0;
  const double d = static_cast<double>(model.dim());
  for (int k = 0; k < model.components(); ++k) {
    const Eigen::MatrixXd& cov = model.covariances[k];
    const Eigen::VectorXd diff = x - model.means[k];
    const double quad = diff.transpose() * cov.inverse() * diff;
    const double norm = std::pow(2.0 * std::numbers::pi, -d / 2.0) / std::sqrt(cov.determinant());
    density += model.weights[k] * norm * std::exp(-0.5 * quad);
  }
  return std::log(density);
}

}  // namespace

TEST_CASE("single-component fit is the closed-form MLE") {
  Rng rng(11);
  Eigen::MatrixXd data(40, 3);
  for (Eigen::Index i = 0; i < data.size(); ++i) data.data()[i] = rng.normal() * 2.0 + 1.0;

  gmm::EmConfig cfg;
  cfg.seed = 3;
  const gmm::EmResult fit = gmm::em_fit(data, 1, cfg);

  const Eigen::VectorXd mean = data.colwise().mean();
  Eigen::MatrixXd centered = data.rowwise() - mean.transpose();
  Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(data.rows());
  cov.diagonal().array() += cfg.cov_reg;

  CHECK((fit.model.means[0] - mean).cwiseAbs().maxCoeff() < 1e-10);
  CHECK((fit.model.covariances[0] - cov).cwiseAbs().maxCoeff() < 1e-10);
  CHECK(fit.model.weights[0] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("EM recovers two well-separated components") {
  const Eigen::MatrixXd data = two_cluster_data(500, 21);
  gmm::EmConfig cfg;
  cfg.seed = 4;
  const gmm::EmResult fit = gmm::em_fit(data, 2, cfg);

  const Eigen::Vector2d truth_a(0.0, 0.0);
  const Eigen::Vector2d truth_b(10.0, 10.0);
  const double direct = (fit.model.means[0] - truth_a).norm() + (fit.model.means[1] - truth_b).norm();
  const double swapped = (fit.model.means[0] - truth_b).norm() + (fit.model.means[1] - truth_a).norm();
  const double err = std::min(direct, swapped);
  CHECK(err < 0.6);  // 0.3 per mean, permutation-aware
}

TEST_CASE("log-likelihood trace is non-decreasing") {
  for (std::uint64_t seed : {1u, 5u, 9u}) {
    Rng rng(seed);
    Eigen::MatrixXd data(120, 3);
    for (Eigen::Index i = 0; i < data.size(); ++i) data.data()[i] = rng.normal() + (i % 3);
    gmm::EmConfig cfg;
    cfg.seed = seed + 1;
    const gmm::EmResult fit = gmm::em_fit(data, 3, cfg);
    REQUIRE(fit.log_likelihood_trace.size() >= 2);
    for (std::size_t i = 1; i < fit.log_likelihood_trace.size(); ++i) {
      CHECK(fit.log_likelihood_trace[i] >= fit.log_likelihood_trace[i - 1] - 1e-8);
    }
  }
}

TEST_CASE("fitted models satisfy the mixture invariants") {
  Rng rng(77);
  Eigen::MatrixXd data(200, 4);
  for (Eigen::Index i = 0; i < data.size(); ++i) data.data()[i] = rng.normal();
  for (int c = 1; c <= 10; ++c) {
    gmm::EmConfig cfg;
    cfg.seed = static_cast<std::uint64_t>(c);
    cfg.max_iter = 30;
    const gmm::EmResult fit = gmm::em_fit(data, c, cfg);
    CHECK(std::abs(fit.model.weights.sum() - 1.0) < 1e-9);
    CHECK(fit.model.weights.minCoeff() >= 0.0);
    for (const auto& cov : fit.model.covariances) {
      CHECK((cov - cov.transpose()).cwiseAbs().maxCoeff() < 1e-12);
      Eigen::LLT<Eigen::MatrixXd> llt(cov);
      CHECK(llt.info() == Eigen::Success);
    }
  }
}

TEST_CASE("insufficient data is rejected") {
  const Eigen::MatrixXd data = Eigen::MatrixXd::Random(3, 2);
  gmm::EmConfig cfg;
  CHECK_THROWS_AS(gmm::em_fit(data, 4, cfg), DataError);
}

TEST_CASE("standard normal log-density at the mean") {
  gmm::GmmModel model;
  model.weights = Eigen::VectorXd::Ones(1);
  model.means.push_back(Eigen::VectorXd::Zero(1));
  model.covariances.push_back(Eigen::MatrixXd::Identity(1, 1));
  Eigen::MatrixXd x(1, 1);
  x << 0.0;
  const double expected = std::log(1.0 / std::sqrt(2.0 * std::numbers::pi));
  CHECK(gmm::log_likelihood(model, x) == doctest::Approx(expected).epsilon(1e-9));
  CHECK(gmm::log_likelihood(model, x) == doctest::Approx(-0.9189).epsilon(1e-4));
}

TEST_CASE("duplicated equal-weight components match a single component") {
  gmm::GmmModel one;
  one.weights = Eigen::VectorXd::Ones(1);
  one.means.push_back(Eigen::Vector2d(1.0, -1.0));
  one.covariances.push_back(Eigen::Matrix2d{{2.0, 0.3}, {0.3, 1.0}});

  gmm::GmmModel two;
  two.weights = Eigen::VectorXd::Constant(2, 0.5);
  two.means = {one.means[0], one.means[0]};
  two.covariances = {one.covariances[0], one.covariances[0]};

  Rng rng(3);
  Eigen::MatrixXd data(50, 2);
  for (Eigen::Index i = 0; i < data.size(); ++i) data.data()[i] = rng.normal() * 2.0;
  CHECK(gmm::log_likelihood(one, data) ==
        doctest::Approx(gmm::log_likelihood(two, data)).epsilon(1e-9));
}

TEST_CASE("log-likelihood agrees with direct per-point summation") {
  const Eigen::MatrixXd data = two_cluster_data(50, 33, 4.0);
  gmm::EmConfig cfg;
  cfg.seed = 2;
  const gmm::GmmModel model = gmm::em_fit(data, 2, cfg).model;

  double naive = 0.0;
  for (Eigen::Index i = 0; i < data.rows(); ++i) {
    naive += naive_log_density(model, data.row(i).transpose());
  }
  const double fast = gmm::log_likelihood(model, data);
  CHECK(fast == doctest::Approx(naive).epsilon(1e-8));
}

TEST_CASE("parameter count arithmetic") {
  CHECK(gmm::param_count(3, 2) == 17);  // 2 + 6 + 9
  CHECK(gmm::param_count(1, 1) == 2);
  CHECK(gmm::param_count(2, 3) == 1 + 6 + 12);
}

TEST_CASE("duplicating the dataset shifts BIC exactly by the penalty rule") {
  const Eigen::MatrixXd data = two_cluster_data(80, 13, 6.0);
  gmm::EmConfig cfg;
  cfg.seed = 8;
  const gmm::GmmModel model = gmm::em_fit(data, 2, cfg).model;

  Eigen::MatrixXd doubled(2 * data.rows(), data.cols());
  doubled << data, data;

  const double ll = gmm::log_likelihood(model, data);
  const double k = gmm::param_count(model.components(), model.dim());
  const double predicted = k * std::log(static_cast<double>(doubled.rows())) - 2.0 * (2.0 * ll);
  CHECK(gmm::bic(model, doubled) == doctest::Approx(predicted).epsilon(1e-10));
}

TEST_CASE("BIC prefers the true component count on mixture data") {
  int wins = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Eigen::MatrixXd data = two_cluster_data(150, 100 + seed);
    gmm::EmConfig cfg;
    cfg.seed = seed;
    cfg.max_iter = 100;
    const double bic2 = gmm::bic(gmm::em_fit(data, 2, cfg).model, data);
    const double bic5 = gmm::bic(gmm::em_fit(data, 5, cfg).model, data);
    if (bic2 < bic5) ++wins;
  }
  CHECK(wins >= 8);
}

TEST_CASE("empty data BIC is rejected") {
  gmm::GmmModel model;
  model.weights = Eigen::VectorXd::Ones(1);
  model.means.push_back(Eigen::VectorXd::Zero(2));
  model.covariances.push_back(Eigen::MatrixXd::Identity(2, 2));
  CHECK_THROWS_AS(gmm::bic(model, Eigen::MatrixXd(0, 2)), DataError);
}

TEST_CASE("sampling a near-degenerate component stays at the mean") {
  gmm::GmmModel model;
  model.weights = Eigen::VectorXd::Ones(1);
  model.means.push_back(Eigen::Vector3d(1.0, 2.0, 3.0));
  model.covariances.push_back(1e-6 * Eigen::MatrixXd::Identity(3, 3));
  const Eigen::MatrixXd samples = gmm::sample(model, 200, 6);
  for (Eigen::Index i = 0; i < samples.rows(); ++i) {
    CHECK((samples.row(i).transpose() - model.means[0]).cwiseAbs().maxCoeff() < 1e-2);
  }
}

TEST_CASE("large samples reproduce the mixture statistics") {
  gmm::GmmModel model;
  model.weights = Eigen::VectorXd(2);
  model.weights << 0.3, 0.7;
  model.means.push_back(Eigen::Vector2d(0.0, 0.0));
  model.means.push_back(Eigen::Vector2d(8.0, 8.0));
  model.covariances.push_back(Eigen::MatrixXd::Identity(2, 2));
  model.covariances.push_back(Eigen::MatrixXd::Identity(2, 2));

  const Eigen::MatrixXd samples = gmm::sample(model, 10000, 12);
  int near_second = 0;
  for (Eigen::Index i = 0; i < samples.rows(); ++i) {
    if ((samples.row(i).transpose() - model.means[1]).norm() <
        (samples.row(i).transpose() - model.means[0]).norm()) {
      ++near_second;
    }
  }
  const double prop = static_cast<double>(near_second) / 10000.0;
  CHECK(std::abs(prop - 0.7) < 0.03);

  const Eigen::Vector2d mixture_mean = 0.3 * model.means[0] + 0.7 * model.means[1];
  CHECK((samples.colwise().mean().transpose() - mixture_mean).cwiseAbs().maxCoeff() < 0.1);
}

TEST_CASE("sampling is deterministic in the seed") {
  gmm::GmmModel model;
  model.weights = Eigen::VectorXd::Constant(2, 0.5);
  model.means.push_back(Eigen::Vector2d(0.0, 0.0));
  model.means.push_back(Eigen::Vector2d(5.0, 5.0));
  model.covariances.push_back(Eigen::MatrixXd::Identity(2, 2));
  model.covariances.push_back(Eigen::MatrixXd::Identity(2, 2));
  CHECK(gmm::sample(model, 64, 9) == gmm::sample(model, 64, 9));
  CHECK(gmm::sample(model, 64, 9) != gmm::sample(model, 64, 10));
}
