#include "page/gmm.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <numbers>

#include "page/common.hpp"
#include "page/rng.hpp"

namespace page::gmm {

namespace {

constexpr double kCollapseWeight = 1e-10;

// Per-component Cholesky with the log-normalizer baked in.
struct ComponentChol {
  Eigen::MatrixXd lower;
  double log_norm;  // -0.5 * (d ln 2pi + ln det Sigma)
};

ComponentChol factor(const Eigen::MatrixXd& cov) {
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success) {
    throw NumericError("covariance is not positive definite after regularization");
  }
  ComponentChol out;
  out.lower = llt.matrixL();
  double log_det = 0.0;
  for (Eigen::Index i = 0; i < out.lower.rows(); ++i) {
    log_det += 2.0 * std::log(out.lower(i, i));
  }
  const double d = static_cast<double>(cov.rows());
  out.log_norm = -0.5 * (d * std::log(2.0 * std::numbers::pi) + log_det);
  return out;
}

// log N(x | mu, Sigma) for every row of data.
Eigen::VectorXd log_density(const Eigen::MatrixXd& data, const Eigen::VectorXd& mean,
                            const ComponentChol& chol) {
  Eigen::MatrixXd centered = data.rowwise() - mean.transpose();
  // Solve L y = (x - mu)^T column-wise; squared norms give the quadratic form.
  Eigen::MatrixXd solved =
      chol.lower.triangularView<Eigen::Lower>().solve(centered.transpose());
  return (-0.5 * solved.colwise().squaredNorm().array() + chol.log_norm).transpose();
}

// Row-wise log responsibilities plus the data log-likelihood.
double e_step(const Eigen::MatrixXd& data, const GmmModel& model, Eigen::MatrixXd& resp) {
  const Eigen::Index n = data.rows();
  const int c = model.components();
  Eigen::MatrixXd log_joint(n, c);
  for (int k = 0; k < c; ++k) {
    const ComponentChol chol = factor(model.covariances[k]);
    log_joint.col(k) =
        log_density(data, model.means[k], chol).array() + std::log(model.weights[k]);
  }
  double total = 0.0;
  resp.resize(n, c);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double m = log_joint.row(i).maxCoeff();
    const Eigen::ArrayXd shifted = (log_joint.row(i).array() - m).exp();
    const double sum = shifted.sum();
    resp.row(i) = (shifted / sum).transpose();
    total += m + std::log(sum);
  }
  return total;
}

Eigen::MatrixXd sample_covariance(const Eigen::MatrixXd& data) {
  const Eigen::RowVectorXd mean = data.colwise().mean();
  Eigen::MatrixXd centered = data.rowwise() - mean;
  const double denom = std::max<double>(1.0, static_cast<double>(data.rows() - 1));
  return centered.transpose() * centered / denom;
}

}  // namespace

void EmConfig::validate() const {
  if (max_iter <= 0) throw ConfigError("max_iter must be positive");
  if (tol <= 0.0) throw ConfigError("tol must be positive");
  if (cov_reg <= 0.0) throw ConfigError("cov_reg must be positive");
}

EmResult em_fit(const Eigen::MatrixXd& data, int components, const EmConfig& cfg) {
  cfg.validate();
  if (components < 1) throw ConfigError("component count must be >= 1");
  const Eigen::Index n = data.rows();
  const Eigen::Index d = data.cols();
  if (n < components) {
    throw DataError("need at least " + std::to_string(components) + " rows to fit " +
                    std::to_string(components) + " components, got " + std::to_string(n));
  }
  if (!data.allFinite()) throw DataError("non-finite value in GMM training data");

  Rng rng(cfg.seed);
  const Eigen::MatrixXd global_cov =
      sample_covariance(data) + cfg.cov_reg * Eigen::MatrixXd::Identity(d, d);

  EmResult result;
  GmmModel& model = result.model;
  model.weights = Eigen::VectorXd::Constant(components, 1.0 / components);
  // Means: distinct rows drawn without replacement.
  std::vector<int> order(n);
  for (Eigen::Index i = 0; i < n; ++i) order[i] = static_cast<int>(i);
  rng.shuffle(order);
  for (int k = 0; k < components; ++k) {
    model.means.push_back(data.row(order[k]).transpose());
    model.covariances.push_back(global_cov);
  }

  Eigen::MatrixXd resp;
  double prev_ll = 0.0;
  for (int iter = 0; iter < cfg.max_iter; ++iter) {
    const double ll = e_step(data, model, resp);
    result.log_likelihood_trace.push_back(ll);

    // M-step
    Eigen::VectorXd counts = resp.colwise().sum();
    for (int k = 0; k < components; ++k) {
      if (counts[k] / n < kCollapseWeight) {
        model.means[k] = data.row(rng.index(static_cast<std::size_t>(n))).transpose();
        model.covariances[k] = global_cov;
        counts[k] = 1.0;  // token mass; weights renormalized below
        ++result.collapse_reinits;
        continue;
      }
      const Eigen::VectorXd mean = (resp.col(k).transpose() * data).transpose() / counts[k];
      Eigen::MatrixXd centered = data.rowwise() - mean.transpose();
      Eigen::MatrixXd cov = centered.transpose() * (centered.array().colwise() * resp.col(k).array()).matrix() / counts[k];
      cov = 0.5 * (cov + cov.transpose());
      cov.diagonal().array() += cfg.cov_reg;
      model.means[k] = mean;
      model.covariances[k] = cov;
    }
    model.weights = counts / counts.sum();

    if (iter > 0) {
      const double change = std::abs(ll - prev_ll) / std::max(std::abs(ll), 1e-300);
      if (change < cfg.tol) break;
    }
    prev_ll = ll;
  }
  return result;
}

double log_likelihood(const GmmModel& model, const Eigen::MatrixXd& data) {
  if (data.cols() != model.dim()) {
    throw DataError("data dimension does not match mixture dimension");
  }
  const Eigen::Index n = data.rows();
  const int c = model.components();
  Eigen::MatrixXd log_joint(n, c);
  for (int k = 0; k < c; ++k) {
    const ComponentChol chol = factor(model.covariances[k]);
    log_joint.col(k) =
        log_density(data, model.means[k], chol).array() + std::log(model.weights[k]);
  }
  double total = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double m = log_joint.row(i).maxCoeff();
    total += m + std::log((log_joint.row(i).array() - m).exp().sum());
  }
  return total;
}

int param_count(int components, int dim) {
  return (components - 1) + components * dim + components * dim * (dim + 1) / 2;
}

double bic(const GmmModel& model, const Eigen::MatrixXd& data) {
  if (data.rows() == 0) throw DataError("BIC of an empty dataset");
  const double k = param_count(model.components(), model.dim());
  return k * std::log(static_cast<double>(data.rows())) - 2.0 * log_likelihood(model, data);
}

Eigen::MatrixXd sample(const GmmModel& model, int count, std::uint64_t seed) {
  if (count < 1) throw ConfigError("sample count must be >= 1");
  const int d = model.dim();
  std::vector<ComponentChol> chols;
  chols.reserve(model.components());
  for (const auto& cov : model.covariances) chols.push_back(factor(cov));

  Rng rng(seed);
  Eigen::MatrixXd out(count, d);
  Eigen::VectorXd z(d);
  for (int i = 0; i < count; ++i) {
    // inverse-CDF pick over the component weights
    const double u = rng.uniform01();
    int k = 0;
    double cum = model.weights[0];
    while (u > cum && k + 1 < model.components()) cum += model.weights[++k];
    for (int j = 0; j < d; ++j) z[j] = rng.normal();
    out.row(i) = (model.means[k] + chols[k].lower * z).transpose();
  }
  return out;
}

}  // namespace page::gmm
