#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

namespace page::gmm {

// Full-covariance Gaussian mixture.
struct GmmModel {
  Eigen::VectorXd weights;
  std::vector<Eigen::VectorXd> means;
  std::vector<Eigen::MatrixXd> covariances;

  int components() const { return static_cast<int>(weights.size()); }
  int dim() const { return means.empty() ? 0 : static_cast<int>(means.front().size()); }
};

struct EmConfig {
  int max_iter = 200;
  double tol = 1e-4;       // relative log-likelihood change
  double cov_reg = 1e-6;   // diagonal jitter added every M-step
  std::uint64_t seed = 0;

  void validate() const;
};

struct EmResult {
  GmmModel model;
  std::vector<double> log_likelihood_trace;  // one entry per EM iteration
  int collapse_reinits = 0;
};

// Fits by expectation-maximization. Means start from distinct data rows
// sampled by seed, weights uniform, covariances from the global sample
// covariance. Collapsed components (weight < 1e-10) are reinitialized from a
// random data point instead of aborting.
EmResult em_fit(const Eigen::MatrixXd& data, int components, const EmConfig& cfg);

// sum_rows ln sum_c pi_c N(x | mu_c, Sigma_c), evaluated through log-sum-exp.
double log_likelihood(const GmmModel& model, const Eigen::MatrixXd& data);

// Free parameters of a full-covariance mixture:
// (C-1) weights + C*d means + C*d(d+1)/2 covariance entries.
int param_count(int components, int dim);

// k ln(n) - 2 ln(L); lower is better.
double bic(const GmmModel& model, const Eigen::MatrixXd& data);

// Draw rows by picking a component from the weights, then a Cholesky-factored
// Gaussian draw. Deterministic for a given seed.
Eigen::MatrixXd sample(const GmmModel& model, int count, std::uint64_t seed);

}  // namespace page::gmm
