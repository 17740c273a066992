#include "page/sdg.hpp"

#include <cmath>
#include <limits>

#include "page/common.hpp"
#include "page/rng.hpp"

namespace page::sdg {

namespace {

// Stream tags for deriving independent sub-seeds from cfg.seed.
enum : std::uint64_t {
  kStreamSweepBase = 100,  // + C for the per-C sweep fits
  kStreamFinalFit = 1,
  kStreamSample = 2,
  kStreamTrainRole = 3,
  kStreamValidRole = 4,
};

}  // namespace

void SdgConfig::validate() const {
  if (c_max < 1) throw ConfigError("c_max must be >= 1");
  if (synth_fraction <= 0.0 || synth_fraction > 2.0) {
    throw ConfigError("synth_fraction must be in (0, 2]");
  }
  em.validate();
}

SyntheticSet generate(const mlp::MlpModel& model, const Eigen::MatrixXd& train_gmm,
                      const Eigen::MatrixXd& valid_gmm, const SdgConfig& cfg) {
  cfg.validate();
  if (train_gmm.rows() == 0) throw DataError("empty GMM training set");
  if (train_gmm.cols() != model.input_dim()) {
    throw DataError("GMM training features do not match model input dimension");
  }

  SyntheticSet out;
  int c_max = cfg.c_max;
  if (c_max > train_gmm.rows()) {
    c_max = static_cast<int>(train_gmm.rows());
    out.warnings.push_back("c_max clamped to " + std::to_string(c_max) +
                           " (training set has only that many rows)");
  }
  const Eigen::MatrixXd* scoring = &valid_gmm;
  if (valid_gmm.rows() == 0) {
    scoring = &train_gmm;
    out.warnings.push_back("empty GMM validation set; scoring BIC on the training set");
  } else if (valid_gmm.cols() != train_gmm.cols()) {
    throw DataError("GMM validation features do not match training dimension");
  }

  int best_c = 1;
  double best_bic = std::numeric_limits<double>::infinity();
  for (int c = 1; c <= c_max; ++c) {
    gmm::EmConfig em = cfg.em;
    em.seed = mix_seed(cfg.seed, kStreamSweepBase + static_cast<std::uint64_t>(c));
    const gmm::EmResult fit = gmm::em_fit(train_gmm, c, em);
    const double score = gmm::bic(fit.model, *scoring);
    out.bic_trace.push_back(score);
    if (score < best_bic) {  // strict: ties resolve to the smallest C
      best_bic = score;
      best_c = c;
    }
  }
  out.chosen_components = best_c;

  gmm::EmConfig final_em = cfg.em;
  final_em.seed = mix_seed(cfg.seed, kStreamFinalFit);
  const gmm::EmResult final_fit = gmm::em_fit(train_gmm, best_c, final_em);

  const int count = static_cast<int>(
      std::ceil(cfg.synth_fraction * static_cast<double>(train_gmm.rows())));
  out.features = gmm::sample(final_fit.model, count, mix_seed(cfg.seed, kStreamSample));
  out.pseudo_labels = mlp::forward(model, out.features);
  return out;
}

std::pair<SyntheticSet, SyntheticSet> generate_pair(const mlp::MlpModel& model,
                                                    const Eigen::MatrixXd& x_train,
                                                    const Eigen::MatrixXd& x_valid,
                                                    const SdgConfig& cfg) {
  if (x_train.rows() == 0 || x_valid.rows() == 0) {
    throw DataError("generate_pair needs nonempty training and validation sets");
  }
  SdgConfig train_cfg = cfg;
  train_cfg.seed = mix_seed(cfg.seed, kStreamTrainRole);
  SdgConfig valid_cfg = cfg;
  valid_cfg.seed = mix_seed(cfg.seed, kStreamValidRole);
  return {generate(model, x_train, x_valid, train_cfg),
          generate(model, x_valid, x_train, valid_cfg)};
}

}  // namespace page::sdg
