#include "nanovla/training.h"

#include <cmath>

#include "nanovla/errors.h"
#include "nanovla/rng.h"

namespace nanovla {

void SgdConfig::validate() const {
  if (!(lr > 0.0) || !(momentum >= 0.0 && momentum < 1.0) || !(clip_norm >= 0.0) ||
      !(final_lr_fraction >= 0.0 && final_lr_fraction <= 1.0)) {
    throw ConfigError("sgd: need lr > 0, momentum in [0,1), clip >= 0, "
                      "final fraction in [0,1]");
  }
}

Sgd::Sgd(SgdConfig cfg) : cfg_(cfg) { cfg_.validate(); }

double global_norm(const ParameterStore& grads) {
  double sq = 0.0;
  for (const auto& [name, g] : grads) {
    for (double v : g.data()) sq += v * v;
  }
  return std::sqrt(sq);
}

double Sgd::step(ParameterStore& theta, const ParameterStore& grads, double lr) {
  if (velocity_.size() == 0) velocity_ = theta.zeros_like();
  const double norm = global_norm(grads);
  if (!std::isfinite(norm)) throw NumericError("sgd: non-finite gradient norm", "grads");
  const double scale =
      cfg_.clip_norm > 0.0 && norm > cfg_.clip_norm ? cfg_.clip_norm / norm : 1.0;
  velocity_.scale(cfg_.momentum);
  velocity_.axpy(scale, grads);
  theta.axpy(-lr, velocity_);
  return norm;
}

std::vector<TrainRecord> train_policy(ParameterStore& theta, const PolicyConfig& cfg,
                                      std::span<const TrainingExample> data,
                                      const TrainConfig& train, const TrainCallback& on_step) {
  if (data.empty()) throw DataError("train_policy: empty dataset");
  if (train.batch == 0) throw ConfigError("train_policy: batch must be >= 1");
  Sgd opt(train.sgd);
  Rng rng(mix_seed(train.seed, 0xba7c));
  std::vector<TrainRecord> history;
  history.reserve(train.steps);
  std::vector<TrainingExample> batch(train.batch);
  for (std::size_t s = 0; s < train.steps; ++s) {
    for (TrainingExample& ex : batch) ex = data[rng.below(data.size())];
    const TrainingLoss tl = training_loss(batch, theta, cfg, mix_seed(train.seed, s));
    const double progress =
        train.steps > 1 ? static_cast<double>(s) / static_cast<double>(train.steps - 1) : 0.0;
    const double lr =
        train.sgd.lr * (1.0 - (1.0 - train.sgd.final_lr_fraction) * progress);
    TrainRecord rec{s, tl.loss, tl.chunk_loss, tl.kl, 0.0, lr};
    rec.grad_norm = opt.step(theta, tl.grads, lr);
    history.push_back(rec);
    if (on_step) on_step(rec);
  }
  return history;
}

Dataset build_dataset(const std::vector<TaskSpec>& tasks, const EnvConfig& env,
                      const ImageEncoderStub& image, const LanguageEncoderStub& language,
                      std::size_t horizon, std::size_t stride, std::size_t latent_dim) {
  if (horizon == 0 || stride == 0) throw ConfigError("dataset: horizon and stride must be >= 1");
  Dataset ds;
  ds.horizon = horizon;
  for (const TaskSpec& task : tasks) {
    const Demonstration demo = scripted_expert(task, env);
    const std::vector<double> lang = language.encode(task.instruction);
    for (std::size_t start = 0; start < demo.size(); start += stride) {
      const EnvState& state = demo.states[start];
      const Observation obs = observe(state, env);
      TrainingExample ex;
      ex.inputs = ModalityInputs{obs.proprio, obs.env, lang, image.encode(obs.image),
                                 std::vector<double>(latent_dim, 0.0)};
      ex.target = ActionChunk{expert_chunk(state, env, horizon)};
      ds.index.push_back(DatasetIndexRow{ds.examples.size(), task.id, start});
      ds.examples.push_back(std::move(ex));
    }
  }
  return ds;
}

}  // namespace nanovla
