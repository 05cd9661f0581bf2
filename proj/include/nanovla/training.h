#ifndef NANOVLA_TRAINING_H_
#define NANOVLA_TRAINING_H_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "nanovla/envsim.h"
#include "nanovla/parameter_store.h"
#include "nanovla/policy.h"
#include "nanovla/stubs.h"

namespace nanovla {

struct SgdConfig {
  double lr = 0.05;
  double momentum = 0.9;
  double clip_norm = 1.0;  // global gradient norm; 0 disables clipping
  double final_lr_fraction = 1.0;  // linear decay to lr * fraction at the last step

  void validate() const;
};

// SGD with heavy-ball momentum: v = mu v + g; theta -= lr v.
class Sgd {
 public:
  explicit Sgd(SgdConfig cfg);

  // Returns the gradient norm before clipping.
  double step(ParameterStore& theta, const ParameterStore& grads, double lr);

  const SgdConfig& config() const { return cfg_; }

 private:
  SgdConfig cfg_;
  ParameterStore velocity_;
};

double global_norm(const ParameterStore& grads);

struct TrainConfig {
  std::size_t steps = 2000;
  std::size_t batch = 8;
  SgdConfig sgd;
  std::uint64_t seed = 0;
};

struct TrainRecord {
  std::size_t step = 0;
  double loss = 0.0;
  double chunk_loss = 0.0;
  double kl = 0.0;
  double grad_norm = 0.0;
  double lr = 0.0;
};

using TrainCallback = std::function<void(const TrainRecord&)>;

std::vector<TrainRecord> train_policy(ParameterStore& theta, const PolicyConfig& cfg,
                                      std::span<const TrainingExample> data,
                                      const TrainConfig& train, const TrainCallback& on_step = {});

struct DatasetIndexRow {
  std::size_t example = 0;
  std::string task_id;
  std::size_t demo_step = 0;
};

struct Dataset {
  std::size_t horizon = 0;
  std::vector<TrainingExample> examples;
  std::vector<DatasetIndexRow> index;
};

// Every `stride`-th state of each expert demonstration, labelled with the
// expert's open-loop chunk from that state. Inputs carry stub image features
// and the instruction embedding; latents are zero.
Dataset build_dataset(const std::vector<TaskSpec>& tasks, const EnvConfig& env,
                      const ImageEncoderStub& image, const LanguageEncoderStub& language,
                      std::size_t horizon, std::size_t stride, std::size_t latent_dim);

}  // namespace nanovla

#endif  // NANOVLA_TRAINING_H_
