#ifndef NANOVLA_POLICY_H_
#define NANOVLA_POLICY_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "nanovla/config.h"
#include "nanovla/graph.h"
#include "nanovla/kernels.h"
#include "nanovla/parameter_store.h"

namespace nanovla {

struct PolicyConfig {
  std::size_t model_dim = 64;
  std::size_t heads = 4;
  std::size_t enc_layers = 4;
  std::size_t dec_layers = 4;
  std::size_t horizon = 100;  // H_train
  std::size_t action_dim = 3;
  std::size_t latent_dim = 8;
  std::size_t ffn_width = 256;
  nn::Activation activation = nn::Activation::kRelu;
  double dropout = 0.0;
  double kl_weight = 10.0;
  double ln_eps = 1e-5;

  std::size_t state_dim = 3;
  std::size_t env_dim = 7;
  std::size_t image_channels = 8;
  std::size_t image_height = 2;
  std::size_t image_width = 2;

  nn::AttentionConfig attention() const {
    return nn::AttentionConfig::make(model_dim, heads);
  }
  std::size_t image_tokens() const { return image_height * image_width; }
  std::size_t tokens() const { return 4 + image_tokens(); }

  // Throws ConfigError on inconsistent values. enc_layers == 0 is accepted
  // only for probing the empty encoder stack.
  void validate() const;

  // Keys relative to a "policy." section.
  KeyValueConfig to_config() const;
  static PolicyConfig from_config(const KeyValueConfig& section);
};

struct ModalityInputs {
  std::vector<double> state;
  std::vector<double> env;
  std::vector<double> instruction_embedding;  // length model_dim
  Tensor image_features;                      // [C, Hf, Wf]
  std::vector<double> latent;                 // length latent_dim
};

// Row indices of the encoder token sequence.
struct TokenLayout {
  static constexpr std::size_t kLatent = 0;
  static constexpr std::size_t kState = 1;
  static constexpr std::size_t kEnv = 2;
  static constexpr std::size_t kLanguage = 3;
  static constexpr std::size_t kImageBegin = 4;
  std::size_t image_count = 0;

  std::size_t size() const { return kImageBegin + image_count; }
};

struct EncoderMemory {
  Tensor tokens;      // [N, D]
  Tensor positional;  // [N, D]
  TokenLayout layout;
};

struct ActionChunk {
  Tensor actions;  // [horizon, action_dim]

  std::size_t horizon() const { return actions.rows(); }
};

struct LatentPosterior {
  std::vector<double> mu;
  std::vector<double> log_var;
};

struct TrainingExample {
  ModalityInputs inputs;
  ActionChunk target;
};

struct TrainingLoss {
  double loss = 0.0;
  double chunk_loss = 0.0;
  double kl = 0.0;
  ParameterStore grads;
};

// Seeded init: weights and the CLS token U(-1/sqrt(fan_in), 1/sqrt(fan_in)),
// decoder slot embeddings from the 1D sinusoidal table, other positional
// embeddings and biases zero, LayerNorm gains one.
ParameterStore init_policy(const PolicyConfig& cfg, std::uint64_t seed);

EncoderMemory assemble_tokens(const ModalityInputs& inp, const ParameterStore& theta,
                              const PolicyConfig& cfg);
Tensor encode(const EncoderMemory& mem, const ParameterStore& theta,
              const PolicyConfig& cfg);
Tensor decode(const Tensor& memory, const Tensor& positional,
              const ParameterStore& theta, const PolicyConfig& cfg);
ActionChunk action_head(const Tensor& y_final, const ParameterStore& theta);
LatentPosterior posterior_encode(std::span<const double> state,
                                 const ActionChunk& actions,
                                 const ParameterStore& theta, const PolicyConfig& cfg);

// z drawn as mu + sigma * eps with eps ~ N(0, I) from the given seed.
std::vector<double> sample_latent(const LatentPosterior& q, std::uint64_t seed);

// 0.5 * sum(mu^2 + sigma^2 - log sigma^2 - 1).
double gaussian_kl(const LatentPosterior& q);

// Mean over the batch of chunk MSE + kl_weight * KL, with reverse-mode
// gradients. Throws NumericError naming the first non-finite parameter or
// gradient (or "loss").
TrainingLoss training_loss(std::span<const TrainingExample> batch,
                           const ParameterStore& theta, const PolicyConfig& cfg,
                           std::uint64_t rng_seed);

// Deterministic forward pass with the latent forced to zero.
ActionChunk infer(const ModalityInputs& inp, const ParameterStore& theta,
                  const PolicyConfig& cfg);

namespace policy_graph {

struct Forward {
  Graph::Id tokens;
  Graph::Id positional;
  Graph::Id memory;
  Graph::Id decoded;
  Graph::Id actions;
};

// Builds the full policy forward on g; `latent` is a [1, d_z] node.
Forward build(Graph& g, const ModalityInputs& inp, Graph::Id latent,
              const PolicyConfig& cfg, Rng* dropout_rng);

struct Posterior {
  Graph::Id mu;
  Graph::Id log_var;
};

Posterior build_posterior(Graph& g, std::span<const double> state,
                          const Tensor& actions, const PolicyConfig& cfg);

}  // namespace policy_graph

}  // namespace nanovla

#endif  // NANOVLA_POLICY_H_
