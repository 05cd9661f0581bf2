#include "nanovla/policy.h"

#include <cmath>
#include <string>

#include "nanovla/errors.h"
#include "nanovla/rng.h"

namespace nanovla {
namespace {

enum class InitKind { kWeight, kZero, kOne, kSinusoid };

struct ParamSpec {
  std::string name;
  Shape shape;
  InitKind kind;
};

void add_linear(std::vector<ParamSpec>& out, const std::string& prefix,
                std::size_t in, std::size_t outdim) {
  out.push_back({prefix + ".weight", {in, outdim}, InitKind::kWeight});
  out.push_back({prefix + ".bias", {outdim}, InitKind::kZero});
}

void add_norm(std::vector<ParamSpec>& out, const std::string& prefix, std::size_t d) {
  out.push_back({prefix + ".gain", {d}, InitKind::kOne});
  out.push_back({prefix + ".shift", {d}, InitKind::kZero});
}

void add_attention(std::vector<ParamSpec>& out, const std::string& prefix,
                   std::size_t d) {
  for (const char* part : {".query", ".key", ".value", ".output"}) {
    add_linear(out, prefix + part, d, d);
  }
}

void add_ffn(std::vector<ParamSpec>& out, const std::string& prefix, std::size_t d,
             std::size_t width) {
  add_linear(out, prefix + ".hidden", d, width);
  add_linear(out, prefix + ".output", width, d);
}

void add_encoder_block(std::vector<ParamSpec>& out, const std::string& prefix,
                       const PolicyConfig& cfg) {
  add_norm(out, prefix + ".ln1", cfg.model_dim);
  add_attention(out, prefix + ".attn", cfg.model_dim);
  add_norm(out, prefix + ".ln2", cfg.model_dim);
  add_ffn(out, prefix + ".ffn", cfg.model_dim, cfg.ffn_width);
}

std::vector<ParamSpec> parameter_specs(const PolicyConfig& cfg) {
  const std::size_t d = cfg.model_dim;
  std::vector<ParamSpec> out;
  add_linear(out, "in.latent", cfg.latent_dim, d);
  add_linear(out, "in.state", cfg.state_dim, d);
  add_linear(out, "in.env", cfg.env_dim, d);
  add_linear(out, "in.image", cfg.image_channels, d);
  out.push_back({"pos.enc", {4, d}, InitKind::kZero});
  out.push_back({"pos.dec", {cfg.horizon, d}, InitKind::kSinusoid});
  for (std::size_t l = 0; l < cfg.enc_layers; ++l) {
    add_encoder_block(out, "enc." + std::to_string(l), cfg);
  }
  add_norm(out, "enc.norm", d);
  for (std::size_t l = 0; l < cfg.dec_layers; ++l) {
    const std::string p = "dec." + std::to_string(l);
    add_norm(out, p + ".ln1", d);
    add_attention(out, p + ".self", d);
    add_norm(out, p + ".ln2", d);
    add_norm(out, p + ".ln_mem", d);
    add_attention(out, p + ".cross", d);
    add_norm(out, p + ".ln3", d);
    add_ffn(out, p + ".ffn", d, cfg.ffn_width);
  }
  add_norm(out, "dec.norm", d);
  add_linear(out, "head.action", d, cfg.action_dim);
  // CVAE posterior encoder over [CLS, state, actions...].
  out.push_back({"post.cls", {1, d}, InitKind::kWeight});
  out.push_back({"post.pos", {cfg.horizon + 2, d}, InitKind::kZero});
  add_linear(out, "post.state", cfg.state_dim, d);
  add_linear(out, "post.action", cfg.action_dim, d);
  add_encoder_block(out, "post.layer", cfg);
  add_norm(out, "post.norm", d);
  add_linear(out, "post.head", d, 2 * cfg.latent_dim);
  return out;
}

Graph::Id norm(Graph& g, Graph::Id x, const std::string& prefix, double eps) {
  return g.layer_norm(x, g.param(prefix + ".gain"), g.param(prefix + ".shift"), eps);
}

Graph::Id dropout(Graph& g, Graph::Id x, double rate, Rng* rng) {
  if (rate == 0.0 || rng == nullptr) return x;
  return g.mul(x, g.input(nn::dropout_mask(g.value(x).shape(), rate, *rng)));
}

Graph::Id encoder_block(Graph& g, Graph::Id x, Graph::Id pos, const std::string& prefix,
                        const PolicyConfig& cfg, Rng* rng) {
  const auto att = cfg.attention();
  const Graph::Id ln1 = norm(g, x, prefix + ".ln1", cfg.ln_eps);
  const Graph::Id qk = g.add(ln1, pos);
  Graph::Id a = g.attention(qk, qk, ln1, att, g.attention_params(prefix + ".attn"));
  x = g.add(x, dropout(g, a, cfg.dropout, rng));
  const Graph::Id ln2 = norm(g, x, prefix + ".ln2", cfg.ln_eps);
  const Graph::Id f = g.ffn(ln2, g.ffn_params(prefix + ".ffn"), cfg.activation);
  return g.add(x, dropout(g, f, cfg.dropout, rng));
}

Graph::Id encoder_stack(Graph& g, Graph::Id x, Graph::Id pos, const PolicyConfig& cfg,
                        Rng* rng) {
  for (std::size_t l = 0; l < cfg.enc_layers; ++l) {
    x = encoder_block(g, x, pos, "enc." + std::to_string(l), cfg, rng);
  }
  return norm(g, x, "enc.norm", cfg.ln_eps);
}

Graph::Id decoder_stack(Graph& g, Graph::Id memory, Graph::Id enc_pos,
                        const PolicyConfig& cfg, Rng* rng) {
  const auto att = cfg.attention();
  const Graph::Id dec_pos = g.param("pos.dec");
  Graph::Id y = g.input(Tensor({cfg.horizon, cfg.model_dim}));
  for (std::size_t l = 0; l < cfg.dec_layers; ++l) {
    const std::string p = "dec." + std::to_string(l);
    const Graph::Id ln1 = norm(g, y, p + ".ln1", cfg.ln_eps);
    const Graph::Id qk = g.add(ln1, dec_pos);
    const Graph::Id self = g.attention(qk, qk, ln1, att, g.attention_params(p + ".self"));
    y = g.add(y, dropout(g, self, cfg.dropout, rng));

    const Graph::Id ln2 = norm(g, y, p + ".ln2", cfg.ln_eps);
    const Graph::Id q = g.add(ln2, dec_pos);
    const Graph::Id mem = norm(g, memory, p + ".ln_mem", cfg.ln_eps);
    const Graph::Id k = g.add(mem, enc_pos);
    const Graph::Id cross = g.attention(q, k, mem, att, g.attention_params(p + ".cross"));
    y = g.add(y, dropout(g, cross, cfg.dropout, rng));

    const Graph::Id ln3 = norm(g, y, p + ".ln3", cfg.ln_eps);
    const Graph::Id f = g.ffn(ln3, g.ffn_params(p + ".ffn"), cfg.activation);
    y = g.add(y, dropout(g, f, cfg.dropout, rng));
  }
  return norm(g, y, "dec.norm", cfg.ln_eps);
}

Tensor row_tensor(std::span<const double> v) {
  return Tensor({1, v.size()}, std::vector<double>(v.begin(), v.end()));
}

void check_inputs(const ModalityInputs& inp, const PolicyConfig& cfg) {
  if (inp.instruction_embedding.size() != cfg.model_dim) {
    throw ConfigError("policy: instruction embedding has dim " +
                      std::to_string(inp.instruction_embedding.size()) +
                      ", model dim is " + std::to_string(cfg.model_dim));
  }
  if (inp.state.size() != cfg.state_dim) {
    throw DimensionError("policy: state dim " + std::to_string(inp.state.size()) +
                         " != " + std::to_string(cfg.state_dim));
  }
  if (inp.env.size() != cfg.env_dim) {
    throw DimensionError("policy: env dim " + std::to_string(inp.env.size()) +
                         " != " + std::to_string(cfg.env_dim));
  }
  require_shape(inp.image_features,
                {cfg.image_channels, cfg.image_height, cfg.image_width},
                "policy image features");
}

// [C, Hf, Wf] feature map -> [Hf*Wf, C] token rows.
Tensor image_tokens(const Tensor& features) {
  const std::size_t c = features.dim(0), h = features.dim(1), w = features.dim(2);
  Tensor out({h * w, c});
  for (std::size_t ch = 0; ch < c; ++ch) {
    for (std::size_t j = 0; j < h; ++j) {
      for (std::size_t i = 0; i < w; ++i) {
        out(j * w + i, ch) = features[(ch * h + j) * w + i];
      }
    }
  }
  return out;
}

struct Assembled {
  Graph::Id tokens;
  Graph::Id positional;
};

Assembled build_tokens(Graph& g, const ModalityInputs& inp, Graph::Id latent,
                       const PolicyConfig& cfg) {
  check_inputs(inp, cfg);
  const Graph::Id lat = g.linear(latent, g.linear_params("in.latent"));
  const Graph::Id state = g.linear(g.input(row_tensor(inp.state)), g.linear_params("in.state"));
  const Graph::Id env = g.linear(g.input(row_tensor(inp.env)), g.linear_params("in.env"));
  const Graph::Id lang = g.input(row_tensor(inp.instruction_embedding));
  const Graph::Id img =
      g.linear(g.input(image_tokens(inp.image_features)), g.linear_params("in.image"));
  const Graph::Id parts[] = {lat, state, env, lang, img};
  const Graph::Id tokens = g.concat_rows(parts);
  const Graph::Id pos_parts[] = {
      g.param("pos.enc"),
      g.input(nn::sinusoidal_pe_2d(cfg.image_height, cfg.image_width, cfg.model_dim))};
  return Assembled{tokens, g.concat_rows(pos_parts)};
}

void check_finite_or_throw(double loss, const ParameterStore& theta,
                           const ParameterStore& grads) {
  bool finite = std::isfinite(loss);
  for (const auto& [name, t] : theta) {
    if (!t.all_finite()) {
      throw NumericError("training loss: parameter '" + name + "' is non-finite", name);
    }
  }
  for (const auto& [name, t] : grads) {
    if (!t.all_finite()) {
      throw NumericError("training loss: gradient of '" + name + "' is non-finite", name);
    }
  }
  if (!finite) throw NumericError("training loss: non-finite loss", "loss");
}

}  // namespace

void PolicyConfig::validate() const {
  if (model_dim == 0) throw ConfigError("policy: D must be >= 1");
  (void)attention();
  if (dec_layers == 0) throw ConfigError("policy: L_dec must be >= 1");
  if (horizon == 0) throw ConfigError("policy: H_train must be >= 1");
  if (action_dim == 0 || latent_dim == 0 || ffn_width == 0) {
    throw ConfigError("policy: d_act, d_z and ffn_width must be >= 1");
  }
  if (model_dim % 4 != 0) {
    throw ConfigError("policy: D must be a multiple of 4 for 2D positional tables");
  }
  if (dropout < 0.0 || dropout >= 1.0) throw ConfigError("policy: dropout in [0,1)");
  if (kl_weight < 0.0) throw ConfigError("policy: kl_weight must be >= 0");
  if (image_channels == 0 || image_height == 0 || image_width == 0) {
    throw ConfigError("policy: image feature grid must be non-empty");
  }
}

KeyValueConfig PolicyConfig::to_config() const {
  KeyValueConfig c;
  auto put = [&c](const char* k, std::size_t v) {
    c.set(k, static_cast<std::int64_t>(v));
  };
  put("D", model_dim);
  put("heads", heads);
  put("L_enc", enc_layers);
  put("L_dec", dec_layers);
  put("H_train", horizon);
  put("d_act", action_dim);
  put("d_z", latent_dim);
  put("ffn_width", ffn_width);
  c.set("activation", std::string(nn::activation_name(activation)));
  c.set("dropout", dropout);
  c.set("kl_weight", kl_weight);
  c.set("ln_eps", ln_eps);
  put("state_dim", state_dim);
  put("env_dim", env_dim);
  put("image_channels", image_channels);
  put("image_height", image_height);
  put("image_width", image_width);
  return c;
}

PolicyConfig PolicyConfig::from_config(const KeyValueConfig& s) {
  PolicyConfig c;
  c.model_dim = s.get_size("D", c.model_dim);
  c.heads = s.get_size("heads", c.heads);
  c.enc_layers = s.get_size("L_enc", c.enc_layers);
  c.dec_layers = s.get_size("L_dec", c.dec_layers);
  c.horizon = s.get_size("H_train", c.horizon);
  c.action_dim = s.get_size("d_act", c.action_dim);
  c.latent_dim = s.get_size("d_z", c.latent_dim);
  c.ffn_width = s.get_size("ffn_width", 4 * c.model_dim);
  c.activation = nn::parse_activation(s.get_string("activation", "relu"));
  c.dropout = s.get_double("dropout", c.dropout);
  c.kl_weight = s.get_double("kl_weight", c.kl_weight);
  c.ln_eps = s.get_double("ln_eps", c.ln_eps);
  c.state_dim = s.get_size("state_dim", c.state_dim);
  c.env_dim = s.get_size("env_dim", c.env_dim);
  c.image_channels = s.get_size("image_channels", c.image_channels);
  c.image_height = s.get_size("image_height", c.image_height);
  c.image_width = s.get_size("image_width", c.image_width);
  c.validate();
  return c;
}

ParameterStore init_policy(const PolicyConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  Rng rng(seed);
  ParameterStore store;
  for (const ParamSpec& spec : parameter_specs(cfg)) {
    Tensor t(spec.shape);
    if (spec.kind == InitKind::kOne) {
      t.fill(1.0);
    } else if (spec.kind == InitKind::kSinusoid) {
      t = nn::sinusoidal_pe_1d(spec.shape[0], spec.shape[1]);
    } else if (spec.kind == InitKind::kWeight) {
      const double bound = 1.0 / std::sqrt(static_cast<double>(spec.shape[0]));
      for (double& v : t.data()) v = rng.uniform(-bound, bound);
    }
    store.set(spec.name, std::move(t));
  }
  return store;
}

namespace policy_graph {

Forward build(Graph& g, const ModalityInputs& inp, Graph::Id latent,
              const PolicyConfig& cfg, Rng* dropout_rng) {
  const Assembled a = build_tokens(g, inp, latent, cfg);
  const Graph::Id memory = encoder_stack(g, a.tokens, a.positional, cfg, dropout_rng);
  const Graph::Id decoded = decoder_stack(g, memory, a.positional, cfg, dropout_rng);
  const Graph::Id actions = g.linear(decoded, g.linear_params("head.action"));
  return Forward{a.tokens, a.positional, memory, decoded, actions};
}

Posterior build_posterior(Graph& g, std::span<const double> state, const Tensor& actions,
                          const PolicyConfig& cfg) {
  if (state.size() != cfg.state_dim) {
    throw DimensionError("posterior: state dim " + std::to_string(state.size()));
  }
  require_shape(actions, {cfg.horizon, cfg.action_dim}, "posterior actions");
  const Graph::Id cls = g.param("post.cls");
  const Graph::Id st = g.linear(g.input(row_tensor(state)), g.linear_params("post.state"));
  const Graph::Id act = g.linear(g.input(actions), g.linear_params("post.action"));
  const Graph::Id parts[] = {cls, st, act};
  const Graph::Id seq = g.concat_rows(parts);
  Graph::Id h = encoder_block(g, seq, g.param("post.pos"), "post.layer", cfg, nullptr);
  h = norm(g, h, "post.norm", cfg.ln_eps);
  const Graph::Id head = g.linear(g.slice_rows(h, 0, 1), g.linear_params("post.head"));
  return Posterior{g.slice_cols(head, 0, cfg.latent_dim),
                   g.slice_cols(head, cfg.latent_dim, cfg.latent_dim)};
}

}  // namespace policy_graph

EncoderMemory assemble_tokens(const ModalityInputs& inp, const ParameterStore& theta,
                              const PolicyConfig& cfg) {
  cfg.validate();
  if (inp.latent.size() != cfg.latent_dim) {
    throw DimensionError("policy: latent dim " + std::to_string(inp.latent.size()));
  }
  Graph g(&theta);
  const Assembled a = build_tokens(g, inp, g.input(row_tensor(inp.latent)), cfg);
  EncoderMemory mem{g.value(a.tokens), g.value(a.positional), TokenLayout{}};
  mem.layout.image_count = cfg.image_tokens();
  return mem;
}

Tensor encode(const EncoderMemory& mem, const ParameterStore& theta,
              const PolicyConfig& cfg) {
  if (mem.tokens.rows() != mem.layout.size()) {
    throw DimensionError("encode: token count does not match layout");
  }
  Graph g(&theta);
  const Graph::Id out =
      encoder_stack(g, g.input(mem.tokens), g.input(mem.positional), cfg, nullptr);
  return g.value(out);
}

Tensor decode(const Tensor& memory, const Tensor& positional, const ParameterStore& theta,
              const PolicyConfig& cfg) {
  Graph g(&theta);
  const Graph::Id out =
      decoder_stack(g, g.input(memory), g.input(positional), cfg, nullptr);
  return g.value(out);
}

ActionChunk action_head(const Tensor& y_final, const ParameterStore& theta) {
  const nn::LinearParams p{theta.get("head.action.weight"), theta.get("head.action.bias")};
  return ActionChunk{nn::linear(y_final, p)};
}

LatentPosterior posterior_encode(std::span<const double> state, const ActionChunk& actions,
                                 const ParameterStore& theta, const PolicyConfig& cfg) {
  if (actions.horizon() != cfg.horizon) {
    throw DimensionError("posterior: chunk horizon " +
                         std::to_string(actions.horizon()) + " != H_train " +
                         std::to_string(cfg.horizon));
  }
  Graph g(&theta);
  const auto post = policy_graph::build_posterior(g, state, actions.actions, cfg);
  const Tensor& mu = g.value(post.mu);
  const Tensor& lv = g.value(post.log_var);
  return LatentPosterior{std::vector<double>(mu.data().begin(), mu.data().end()),
                         std::vector<double>(lv.data().begin(), lv.data().end())};
}

std::vector<double> sample_latent(const LatentPosterior& q, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> z(q.mu.size());
  for (std::size_t i = 0; i < z.size(); ++i) {
    z[i] = q.mu[i] + std::exp(0.5 * q.log_var[i]) * rng.normal();
  }
  return z;
}

double gaussian_kl(const LatentPosterior& q) {
  double kl = 0.0;
  for (std::size_t i = 0; i < q.mu.size(); ++i) {
    kl += q.mu[i] * q.mu[i] + std::exp(q.log_var[i]) - q.log_var[i] - 1.0;
  }
  return 0.5 * kl;
}

TrainingLoss training_loss(std::span<const TrainingExample> batch,
                           const ParameterStore& theta, const PolicyConfig& cfg,
                           std::uint64_t rng_seed) {
  if (batch.empty()) throw DataError("training_loss: empty batch");
  cfg.validate();
  TrainingLoss out;
  out.grads = theta.zeros_like();
  const double inv_batch = 1.0 / static_cast<double>(batch.size());
  Rng dropout_rng(mix_seed(rng_seed, 0xd50));
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const TrainingExample& ex = batch[b];
    require_shape(ex.target.actions, {cfg.horizon, cfg.action_dim}, "training target");
    require_finite(ex.target.actions, "training target");
    Graph g(&theta);
    const auto post = policy_graph::build_posterior(g, ex.inputs.state, ex.target.actions, cfg);
    Rng noise_rng(mix_seed(rng_seed, b));
    Tensor noise({1, cfg.latent_dim});
    for (double& v : noise.data()) v = noise_rng.normal();
    const Graph::Id z = g.reparameterize(post.mu, post.log_var, noise);
    const auto fwd = policy_graph::build(g, ex.inputs, z, cfg, &dropout_rng);
    const Graph::Id chunk = g.mean_row_squared_error(fwd.actions, ex.target.actions);
    const Graph::Id kl = g.gaussian_kl(post.mu, post.log_var);
    const Graph::Id total = g.add(chunk, g.scale(kl, cfg.kl_weight));
    g.backward(total);
    g.accumulate_parameter_grads(out.grads, inv_batch);
    out.chunk_loss += g.value(chunk)[0] * inv_batch;
    out.kl += g.value(kl)[0] * inv_batch;
    out.loss += g.value(total)[0] * inv_batch;
  }
  check_finite_or_throw(out.loss, theta, out.grads);
  return out;
}

ActionChunk infer(const ModalityInputs& inp, const ParameterStore& theta,
                  const PolicyConfig& cfg) {
  Graph g(&theta);
  const Graph::Id z = g.input(Tensor({1, cfg.latent_dim}));
  const auto fwd = policy_graph::build(g, inp, z, cfg, nullptr);
  return ActionChunk{g.value(fwd.actions)};
}

}  // namespace nanovla
