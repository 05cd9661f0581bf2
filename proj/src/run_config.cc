#include "nanovla/run_config.h"

#include <cstdint>

#include "nanovla/errors.h"

namespace nanovla {

namespace {

std::int64_t as_int(std::size_t v) { return static_cast<std::int64_t>(v); }

std::vector<std::size_t> sizes(const KeyValueConfig& c, const std::string& key,
                               const std::vector<std::size_t>& fallback) {
  std::vector<std::int64_t> raw(fallback.begin(), fallback.end());
  raw = c.get_ints(key, raw);
  std::vector<std::size_t> out;
  for (std::int64_t v : raw) {
    if (v < 0) throw ConfigError(key + ": negative entry " + std::to_string(v));
    out.push_back(static_cast<std::size_t>(v));
  }
  return out;
}

}  // namespace

EnvConfig env_config_from(const KeyValueConfig& s) {
  EnvConfig e;
  e.delta = s.get_double("delta", e.delta);
  e.grasp_radius = s.get_double("grasp_radius", e.grasp_radius);
  e.episode_cap = s.get_size("episode_cap", e.episode_cap);
  e.image_size = s.get_size("image_size", e.image_size);
  e.blob_sigma = s.get_double("blob_sigma", e.blob_sigma);
  e.brightness = s.get_double("brightness", e.brightness);
  e.validate();
  return e;
}

KeyValueConfig env_config_to(const EnvConfig& e) {
  KeyValueConfig c;
  c.set("delta", e.delta);
  c.set("grasp_radius", e.grasp_radius);
  c.set("episode_cap", as_int(e.episode_cap));
  c.set("image_size", as_int(e.image_size));
  c.set("blob_sigma", e.blob_sigma);
  c.set("brightness", e.brightness);
  return c;
}

TrainConfig train_config_from(const KeyValueConfig& s) {
  TrainConfig t;
  t.steps = s.get_size("steps", t.steps);
  t.batch = s.get_size("batch", t.batch);
  t.sgd.lr = s.get_double("lr", t.sgd.lr);
  t.sgd.momentum = s.get_double("momentum", t.sgd.momentum);
  t.sgd.clip_norm = s.get_double("clip_norm", t.sgd.clip_norm);
  t.sgd.final_lr_fraction = s.get_double("final_lr_fraction", t.sgd.final_lr_fraction);
  t.seed = static_cast<std::uint64_t>(s.get_int("seed", static_cast<std::int64_t>(t.seed)));
  if (t.batch == 0) throw ConfigError("train.batch must be >= 1");
  t.sgd.validate();
  return t;
}

KeyValueConfig train_config_to(const TrainConfig& t) {
  KeyValueConfig c;
  c.set("steps", as_int(t.steps));
  c.set("batch", as_int(t.batch));
  c.set("lr", t.sgd.lr);
  c.set("momentum", t.sgd.momentum);
  c.set("clip_norm", t.sgd.clip_norm);
  c.set("final_lr_fraction", t.sgd.final_lr_fraction);
  c.set("seed", static_cast<std::int64_t>(t.seed));
  return c;
}

CostModel cost_model_from(const KeyValueConfig& s) {
  CostModel m;
  m.c_vis = s.get_double("c_vis", m.c_vis);
  m.c_lang = s.get_double("c_lang", m.c_lang);
  m.c_dec = s.get_double("c_dec", m.c_dec);
  m.c_act = s.get_double("c_act", m.c_act);
  m.validate();
  return m;
}

PolicyRecipe recipe_from_config(const KeyValueConfig& cfg) {
  PolicyRecipe r;
  r.policy = PolicyConfig::from_config(cfg.section("policy"));
  r.train = train_config_from(cfg.section("train"));
  r.env = env_config_from(cfg.section("env"));
  const KeyValueConfig data = cfg.section("data");
  r.simple_tasks = data.get_size("simple_tasks", r.simple_tasks);
  r.disturbance_tasks = data.get_size("disturbance_tasks", r.disturbance_tasks);
  r.task_seed = static_cast<std::uint64_t>(data.get_int("task_seed", r.task_seed));
  r.disturbance_seed =
      static_cast<std::uint64_t>(data.get_int("disturbance_seed", r.disturbance_seed));
  r.init_seed = static_cast<std::uint64_t>(cfg.get_int("init.seed", r.init_seed));
  r.image_seed = static_cast<std::uint64_t>(cfg.get_int("stubs.image_seed", r.image_seed));
  r.language_seed =
      static_cast<std::uint64_t>(cfg.get_int("stubs.language_seed", r.language_seed));
  return r;
}

KeyValueConfig recipe_to_config(const PolicyRecipe& r) {
  KeyValueConfig c;
  c.merge(r.policy.to_config(), "policy");
  c.merge(train_config_to(r.train), "train");
  c.merge(env_config_to(r.env), "env");
  c.set("data.simple_tasks", as_int(r.simple_tasks));
  c.set("data.disturbance_tasks", as_int(r.disturbance_tasks));
  c.set("data.task_seed", static_cast<std::int64_t>(r.task_seed));
  c.set("data.disturbance_seed", static_cast<std::int64_t>(r.disturbance_seed));
  c.set("init.seed", static_cast<std::int64_t>(r.init_seed));
  c.set("stubs.image_seed", static_cast<std::int64_t>(r.image_seed));
  c.set("stubs.language_seed", static_cast<std::int64_t>(r.language_seed));
  return c;
}

ExecutorConfig executor_from_config(const KeyValueConfig& s, std::size_t horizon) {
  ExecutorConfig e;
  e.horizon = horizon;
  e.mode = parse_chunk_mode(s.get_string("mode", chunk_mode_name(e.mode)));
  e.window = e.mode == ChunkMode::kFixed ? horizon : s.get_size("window", e.window);
  e.max_steps = s.get_size("max_steps", e.max_steps);
  e.validate();
  return e;
}

ChunkingBenchConfig chunking_from_config(const KeyValueConfig& cfg) {
  ChunkingBenchConfig b;
  b.recipe = recipe_from_config(cfg);
  const KeyValueConfig s = cfg.section("chunking");
  b.long_horizon = s.get_size("long_horizon", b.long_horizon);
  b.step_sizes = sizes(s, "step_sizes", b.step_sizes);
  b.suite = s.get_string("suite", b.suite);
  b.eval_tasks = s.get_size("eval_tasks", b.eval_tasks);
  b.eval_seed = static_cast<std::uint64_t>(s.get_int("eval_seed", b.eval_seed));
  b.episode_cap = s.get_size("episode_cap", b.episode_cap);
  b.costs = cost_model_from(cfg.section("costs"));
  return b;
}

RouteSweepConfig route_sweep_from_config(const KeyValueConfig& s) {
  RouteSweepConfig r;
  r.taus = s.get_doubles("taus", {0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 0.95, 1.0});
  r.fit.epochs = s.get_size("epochs", r.fit.epochs);
  r.fit.lr = s.get_double("lr", r.fit.lr);
  r.fit.seed = static_cast<std::uint64_t>(s.get_int("fit_seed", r.fit.seed));
  r.fit.batch = s.get_size("batch", r.fit.batch);
  r.alpha0 = s.get_double("alpha0", r.alpha0);
  r.beta0 = s.get_double("beta0", r.beta0);
  r.clip_eps = s.get_double("clip_eps", r.clip_eps);
  r.feature_dim = s.get_size("feature_dim", r.feature_dim);
  const std::string rule = s.get_string("rule", "as_written");
  if (rule == "as_written") {
    r.rule = EscalationRule::kAsWritten;
  } else if (rule == "margin") {
    r.rule = EscalationRule::kMargin;
  } else {
    throw ConfigError("route.rule: expected as_written or margin, got '" + rule + "'");
  }
  r.model_sizes = {{r.light_id, s.get_double("light_size", 161.0)},
                   {r.heavy_id, s.get_double("heavy_size", 520.0)}};
  return r;
}

}  // namespace nanovla
