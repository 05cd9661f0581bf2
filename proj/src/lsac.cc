#include "nanovla/lsac.h"

#include <memory>
#include <ostream>

#include "nanovla/config.h"
#include "nanovla/errors.h"
#include "nanovla/rng.h"

namespace nanovla {

const char* chunk_mode_name(ChunkMode m) {
  return m == ChunkMode::kLongShort ? "long_short" : "fixed";
}

ChunkMode parse_chunk_mode(const std::string& name) {
  if (name == "long_short") return ChunkMode::kLongShort;
  if (name == "fixed") return ChunkMode::kFixed;
  throw ConfigError("unknown chunk mode '" + name + "'");
}

void ExecutorConfig::validate() const {
  if (horizon == 0 || window == 0 || window > horizon) {
    throw ConfigError("executor: need 1 <= h <= H_train (h=" + std::to_string(window) +
                      ", H_train=" + std::to_string(horizon) + ")");
  }
  if (mode == ChunkMode::kFixed && window != horizon) {
    throw ConfigError("executor: fixed mode requires h == H_train");
  }
  if (max_steps == 0) throw ConfigError("executor: max_steps must be >= 1");
}

ExecutorConfig ExecutorConfig::fixed(std::size_t chunk, std::size_t max_steps) {
  return ExecutorConfig{chunk, chunk, ChunkMode::kFixed, max_steps};
}

std::string EpisodeTrace::csv_header() {
  return "t,observation_digest,plan_id,index_in_plan,dx,dy,gripper,success,failure,"
         "cache_hit,cost";
}

void EpisodeTrace::write_csv(std::ostream& out) const {
  out << csv_header() << '\n';
  for (const TraceStep& s : steps) {
    out << s.t << ',' << s.observation_digest << ',' << s.plan_id << ',' << s.index_in_plan
        << ',' << format_double(s.action[0]) << ',' << format_double(s.action[1]) << ','
        << format_double(s.action[2]) << ',' << s.success << ',' << s.failure << ','
        << s.cache_hit << ',' << format_double(s.cost) << '\n';
  }
}

EpisodeTrace run_episode(Environment& env, const Planner& planner, const Perception& p,
                         const ExecutorConfig& cfg) {
  cfg.validate();
  if (p.image == nullptr || p.language == nullptr || p.cache == nullptr) {
    throw ConfigError("executor: perception needs image stub, language stub and cache");
  }
  EpisodeTrace trace;
  std::size_t t = 0;
  bool done = env.done();
  while (!done && t < cfg.max_steps) {
    const Observation obs = env.observe();
    const CacheLookup lang = p.cache->get_or_encode(env.task().instruction, *p.language);
    ModalityInputs inputs{obs.proprio, obs.env, lang.embedding, p.image->encode(obs.image),
                          std::vector<double>(p.latent_dim, 0.0)};
    const ActionChunk chunk = planner(PlanRequest{env.state(), obs, inputs});
    if (chunk.actions.rank() != 2 || chunk.horizon() != cfg.horizon ||
        chunk.actions.cols() != kActionDim) {
      throw ContractViolation("executor: planner returned chunk " +
                              shape_string(chunk.actions.shape()) + ", expected [" +
                              std::to_string(cfg.horizon) + ", 3]");
    }
    const std::size_t plan_id = trace.plans++;
    const double plan_cost =
        p.costs.c_vis + p.costs.c_dec + (lang.hit ? 0.0 : p.costs.c_lang);
    for (std::size_t k = 0; k < cfg.window; ++k) {
      if (t >= cfg.max_steps) {
        trace.truncated = true;
        break;
      }
      const Action a = denormalize_action(chunk.actions.row(k), env.config());
      TraceStep row;
      row.t = t;
      row.observation_digest = state_digest(env.state());
      StepResult r;
      try {
        r = env.step(a);
      } catch (const std::exception& e) {
        throw std::runtime_error("executor: env step " + std::to_string(t) + " failed: " +
                                 e.what());
      }
      row.plan_id = plan_id;
      row.index_in_plan = k;
      row.action = a;
      row.success = r.success;
      row.failure = r.failure;
      row.cache_hit = lang.hit;
      row.cost = (k == 0 ? plan_cost : 0.0) + p.costs.c_act;
      trace.steps.push_back(row);
      ++t;
      if (r.success || r.failure) {
        trace.success = r.success;
        trace.failure = r.failure;
        done = true;
        break;
      }
    }
  }
  return trace;
}

double replan_ratio(const ExecutorConfig& cfg) {
  cfg.validate();
  return static_cast<double>(cfg.window) / static_cast<double>(cfg.horizon);
}

double throughput_model(const ExecutorConfig& cfg, const CostModel& m, double plan_latency) {
  cfg.validate();
  m.validate();
  if (!(plan_latency >= 0.0)) throw ConfigError("throughput: plan latency must be >= 0");
  const double h = static_cast<double>(cfg.window);
  const double denom = plan_latency + h * m.c_act;
  if (denom <= 0.0) throw NumericError("throughput: zero latency and zero step cost");
  return h / denom;
}

Planner policy_planner(const ParameterStore& theta, const PolicyConfig& cfg) {
  return [&theta, cfg](const PlanRequest& req) { return infer(req.inputs, theta, cfg); };
}

Planner expert_planner(std::size_t horizon, const EnvConfig& env) {
  return [horizon, env](const PlanRequest& req) {
    return ActionChunk{expert_chunk(req.state, env, horizon)};
  };
}

Planner random_planner(std::size_t horizon, std::uint64_t seed) {
  auto rng = std::make_shared<Rng>(seed);
  return [horizon, rng](const PlanRequest&) {
    ActionChunk chunk{Tensor({horizon, kActionDim})};
    for (double& v : chunk.actions.data()) v = rng->uniform(-1.0, 1.0);
    return chunk;
  };
}

}  // namespace nanovla
