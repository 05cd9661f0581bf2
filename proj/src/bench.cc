#include "nanovla/bench.h"

#include <algorithm>
#include <chrono>

#include "nanovla/config.h"
#include "nanovla/errors.h"
#include "nanovla/rng.h"

namespace nanovla {

SuccessReport evaluate_suite(const Planner& planner, const std::vector<TaskSpec>& tasks,
                             const EnvConfig& env, const Perception& perception,
                             const ExecutorConfig& exec, std::size_t episodes_per_task) {
  SuccessReport report;
  std::size_t plans = 0;
  for (const TaskSpec& task : tasks) {
    std::size_t ok = 0;
    for (std::size_t e = 0; e < episodes_per_task; ++e) {
      Environment environment(task, env);
      const EpisodeTrace trace = run_episode(environment, planner, perception, exec);
      ok += trace.success ? 1 : 0;
      plans += trace.plans;
    }
    report.task_ids.push_back(task.id);
    report.successes.push_back(ok);
    report.episodes.push_back(episodes_per_task);
    report.total_success += ok;
    report.total_episodes += episodes_per_task;
  }
  if (report.total_episodes) {
    report.mean_plans = static_cast<double>(plans) / static_cast<double>(report.total_episodes);
  }
  return report;
}

Stubs make_stubs(const PolicyRecipe& r) {
  const PolicyConfig& p = r.policy;
  const std::size_t side = r.env.image_size;
  return Stubs{ImageEncoderStub({3, side, side}, p.image_channels, p.image_height,
                                p.image_width, r.image_seed),
               LanguageEncoderStub(p.model_dim, r.language_seed)};
}

TrainedPolicy train_recipe(const PolicyRecipe& r, std::size_t horizon,
                           const std::function<void(const TrainRecord&)>& on_step) {
  TrainedPolicy out;
  out.config = r.policy;
  out.config.horizon = horizon;
  out.config.validate();
  const Stubs stubs = make_stubs(r);
  std::vector<TaskSpec> tasks = make_suite("simple", r.simple_tasks, r.task_seed);
  const std::vector<TaskSpec> disturbed =
      make_suite("disturbance", r.disturbance_tasks, r.disturbance_seed);
  tasks.insert(tasks.end(), disturbed.begin(), disturbed.end());
  const Dataset ds = build_dataset(tasks, r.env, stubs.image, stubs.language, horizon, 1,
                                   out.config.latent_dim);
  out.examples = ds.examples.size();
  out.theta = init_policy(out.config, r.init_seed);
  train_policy(out.theta, out.config, ds.examples, r.train, [&](const TrainRecord& rec) {
    out.history.push_back(rec);
    if (on_step) on_step(rec);
  });
  return out;
}

namespace {

ChunkingRow evaluate_chunking(const TrainedPolicy& policy, const ExecutorConfig& exec,
                              const std::vector<TaskSpec>& tasks, const EnvConfig& env,
                              const Stubs& stubs, const CostModel& costs) {
  InstructionCache cache(64);
  const Perception perception{&stubs.image, &stubs.language, &cache, costs,
                              policy.config.latent_dim};
  const SuccessReport report =
      evaluate_suite(policy_planner(policy.theta, policy.config), tasks, env, perception, exec);
  return ChunkingRow{exec.window, exec.mode, report.rate(), report.total_episodes,
                     throughput_model(exec, costs, costs.c_vis + costs.c_dec)};
}

}  // namespace

ChunkingBenchResult bench_chunking(const ChunkingBenchConfig& cfg,
                                   const std::function<void(const std::string&)>& log,
                                   const TrainedPolicy* long_policy) {
  if (long_policy && long_policy->config.horizon != cfg.long_horizon) {
    throw ConfigError("bench chunking: supplied policy has H_train=" +
                      std::to_string(long_policy->config.horizon) + ", expected " +
                      std::to_string(cfg.long_horizon));
  }
  if (cfg.step_sizes.empty()) throw ConfigError("bench chunking: no step sizes");
  for (std::size_t s : cfg.step_sizes) {
    if (s == 0 || s > cfg.long_horizon) {
      throw ConfigError("bench chunking: step size " + std::to_string(s) +
                        " outside [1, " + std::to_string(cfg.long_horizon) + "]");
    }
  }
  auto say = [&](const std::string& msg) {
    if (log) log(msg);
  };
  EnvConfig eval_env = cfg.recipe.env;
  eval_env.episode_cap = cfg.episode_cap;
  const std::vector<TaskSpec> tasks = make_suite(cfg.suite, cfg.eval_tasks, cfg.eval_seed);
  const Stubs stubs = make_stubs(cfg.recipe);

  ChunkingBenchResult result;
  auto timed_train = [&](std::size_t horizon) {
    const auto start = std::chrono::steady_clock::now();
    TrainedPolicy p = train_recipe(cfg.recipe, horizon);
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    say("trained H=" + std::to_string(horizon) + " on " + std::to_string(p.examples) +
        " examples in " + format_double(secs) + "s, final chunk loss " +
        format_double(p.history.empty() ? 0.0 : p.history.back().chunk_loss));
    return p;
  };

  result.long_policy = long_policy ? *long_policy : timed_train(cfg.long_horizon);
  for (std::size_t h : cfg.step_sizes) {
    const ExecutorConfig exec{cfg.long_horizon, h, ChunkMode::kLongShort, cfg.episode_cap};
    result.rows.push_back(
        evaluate_chunking(result.long_policy, exec, tasks, eval_env, stubs, cfg.costs));
    say("long_short h=" + std::to_string(h) + " SR " + format_double(result.rows.back().success_rate));
  }
  for (std::size_t s : cfg.step_sizes) {
    const TrainedPolicy own = s == cfg.long_horizon ? result.long_policy : timed_train(s);
    result.rows.push_back(evaluate_chunking(own, ExecutorConfig::fixed(s, cfg.episode_cap),
                                            tasks, eval_env, stubs, cfg.costs));
    say("fixed chunk=" + std::to_string(s) + " SR " + format_double(result.rows.back().success_rate));
  }
  if (std::find(cfg.step_sizes.begin(), cfg.step_sizes.end(), cfg.long_horizon) ==
      cfg.step_sizes.end()) {
    result.rows.push_back(evaluate_chunking(result.long_policy,
                                            ExecutorConfig::fixed(cfg.long_horizon, cfg.episode_cap),
                                            tasks, eval_env, stubs, cfg.costs));
    say("fixed chunk=" + std::to_string(cfg.long_horizon) + " SR " +
        format_double(result.rows.back().success_rate));
  }
  return result;
}

std::string chunking_csv_header() { return "mode,step_size,success_rate,episodes,control_frequency"; }

std::string chunking_csv_row(const ChunkingRow& r) {
  return std::string(chunk_mode_name(r.mode)) + "," + std::to_string(r.step_size) + "," +
         format_double(r.success_rate) + "," + std::to_string(r.episodes) + "," +
         format_double(r.control_frequency);
}

std::vector<CacheBenchRow> bench_cache(const StubPipeline& pipeline,
                                       const std::vector<std::size_t>& steps,
                                       std::size_t repeats, CostModel* calibrated) {
  const CostModel m = calibrate_cost_model(pipeline, std::max<std::size_t>(repeats * 4, 9));
  if (calibrated) *calibrated = m;
  std::vector<CacheBenchRow> rows;
  for (std::size_t t : steps) {
    const double uncached = measure_episode_ns(pipeline, t, false, repeats);
    const double cached = measure_episode_ns(pipeline, t, true, repeats);
    rows.push_back(CacheBenchRow{t, speedup(t, m), uncached / cached});
  }
  return rows;
}

std::vector<TrialRecord> simulate_trials(const std::vector<PlantedTask>& population,
                                         std::int64_t trials_per_model, std::uint64_t seed,
                                         const std::string& light_id,
                                         const std::string& heavy_id) {
  if (trials_per_model < 0) throw ConfigError("simulate_trials: negative trial count");
  Rng rng(seed);
  std::vector<TrialRecord> out;
  for (const PlantedTask& task : population) {
    for (const auto& [model, p] : {std::pair{light_id, task.p_light},
                                   std::pair{heavy_id, task.p_heavy}}) {
      TrialRecord r{model, task.spec.id, 0, trials_per_model};
      for (std::int64_t k = 0; k < trials_per_model; ++k) r.successes += rng.uniform() < p;
      out.push_back(std::move(r));
    }
  }
  return out;
}

namespace {

struct Scored {
  double sr = 0.0;
  double params = 0.0;
  double heavy = 0.0;
};

Scored score(const std::vector<std::string>& decisions, const std::vector<PlantedTask>& pop,
             const RouteSweepConfig& cfg) {
  Scored s;
  for (std::size_t i = 0; i < pop.size(); ++i) {
    const bool heavy = decisions[i] == cfg.heavy_id;
    s.sr += heavy ? pop[i].p_heavy : pop[i].p_light;
    s.heavy += heavy ? 1.0 : 0.0;
  }
  s.sr /= static_cast<double>(pop.size());
  s.heavy /= static_cast<double>(pop.size());
  s.params = expected_params(decisions, cfg.model_sizes);
  return s;
}

}  // namespace

RouteSweepResult route_sweep(const std::vector<PlantedTask>& population,
                             const std::vector<TrialRecord>& trials,
                             const RouteSweepConfig& cfg) {
  if (population.empty()) throw ConfigError("route sweep: empty task population");
  std::map<std::pair<std::string, std::string>, TrialRecord> by_key;
  for (const TrialRecord& r : trials) {
    auto [it, fresh] = by_key.emplace(std::pair{r.task_id, r.model_id}, r);
    if (!fresh) {
      it->second.successes += r.successes;
      it->second.trials += r.trials;
    }
  }
  auto record = [&](const std::string& task, const std::string& model) {
    auto it = by_key.find({task, model});
    return it == by_key.end() ? TrialRecord{model, task, 0, 0} : it->second;
  };

  std::vector<std::vector<double>> features;
  std::vector<PairwiseTarget> targets;
  std::vector<std::string> task_ids;
  const std::vector<std::string> models{cfg.light_id, cfg.heavy_id};
  for (std::size_t t = 0; t < population.size(); ++t) {
    const TaskSpec& spec = population[t].spec;
    task_ids.push_back(spec.id);
    features.push_back(hash_features(spec.instruction, cfg.feature_dim));
    const BetaPosterior light =
        posterior_from_trials(record(spec.id, cfg.light_id), cfg.alpha0, cfg.beta0);
    const BetaPosterior heavy =
        posterior_from_trials(record(spec.id, cfg.heavy_id), cfg.alpha0, cfg.beta0);
    const double p = win_prob(heavy, light, 100000, mix_seed(cfg.fit.seed, t));
    targets.push_back(PairwiseTarget{t, 1, 0, clip_target(p, cfg.clip_eps)});
    targets.push_back(PairwiseTarget{t, 0, 1, clip_target(1.0 - p, cfg.clip_eps)});
  }

  RouteSweepResult result;
  result.model = fit_pairwise(features, models, targets, cfg.fit).model;
  for (const PlantedTask& p : population) {
    result.light_only_sr += p.p_light;
    result.heavy_only_sr += p.p_heavy;
    result.oracle_sr += std::max(p.p_light, p.p_heavy);
  }
  const double n = static_cast<double>(population.size());
  result.light_only_sr /= n;
  result.heavy_only_sr /= n;
  result.oracle_sr /= n;

  for (double tau : cfg.taus) {
    RoutePolicy policy{tau, cfg.light_id, cfg.heavy_id, cfg.rule};
    std::vector<std::string> mcb;
    for (const auto& phi : features) mcb.push_back(route(phi, result.model, policy));
    const Scored a = score(mcb, population, cfg);
    result.rows.push_back(RouteSweepRow{"mcb", tau, a.sr, a.params, a.heavy});
    const Scored b = score(route_naive_sr(trials, task_ids, policy), population, cfg);
    result.rows.push_back(RouteSweepRow{"naive", tau, b.sr, b.params, b.heavy});
  }
  return result;
}

}  // namespace nanovla
