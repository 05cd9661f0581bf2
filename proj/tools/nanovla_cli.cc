#include <spdlog/spdlog.h>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "nanovla/bench.h"
#include "nanovla/cache.h"
#include "nanovla/config.h"
#include "nanovla/csv.h"
#include "nanovla/errors.h"
#include "nanovla/io.h"
#include "nanovla/lsac.h"
#include "nanovla/router.h"
#include "nanovla/run_config.h"
#include "nanovla/training.h"

namespace fs = std::filesystem;

namespace nanovla {
namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

struct CommonArgs {
  std::string config;
  std::string out = ".";
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> episodes;
  std::string checkpoint;
  std::string trials;
};

KeyValueConfig load_config(const CommonArgs& a) {
  if (a.config.empty()) return {};
  if (!fs::exists(a.config)) throw ConfigError("config file not found: " + a.config);
  return KeyValueConfig::load(a.config);
}

fs::path out_dir(const CommonArgs& a) {
  fs::create_directories(a.out);
  return fs::path(a.out);
}

void require_file(const std::string& path, const std::string& what) {
  if (path.empty() || !fs::exists(path)) throw ConfigError(what + " not found: '" + path + "'");
}

void write_text(const fs::path& path, const std::string& text) {
  write_file(path.string(), text);
  spdlog::info("wrote {}", path.string());
}

TrainedPolicy load_policy(const std::string& path, PolicyRecipe* recipe) {
  require_file(path, "checkpoint");
  Checkpoint ckpt = load_checkpoint(path);
  *recipe = recipe_from_config(ckpt.manifest);
  TrainedPolicy p;
  p.config = recipe->policy;
  p.theta = std::move(ckpt.tensors);
  return p;
}

int cmd_train(const CommonArgs& a) {
  const KeyValueConfig cfg = load_config(a);
  PolicyRecipe recipe = recipe_from_config(cfg);
  if (a.seed) recipe.train.seed = *a.seed;
  const fs::path dir = out_dir(a);

  const Stubs stubs = make_stubs(recipe);
  Dataset ds;
  const std::string data_path = cfg.get_string("data.path", "");
  if (cfg.contains("data.path")) {
    const std::string index_path = cfg.get_string("data.index", data_path + ".csv");
    require_file(data_path, "dataset");
    require_file(index_path, "dataset index");
    ds = load_dataset(data_path, index_path);
    spdlog::info("loaded {} examples from {}", ds.examples.size(), data_path);
  } else {
    std::vector<TaskSpec> tasks = make_suite("simple", recipe.simple_tasks, recipe.task_seed);
    const auto disturbed =
        make_suite("disturbance", recipe.disturbance_tasks, recipe.disturbance_seed);
    tasks.insert(tasks.end(), disturbed.begin(), disturbed.end());
    const std::size_t stride = cfg.get_size("data.stride", 1);
    ds = build_dataset(tasks, recipe.env, stubs.image, stubs.language, recipe.policy.horizon,
                       stride, recipe.policy.latent_dim);
    spdlog::info("generated {} examples from {} tasks", ds.examples.size(), tasks.size());
  }

  ParameterStore theta = init_policy(recipe.policy, recipe.init_seed);
  std::ofstream curve(dir / "train_curve.csv");
  CsvWriter writer(curve, {"step", "loss", "chunk_loss", "kl", "grad_norm", "lr"});
  const auto start = std::chrono::steady_clock::now();
  const std::size_t log_every = std::max<std::size_t>(1, recipe.train.steps / 20);
  train_policy(theta, recipe.policy, ds.examples, recipe.train, [&](const TrainRecord& r) {
    writer.row({std::to_string(r.step), format_double(r.loss), format_double(r.chunk_loss),
                format_double(r.kl), format_double(r.grad_norm), format_double(r.lr)});
    if ((r.step + 1) % log_every == 0) {
      spdlog::info("step {} loss {:.5f} chunk {:.5f} kl {:.5f}", r.step + 1, r.loss,
                   r.chunk_loss, r.kl);
    }
  });
  spdlog::info("trained in {:.1f}s",
               std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
  double chunk = 0.0;
  for (const TrainingExample& ex : ds.examples) {
    const ActionChunk a = infer(ex.inputs, theta, recipe.policy);
    double se = 0.0;
    for (std::size_t i = 0; i < a.actions.size(); ++i) {
      se += (a.actions[i] - ex.target.actions[i]) * (a.actions[i] - ex.target.actions[i]);
    }
    chunk += se / static_cast<double>(a.actions.size());
  }
  spdlog::info("final chunk loss over {} examples: {:.3e}", ds.examples.size(),
               chunk / static_cast<double>(std::max<std::size_t>(1, ds.examples.size())));
  save_checkpoint((dir / "policy.ckpt").string(), Checkpoint{recipe_to_config(recipe), theta});
  spdlog::info("wrote {}", (dir / "policy.ckpt").string());
  return 0;
}

int cmd_eval(const CommonArgs& a) {
  const KeyValueConfig cfg = load_config(a);
  const KeyValueConfig ev = cfg.section("eval");
  const std::string planner_kind = ev.get_string("planner", "policy");
  const std::size_t episodes = a.episodes.value_or(ev.get_size("episodes", 50));
  const std::uint64_t seed = a.seed.value_or(static_cast<std::uint64_t>(ev.get_int("seed", 0)));

  PolicyRecipe recipe = recipe_from_config(cfg);
  TrainedPolicy policy;
  Planner planner;
  if (planner_kind == "policy") {
    const std::string path = a.checkpoint.empty() ? ev.get_string("checkpoint", "") : a.checkpoint;
    policy = load_policy(path, &recipe);
    planner = policy_planner(policy.theta, policy.config);
  } else if (planner_kind == "expert") {
    planner = expert_planner(recipe.policy.horizon, recipe.env);
  } else if (planner_kind == "random") {
    planner = random_planner(recipe.policy.horizon, seed);
  } else {
    throw ConfigError("eval.planner: expected policy, expert or random, got '" + planner_kind + "'");
  }

  EnvConfig env = recipe.env;
  env.episode_cap = ev.get_size("episode_cap", env.episode_cap);
  const ExecutorConfig exec = executor_from_config(cfg.section("exec"), recipe.policy.horizon);
  const std::vector<TaskSpec> tasks =
      make_suite(ev.get_string("suite", "simple"), ev.get_size("tasks", 20),
                 static_cast<std::uint64_t>(ev.get_int("task_seed", 999)));
  const Stubs stubs = make_stubs(recipe);
  InstructionCache cache(cfg.get_size("cache.capacity", 64));
  const Perception perception{&stubs.image, &stubs.language, &cache,
                              cost_model_from(cfg.section("costs")), recipe.policy.latent_dim};
  const SuccessReport report = evaluate_suite(planner, tasks, env, perception, exec, episodes);

  std::ofstream out(out_dir(a) / "eval.csv");
  CsvWriter writer(out, {"task_id", "successes", "episodes", "success_rate"});
  for (std::size_t i = 0; i < report.task_ids.size(); ++i) {
    writer.row({report.task_ids[i], std::to_string(report.successes[i]),
                std::to_string(report.episodes[i]),
                format_double(static_cast<double>(report.successes[i]) /
                              static_cast<double>(report.episodes[i]))});
  }
  writer.row({"mean", std::to_string(report.total_success), std::to_string(report.total_episodes),
              format_double(report.rate())});
  spdlog::info("{} planner, {} {}: SR {:.3f} over {} episodes", planner_kind,
               chunk_mode_name(exec.mode), exec.window, report.rate(), report.total_episodes);
  return 0;
}

int cmd_bench_chunking(const CommonArgs& a) {
  const KeyValueConfig cfg = load_config(a);
  ChunkingBenchConfig bench = chunking_from_config(cfg);
  if (a.episodes) bench.eval_tasks = *a.episodes;
  if (a.seed) bench.recipe.train.seed = *a.seed;
  std::optional<TrainedPolicy> pretrained;
  if (!a.checkpoint.empty()) {
    PolicyRecipe stored;
    pretrained = load_policy(a.checkpoint, &stored);
    bench.recipe.policy = stored.policy;
    bench.recipe.image_seed = stored.image_seed;
    bench.recipe.language_seed = stored.language_seed;
  }
  const fs::path dir = out_dir(a);
  const ChunkingBenchResult r = bench_chunking(
      bench, [](const std::string& msg) { spdlog::info("{}", msg); },
      pretrained ? &*pretrained : nullptr);
  std::string csv = chunking_csv_header() + "\n";
  for (const ChunkingRow& row : r.rows) csv += chunking_csv_row(row) + "\n";
  write_text(dir / "chunking.csv", csv);
  return 0;
}

int cmd_bench_cache(const CommonArgs& a) {
  const KeyValueConfig cfg = load_config(a);
  const KeyValueConfig s = cfg.section("cache");
  const ImageEncoderStub image({3, 32, 32}, 8, 2, 2, 1, s.get_double("image_units", 200.0));
  const LanguageEncoderStub language(32, 2, s.get_double("language_units", 1800.0));
  const StubPipeline pipeline{&image, &language, s.get_double("dec_units", 200.0)};
  std::vector<std::size_t> steps;
  for (std::int64_t t : s.get_ints("steps", {1, 2, 5, 10, 20, 50, 100})) {
    if (t < 1) throw ConfigError("cache.steps entries must be >= 1");
    steps.push_back(static_cast<std::size_t>(t));
  }
  const std::size_t repeats = a.episodes.value_or(s.get_size("repeats", 7));
  CostModel calibrated;
  const auto rows = bench_cache(pipeline, steps, repeats, &calibrated);
  spdlog::info("calibrated ns per call: vis {:.0f} lang {:.0f} dec {:.0f}", calibrated.c_vis,
               calibrated.c_lang, calibrated.c_dec);
  std::string csv = "T,analytic_speedup,measured_speedup\n";
  for (const CacheBenchRow& r : rows) {
    csv += std::to_string(r.steps) + "," + format_double(r.analytic_speedup) + "," +
           format_double(r.measured_speedup) + "\n";
  }
  write_text(out_dir(a) / "cache.csv", csv);
  return 0;
}

int cmd_route_fit(const CommonArgs& a) {
  const KeyValueConfig cfg = load_config(a);
  const KeyValueConfig s = cfg.section("route");
  const RouteSweepConfig sweep = route_sweep_from_config(s);
  DifficultyMix mix;
  mix.simple = s.get_double("mix.simple", mix.simple);
  mix.precise = s.get_double("mix.precise", mix.precise);
  mix.long_horizon = s.get_double("mix.long_horizon", mix.long_horizon);
  const std::vector<PlantedTask> population = make_task_population(
      s.get_size("population", 300), mix,
      static_cast<std::uint64_t>(s.get_int("population_seed", 7)));
  const fs::path dir = out_dir(a);

  std::vector<TrialRecord> trials;
  const std::string trial_path = a.trials.empty() ? s.get_string("trials", "") : a.trials;
  if (!trial_path.empty()) {
    require_file(trial_path, "trial log");
    trials = read_trial_csv(trial_path);
  } else {
    const auto per_model = static_cast<std::int64_t>(
        a.episodes.value_or(s.get_size("trials_per_model", 50)));
    const auto seed = a.seed.value_or(static_cast<std::uint64_t>(s.get_int("trial_seed", 11)));
    trials = simulate_trials(population, per_model, seed);
    write_trial_csv((dir / "trials.csv").string(), trials);
    spdlog::info("wrote {}", (dir / "trials.csv").string());
  }
  const RouteSweepResult r = route_sweep(population, trials, sweep);
  spdlog::info("light-only SR {:.4f}, heavy-only SR {:.4f}, oracle {:.4f}, fit loss {:.4f}",
               r.light_only_sr, r.heavy_only_sr, r.oracle_sr, r.model.final_loss);
  std::string csv = "method,tau,routed_sr,expected_params,heavy_fraction\n";
  for (const RouteSweepRow& row : r.rows) {
    csv += row.method + "," + format_double(row.tau) + "," + format_double(row.routed_sr) + "," +
           format_double(row.expected_params) + "," + format_double(row.heavy_fraction) + "\n";
  }
  write_text(dir / "route_sweep.csv", csv);
  return 0;
}

void configure_logging() {
  spdlog::set_pattern("[%H:%M:%S.%e] [%l] %v");
  const char* level = std::getenv("NANOVLA_LOG");
  if (!level) return;
  const auto parsed = spdlog::level::from_str(level);
  if (parsed == spdlog::level::off && std::string(level) != "off") {
    spdlog::warn("NANOVLA_LOG: unknown level '{}', keeping info", level);
    return;
  }
  spdlog::set_level(parsed);
}

}  // namespace
}  // namespace nanovla

int main(int argc, char** argv) {
  using namespace nanovla;
  configure_logging();

  CLI::App app{"NanoVLA: training, evaluation and benchmark sweeps"};
  app.require_subcommand(1);
  CommonArgs args;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", args.config, "key=value config file");
    sub->add_option("--out", args.out, "Output directory")->capture_default_str();
    sub->add_option("--seed", args.seed, "Override the command's seed");
    sub->add_option("--episodes", args.episodes,
                    "eval: episodes per task; bench-chunking: evaluation tasks; "
                    "bench-cache: timing repeats; route-fit: simulated trials per model");
    return sub;
  };
  CLI::App* train = add_common(app.add_subcommand("train", "Train a policy, write checkpoint and loss curve"));
  CLI::App* eval = add_common(app.add_subcommand("eval", "Success rate of a planner on a task suite"));
  eval->add_option("--checkpoint", args.checkpoint, "Policy checkpoint (eval.planner=policy)");
  CLI::App* chunking = add_common(app.add_subcommand("bench-chunking", "Long-short vs fixed chunk sweep"));
  chunking->add_option("--checkpoint", args.checkpoint, "Pre-trained long-horizon policy");
  CLI::App* cache = add_common(app.add_subcommand("bench-cache", "Analytic vs measured caching speedup"));
  CLI::App* route = add_common(app.add_subcommand("route-fit", "Fit the router and sweep tau"));
  route->add_option("--trials", args.trials, "Trial log CSV (task_id,model_id,successes,trials)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*train) return cmd_train(args);
    if (*eval) return cmd_eval(args);
    if (*chunking) return cmd_bench_chunking(args);
    if (*cache) return cmd_bench_cache(args);
    if (*route) return cmd_route_fit(args);
  } catch (const ConfigError& e) {
    spdlog::error("{}", e.what());
    return kExitUsage;
  } catch (const DimensionError& e) {
    spdlog::error("{}", e.what());
    return kExitUsage;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kExitRuntime;
  }
  return kExitUsage;
}
