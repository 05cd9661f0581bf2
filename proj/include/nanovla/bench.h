#ifndef NANOVLA_BENCH_H_
#define NANOVLA_BENCH_H_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "nanovla/cache.h"
#include "nanovla/envsim.h"
#include "nanovla/lsac.h"
#include "nanovla/router.h"
#include "nanovla/training.h"

namespace nanovla {

struct SuccessReport {
  std::vector<std::string> task_ids;
  std::vector<std::size_t> successes;  // per task
  std::vector<std::size_t> episodes;   // per task
  std::size_t total_success = 0;
  std::size_t total_episodes = 0;
  double mean_plans = 0.0;

  double rate() const {
    return total_episodes ? static_cast<double>(total_success) / total_episodes : 0.0;
  }
};

// Runs `episodes_per_task` episodes of every task. Repeated episodes of one
// task differ only through the planner (the environment is deterministic).
SuccessReport evaluate_suite(const Planner& planner, const std::vector<TaskSpec>& tasks,
                             const EnvConfig& env, const Perception& perception,
                             const ExecutorConfig& exec, std::size_t episodes_per_task = 1);

struct ChunkingRow {
  std::size_t step_size = 0;
  ChunkMode mode = ChunkMode::kLongShort;
  double success_rate = 0.0;
  std::size_t episodes = 0;
  double control_frequency = 0.0;
};

// Everything needed to train a policy from scratch on expert data: simple
// tasks plus disturbed ones, so recoveries appear in the demonstrations.
struct PolicyRecipe {
  PolicyConfig policy;
  TrainConfig train;
  EnvConfig env;
  std::size_t simple_tasks = 60;
  std::size_t disturbance_tasks = 30;
  std::uint64_t task_seed = 100;
  std::uint64_t disturbance_seed = 200;
  std::uint64_t init_seed = 5;
  std::uint64_t image_seed = 11;
  std::uint64_t language_seed = 12;
};

struct Stubs {
  ImageEncoderStub image;
  LanguageEncoderStub language;
};

Stubs make_stubs(const PolicyRecipe& recipe);

struct TrainedPolicy {
  PolicyConfig config;
  ParameterStore theta;
  std::vector<TrainRecord> history;
  std::size_t examples = 0;
};

// Trains recipe.policy with its horizon replaced by `horizon`.
TrainedPolicy train_recipe(const PolicyRecipe& recipe, std::size_t horizon,
                           const std::function<void(const TrainRecord&)>& on_step = {});

struct ChunkingBenchConfig {
  PolicyRecipe recipe;
  std::size_t long_horizon = 100;
  std::vector<std::size_t> step_sizes{10, 20, 30, 40, 50, 60};
  std::string suite = "disturbance";
  std::size_t eval_tasks = 200;
  std::uint64_t eval_seed = 999;
  std::size_t episode_cap = 140;
  CostModel costs;
};

struct ChunkingBenchResult {
  std::vector<ChunkingRow> rows;  // long_short per step size, then fixed
  TrainedPolicy long_policy;
};

// long_short runs the long-horizon policy with every window in step_sizes;
// fixed runs a policy trained with H = s for each s, plus the long policy
// executed whole. A supplied long policy must have H_train == long_horizon
// and is used instead of training one.
ChunkingBenchResult bench_chunking(const ChunkingBenchConfig& cfg,
                                   const std::function<void(const std::string&)>& log = {},
                                   const TrainedPolicy* long_policy = nullptr);

std::string chunking_csv_header();
std::string chunking_csv_row(const ChunkingRow& row);

struct CacheBenchRow {
  std::size_t steps = 0;
  double analytic_speedup = 0.0;
  double measured_speedup = 0.0;
};

std::vector<CacheBenchRow> bench_cache(const StubPipeline& pipeline,
                                       const std::vector<std::size_t>& steps,
                                       std::size_t repeats, CostModel* calibrated = nullptr);

// Seeded Binomial(n, p) trial counts for both models on every planted task.
std::vector<TrialRecord> simulate_trials(const std::vector<PlantedTask>& population,
                                         std::int64_t trials_per_model, std::uint64_t seed,
                                         const std::string& light_id = "light",
                                         const std::string& heavy_id = "heavy");

struct RouteSweepRow {
  std::string method;  // mcb or naive
  double tau = 0.0;
  double routed_sr = 0.0;
  double expected_params = 0.0;
  double heavy_fraction = 0.0;
};

struct RouteSweepConfig {
  std::vector<double> taus;
  FitOptions fit;
  double alpha0 = 1.0;
  double beta0 = 1.0;
  double clip_eps = kDefaultClip;
  std::size_t feature_dim = 64;
  EscalationRule rule = EscalationRule::kAsWritten;
  std::map<std::string, double> model_sizes{{"light", 161.0}, {"heavy", 520.0}};
  std::string light_id = "light";
  std::string heavy_id = "heavy";
};

struct RouteSweepResult {
  RouterModel model;
  std::vector<RouteSweepRow> rows;
  double light_only_sr = 0.0;
  double heavy_only_sr = 0.0;
  double oracle_sr = 0.0;
};

// Posteriors -> win-probability targets -> pairwise fit -> tau sweep for the
// MCB router and the naive point-estimate baseline, scored against the
// planted success probabilities.
RouteSweepResult route_sweep(const std::vector<PlantedTask>& population,
                             const std::vector<TrialRecord>& trials,
                             const RouteSweepConfig& cfg);

}  // namespace nanovla

#endif  // NANOVLA_BENCH_H_
