// Acceptance runner: one PASS/FAIL line per criterion, exit status 1 if any
// selected criterion fails.

#include <algorithm>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/beta.hpp>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "nanovla/bench.h"
#include "nanovla/cache.h"
#include "nanovla/config.h"
#include "nanovla/csv.h"
#include "nanovla/errors.h"
#include "nanovla/gradcheck.h"
#include "nanovla/io.h"
#include "nanovla/lsac.h"
#include "nanovla/policy.h"
#include "nanovla/rng.h"
#include "nanovla/router.h"
#include "nanovla/training.h"

namespace nanovla {
namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string sci(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2e", v);
  return buf;
}

struct Options {
  std::size_t train_steps = 2000;
  std::size_t overfit_steps = 5000;
  std::size_t chunking_episodes = 200;
  std::string scratch = "acceptance_scratch";
  bool verbose = false;
};

// ---------------------------------------------------------------- router

double win_prob_quadrature(const BetaPosterior& pi, const BetaPosterior& pj) {
  using boost::math::ibeta_derivative;
  using boost::math::quadrature::gauss_kronrod;
  auto inner = [&](double x) {
    if (x <= 0.0) return 0.0;
    return gauss_kronrod<double, 31>::integrate(
        [&](double y) { return ibeta_derivative(pj.alpha, pj.beta, y); }, 0.0, x, 10, 1e-10);
  };
  return gauss_kronrod<double, 31>::integrate(
      [&](double x) { return ibeta_derivative(pi.alpha, pi.beta, x) * inner(x); }, 0.0, 1.0,
      10, 1e-10);
}

Outcome router_oracles(const Options&) {
  const auto start = Clock::now();
  constexpr std::size_t kDraws = 100000;
  const double mc_tol = 4.0 * std::sqrt(0.25 / kDraws);
  Rng rng(2024);
  double worst_quad = 0.0, worst_mc = 0.0;
  for (int k = 0; k < 200; ++k) {
    auto draw = [&] {
      const std::uint64_t n = rng.below(50);
      const std::uint64_t s = rng.below(n + 1);
      return posterior_from_trials(
          TrialRecord{"m", "t", static_cast<std::int64_t>(s), static_cast<std::int64_t>(n)});
    };
    const BetaPosterior a = draw(), b = draw();
    const double exact = win_prob_closed_form(a, b);
    worst_quad = std::max(worst_quad, std::abs(exact - win_prob_quadrature(a, b)));
    worst_mc = std::max(worst_mc, std::abs(exact - win_prob_mc(a, b, kDraws, 5000 + k)));
  }
  const double secs = seconds_since(start);
  return {worst_quad < 1e-6 && worst_mc <= mc_tol && secs < 30.0,
          "max |closed-quadrature| " + sci(worst_quad) + ", max |closed-mc| " + sci(worst_mc) +
              " (tol " + sci(mc_tol) + "), " + fmt(secs, 1) + "s"};
}

Outcome shrinkage(const Options&) {
  const std::vector<std::pair<double, double>> ratios{
      {1.0, 0.0}, {1.0, 0.5}, {0.5, 0.0}, {0.0, 1.0}, {0.5, 1.0}, {0.0, 0.5}};
  bool ok = true;
  std::string detail;
  for (const auto& [ri, rj] : ratios) {
    double previous = -1.0;
    std::string line = fmt(ri, 1) + " vs " + fmt(rj, 1) + ":";
    for (std::int64_t n : {100, 10, 2}) {
      const auto si = static_cast<std::int64_t>(std::lround(ri * n));
      const auto sj = static_cast<std::int64_t>(std::lround(rj * n));
      const double p = win_prob(posterior_from_trials({"i", "t", si, n}),
                                posterior_from_trials({"j", "t", sj, n}));
      const double gap = std::abs(p - 0.5);
      if (previous >= 0.0 && !(gap < previous)) ok = false;
      previous = gap;
      line += " " + fmt(p);
    }
    detail += (detail.empty() ? "" : "; ") + line;
  }
  return {ok, detail};
}

// ---------------------------------------------------------------- policy

PolicyConfig toy_config() {
  PolicyConfig c;
  c.model_dim = 8;
  c.heads = 2;
  c.enc_layers = 2;
  c.dec_layers = 1;
  c.horizon = 3;
  c.latent_dim = 2;
  c.ffn_width = 16;
  c.kl_weight = 0.5;
  c.state_dim = 3;
  c.env_dim = 4;
  c.image_channels = 3;
  c.image_height = 2;
  c.image_width = 2;
  return c;
}

Tensor random_tensor(Shape shape, Rng& rng) {
  Tensor t(std::move(shape));
  for (double& v : t.data()) v = rng.normal();
  return t;
}

TrainingExample random_example(const PolicyConfig& c, Rng& rng) {
  TrainingExample ex;
  for (std::size_t i = 0; i < c.state_dim; ++i) ex.inputs.state.push_back(rng.normal());
  for (std::size_t i = 0; i < c.env_dim; ++i) ex.inputs.env.push_back(rng.normal());
  for (std::size_t i = 0; i < c.model_dim; ++i) {
    ex.inputs.instruction_embedding.push_back(rng.normal());
  }
  ex.inputs.image_features = random_tensor({c.image_channels, c.image_height, c.image_width}, rng);
  ex.inputs.latent.assign(c.latent_dim, 0.0);
  ex.target = ActionChunk{random_tensor({c.horizon, c.action_dim}, rng)};
  return ex;
}

ParameterStore jittered(const PolicyConfig& c, std::uint64_t seed) {
  ParameterStore theta = init_policy(c, seed);
  Rng rng(seed + 1);
  for (const std::string& name : theta.names()) {
    for (double& v : theta.mutable_get(name).data()) v += 0.2 * rng.normal();
  }
  return theta;
}

Outcome gradient_integrity(const Options&) {
  const auto start = Clock::now();
  const PolicyConfig c = toy_config();
  const ParameterStore theta = jittered(c, 301);
  Rng rng(302);
  const std::vector<TrainingExample> batch{random_example(c, rng), random_example(c, rng)};
  const GradCheckReport r = grad_check(
      [&](const ParameterStore& p) {
        TrainingLoss l = training_loss(batch, p, c, 303);
        return LossAndGrad{l.loss, std::move(l.grads)};
      },
      theta, 1e-5);
  const double secs = seconds_since(start);
  return {r.max_relative_error < 1e-4 && r.entries_checked == theta.total_elements() &&
              secs < 60.0,
          "max relative error " + sci(r.max_relative_error) + " at " + r.worst_parameter + "[" +
              std::to_string(r.worst_index) + "] over " + std::to_string(r.entries_checked) +
              " entries, " + fmt(secs, 1) + "s"};
}

Outcome variational_sanity(const Options&) {
  std::vector<std::string> failures;
  Rng rng(401);
  double min_kl = INFINITY;
  for (int k = 0; k < 20000; ++k) {
    LatentPosterior q;
    for (int d = 0; d < 4; ++d) {
      q.mu.push_back(rng.normal() * 2.0);
      q.log_var.push_back(rng.normal() * 2.0);
    }
    min_kl = std::min(min_kl, gaussian_kl(q));
  }
  if (!(min_kl >= 0.0)) failures.push_back("negative KL " + sci(min_kl));
  const double kl_zero = gaussian_kl(LatentPosterior{{0, 0, 0}, {0, 0, 0}});
  if (kl_zero != 0.0) failures.push_back("KL at standard normal " + sci(kl_zero));

  const PolicyConfig c = toy_config();
  ParameterStore theta = jittered(c, 402);
  theta.mutable_get("head.action.weight").fill(0.0);
  theta.set("head.action.bias", Tensor::vector({0.25, -0.5, 1.0}));
  TrainingExample ex = random_example(c, rng);
  for (std::size_t t = 0; t < c.horizon; ++t) {
    ex.target.actions(t, 0) = 0.25;
    ex.target.actions(t, 1) = -0.5;
    ex.target.actions(t, 2) = 1.0;
  }
  const double exact = training_loss(std::span(&ex, 1), theta, c, 7).chunk_loss;
  if (exact != 0.0) failures.push_back("exact prediction loss " + sci(exact));
  ex.target.actions(1, 2) = 1.0 + 1e-3;
  const double off = training_loss(std::span(&ex, 1), theta, c, 7).chunk_loss;
  if (!(off > 0.0)) failures.push_back("inexact prediction loss " + sci(off));

  const ParameterStore live = jittered(c, 403);
  TrainingExample probe = random_example(c, rng);
  const ActionChunk base = infer(probe.inputs, live, c);
  for (std::size_t i = 0; i < c.latent_dim; ++i) probe.inputs.latent[i] = rng.normal() * 5.0;
  if (!(infer(probe.inputs, live, c).actions == base.actions)) {
    failures.push_back("infer depends on the latent");
  }
  // Training with the posterior sample must differ from the z = 0 forward pass,
  // otherwise the check above says nothing.
  const double l1 = training_loss(std::span(&probe, 1), live, c, 1).chunk_loss;
  const double l2 = training_loss(std::span(&probe, 1), live, c, 2).chunk_loss;
  if (l1 == l2) failures.push_back("training loss ignores the sampling seed");

  std::string detail = "min KL " + sci(min_kl) + ", exact loss " + sci(exact) +
                       ", perturbed loss " + sci(off);
  for (const std::string& f : failures) detail += "; " + f;
  return {failures.empty(), detail};
}

// ---------------------------------------------------------------- cache

Outcome caching(const Options&) {
  std::vector<std::string> failures;
  const CostModel hand{1.0, 9.0, 1.0};
  const double s10 = speedup(10, hand);
  if (s10 != 110.0 / 29.0) failures.push_back("T=10 speedup " + fmt(s10, 12));

  Rng rng(501);
  for (int k = 0; k < 200; ++k) {
    const CostModel m{rng.uniform() * 10, 1e-3 + rng.uniform() * 10, rng.uniform() * 10};
    for (std::size_t t = 2; t <= 200; t += 7) {
      if (!(speedup(t, m) > 1.0)) failures.push_back("speedup <= 1 at T=" + std::to_string(t));
    }
  }

  const ImageEncoderStub image({3, 32, 32}, 8, 2, 2, 1, 200.0);
  const LanguageEncoderStub language(32, 2, 1800.0);
  const StubPipeline pipeline{&image, &language, 200.0};
  CostModel calibrated;
  const auto rows = bench_cache(pipeline, {50}, 9, &calibrated);
  const double ratio = rows[0].measured_speedup / rows[0].analytic_speedup;
  if (std::abs(ratio - 1.0) > 0.2) failures.push_back("measured/analytic " + fmt(ratio));
  if (failures.size() > 3) failures.resize(3);

  std::string detail = "T=10 speedup " + fmt(s10, 6) + " (110/29 = " + fmt(110.0 / 29.0, 6) +
                       "); T=50 analytic " + fmt(rows[0].analytic_speedup, 3) + " measured " +
                       fmt(rows[0].measured_speedup, 3) + " from calibrated C=(" +
                       fmt(calibrated.c_vis, 0) + "," + fmt(calibrated.c_lang, 0) + "," +
                       fmt(calibrated.c_dec, 0) + ") ns";
  for (const std::string& f : failures) detail += "; " + f;
  return {failures.empty(), detail};
}

// ---------------------------------------------------------------- chunking

PolicyRecipe small_suite_recipe(const Options& opt) {
  PolicyRecipe r;
  r.policy.model_dim = 32;
  r.policy.heads = 4;
  r.policy.enc_layers = 2;
  r.policy.dec_layers = 1;
  r.policy.ffn_width = 64;
  r.policy.latent_dim = 8;
  r.policy.image_channels = 8;
  r.policy.kl_weight = 10.0;
  r.train.steps = opt.train_steps;
  r.train.batch = 8;
  r.train.sgd = SgdConfig{0.05, 0.9, 1.0, 0.1};
  r.train.seed = 9;
  return r;
}

struct Shared {
  std::optional<TrainedPolicy> long_policy;
  std::optional<ChunkingBenchResult> chunking;
  double chunking_seconds = 0.0;
};

const TrainedPolicy& long_policy(const Options& opt, Shared& shared) {
  if (!shared.long_policy) {
    shared.long_policy = train_recipe(small_suite_recipe(opt), 100);
  }
  return *shared.long_policy;
}

const ChunkingBenchResult& chunking_result(const Options& opt, Shared& shared) {
  if (!shared.chunking) {
    const auto start = Clock::now();
    ChunkingBenchConfig cfg;
    cfg.recipe = small_suite_recipe(opt);
    cfg.long_horizon = 100;
    cfg.eval_tasks = opt.chunking_episodes;
    const TrainedPolicy& policy = long_policy(opt, shared);
    shared.chunking = bench_chunking(
        cfg,
        [&](const std::string& msg) {
          if (opt.verbose) std::fprintf(stderr, "  [chunking] %s\n", msg.c_str());
        },
        &policy);
    shared.chunking_seconds = seconds_since(start);
  }
  return *shared.chunking;
}

Outcome chunking_trend(const Options& opt, Shared& shared) {
  const ChunkingBenchResult& r = chunking_result(opt, shared);
  double ls_lo = 1.0, ls_hi = 0.0, fx_lo = 1.0, fx_hi = 0.0, ls10 = -1.0, fixed100 = -1.0;
  std::size_t min_episodes = SIZE_MAX;
  std::string ls_line, fx_line;
  for (const ChunkingRow& row : r.rows) {
    min_episodes = std::min(min_episodes, row.episodes);
    const std::string cell = " " + std::to_string(row.step_size) + ":" + fmt(row.success_rate, 3);
    if (row.mode == ChunkMode::kLongShort) {
      ls_lo = std::min(ls_lo, row.success_rate);
      ls_hi = std::max(ls_hi, row.success_rate);
      if (row.step_size == 10) ls10 = row.success_rate;
      ls_line += cell;
    } else {
      fx_lo = std::min(fx_lo, row.success_rate);
      fx_hi = std::max(fx_hi, row.success_rate);
      if (row.step_size == 100) fixed100 = row.success_rate;
      fx_line += cell;
    }
  }
  const double ls_spread = ls_hi - ls_lo, fx_spread = fx_hi - fx_lo;
  std::vector<std::string> failures;
  if (!(ls10 >= fixed100)) failures.push_back("long_short h=10 below fixed chunk=100");
  if (!(ls_spread < 0.10)) failures.push_back("long_short spread " + fmt(ls_spread, 3) + " >= 0.10");
  if (!(fx_spread > ls_spread)) failures.push_back("fixed spread not larger than long_short");
  if (min_episodes < 200) failures.push_back("fewer than 200 episodes per setting");
  if (!(shared.chunking_seconds < 900.0)) failures.push_back("over 15 min");
  std::string detail = "long_short" + ls_line + " | fixed" + fx_line + " | spreads " +
                       fmt(ls_spread, 3) + " vs " + fmt(fx_spread, 3) + ", " +
                       std::to_string(min_episodes) + " episodes each, " +
                       fmt(shared.chunking_seconds, 0) + "s";
  for (const std::string& f : failures) detail += "; " + f;
  return {failures.empty(), detail};
}

// ---------------------------------------------------------------- routing

Outcome routing_trend(const Options&) {
  const std::vector<PlantedTask> population = make_task_population(300, DifficultyMix{}, 7);
  const std::vector<TrialRecord> trials = simulate_trials(population, 50, 11);
  RouteSweepConfig cfg;
  for (int k = 1; k <= 9; ++k) cfg.taus.push_back(k / 10.0);
  cfg.taus.push_back(0.95);
  const RouteSweepResult r = route_sweep(population, trials, cfg);

  const double light = cfg.model_sizes.at("light"), heavy = cfg.model_sizes.at("heavy");
  double best = 0.0, mcb_lo = 1.0, mcb_hi = 0.0, naive_lo = 1.0, naive_hi = 0.0;
  bool params_ok = true;
  for (const RouteSweepRow& row : r.rows) {
    const bool plateau = row.tau >= 0.4 - 1e-12 && row.tau <= 0.9 + 1e-12;
    if (row.method == "mcb") {
      best = std::max(best, row.routed_sr);
      if (plateau) {
        mcb_lo = std::min(mcb_lo, row.routed_sr);
        mcb_hi = std::max(mcb_hi, row.routed_sr);
      }
    } else if (plateau) {
      naive_lo = std::min(naive_lo, row.routed_sr);
      naive_hi = std::max(naive_hi, row.routed_sr);
    }
    if (row.heavy_fraction > 0.0 && row.heavy_fraction < 1.0 &&
        !(row.expected_params > light && row.expected_params < heavy)) {
      params_ok = false;
    }
  }
  const double single = std::max(r.light_only_sr, r.heavy_only_sr);
  std::vector<std::string> failures;
  if (!(best >= single)) failures.push_back("best routed below best single model");
  if (!(mcb_hi - mcb_lo < 0.02)) failures.push_back("plateau spread >= 2 points");
  if (!params_ok) failures.push_back("expected params outside (light, heavy)");
  if (!(naive_hi - naive_lo > mcb_hi - mcb_lo)) failures.push_back("naive spread not larger");
  std::string detail = "best mcb " + fmt(best) + " vs light " + fmt(r.light_only_sr) +
                       " heavy " + fmt(r.heavy_only_sr) + "; spread over tau in [0.4,0.9] mcb " +
                       fmt(mcb_hi - mcb_lo) + " naive " + fmt(naive_hi - naive_lo);
  for (const std::string& f : failures) detail += "; " + f;
  return {failures.empty(), detail};
}

// ---------------------------------------------------------------- trainability

Outcome trainability(const Options& opt, Shared& shared) {
  std::vector<std::string> failures;

  PolicyRecipe overfit = small_suite_recipe(opt);
  overfit.policy.horizon = 10;
  overfit.train.steps = opt.overfit_steps;
  overfit.train.batch = 4;
  overfit.train.sgd.lr = 0.02;
  const Stubs stubs = make_stubs(overfit);
  const TaskSpec demo_task = make_suite("simple", 1, 77)[0];
  const Dataset one = build_dataset({demo_task}, overfit.env, stubs.image, stubs.language,
                                    overfit.policy.horizon, 1, overfit.policy.latent_dim);
  ParameterStore theta = init_policy(overfit.policy, 78);
  train_policy(theta, overfit.policy, one.examples, overfit.train);
  double chunk = 0.0;
  for (const TrainingExample& ex : one.examples) {
    const ActionChunk a = infer(ex.inputs, theta, overfit.policy);
    double se = 0.0;
    for (std::size_t i = 0; i < a.actions.size(); ++i) {
      se += (a.actions[i] - ex.target.actions[i]) * (a.actions[i] - ex.target.actions[i]);
    }
    chunk += se / static_cast<double>(a.actions.size());
  }
  chunk /= static_cast<double>(one.examples.size());
  if (!(chunk < 1e-3)) failures.push_back("overfit chunk loss " + sci(chunk));

  const TrainedPolicy& policy = long_policy(opt, shared);
  const PolicyRecipe recipe = small_suite_recipe(opt);
  const Stubs eval_stubs = make_stubs(recipe);
  const std::vector<TaskSpec> held_out = make_suite("simple", 100, 4242);
  InstructionCache cache(64);
  const Perception perception{&eval_stubs.image, &eval_stubs.language, &cache, CostModel{},
                              policy.config.latent_dim};
  const ExecutorConfig exec{policy.config.horizon, 10, ChunkMode::kLongShort,
                            recipe.env.episode_cap};
  const double learned =
      evaluate_suite(policy_planner(policy.theta, policy.config), held_out, recipe.env,
                     perception, exec)
          .rate();
  const double expert = evaluate_suite(expert_planner(policy.config.horizon, recipe.env),
                                       held_out, recipe.env, perception, exec)
                            .rate();
  const double random = evaluate_suite(random_planner(policy.config.horizon, 4343), held_out,
                                       recipe.env, perception, exec)
                            .rate();
  if (!(learned >= 0.8)) failures.push_back("trained SR below 0.8");
  if (expert != 1.0) failures.push_back("expert SR not 1");
  if (!(random < 0.05)) failures.push_back("random SR not below 0.05");

  std::string detail = "overfit " + std::to_string(one.examples.size()) + " windows to " +
                       sci(chunk) + "; held-out simple SR trained " + fmt(learned, 2) +
                       " expert " + fmt(expert, 2) + " random " + fmt(random, 2);
  for (const std::string& f : failures) detail += "; " + f;
  return {failures.empty(), detail};
}

// ---------------------------------------------------------------- determinism

std::string trace_csv(const EpisodeTrace& trace) {
  std::ostringstream out;
  trace.write_csv(out);
  return out.str();
}

Outcome determinism(const Options& opt) {
  namespace fs = std::filesystem;
  std::vector<std::string> failures;
  const fs::path dir = opt.scratch;
  fs::create_directories(dir);

  PolicyRecipe recipe = small_suite_recipe(opt);
  recipe.policy.model_dim = 16;
  recipe.policy.heads = 2;
  recipe.policy.ffn_width = 32;
  recipe.simple_tasks = 4;
  recipe.disturbance_tasks = 2;
  recipe.train.steps = 30;
  const TrainedPolicy a = train_recipe(recipe, 12);
  const TrainedPolicy b = train_recipe(recipe, 12);
  const std::string bytes_a = serialize_checkpoint({a.config.to_config(), a.theta});
  const std::string bytes_b = serialize_checkpoint({b.config.to_config(), b.theta});
  if (bytes_a != bytes_b) failures.push_back("checkpoints differ between identical runs");

  const std::string ckpt_path = (dir / "policy.ckpt").string();
  save_checkpoint(ckpt_path, {a.config.to_config(), a.theta});
  if (read_file(ckpt_path) != bytes_a) failures.push_back("saved bytes differ");
  const Checkpoint loaded = load_checkpoint(ckpt_path);
  if (serialize_checkpoint(loaded) != bytes_a) failures.push_back("round-trip not byte-identical");

  const Stubs stubs = make_stubs(recipe);
  const TaskSpec task = make_suite("disturbance", 1, 31)[0];
  auto run = [&] {
    InstructionCache cache(8);
    const Perception perception{&stubs.image, &stubs.language, &cache, CostModel{},
                                a.config.latent_dim};
    Environment env(task, recipe.env);
    return run_episode(env, policy_planner(loaded.tensors, a.config), perception,
                       ExecutorConfig{12, 4, ChunkMode::kLongShort, 80});
  };
  const std::string trace1 = trace_csv(run()), trace2 = trace_csv(run());
  if (trace1 != trace2) failures.push_back("traces differ between identical runs");

  std::size_t parsed = 0;
  auto reparse = [&](const std::string& name, const std::string& text) {
    const fs::path p = dir / name;
    write_file(p.string(), text);
    try {
      const CsvTable t = read_csv(p.string());
      if (t.rows.empty()) failures.push_back(name + " has no rows");
      ++parsed;
    } catch (const std::exception& e) {
      failures.push_back(name + ": " + e.what());
    }
  };
  reparse("trace.csv", trace1);

  const std::vector<TrialRecord> trials =
      simulate_trials(make_task_population(20, DifficultyMix{}, 3), 10, 4);
  write_trial_csv((dir / "trials.csv").string(), trials);
  const std::vector<TrialRecord> back = read_trial_csv((dir / "trials.csv").string());
  ++parsed;
  if (back.size() != trials.size()) failures.push_back("trial CSV lost rows");

  InstructionCache cache(2);
  cache.get_or_encode("pick the red block", stubs.language);
  cache.get_or_encode("pick the red block", stubs.language);
  reparse("cache_stats.csv", CacheStats::csv_header() + "\n" + cache.stats().csv_row() + "\n");

  ChunkingRow row{10, ChunkMode::kLongShort, 0.5, 200, 1.25};
  reparse("chunking.csv", chunking_csv_header() + "\n" + chunking_csv_row(row) + "\n");

  Dataset ds = build_dataset({task}, recipe.env, stubs.image, stubs.language, 12, 20,
                             recipe.policy.latent_dim);
  save_dataset((dir / "data.bin").string(), (dir / "data_index.csv").string(), ds);
  const Dataset ds_back = load_dataset((dir / "data.bin").string(),
                                       (dir / "data_index.csv").string());
  ++parsed;
  if (ds_back.examples.size() != ds.examples.size()) failures.push_back("dataset index mismatch");

  std::string detail = "checkpoint " + std::to_string(bytes_a.size()) + " bytes, trace " +
                       std::to_string(trace1.size()) + " bytes, " + std::to_string(parsed) +
                       " CSVs re-parsed";
  for (const std::string& f : failures) detail += "; " + f;
  return {failures.empty(), detail};
}

}  // namespace
}  // namespace nanovla

int main(int argc, char** argv) {
  using namespace nanovla;
  CLI::App app{"NanoVLA acceptance criteria"};
  Options opt;
  std::vector<int> only;
  app.add_option("--only", only, "Criteria to run (default: all)")->check(CLI::Range(1, 9));
  app.add_option("--train-steps", opt.train_steps, "SGD steps for each chunking policy");
  app.add_option("--overfit-steps", opt.overfit_steps, "SGD steps for the single-demo overfit");
  app.add_option("--episodes", opt.chunking_episodes, "Disturbance episodes per chunking setting");
  app.add_option("--scratch", opt.scratch, "Directory for files written by criterion 9");
  app.add_flag("-v,--verbose", opt.verbose, "Progress on stderr");
  CLI11_PARSE(app, argc, argv);

  Shared shared;
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"router closed form vs quadrature and Monte Carlo", [&] { return router_oracles(opt); }},
      {"posterior shrinkage toward 1/2", [&] { return shrinkage(opt); }},
      {"end-to-end gradient check", [&] { return gradient_integrity(opt); }},
      {"variational objective sanity", [&] { return variational_sanity(opt); }},
      {"instruction caching speedup", [&] { return caching(opt); }},
      {"long-short chunking trend", [&] { return chunking_trend(opt, shared); }},
      {"routing trend", [&] { return routing_trend(opt); }},
      {"trainability", [&] { return trainability(opt, shared); }},
      {"determinism and formats", [&] { return determinism(opt); }},
  };
  const std::set<int> selected(only.begin(), only.end());
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!selected.empty() && !selected.count(id)) continue;
    const auto start = Clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::printf("criterion %d %s: %s (%s) [%.1fs]\n", id, o.pass ? "PASS" : "FAIL",
                criteria[i].first.c_str(), o.detail.c_str(), seconds_since(start));
    std::fflush(stdout);
    failed += o.pass ? 0 : 1;
  }
  return failed ? 1 : 0;
}
