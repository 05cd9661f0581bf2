#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "nanovla/csv.h"
#include "nanovla/errors.h"
#include "nanovla/lsac.h"

namespace nanovla {
namespace {

class ExecutorTest : public ::testing::Test {
 protected:
  ImageEncoderStub image_{{3, 32, 32}, 4, 2, 2, 1};
  LanguageEncoderStub language_{16, 2};
  InstructionCache cache_{8};
  Perception perception() { return Perception{&image_, &language_, &cache_, CostModel{}, 4}; }
};

TaskSpec disturbed_task() {
  TaskSpec t;
  t.id = "d";
  t.instruction = "put the red block in the blue zone";
  t.objects = {{0.5, 0.2}, {0.9, 0.9}};
  t.effector_start = {0.5, 0.5};
  t.target_zone = Rect{{0.1, 0.8}, {0.24, 0.94}};
  t.disturbances = {Disturbance{5, 0, {0.85, 0.5}}};
  return t;
}

TEST(ExecutorConfig, Validation) {
  EXPECT_NO_THROW(ExecutorConfig{}.validate());
  EXPECT_THROW((ExecutorConfig{10, 11, ChunkMode::kLongShort, 5}).validate(), ConfigError);
  EXPECT_THROW((ExecutorConfig{10, 0, ChunkMode::kLongShort, 5}).validate(), ConfigError);
  EXPECT_THROW((ExecutorConfig{10, 5, ChunkMode::kFixed, 5}).validate(), ConfigError);
  const ExecutorConfig f = ExecutorConfig::fixed(30, 100);
  EXPECT_EQ(f.horizon, 30u);
  EXPECT_EQ(f.window, 30u);
  EXPECT_EQ(parse_chunk_mode("fixed"), ChunkMode::kFixed);
  EXPECT_THROW(parse_chunk_mode("medium"), ConfigError);
}

TEST(ReplanRatio, Examples) {
  EXPECT_EQ(replan_ratio(ExecutorConfig{100, 10, ChunkMode::kLongShort, 1}), 0.1);
  EXPECT_EQ(replan_ratio(ExecutorConfig{100, 100, ChunkMode::kLongShort, 1}), 1.0);
  EXPECT_EQ(replan_ratio(ExecutorConfig{100, 1, ChunkMode::kLongShort, 1}), 0.01);
}

TEST(Throughput, MonotoneWithLimits) {
  const CostModel m{1, 1, 1, 0.5};
  double previous = 0.0;
  for (std::size_t h = 1; h <= 64; h *= 2) {
    const double f = throughput_model(ExecutorConfig{64, h, ChunkMode::kLongShort, 1}, m, 3.0);
    EXPECT_GT(f, previous);
    previous = f;
  }
  EXPECT_NEAR(throughput_model(ExecutorConfig{1000000, 1000000, ChunkMode::kLongShort, 1}, m, 3.0),
              2.0, 1e-4);
  for (std::size_t h : {1, 7, 40}) {
    EXPECT_EQ(throughput_model(ExecutorConfig{40, h, ChunkMode::kLongShort, 1}, m, 0.0), 2.0);
  }
}

TEST_F(ExecutorTest, PlanArithmetic) {
  Environment env(disturbed_task(), EnvConfig{});
  const EpisodeTrace tr = run_episode(env, random_planner(100, 3), perception(),
                                      ExecutorConfig{100, 10, ChunkMode::kLongShort, 40});
  EXPECT_EQ(tr.plans, 4u);
  ASSERT_EQ(tr.steps.size(), 40u);
  for (std::size_t i = 0; i < tr.steps.size(); ++i) {
    EXPECT_EQ(tr.steps[i].t, i);
    EXPECT_EQ(tr.steps[i].plan_id, i / 10);
    EXPECT_EQ(tr.steps[i].index_in_plan, i % 10);
  }
}

TEST_F(ExecutorTest, WindowEqualToHorizonMatchesFixedMode) {
  const TaskSpec task = make_suite("disturbance", 1, 5)[0];
  Environment a(task, EnvConfig{}), b(task, EnvConfig{});
  const EpisodeTrace ls = run_episode(a, random_planner(25, 4), perception(),
                                      ExecutorConfig{25, 25, ChunkMode::kLongShort, 90});
  cache_.clear();
  const EpisodeTrace fx =
      run_episode(b, random_planner(25, 4), perception(), ExecutorConfig::fixed(25, 90));
  EXPECT_EQ(ls, fx);
  EXPECT_TRUE(fx.truncated);
}

TEST_F(ExecutorTest, LongShortReaimsAfterDisturbanceWhileFixedStaysStale) {
  const EnvConfig cfg;
  Environment a(disturbed_task(), cfg), b(disturbed_task(), cfg);
  const EpisodeTrace ls = run_episode(a, expert_planner(100, cfg), perception(),
                                      ExecutorConfig{100, 10, ChunkMode::kLongShort, 200});
  const EpisodeTrace fx =
      run_episode(b, expert_planner(100, cfg), perception(), ExecutorConfig::fixed(100, 200));
  // The object jumps east at step 5. The first plan still heads south, the
  // replan at step 10 turns east.
  EXPECT_LT(ls.steps[7].action[1], 0.0);
  EXPECT_EQ(ls.steps[10].plan_id, 1u);
  EXPECT_GT(ls.steps[10].action[0], 0.0);
  for (std::size_t t = 5; t < 15; ++t) {
    EXPECT_EQ(fx.steps[t].plan_id, 0u);
    EXPECT_EQ(fx.steps[t].action[0], 0.0);
  }
  EXPECT_TRUE(ls.success);
  EXPECT_LT(ls.steps.size(), fx.steps.size());
}

TEST_F(ExecutorTest, CostsAndCacheFlags) {
  Environment env(disturbed_task(), EnvConfig{});
  Perception p = perception();
  p.costs = CostModel{1.0, 9.0, 2.0, 0.25};
  const EpisodeTrace tr =
      run_episode(env, random_planner(5, 1), p, ExecutorConfig{5, 2, ChunkMode::kLongShort, 6});
  EXPECT_FALSE(tr.steps[0].cache_hit);
  EXPECT_EQ(tr.steps[0].cost, 12.25);
  EXPECT_EQ(tr.steps[1].cost, 0.25);
  EXPECT_TRUE(tr.steps[2].cache_hit);
  EXPECT_EQ(tr.steps[2].cost, 3.25);
}

TEST_F(ExecutorTest, WrongShapedChunkIsContractViolation) {
  Environment env(disturbed_task(), EnvConfig{});
  Planner bad = [](const PlanRequest&) { return ActionChunk{Tensor({4, 3})}; };
  EXPECT_THROW(run_episode(env, bad, perception(), ExecutorConfig{5, 2, ChunkMode::kLongShort, 6}),
               ContractViolation);
}

TEST_F(ExecutorTest, EnvFaultCarriesStepIndex) {
  Environment env(disturbed_task(), EnvConfig{});
  Planner nan_after = [](const PlanRequest& r) {
    ActionChunk c{Tensor({4, 3})};
    if (r.state.step >= 4) c.actions(1, 0) = std::nan("");
    return c;
  };
  try {
    run_episode(env, nan_after, perception(), ExecutorConfig{4, 4, ChunkMode::kLongShort, 20});
    FAIL();
  } catch (const std::runtime_error& e) {
    EXPECT_NE(std::string(e.what()).find("step 5"), std::string::npos) << e.what();
  }
}

TEST_F(ExecutorTest, TraceIsDeterministicAndCsvReparses) {
  const TaskSpec task = make_suite("simple", 1, 9)[0];
  Environment a(task, EnvConfig{}), b(task, EnvConfig{});
  const ExecutorConfig cfg{20, 5, ChunkMode::kLongShort, 60};
  const EpisodeTrace x = run_episode(a, random_planner(20, 8), perception(), cfg);
  cache_.clear();
  const EpisodeTrace y = run_episode(b, random_planner(20, 8), perception(), cfg);
  EXPECT_TRUE(x == y);
  std::ostringstream out;
  x.write_csv(out);
  const CsvTable t = parse_csv(out.str());
  EXPECT_EQ(t.rows.size(), x.steps.size());
  EXPECT_EQ(t.rows[3][t.column("plan_id")], "0");
}

TEST_F(ExecutorTest, ExpertPlannerSolvesUndisturbedTasks) {
  const EnvConfig cfg;
  for (const TaskSpec& task : make_suite("simple", 20, 10)) {
    Environment env(task, cfg);
    EXPECT_TRUE(run_episode(env, expert_planner(100, cfg), perception(),
                            ExecutorConfig{100, 10, ChunkMode::kLongShort, 300})
                    .success);
  }
}

}  // namespace
}  // namespace nanovla
