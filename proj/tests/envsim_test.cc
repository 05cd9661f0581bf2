#include <gtest/gtest.h>

#include <cmath>

#include "nanovla/envsim.h"
#include "nanovla/errors.h"

namespace nanovla {
namespace {

TaskSpec simple_task() {
  TaskSpec t;
  t.id = "t";
  t.instruction = "put the red block in the green zone";
  t.object_index = 0;
  t.objects = {{0.2, 0.5}, {0.8, 0.8}};
  t.target_zone = Rect{{0.6, 0.1}, {0.74, 0.24}};
  t.effector_start = {0.5, 0.5};
  return t;
}

TEST(Observe, DeterministicAndSensitiveToObjects) {
  const EnvConfig cfg;
  EnvState s = reset(simple_task());
  const Observation a = observe(s, cfg), b = observe(s, cfg);
  EXPECT_TRUE(a.image == b.image);
  EXPECT_EQ(a.image.shape(), (Shape{3, 32, 32}));
  EXPECT_EQ(a.proprio.size(), kProprioDim);
  EXPECT_EQ(a.env.size(), kEnvFeatureDim);
  s.objects[1] = {0.3, 0.3};
  EXPECT_FALSE(observe(s, cfg).image == a.image);
}

TEST(Observe, BrightnessScalesPixelsOnly) {
  EnvConfig dim;
  dim.brightness = 0.5;
  const EnvState s = reset(simple_task());
  const Tensor base = observe(s, EnvConfig{}).image;
  const Tensor scaled = observe(s, dim).image;
  for (std::size_t i = 0; i < base.size(); ++i) EXPECT_DOUBLE_EQ(scaled[i], 0.5 * base[i]);
  const Demonstration demo = scripted_expert(simple_task(), EnvConfig{});
  EnvState x = reset(simple_task()), y = reset(simple_task());
  for (const Action& act : demo.actions) {
    x = step(x, act, EnvConfig{}).state;
    y = step(y, act, dim).state;
  }
  EXPECT_EQ(state_digest(x), state_digest(y));
  EXPECT_TRUE(is_success(y));
}

TEST(Step, ZeroActionOnlyAdvancesClock) {
  const EnvState s = reset(simple_task());
  const Action zero{0.0, 0.0, 0.0};
  const StepResult r = step(s, zero, EnvConfig{});
  EXPECT_EQ(r.state.step, 1u);
  EXPECT_EQ(r.state.effector, s.effector);
  EXPECT_EQ(r.state.objects, s.objects);
  EXPECT_EQ(r.state.gripper_closed, s.gripper_closed);
  EXPECT_FALSE(r.success || r.failure);
}

TEST(Step, ClampsToVelocityLimit) {
  const EnvState s = reset(simple_task());
  const Action big{1.0, -1.0, 0.0};
  const StepResult r = step(s, big, EnvConfig{});
  EXPECT_DOUBLE_EQ(r.state.effector[0], 0.52);
  EXPECT_DOUBLE_EQ(r.state.effector[1], 0.48);
}

TEST(Step, RejectsBadActions) {
  const EnvState s = reset(simple_task());
  const std::vector<double> two{0.0, 0.0};
  EXPECT_THROW(step(s, two, EnvConfig{}), DimensionError);
  const Action nan{std::nan(""), 0.0, 0.0};
  EXPECT_THROW(step(s, nan, EnvConfig{}), NumericError);
}

TEST(Step, GraspLatchesOnlyWithinRadius) {
  TaskSpec t = simple_task();
  t.effector_start = {0.23, 0.5};
  const Action close{0.0, 0.0, 1.0};
  EXPECT_EQ(step(reset(t), close, EnvConfig{}).state.grasped, 0);
  t.effector_start = {0.26, 0.5};
  EXPECT_EQ(step(reset(t), close, EnvConfig{}).state.grasped, kNoObject);
}

TEST(Step, FailureAtEpisodeCap) {
  EnvConfig cfg;
  cfg.episode_cap = 3;
  Environment env(simple_task(), cfg);
  const Action zero{0.0, 0.0, 0.0};
  EXPECT_FALSE(env.step(zero).failure);
  EXPECT_FALSE(env.step(zero).failure);
  EXPECT_TRUE(env.step(zero).failure);
  EXPECT_TRUE(env.done());
  EXPECT_THROW(env.step(zero), ContractViolation);
}

TEST(Step, DisturbanceTeleportsExactlyOnce) {
  TaskSpec t = simple_task();
  t.disturbances = {Disturbance{2, 0, {0.9, 0.1}}};
  EnvState s = reset(t);
  const Action zero{0.0, 0.0, 0.0};
  int teleports = 0;
  Vec2 previous = s.objects[0];
  for (int k = 0; k < 6; ++k) {
    s = step(s, zero, EnvConfig{}).state;
    if (s.objects[0] != previous) ++teleports;
    previous = s.objects[0];
  }
  EXPECT_EQ(teleports, 1);
  EXPECT_EQ(s.objects[0], (Vec2{0.9, 0.1}));
}

TEST(Step, DisturbanceKnocksObjectOutOfGripper) {
  TaskSpec t = simple_task();
  t.effector_start = t.objects[0];
  t.disturbances = {Disturbance{1, 0, {0.9, 0.9}}};
  EnvState s = reset(t);
  const Action close{0.0, 0.0, 1.0};
  s = step(s, close, EnvConfig{}).state;
  EXPECT_EQ(s.grasped, 0);
  s = step(s, close, EnvConfig{}).state;
  EXPECT_EQ(s.grasped, kNoObject);
  EXPECT_EQ(s.objects[0], (Vec2{0.9, 0.9}));
}

TEST(Expert, ReachesTargetAtDistancePointThreeInFifteenSteps) {
  TaskSpec t = simple_task();
  t.effector_start = {0.5, 0.5};
  t.objects[0] = {0.5, 0.8};
  const EnvConfig cfg;
  EnvState s = reset(t);
  std::size_t steps = 0;
  while (std::hypot(s.effector[0] - 0.5, s.effector[1] - 0.8) > 1e-9) {
    s = step(s, expert_action(s, cfg), cfg).state;
    ++steps;
    ASSERT_LT(steps, 100u);
  }
  EXPECT_EQ(steps, static_cast<std::size_t>(std::ceil(0.3 / cfg.delta - 1e-9)));
  EXPECT_EQ(s.grasped, 0);
}

TEST(Expert, SolvesEveryUndisturbedSeed) {
  const EnvConfig cfg;
  for (const char* suite : {"simple", "precise", "long_horizon"}) {
    for (const TaskSpec& t : make_suite(suite, 100, 17)) {
      const Demonstration d = scripted_expert(t, cfg);
      EXPECT_TRUE(d.success) << t.id;
      EnvState s = reset(t);
      for (const Action& a : d.actions) s = step(s, a, cfg).state;
      EXPECT_TRUE(is_success(s)) << t.id;
    }
  }
}

TEST(Expert, ReproduciblePerSeed) {
  const TaskSpec a = make_suite("mixed", 5, 3)[4], b = make_suite("mixed", 5, 3)[4];
  EXPECT_EQ(a.instruction, b.instruction);
  const Demonstration da = scripted_expert(a, EnvConfig{}), db = scripted_expert(b, EnvConfig{});
  EXPECT_EQ(da.actions, db.actions);
}

TEST(Expert, UnsolvableWithinCapIsDataError) {
  EnvConfig cfg;
  cfg.episode_cap = 5;
  EXPECT_THROW(scripted_expert(simple_task(), cfg), DataError);
}

TEST(Actions, NormalizeRoundTrip) {
  const EnvConfig cfg;
  const Action raw{0.01, -0.02, 0.7};
  const Action n = normalize_action(raw, cfg);
  EXPECT_DOUBLE_EQ(n[0], 0.5);
  EXPECT_DOUBLE_EQ(n[1], -1.0);
  EXPECT_EQ(n[2], 1.0);
  const Action back = denormalize_action(n, cfg);
  EXPECT_DOUBLE_EQ(back[0], 0.01);
  EXPECT_DOUBLE_EQ(back[1], -0.02);
}

TEST(DemoWindows, LengthOneThirtySevenGivesTwoPaddedWindows) {
  Demonstration d;
  for (int i = 0; i < 137; ++i) d.actions.push_back({0.0, 0.02 * (i % 2), i == 136 ? 1.0 : -1.0});
  const auto windows = demo_windows(d, EnvConfig{}, 100, 100);
  ASSERT_EQ(windows.size(), 2u);
  EXPECT_EQ(windows[1].start, 100u);
  for (std::size_t t = 36; t < 100; ++t) {
    EXPECT_EQ(windows[1].actions(t, 1), windows[1].actions(36, 1));
    EXPECT_EQ(windows[1].actions(t, 2), 1.0);
  }
  EXPECT_EQ(windows[0].actions(1, 1), 1.0);
}

TEST(EnvFeatures, ReachAndCarryDirectionsAndLengths) {
  const EnvConfig cfg;
  EnvState s = reset(simple_task());
  const std::vector<double> f = env_features(s, cfg);
  ASSERT_EQ(f.size(), kEnvFeatureDim);
  EXPECT_DOUBLE_EQ(f[0], -1.0);
  EXPECT_DOUBLE_EQ(f[1], 0.0);
  EXPECT_NEAR(f[2], 0.3 / cfg.delta / 50.0, 1e-12);
  const double cx = 0.67 - 0.2, cy = 0.17 - 0.5, len = std::hypot(cx, cy);
  EXPECT_NEAR(f[3], cx / len, 1e-12);
  EXPECT_NEAR(f[4], cy / len, 1e-12);
  EXPECT_NEAR(f[5], len / cfg.delta / 50.0, 1e-12);
  EXPECT_EQ(f[6], 0.0);

  // Closer than one step: the direction is no longer unit length.
  s.effector = {0.21, 0.5};
  EXPECT_NEAR(env_features(s, cfg)[0], -0.01 / cfg.delta, 1e-12);
  s.grasped = 0;
  EXPECT_EQ(env_features(s, cfg)[6], 1.0);
  s.grasped = 1;
  EXPECT_EQ(env_features(s, cfg)[6], 0.0);
}

TEST(ExpertChunk, MatchesDemonstrationWindowsWhenUndisturbed) {
  const EnvConfig cfg;
  for (const TaskSpec& t : make_suite("simple", 10, 4)) {
    const Demonstration d = scripted_expert(t, cfg);
    const auto windows = demo_windows(d, cfg, 20, 7);
    for (const DemoWindow& w : windows) {
      EXPECT_TRUE(expert_chunk(d.states[w.start], cfg, 20) == w.actions) << t.id << " @" << w.start;
    }
  }
}

TEST(ExpertChunk, IgnoresPendingDisturbances) {
  const EnvConfig cfg;
  const TaskSpec t = make_suite("disturbance", 1, 8)[0];
  ASSERT_FALSE(t.disturbances.empty());
  TaskSpec calm = t;
  calm.disturbances.clear();
  EXPECT_TRUE(expert_chunk(reset(t), cfg, 60) == expert_chunk(reset(calm), cfg, 60));
  EXPECT_THROW(expert_chunk(reset(t), cfg, 0), ConfigError);
}

TEST(Suites, DisturbanceSuiteSchedulesOneValidDisplacement) {
  for (const TaskSpec& t : make_suite("disturbance", 50, 4)) {
    ASSERT_EQ(t.disturbances.size(), 1u);
    const Disturbance& d = t.disturbances[0];
    EXPECT_GE(d.step, 15u);
    EXPECT_LE(d.step, 40u);
    EXPECT_EQ(d.object, t.object_index);
    EXPECT_NO_THROW(t.validate());
  }
  EXPECT_THROW(make_suite("nonsense", 3, 1), ConfigError);
}

TEST(Population, PlantedProfilesFollowDifficulty) {
  const auto pop = make_task_population(400, DifficultyMix{}, 8);
  std::size_t counts[3] = {0, 0, 0};
  for (const PlantedTask& p : pop) {
    ++counts[static_cast<int>(p.spec.difficulty)];
    EXPECT_GE(p.p_light, 0.0);
    EXPECT_LE(p.p_heavy, 1.0);
    if (p.spec.difficulty == Difficulty::kSimple) EXPECT_GE(p.p_light, p.p_heavy - 0.02);
    if (p.spec.difficulty == Difficulty::kLongHorizon) EXPECT_GE(p.p_heavy - p.p_light, 0.15);
  }
  EXPECT_GT(counts[0], counts[1]);
  EXPECT_GT(counts[2], 0u);
  const auto again = make_task_population(400, DifficultyMix{}, 8);
  EXPECT_EQ(again[17].p_heavy, pop[17].p_heavy);
  EXPECT_EQ(again[17].spec.instruction, pop[17].spec.instruction);
}

TEST(Population, NeedsTwoTasks) {
  EXPECT_THROW(make_task_population(1, DifficultyMix{}, 1), ConfigError);
}

}  // namespace
}  // namespace nanovla
