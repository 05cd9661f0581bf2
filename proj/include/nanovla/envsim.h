#ifndef NANOVLA_ENVSIM_H_
#define NANOVLA_ENVSIM_H_

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "nanovla/tensor.h"

namespace nanovla {

using Vec2 = std::array<double, 2>;
using Action = std::array<double, 3>;  // dx, dy, gripper command

struct EnvConfig {
  double delta = 0.02;
  double grasp_radius = 0.04;
  std::size_t episode_cap = 300;
  std::size_t image_size = 32;
  double blob_sigma = 0.04;
  double brightness = 1.0;

  void validate() const;
};

struct Rect {
  Vec2 lo{0.0, 0.0};
  Vec2 hi{0.0, 0.0};

  bool contains(const Vec2& p) const {
    return p[0] >= lo[0] && p[0] <= hi[0] && p[1] >= lo[1] && p[1] <= hi[1];
  }
  Vec2 center() const { return {(lo[0] + hi[0]) / 2, (lo[1] + hi[1]) / 2}; }
};

enum class Difficulty { kSimple, kPrecise, kLongHorizon };

const char* difficulty_name(Difficulty d);
Difficulty parse_difficulty(const std::string& name);

// At the start of step `step` the object is moved to `position`; a held
// object is knocked out of the gripper.
struct Disturbance {
  std::size_t step = 0;
  std::size_t object = 0;
  Vec2 position{0.0, 0.0};
};

struct TaskSpec {
  std::string id;
  std::string instruction;
  Difficulty difficulty = Difficulty::kSimple;
  std::size_t object_index = 0;
  Rect target_zone;
  Vec2 effector_start{0.5, 0.5};
  std::vector<Vec2> objects;
  std::vector<Disturbance> disturbances;

  void validate() const;
};

inline constexpr int kNoObject = -1;

struct EnvState {
  Vec2 effector{0.5, 0.5};
  bool gripper_closed = false;
  std::vector<Vec2> objects;
  int grasped = kNoObject;
  Vec2 grasp_offset{0.0, 0.0};
  std::size_t target_object = 0;
  Rect zone;
  std::size_t step = 0;
  std::vector<Disturbance> disturbances;
};

struct Observation {
  Tensor image;                 // [3, S, S]: objects, effector, zone
  std::vector<double> proprio;  // x, y, gripper (+1 closed, -1 open)
  std::vector<double> env;      // see kEnvFeatureDim
};

// Reach (object - effector) and carry (zone centre - object) vectors, each as
// v / max(|v|, delta) followed by |v| / (50 delta); then the grasped flag.
inline constexpr std::size_t kEnvFeatureDim = 7;
inline constexpr std::size_t kProprioDim = 3;
inline constexpr std::size_t kActionDim = 3;

struct StepResult {
  EnvState state;
  bool success = false;
  bool failure = false;
};

EnvState reset(const TaskSpec& task);
Observation observe(const EnvState& s, const EnvConfig& cfg);
std::vector<double> proprio_features(const EnvState& s);
std::vector<double> env_features(const EnvState& s, const EnvConfig& cfg);
StepResult step(const EnvState& s, std::span<const double> action, const EnvConfig& cfg);
bool is_success(const EnvState& s);
std::uint64_t state_digest(const EnvState& s);

// Stateful wrapper used by the executor.
class Environment {
 public:
  Environment(TaskSpec task, EnvConfig cfg);

  void reset();
  Observation observe() const { return nanovla::observe(state_, cfg_); }
  StepResult step(std::span<const double> action);

  const EnvState& state() const { return state_; }
  const TaskSpec& task() const { return task_; }
  const EnvConfig& config() const { return cfg_; }
  bool done() const { return done_; }

 private:
  TaskSpec task_;
  EnvConfig cfg_;
  EnvState state_;
  bool done_ = false;
};

// Waypoint controller: approach, grasp, transport. Release is implicit since
// the episode ends as soon as the held object is inside the zone.
Action expert_action(const EnvState& s, const EnvConfig& cfg);

struct Demonstration {
  std::vector<EnvState> states;  // states[i] is observed before actions[i]
  std::vector<Action> actions;
  bool success = false;

  std::size_t size() const { return actions.size(); }
};

// Rolls the expert until success; throws DataError if it cannot finish
// within the episode cap.
Demonstration scripted_expert(const TaskSpec& task, const EnvConfig& cfg);

// Policy-space actions: translation divided by delta, gripper as its sign.
Action normalize_action(const Action& raw, const EnvConfig& cfg);
Action denormalize_action(std::span<const double> normalized, const EnvConfig& cfg);

struct DemoWindow {
  std::size_t start = 0;
  Tensor actions;  // [horizon, 3], normalized
};

// Windows begin at 0, stride, 2*stride, ...; the tail is padded by repeating
// the last action.
std::vector<DemoWindow> demo_windows(const Demonstration& demo, const EnvConfig& cfg,
                                     std::size_t horizon, std::size_t stride);

// The expert's open-loop plan from `s` as a [horizon, 3] normalized chunk,
// simulated without pending disturbances and padded with the final action once
// the task completes.
Tensor expert_chunk(const EnvState& s, const EnvConfig& cfg, std::size_t horizon);

struct TaskOptions {
  Difficulty difficulty = Difficulty::kSimple;
  bool disturbed = false;
  std::size_t disturb_min_step = 15;
  std::size_t disturb_max_step = 40;
};

TaskSpec make_task(std::uint64_t seed, const TaskOptions& opts, const std::string& id);

// Named suites: simple, precise, long_horizon, mixed, disturbance.
std::vector<TaskSpec> make_suite(const std::string& name, std::size_t count,
                                 std::uint64_t seed);

struct PlantedTask {
  TaskSpec spec;
  double p_light = 0.0;
  double p_heavy = 0.0;
};

struct DifficultyMix {
  double simple = 0.5;
  double precise = 0.25;
  double long_horizon = 0.25;
};

std::vector<PlantedTask> make_task_population(std::size_t n_tasks, const DifficultyMix& mix,
                                              std::uint64_t seed);

}  // namespace nanovla

#endif  // NANOVLA_ENVSIM_H_
