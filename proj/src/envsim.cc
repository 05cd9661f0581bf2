#include "nanovla/envsim.h"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "nanovla/errors.h"
#include "nanovla/rng.h"

namespace nanovla {
namespace {

constexpr double kReachTolerance = 1e-12;
constexpr double kStepScale = 50.0;

double norm(const Vec2& v) { return std::hypot(v[0], v[1]); }
Vec2 sub(const Vec2& a, const Vec2& b) { return {a[0] - b[0], a[1] - b[1]}; }
double dist(const Vec2& a, const Vec2& b) { return norm(sub(a, b)); }

Vec2 clamp_unit(Vec2 p) {
  return {std::clamp(p[0], 0.0, 1.0), std::clamp(p[1], 0.0, 1.0)};
}

bool in_unit(const Vec2& p) {
  return p[0] >= 0.0 && p[0] <= 1.0 && p[1] >= 0.0 && p[1] <= 1.0;
}

// Straight-line move of at most `limit`, landing exactly on `to` when in reach.
Vec2 step_toward(const Vec2& from, const Vec2& to, double limit) {
  const Vec2 d = sub(to, from);
  const double n = norm(d);
  if (n <= limit + kReachTolerance) return d;
  return {d[0] / n * limit, d[1] / n * limit};
}

Vec2 random_point(Rng& rng, double margin) {
  return {rng.uniform(margin, 1.0 - margin), rng.uniform(margin, 1.0 - margin)};
}

const char* kColors[] = {"red", "blue", "green", "yellow"};
const char* kObjects[] = {"block", "cube", "cup", "ball"};
const char* kZones[] = {"bin", "tray", "box", "basket"};

std::string make_instruction(Difficulty d, Rng& rng) {
  const std::string color = kColors[rng.below(4)];
  const std::string object = kObjects[rng.below(4)];
  const std::string zone = kZones[rng.below(4)];
  switch (d) {
    case Difficulty::kSimple:
      return "pick up the " + color + " " + object + " and put it in the " + zone;
    case Difficulty::kPrecise:
      return "carefully align the " + color + " " + object +
             " and set it exactly inside the small " + zone;
    case Difficulty::kLongHorizon:
      return "first reach the " + color + " " + object +
             " then carry it across the table and drop it into the far " + zone;
  }
  return {};
}

}  // namespace

void EnvConfig::validate() const {
  if (!(delta > 0.0) || !(grasp_radius > 0.0) || episode_cap == 0 || image_size == 0 ||
      !(blob_sigma > 0.0) || !(brightness >= 0.0)) {
    throw ConfigError("env config: delta, grasp radius, cap, image size and blob sigma "
                      "must be positive");
  }
}

const char* difficulty_name(Difficulty d) {
  switch (d) {
    case Difficulty::kSimple: return "simple";
    case Difficulty::kPrecise: return "precise";
    case Difficulty::kLongHorizon: return "long_horizon";
  }
  return "?";
}

Difficulty parse_difficulty(const std::string& name) {
  if (name == "simple") return Difficulty::kSimple;
  if (name == "precise") return Difficulty::kPrecise;
  if (name == "long_horizon") return Difficulty::kLongHorizon;
  throw ConfigError("unknown difficulty '" + name + "'");
}

void TaskSpec::validate() const {
  if (object_index >= objects.size()) {
    throw DataError("task " + id + ": object index out of range");
  }
  if (!in_unit(effector_start) || !in_unit(target_zone.lo) || !in_unit(target_zone.hi)) {
    throw DataError("task " + id + ": layout outside the workspace");
  }
  for (const Vec2& o : objects) {
    if (!in_unit(o)) throw DataError("task " + id + ": object outside the workspace");
  }
  for (const Disturbance& d : disturbances) {
    if (d.object >= objects.size() || !in_unit(d.position)) {
      throw DataError("task " + id + ": disturbance references a bad object or position");
    }
  }
}

EnvState reset(const TaskSpec& task) {
  task.validate();
  EnvState s;
  s.effector = task.effector_start;
  s.objects = task.objects;
  s.target_object = task.object_index;
  s.zone = task.target_zone;
  s.disturbances = task.disturbances;
  return s;
}

std::vector<double> proprio_features(const EnvState& s) {
  return {s.effector[0], s.effector[1], s.gripper_closed ? 1.0 : -1.0};
}

std::vector<double> env_features(const EnvState& s, const EnvConfig& cfg) {
  const Vec2& obj = s.objects[s.target_object];
  const Vec2 reach = sub(obj, s.effector);
  const Vec2 carry = sub(s.zone.center(), obj);
  const double reach_len = norm(reach), carry_len = norm(carry);
  const double reach_scale = std::max(reach_len, cfg.delta);
  const double carry_scale = std::max(carry_len, cfg.delta);
  return {reach[0] / reach_scale,
          reach[1] / reach_scale,
          reach_len / cfg.delta / kStepScale,
          carry[0] / carry_scale,
          carry[1] / carry_scale,
          carry_len / cfg.delta / kStepScale,
          s.grasped == static_cast<int>(s.target_object) ? 1.0 : 0.0};
}

Observation observe(const EnvState& s, const EnvConfig& cfg) {
  const std::size_t n = cfg.image_size;
  Tensor image({3, n, n});
  const double inv_two_sigma2 = 1.0 / (2.0 * cfg.blob_sigma * cfg.blob_sigma);
  for (std::size_t j = 0; j < n; ++j) {
    const double y = (static_cast<double>(j) + 0.5) / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double x = (static_cast<double>(i) + 0.5) / static_cast<double>(n);
      double red = 0.0;
      for (std::size_t k = 0; k < s.objects.size(); ++k) {
        const double dx = x - s.objects[k][0], dy = y - s.objects[k][1];
        const double weight = k == s.target_object ? 1.0 : 0.5;
        red += weight * std::exp(-(dx * dx + dy * dy) * inv_two_sigma2);
      }
      const double ex = x - s.effector[0], ey = y - s.effector[1];
      const double green =
          (s.gripper_closed ? 0.5 : 1.0) * std::exp(-(ex * ex + ey * ey) * inv_two_sigma2);
      const double blue = s.zone.contains({x, y}) ? 1.0 : 0.0;
      image[(0 * n + j) * n + i] = cfg.brightness * red;
      image[(1 * n + j) * n + i] = cfg.brightness * green;
      image[(2 * n + j) * n + i] = cfg.brightness * blue;
    }
  }
  return Observation{std::move(image), proprio_features(s), env_features(s, cfg)};
}

bool is_success(const EnvState& s) {
  return s.grasped == static_cast<int>(s.target_object) &&
         s.zone.contains(s.objects[s.target_object]);
}

StepResult step(const EnvState& s, std::span<const double> action, const EnvConfig& cfg) {
  if (action.size() != kActionDim) {
    throw DimensionError("env step: action has " + std::to_string(action.size()) +
                         " components, expected 3");
  }
  for (double a : action) {
    if (!std::isfinite(a)) throw NumericError("env step: non-finite action", "action");
  }
  StepResult r{s, false, false};
  EnvState& n = r.state;
  for (const Disturbance& d : n.disturbances) {
    if (d.step != n.step) continue;
    n.objects[d.object] = d.position;
    if (n.grasped == static_cast<int>(d.object)) n.grasped = kNoObject;
  }

  const double dx = std::clamp(action[0], -cfg.delta, cfg.delta);
  const double dy = std::clamp(action[1], -cfg.delta, cfg.delta);
  n.effector = clamp_unit({n.effector[0] + dx, n.effector[1] + dy});
  if (action[2] > 0.0) {
    n.gripper_closed = true;
  } else if (action[2] < 0.0) {
    n.gripper_closed = false;
    n.grasped = kNoObject;
  }

  if (n.grasped != kNoObject) {
    n.objects[n.grasped] = clamp_unit(
        {n.effector[0] + n.grasp_offset[0], n.effector[1] + n.grasp_offset[1]});
  } else if (n.gripper_closed &&
             dist(n.effector, n.objects[n.target_object]) <= cfg.grasp_radius) {
    n.grasped = static_cast<int>(n.target_object);
    n.grasp_offset = sub(n.objects[n.target_object], n.effector);
  }

  ++n.step;
  r.success = is_success(n);
  r.failure = !r.success && n.step >= cfg.episode_cap;
  return r;
}

std::uint64_t state_digest(const EnvState& s) {
  std::vector<double> v = proprio_features(s);
  for (const Vec2& o : s.objects) v.insert(v.end(), o.begin(), o.end());
  v.push_back(static_cast<double>(s.grasped));
  v.push_back(static_cast<double>(s.step));
  std::string bytes(v.size() * sizeof(double), '\0');
  std::memcpy(bytes.data(), v.data(), bytes.size());
  return fnv1a(bytes);
}

Environment::Environment(TaskSpec task, EnvConfig cfg)
    : task_(std::move(task)), cfg_(cfg) {
  cfg_.validate();
  reset();
}

void Environment::reset() {
  state_ = nanovla::reset(task_);
  done_ = false;
}

StepResult Environment::step(std::span<const double> action) {
  if (done_) throw ContractViolation("environment: step after episode end");
  StepResult r = nanovla::step(state_, action, cfg_);
  state_ = r.state;
  done_ = r.success || r.failure;
  return r;
}

Action expert_action(const EnvState& s, const EnvConfig& cfg) {
  const Vec2& obj = s.objects[s.target_object];
  if (s.grasped == static_cast<int>(s.target_object)) {
    const Vec2 goal = s.zone.center();
    const Vec2 held_goal = sub(goal, s.grasp_offset);
    const Vec2 m = step_toward(s.effector, held_goal, cfg.delta);
    return {m[0], m[1], 1.0};
  }
  const Vec2 m = step_toward(s.effector, obj, cfg.delta);
  const bool arrives = dist(s.effector, obj) <= cfg.delta + kReachTolerance;
  return {m[0], m[1], arrives ? 1.0 : -1.0};
}

Demonstration scripted_expert(const TaskSpec& task, const EnvConfig& cfg) {
  cfg.validate();
  Demonstration demo;
  EnvState s = reset(task);
  while (true) {
    const Action a = expert_action(s, cfg);
    demo.states.push_back(s);
    demo.actions.push_back(a);
    StepResult r = step(s, a, cfg);
    s = std::move(r.state);
    if (r.success) {
      demo.success = true;
      return demo;
    }
    if (r.failure) {
      throw DataError("scripted expert: task " + task.id + " not solvable within " +
                      std::to_string(cfg.episode_cap) + " steps");
    }
  }
}

Action normalize_action(const Action& raw, const EnvConfig& cfg) {
  const double g = raw[2] > 0.0 ? 1.0 : (raw[2] < 0.0 ? -1.0 : 0.0);
  return {raw[0] / cfg.delta, raw[1] / cfg.delta, g};
}

Action denormalize_action(std::span<const double> a, const EnvConfig& cfg) {
  if (a.size() != kActionDim) throw DimensionError("denormalize_action: need 3 values");
  return {a[0] * cfg.delta, a[1] * cfg.delta, a[2]};
}

std::vector<DemoWindow> demo_windows(const Demonstration& demo, const EnvConfig& cfg,
                                     std::size_t horizon, std::size_t stride) {
  if (horizon == 0 || stride == 0) throw ConfigError("demo windows: H and stride >= 1");
  if (demo.actions.empty()) throw DataError("demo windows: empty demonstration");
  std::vector<DemoWindow> out;
  for (std::size_t start = 0; start < demo.size(); start += stride) {
    DemoWindow w{start, Tensor({horizon, kActionDim})};
    for (std::size_t t = 0; t < horizon; ++t) {
      const std::size_t src = std::min(start + t, demo.size() - 1);
      const Action a = normalize_action(demo.actions[src], cfg);
      for (std::size_t c = 0; c < kActionDim; ++c) w.actions(t, c) = a[c];
    }
    out.push_back(std::move(w));
  }
  return out;
}

Tensor expert_chunk(const EnvState& start, const EnvConfig& cfg, std::size_t horizon) {
  if (horizon == 0) throw ConfigError("expert chunk: horizon must be >= 1");
  Tensor chunk({horizon, kActionDim});
  EnvConfig open_loop = cfg;
  open_loop.episode_cap = start.step + horizon + 1;
  EnvState s = start;
  s.disturbances.clear();
  Action a{};
  bool finished = false;
  for (std::size_t k = 0; k < horizon; ++k) {
    if (!finished) {
      a = normalize_action(expert_action(s, cfg), cfg);
      StepResult r = step(s, denormalize_action(a, cfg), open_loop);
      finished = r.success;
      s = std::move(r.state);
    }
    for (std::size_t c = 0; c < kActionDim; ++c) chunk(k, c) = a[c];
  }
  return chunk;
}

TaskSpec make_task(std::uint64_t seed, const TaskOptions& opts, const std::string& id) {
  Rng rng(seed);
  TaskSpec t;
  t.id = id;
  t.difficulty = opts.difficulty;
  t.instruction = make_instruction(opts.difficulty, rng);
  const double half = opts.difficulty == Difficulty::kPrecise ? 0.035 : 0.07;
  const double min_path = opts.difficulty == Difficulty::kLongHorizon ? 1.0 : 0.3;
  const double max_path = opts.difficulty == Difficulty::kLongHorizon ? 1.5 : 0.9;
  const std::size_t distractors = opts.difficulty == Difficulty::kSimple ? 1 : 2;
  for (int attempt = 0;; ++attempt) {
    if (attempt > 10000) throw DataError("make_task: could not place layout for " + id);
    const Vec2 eff = random_point(rng, 0.1);
    const Vec2 obj = random_point(rng, 0.1);
    const Vec2 zone = random_point(rng, 0.15);
    const double reach = dist(eff, obj), carry = dist(obj, zone);
    if (reach < 0.1 || carry < 0.25 || reach + carry < min_path || reach + carry > max_path) {
      continue;
    }
    t.effector_start = eff;
    t.target_zone = Rect{{zone[0] - half, zone[1] - half}, {zone[0] + half, zone[1] + half}};
    t.objects = {obj};
    break;
  }
  while (t.objects.size() < 1 + distractors) {
    const Vec2 p = random_point(rng, 0.05);
    if (t.target_zone.contains(p) || dist(p, t.objects[0]) < 0.15) continue;
    t.objects.push_back(p);
  }
  t.object_index = 0;
  if (opts.disturbed) {
    const std::size_t span = opts.disturb_max_step - opts.disturb_min_step + 1;
    Disturbance d;
    d.step = opts.disturb_min_step + rng.below(span);
    d.object = 0;
    do {
      d.position = random_point(rng, 0.1);
    } while (dist(d.position, t.target_zone.center()) < 0.25 ||
             dist(d.position, t.objects[0]) < 0.3);
    t.disturbances.push_back(d);
  }
  t.validate();
  return t;
}

std::vector<TaskSpec> make_suite(const std::string& name, std::size_t count,
                                 std::uint64_t seed) {
  std::vector<TaskSpec> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    TaskOptions opts;
    if (name == "simple") {
      opts.difficulty = Difficulty::kSimple;
    } else if (name == "precise") {
      opts.difficulty = Difficulty::kPrecise;
    } else if (name == "long_horizon") {
      opts.difficulty = Difficulty::kLongHorizon;
    } else if (name == "mixed") {
      opts.difficulty = static_cast<Difficulty>(i % 3);
    } else if (name == "disturbance") {
      opts.difficulty = Difficulty::kSimple;
      opts.disturbed = true;
    } else {
      throw ConfigError("unknown task suite '" + name + "'");
    }
    out.push_back(make_task(mix_seed(seed, i), opts, name + "-" + std::to_string(i)));
  }
  return out;
}

std::vector<PlantedTask> make_task_population(std::size_t n_tasks, const DifficultyMix& mix,
                                              std::uint64_t seed) {
  if (n_tasks < 2) throw ConfigError("task population: need at least 2 tasks");
  const double total = mix.simple + mix.precise + mix.long_horizon;
  if (!(mix.simple >= 0 && mix.precise >= 0 && mix.long_horizon >= 0) || !(total > 0)) {
    throw ConfigError("task population: difficulty mix must be nonnegative, nonzero");
  }
  Rng rng(seed);
  std::vector<PlantedTask> out;
  out.reserve(n_tasks);
  for (std::size_t i = 0; i < n_tasks; ++i) {
    const double u = rng.uniform() * total;
    TaskOptions opts;
    opts.difficulty = u < mix.simple                  ? Difficulty::kSimple
                      : u < mix.simple + mix.precise ? Difficulty::kPrecise
                                                      : Difficulty::kLongHorizon;
    PlantedTask p;
    p.spec = make_task(rng.next_u64(), opts, "task-" + std::to_string(i));
    switch (opts.difficulty) {
      case Difficulty::kSimple:
        p.p_light = rng.uniform(0.80, 0.95);
        p.p_heavy = p.p_light - rng.uniform(0.0, 0.04);
        break;
      case Difficulty::kPrecise:
        p.p_heavy = rng.uniform(0.75, 0.90);
        p.p_light = p.p_heavy - rng.uniform(0.15, 0.25);
        break;
      case Difficulty::kLongHorizon:
        p.p_heavy = rng.uniform(0.65, 0.85);
        p.p_light = p.p_heavy - rng.uniform(0.20, 0.35);
        break;
    }
    out.push_back(std::move(p));
  }
  return out;
}

}  // namespace nanovla
