#ifndef NANOVLA_LSAC_H_
#define NANOVLA_LSAC_H_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "nanovla/cache.h"
#include "nanovla/envsim.h"
#include "nanovla/policy.h"
#include "nanovla/stubs.h"

namespace nanovla {

enum class ChunkMode { kLongShort, kFixed };

const char* chunk_mode_name(ChunkMode m);
ChunkMode parse_chunk_mode(const std::string& name);

struct ExecutorConfig {
  std::size_t horizon = 100;  // H_train
  std::size_t window = 10;    // h
  ChunkMode mode = ChunkMode::kLongShort;
  std::size_t max_steps = 300;

  void validate() const;
  static ExecutorConfig fixed(std::size_t chunk, std::size_t max_steps);
};

// Everything a planner may look at when asked for a chunk.
struct PlanRequest {
  const EnvState& state;
  const Observation& observation;
  const ModalityInputs& inputs;
};

// Returns a [horizon, 3] chunk of normalized actions.
using Planner = std::function<ActionChunk(const PlanRequest&)>;

struct Perception {
  const ImageEncoderStub* image = nullptr;
  const LanguageEncoderStub* language = nullptr;
  InstructionCache* cache = nullptr;
  CostModel costs;
  std::size_t latent_dim = 8;
};

struct TraceStep {
  std::size_t t = 0;
  std::uint64_t observation_digest = 0;
  std::size_t plan_id = 0;
  std::size_t index_in_plan = 0;
  Action action{};
  bool success = false;
  bool failure = false;
  bool cache_hit = false;
  double cost = 0.0;
};

struct EpisodeTrace {
  std::vector<TraceStep> steps;
  std::size_t plans = 0;
  bool success = false;
  bool failure = false;
  bool truncated = false;  // max_steps reached inside an execution window

  static std::string csv_header();
  void write_csv(std::ostream& out) const;
  friend bool operator==(const EpisodeTrace&, const EpisodeTrace&) = default;
};

inline bool operator==(const TraceStep& a, const TraceStep& b) {
  return a.t == b.t && a.observation_digest == b.observation_digest &&
         a.plan_id == b.plan_id && a.index_in_plan == b.index_in_plan &&
         a.action == b.action && a.success == b.success && a.failure == b.failure &&
         a.cache_hit == b.cache_hit && a.cost == b.cost;
}

EpisodeTrace run_episode(Environment& env, const Planner& planner, const Perception& perception,
                         const ExecutorConfig& cfg);

double replan_ratio(const ExecutorConfig& cfg);

// Control steps per unit time: h / (plan_latency + h * c_act).
double throughput_model(const ExecutorConfig& cfg, const CostModel& m, double plan_latency);

// Planners used by evaluation and tests.
// theta is held by reference and must outlive the planner.
Planner policy_planner(const ParameterStore& theta, const PolicyConfig& cfg);
// Rolls the scripted expert forward open-loop from the observed state.
Planner expert_planner(std::size_t horizon, const EnvConfig& env);
Planner random_planner(std::size_t horizon, std::uint64_t seed);

}  // namespace nanovla

#endif  // NANOVLA_LSAC_H_
