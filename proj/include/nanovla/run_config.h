#ifndef NANOVLA_RUN_CONFIG_H_
#define NANOVLA_RUN_CONFIG_H_

#include <string>

#include "nanovla/bench.h"
#include "nanovla/config.h"

namespace nanovla {

// Sections: policy, train, env, data, init, stubs, exec, costs. Missing keys
// keep the struct defaults.
EnvConfig env_config_from(const KeyValueConfig& section);
KeyValueConfig env_config_to(const EnvConfig& env);
TrainConfig train_config_from(const KeyValueConfig& section);
KeyValueConfig train_config_to(const TrainConfig& train);
CostModel cost_model_from(const KeyValueConfig& section);

PolicyRecipe recipe_from_config(const KeyValueConfig& cfg);
// Inverse of recipe_from_config; this is the manifest stored in checkpoints.
KeyValueConfig recipe_to_config(const PolicyRecipe& recipe);

ExecutorConfig executor_from_config(const KeyValueConfig& section, std::size_t horizon);
ChunkingBenchConfig chunking_from_config(const KeyValueConfig& cfg);
RouteSweepConfig route_sweep_from_config(const KeyValueConfig& section);

}  // namespace nanovla

#endif  // NANOVLA_RUN_CONFIG_H_
