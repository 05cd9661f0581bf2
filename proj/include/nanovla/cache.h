#ifndef NANOVLA_CACHE_H_
#define NANOVLA_CACHE_H_

#include <cstddef>
#include <cstdint>
#include <list>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "nanovla/stubs.h"

namespace nanovla {

// Abstract compute units per invocation. c_act is the per-step actuation cost
// used by the executor throughput model; it does not enter episode_cost.
struct CostModel {
  double c_vis = 1.0;
  double c_lang = 1.0;
  double c_dec = 1.0;
  double c_act = 0.0;

  void validate() const;
};

double episode_cost(std::size_t steps, const CostModel& m, bool cached);
double speedup(std::size_t steps, const CostModel& m);

struct CacheEntry {
  std::uint64_t key = 0;
  std::vector<double> embedding;
  std::size_t hit_count = 0;
  std::uint64_t created_at = 0;
};

struct CacheLookup {
  std::vector<double> embedding;
  bool hit = false;
  double cost_charged = 0.0;
};

struct EvictionEvent {
  std::uint64_t key = 0;
  std::uint64_t tick = 0;
};

struct CacheStats {
  std::size_t hits = 0;
  std::size_t misses = 0;
  std::size_t evictions = 0;
  double charged_cost = 0.0;

  static std::string csv_header();
  std::string csv_row() const;
};

// LRU instruction-embedding cache. get_or_encode takes the exclusive lock, so
// concurrent callers observe a single total order of lookups.
class InstructionCache {
 public:
  explicit InstructionCache(std::size_t capacity, double miss_cost = 1.0);

  CacheLookup get_or_encode(std::string_view instruction,
                            const LanguageEncoderStub& encoder);

  // Read-only probe that leaves recency and statistics untouched.
  bool contains(std::string_view instruction) const;
  std::size_t size() const;
  std::size_t capacity() const { return capacity_; }
  CacheStats stats() const;
  std::vector<EvictionEvent> evictions() const;
  void clear();

 private:
  using Order = std::list<std::uint64_t>;

  struct Slot {
    CacheEntry entry;
    Order::iterator position;
  };

  std::size_t capacity_;
  double miss_cost_;
  mutable std::shared_mutex mutex_;
  std::unordered_map<std::uint64_t, Slot> slots_;
  Order order_;  // front = most recently used
  std::uint64_t tick_ = 0;
  CacheStats stats_;
  std::vector<EvictionEvent> evictions_;
};

std::uint64_t instruction_key(std::string_view instruction);

// Nanoseconds per call of each stub component, measured as the median of
// `repeats` timed invocations. c_dec covers `dec_units` of simulated decoding.
struct StubPipeline {
  const ImageEncoderStub* image = nullptr;
  const LanguageEncoderStub* language = nullptr;
  double dec_units = 0.0;
};

CostModel calibrate_cost_model(const StubPipeline& pipeline, std::size_t repeats);

// Wall-clock nanoseconds for one T-step episode through the stubs, with or
// without instruction caching. Returns the median over `repeats` runs.
double measure_episode_ns(const StubPipeline& pipeline, std::size_t steps, bool cached,
                          std::size_t repeats);

}  // namespace nanovla

#endif  // NANOVLA_CACHE_H_
