#include "nanovla/cache.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <mutex>

#include "nanovla/config.h"
#include "nanovla/errors.h"
#include "nanovla/rng.h"

namespace nanovla {

void CostModel::validate() const {
  for (double c : {c_vis, c_lang, c_dec, c_act}) {
    if (!(c >= 0.0) || !std::isfinite(c)) {
      throw ConfigError("cost model: costs must be finite and >= 0");
    }
  }
}

double episode_cost(std::size_t steps, const CostModel& m, bool cached) {
  if (steps == 0) throw ConfigError("episode_cost: T must be >= 1");
  m.validate();
  const double t = static_cast<double>(steps);
  if (cached) return t * m.c_vis + m.c_lang + t * m.c_dec;
  return t * (m.c_vis + m.c_lang + m.c_dec);
}

double speedup(std::size_t steps, const CostModel& m) {
  const double denom = episode_cost(steps, m, true);
  if (denom <= 0.0) throw NumericError("speedup: all costs are zero, ratio undefined");
  return episode_cost(steps, m, false) / denom;
}

std::string CacheStats::csv_header() { return "hits,misses,evictions,charged_cost"; }

std::string CacheStats::csv_row() const {
  return std::to_string(hits) + "," + std::to_string(misses) + "," +
         std::to_string(evictions) + "," + format_double(charged_cost);
}

std::uint64_t instruction_key(std::string_view instruction) { return fnv1a(instruction); }

InstructionCache::InstructionCache(std::size_t capacity, double miss_cost)
    : capacity_(capacity), miss_cost_(miss_cost) {
  if (capacity == 0) throw ConfigError("instruction cache: capacity must be >= 1");
  if (!(miss_cost >= 0.0)) throw ConfigError("instruction cache: miss cost must be >= 0");
}

CacheLookup InstructionCache::get_or_encode(std::string_view instruction,
                                            const LanguageEncoderStub& encoder) {
  if (instruction.empty()) throw DataError("instruction cache: empty instruction");
  const std::uint64_t key = instruction_key(instruction);
  std::unique_lock lock(mutex_);
  ++tick_;
  if (auto it = slots_.find(key); it != slots_.end()) {
    Slot& slot = it->second;
    order_.splice(order_.begin(), order_, slot.position);
    ++slot.entry.hit_count;
    ++stats_.hits;
    return CacheLookup{slot.entry.embedding, true, 0.0};
  }
  std::vector<double> embedding = encoder.encode(instruction);
  if (slots_.size() == capacity_) {
    const std::uint64_t victim = order_.back();
    order_.pop_back();
    slots_.erase(victim);
    evictions_.push_back(EvictionEvent{victim, tick_});
    ++stats_.evictions;
  }
  order_.push_front(key);
  slots_.emplace(key, Slot{CacheEntry{key, embedding, 0, tick_}, order_.begin()});
  ++stats_.misses;
  stats_.charged_cost += miss_cost_;
  return CacheLookup{std::move(embedding), false, miss_cost_};
}

bool InstructionCache::contains(std::string_view instruction) const {
  std::shared_lock lock(mutex_);
  return slots_.count(instruction_key(instruction)) != 0;
}

std::size_t InstructionCache::size() const {
  std::shared_lock lock(mutex_);
  return slots_.size();
}

CacheStats InstructionCache::stats() const {
  std::shared_lock lock(mutex_);
  return stats_;
}

std::vector<EvictionEvent> InstructionCache::evictions() const {
  std::shared_lock lock(mutex_);
  return evictions_;
}

void InstructionCache::clear() {
  std::unique_lock lock(mutex_);
  slots_.clear();
  order_.clear();
  stats_ = CacheStats{};
  evictions_.clear();
}

namespace {

using Clock = std::chrono::steady_clock;

template <typename Fn>
double median_ns(std::size_t repeats, Fn&& fn) {
  std::vector<double> samples;
  samples.reserve(repeats);
  for (std::size_t r = 0; r < std::max<std::size_t>(repeats, 1); ++r) {
    const auto start = Clock::now();
    fn();
    samples.push_back(std::chrono::duration<double, std::nano>(Clock::now() - start).count());
  }
  std::nth_element(samples.begin(), samples.begin() + samples.size() / 2, samples.end());
  return samples[samples.size() / 2];
}

void check_pipeline(const StubPipeline& p) {
  if (p.image == nullptr || p.language == nullptr) {
    throw ConfigError("stub pipeline: image and language stubs are required");
  }
}

Tensor blank_image(const ImageEncoderStub& stub) {
  Tensor img(stub.image_shape());
  img.fill(0.5);
  return img;
}

}  // namespace

CostModel calibrate_cost_model(const StubPipeline& p, std::size_t repeats) {
  check_pipeline(p);
  const Tensor img = blank_image(*p.image);
  CostModel m;
  m.c_vis = median_ns(repeats, [&] { (void)p.image->encode(img); });
  m.c_lang = median_ns(repeats, [&] { (void)p.language->encode("calibration probe"); });
  m.c_dec = median_ns(repeats, [&] { simulate_compute(p.dec_units); });
  return m;
}

double measure_episode_ns(const StubPipeline& p, std::size_t steps, bool cached,
                          std::size_t repeats) {
  check_pipeline(p);
  const Tensor img = blank_image(*p.image);
  const std::string instruction = "pick up the red block and place it in the zone";
  return median_ns(repeats, [&] {
    InstructionCache cache(4);
    for (std::size_t t = 0; t < steps; ++t) {
      (void)p.image->encode(img);
      if (cached) {
        (void)cache.get_or_encode(instruction, *p.language);
      } else {
        (void)p.language->encode(instruction);
      }
      simulate_compute(p.dec_units);
    }
  });
}

}  // namespace nanovla
