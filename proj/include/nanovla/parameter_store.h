#ifndef NANOVLA_PARAMETER_STORE_H_
#define NANOVLA_PARAMETER_STORE_H_

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "nanovla/tensor.h"

namespace nanovla {

// Named tensors in lexicographic name order. The version counter increments
// on every mutation so readers can detect stale copies.
class ParameterStore {
 public:
  using Map = std::map<std::string, Tensor>;

  void set(const std::string& name, Tensor value);
  const Tensor& get(const std::string& name) const;
  // Mutable access counts as a mutation.
  Tensor& mutable_get(const std::string& name);
  bool contains(const std::string& name) const;
  void erase(const std::string& name);

  std::vector<std::string> names() const;
  std::size_t size() const { return tensors_.size(); }
  std::size_t total_elements() const;
  std::uint64_t version() const { return version_; }

  Map::const_iterator begin() const { return tensors_.begin(); }
  Map::const_iterator end() const { return tensors_.end(); }

  // Same names and shapes, all zeros.
  ParameterStore zeros_like() const;
  // this += scale * other for every shared name; other must be a subset.
  void axpy(double scale, const ParameterStore& other);
  void scale(double factor);

  friend bool operator==(const ParameterStore& a, const ParameterStore& b) {
    return a.tensors_ == b.tensors_;
  }

 private:
  Map tensors_;
  std::uint64_t version_ = 0;
};

}  // namespace nanovla

#endif  // NANOVLA_PARAMETER_STORE_H_
