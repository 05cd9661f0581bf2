#include "nanovla/parameter_store.h"

#include "nanovla/errors.h"

namespace nanovla {

void ParameterStore::set(const std::string& name, Tensor value) {
  tensors_[name] = std::move(value);
  ++version_;
}

const Tensor& ParameterStore::get(const std::string& name) const {
  auto it = tensors_.find(name);
  if (it == tensors_.end()) {
    throw ConfigError("parameter store: no tensor named '" + name + "'");
  }
  return it->second;
}

Tensor& ParameterStore::mutable_get(const std::string& name) {
  auto it = tensors_.find(name);
  if (it == tensors_.end()) {
    throw ConfigError("parameter store: no tensor named '" + name + "'");
  }
  ++version_;
  return it->second;
}

bool ParameterStore::contains(const std::string& name) const {
  return tensors_.count(name) != 0;
}

void ParameterStore::erase(const std::string& name) {
  if (tensors_.erase(name)) ++version_;
}

std::vector<std::string> ParameterStore::names() const {
  std::vector<std::string> out;
  out.reserve(tensors_.size());
  for (const auto& [name, _] : tensors_) out.push_back(name);
  return out;
}

std::size_t ParameterStore::total_elements() const {
  std::size_t n = 0;
  for (const auto& [_, t] : tensors_) n += t.size();
  return n;
}

ParameterStore ParameterStore::zeros_like() const {
  ParameterStore out;
  for (const auto& [name, t] : tensors_) out.tensors_.emplace(name, Tensor(t.shape()));
  return out;
}

void ParameterStore::axpy(double scale, const ParameterStore& other) {
  for (const auto& [name, t] : other.tensors_) {
    Tensor& dst = mutable_get(name);
    require_shape(t, dst.shape(), name.c_str());
    for (std::size_t i = 0; i < t.size(); ++i) dst[i] += scale * t[i];
  }
}

void ParameterStore::scale(double factor) {
  for (auto& [_, t] : tensors_) {
    for (double& v : t.data()) v *= factor;
  }
  ++version_;
}

}  // namespace nanovla
