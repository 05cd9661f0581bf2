#ifndef NANOVLA_GRAPH_H_
#define NANOVLA_GRAPH_H_

#include <cstddef>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "nanovla/kernels.h"
#include "nanovla/parameter_store.h"

namespace nanovla {

// Reverse-mode tape over the kernels in nn::. Nodes are appended in
// evaluation order, so backward() walks them in reverse.
class Graph {
 public:
  using Id = std::size_t;

  struct LinearIds {
    Id weight;
    Id bias;
  };
  struct AttentionIds {
    LinearIds query, key, value, output;
  };
  struct FfnIds {
    LinearIds hidden, output;
  };

  explicit Graph(const ParameterStore* params = nullptr) : params_(params) {}

  // Constant leaf; never receives a gradient.
  Id input(Tensor value);
  // Leaf bound to params[name]; repeated calls return the same node.
  Id param(const std::string& name);
  LinearIds linear_params(const std::string& prefix);
  AttentionIds attention_params(const std::string& prefix);
  FfnIds ffn_params(const std::string& prefix);

  const Tensor& value(Id id) const { return nodes_[id].value; }
  // Zero tensor of the node's shape if nothing flowed back.
  Tensor grad(Id id) const;

  Id add(Id a, Id b);
  Id mul(Id a, Id b);
  Id scale(Id a, double factor);
  Id linear(Id x, const LinearIds& p);
  Id layer_norm(Id x, Id gain, Id shift, double eps);
  Id attention(Id q_in, Id k_in, Id v_in, const nn::AttentionConfig& cfg,
               const AttentionIds& p);
  Id ffn(Id x, const FfnIds& p, nn::Activation act);
  Id concat_rows(std::span<const Id> parts);
  Id slice_rows(Id x, std::size_t begin, std::size_t count);
  Id slice_cols(Id x, std::size_t begin, std::size_t count);

  // (1/rows) * sum over rows of ||pred_row - target_row||^2, as a [1] tensor.
  Id mean_row_squared_error(Id pred, const Tensor& target);
  // 0.5 * sum(mu^2 + exp(logvar) - logvar - 1).
  Id gaussian_kl(Id mu, Id logvar);
  // mu + exp(0.5 logvar) * noise.
  Id reparameterize(Id mu, Id logvar, const Tensor& noise);

  // Seeds d(root)/d(root) = 1 for a single-element root.
  void backward(Id root);

  // Gradient of every bound parameter, zeros where unused.
  ParameterStore parameter_grads() const;
  // grads[name] += factor * d/d(name) for every bound parameter.
  void accumulate_parameter_grads(ParameterStore& grads, double factor) const;

  std::size_t size() const { return nodes_.size(); }

 private:
  using BackwardFn = std::function<void(Graph&, const Tensor& upstream)>;

  struct Node {
    Tensor value;
    Tensor grad;
    bool requires_grad = false;
    BackwardFn backward;
  };

  Id push(Tensor value, bool requires_grad, BackwardFn fn = {});
  bool requires_grad(Id id) const { return nodes_[id].requires_grad; }
  void accumulate(Id id, const Tensor& g);
  nn::LinearParams linear_values(const LinearIds& p) const;
  nn::AttentionParams attention_values(const AttentionIds& p) const;

  const ParameterStore* params_;
  std::vector<Node> nodes_;
  std::map<std::string, Id> bound_;
};

}  // namespace nanovla

#endif  // NANOVLA_GRAPH_H_
