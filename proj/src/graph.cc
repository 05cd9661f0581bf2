#include "nanovla/graph.h"

#include <cmath>
#include <memory>

#include "nanovla/errors.h"

namespace nanovla {

Graph::Id Graph::push(Tensor value, bool requires_grad, BackwardFn fn) {
  nodes_.push_back(Node{std::move(value), Tensor(), requires_grad,
                        requires_grad ? std::move(fn) : BackwardFn{}});
  return nodes_.size() - 1;
}

void Graph::accumulate(Id id, const Tensor& g) {
  Node& n = nodes_[id];
  if (!n.requires_grad) return;
  if (n.grad.empty() && !n.value.empty()) {
    n.grad = g;
    return;
  }
  require_shape(g, n.grad.shape(), "graph: gradient");
  for (std::size_t i = 0; i < g.size(); ++i) n.grad[i] += g[i];
}

Tensor Graph::grad(Id id) const {
  const Node& n = nodes_[id];
  return n.grad.empty() ? Tensor(n.value.shape()) : n.grad;
}

Graph::Id Graph::input(Tensor value) { return push(std::move(value), false); }

Graph::Id Graph::param(const std::string& name) {
  auto it = bound_.find(name);
  if (it != bound_.end()) return it->second;
  if (!params_) throw ConfigError("graph: no parameter store bound");
  const Id id = push(params_->get(name), true, [](Graph&, const Tensor&) {});
  bound_.emplace(name, id);
  return id;
}

Graph::LinearIds Graph::linear_params(const std::string& prefix) {
  return LinearIds{param(prefix + ".weight"), param(prefix + ".bias")};
}

Graph::AttentionIds Graph::attention_params(const std::string& prefix) {
  return AttentionIds{linear_params(prefix + ".query"), linear_params(prefix + ".key"),
                      linear_params(prefix + ".value"),
                      linear_params(prefix + ".output")};
}

Graph::FfnIds Graph::ffn_params(const std::string& prefix) {
  return FfnIds{linear_params(prefix + ".hidden"), linear_params(prefix + ".output")};
}

nn::LinearParams Graph::linear_values(const LinearIds& p) const {
  return nn::LinearParams{value(p.weight), value(p.bias)};
}

nn::AttentionParams Graph::attention_values(const AttentionIds& p) const {
  return nn::AttentionParams{linear_values(p.query), linear_values(p.key),
                             linear_values(p.value), linear_values(p.output)};
}

Graph::Id Graph::add(Id a, Id b) {
  const Tensor& va = value(a);
  const Tensor& vb = value(b);
  require_shape(vb, va.shape(), "graph add");
  Tensor out = va;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += vb[i];
  return push(std::move(out), requires_grad(a) || requires_grad(b),
              [a, b](Graph& g, const Tensor& up) {
                g.accumulate(a, up);
                g.accumulate(b, up);
              });
}

Graph::Id Graph::mul(Id a, Id b) {
  const Tensor& va = value(a);
  const Tensor& vb = value(b);
  require_shape(vb, va.shape(), "graph mul");
  Tensor out = va;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= vb[i];
  return push(std::move(out), requires_grad(a) || requires_grad(b),
              [a, b](Graph& g, const Tensor& up) {
                const Tensor& xa = g.value(a);
                const Tensor& xb = g.value(b);
                Tensor da(up.shape()), db(up.shape());
                for (std::size_t i = 0; i < up.size(); ++i) {
                  da[i] = up[i] * xb[i];
                  db[i] = up[i] * xa[i];
                }
                g.accumulate(a, da);
                g.accumulate(b, db);
              });
}

Graph::Id Graph::scale(Id a, double factor) {
  Tensor out = value(a);
  for (double& v : out.data()) v *= factor;
  return push(std::move(out), requires_grad(a),
              [a, factor](Graph& g, const Tensor& up) {
                Tensor d = up;
                for (double& v : d.data()) v *= factor;
                g.accumulate(a, d);
              });
}

Graph::Id Graph::linear(Id x, const LinearIds& p) {
  Tensor out = nn::linear(value(x), linear_values(p));
  const bool rg = requires_grad(x) || requires_grad(p.weight) || requires_grad(p.bias);
  return push(std::move(out), rg, [x, p](Graph& g, const Tensor& up) {
    nn::LinearGrads d = nn::linear_backward(g.value(x), g.linear_values(p), up);
    g.accumulate(x, d.input);
    g.accumulate(p.weight, d.params.weight);
    g.accumulate(p.bias, d.params.bias);
  });
}

Graph::Id Graph::layer_norm(Id x, Id gain, Id shift, double eps) {
  Tensor out = nn::layer_norm(value(x), value(gain), value(shift), eps);
  const bool rg = requires_grad(x) || requires_grad(gain) || requires_grad(shift);
  return push(std::move(out), rg, [x, gain, shift, eps](Graph& g, const Tensor& up) {
    nn::LayerNormGrads d = nn::layer_norm_backward(g.value(x), g.value(gain), eps, up);
    g.accumulate(x, d.input);
    g.accumulate(gain, d.gain);
    g.accumulate(shift, d.shift);
  });
}

Graph::Id Graph::attention(Id q_in, Id k_in, Id v_in,
                           const nn::AttentionConfig& cfg, const AttentionIds& p) {
  auto trace = std::make_shared<nn::AttentionTrace>();
  Tensor out = nn::multi_head_attention(value(q_in), value(k_in), value(v_in), cfg,
                                        attention_values(p), trace.get());
  bool rg = requires_grad(q_in) || requires_grad(k_in) || requires_grad(v_in);
  for (const LinearIds* l : {&p.query, &p.key, &p.value, &p.output}) {
    rg = rg || requires_grad(l->weight) || requires_grad(l->bias);
  }
  return push(std::move(out), rg,
              [q_in, k_in, v_in, cfg, p, trace](Graph& g, const Tensor& up) {
                nn::AttentionGrads d = nn::multi_head_attention_backward(
                    g.value(q_in), g.value(k_in), g.value(v_in), cfg,
                    g.attention_values(p), *trace, up);
                g.accumulate(q_in, d.query_input);
                g.accumulate(k_in, d.key_input);
                g.accumulate(v_in, d.value_input);
                const std::pair<const LinearIds*, const nn::LinearParams*> pairs[] = {
                    {&p.query, &d.params.query},
                    {&p.key, &d.params.key},
                    {&p.value, &d.params.value},
                    {&p.output, &d.params.output}};
                for (const auto& [ids, grads] : pairs) {
                  g.accumulate(ids->weight, grads->weight);
                  g.accumulate(ids->bias, grads->bias);
                }
              });
}

Graph::Id Graph::ffn(Id x, const FfnIds& p, nn::Activation act) {
  const Id hidden = linear(x, p.hidden);
  const Tensor& pre = value(hidden);
  Tensor post = nn::activate(pre, act);
  const Id activated =
      push(std::move(post), requires_grad(hidden), [hidden, act](Graph& g, const Tensor& up) {
        g.accumulate(hidden, nn::activate_backward(g.value(hidden), act, up));
      });
  return linear(activated, p.output);
}

Graph::Id Graph::concat_rows(std::span<const Id> parts) {
  if (parts.empty()) throw DimensionError("concat_rows: no inputs");
  const std::size_t cols = value(parts[0]).cols();
  std::size_t rows = 0;
  bool rg = false;
  for (Id id : parts) {
    const Tensor& t = value(id);
    if (t.rank() != 2 || t.cols() != cols) {
      throw DimensionError("concat_rows: width mismatch " + shape_string(t.shape()));
    }
    rows += t.rows();
    rg = rg || requires_grad(id);
  }
  Tensor out({rows, cols});
  std::size_t off = 0;
  for (Id id : parts) {
    const Tensor& t = value(id);
    std::copy(t.data().begin(), t.data().end(), out.data().begin() + off);
    off += t.size();
  }
  std::vector<Id> ids(parts.begin(), parts.end());
  return push(std::move(out), rg, [ids, cols](Graph& g, const Tensor& up) {
    std::size_t off = 0;
    for (Id id : ids) {
      const Shape& s = g.value(id).shape();
      const std::size_t n = shape_size(s);
      if (g.requires_grad(id)) {
        Tensor d(s, std::vector<double>(up.data().begin() + off,
                                        up.data().begin() + off + n));
        g.accumulate(id, d);
      }
      off += n;
    }
    (void)cols;
  });
}

Graph::Id Graph::slice_rows(Id x, std::size_t begin, std::size_t count) {
  const Tensor& t = value(x);
  if (t.rank() != 2 || begin + count > t.rows() || count == 0) {
    throw DimensionError("slice_rows: bad range on " + shape_string(t.shape()));
  }
  const std::size_t cols = t.cols();
  Tensor out({count, cols},
             std::vector<double>(t.data().begin() + begin * cols,
                                 t.data().begin() + (begin + count) * cols));
  return push(std::move(out), requires_grad(x), [x, begin, count, cols](Graph& g, const Tensor& up) {
    Tensor d(g.value(x).shape());
    std::copy(up.data().begin(), up.data().end(), d.data().begin() + begin * cols);
    g.accumulate(x, d);
    (void)count;
  });
}

Graph::Id Graph::slice_cols(Id x, std::size_t begin, std::size_t count) {
  const Tensor& t = value(x);
  if (t.rank() != 2 || begin + count > t.cols() || count == 0) {
    throw DimensionError("slice_cols: bad range on " + shape_string(t.shape()));
  }
  Tensor out({t.rows(), count});
  for (std::size_t i = 0; i < t.rows(); ++i) {
    for (std::size_t j = 0; j < count; ++j) out(i, j) = t(i, begin + j);
  }
  return push(std::move(out), requires_grad(x), [x, begin, count](Graph& g, const Tensor& up) {
    Tensor d(g.value(x).shape());
    for (std::size_t i = 0; i < up.rows(); ++i) {
      for (std::size_t j = 0; j < count; ++j) d(i, begin + j) = up(i, j);
    }
    g.accumulate(x, d);
  });
}

Graph::Id Graph::mean_row_squared_error(Id pred, const Tensor& target) {
  const Tensor& p = value(pred);
  require_shape(target, p.shape(), "chunk loss target");
  const double inv_rows = 1.0 / static_cast<double>(p.rows());
  double loss = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double diff = p[i] - target[i];
    loss += diff * diff;
  }
  return push(Tensor({1}, {loss * inv_rows}), requires_grad(pred),
              [pred, target, inv_rows](Graph& g, const Tensor& up) {
                const Tensor& p = g.value(pred);
                Tensor d(p.shape());
                for (std::size_t i = 0; i < p.size(); ++i) {
                  d[i] = up[0] * 2.0 * (p[i] - target[i]) * inv_rows;
                }
                g.accumulate(pred, d);
              });
}

Graph::Id Graph::gaussian_kl(Id mu, Id logvar) {
  const Tensor& m = value(mu);
  const Tensor& lv = value(logvar);
  require_shape(lv, m.shape(), "gaussian_kl");
  double kl = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i) {
    kl += m[i] * m[i] + std::exp(lv[i]) - lv[i] - 1.0;
  }
  return push(Tensor({1}, {0.5 * kl}), requires_grad(mu) || requires_grad(logvar),
              [mu, logvar](Graph& g, const Tensor& up) {
                const Tensor& m = g.value(mu);
                const Tensor& lv = g.value(logvar);
                Tensor dm(m.shape()), dlv(lv.shape());
                for (std::size_t i = 0; i < m.size(); ++i) {
                  dm[i] = up[0] * m[i];
                  dlv[i] = up[0] * 0.5 * (std::exp(lv[i]) - 1.0);
                }
                g.accumulate(mu, dm);
                g.accumulate(logvar, dlv);
              });
}

Graph::Id Graph::reparameterize(Id mu, Id logvar, const Tensor& noise) {
  const Tensor& m = value(mu);
  const Tensor& lv = value(logvar);
  require_shape(lv, m.shape(), "reparameterize");
  require_shape(noise, m.shape(), "reparameterize noise");
  Tensor z(m.shape());
  for (std::size_t i = 0; i < m.size(); ++i) {
    z[i] = m[i] + std::exp(0.5 * lv[i]) * noise[i];
  }
  return push(std::move(z), requires_grad(mu) || requires_grad(logvar),
              [mu, logvar, noise](Graph& g, const Tensor& up) {
                const Tensor& lv = g.value(logvar);
                Tensor dlv(lv.shape());
                for (std::size_t i = 0; i < lv.size(); ++i) {
                  dlv[i] = up[i] * 0.5 * std::exp(0.5 * lv[i]) * noise[i];
                }
                g.accumulate(mu, up);
                g.accumulate(logvar, dlv);
              });
}

void Graph::backward(Id root) {
  if (value(root).size() != 1) {
    throw DimensionError("graph backward: root must be a scalar");
  }
  for (Node& n : nodes_) n.grad = Tensor();
  nodes_[root].grad = Tensor(value(root).shape(), 1.0);
  for (Id id = root + 1; id-- > 0;) {
    Node& n = nodes_[id];
    if (!n.requires_grad || n.grad.empty() || !n.backward) continue;
    const Tensor up = n.grad;
    n.backward(*this, up);
  }
}

ParameterStore Graph::parameter_grads() const {
  ParameterStore out;
  for (const auto& [name, id] : bound_) out.set(name, grad(id));
  return out;
}

void Graph::accumulate_parameter_grads(ParameterStore& grads, double factor) const {
  for (const auto& [name, id] : bound_) {
    const Tensor& g = nodes_[id].grad;
    if (g.empty()) continue;
    Tensor& dst = grads.mutable_get(name);
    require_shape(g, dst.shape(), name.c_str());
    for (std::size_t i = 0; i < g.size(); ++i) dst[i] += factor * g[i];
  }
}

}  // namespace nanovla
