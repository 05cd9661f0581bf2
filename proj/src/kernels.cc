#include "nanovla/kernels.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "nanovla/errors.h"

namespace nanovla::nn {
namespace {

void require_rank2(const Tensor& t, const char* op) {
  if (t.rank() != 2) {
    throw DimensionError(std::string(op) + ": expected rank-2 tensor, got " +
                         shape_string(t.shape()));
  }
}

void check_linear(const Tensor& x, const LinearParams& p, const char* op) {
  require_rank2(x, op);
  require_rank2(p.weight, op);
  if (x.cols() != p.weight.rows()) {
    throw DimensionError(std::string(op) + ": input width " +
                         std::to_string(x.cols()) + " != weight rows " +
                         std::to_string(p.weight.rows()));
  }
  if (p.bias.size() != p.weight.cols()) {
    throw DimensionError(std::string(op) + ": bias size " +
                         std::to_string(p.bias.size()) + " != out dim " +
                         std::to_string(p.weight.cols()));
  }
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_rank2(a, "matmul");
  require_rank2(b, "matmul");
  const std::size_t n = a.rows(), k = a.cols(), m = b.cols();
  if (b.rows() != k) {
    throw DimensionError("matmul: " + shape_string(a.shape()) + " x " +
                         shape_string(b.shape()));
  }
  Tensor out({n, m});
  const double* pa = a.data().data();
  const double* pb = b.data().data();
  double* po = out.data().data();
  for (std::size_t i = 0; i < n; ++i) {
    double* orow = po + i * m;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = pa[i * k + p];
      if (av == 0.0) continue;
      const double* brow = pb + p * m;
      for (std::size_t j = 0; j < m; ++j) orow[j] += av * brow[j];
    }
  }
  return out;
}

Tensor matmul_tn(const Tensor& a, const Tensor& b) {
  require_rank2(a, "matmul_tn");
  require_rank2(b, "matmul_tn");
  const std::size_t k = a.rows(), n = a.cols(), m = b.cols();
  if (b.rows() != k) {
    throw DimensionError("matmul_tn: " + shape_string(a.shape()) + "^T x " +
                         shape_string(b.shape()));
  }
  Tensor out({n, m});
  const double* pa = a.data().data();
  const double* pb = b.data().data();
  double* po = out.data().data();
  for (std::size_t p = 0; p < k; ++p) {
    const double* arow = pa + p * n;
    const double* brow = pb + p * m;
    for (std::size_t i = 0; i < n; ++i) {
      const double av = arow[i];
      if (av == 0.0) continue;
      double* orow = po + i * m;
      for (std::size_t j = 0; j < m; ++j) orow[j] += av * brow[j];
    }
  }
  return out;
}

Tensor matmul_nt(const Tensor& a, const Tensor& b) {
  require_rank2(a, "matmul_nt");
  require_rank2(b, "matmul_nt");
  const std::size_t n = a.rows(), k = a.cols(), m = b.rows();
  if (b.cols() != k) {
    throw DimensionError("matmul_nt: " + shape_string(a.shape()) + " x " +
                         shape_string(b.shape()) + "^T");
  }
  Tensor out({n, m});
  const double* pa = a.data().data();
  const double* pb = b.data().data();
  double* po = out.data().data();
  for (std::size_t i = 0; i < n; ++i) {
    const double* arow = pa + i * k;
    for (std::size_t j = 0; j < m; ++j) {
      const double* brow = pb + j * k;
      double acc = 0.0;
      for (std::size_t p = 0; p < k; ++p) acc += arow[p] * brow[p];
      po[i * m + j] = acc;
    }
  }
  return out;
}

Tensor linear(const Tensor& x, const LinearParams& p) {
  check_linear(x, p, "linear");
  Tensor out = matmul(x, p.weight);
  const std::size_t m = out.cols();
  for (std::size_t i = 0; i < out.rows(); ++i) {
    auto r = out.row(i);
    for (std::size_t j = 0; j < m; ++j) r[j] += p.bias[j];
  }
  return out;
}

LinearGrads linear_backward(const Tensor& x, const LinearParams& p,
                            const Tensor& dy) {
  check_linear(x, p, "linear_backward");
  require_shape(dy, {x.rows(), p.weight.cols()}, "linear_backward");
  LinearGrads g;
  g.input = matmul_nt(dy, p.weight);
  g.params.weight = matmul_tn(x, dy);
  g.params.bias = Tensor(p.bias.shape());
  const std::size_t m = dy.cols();
  for (std::size_t i = 0; i < dy.rows(); ++i) {
    auto r = dy.row(i);
    for (std::size_t j = 0; j < m; ++j) g.params.bias[j] += r[j];
  }
  return g;
}

Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& shift,
                  double eps) {
  require_rank2(x, "layer_norm");
  const std::size_t d = x.cols();
  if (d == 0) throw DimensionError("layer_norm: zero feature dimension");
  if (gain.size() != d || shift.size() != d) {
    throw DimensionError("layer_norm: gain/shift size != " + std::to_string(d));
  }
  if (!(eps > 0.0)) throw ConfigError("layer_norm: eps must be positive");
  Tensor out(x.shape());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    auto in = x.row(i);
    auto o = out.row(i);
    double mean = 0.0;
    for (double v : in) mean += v;
    mean /= static_cast<double>(d);
    double var = 0.0;
    for (double v : in) var += (v - mean) * (v - mean);
    var /= static_cast<double>(d);
    const double rstd = 1.0 / std::sqrt(var + eps);
    for (std::size_t j = 0; j < d; ++j) {
      o[j] = (in[j] - mean) * rstd * gain[j] + shift[j];
    }
  }
  return out;
}

LayerNormGrads layer_norm_backward(const Tensor& x, const Tensor& gain,
                                   double eps, const Tensor& dy) {
  require_rank2(x, "layer_norm_backward");
  require_shape(dy, x.shape(), "layer_norm_backward");
  const std::size_t d = x.cols();
  LayerNormGrads g{Tensor(x.shape()), Tensor(gain.shape()),
                   Tensor(gain.shape())};
  std::vector<double> xhat(d), dxhat(d);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    auto in = x.row(i);
    auto up = dy.row(i);
    double mean = 0.0;
    for (double v : in) mean += v;
    mean /= static_cast<double>(d);
    double var = 0.0;
    for (double v : in) var += (v - mean) * (v - mean);
    var /= static_cast<double>(d);
    const double rstd = 1.0 / std::sqrt(var + eps);
    double mean_dxhat = 0.0, mean_dxhat_xhat = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      xhat[j] = (in[j] - mean) * rstd;
      dxhat[j] = up[j] * gain[j];
      g.gain[j] += up[j] * xhat[j];
      g.shift[j] += up[j];
      mean_dxhat += dxhat[j];
      mean_dxhat_xhat += dxhat[j] * xhat[j];
    }
    mean_dxhat /= static_cast<double>(d);
    mean_dxhat_xhat /= static_cast<double>(d);
    auto dx = g.input.row(i);
    for (std::size_t j = 0; j < d; ++j) {
      dx[j] = rstd * (dxhat[j] - mean_dxhat - xhat[j] * mean_dxhat_xhat);
    }
  }
  return g;
}

Tensor softmax_rows(const Tensor& x) {
  require_rank2(x, "softmax_rows");
  Tensor out(x.shape());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    auto in = x.row(i);
    auto o = out.row(i);
    const double mx = *std::max_element(in.begin(), in.end());
    double sum = 0.0;
    for (std::size_t j = 0; j < in.size(); ++j) {
      o[j] = std::exp(in[j] - mx);
      sum += o[j];
    }
    for (double& v : o) v /= sum;
  }
  return out;
}

Tensor softmax_rows_backward(const Tensor& y, const Tensor& dy) {
  require_shape(dy, y.shape(), "softmax_rows_backward");
  Tensor dx(y.shape());
  for (std::size_t i = 0; i < y.rows(); ++i) {
    auto yr = y.row(i);
    auto dr = dy.row(i);
    double dot = 0.0;
    for (std::size_t j = 0; j < yr.size(); ++j) dot += yr[j] * dr[j];
    auto o = dx.row(i);
    for (std::size_t j = 0; j < yr.size(); ++j) o[j] = yr[j] * (dr[j] - dot);
  }
  return dx;
}

Activation parse_activation(std::string_view name) {
  if (name == "relu") return Activation::kRelu;
  if (name == "gelu") return Activation::kGelu;
  throw ConfigError("unknown activation '" + std::string(name) + "'");
}

std::string_view activation_name(Activation act) {
  return act == Activation::kRelu ? "relu" : "gelu";
}

namespace {
const double kSqrt2OverPi = std::sqrt(2.0 / std::numbers::pi);
}

double gelu(double x) {
  const double u = kSqrt2OverPi * (x + kGeluCubic * x * x * x);
  return 0.5 * x * (1.0 + std::tanh(u));
}

double gelu_derivative(double x) {
  const double u = kSqrt2OverPi * (x + kGeluCubic * x * x * x);
  const double t = std::tanh(u);
  const double du = kSqrt2OverPi * (1.0 + 3.0 * kGeluCubic * x * x);
  return 0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * du;
}

Tensor activate(const Tensor& x, Activation act) {
  Tensor out(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) {
    out[i] = act == Activation::kRelu ? std::max(0.0, x[i]) : gelu(x[i]);
  }
  return out;
}

Tensor activate_backward(const Tensor& x, Activation act, const Tensor& dy) {
  require_shape(dy, x.shape(), "activate_backward");
  Tensor dx(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double slope =
        act == Activation::kRelu ? (x[i] > 0.0 ? 1.0 : 0.0) : gelu_derivative(x[i]);
    dx[i] = dy[i] * slope;
  }
  return dx;
}

Tensor ffn(const Tensor& x, const FfnParams& p, Activation act) {
  if (p.hidden.out_dim() == 0) throw ConfigError("ffn: hidden width must be >= 1");
  return linear(activate(linear(x, p.hidden), act), p.output);
}

FfnGrads ffn_backward(const Tensor& x, const FfnParams& p, Activation act,
                      const Tensor& dy) {
  const Tensor pre = linear(x, p.hidden);
  const Tensor post = activate(pre, act);
  LinearGrads out = linear_backward(post, p.output, dy);
  const Tensor dpre = activate_backward(pre, act, out.input);
  LinearGrads hid = linear_backward(x, p.hidden, dpre);
  return FfnGrads{std::move(hid.input),
                  FfnParams{std::move(hid.params), std::move(out.params)}};
}

AttentionConfig AttentionConfig::make(std::size_t model_dim, std::size_t heads) {
  if (heads == 0) throw ConfigError("attention: heads must be >= 1");
  if (model_dim % heads != 0) {
    throw ConfigError("attention: model dim " + std::to_string(model_dim) +
                      " not divisible by " + std::to_string(heads) + " heads");
  }
  return AttentionConfig{model_dim, heads, model_dim / heads};
}

void AttentionConfig::validate() const {
  if (heads == 0) throw ConfigError("attention: heads must be >= 1");
  if (model_dim != heads * head_dim || head_dim == 0) {
    throw ConfigError("attention: model dim " + std::to_string(model_dim) +
                      " != heads * head_dim (" + std::to_string(heads) + " * " +
                      std::to_string(head_dim) + ")");
  }
}

Tensor multi_head_attention(const Tensor& q_in, const Tensor& k_in,
                            const Tensor& v_in, const AttentionConfig& cfg,
                            const AttentionParams& params,
                            AttentionTrace* trace) {
  cfg.validate();
  require_rank2(q_in, "attention");
  require_rank2(k_in, "attention");
  require_rank2(v_in, "attention");
  if (k_in.rows() != v_in.rows()) {
    throw DimensionError("attention: key rows " + std::to_string(k_in.rows()) +
                         " != value rows " + std::to_string(v_in.rows()));
  }
  const std::size_t d = cfg.model_dim, dk = cfg.head_dim;
  const std::size_t nq = q_in.rows(), nkv = k_in.rows();
  if (q_in.cols() != d || k_in.cols() != d || v_in.cols() != d) {
    throw DimensionError("attention: inputs must have width " + std::to_string(d));
  }
  AttentionTrace local;
  AttentionTrace& t = trace ? *trace : local;
  t.q = linear(q_in, params.query);
  t.k = linear(k_in, params.key);
  t.v = linear(v_in, params.value);
  t.probs = Tensor({cfg.heads, nq, nkv});
  t.context = Tensor({nq, d});
  const double scale = 1.0 / std::sqrt(static_cast<double>(dk));
  std::vector<double> logits(nkv);
  for (std::size_t h = 0; h < cfg.heads; ++h) {
    const std::size_t off = h * dk;
    for (std::size_t i = 0; i < nq; ++i) {
      const double* qi = &t.q(i, off);
      double mx = -std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < nkv; ++j) {
        const double* kj = &t.k(j, off);
        double acc = 0.0;
        for (std::size_t c = 0; c < dk; ++c) acc += qi[c] * kj[c];
        logits[j] = acc * scale;
        mx = std::max(mx, logits[j]);
      }
      double* pr = &t.probs[(h * nq + i) * nkv];
      double sum = 0.0;
      for (std::size_t j = 0; j < nkv; ++j) {
        pr[j] = std::exp(logits[j] - mx);
        sum += pr[j];
      }
      double* ctx = &t.context(i, off);
      for (std::size_t j = 0; j < nkv; ++j) {
        pr[j] /= sum;
        const double* vj = &t.v(j, off);
        for (std::size_t c = 0; c < dk; ++c) ctx[c] += pr[j] * vj[c];
      }
    }
  }
  return linear(t.context, params.output);
}

AttentionGrads multi_head_attention_backward(
    const Tensor& q_in, const Tensor& k_in, const Tensor& v_in,
    const AttentionConfig& cfg, const AttentionParams& params,
    const AttentionTrace& t, const Tensor& dy) {
  const std::size_t d = cfg.model_dim, dk = cfg.head_dim;
  const std::size_t nq = q_in.rows(), nkv = k_in.rows();
  LinearGrads out = linear_backward(t.context, params.output, dy);
  const Tensor& dctx = out.input;
  Tensor dq({nq, d}), dkey({nkv, d}), dv({nkv, d});
  const double scale = 1.0 / std::sqrt(static_cast<double>(dk));
  std::vector<double> dp(nkv);
  for (std::size_t h = 0; h < cfg.heads; ++h) {
    const std::size_t off = h * dk;
    for (std::size_t i = 0; i < nq; ++i) {
      const double* pr = &t.probs[(h * nq + i) * nkv];
      const double* dci = &dctx(i, off);
      double dot = 0.0;
      for (std::size_t j = 0; j < nkv; ++j) {
        const double* vj = &t.v(j, off);
        double* dvj = &dv(j, off);
        double acc = 0.0;
        for (std::size_t c = 0; c < dk; ++c) {
          acc += dci[c] * vj[c];
          dvj[c] += pr[j] * dci[c];
        }
        dp[j] = acc;
        dot += acc * pr[j];
      }
      const double* qi = &t.q(i, off);
      double* dqi = &dq(i, off);
      for (std::size_t j = 0; j < nkv; ++j) {
        const double ds = pr[j] * (dp[j] - dot) * scale;
        if (ds == 0.0) continue;
        const double* kj = &t.k(j, off);
        double* dkj = &dkey(j, off);
        for (std::size_t c = 0; c < dk; ++c) {
          dqi[c] += ds * kj[c];
          dkj[c] += ds * qi[c];
        }
      }
    }
  }
  LinearGrads gq = linear_backward(q_in, params.query, dq);
  LinearGrads gk = linear_backward(k_in, params.key, dkey);
  LinearGrads gv = linear_backward(v_in, params.value, dv);
  AttentionGrads g;
  g.query_input = std::move(gq.input);
  g.key_input = std::move(gk.input);
  g.value_input = std::move(gv.input);
  g.params = AttentionParams{std::move(gq.params), std::move(gk.params),
                             std::move(gv.params), std::move(out.params)};
  return g;
}

Tensor sinusoidal_pe_2d(std::size_t height, std::size_t width, std::size_t dim) {
  if (dim == 0 || dim % 4 != 0) {
    throw ConfigError("sinusoidal_pe_2d: dim " + std::to_string(dim) +
                      " must be a positive multiple of 4");
  }
  if (height == 0 || width == 0) {
    throw ConfigError("sinusoidal_pe_2d: empty grid");
  }
  const std::size_t half = dim / 2;
  std::vector<double> omega(half);
  for (std::size_t c = 0; c < half; ++c) {
    const double exponent = 2.0 * static_cast<double>(c / 2) /
                            static_cast<double>(half);
    omega[c] = std::pow(10000.0, exponent);
  }
  Tensor out({height * width, dim});
  const double two_pi = 2.0 * std::numbers::pi;
  for (std::size_t j = 0; j < height; ++j) {
    const double uy = two_pi * static_cast<double>(j) / static_cast<double>(height);
    for (std::size_t i = 0; i < width; ++i) {
      const double ux = two_pi * static_cast<double>(i) / static_cast<double>(width);
      auto r = out.row(j * width + i);
      for (std::size_t c = 0; c < half; ++c) {
        const bool even = c % 2 == 0;
        r[c] = even ? std::sin(uy / omega[c]) : std::cos(uy / omega[c]);
        r[half + c] = even ? std::sin(ux / omega[c]) : std::cos(ux / omega[c]);
      }
    }
  }
  return out;
}

Tensor sinusoidal_pe_1d(std::size_t length, std::size_t dim) {
  if (dim == 0 || dim % 2 != 0) {
    throw ConfigError("sinusoidal_pe_1d: dim " + std::to_string(dim) + " must be even");
  }
  Tensor out({length, dim});
  for (std::size_t pos = 0; pos < length; ++pos) {
    for (std::size_t c = 0; c < dim / 2; ++c) {
      const double angle = static_cast<double>(pos) /
                           std::pow(10000.0, 2.0 * static_cast<double>(c) / static_cast<double>(dim));
      out(pos, 2 * c) = std::sin(angle);
      out(pos, 2 * c + 1) = std::cos(angle);
    }
  }
  return out;
}

Tensor dropout_mask(const Shape& shape, double rate, Rng& rng) {
  if (rate < 0.0 || rate >= 1.0) {
    throw ConfigError("dropout: rate must be in [0, 1)");
  }
  Tensor mask(shape, 1.0);
  if (rate == 0.0) return mask;
  const double keep = 1.0 / (1.0 - rate);
  for (std::size_t i = 0; i < mask.size(); ++i) {
    mask[i] = rng.uniform() < rate ? 0.0 : keep;
  }
  return mask;
}

}  // namespace nanovla::nn
