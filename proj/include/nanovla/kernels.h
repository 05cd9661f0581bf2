#ifndef NANOVLA_KERNELS_H_
#define NANOVLA_KERNELS_H_

#include <cstddef>
#include <string_view>

#include "nanovla/rng.h"
#include "nanovla/tensor.h"

// Numeric kernels for the policy transformer. Every function is pure; the
// *_backward variants take the forward inputs plus the upstream gradient and
// return gradients for each differentiable argument.
namespace nanovla::nn {

// Dense affine map y = x * weight + bias, weight stored [in, out].
struct LinearParams {
  Tensor weight;
  Tensor bias;

  std::size_t in_dim() const { return weight.rows(); }
  std::size_t out_dim() const { return weight.cols(); }
};

struct LinearGrads {
  Tensor input;
  LinearParams params;
};

// [N,K] x [K,M]
Tensor matmul(const Tensor& a, const Tensor& b);
// a^T b for a [K,N], b [K,M]
Tensor matmul_tn(const Tensor& a, const Tensor& b);
// a b^T for a [N,K], b [M,K]
Tensor matmul_nt(const Tensor& a, const Tensor& b);

Tensor linear(const Tensor& x, const LinearParams& p);
LinearGrads linear_backward(const Tensor& x, const LinearParams& p,
                            const Tensor& dy);

// Row-wise normalization to zero mean / unit variance, then gain * . + shift.
Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& shift,
                  double eps);

struct LayerNormGrads {
  Tensor input;
  Tensor gain;
  Tensor shift;
};

LayerNormGrads layer_norm_backward(const Tensor& x, const Tensor& gain,
                                   double eps, const Tensor& dy);

// Max-shifted row softmax.
Tensor softmax_rows(const Tensor& x);
// Gradient w.r.t. the logits given the softmax output y.
Tensor softmax_rows_backward(const Tensor& y, const Tensor& dy);

enum class Activation { kRelu, kGelu };

Activation parse_activation(std::string_view name);
std::string_view activation_name(Activation act);

// tanh approximation: 0.5 x (1 + tanh(sqrt(2/pi) (x + 0.044715 x^3))).
inline constexpr double kGeluCubic = 0.044715;
double gelu(double x);
double gelu_derivative(double x);

Tensor activate(const Tensor& x, Activation act);
Tensor activate_backward(const Tensor& x, Activation act, const Tensor& dy);

struct FfnParams {
  LinearParams hidden;
  LinearParams output;
};

struct FfnGrads {
  Tensor input;
  FfnParams params;
};

Tensor ffn(const Tensor& x, const FfnParams& p, Activation act);
FfnGrads ffn_backward(const Tensor& x, const FfnParams& p, Activation act,
                      const Tensor& dy);

struct AttentionConfig {
  std::size_t model_dim = 0;
  std::size_t heads = 1;
  std::size_t head_dim = 0;

  // Derives head_dim = model_dim / heads; throws ConfigError if it does not
  // divide evenly.
  static AttentionConfig make(std::size_t model_dim, std::size_t heads);
  void validate() const;
};

struct AttentionParams {
  LinearParams query;
  LinearParams key;
  LinearParams value;
  LinearParams output;
};

struct AttentionGrads {
  Tensor query_input;
  Tensor key_input;
  Tensor value_input;
  AttentionParams params;
};

// Intermediates kept by the forward pass for the backward pass.
struct AttentionTrace {
  Tensor q;
  Tensor k;
  Tensor v;
  Tensor probs;    // [heads, Nq, Nkv]
  Tensor context;  // [Nq, D], heads concatenated
};

// concat_h softmax(Q_h K_h^T / sqrt(d_k)) V_h, then the output projection.
Tensor multi_head_attention(const Tensor& q_in, const Tensor& k_in,
                            const Tensor& v_in, const AttentionConfig& cfg,
                            const AttentionParams& params,
                            AttentionTrace* trace = nullptr);

AttentionGrads multi_head_attention_backward(
    const Tensor& q_in, const Tensor& k_in, const Tensor& v_in,
    const AttentionConfig& cfg, const AttentionParams& params,
    const AttentionTrace& trace, const Tensor& dy);

// 2D sinusoidal table [height*width, dim]; row j*width+i holds (PE_y, PE_x)
// for grid cell (row j, column i) with coordinates scaled to [0, 2*pi].
Tensor sinusoidal_pe_2d(std::size_t height, std::size_t width,
                        std::size_t dim);

// 1D sinusoidal table [length, dim]: columns 2c and 2c+1 hold sin and cos of
// pos / 10000^(2c/dim).
Tensor sinusoidal_pe_1d(std::size_t length, std::size_t dim);

// Inverted-dropout mask: each entry is 0 with probability `rate`, otherwise
// 1/(1-rate). A zero rate yields all ones without touching the generator.
Tensor dropout_mask(const Shape& shape, double rate, Rng& rng);

}  // namespace nanovla::nn

#endif  // NANOVLA_KERNELS_H_
