#pragma once

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace sfolab {

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Matrix = MatrixX<double>;
using Vector = VectorX<double>;

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ShapeError : Error {
  using Error::Error;
};
struct ValueError : Error {
  using Error::Error;
};
struct IoError : Error {
  using Error::Error;
};

enum class Activation { tanh, gelu };

std::string to_string(Activation a);
Activation activation_from_string(std::string_view s);

struct MlpSpec {
  int input_dim = 1;
  std::vector<int> hidden_widths{128, 128, 128};
  int output_dim = 1;
  Activation activation = Activation::tanh;

  void validate() const;
  int num_layers() const { return static_cast<int>(hidden_widths.size()) + 1; }
  int layer_in(int i) const { return i == 0 ? input_dim : hidden_widths[i - 1]; }
  int layer_out(int i) const { return i == num_layers() - 1 ? output_dim : hidden_widths[i]; }
  std::size_t num_params() const;
  bool operator==(const MlpSpec&) const = default;
};

// weight is out x in, so a batch of row inputs maps as X * W^T + b^T.
template <typename Scalar>
struct LayerParams {
  MatrixX<Scalar> weight;
  VectorX<Scalar> bias;
};

template <typename Scalar>
struct ParamSetT {
  std::vector<LayerParams<Scalar>> layers;

  static ParamSetT zeros(const MlpSpec& spec) {
    ParamSetT p;
    for (int i = 0; i < spec.num_layers(); ++i)
      p.layers.push_back({MatrixX<Scalar>::Zero(spec.layer_out(i), spec.layer_in(i)),
                          VectorX<Scalar>::Zero(spec.layer_out(i))});
    return p;
  }

  Eigen::Index num_params() const {
    Eigen::Index n = 0;
    for (const auto& l : layers) n += l.weight.size() + l.bias.size();
    return n;
  }

  VectorX<Scalar> flatten() const {
    VectorX<Scalar> out(num_params());
    Eigen::Index o = 0;
    for (const auto& l : layers) {
      out.segment(o, l.weight.size()) = l.weight.template reshaped<Eigen::RowMajor>();
      o += l.weight.size();
      out.segment(o, l.bias.size()) = l.bias;
      o += l.bias.size();
    }
    return out;
  }

  void assign(const Eigen::Ref<const VectorX<Scalar>>& flat) {
    if (flat.size() != num_params())
      throw ShapeError("ParamSet::assign: expected " + std::to_string(num_params()) +
                       " values, got " + std::to_string(flat.size()));
    Eigen::Index o = 0;
    for (auto& l : layers) {
      l.weight.template reshaped<Eigen::RowMajor>() = flat.segment(o, l.weight.size());
      o += l.weight.size();
      l.bias = flat.segment(o, l.bias.size());
      o += l.bias.size();
    }
  }

  bool operator==(const ParamSetT& o) const {
    if (layers.size() != o.layers.size()) return false;
    for (std::size_t i = 0; i < layers.size(); ++i) {
      const auto& a = layers[i];
      const auto& b = o.layers[i];
      if (a.weight.rows() != b.weight.rows() || a.weight.cols() != b.weight.cols() ||
          a.bias.size() != b.bias.size() || a.weight != b.weight || a.bias != b.bias)
        return false;
    }
    return true;
  }
};

using ParamSet = ParamSetT<double>;

void check_params(const ParamSet& params, const MlpSpec& spec);

// Lossless little-endian container: layer count, then per layer (rows, cols, weight, bias).
std::string serialize_params(const ParamSet& params);
ParamSet deserialize_params(std::string_view bytes);

// ---- activations ----

template <typename Scalar>
inline Scalar activate(Activation a, Scalar x) {
  using std::erf, std::tanh, std::sqrt;
  if (a == Activation::tanh) return tanh(x);
  return Scalar(0.5) * x * (Scalar(1) + erf(x / sqrt(Scalar(2))));
}

template <typename Scalar>
inline Scalar activate_grad(Activation a, Scalar x) {
  using std::erf, std::exp, std::tanh, std::sqrt;
  if (a == Activation::tanh) {
    Scalar y = tanh(x);
    return Scalar(1) - y * y;
  }
  const Scalar inv_sqrt2pi = Scalar(0.3989422804014327);
  return Scalar(0.5) * (Scalar(1) + erf(x / sqrt(Scalar(2)))) + x * inv_sqrt2pi * exp(-x * x / Scalar(2));
}

// ---- forward / backward ----

template <typename Scalar>
struct MlpTape {
  std::vector<MatrixX<Scalar>> inputs;  // input to each layer
  std::vector<MatrixX<Scalar>> pre;     // pre-activation of each hidden layer
};

template <typename Scalar>
struct MlpGradsT {
  ParamSetT<Scalar> params;
  MatrixX<Scalar> input;
};
using MlpGrads = MlpGradsT<double>;

template <typename Scalar>
MatrixX<Scalar> mlp_forward(const ParamSetT<Scalar>& params, const MlpSpec& spec,
                            const MatrixX<Scalar>& input, MlpTape<Scalar>* tape = nullptr) {
  if (input.cols() != spec.input_dim)
    throw ShapeError("mlp_forward: layer 0 expects " + std::to_string(spec.input_dim) +
                     " input columns, got " + std::to_string(input.cols()));
  if (static_cast<int>(params.layers.size()) != spec.num_layers())
    throw ShapeError("mlp_forward: spec has " + std::to_string(spec.num_layers()) +
                     " layers, params have " + std::to_string(params.layers.size()));
  if (tape) {
    tape->inputs.clear();
    tape->pre.clear();
  }
  MatrixX<Scalar> h = input;
  const int L = spec.num_layers();
  for (int i = 0; i < L; ++i) {
    const auto& layer = params.layers[i];
    if (layer.weight.cols() != h.cols() || layer.weight.rows() != spec.layer_out(i) ||
        layer.bias.size() != layer.weight.rows())
      throw ShapeError("mlp_forward: layer " + std::to_string(i) + " weight is " +
                       std::to_string(layer.weight.rows()) + "x" + std::to_string(layer.weight.cols()) +
                       " (bias " + std::to_string(layer.bias.size()) + "), incoming width " +
                       std::to_string(h.cols()));
    MatrixX<Scalar> z = h * layer.weight.transpose();
    z.rowwise() += layer.bias.transpose();
    if (tape) tape->inputs.push_back(std::move(h));
    if (i + 1 < L) {
      MatrixX<Scalar> a = z.unaryExpr([&](Scalar v) { return activate(spec.activation, v); });
      if (tape) tape->pre.push_back(std::move(z));
      h = std::move(a);
    } else {
      h = std::move(z);
    }
  }
  return h;
}

// Exact reverse-mode gradients of <upstream, output> given a tape from mlp_forward.
template <typename Scalar>
MlpGradsT<Scalar> mlp_backward(const ParamSetT<Scalar>& params, const MlpSpec& spec,
                               const MlpTape<Scalar>& tape, const MatrixX<Scalar>& upstream,
                               bool want_input_grad = true) {
  const int L = spec.num_layers();
  if (static_cast<int>(tape.inputs.size()) != L)
    throw ShapeError("mlp_backward: tape does not match spec");
  if (upstream.rows() != tape.inputs[0].rows() || upstream.cols() != spec.output_dim)
    throw ShapeError("mlp_backward: upstream is " + std::to_string(upstream.rows()) + "x" +
                     std::to_string(upstream.cols()) + ", output is " +
                     std::to_string(tape.inputs[0].rows()) + "x" + std::to_string(spec.output_dim));
  MlpGradsT<Scalar> g;
  g.params.layers.resize(L);
  MatrixX<Scalar> delta = upstream;
  for (int i = L - 1; i >= 0; --i) {
    const auto& x = tape.inputs[i];
    g.params.layers[i].weight = delta.transpose() * x;
    g.params.layers[i].bias = delta.colwise().sum().transpose();
    if (i == 0 && !want_input_grad) break;
    MatrixX<Scalar> dx = delta * params.layers[i].weight;
    if (i > 0) {
      const auto& z = tape.pre[i - 1];
      delta = dx.binaryExpr(z, [&](Scalar d, Scalar zz) { return d * activate_grad(spec.activation, zz); });
    } else {
      g.input = std::move(dx);
    }
  }
  return g;
}

template <typename Scalar>
MlpGradsT<Scalar> mlp_backward(const ParamSetT<Scalar>& params, const MlpSpec& spec,
                               const MatrixX<Scalar>& input, const MatrixX<Scalar>& upstream) {
  MlpTape<Scalar> tape;
  MatrixX<Scalar> out = mlp_forward(params, spec, input, &tape);
  if (upstream.rows() != out.rows() || upstream.cols() != out.cols())
    throw ShapeError("mlp_backward: upstream is " + std::to_string(upstream.rows()) + "x" +
                     std::to_string(upstream.cols()) + ", output is " + std::to_string(out.rows()) +
                     "x" + std::to_string(out.cols()));
  return mlp_backward(params, spec, tape, upstream);
}

// ---- optimizer ----

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  bool operator==(const AdamConfig&) const = default;
};

template <typename Scalar>
struct AdamStateT {
  VectorX<Scalar> m;
  VectorX<Scalar> v;
  std::int64_t step = 0;
};
using AdamState = AdamStateT<double>;

template <typename Scalar>
void adam_step(Eigen::Ref<VectorX<Scalar>> params, const Eigen::Ref<const VectorX<Scalar>>& grads,
               AdamStateT<Scalar>& state, const AdamConfig& cfg) {
  if (!(cfg.lr > 0)) throw ValueError("adam_step: lr must be > 0");
  if (grads.size() != params.size())
    throw ShapeError("adam_step: " + std::to_string(params.size()) + " params vs " +
                     std::to_string(grads.size()) + " grads");
  for (Eigen::Index i = 0; i < grads.size(); ++i)
    if (!std::isfinite(static_cast<double>(grads[i])))
      throw ValueError("adam_step: non-finite gradient at parameter index " + std::to_string(i));
  if (state.m.size() == 0) {
    state.m = VectorX<Scalar>::Zero(params.size());
    state.v = VectorX<Scalar>::Zero(params.size());
  } else if (state.m.size() != params.size()) {
    throw ShapeError("adam_step: optimizer state has " + std::to_string(state.m.size()) + " entries");
  }
  state.step += 1;
  const Scalar b1 = Scalar(cfg.beta1), b2 = Scalar(cfg.beta2);
  state.m = b1 * state.m + (Scalar(1) - b1) * grads;
  state.v = b2 * state.v + (Scalar(1) - b2) * grads.cwiseProduct(grads);
  const Scalar c1 = Scalar(1) - Scalar(std::pow(cfg.beta1, static_cast<double>(state.step)));
  const Scalar c2 = Scalar(1) - Scalar(std::pow(cfg.beta2, static_cast<double>(state.step)));
  const Scalar lr = Scalar(cfg.lr), eps = Scalar(cfg.eps);
  for (Eigen::Index i = 0; i < params.size(); ++i) {
    Scalar mhat = state.m[i] / c1;
    Scalar vhat = state.v[i] / c2;
    params[i] -= lr * mhat / (std::sqrt(vhat) + eps);
  }
}

// ---- randomness ----

// Philox4x32-10 keyed by the seed; the 128-bit counter holds (counter, stream_id).
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr, std::array<std::uint32_t, 2> key);

class RngStream {
 public:
  explicit RngStream(std::uint64_t seed = 0, std::uint64_t stream_id = 0, std::uint64_t counter = 0)
      : seed_(seed), stream_(stream_id), counter_(counter) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_; }
  std::uint64_t counter() const { return counter_; }

  std::array<std::uint32_t, 4> next_block();
  std::uint64_t next_u64();
  // Uniform on the open interval (0, 1).
  double uniform();
  double normal();
  // Integer in [0, n).
  std::uint64_t below(std::uint64_t n);

  RngStream split(std::uint64_t tag) const;

  bool operator==(const RngStream&) const = default;

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t counter_;
};

inline RngStream rng_split(const RngStream& parent, std::uint64_t tag) { return parent.split(tag); }

std::uint64_t mix64(std::uint64_t x);
std::uint64_t tag_of(std::string_view name);

Matrix normal_matrix(RngStream& rng, Eigen::Index rows, Eigen::Index cols, double std = 1.0);

}  // namespace sfolab
