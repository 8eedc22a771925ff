#include "sfolab/adapters.hpp"

#include <algorithm>
#include <set>

namespace sfolab {

const LowRankAdapter* AdapterStack::find(const std::string& name) const {
  for (const auto& a : adapters)
    if (a.name == name) return &a;
  return nullptr;
}

LowRankAdapter* AdapterStack::find(const std::string& name) {
  for (auto& a : adapters)
    if (a.name == name) return &a;
  return nullptr;
}

bool AdapterStack::is_enabled(const std::string& name) const {
  return std::find(enabled.begin(), enabled.end(), name) != enabled.end();
}

std::vector<std::string> AdapterStack::names() const {
  std::vector<std::string> out;
  for (const auto& a : adapters) out.push_back(a.name);
  return out;
}

AdapterStack make_stack(const MlpSpec& spec, ParamSet base) {
  spec.validate();
  check_params(base, spec);
  AdapterStack s;
  s.spec = spec;
  s.base = std::move(base);
  return s;
}

AdapterStack attach(const AdapterStack& stack, const std::string& name, int rank, RngStream& rng) {
  if (stack.find(name)) throw ValueError("attach: adapter '" + name + "' already exists");
  if (rank < 1) throw ValueError("attach: rank must be >= 1");
  LowRankAdapter a;
  a.name = name;
  a.rank = rank;
  a.scale = 1.0 / rank;
  const double std = 1.0 / std::sqrt(static_cast<double>(rank));
  for (int i = 0; i < stack.spec.num_layers(); ++i) {
    a.A.push_back(normal_matrix(rng, rank, stack.spec.layer_in(i), std));
    a.B.push_back(Matrix::Zero(stack.spec.layer_out(i), rank));
  }
  AdapterStack out = stack;
  out.adapters.push_back(std::move(a));
  return out;
}

AdapterStack set_enabled(const AdapterStack& stack, const std::vector<std::string>& names) {
  std::set<std::string> want;
  for (const auto& n : names) {
    if (!stack.find(n)) throw ValueError("set_enabled: unknown adapter '" + n + "'");
    want.insert(n);
  }
  AdapterStack out = stack;
  out.enabled.clear();
  for (const auto& a : stack.adapters)
    if (want.count(a.name)) out.enabled.push_back(a.name);
  return out;
}

ParamSet effective_params(const AdapterStack& stack) { return effective_params(stack, stack.enabled); }

ParamSet effective_params(const AdapterStack& stack, const std::vector<std::string>& enabled) {
  for (const auto& n : enabled)
    if (!stack.find(n)) throw ValueError("unknown adapter '" + n + "'");
  ParamSet eff = stack.base;
  for (const auto& a : stack.adapters) {
    if (std::find(enabled.begin(), enabled.end(), a.name) == enabled.end()) continue;
    for (std::size_t i = 0; i < eff.layers.size(); ++i)
      eff.layers[i].weight.noalias() += a.scale * (a.B[i] * a.A[i]);
  }
  return eff;
}

Matrix stack_forward(const AdapterStack& stack, const Matrix& input) {
  return mlp_forward(effective_params(stack), stack.spec, input);
}

GradMask grad_mask(const AdapterStack& stack, const std::vector<std::string>& trainable, bool include_base) {
  GradMask m;
  m.base = include_base;
  if (include_base) m.size += stack.base.num_params();
  std::set<std::string> want(trainable.begin(), trainable.end());
  for (const auto& n : want)
    if (!stack.find(n)) throw ValueError("grad_mask: unknown adapter '" + n + "'");
  for (const auto& a : stack.adapters) {
    if (!want.count(a.name)) continue;
    m.adapters.push_back(a.name);
    for (std::size_t i = 0; i < a.A.size(); ++i) m.size += a.A[i].size() + a.B[i].size();
  }
  return m;
}

Vector gather_trainable(const AdapterStack& stack, const GradMask& mask) {
  Vector out(mask.size);
  Eigen::Index o = 0;
  if (mask.base) {
    Vector b = stack.base.flatten();
    out.segment(o, b.size()) = b;
    o += b.size();
  }
  for (const auto& n : mask.adapters) {
    const auto* a = stack.find(n);
    for (std::size_t i = 0; i < a->A.size(); ++i) {
      out.segment(o, a->A[i].size()) = a->A[i].reshaped<Eigen::RowMajor>();
      o += a->A[i].size();
      out.segment(o, a->B[i].size()) = a->B[i].reshaped<Eigen::RowMajor>();
      o += a->B[i].size();
    }
  }
  return out;
}

void scatter_trainable(AdapterStack& stack, const GradMask& mask, const Vector& flat) {
  if (flat.size() != mask.size) throw ShapeError("scatter_trainable: size mismatch");
  Eigen::Index o = 0;
  if (mask.base) {
    Eigen::Index n = stack.base.num_params();
    stack.base.assign(flat.segment(o, n));
    o += n;
  }
  for (const auto& n : mask.adapters) {
    auto* a = stack.find(n);
    for (std::size_t i = 0; i < a->A.size(); ++i) {
      a->A[i].reshaped<Eigen::RowMajor>() = flat.segment(o, a->A[i].size());
      o += a->A[i].size();
      a->B[i].reshaped<Eigen::RowMajor>() = flat.segment(o, a->B[i].size());
      o += a->B[i].size();
    }
  }
}

Vector trainable_grads(const AdapterStack& stack, const std::vector<std::string>& enabled,
                       const ParamSet& d_eff, const GradMask& mask) {
  Vector out = Vector::Zero(mask.size);
  Eigen::Index o = 0;
  if (mask.base) {
    Vector g = d_eff.flatten();
    out.segment(o, g.size()) = g;
    o += g.size();
  }
  for (const auto& n : mask.adapters) {
    const auto* a = stack.find(n);
    const bool live = std::find(enabled.begin(), enabled.end(), n) != enabled.end();
    for (std::size_t i = 0; i < a->A.size(); ++i) {
      const Matrix& dW = d_eff.layers[i].weight;
      if (live) {
        Matrix dA = a->scale * (a->B[i].transpose() * dW);
        Matrix dB = a->scale * (dW * a->A[i].transpose());
        out.segment(o, dA.size()) = dA.reshaped<Eigen::RowMajor>();
        out.segment(o + dA.size(), dB.size()) = dB.reshaped<Eigen::RowMajor>();
      }
      o += a->A[i].size() + a->B[i].size();
    }
  }
  return out;
}

StackView::StackView(const AdapterStack& stack) : StackView(stack, stack.enabled) {}

StackView::StackView(const AdapterStack& stack, const std::vector<std::string>& enabled)
    : stack_(&stack), enabled_(enabled), eff_(effective_params(stack, enabled)) {}

Matrix StackView::forward(const Matrix& input) const { return mlp_forward(eff_, stack_->spec, input); }

Matrix StackView::forward(const Matrix& input, MlpTape<double>& tape) const {
  return mlp_forward(eff_, stack_->spec, input, &tape);
}

Vector StackView::backward(const MlpTape<double>& tape, const Matrix& upstream, const GradMask& mask) const {
  auto g = mlp_backward(eff_, stack_->spec, tape, upstream, false);
  return trainable_grads(*stack_, enabled_, g.params, mask);
}

}  // namespace sfolab
