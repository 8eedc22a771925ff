#pragma once

#include "sfolab/numcore.hpp"

#include <string>
#include <vector>

namespace sfolab {

struct LowRankAdapter {
  std::string name;
  int rank = 1;
  double scale = 1.0;
  std::vector<Matrix> A;  // per layer, rank x in
  std::vector<Matrix> B;  // per layer, out x rank

  bool operator==(const LowRankAdapter&) const = default;
};

struct AdapterStack {
  MlpSpec spec;
  ParamSet base;
  std::vector<LowRankAdapter> adapters;
  std::vector<std::string> enabled;  // kept in attach order

  const LowRankAdapter* find(const std::string& name) const;
  LowRankAdapter* find(const std::string& name);
  bool is_enabled(const std::string& name) const;
  std::vector<std::string> names() const;

  bool operator==(const AdapterStack&) const = default;
};

AdapterStack make_stack(const MlpSpec& spec, ParamSet base);

// scale = 1/rank, A ~ N(0, 1/rank), B = 0. The new adapter starts disabled.
AdapterStack attach(const AdapterStack& stack, const std::string& name, int rank, RngStream& rng);
AdapterStack set_enabled(const AdapterStack& stack, const std::vector<std::string>& names);

// Base plus the enabled deltas, summed in attach order so the result is order-free.
ParamSet effective_params(const AdapterStack& stack);
ParamSet effective_params(const AdapterStack& stack, const std::vector<std::string>& enabled);

Matrix stack_forward(const AdapterStack& stack, const Matrix& input);

// Which parameter blocks an optimizer may touch, with a fixed flat layout:
// base layers (W, b) if included, then each trainable adapter's per-layer (A, B).
struct GradMask {
  bool base = false;
  std::vector<std::string> adapters;
  Eigen::Index size = 0;
};

GradMask grad_mask(const AdapterStack& stack, const std::vector<std::string>& trainable, bool include_base = false);

Vector gather_trainable(const AdapterStack& stack, const GradMask& mask);
void scatter_trainable(AdapterStack& stack, const GradMask& mask, const Vector& flat);

// Chain rule from gradients w.r.t. the effective weights to the masked blocks.
// Adapters that are trainable but not in `enabled` receive zero gradient.
Vector trainable_grads(const AdapterStack& stack, const std::vector<std::string>& enabled,
                       const ParamSet& d_effective, const GradMask& mask);

// Effective weights for one enabled set, materialized once and reused across forwards.
class StackView {
 public:
  explicit StackView(const AdapterStack& stack);
  StackView(const AdapterStack& stack, const std::vector<std::string>& enabled);
  const ParamSet& params() const { return eff_; }
  const MlpSpec& spec() const { return stack_->spec; }
  Matrix forward(const Matrix& input) const;
  Matrix forward(const Matrix& input, MlpTape<double>& tape) const;
  Vector backward(const MlpTape<double>& tape, const Matrix& upstream, const GradMask& mask) const;

 private:
  const AdapterStack* stack_;
  std::vector<std::string> enabled_;
  ParamSet eff_;
};

}  // namespace sfolab
