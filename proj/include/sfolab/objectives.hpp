#pragma once

#include "sfolab/adapters.hpp"
#include "sfolab/flow.hpp"

#include <vector>

namespace sfolab {

// Network input row: [x_t | t | cond].
Matrix model_input(const Matrix& x_t, const Vector& t, const Matrix& cond);

VelocityField velocity_field(const StackView& view);

double softplus(double x);
double sigmoid(double x);

struct SftBatch {
  Matrix x;     // targets, one row each
  Matrix cond;  // encoded conditions
  Vector t;
  Matrix eps;
};

struct SftLossOut {
  double value = 0;
  Vector grads;  // laid out per the mask; empty if no mask given
};

// Mean over batch and data dims of |f(x_t, t, c) - (eps - x)|^2.
SftLossOut sft_loss(const StackView& view, const SftBatch& batch, const GradMask* mask = nullptr);

// Each pair shares one eps row and one t.
struct QuadBatch {
  Matrix x_pos;
  Matrix x_neg;
  Matrix cond;
  Matrix eps;
  Vector t;

  void validate() const;
};

struct PairTerms {
  double err_pos_policy = 0;
  double err_neg_policy = 0;
  double err_pos_ref = 0;
  double err_neg_ref = 0;
  double delta_policy = 0;
  double delta_ref = 0;
  double inner = 0;  // delta_policy - delta_ref
};

struct LossOut {
  double value = 0;
  std::vector<PairTerms> per_example;
  Vector grads;

  double mean_delta_policy() const;
  double mean_delta_ref() const;
  double mean_inner() const;
  double implicit_accuracy() const;
};

// Per-example mean squared error on the positive and negative paths, and their difference.
struct PairErrors {
  Vector err_pos;
  Vector err_neg;
  Vector delta;
};
PairErrors pair_errors(const StackView& view, const QuadBatch& quad);

Vector delta(const StackView& view, const QuadBatch& quad);

// Scalar form of the pairwise loss for given errors.
double sfo_scalar(double err_pos_policy, double err_neg_policy, double err_pos_ref, double err_neg_ref, double beta);

// softplus(beta * (delta_policy - delta_ref)) averaged over pairs. The reference pass
// carries no gradient; gradients reach only the blocks in `mask`.
LossOut sfo_loss(const StackView& policy, const StackView& ref, const QuadBatch& quad, double beta,
                 const GradMask* mask = nullptr);

LossOut sfo_loss(const AdapterStack& stack, const std::vector<std::string>& policy_enabled,
                 const std::vector<std::string>& ref_enabled, const QuadBatch& quad, double beta,
                 const GradMask* mask = nullptr);

}  // namespace sfolab
