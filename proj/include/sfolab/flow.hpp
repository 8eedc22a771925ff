#pragma once

#include "sfolab/numcore.hpp"

#include <functional>

namespace sfolab {

struct PathPoint {
  Vector x_t;
  double t = 0;
  Vector eps;
  Vector velocity_target;
};

struct SamplerConfig {
  int steps = 28;
  double guidance_scale = 3.5;
  double cond_dropout_p = 0.1;

  void validate() const;
  bool operator==(const SamplerConfig&) const = default;
};

// t = 0 is data, t = 1 is noise.
PathPoint interpolate(const Vector& x0, const Vector& eps, double t);

// Row-wise version used by the losses: x_t = (1-t) x0 + t eps, target = eps - x0.
void interpolate_rows(const Matrix& x0, const Matrix& eps, const Vector& t, Matrix& x_t, Matrix* target = nullptr);

// Batched velocity field v(x_t, t, cond); one row per sample.
using VelocityField = std::function<Matrix(const Matrix& x_t, const Vector& t, const Matrix& cond)>;

Matrix cfg_velocity(const VelocityField& model, const Matrix& x_t, const Vector& t, const Matrix& cond,
                    const Matrix& null_cond, double scale);

// Integrates from t = 1 (x1 given) down to t = 0 with uniform Euler steps and guidance.
Matrix euler_integrate(const VelocityField& model, const Matrix& x1, const Matrix& cond, const Matrix& null_cond,
                       const SamplerConfig& config);

// Rows are integrated in fixed chunks of kSampleChunk, spread over `threads`;
// the result does not depend on the thread count.
constexpr std::size_t kSampleChunk = 64;
Matrix euler_sample_rows(const VelocityField& model, const Matrix& x1, const Matrix& cond, const Vector& null_cond,
                         const SamplerConfig& config, int threads = 1);

// Single-sample form: draws x1 from rng.
Vector euler_sample(const VelocityField& model, const Vector& cond, const Vector& null_cond,
                    const SamplerConfig& config, RngStream& rng, int data_dim);

}  // namespace sfolab
