#include "sfolab/flow.hpp"

#include "sfolab/parallel.hpp"

namespace sfolab {

void SamplerConfig::validate() const {
  if (steps < 1) throw ValueError("sampler.steps must be >= 1");
  if (!(guidance_scale >= 0)) throw ValueError("sampler.guidance_scale must be >= 0");
  if (!(cond_dropout_p >= 0 && cond_dropout_p < 1)) throw ValueError("sampler.cond_dropout_p must be in [0, 1)");
}

PathPoint interpolate(const Vector& x0, const Vector& eps, double t) {
  if (x0.size() != eps.size())
    throw ShapeError("interpolate: x0 has dim " + std::to_string(x0.size()) + ", eps " + std::to_string(eps.size()));
  if (!(t >= 0 && t <= 1)) throw ValueError("interpolate: t must lie in [0, 1]");
  PathPoint p;
  p.t = t;
  p.eps = eps;
  p.x_t = (1 - t) * x0 + t * eps;
  p.velocity_target = eps - x0;
  return p;
}

void interpolate_rows(const Matrix& x0, const Matrix& eps, const Vector& t, Matrix& x_t, Matrix* target) {
  if (x0.rows() != eps.rows() || x0.cols() != eps.cols() || t.size() != x0.rows())
    throw ShapeError("interpolate_rows: inconsistent batch shapes");
  x_t = (1.0 - t.array()).matrix().asDiagonal() * x0;
  x_t += t.asDiagonal() * eps;
  if (target) *target = eps - x0;
}

Matrix cfg_velocity(const VelocityField& model, const Matrix& x_t, const Vector& t, const Matrix& cond,
                    const Matrix& null_cond, double scale) {
  if (!(scale >= 0)) throw ValueError("cfg_velocity: scale must be >= 0");
  if (scale == 0) return model(x_t, t, null_cond);
  if (scale == 1) return model(x_t, t, cond);
  Matrix v_cond = model(x_t, t, cond);
  Matrix v_null = model(x_t, t, null_cond);
  return v_null + scale * (v_cond - v_null);
}

Matrix euler_integrate(const VelocityField& model, const Matrix& x1, const Matrix& cond, const Matrix& null_cond,
                       const SamplerConfig& config) {
  config.validate();
  Matrix x = x1;
  const double dt = 1.0 / config.steps;
  Vector t(x.rows());
  for (int i = 0; i < config.steps; ++i) {
    t.setConstant(1.0 - static_cast<double>(i) / config.steps);
    Matrix v = cfg_velocity(model, x, t, cond, null_cond, config.guidance_scale);
    if (v.rows() != x.rows() || v.cols() != x.cols())
      throw ShapeError("euler_integrate: model output " + std::to_string(v.cols()) + " columns, data dim " +
                       std::to_string(x.cols()));
    x -= dt * v;
    if (!x.allFinite()) throw ValueError("euler_integrate: non-finite state at step " + std::to_string(i));
  }
  return x;
}

Matrix euler_sample_rows(const VelocityField& model, const Matrix& x1, const Matrix& cond, const Vector& null_cond,
                         const SamplerConfig& config, int threads) {
  if (cond.rows() != x1.rows()) throw ShapeError("euler_sample_rows: cond and x1 row counts differ");
  if (null_cond.size() != cond.cols()) throw ShapeError("euler_sample_rows: null condition has wrong width");
  Matrix out(x1.rows(), x1.cols());
  parallel_chunks(static_cast<std::size_t>(x1.rows()), kSampleChunk, threads, [&](std::size_t b, std::size_t e) {
    const Eigen::Index n = static_cast<Eigen::Index>(e - b);
    Matrix nulls = null_cond.transpose().replicate(n, 1);
    out.middleRows(b, n) = euler_integrate(model, x1.middleRows(b, n), cond.middleRows(b, n), nulls, config);
  });
  return out;
}

Vector euler_sample(const VelocityField& model, const Vector& cond, const Vector& null_cond,
                    const SamplerConfig& config, RngStream& rng, int data_dim) {
  Matrix x1 = normal_matrix(rng, 1, data_dim);
  Matrix out = euler_integrate(model, x1, cond.transpose(), null_cond.transpose(), config);
  return out.row(0).transpose();
}

}  // namespace sfolab
