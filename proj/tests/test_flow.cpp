#include "sfolab/flow.hpp"

#include <gtest/gtest.h>

using namespace sfolab;

namespace {

// Returns a fixed velocity regardless of state; the true field for a single straight path.
VelocityField constant_field(const Matrix& v) {
  return [v](const Matrix& x, const Vector&, const Matrix&) {
    Matrix out(x.rows(), x.cols());
    for (Eigen::Index r = 0; r < x.rows(); ++r) out.row(r) = v.row(r % v.rows());
    return out;
  };
}

}  // namespace

TEST(Interpolate, Endpoints) {
  Vector x0(3), eps(3);
  x0 << 1, -2, 0.5;
  eps << 0.3, 0.1, -4;
  EXPECT_EQ(interpolate(x0, eps, 0).x_t, x0);
  EXPECT_EQ(interpolate(x0, eps, 1).x_t, eps);
}

TEST(Interpolate, HandCase) {
  Vector x0(2), eps(2);
  x0 << 1, 0;
  eps << 0, 2;
  const PathPoint p = interpolate(x0, eps, 0.25);
  EXPECT_DOUBLE_EQ(p.x_t[0], 0.75);
  EXPECT_DOUBLE_EQ(p.x_t[1], 0.5);
  EXPECT_DOUBLE_EQ(p.velocity_target[0], -1);
  EXPECT_DOUBLE_EQ(p.velocity_target[1], 2);
}

TEST(Interpolate, LinearInTAndRowsAgree) {
  RngStream rng(3);
  for (int i = 0; i < 1000; ++i) {
    const Vector x0 = normal_matrix(rng, 4, 1);
    const Vector eps = normal_matrix(rng, 4, 1);
    const double t = rng.uniform();
    const PathPoint p = interpolate(x0, eps, t);
    // x_t moves along the target direction from x0.
    ASSERT_LT((p.x_t - (x0 + t * p.velocity_target)).cwiseAbs().maxCoeff(), 1e-12);
    Matrix xt;
    interpolate_rows(x0.transpose(), eps.transpose(), Vector::Constant(1, t), xt);
    ASSERT_LT((xt.row(0).transpose() - p.x_t).cwiseAbs().maxCoeff(), 1e-15);
  }
}

TEST(Interpolate, RejectsBadInput) {
  EXPECT_THROW(interpolate(Vector::Zero(2), Vector::Zero(3), 0.5), ShapeError);
  EXPECT_THROW(interpolate(Vector::Zero(2), Vector::Zero(2), 1.5), ValueError);
}

TEST(Euler, TrueConstantFieldRecoversData) {
  RngStream rng(4);
  const Matrix x0 = normal_matrix(rng, 5, 3);
  const Matrix eps = normal_matrix(rng, 5, 3);
  const Matrix cond = Matrix::Zero(5, 1);
  for (int steps : {1, 2, 7, 28, 100}) {
    SamplerConfig cfg;
    cfg.steps = steps;
    cfg.guidance_scale = 1.0;
    const Matrix x = euler_integrate(constant_field(eps - x0), eps, cond, cond, cfg);
    EXPECT_LT((x - x0).cwiseAbs().maxCoeff(), 1e-12) << steps;
  }
}

TEST(Euler, OneStepIsSingleEulerUpdate) {
  RngStream rng(5);
  const Matrix x1 = normal_matrix(rng, 3, 2);
  const Matrix cond = Matrix::Zero(3, 1);
  VelocityField f = [](const Matrix& x, const Vector& t, const Matrix&) {
    Matrix v = x;
    for (Eigen::Index r = 0; r < x.rows(); ++r) v.row(r) *= 0.3 + t[r];
    return v;
  };
  SamplerConfig cfg;
  cfg.steps = 1;
  cfg.guidance_scale = 1.0;
  const Matrix got = euler_integrate(f, x1, cond, cond, cfg);
  EXPECT_LT((got - (x1 - 1.3 * x1)).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Euler, NonFiniteStateNamesStep) {
  VelocityField f = [](const Matrix& x, const Vector& t, const Matrix&) {
    Matrix v = Matrix::Zero(x.rows(), x.cols());
    if (t[0] < 0.6) v.setConstant(std::numeric_limits<double>::infinity());
    return v;
  };
  SamplerConfig cfg;
  cfg.steps = 4;
  cfg.guidance_scale = 1.0;
  try {
    euler_integrate(f, Matrix::Zero(1, 2), Matrix::Zero(1, 1), Matrix::Zero(1, 1), cfg);
    FAIL() << "no throw";
  } catch (const ValueError& e) {
    EXPECT_NE(std::string(e.what()).find("step 2"), std::string::npos);
  }
}

TEST(Euler, RowsIndependentOfThreadCount) {
  RngStream rng(6);
  const Matrix x1 = normal_matrix(rng, 300, 2);
  const Matrix cond = normal_matrix(rng, 300, 3);
  VelocityField f = [](const Matrix& x, const Vector& t, const Matrix& c) {
    Matrix v = x;
    for (Eigen::Index r = 0; r < x.rows(); ++r) v.row(r) = v.row(r) * t[r] + c.row(r).head(2) * (1 - t[r]);
    return v;
  };
  SamplerConfig cfg;
  const Matrix a = euler_sample_rows(f, x1, cond, Vector::Zero(3), cfg, 1);
  const Matrix b = euler_sample_rows(f, x1, cond, Vector::Zero(3), cfg, 4);
  EXPECT_EQ(a, b);
}

class Guidance : public ::testing::Test {
 protected:
  // v = [1, 0] for a nonzero condition and [0, 0] for the null one.
  VelocityField field = [](const Matrix& x, const Vector&, const Matrix& c) {
    Matrix v = Matrix::Zero(x.rows(), 2);
    for (Eigen::Index r = 0; r < x.rows(); ++r)
      if (c(r, 0) != 0) v(r, 0) = 1;
    return v;
  };
  Matrix x = Matrix::Zero(1, 2);
  Vector t = Vector::Constant(1, 0.5);
  Matrix cond = Matrix::Ones(1, 1);
  Matrix null = Matrix::Zero(1, 1);
};

TEST_F(Guidance, ScaleZeroIsUnconditional) {
  EXPECT_EQ(cfg_velocity(field, x, t, cond, null, 0.0), field(x, t, null));
}

TEST_F(Guidance, ScaleOneIsConditional) { EXPECT_EQ(cfg_velocity(field, x, t, cond, null, 1.0), field(x, t, cond)); }

TEST_F(Guidance, HandLinearCombination) {
  const Matrix v = cfg_velocity(field, x, t, cond, null, 3.5);
  EXPECT_DOUBLE_EQ(v(0, 0), 3.5);
  EXPECT_DOUBLE_EQ(v(0, 1), 0.0);
}

TEST_F(Guidance, NegativeScaleRejected) { EXPECT_THROW(cfg_velocity(field, x, t, cond, null, -1), ValueError); }
