#include "helpers.hpp"
#include "sfolab/objectives.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace sfolab;
using namespace sfolab::testing;

namespace {

// Data dim d, condition dim c: the network sees d + 1 + c inputs.
MlpSpec net(int d, int c, std::vector<int> hidden) {
  MlpSpec s;
  s.input_dim = d + 1 + c;
  s.hidden_widths = std::move(hidden);
  s.output_dim = d;
  return s;
}

QuadBatch random_quad(int n, int d, int c, RngStream& rng) {
  QuadBatch q;
  q.x_pos = normal_matrix(rng, n, d);
  q.x_neg = normal_matrix(rng, n, d);
  q.cond = normal_matrix(rng, n, c);
  q.eps = normal_matrix(rng, n, d);
  q.t = Vector(n);
  for (int i = 0; i < n; ++i) q.t[i] = rng.uniform();
  return q;
}

void randomize_b(AdapterStack& s, const std::string& name, RngStream& rng, double std = 0.3) {
  for (auto& b : s.find(name)->B) b = normal_matrix(rng, b.rows(), b.cols(), std);
}

// Base, frozen "ref" and a freshly attached "sfo", all drawn from one seed.
struct Pair {
  AdapterStack policy;
  AdapterStack ref;
};

Pair sfo_setup(const MlpSpec& spec, std::uint64_t seed, bool zero_sfo) {
  RngStream rng(seed);
  AdapterStack s = make_stack(spec, random_params(spec, rng, 0.4));
  s = attach(s, "ref", 2, rng);
  randomize_b(s, "ref", rng);
  Pair p;
  p.ref = set_enabled(s, {"ref"});
  s = attach(s, "sfo", 3, rng);
  if (!zero_sfo) randomize_b(s, "sfo", rng);
  p.policy = set_enabled(s, {"ref", "sfo"});
  return p;
}

}  // namespace

TEST(SftLoss, PerfectModelIsZero) {
  // x = 0 and t = 1 make x_t = eps = target, so an identity on x_t is exact.
  const int d = 3, c = 2;
  const MlpSpec spec = net(d, c, {});
  ParamSet p = ParamSet::zeros(spec);
  p.layers[0].weight.leftCols(d) = Matrix::Identity(d, d);
  const AdapterStack s = make_stack(spec, p);
  RngStream rng(1);
  SftBatch b{Matrix::Zero(5, d), normal_matrix(rng, 5, c), Vector::Ones(5), normal_matrix(rng, 5, d)};
  EXPECT_EQ(sft_loss(StackView(s), b).value, 0.0);
}

TEST(SftLoss, ZeroModelIsMeanSquaredNoise) {
  const MlpSpec spec = net(2, 1, {4});
  const AdapterStack s = make_stack(spec, ParamSet::zeros(spec));
  RngStream rng(2);
  SftBatch b{Matrix::Zero(6, 2), normal_matrix(rng, 6, 1), Vector::Constant(6, 0.3), normal_matrix(rng, 6, 2)};
  EXPECT_NEAR(sft_loss(StackView(s), b).value, b.eps.array().square().mean(), 1e-15);
}

TEST(SftLoss, HandOneDimBatch) {
  // f = 0.5 x_t + 0.2 t - 0.3 c + 0.1 on two one-dimensional examples.
  const MlpSpec spec = net(1, 1, {});
  ParamSet p = ParamSet::zeros(spec);
  p.layers[0].weight << 0.5, 0.2, -0.3;
  p.layers[0].bias << 0.1;
  const AdapterStack s = make_stack(spec, p);
  SftBatch b;
  b.x = Matrix(2, 1);
  b.x << 1.0, -2.0;
  b.eps = Matrix(2, 1);
  b.eps << 0.5, 1.5;
  b.cond = Matrix(2, 1);
  b.cond << 1.0, 0.0;
  b.t = Vector(2);
  b.t << 0.25, 0.5;
  // Example 1: x_t = 0.75 + 0.125 = 0.875, f = 0.4375 + 0.05 - 0.3 + 0.1 = 0.2875, target -0.5.
  // Example 2: x_t = -1 + 0.75 = -0.25, f = -0.125 + 0.1 + 0.1 = 0.075, target 3.5.
  const double expected = (std::pow(0.2875 + 0.5, 2) + std::pow(0.075 - 3.5, 2)) / 2;
  EXPECT_NEAR(sft_loss(StackView(s), b).value, expected, 1e-14);
}

TEST(Delta, IdenticalPairIsZero) {
  const Pair p = sfo_setup(net(3, 2, {5}), 3, false);
  RngStream rng(4);
  QuadBatch q = random_quad(4, 3, 2, rng);
  q.x_neg = q.x_pos;
  EXPECT_TRUE((delta(StackView(p.policy), q).array() == 0).all());
}

TEST(Delta, PerfectOnPositiveIsMinusNegativeError) {
  const int d = 2, c = 1;
  const MlpSpec spec = net(d, c, {});
  ParamSet prm = ParamSet::zeros(spec);
  prm.layers[0].weight.leftCols(d) = Matrix::Identity(d, d);
  const AdapterStack s = make_stack(spec, prm);
  RngStream rng(5);
  QuadBatch q = random_quad(6, d, c, rng);
  q.x_pos.setZero();
  q.t.setOnes();
  const PairErrors e = pair_errors(StackView(s), q);
  for (int i = 0; i < 6; ++i) {
    EXPECT_EQ(e.err_pos[i], 0.0);
    EXPECT_EQ(e.delta[i], -e.err_neg[i]);
    EXPECT_LE(e.delta[i], 0.0);
  }
}

TEST(SfoScalar, HandCase) {
  EXPECT_NEAR(sfo_scalar(0.1, 0.4, 0.2, 0.3, 1.0), std::log1p(std::exp(-0.2)), 1e-9);
  EXPECT_NEAR(sfo_scalar(0.1, 0.4, 0.2, 0.3, 1.0), 0.598139, 1e-6);
  EXPECT_NEAR((0.1 - 0.4) - (0.2 - 0.3), -0.2, 1e-15);
}

TEST(SfoScalar, MonotoneInInnerAndScaledByBeta) {
  double prev = -1;
  for (double inner = -3; inner <= 3; inner += 0.1) {
    const double l = sfo_scalar(inner, 0, 0, 0, 2.0);
    EXPECT_GT(l, prev);
    prev = l;
    EXPECT_NEAR(sfo_scalar(inner, 0, 0, 0, 2.0), sfo_scalar(2 * inner, 0, 0, 0, 1.0), 1e-14);
    // softplus(x) - softplus(-x) = x
    EXPECT_NEAR(softplus(inner) - softplus(-inner), inner, 1e-14);
  }
}

TEST(SfoLoss, FreshAdapterIsLn2) {
  const Pair p = sfo_setup(net(3, 2, {6, 6}), 6, true);
  RngStream rng(7);
  for (int k = 0; k < 20; ++k) {
    const QuadBatch q = random_quad(5, 3, 2, rng);
    const LossOut out = sfo_loss(StackView(p.policy), StackView(p.ref), q, 1000.0);
    EXPECT_NEAR(out.value, std::log(2.0), 1e-9);
    for (const auto& e : out.per_example) EXPECT_EQ(e.inner, 0.0);
  }
}

TEST(SfoLoss, ExtremeBetaStaysFinite) {
  const Pair p = sfo_setup(net(3, 2, {6}), 8, false);
  RngStream rng(9);
  const QuadBatch q = random_quad(5, 3, 2, rng);
  const GradMask mask = grad_mask(p.policy, {"sfo"});
  const LossOut out = sfo_loss(StackView(p.policy), StackView(p.ref), q, 1e6, &mask);
  EXPECT_TRUE(std::isfinite(out.value));
  EXPECT_TRUE(out.grads.allFinite());
  EXPECT_THROW(sfo_loss(StackView(p.policy), StackView(p.ref), q, 0.0), ValueError);
}

TEST(SfoLoss, NonFiniteNamesExample) {
  const Pair p = sfo_setup(net(2, 1, {4}), 10, false);
  RngStream rng(11);
  QuadBatch q = random_quad(4, 2, 1, rng);
  q.x_neg(1, 0) = std::nan("");
  try {
    sfo_loss(StackView(p.policy), StackView(p.ref), q, 1.0);
    FAIL() << "no throw";
  } catch (const ValueError& e) {
    EXPECT_NE(std::string(e.what()).find("example 1"), std::string::npos);
  }
}

TEST(SfoLoss, MismatchedBatchRejected) {
  const Pair p = sfo_setup(net(2, 1, {4}), 12, false);
  RngStream rng(13);
  QuadBatch q = random_quad(4, 2, 1, rng);
  q.t = Vector::Constant(3, 0.5);
  EXPECT_THROW(sfo_loss(StackView(p.policy), StackView(p.ref), q, 1.0), ShapeError);
}

TEST(SfoLoss, TermsAndMetricsAgree) {
  const Pair p = sfo_setup(net(3, 2, {5}), 14, false);
  RngStream rng(15);
  const QuadBatch q = random_quad(8, 3, 2, rng);
  const LossOut out = sfo_loss(StackView(p.policy), StackView(p.ref), q, 3.0);
  const PairErrors pe = pair_errors(StackView(p.policy), q);
  const PairErrors re = pair_errors(StackView(p.ref), q);
  double total = 0;
  for (int i = 0; i < 8; ++i) {
    EXPECT_NEAR(out.per_example[i].delta_policy, pe.delta[i], 1e-14);
    EXPECT_NEAR(out.per_example[i].delta_ref, re.delta[i], 1e-14);
    total += sfo_scalar(pe.err_pos[i], pe.err_neg[i], re.err_pos[i], re.err_neg[i], 3.0);
  }
  EXPECT_NEAR(out.value, total / 8, 1e-13);
}

// Every trainable block, base included, against central differences.
TEST(Gradients, SftMatchesFiniteDifferences) {
  const MlpSpec spec = net(3, 2, {8, 8});
  Pair p = sfo_setup(spec, 16, false);
  AdapterStack s = p.policy;
  const GradMask mask = grad_mask(s, {"ref", "sfo"}, true);
  ASSERT_LE(mask.size, 500);
  RngStream rng(17);
  SftBatch b{normal_matrix(rng, 6, 3), normal_matrix(rng, 6, 2), Vector::Constant(6, 0.4), normal_matrix(rng, 6, 3)};
  for (int i = 0; i < 6; ++i) b.t[i] = rng.uniform();
  const Vector g = sft_loss(StackView(s), b, &mask).grads;
  auto f = [&](const Vector& flat) {
    AdapterStack c = s;
    scatter_trainable(c, mask, flat);
    return sft_loss(StackView(c), b).value;
  };
  EXPECT_LT(max_rel_err(g, central_diff(f, gather_trainable(s, mask))), 1e-4);
}

TEST(Gradients, SfoMatchesFiniteDifferences) {
  const MlpSpec spec = net(3, 2, {8, 8});
  for (double beta : {0.5, 5.0}) {
    Pair p = sfo_setup(spec, 18, false);
    const GradMask mask = grad_mask(p.policy, {"ref", "sfo"}, true);
    ASSERT_LE(mask.size, 500);
    RngStream rng(19);
    const QuadBatch q = random_quad(5, 3, 2, rng);
    const StackView ref(p.ref);
    const Vector g = sfo_loss(StackView(p.policy), ref, q, beta, &mask).grads;
    auto f = [&](const Vector& flat) {
      AdapterStack c = p.policy;
      scatter_trainable(c, mask, flat);
      return sfo_loss(StackView(c), ref, q, beta).value;
    };
    EXPECT_LT(max_rel_err(g, central_diff(f, gather_trainable(p.policy, mask))), 1e-4) << beta;
  }
}

TEST(Gradients, ReferenceCarriesNoGradient) {
  // Moving the reference changes the loss but the returned gradient is for the policy only.
  const Pair p = sfo_setup(net(2, 1, {4}), 20, false);
  const GradMask mask = grad_mask(p.policy, {"sfo"});
  RngStream rng(21);
  const QuadBatch q = random_quad(4, 2, 1, rng);
  const LossOut a = sfo_loss(StackView(p.policy), StackView(p.ref), q, 2.0, &mask);
  EXPECT_EQ(a.grads.size(), mask.size);
  const LossOut shared = sfo_loss(p.policy, {"ref", "sfo"}, {"ref"}, q, 2.0, &mask);
  EXPECT_EQ(a.value, shared.value);
  EXPECT_EQ(a.grads, shared.grads);
}
