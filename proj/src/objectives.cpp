#include "sfolab/objectives.hpp"

namespace sfolab {

Matrix model_input(const Matrix& x_t, const Vector& t, const Matrix& cond) {
  if (t.size() != x_t.rows() || cond.rows() != x_t.rows())
    throw ShapeError("model_input: x_t has " + std::to_string(x_t.rows()) + " rows, t " +
                     std::to_string(t.size()) + ", cond " + std::to_string(cond.rows()));
  Matrix in(x_t.rows(), x_t.cols() + 1 + cond.cols());
  in.leftCols(x_t.cols()) = x_t;
  in.col(x_t.cols()) = t;
  in.rightCols(cond.cols()) = cond;
  return in;
}

VelocityField velocity_field(const StackView& view) {
  return [&view](const Matrix& x_t, const Vector& t, const Matrix& cond) {
    return view.forward(model_input(x_t, t, cond));
  };
}

double softplus(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  double e = std::exp(x);
  return e / (1.0 + e);
}

SftLossOut sft_loss(const StackView& view, const SftBatch& b, const GradMask* mask) {
  const Eigen::Index n = b.x.rows(), d = b.x.cols();
  if (b.eps.rows() != n || b.eps.cols() != d || b.t.size() != n || b.cond.rows() != n)
    throw ShapeError("sft_loss: inconsistent batch shapes");
  if (view.spec().output_dim != d)
    throw ShapeError("sft_loss: model outputs " + std::to_string(view.spec().output_dim) + " dims, data has " +
                     std::to_string(d));
  Matrix x_t, target;
  interpolate_rows(b.x, b.eps, b.t, x_t, &target);
  MlpTape<double> tape;
  Matrix r = view.forward(model_input(x_t, b.t, b.cond), tape) - target;
  SftLossOut out;
  out.value = r.squaredNorm() / static_cast<double>(n * d);
  if (mask) out.grads = view.backward(tape, (2.0 / static_cast<double>(n * d)) * r, *mask);
  return out;
}

void QuadBatch::validate() const {
  const Eigen::Index n = x_pos.rows();
  if (x_neg.rows() != n || cond.rows() != n || eps.rows() != n || t.size() != n)
    throw ShapeError("QuadBatch: pos/neg/cond/eps/t batch sizes differ");
  if (x_neg.cols() != x_pos.cols() || eps.cols() != x_pos.cols())
    throw ShapeError("QuadBatch: pos/neg/eps dimensions differ");
}

namespace {

// Positives stacked over negatives, sharing t, eps and cond row for row.
struct Stacked {
  Matrix input;
  Matrix target;
};

Stacked stack_pairs(const QuadBatch& q) {
  const Eigen::Index n = q.x_pos.rows(), d = q.x_pos.cols();
  Matrix x0(2 * n, d), eps(2 * n, d), cond(2 * n, q.cond.cols());
  Vector t(2 * n);
  x0 << q.x_pos, q.x_neg;
  eps << q.eps, q.eps;
  cond << q.cond, q.cond;
  t << q.t, q.t;
  Stacked s;
  Matrix x_t;
  interpolate_rows(x0, eps, t, x_t, &s.target);
  s.input = model_input(x_t, t, cond);
  return s;
}

}  // namespace

PairErrors pair_errors(const StackView& view, const QuadBatch& quad) {
  quad.validate();
  const Eigen::Index n = quad.x_pos.rows();
  const double d = static_cast<double>(quad.x_pos.cols());
  Stacked s = stack_pairs(quad);
  Matrix r = view.forward(s.input) - s.target;
  Vector e = r.rowwise().squaredNorm() / d;
  PairErrors out{e.head(n), e.tail(n), Vector()};
  out.delta = out.err_pos - out.err_neg;
  return out;
}

Vector delta(const StackView& view, const QuadBatch& quad) { return pair_errors(view, quad).delta; }

double sfo_scalar(double err_pos_policy, double err_neg_policy, double err_pos_ref, double err_neg_ref, double beta) {
  double inner = (err_pos_policy - err_neg_policy) - (err_pos_ref - err_neg_ref);
  return softplus(beta * inner);
}

LossOut sfo_loss(const StackView& policy, const StackView& ref, const QuadBatch& quad, double beta,
                 const GradMask* mask) {
  if (!(beta > 0)) throw ValueError("sfo_loss: beta must be > 0");
  quad.validate();
  const Eigen::Index n = quad.x_pos.rows();
  const Eigen::Index d = quad.x_pos.cols();
  Stacked s = stack_pairs(quad);

  Matrix r_ref = ref.forward(s.input) - s.target;
  Vector e_ref = r_ref.rowwise().squaredNorm() / static_cast<double>(d);

  MlpTape<double> tape;
  Matrix r = policy.forward(s.input, tape) - s.target;
  Vector e = r.rowwise().squaredNorm() / static_cast<double>(d);

  LossOut out;
  out.per_example.resize(n);
  Vector w(n);
  double total = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    PairTerms& p = out.per_example[i];
    p.err_pos_policy = e[i];
    p.err_neg_policy = e[n + i];
    p.err_pos_ref = e_ref[i];
    p.err_neg_ref = e_ref[n + i];
    p.delta_policy = p.err_pos_policy - p.err_neg_policy;
    p.delta_ref = p.err_pos_ref - p.err_neg_ref;
    p.inner = p.delta_policy - p.delta_ref;
    if (!std::isfinite(p.inner)) throw ValueError("sfo_loss: non-finite inner term at example " + std::to_string(i));
    total += softplus(beta * p.inner);
    w[i] = beta * sigmoid(beta * p.inner) / static_cast<double>(n);
  }
  out.value = total / static_cast<double>(n);

  if (mask) {
    // d err / d f = 2 r / d; positives carry +w, negatives -w.
    Matrix up(2 * n, d);
    const double k = 2.0 / static_cast<double>(d);
    up.topRows(n) = (k * w).asDiagonal() * r.topRows(n);
    up.bottomRows(n) = (-k * w).asDiagonal() * r.bottomRows(n);
    out.grads = policy.backward(tape, up, *mask);
  }
  return out;
}

LossOut sfo_loss(const AdapterStack& stack, const std::vector<std::string>& policy_enabled,
                 const std::vector<std::string>& ref_enabled, const QuadBatch& quad, double beta,
                 const GradMask* mask) {
  StackView policy(stack, policy_enabled);
  StackView ref(stack, ref_enabled);
  return sfo_loss(policy, ref, quad, beta, mask);
}

double LossOut::mean_delta_policy() const {
  double s = 0;
  for (const auto& p : per_example) s += p.delta_policy;
  return per_example.empty() ? 0 : s / per_example.size();
}

double LossOut::mean_delta_ref() const {
  double s = 0;
  for (const auto& p : per_example) s += p.delta_ref;
  return per_example.empty() ? 0 : s / per_example.size();
}

double LossOut::mean_inner() const {
  double s = 0;
  for (const auto& p : per_example) s += p.inner;
  return per_example.empty() ? 0 : s / per_example.size();
}

double LossOut::implicit_accuracy() const {
  double s = 0;
  for (const auto& p : per_example) s += p.inner < 0 ? 1 : 0;
  return per_example.empty() ? 0 : s / per_example.size();
}

}  // namespace sfolab
