#include "sfolab/evalkit.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace sfolab;

namespace {

// The exact straight-path field toward a fixed point: every trajectory ends on it.
VelocityField pinned(const Vector& target) {
  return [target](const Matrix& x, const Vector& t, const Matrix&) {
    Matrix v(x.rows(), x.cols());
    for (Eigen::Index r = 0; r < x.rows(); ++r) v.row(r) = (x.row(r) - target.transpose()) / t[r];
    return v;
  };
}

World small_world() {
  WorldSpec ws;
  ws.n_subjects = 16;
  ws.contexts_per_subject = 4;
  return make_world(ws, 12);
}

}  // namespace

TEST(ModeRatio, PinnedGeneratorIsAllTarget) {
  const CarMixture mix = gen_car_mixture(CarMixtureSpec{}, 1);
  EvalSpec spec;
  spec.n_samples = 200;
  const ModeRatio m = target_mode_ratio(pinned(mix.centers.row(0).transpose()), car_condition(), mix.centers, spec,
                                        RngStream(2));
  EXPECT_EQ(m.ratio, 1.0);
  EXPECT_EQ(m.n, 200);
  EXPECT_EQ(m.counts, (std::vector<std::int64_t>{200, 0, 0, 0}));
}

TEST(ModeRatio, UniformOverModes) {
  const CarMixture mix = gen_car_mixture(CarMixtureSpec{}, 3);
  RngStream rng(4);
  const int n = 10000;
  Matrix s(n, 2);
  for (int i = 0; i < n; ++i) {
    const auto j = static_cast<Eigen::Index>(rng.below(4));
    s(i, 0) = mix.centers(j, 0) + 0.25 * rng.normal();
    s(i, 1) = mix.centers(j, 1) + 0.25 * rng.normal();
  }
  const ModeRatio m = mode_ratio(s, mix.centers);
  EXPECT_NEAR(m.ratio, 0.25, 0.02);
  std::int64_t total = 0;
  for (auto c : m.counts) total += c;
  EXPECT_EQ(total, n);
}

TEST(ModeRatio, ThreadCountDoesNotMatter) {
  const CarMixture mix = gen_car_mixture(CarMixtureSpec{}, 5);
  VelocityField f = [](const Matrix& x, const Vector& t, const Matrix&) {
    Matrix v = x;
    for (Eigen::Index r = 0; r < x.rows(); ++r) v.row(r) *= 0.5 * t[r];
    return v;
  };
  EvalSpec spec;
  spec.n_samples = 300;
  const ModeRatio a = target_mode_ratio(f, car_condition(), mix.centers, spec, RngStream(6), 1);
  const ModeRatio b = target_mode_ratio(f, car_condition(), mix.centers, spec, RngStream(6), 3);
  EXPECT_EQ(a.counts, b.counts);
}

TEST(Sweep, PerfectScenesScoreOne) {
  const World w = small_world();
  const WorldData d = gen_world(w);
  SweepSamples s;
  s.x.resize(static_cast<Eigen::Index>(d.heldout.size()), w.spec.data_dim());
  for (std::size_t i = 0; i < d.heldout.size(); ++i) {
    s.x.row(i) = w.scene(d.heldout[i].subject_id, d.heldout[i].context_id).transpose();
    s.subject.push_back(d.heldout[i].subject_id);
    s.context.push_back(d.heldout[i].context_id);
  }
  const SweepStats st = score_samples(s, w);
  EXPECT_NEAR(st.fidelity_mean, 1.0, 1e-9);
  EXPECT_NEAR(st.alignment_mean, 1.0, 1e-9);
  EXPECT_LT(st.fidelity_std, 1e-9);
  EXPECT_EQ(st.n, static_cast<std::int64_t>(d.heldout.size()));
}

TEST(Sweep, RandomNoiseScoresNearZero) {
  const World w = small_world();
  const WorldData d = gen_world(w);
  // The generator ignores its condition and integrates pure noise with a zero field.
  VelocityField zero = [](const Matrix& x, const Vector&, const Matrix&) { return Matrix::Zero(x.rows(), x.cols()); };
  EvalSpec spec;
  spec.n_samples = 64;
  const SweepStats st = subject_sweep(zero, w, d.heldout, spec, RngStream(13));
  const double n = static_cast<double>(st.n);
  EXPECT_EQ(st.n, static_cast<std::int64_t>(d.heldout.size()) * 64);
  EXPECT_LT(std::abs(st.fidelity_mean), 3.0 / std::sqrt(n * w.spec.k));
}

TEST(Sweep, ConditionsMustBeHeldOut) {
  const World w = small_world();
  const WorldData d = gen_world(w);
  EXPECT_THROW(sweep_conditions(d.train, w, EvalSpec{}), ValueError);
  EvalSpec pick;
  pick.held_out_subject_ids = {w.heldout_subjects[0]};
  const auto c = sweep_conditions(d.heldout, w, pick);
  EXPECT_EQ(c.size(), 4u);
  for (const auto& t : c) EXPECT_EQ(t.subject_id, w.heldout_subjects[0]);
  pick.held_out_subject_ids = {w.train_subjects[0]};
  EXPECT_THROW(sweep_conditions(d.heldout, w, pick), ValueError);
}

TEST(Sweep, GenerationIndependentOfThreads) {
  const World w = small_world();
  const WorldData d = gen_world(w);
  VelocityField f = [](const Matrix& x, const Vector& t, const Matrix& c) {
    Matrix v = x * 0.3;
    v.leftCols(8) -= c.leftCols(8) * (1 - t.mean());
    return v;
  };
  EvalSpec spec;
  spec.n_samples = 5;
  const SweepSamples a = generate_sweep(f, d.heldout, spec, RngStream(14), 1);
  const SweepSamples b = generate_sweep(f, d.heldout, spec, RngStream(14), 4);
  EXPECT_EQ(a.x, b.x);
  EXPECT_EQ(a.subject, b.subject);
}

TEST(Table, CsvLayoutAndFailures) {
  AblationTable t;
  AblationResult ok;
  ok.label = "cdns";
  ok.stats.fidelity_mean = 0.5;
  ok.stats.fidelity_std = 0.1;
  ok.stats.alignment_mean = 0.25;
  ok.stats.alignment_std = 0.125;
  ok.stats.n = 4;
  t.add(ok);
  AblationResult bad;
  bad.label = "ln(2,1)";
  bad.ok = false;
  bad.error = "boom";
  t.add(bad);
  EXPECT_THROW(t.add(ok), ValueError);
  EXPECT_EQ(t.to_csv(), AblationTable::csv_header() +
                            "\n1,cdns,ok,0.500000,0.100000,0.250000,0.125000,4,\n1,\"ln(2,1)\",failed,,,,,,\n");
  const json j = t.to_json();
  EXPECT_EQ(j["rows"][1]["status"], "failed");
  ASSERT_NE(t.find("cdns"), nullptr);
  EXPECT_EQ(t.find("nope"), nullptr);
}

TEST(Table, RunAblationRecordsThrowingRows) {
  AblationRow a;
  a.label = "a";
  AblationRow b;
  b.label = "b";
  const AblationTable t = run_ablation({a, b}, [](const AblationRow& r) {
    if (r.label == "b") throw std::runtime_error("bad row");
    AblationResult out;
    out.stats.n = 1;
    return out;
  });
  ASSERT_EQ(t.rows.size(), 2u);
  EXPECT_TRUE(t.rows[0].ok);
  EXPECT_EQ(t.rows[0].label, "a");
  EXPECT_FALSE(t.rows[1].ok);
  EXPECT_NE(t.rows[1].error.find("bad row"), std::string::npos);
}
