#include "sfolab/negatives.hpp"

#include "sfolab/objectives.hpp"

#include <algorithm>

namespace sfolab {

std::string to_string(Strategy s) {
  switch (s) {
    case Strategy::cdns: return "cdns";
    case Strategy::selfplay: return "selfplay";
    case Strategy::dpo_sim: return "dpo-sim";
    case Strategy::cdns_img_only: return "cdns-img-only";
    case Strategy::cdns_text_only: return "cdns-text-only";
  }
  return "?";
}

Strategy strategy_from_string(const std::string& raw) {
  std::string s = raw;
  std::replace(s.begin(), s.end(), '_', '-');
  for (auto v : {Strategy::cdns, Strategy::selfplay, Strategy::dpo_sim, Strategy::cdns_img_only,
                 Strategy::cdns_text_only})
    if (to_string(v) == s) return v;
  throw ValueError("unknown strategy '" + raw + "'");
}

Provenance provenance_of(Strategy s) {
  switch (s) {
    case Strategy::cdns: return Provenance::cdns;
    case Strategy::selfplay: return Provenance::selfplay;
    case Strategy::dpo_sim: return Provenance::dpo_sim;
    case Strategy::cdns_img_only: return Provenance::cdns_img_only;
    case Strategy::cdns_text_only: return Provenance::cdns_text_only;
  }
  return Provenance::cdns;
}

void SynthConfig::validate() const {
  sampler.validate();
  if (n_per_triplet < 1) throw ValueError("synth.n_per_triplet must be >= 1");
  if (!(leak_lambda >= 0)) throw ValueError("synth.leak_lambda must be >= 0");
}

int GapStats::bin_of(double s) {
  int b = static_cast<int>(std::floor((s + 1.0) / 0.04));
  return std::clamp(b, 0, kBins - 1);
}

double GapStats::mass_below(double threshold) const {
  if (count == 0) return 0;
  std::size_t n = 0;
  for (int i = 0; i < kBins; ++i)
    if (-1.0 + 0.04 * (i + 1) <= threshold + 1e-12) n += histogram[i];
  return static_cast<double>(n) / static_cast<double>(count);
}

GapStats gap_stats(const std::vector<double>& sims) {
  GapStats g;
  if (sims.empty()) throw ValueError("gap_stats: empty pair set");
  g.count = sims.size();
  double sum = 0;
  for (double s : sims) {
    sum += s;
    g.histogram[GapStats::bin_of(s)] += 1;
  }
  g.mean = sum / sims.size();
  double ss = 0;
  for (double s : sims) ss += (s - g.mean) * (s - g.mean);
  g.std = std::sqrt(ss / sims.size());
  std::vector<double> sorted = sims;
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();
  g.median = n % 2 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
  return g;
}

GapStats pair_gap_stats(const std::vector<Quadruplet>& quads, const World& world) {
  std::vector<double> sims;
  sims.reserve(quads.size());
  for (const auto& q : quads) sims.push_back(subject_similarity(q.pos.x_tgt, q.x_neg, world));
  return gap_stats(sims);
}

ConditionPair degrade_condition(const Triplet& t, const World& world, bool degrade_img, bool degrade_text,
                                double leak_lambda, RngStream& rng) {
  ConditionPair c = t.cond;
  if (degrade_img) {
    Vector z = world.unmix(t.x_tgt);
    c.c_img = z.head(world.spec.k) + leak_lambda * (world.leak * z.tail(world.spec.m));
    for (int j = 0; j < world.spec.k; ++j) c.c_img[j] += world.spec.cimg_noise_std * rng.normal();
    c.degraded = true;
  }
  if (degrade_text) {
    c.c_text = Vector::Zero(t.cond.c_text.size());
    c.generic = true;
  }
  return c;
}

namespace {

struct Job {
  std::size_t record;
  ConditionPair neg_cond;
  Matrix x1;  // one row per generation
};

Job make_job(const Triplet& t, std::size_t record, const World& world, Strategy strategy, double lambda,
             RngStream rng) {
  Job j;
  j.record = record;
  RngStream deg = rng.split(tag_of("degrade"));
  const bool img = strategy == Strategy::cdns || strategy == Strategy::cdns_img_only;
  const bool text = strategy == Strategy::cdns || strategy == Strategy::cdns_text_only;
  j.neg_cond = (img || text) ? degrade_condition(t, world, img, text, lambda, deg) : t.cond;
  const int gens = strategy == Strategy::dpo_sim ? 2 : 1;
  j.x1.resize(gens, t.x_tgt.size());
  for (int g = 0; g < gens; ++g) {
    RngStream nr = rng.split(tag_of("noise") + g);
    for (Eigen::Index c = 0; c < j.x1.cols(); ++c) j.x1(g, c) = nr.normal();
  }
  return j;
}

std::vector<Quadruplet> run_jobs(const StackView& ref, const std::vector<Triplet>& triplets, const World& world,
                                 Strategy strategy, const SamplerConfig& sampler, const std::vector<Job>& jobs,
                                 int threads) {
  if (jobs.empty()) return {};
  const auto& first = triplets[jobs[0].record];
  const int img_dim = static_cast<int>(first.cond.c_img.size());
  const int text_dim = static_cast<int>(first.cond.c_text.size());
  const Eigen::Index d = first.x_tgt.size();
  Eigen::Index rows = 0;
  for (const auto& j : jobs) rows += j.x1.rows();
  Matrix x1(rows, d), cond(rows, condition_dim(img_dim, text_dim));
  Eigen::Index r = 0;
  for (const auto& j : jobs) {
    Vector c = encode_condition(j.neg_cond);
    for (Eigen::Index g = 0; g < j.x1.rows(); ++g, ++r) {
      x1.row(r) = j.x1.row(g);
      cond.row(r) = c.transpose();
    }
  }
  Matrix gen = euler_sample_rows(velocity_field(ref), x1, cond, null_condition(img_dim, text_dim), sampler, threads);

  std::vector<Quadruplet> out;
  out.reserve(jobs.size());
  r = 0;
  for (const auto& j : jobs) {
    const Triplet& t = triplets[j.record];
    Quadruplet q;
    q.pos = t;
    q.neg_cond = j.neg_cond;
    q.provenance = provenance_of(strategy);
    if (strategy == Strategy::dpo_sim) {
      Vector a = gen.row(r).transpose(), b = gen.row(r + 1).transpose();
      r += 2;
      double fa = fidelity_oracle(a, t.subject_id, world).value;
      double fb = fidelity_oracle(b, t.subject_id, world).value;
      const bool first = dpo_first_is_positive(fa, fb);
      q.pos.x_tgt = first ? a : b;
      q.x_neg = first ? b : a;
    } else {
      q.x_neg = gen.row(r++).transpose();
    }
    out.push_back(std::move(q));
  }
  return out;
}

}  // namespace

Quadruplet synth_selfplay(const StackView& ref, const Triplet& t, const SamplerConfig& sampler, RngStream rng) {
  // Self-play never touches the world; an empty world is fine for job construction.
  World none;
  std::vector<Triplet> ts{t};
  return run_jobs(ref, ts, none, Strategy::selfplay, sampler, {make_job(t, 0, none, Strategy::selfplay, 0, rng)}, 1)
      .front();
}

Quadruplet synth_cdns(const StackView& ref, const Triplet& t, const World& world, const SamplerConfig& sampler,
                      RngStream rng, double leak_lambda, Strategy variant) {
  if (variant != Strategy::cdns && variant != Strategy::cdns_img_only && variant != Strategy::cdns_text_only)
    throw ValueError("synth_cdns: variant must be a cdns strategy");
  std::vector<Triplet> ts{t};
  return run_jobs(ref, ts, world, variant, sampler, {make_job(t, 0, world, variant, leak_lambda, rng)}, 1).front();
}

Quadruplet synth_dpo_sim(const StackView& ref, const Triplet& t, const World& world, const SamplerConfig& sampler,
                         RngStream rng) {
  std::vector<Triplet> ts{t};
  return run_jobs(ref, ts, world, Strategy::dpo_sim, sampler, {make_job(t, 0, world, Strategy::dpo_sim, 0, rng)}, 1)
      .front();
}

std::vector<Quadruplet> synthesize(const StackView& ref, const std::vector<Triplet>& triplets, const World& world,
                                   const SynthConfig& config, const RngStream& root, int threads) {
  config.validate();
  std::vector<Job> jobs;
  for (std::size_t i = 0; i < triplets.size(); ++i)
    for (int r = 0; r < config.n_per_triplet; ++r)
      jobs.push_back(make_job(triplets[i], i, world, config.strategy, config.leak_lambda, root.split(i).split(r)));
  auto quads = run_jobs(ref, triplets, world, config.strategy, config.sampler, jobs, threads);
  if (config.similarity_filter) {
    const double thr = *config.similarity_filter;
    std::erase_if(quads, [&](const Quadruplet& q) { return subject_similarity(q.pos.x_tgt, q.x_neg, world) > thr; });
  }
  return quads;
}

}  // namespace sfolab
