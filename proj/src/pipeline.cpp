#include "sfolab/pipeline.hpp"

namespace sfolab {

TrainConfig seeded(TrainConfig c, std::uint64_t seed) {
  c.seed = seed;
  return c;
}

RngStream synth_root(std::uint64_t seed) { return RngStream(seed, tag_of("synth")); }
RngStream eval_root(std::uint64_t seed) { return RngStream(seed, tag_of("eval")); }

json gap_json(const GapStats& g) {
  return json{{"count", g.count}, {"mean", g.mean},           {"std", g.std},
              {"median", g.median}, {"mass_below_0.8", g.mass_below(0.8)}, {"histogram", g.histogram}};
}

namespace {

MetricsSink tagged(JsonlWriter& w, const std::string& row) {
  return [&w, row](const json& j) {
    json line = json{{"row", row}};
    line.update(j);
    w(line);
  };
}

}  // namespace

SubjectBase prepare_subject(const PipelineConfig& cfg, const RunOptions& opt, const MetricsSink& metrics) {
  SubjectBase s;
  s.world = make_world(cfg.world, opt.seed);
  s.data = gen_world(s.world);
  s.base = pretrain_base(s.data.train, cfg.model, seeded(cfg.pretrain, opt.seed), {metrics, {}});
  TrainConfig sft = seeded(cfg.sft, opt.seed);
  if (sft.adapter_name.empty()) sft.adapter_name = "ref";
  s.sft = train_sft(s.base, s.data.train, sft, {metrics, {}});
  return s;
}

TrainConfig row_sfo_config(const PipelineConfig& cfg, const AblationRow& row, std::uint64_t seed) {
  TrainConfig c = seeded(cfg.sfo, seed);
  if (row.beta) c.beta = *row.beta;
  if (row.timestep) c.timestep = *row.timestep;
  if (row.adapter_rank) c.adapter_rank = *row.adapter_rank;
  if (row.iterations) c.iterations = *row.iterations;
  if (row.direct) c.direct = *row.direct;
  return c;
}

TrainConfig sft_additional_config(const PipelineConfig& cfg, const AblationRow& row, std::uint64_t seed) {
  const TrainConfig sfo = row_sfo_config(cfg, row, seed);
  TrainConfig c = seeded(cfg.sft, seed);
  c.adapter_name = "sft-additional";
  c.iterations = sfo.iterations;
  c.batch_size = sfo.batch_size;
  c.adapter_rank = sfo.adapter_rank;
  c.timestep = sfo.timestep;
  c.optimizer = sfo.optimizer;
  return c;
}

SubjectRun run_subject(const PipelineConfig& cfg, const RunOptions& opt) {
  cfg.validate();
  JsonlWriter log("");
  SubjectBase s = prepare_subject(cfg, opt, tagged(log, "shared"));
  const RngStream eval_rng = eval_root(opt.seed);
  auto evaluate = [&](const AdapterStack& stack) {
    return subject_sweep(stack, s.world, s.data.heldout, cfg.eval, eval_rng, opt.threads);
  };

  SubjectRun run;
  std::map<Strategy, std::vector<Quadruplet>> quads;
  auto negatives = [&](Strategy st) -> const std::vector<Quadruplet>& {
    auto it = quads.find(st);
    if (it != quads.end()) return it->second;
    SynthConfig sc = cfg.synth;
    sc.strategy = st;
    const StackView ref(s.sft.stack);
    auto q = synthesize(ref, s.data.train, s.world, sc, synth_root(opt.seed), opt.threads);
    run.gaps[to_string(st)] = pair_gap_stats(q, s.world);
    return quads.emplace(st, std::move(q)).first->second;
  };

  run.table = run_ablation(cfg.ablation, [&](const AblationRow& row) {
    AblationResult r;
    if (row.kind == "sft-base") {
      r.stats = evaluate(s.sft.stack);
    } else if (row.kind == "sft-additional") {
      Checkpoint c = train_sft(s.sft, s.data.train, sft_additional_config(cfg, row, opt.seed), {tagged(log, row.label), {}});
      r.stats = evaluate(c.stack);
    } else {
      const auto& q = negatives(*row.strategy);
      Checkpoint c = train_sfo(s.sft, q, row_sfo_config(cfg, row, opt.seed), {tagged(log, row.label), {}});
      r.stats = evaluate(c.stack);
      r.extra["strategy"] = to_string(*row.strategy);
      r.extra["pair_gap"] = gap_json(run.gaps.at(to_string(*row.strategy)));
    }
    return r;
  });
  run.metrics = log.text();
  return run;
}

// ---- toy cars ----

std::int64_t RatioCurve::first_reaching(double level) const {
  for (std::size_t i = 0; i < ratios.size(); ++i)
    if (ratios[i] >= level) return iterations[i];
  return -1;
}

std::vector<Quadruplet> car_pairs(const CarMixture& mix) {
  if (mix.negatives.empty()) throw ValueError("car_pairs: empty negative pool");
  std::vector<Quadruplet> out;
  for (std::size_t i = 0; i < mix.positives.size(); ++i) {
    Quadruplet q;
    q.pos = mix.positives[i];
    const Triplet& n = mix.negatives[i % mix.negatives.size()];
    q.x_neg = n.x_tgt;
    q.neg_cond = n.cond;
    q.provenance = Provenance::mode_pool;
    out.push_back(std::move(q));
  }
  return out;
}

CarsRun run_toy_cars(const PipelineConfig& cfg, const RunOptions& opt) {
  cfg.validate();
  JsonlWriter log("");
  const CarMixture mix = gen_car_mixture(cfg.cars, opt.seed);
  const Checkpoint base = pretrain_base(mix.pretrain, cfg.model, seeded(cfg.pretrain, opt.seed), {tagged(log, "shared"), {}});
  const ConditionPair cond = car_condition();
  const RngStream eval_rng = eval_root(opt.seed);
  auto ratio = [&](const AdapterStack& stack) {
    return target_mode_ratio(stack, cond, mix.centers, cfg.eval, eval_rng, opt.threads);
  };

  CarsRun run;
  run.base_ratio = ratio(base.stack).ratio;
  auto curve_hook = [&](RatioCurve& curve) {
    curve.iterations.push_back(0);
    curve.ratios.push_back(run.base_ratio);
    return [&, c = &curve](const AdapterStack& stack, std::int64_t it) {
      ModeRatio m = ratio(stack);
      c->iterations.push_back(it);
      c->ratios.push_back(m.ratio);
      return json{{"target_mode_ratio", m.ratio}, {"counts", m.counts}};
    };
  };

  TrainConfig sft = seeded(cfg.sft, opt.seed);
  sft.adapter_name = "ref";
  sft.eval_every = cfg.ratio_every;
  Checkpoint sft_ckpt = train_sft(base, mix.positives, sft, {tagged(log, "sft"), curve_hook(run.sft)});

  // The comparative arm's reference is the pretrained model itself: a "ref" adapter with no training.
  TrainConfig blank = sft;
  blank.iterations = 0;
  blank.eval_every = 0;
  Checkpoint ref = train_sft(base, mix.positives, blank, {});
  TrainConfig sfo = seeded(cfg.sfo, opt.seed);
  sfo.eval_every = cfg.ratio_every;
  Checkpoint comp = train_sfo(ref, car_pairs(mix), sfo, {tagged(log, "comparative"), curve_hook(run.comparative)});

  auto add_row = [&](const std::string& label, double r, const RatioCurve* curve) {
    AblationResult row;
    row.label = label;
    row.target_mode_ratio = r;
    if (curve) row.extra = json{{"iterations", curve->iterations}, {"ratios", curve->ratios}};
    run.table.add(std::move(row));
  };
  add_row("pretrained", run.base_ratio, nullptr);
  add_row("sft", ratio(sft_ckpt.stack).ratio, &run.sft);
  add_row("comparative", ratio(comp.stack).ratio, &run.comparative);
  run.metrics = log.text();
  return run;
}

}  // namespace sfolab
