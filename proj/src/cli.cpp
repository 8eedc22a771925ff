#include "sfolab/cli.hpp"

#include "sfolab/config.hpp"
#include "sfolab/evalkit.hpp"
#include "sfolab/io.hpp"
#include "sfolab/negatives.hpp"
#include "sfolab/pipeline.hpp"
#include "sfolab/trainer.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>

namespace sfolab {

int default_threads() {
  if (const char* env = std::getenv("SFO_LAB_THREADS")) {
    char* end = nullptr;
    long v = std::strtol(env, &end, 10);
    if (end && *end == '\0' && v >= 1 && v <= 1024) return static_cast<int>(v);
    std::cerr << "warning: ignoring SFO_LAB_THREADS='" << env << "'\n";
  }
  return 1;
}

namespace {

struct UsageError : Error {
  using Error::Error;
};

// ---- run manifest ----

class Manifest {
 public:
  Manifest(std::string command, std::uint64_t seed, bool has_seed) : command_(std::move(command)) {
    start_ = std::chrono::steady_clock::now();
    j_["command"] = command_;
    j_["artifact_version"] = kArtifactVersion;
    j_["seed"] = has_seed ? json(seed) : json(nullptr);
    j_["inputs"] = json::object();
    j_["outputs"] = json::object();
  }
  void config(const PipelineConfig& c) {
    j_["effective_config"] = to_json(c);
    j_["config_hash"] = sha256_hex(j_["effective_config"].dump());
  }
  void input(const std::string& path) { j_["inputs"][path] = sha256_file(path); }
  void output(const std::string& path) { j_["outputs"][path] = sha256_file(path); }
  json& extra() { return j_; }
  void write(const std::string& path) {
    j_["wall_ms"] = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start_).count();
    write_file_atomic(path, j_.dump(2) + "\n");
  }

 private:
  std::string command_;
  json j_;
  std::chrono::steady_clock::time_point start_;
};

// ---- datasets ----

struct Dataset {
  std::string dir;
  json manifest;
  Preset preset = Preset::subject_world;
  std::uint64_t seed = 0;
  WorldSpec world_spec;
  CarMixtureSpec cars_spec;

  std::string file(const std::string& key) const {
    return join_path(dir, manifest.at("files").at(key).at("path").get<std::string>());
  }
  void track(Manifest& m, const std::string& key) const {
    const std::string p = file(key);
    const std::string want = manifest.at("files").at(key).at("sha256").get<std::string>();
    const std::string got = sha256_file(p);
    if (got != want) throw IoError("dataset file '" + p + "' does not match its manifest hash");
    m.extra()["inputs"][p] = got;
  }
};

Dataset open_dataset(const std::string& dir) {
  Dataset d;
  d.dir = dir;
  const std::string mpath = join_path(dir, "manifest.json");
  d.manifest = read_json_file(mpath);
  try {
    if (d.manifest.at("kind").get<std::string>() != "sfolab-dataset")
      throw IoError("'" + mpath + "' is not a dataset manifest");
    d.preset = preset_from_string(d.manifest.at("preset").get<std::string>());
    d.seed = d.manifest.at("seed").get<std::uint64_t>();
    if (d.preset == Preset::subject_world) d.world_spec = world_spec_from_json(d.manifest.at("world"));
    else d.cars_spec = cars_spec_from_json(d.manifest.at("cars"));
  } catch (const json::exception& e) {
    throw IoError("malformed dataset manifest '" + mpath + "': " + e.what());
  }
  return d;
}

// Preset defaults, then the optional config file, then the dataset's own world.
PipelineConfig effective_config(Preset preset, const std::string& config_path, const Dataset* data) {
  PipelineConfig c = preset_config(preset);
  if (!config_path.empty()) c = pipeline_from_json(read_json_file(config_path), c);
  if (data) {
    c.preset = data->preset;
    c.world = data->world_spec;
    c.cars = data->cars_spec;
  }
  c.validate();
  return c;
}

void ensure_parent(const std::string& path) {
  auto parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) ensure_dir(parent.string());
}

MetricsSink metrics_sink(std::unique_ptr<JsonlWriter>& holder, const std::string& path) {
  if (path.empty()) return {};
  ensure_parent(path);
  holder = std::make_unique<JsonlWriter>(path);
  JsonlWriter* w = holder.get();
  return [w](const json& j) { (*w)(j); };
}

std::string csv_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// ---- subcommands ----

struct Common {
  std::uint64_t seed = 0;
  std::string config;
  int threads = 1;
  std::string out;
};

void add_seed(CLI::App* app, Common& c) {
  app->add_option("--seed", c.seed, "run seed (required; never taken from the clock)")->required();
}

void add_config(CLI::App* app, Common& c) {
  app->add_option("--config", c.config, "JSON config overlaid on the preset (see --config-schema)")
      ->check(CLI::ExistingFile);
}

void add_threads(CLI::App* app, Common& c) {
  app->add_option("--threads", c.threads, "worker threads (default: SFO_LAB_THREADS or 1)")
      ->check(CLI::Range(1, 1024));
}

void cmd_gen_data(const std::string& preset_name, const Common& c) {
  const Preset preset = preset_from_string(preset_name);
  const PipelineConfig cfg = effective_config(preset, c.config, nullptr);
  ensure_dir(c.out);
  Manifest run("gen-data", c.seed, true);
  run.config(cfg);
  json files = json::object();
  auto put = [&](const std::string& key, const std::string& name, const std::string& bytes) {
    const std::string path = join_path(c.out, name);
    write_file_atomic(path, bytes);
    files[key] = {{"path", name}, {"sha256", sha256_hex(bytes)}};
    run.output(path);
  };
  json m{{"kind", "sfolab-dataset"}, {"preset", to_string(preset)}, {"seed", c.seed}};
  if (preset == Preset::subject_world) {
    const World w = make_world(cfg.world, c.seed);
    const WorldData data = gen_world(w);
    m["world"] = to_json(cfg.world);
    m["train_subjects"] = w.train_subjects;
    m["heldout_subjects"] = w.heldout_subjects;
    m["subject_regenerations"] = w.regenerations;
    put("train", "train.bin", encode_triplets(data.train));
    put("heldout", "heldout.bin", encode_triplets(data.heldout));
  } else {
    const CarMixture mix = gen_car_mixture(cfg.cars, c.seed);
    m["cars"] = to_json(cfg.cars);
    json centers = json::array();
    for (Eigen::Index j = 0; j < mix.centers.rows(); ++j) centers.push_back({mix.centers(j, 0), mix.centers(j, 1)});
    m["centers"] = centers;
    put("pretrain", "pretrain.bin", encode_triplets(mix.pretrain));
    put("positives", "positives.bin", encode_triplets(mix.positives));
    put("negatives", "negatives.bin", encode_triplets(mix.negatives));
    put("pairs", "pairs.bin", encode_quadruplets(car_pairs(mix)));
  }
  m["files"] = files;
  const std::string mpath = join_path(c.out, "manifest.json");
  write_file_atomic(mpath, m.dump(2) + "\n");
  run.output(mpath);
  run.write(join_path(c.out, "run_manifest.json"));
}

void cmd_pretrain(const std::string& data_dir, const std::string& metrics, const Common& c) {
  const Dataset data = open_dataset(data_dir);
  const PipelineConfig cfg = effective_config(data.preset, c.config, &data);
  Manifest run("pretrain", c.seed, true);
  run.config(cfg);
  const std::string key = data.preset == Preset::subject_world ? "train" : "pretrain";
  data.track(run, key);
  auto records = load_triplets(data.file(key));
  std::unique_ptr<JsonlWriter> w;
  ensure_parent(c.out);
  Checkpoint ckpt = pretrain_base(records, cfg.model, seeded(cfg.pretrain, c.seed), {metrics_sink(w, metrics), {}});
  ckpt.extra["dataset_seed"] = data.seed;
  save_checkpoint(c.out, ckpt);
  run.output(c.out);
  if (w) run.output(metrics);
  run.write(c.out + ".manifest.json");
}

void cmd_train_sft(const std::string& ckpt_path, const std::string& data_dir, const std::string& adapter,
                   const std::string& metrics, const Common& c) {
  const Dataset data = open_dataset(data_dir);
  const PipelineConfig cfg = effective_config(data.preset, c.config, &data);
  Manifest run("train-sft", c.seed, true);
  run.config(cfg);
  run.input(ckpt_path);
  const std::string key = data.preset == Preset::subject_world ? "train" : "positives";
  data.track(run, key);
  const Checkpoint base = load_checkpoint(ckpt_path);
  TrainConfig tc = seeded(cfg.sft, c.seed);
  if (!adapter.empty()) tc.adapter_name = adapter;
  std::unique_ptr<JsonlWriter> w;
  ensure_parent(c.out);
  Checkpoint out = train_sft(base, load_triplets(data.file(key)), tc, {metrics_sink(w, metrics), {}});
  save_checkpoint(c.out, out);
  run.output(c.out);
  if (w) run.output(metrics);
  run.write(c.out + ".manifest.json");
}

struct SynthFlags {
  std::string strategy, checkpoint, in;
  std::optional<int> steps;
  std::optional<double> guidance, leak_lambda;
  std::optional<int> n_per_triplet;
};

void cmd_synth(const SynthFlags& f, const Common& c) {
  const Dataset data = open_dataset(f.in);
  if (data.preset != Preset::subject_world)
    throw UsageError("synth-negatives works on subject-world datasets; toy-cars pairs ship as pairs.bin");
  PipelineConfig cfg = effective_config(data.preset, c.config, &data);
  cfg.synth.strategy = strategy_from_string(f.strategy);
  if (f.steps) cfg.synth.sampler.steps = *f.steps;
  if (f.guidance) cfg.synth.sampler.guidance_scale = *f.guidance;
  if (f.leak_lambda) cfg.synth.leak_lambda = *f.leak_lambda;
  if (f.n_per_triplet) cfg.synth.n_per_triplet = *f.n_per_triplet;
  cfg.validate();
  Manifest run("synth-negatives", c.seed, true);
  run.config(cfg);
  run.input(f.checkpoint);
  data.track(run, "train");
  const Checkpoint ckpt = load_checkpoint(f.checkpoint);
  if (!ckpt.stack.is_enabled("ref")) throw ValueError("synth-negatives: checkpoint has no enabled \"ref\" adapter");
  const World world = make_world(data.world_spec, data.seed);
  const StackView ref(ckpt.stack, {"ref"});
  auto quads = synthesize(ref, load_triplets(data.file("train")), world, cfg.synth, synth_root(c.seed), c.threads);
  if (quads.empty()) throw ValueError("synth-negatives: the similarity filter removed every pair");
  ensure_parent(c.out);
  save_quadruplets(c.out, quads);
  const std::string gpath = c.out + ".gapstats.json";
  json g = gap_json(pair_gap_stats(quads, world));
  g["strategy"] = to_string(cfg.synth.strategy);
  write_file_atomic(gpath, g.dump(2) + "\n");
  run.output(c.out);
  run.output(gpath);
  run.write(c.out + ".manifest.json");
}

void cmd_train_sfo(const std::string& ckpt_path, const std::string& quads_path, const std::string& metrics,
                   const std::string& preset_name, const Common& c) {
  const PipelineConfig cfg = effective_config(preset_from_string(preset_name), c.config, nullptr);
  Manifest run("train-sfo", c.seed, true);
  run.config(cfg);
  run.input(ckpt_path);
  run.input(quads_path);
  const Checkpoint sft = load_checkpoint(ckpt_path);
  std::unique_ptr<JsonlWriter> w;
  ensure_parent(c.out);
  Checkpoint out = train_sfo(sft, load_quadruplets(quads_path), seeded(cfg.sfo, c.seed), {metrics_sink(w, metrics), {}});
  save_checkpoint(c.out, out);
  run.output(c.out);
  if (w) run.output(metrics);
  run.write(c.out + ".manifest.json");
}

Matrix centers_of(const Dataset& d) {
  const auto& cs = d.manifest.at("centers");
  Matrix m(static_cast<Eigen::Index>(cs.size()), 2);
  for (std::size_t j = 0; j < cs.size(); ++j) {
    m(j, 0) = cs[j].at(0).get<double>();
    m(j, 1) = cs[j].at(1).get<double>();
  }
  return m;
}

struct EvalFlags {
  std::string checkpoint, data, label;
  std::optional<int> n;
  std::optional<int> steps;
  std::optional<double> guidance;
};

PipelineConfig eval_config(const Dataset& data, const EvalFlags& f, const Common& c) {
  PipelineConfig cfg = effective_config(data.preset, c.config, &data);
  if (f.n) cfg.eval.n_samples = *f.n;
  if (f.steps) cfg.eval.sampler.steps = *f.steps;
  if (f.guidance) cfg.eval.sampler.guidance_scale = *f.guidance;
  cfg.validate();
  return cfg;
}

void cmd_sample(const EvalFlags& f, const Common& c) {
  const Dataset data = open_dataset(f.data);
  const PipelineConfig cfg = eval_config(data, f, c);
  Manifest run("sample", c.seed, true);
  run.config(cfg);
  run.input(f.checkpoint);
  const Checkpoint ckpt = load_checkpoint(f.checkpoint);
  const StackView view(ckpt.stack);
  std::string csv;
  if (data.preset == Preset::subject_world) {
    data.track(run, "heldout");
    const World world = make_world(data.world_spec, data.seed);
    auto conds = sweep_conditions(load_triplets(data.file("heldout")), world, cfg.eval);
    SweepSamples s = generate_sweep(velocity_field(view), conds, cfg.eval, eval_root(c.seed), c.threads);
    csv = "subject,context";
    for (Eigen::Index j = 0; j < s.x.cols(); ++j) csv += ",x" + std::to_string(j);
    csv += ",fidelity,alignment\n";
    for (Eigen::Index i = 0; i < s.x.rows(); ++i) {
      const Vector x = s.x.row(i).transpose();
      csv += std::to_string(s.subject[i]) + "," + std::to_string(s.context[i]);
      for (Eigen::Index j = 0; j < x.size(); ++j) csv += "," + csv_number(x[j]);
      csv += "," + csv_number(fidelity_oracle(x, s.subject[i], world).value) + "," +
             csv_number(alignment_oracle(x, s.subject[i], s.context[i], world).value) + "\n";
    }
  } else {
    const Matrix centers = centers_of(data);
    const ConditionPair cond = car_condition();
    const Eigen::Index n = cfg.eval.n_samples;
    Matrix x1(n, 2);
    const RngStream root = eval_root(c.seed);
    for (Eigen::Index j = 0; j < n; ++j) {
      RngStream r = root.split(static_cast<std::uint64_t>(j));
      x1(j, 0) = r.normal();
      x1(j, 1) = r.normal();
    }
    Matrix x = euler_sample_rows(velocity_field(view), x1, encode_condition(cond).transpose().replicate(n, 1),
                                 null_condition(0, 1), cfg.eval.sampler, c.threads);
    csv = "x0,x1,mode\n";
    for (Eigen::Index i = 0; i < n; ++i)
      csv += csv_number(x(i, 0)) + "," + csv_number(x(i, 1)) + "," +
             std::to_string(mode_classifier(x.row(i).transpose(), centers)) + "\n";
  }
  ensure_parent(c.out);
  write_file_atomic(c.out, csv);
  run.output(c.out);
  run.write(c.out + ".manifest.json");
}

void cmd_eval(const EvalFlags& f, const Common& c) {
  const Dataset data = open_dataset(f.data);
  const PipelineConfig cfg = eval_config(data, f, c);
  Manifest run("eval", c.seed, true);
  run.config(cfg);
  run.input(f.checkpoint);
  const Checkpoint ckpt = load_checkpoint(f.checkpoint);
  json out{{"label", f.label.empty() ? std::filesystem::path(f.checkpoint).stem().string() : f.label},
           {"checkpoint_hash", checkpoint_hash(ckpt)}};
  if (data.preset == Preset::subject_world) {
    data.track(run, "heldout");
    const World world = make_world(data.world_spec, data.seed);
    out["stats"] = to_json(
        subject_sweep(ckpt.stack, world, load_triplets(data.file("heldout")), cfg.eval, eval_root(c.seed), c.threads));
  } else {
    ModeRatio m = target_mode_ratio(ckpt.stack, car_condition(), centers_of(data), cfg.eval, eval_root(c.seed), c.threads);
    out["target_mode_ratio"] = m.ratio;
    out["counts"] = m.counts;
    out["n"] = m.n;
  }
  ensure_parent(c.out);
  write_file_atomic(c.out, out.dump(2) + "\n");
  run.output(c.out);
  run.write(c.out + ".manifest.json");
}

void cmd_report(const std::vector<std::string>& inputs, const std::string& out) {
  Manifest run("report", 0, false);
  AblationTable table;
  for (const auto& p : inputs) {
    run.input(p);
    const json j = read_json_file(p);
    AblationResult r;
    try {
      r.label = j.at("label").get<std::string>();
      if (j.contains("stats")) {
        const auto& s = j.at("stats");
        r.stats.fidelity_mean = s.at("fidelity_mean").get<double>();
        r.stats.fidelity_std = s.at("fidelity_std").get<double>();
        r.stats.alignment_mean = s.at("alignment_mean").get<double>();
        r.stats.alignment_std = s.at("alignment_std").get<double>();
        r.stats.n = s.at("n").get<std::int64_t>();
      }
      if (j.contains("target_mode_ratio")) r.target_mode_ratio = j.at("target_mode_ratio").get<double>();
    } catch (const json::exception& e) {
      throw IoError("'" + p + "' is not an eval summary: " + e.what());
    }
    table.add(std::move(r));
  }
  ensure_parent(out);
  write_file_atomic(out, table.to_csv());
  write_file_atomic(out + ".json", table.to_json().dump(2) + "\n");
  run.output(out);
  run.output(out + ".json");
  run.write(out + ".manifest.json");
}

void cmd_pipeline(const std::string& preset_name, const Common& c) {
  const Preset preset = preset_from_string(preset_name);
  const PipelineConfig cfg = effective_config(preset, c.config, nullptr);
  ensure_dir(c.out);
  Manifest run("pipeline", c.seed, true);
  run.config(cfg);
  run.extra()["threads"] = c.threads;
  const RunOptions opt{c.seed, c.threads};
  AblationTable table;
  std::string metrics;
  json summary;
  if (preset == Preset::subject_world) {
    SubjectRun r = run_subject(cfg, opt);
    table = std::move(r.table);
    metrics = std::move(r.metrics);
    for (const auto& [k, g] : r.gaps) summary["pair_gap"][k] = gap_json(g);
  } else {
    CarsRun r = run_toy_cars(cfg, opt);
    table = std::move(r.table);
    metrics = std::move(r.metrics);
    summary["base_ratio"] = r.base_ratio;
  }
  summary["table"] = table.to_json();
  const std::string mpath = join_path(c.out, "metrics.jsonl"), cpath = join_path(c.out, "report.csv"),
                    jpath = join_path(c.out, "report.json");
  write_file_atomic(mpath, metrics);
  write_file_atomic(cpath, table.to_csv());
  write_file_atomic(jpath, summary.dump(2) + "\n");
  for (const auto& p : {mpath, cpath, jpath}) run.output(p);
  run.write(join_path(c.out, "run_manifest.json"));
}

}  // namespace

int dispatch(const std::vector<std::string>& args) {
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  return dispatch(static_cast<int>(argv.size()), argv.data());
}

int dispatch(int argc, const char* const* argv) {
  CLI::App app{"sfolab: flow-matching fine-tuning with synthesized negatives on desk-scale worlds"};
  app.require_subcommand(0, 1);
  bool schema = false;
  app.add_flag("--config-schema", schema, "print every config key with its type, default and description");

  Common c;
  c.threads = default_threads();
  std::string preset = "subject-world", data, checkpoint, metrics, adapter, quads;
  std::vector<std::string> inputs;
  SynthFlags sf;
  EvalFlags ef;

  auto* gen = app.add_subcommand("gen-data", "generate a dataset directory");
  gen->add_option("--preset", preset, "toy-cars or subject-world")->required();
  add_seed(gen, c);
  add_config(gen, c);
  gen->add_option("--out", c.out, "output directory")->required();

  auto* pre = app.add_subcommand("pretrain", "train the base model on the broad distribution");
  pre->add_option("--data", data, "dataset directory")->required()->check(CLI::ExistingDirectory);
  add_seed(pre, c);
  add_config(pre, c);
  pre->add_option("--out", c.out, "checkpoint path")->required();
  pre->add_option("--metrics", metrics, "JSONL metrics path");

  auto* sft = app.add_subcommand("train-sft", "attach and train a supervised adapter");
  sft->add_option("--checkpoint", checkpoint, "base checkpoint")->required()->check(CLI::ExistingFile);
  sft->add_option("--data", data, "dataset directory")->required()->check(CLI::ExistingDirectory);
  add_seed(sft, c);
  add_config(sft, c);
  sft->add_option("--out", c.out, "checkpoint path")->required();
  sft->add_option("--metrics", metrics, "JSONL metrics path");
  sft->add_option("--adapter-name", adapter, "adapter to attach (default ref)");

  auto* syn = app.add_subcommand("synth-negatives", "synthesize negative targets for every training triplet");
  syn->add_option("--strategy", sf.strategy, "cdns|selfplay|dpo-sim|cdns-img-only|cdns-text-only")->required();
  syn->add_option("--checkpoint", sf.checkpoint, "SFT checkpoint")->required()->check(CLI::ExistingFile);
  syn->add_option("--in", sf.in, "dataset directory")->required()->check(CLI::ExistingDirectory);
  syn->add_option("--out", c.out, "quadruplet file")->required();
  add_seed(syn, c);
  add_config(syn, c);
  add_threads(syn, c);
  syn->add_option("--steps", sf.steps, "sampler steps")->check(CLI::PositiveNumber);
  syn->add_option("--guidance", sf.guidance, "guidance scale")->check(CLI::NonNegativeNumber);
  syn->add_option("--leak-lambda", sf.leak_lambda, "context leakage into the scene-derived cue")
      ->check(CLI::NonNegativeNumber);
  syn->add_option("--n-per-triplet", sf.n_per_triplet, "negatives per triplet")->check(CLI::PositiveNumber);

  auto* sfo = app.add_subcommand("train-sfo", "fine-tune with the pairwise objective on a quadruplet file");
  sfo->add_option("--checkpoint", checkpoint, "SFT checkpoint")->required()->check(CLI::ExistingFile);
  sfo->add_option("--quads", quads, "quadruplet file")->required()->check(CLI::ExistingFile);
  sfo->add_option("--preset", preset, "preset whose sfo defaults apply (default subject-world)");
  add_seed(sfo, c);
  add_config(sfo, c);
  sfo->add_option("--out", c.out, "checkpoint path")->required();
  sfo->add_option("--metrics", metrics, "JSONL metrics path");

  auto add_eval_flags = [&](CLI::App* a, const char* out_doc) {
    a->add_option("--checkpoint", ef.checkpoint, "checkpoint")->required()->check(CLI::ExistingFile);
    a->add_option("--data", ef.data, "dataset directory")->required()->check(CLI::ExistingDirectory);
    add_seed(a, c);
    add_config(a, c);
    add_threads(a, c);
    a->add_option("--out", c.out, out_doc)->required();
    a->add_option("--n", ef.n, "samples per condition")->check(CLI::PositiveNumber);
    a->add_option("--steps", ef.steps, "sampler steps")->check(CLI::PositiveNumber);
    a->add_option("--guidance", ef.guidance, "guidance scale")->check(CLI::NonNegativeNumber);
  };
  auto* smp = app.add_subcommand("sample", "dump generated samples with their oracle scores");
  add_eval_flags(smp, "CSV path");
  auto* ev = app.add_subcommand("eval", "held-out fidelity/alignment sweep or target-mode ratio");
  add_eval_flags(ev, "JSON summary path");
  ev->add_option("--label", ef.label, "row label for report (default: checkpoint file stem)");

  auto* rep = app.add_subcommand("report", "collect eval summaries into a versioned CSV table");
  rep->add_option("--from", inputs, "eval summary JSON files")->required()->check(CLI::ExistingFile);
  rep->add_option("--out", c.out, "CSV path (a .json twin is written next to it)")->required();

  auto* pipe = app.add_subcommand("pipeline", "run a preset end to end and write metrics and report");
  pipe->add_option("--preset", preset, "toy-cars or subject-world")->required();
  add_seed(pipe, c);
  add_config(pipe, c);
  add_threads(pipe, c);
  pipe->add_option("--out", c.out, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e) == 0 ? 0 : 1;
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e) == 0 ? 0 : 1;
  } catch (const CLI::ParseError& e) {
    app.exit(e, std::cerr, std::cerr);
    return 1;
  }
  if (schema) {
    std::cout << config_schema().dump(2) << "\n";
    return 0;
  }
  if (app.get_subcommands().empty()) {
    std::cerr << app.help();
    return 1;
  }
  try {
    if (*gen) cmd_gen_data(preset, c);
    else if (*pre) cmd_pretrain(data, metrics, c);
    else if (*sft) cmd_train_sft(checkpoint, data, adapter, metrics, c);
    else if (*syn) cmd_synth(sf, c);
    else if (*sfo) cmd_train_sfo(checkpoint, quads, metrics, preset, c);
    else if (*smp) cmd_sample(ef, c);
    else if (*ev) cmd_eval(ef, c);
    else if (*rep) cmd_report(inputs, c.out);
    else if (*pipe) cmd_pipeline(preset, c);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 1;
  } catch (const ConfigError& e) {
    // Bad presets and config files are caller input, so they count as usage errors.
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}

}  // namespace sfolab
