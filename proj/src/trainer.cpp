#include "sfolab/trainer.hpp"

#include "sfolab/io.hpp"

#include <chrono>
#include <fstream>

namespace sfolab {

// ---- checkpoints ----

namespace {

constexpr std::string_view kCkptMagic = "SFOCKPT1";

Stage stage_from_string(const std::string& s) {
  for (auto st : {Stage::pretrain, Stage::sft, Stage::sfo})
    if (to_string(st) == s) return st;
  throw IoError("checkpoint: unknown stage '" + s + "'");
}

json meta_of(const Checkpoint& c) {
  json spec = to_json(c.stack.spec);
  spec["input_dim"] = c.stack.spec.input_dim;
  spec["output_dim"] = c.stack.spec.output_dim;
  json adapters = json::array();
  for (const auto& a : c.stack.adapters)
    adapters.push_back({{"name", a.name}, {"rank", a.rank}, {"scale", a.scale}, {"scale_convention", "1/rank"}});
  return json{{"format", "sfolab-checkpoint"},
              {"version", kCheckpointVersion},
              {"stage", to_string(c.stage)},
              {"spec", spec},
              {"adapters", adapters},
              {"enabled", c.stack.enabled},
              {"config", to_json(c.config)},
              {"seed", c.config.seed},
              {"iteration", c.iteration},
              {"rng", {{"seed", c.rng.seed()}, {"stream", c.rng.stream_id()}, {"counter", c.rng.counter()}}},
              {"extra", c.extra}};
}

}  // namespace

std::string encode_checkpoint(const Checkpoint& c) {
  ByteWriter w;
  w.bytes(kCkptMagic);
  w.u32(kCheckpointVersion);
  const std::string meta = meta_of(c).dump();
  w.u64(meta.size());
  w.bytes(meta);
  ByteWriter blob;
  const std::string base = serialize_params(c.stack.base);
  blob.u64(base.size());
  blob.bytes(base);
  blob.u64(c.stack.adapters.size());
  for (const auto& a : c.stack.adapters)
    for (std::size_t i = 0; i < a.A.size(); ++i) {
      blob.mat(a.A[i]);
      blob.mat(a.B[i]);
    }
  w.u64(blob.out.size());
  w.bytes(blob.out);
  w.bytes(sha256_hex(w.out));
  return std::move(w.out);
}

Checkpoint decode_checkpoint(std::string_view bytes) {
  if (bytes.size() < kCkptMagic.size() + 64 || bytes.substr(0, kCkptMagic.size()) != kCkptMagic)
    throw IoError("checkpoint: bad magic");
  const std::string_view body = bytes.substr(0, bytes.size() - 64);
  if (sha256_hex(body) != bytes.substr(bytes.size() - 64))
    throw IoError("checkpoint: content hash mismatch (file is corrupted)");
  ByteReader r{body, kCkptMagic.size(), "checkpoint"};
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion)
    throw IoError("checkpoint: version " + std::to_string(version) + " is not supported (expected " +
                  std::to_string(kCheckpointVersion) + ")");
  const std::string_view meta_text = r.bytes(r.u64());
  json meta;
  try {
    meta = json::parse(meta_text);
  } catch (const json::exception& e) {
    throw IoError(std::string("checkpoint: unreadable metadata: ") + e.what());
  }
  Checkpoint c;
  try {
    c.stage = stage_from_string(meta.at("stage").get<std::string>());
    MlpSpec spec = mlp_spec_from_json(json{{"hidden_widths", meta.at("spec").at("hidden_widths")},
                                           {"activation", meta.at("spec").at("activation")}});
    spec.input_dim = meta.at("spec").at("input_dim").get<int>();
    spec.output_dim = meta.at("spec").at("output_dim").get<int>();
    c.config = train_config_from_json(meta.at("config"), default_train_config(c.stage));
    c.config.stage = c.stage;
    c.config.seed = meta.at("seed").get<std::uint64_t>();
    c.iteration = meta.at("iteration").get<std::int64_t>();
    const auto& rng = meta.at("rng");
    c.rng = RngStream(rng.at("seed").get<std::uint64_t>(), rng.at("stream").get<std::uint64_t>(),
                      rng.at("counter").get<std::uint64_t>());
    c.extra = meta.at("extra");

    ByteReader b{r.bytes(r.u64()), 0, "checkpoint blob"};
    ParamSet base = deserialize_params(b.bytes(b.u64()));
    c.stack = make_stack(spec, std::move(base));
    const auto& ads = meta.at("adapters");
    if (b.u64() != ads.size()) throw IoError("checkpoint: adapter count differs between metadata and blob");
    for (const auto& am : ads) {
      LowRankAdapter a;
      a.name = am.at("name").get<std::string>();
      a.rank = am.at("rank").get<int>();
      a.scale = am.at("scale").get<double>();
      for (int i = 0; i < spec.num_layers(); ++i) {
        a.A.push_back(b.mat());
        a.B.push_back(b.mat());
        if (a.A.back().rows() != a.rank || a.A.back().cols() != spec.layer_in(i) ||
            a.B.back().rows() != spec.layer_out(i) || a.B.back().cols() != a.rank)
          throw IoError("checkpoint: adapter '" + a.name + "' layer " + std::to_string(i) + " has the wrong shape");
      }
      c.stack.adapters.push_back(std::move(a));
    }
    if (!b.done()) throw IoError("checkpoint: trailing bytes in blob");
    c.stack = set_enabled(c.stack, meta.at("enabled").get<std::vector<std::string>>());
  } catch (const json::exception& e) {
    throw IoError(std::string("checkpoint: malformed metadata: ") + e.what());
  } catch (const ConfigError& e) {
    throw IoError(std::string("checkpoint: malformed config echo: ") + e.what());
  }
  if (!r.done()) throw IoError("checkpoint: trailing bytes");
  return c;
}

void save_checkpoint(const std::string& path, const Checkpoint& c) { write_file_atomic(path, encode_checkpoint(c)); }

Checkpoint load_checkpoint(const std::string& path) { return decode_checkpoint(read_file(path)); }

std::string checkpoint_hash(const Checkpoint& c) {
  std::string bytes = encode_checkpoint(c);
  return bytes.substr(bytes.size() - 64);
}

// ---- metrics ----

JsonlWriter::JsonlWriter(const std::string& path) : path_(path) {
  if (path_.empty()) return;
  std::ofstream out(path_, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write metrics '" + path_ + "'");
}

void JsonlWriter::operator()(const json& j) {
  std::string line = j.dump() + "\n";
  text_ += line;
  if (path_.empty()) return;
  std::ofstream out(path_, std::ios::binary | std::ios::app);
  out << line;
  if (!out) throw IoError("cannot append to metrics '" + path_ + "'");
}

void JsonlWriter::flush() const {}

// ---- shared plumbing ----

MlpSpec model_spec(const MlpSpec& arch, int data_dim, int img_dim, int text_dim) {
  MlpSpec s = arch;
  s.input_dim = data_dim + 1 + condition_dim(img_dim, text_dim);
  s.output_dim = data_dim;
  s.validate();
  return s;
}

ParamSet init_params(const MlpSpec& spec, RngStream& rng) {
  ParamSet p = ParamSet::zeros(spec);
  for (int i = 0; i < spec.num_layers(); ++i) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(spec.layer_in(i)));
    auto& l = p.layers[i];
    for (Eigen::Index j = 0; j < l.weight.size(); ++j) l.weight.data()[j] = bound * (2 * rng.uniform() - 1);
    for (Eigen::Index j = 0; j < l.bias.size(); ++j) l.bias[j] = bound * (2 * rng.uniform() - 1);
  }
  return p;
}

namespace {

struct Dims {
  int data = 0, img = 0, text = 0;
};

Dims dims_of(const Triplet& t) {
  return {static_cast<int>(t.x_tgt.size()), static_cast<int>(t.cond.c_img.size()),
          static_cast<int>(t.cond.c_text.size())};
}

template <class Rec>
Dims check_records(const std::vector<Rec>& data, const char* what, const Triplet& (*get)(const Rec&)) {
  if (data.empty()) throw ValueError(std::string(what) + ": empty training set");
  const Dims d = dims_of(get(data[0]));
  for (std::size_t i = 0; i < data.size(); ++i) {
    const Dims e = dims_of(get(data[i]));
    if (e.data != d.data || e.img != d.img || e.text != d.text)
      throw ShapeError(std::string(what) + ": record " + std::to_string(i) + " has different dimensions");
  }
  return d;
}

const Triplet& self(const Triplet& t) { return t; }
const Triplet& pos_of(const Quadruplet& q) { return q.pos; }

struct SupervisedSet {
  Matrix x;
  Matrix cond;
  Vector null_cond;
};

SupervisedSet supervised_set(const std::vector<Triplet>& data, bool text_only) {
  const Dims d = dims_of(data[0]);
  SupervisedSet s;
  s.x.resize(static_cast<Eigen::Index>(data.size()), d.data);
  s.cond.resize(s.x.rows(), condition_dim(d.img, d.text));
  for (std::size_t i = 0; i < data.size(); ++i) {
    ConditionPair c = data[i].cond;
    if (text_only) c.c_img.setZero();
    s.x.row(i) = data[i].x_tgt.transpose();
    s.cond.row(i) = encode_condition(c).transpose();
  }
  s.null_cond = null_condition(d.img, d.text);
  return s;
}

SftBatch draw_sft_batch(const SupervisedSet& set, const TrainConfig& cfg, RngStream rng) {
  const int n = cfg.batch_size;
  const Eigen::Index d = set.x.cols();
  SftBatch b;
  b.x.resize(n, d);
  b.cond.resize(n, set.cond.cols());
  RngStream pick = rng.split(tag_of("index"));
  RngStream drop = rng.split(tag_of("dropout"));
  for (int i = 0; i < n; ++i) {
    const auto r = static_cast<Eigen::Index>(pick.below(static_cast<std::uint64_t>(set.x.rows())));
    b.x.row(i) = set.x.row(r);
    const bool null = cfg.cond_dropout_p > 0 && drop.uniform() < cfg.cond_dropout_p;
    if (null) b.cond.row(i) = set.null_cond.transpose();
    else b.cond.row(i) = set.cond.row(r);
  }
  RngStream ts = rng.split(tag_of("t"));
  b.t = sample_t_batch(cfg.timestep, ts, n);
  RngStream es = rng.split(tag_of("eps"));
  b.eps = normal_matrix(es, n, d);
  return b;
}

double elapsed_ms(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
}

Checkpoint snapshot(const AdapterStack& stack, const TrainConfig& cfg, std::int64_t iteration, const RngStream& rng) {
  Checkpoint c;
  c.stack = stack;
  c.stage = cfg.stage;
  c.config = cfg;
  c.iteration = iteration;
  c.rng = RngStream(rng.seed(), rng.stream_id(), static_cast<std::uint64_t>(iteration));
  return c;
}

// One optimizer step on the masked parameters; divergence keeps the pre-step state.
void apply_step(AdapterStack& stack, const GradMask& mask, Vector& flat, const Vector& grads, AdamState& opt,
                const TrainConfig& cfg, double loss, std::int64_t it, const RngStream& rng) {
  if (!std::isfinite(loss))
    throw DivergenceError(to_string(cfg.stage) + ": loss became non-finite at iteration " + std::to_string(it),
                          snapshot(stack, cfg, it, rng), it);
  try {
    adam_step<double>(flat, grads, opt, cfg.optimizer);
  } catch (const ValueError& e) {
    throw DivergenceError(to_string(cfg.stage) + ": " + e.what() + " at iteration " + std::to_string(it),
                          snapshot(stack, cfg, it, rng), it);
  }
  scatter_trainable(stack, mask, flat);
}

void emit(const TrainHooks& hooks, const TrainConfig& cfg, json line, const AdapterStack& stack, std::int64_t it,
          std::chrono::steady_clock::time_point start) {
  if (cfg.eval_every > 0 && hooks.eval && (it + 1) % cfg.eval_every == 0) line["eval"] = hooks.eval(stack, it + 1);
  if (cfg.metrics_wall_time) line["wall_ms"] = elapsed_ms(start);
  if (hooks.metrics) hooks.metrics(line);
}

Checkpoint run_supervised(AdapterStack stack, const std::vector<std::string>& trainable, bool include_base,
                          const std::vector<Triplet>& data, const TrainConfig& cfg, const TrainHooks& hooks) {
  const SupervisedSet set = supervised_set(data, cfg.stage == Stage::pretrain && cfg.text_only);
  const GradMask mask = grad_mask(stack, trainable, include_base);
  Vector flat = gather_trainable(stack, mask);
  AdamState opt;
  const RngStream root(cfg.seed, tag_of(to_string(cfg.stage)));
  const auto start = std::chrono::steady_clock::now();
  for (std::int64_t it = 0; it < cfg.iterations; ++it) {
    SftBatch batch = draw_sft_batch(set, cfg, root.split(static_cast<std::uint64_t>(it)));
    StackView view(stack);
    SftLossOut out = sft_loss(view, batch, &mask);
    apply_step(stack, mask, flat, out.grads, opt, cfg, out.value, it, root);
    emit(hooks, cfg, json{{"stage", to_string(cfg.stage)}, {"iteration", it}, {"loss", out.value}}, stack, it, start);
  }
  return snapshot(stack, cfg, cfg.iterations, root);
}

}  // namespace

Checkpoint pretrain_base(const std::vector<Triplet>& data, const MlpSpec& arch, const TrainConfig& config,
                         const TrainHooks& hooks) {
  if (config.stage != Stage::pretrain) throw ValueError("pretrain_base: config stage must be pretrain");
  config.validate();
  const Dims d = check_records(data, "pretrain", &self);
  const MlpSpec spec = model_spec(arch, d.data, d.img, d.text);
  RngStream init(config.seed, tag_of("init"));
  AdapterStack stack = make_stack(spec, init_params(spec, init));
  return run_supervised(std::move(stack), {}, true, data, config, hooks);
}

Checkpoint train_sft(const Checkpoint& base, const std::vector<Triplet>& data, const TrainConfig& config,
                     const TrainHooks& hooks) {
  if (config.stage != Stage::sft) throw ValueError("train_sft: config stage must be sft");
  config.validate();
  const Dims d = check_records(data, "sft", &self);
  if (base.stack.spec.output_dim != d.data || base.stack.spec.input_dim != d.data + 1 + condition_dim(d.img, d.text))
    throw ShapeError("train_sft: dataset dimensions do not match the checkpoint's model");
  const std::string name = config.adapter_name.empty() ? "ref" : config.adapter_name;
  RngStream ar(config.seed, tag_of("attach:" + name));
  AdapterStack stack = attach(base.stack, name, config.adapter_rank, ar);
  std::vector<std::string> enabled = base.stack.enabled;
  enabled.push_back(name);
  stack = set_enabled(stack, enabled);
  Checkpoint out = run_supervised(std::move(stack), {name}, false, data, config, hooks);
  out.extra = base.extra;
  return out;
}

Checkpoint train_sfo(const Checkpoint& sft, const std::vector<Quadruplet>& data, const TrainConfig& config,
                     const TrainHooks& hooks) {
  if (config.stage != Stage::sfo) throw ValueError("train_sfo: config stage must be sfo");
  config.validate();
  const Dims d = check_records(data, "sfo", &pos_of);
  if (sft.stack.spec.output_dim != d.data || sft.stack.spec.input_dim != d.data + 1 + condition_dim(d.img, d.text))
    throw ShapeError("train_sfo: quadruplet dimensions do not match the checkpoint's model");
  if (!sft.stack.find("ref") || !sft.stack.is_enabled("ref"))
    throw ValueError("train_sfo: the checkpoint has no enabled \"ref\" adapter");
  if (!config.allow_mixed_provenance)
    for (std::size_t i = 1; i < data.size(); ++i)
      if (data[i].provenance != data[0].provenance)
        throw ValueError("train_sfo: record " + std::to_string(i) + " has provenance " +
                         to_string(data[i].provenance) + " but record 0 has " + to_string(data[0].provenance) +
                         " (set allow_mixed_provenance to accept mixed files)");

  // The reference is always a frozen copy of the incoming stack.
  const AdapterStack ref_stack = sft.stack;
  const StackView ref(ref_stack, ref_stack.enabled);
  AdapterStack stack = sft.stack;
  std::string trained = "ref";
  if (!config.direct) {
    trained = "sfo";
    RngStream ar(config.seed, tag_of("attach:sfo"));
    stack = attach(stack, trained, config.adapter_rank, ar);
    std::vector<std::string> enabled = stack.enabled;
    enabled.push_back(trained);
    stack = set_enabled(stack, enabled);
  }
  const GradMask mask = grad_mask(stack, {trained});
  Vector flat = gather_trainable(stack, mask);
  AdamState opt;

  const Eigen::Index n = static_cast<Eigen::Index>(data.size());
  Matrix x_pos(n, d.data), x_neg(n, d.data), cond(n, condition_dim(d.img, d.text));
  for (Eigen::Index i = 0; i < n; ++i) {
    x_pos.row(i) = data[i].pos.x_tgt.transpose();
    x_neg.row(i) = data[i].x_neg.transpose();
    cond.row(i) = encode_condition(data[i].pos.cond).transpose();
  }

  const RngStream root(config.seed, tag_of("sfo"));
  const auto start = std::chrono::steady_clock::now();
  const int bs = config.batch_size;
  for (std::int64_t it = 0; it < config.iterations; ++it) {
    RngStream rng = root.split(static_cast<std::uint64_t>(it));
    RngStream pick = rng.split(tag_of("index"));
    QuadBatch q;
    q.x_pos.resize(bs, d.data);
    q.x_neg.resize(bs, d.data);
    q.cond.resize(bs, cond.cols());
    for (int b = 0; b < bs; ++b) {
      const auto r = static_cast<Eigen::Index>(pick.below(static_cast<std::uint64_t>(n)));
      q.x_pos.row(b) = x_pos.row(r);
      q.x_neg.row(b) = x_neg.row(r);
      q.cond.row(b) = cond.row(r);
    }
    RngStream ts = rng.split(tag_of("t"));
    q.t = sample_t_batch(config.timestep, ts, bs);
    RngStream es = rng.split(tag_of("eps"));
    q.eps = normal_matrix(es, bs, d.data);

    const StackView policy(stack);
    LossOut out = sfo_loss(policy, ref, q, config.beta, &mask);
    apply_step(stack, mask, flat, out.grads, opt, config, out.value, it, root);
    emit(hooks, config,
         json{{"stage", "sfo"},
              {"iteration", it},
              {"loss", out.value},
              {"delta_policy", out.mean_delta_policy()},
              {"delta_ref", out.mean_delta_ref()},
              {"inner", out.mean_inner()},
              {"implicit_accuracy", out.implicit_accuracy()}},
         stack, it, start);
  }
  Checkpoint result = snapshot(stack, config, config.iterations, root);
  result.extra = sft.extra;
  result.extra["sfo_provenance"] = to_string(data[0].provenance);
  return result;
}

}  // namespace sfolab
