#include "sfolab/config.hpp"

#include <fstream>
#include <functional>
#include <sstream>

namespace sfolab {

std::string to_string(Stage s) {
  switch (s) {
    case Stage::pretrain: return "pretrain";
    case Stage::sft: return "sft";
    case Stage::sfo: return "sfo";
  }
  return "?";
}

std::string to_string(Preset p) { return p == Preset::toy_cars ? "toy-cars" : "subject-world"; }

Preset preset_from_string(const std::string& s) {
  if (s == "toy-cars") return Preset::toy_cars;
  if (s == "subject-world") return Preset::subject_world;
  throw ConfigError("unknown preset '" + s + "' (expected toy-cars or subject-world)");
}

TrainConfig default_train_config(Stage stage) {
  TrainConfig c;
  c.stage = stage;
  switch (stage) {
    case Stage::pretrain:
      c.iterations = 3000;
      c.batch_size = 128;
      c.adapter_rank = 0;
      c.text_only = true;
      break;
    case Stage::sft:
      c.iterations = 2000;
      c.batch_size = 64;
      c.adapter_rank = 4;
      c.adapter_name = "ref";
      break;
    case Stage::sfo:
      c.iterations = 300;
      c.batch_size = 4;
      c.adapter_rank = 16;
      c.cond_dropout_p = 0.0;
      break;
  }
  return c;
}

void TrainConfig::validate() const {
  if (stage == Stage::sfo && !(beta > 0)) throw ConfigError("beta: must be > 0");
  if (iterations < 0) throw ConfigError("iterations: must be >= 0");
  if (batch_size < 1) throw ConfigError("batch_size: must be >= 1");
  try {
    timestep.validate();
  } catch (const ValueError& e) {
    throw ConfigError(e.what());
  }
  if (!(optimizer.lr > 0)) throw ConfigError("optimizer.lr: must be > 0");
  if (!(optimizer.beta1 >= 0 && optimizer.beta1 < 1)) throw ConfigError("optimizer.beta1: must be in [0, 1)");
  if (!(optimizer.beta2 >= 0 && optimizer.beta2 < 1)) throw ConfigError("optimizer.beta2: must be in [0, 1)");
  if (!(optimizer.eps > 0)) throw ConfigError("optimizer.eps: must be > 0");
  if (stage != Stage::pretrain && adapter_rank < 1) throw ConfigError("adapter_rank: must be >= 1");
  if (!(cond_dropout_p >= 0 && cond_dropout_p < 1)) throw ConfigError("cond_dropout_p: must be in [0, 1)");
  if (eval_every < 0) throw ConfigError("eval_every: must be >= 0");
}

void EvalSpec::validate() const {
  if (n_samples < 1) throw ConfigError("n_samples: must be >= 1");
  try {
    sampler.validate();
  } catch (const ValueError& e) {
    throw ConfigError(e.what());
  }
}

void PipelineConfig::validate() const {
  try {
    world.validate();
    cars.validate();
    model.validate();
    synth.validate();
  } catch (const ValueError& e) {
    throw ConfigError(e.what());
  }
  pretrain.validate();
  sft.validate();
  sfo.validate();
  eval.validate();
  if (ratio_every < 1) throw ConfigError("ratio_every: must be >= 1");
  std::vector<std::string> seen;
  for (const auto& r : ablation) {
    if (r.label.empty()) throw ConfigError("ablation: row label must be non-empty");
    for (const auto& s : seen)
      if (s == r.label) throw ConfigError("ablation: duplicate row label '" + r.label + "'");
    seen.push_back(r.label);
    if (r.kind != "sfo" && r.kind != "sft-base" && r.kind != "sft-additional")
      throw ConfigError("ablation." + r.label + ".kind: expected sfo, sft-base or sft-additional");
    if (r.kind == "sfo" && !r.strategy) throw ConfigError("ablation." + r.label + ".strategy: required for sfo rows");
    if (r.beta && !(*r.beta > 0)) throw ConfigError("ablation." + r.label + ".beta: must be > 0");
    if (r.adapter_rank && *r.adapter_rank < 1) throw ConfigError("ablation." + r.label + ".adapter_rank: must be >= 1");
    if (r.iterations && *r.iterations < 0) throw ConfigError("ablation." + r.label + ".iterations: must be >= 0");
  }
}

// ---- parsing ----

json parse_json_text(const std::string& text, const std::string& origin) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    // Byte offset -> line/column.
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i < text.size() && i + 1 < e.byte; ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw ConfigError(origin + ":" + std::to_string(line) + ":" + std::to_string(col) + ": JSON parse error: " +
                      e.what());
  }
}

json read_json_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_json_text(ss.str(), path);
}

namespace {

// Field table: each entry knows how to read, write and document one key.
template <class T>
struct Binder {
  struct Field {
    std::string key;
    std::string type;
    std::string doc;
    std::function<json(const T&)> get;
    std::function<void(T&, const json&, const std::string&)> set;
  };
  std::vector<Field> fields;

  json dump(const T& v) const {
    json j = json::object();
    for (const auto& f : fields) j[f.key] = f.get(v);
    return j;
  }

  void load(T& v, const json& j, const std::string& path) const {
    if (!j.is_object()) throw ConfigError(path + ": expected a JSON object");
    for (auto it = j.begin(); it != j.end(); ++it) {
      const Field* f = nullptr;
      for (const auto& cand : fields)
        if (cand.key == it.key()) f = &cand;
      const std::string key_path = path.empty() ? it.key() : path + "." + it.key();
      if (!f) throw ConfigError(key_path + ": unknown key");
      f->set(v, it.value(), key_path);
    }
  }

  json schema(const T& defaults) const {
    json s = json::object();
    for (const auto& f : fields) s[f.key] = json{{"type", f.type}, {"default", f.get(defaults)}, {"doc", f.doc}};
    return s;
  }
};

double as_number(const json& v, const std::string& path) {
  if (!v.is_number()) throw ConfigError(path + ": expected a number");
  double d = v.get<double>();
  if (!std::isfinite(d)) throw ConfigError(path + ": must be finite");
  return d;
}

long long as_integer(const json& v, const std::string& path) {
  if (!v.is_number_integer()) throw ConfigError(path + ": expected an integer");
  return v.get<long long>();
}

bool as_bool(const json& v, const std::string& path) {
  if (!v.is_boolean()) throw ConfigError(path + ": expected true or false");
  return v.get<bool>();
}

std::string as_string(const json& v, const std::string& path) {
  if (!v.is_string()) throw ConfigError(path + ": expected a string");
  return v.get<std::string>();
}

template <class T>
typename Binder<T>::Field num(std::string key, std::string doc, double T::*m,
                              std::function<bool(double)> ok = nullptr, std::string rule = "") {
  return {key, "number", doc, [m](const T& v) { return json(v.*m); },
          [m, ok, rule](T& v, const json& j, const std::string& p) {
            double d = as_number(j, p);
            if (ok && !ok(d)) throw ConfigError(p + ": " + rule);
            v.*m = d;
          }};
}

template <class T>
typename Binder<T>::Field integer(std::string key, std::string doc, int T::*m, long long lo, std::string rule) {
  return {key, "integer", doc, [m](const T& v) { return json(v.*m); },
          [m, lo, rule](T& v, const json& j, const std::string& p) {
            long long x = as_integer(j, p);
            if (x < lo || x > (1ll << 30)) throw ConfigError(p + ": " + rule);
            v.*m = static_cast<int>(x);
          }};
}

template <class T>
typename Binder<T>::Field boolean(std::string key, std::string doc, bool T::*m) {
  return {key, "boolean", doc, [m](const T& v) { return json(v.*m); },
          [m](T& v, const json& j, const std::string& p) { v.*m = as_bool(j, p); }};
}

const Binder<TimestepDist>& timestep_binder() {
  static const Binder<TimestepDist> b{{
      {"variant", "string", "uniform or logit_normal",
       [](const TimestepDist& t) { return json(t.variant == TimestepDist::Variant::uniform ? "uniform" : "logit_normal"); },
       [](TimestepDist& t, const json& j, const std::string& p) {
         auto s = as_string(j, p);
         if (s == "uniform") t.variant = TimestepDist::Variant::uniform;
         else if (s == "logit_normal") t.variant = TimestepDist::Variant::logit_normal;
         else throw ConfigError(p + ": expected uniform or logit_normal");
       }},
      num<TimestepDist>("mu", "logit-normal location", &TimestepDist::mu),
      num<TimestepDist>("sigma", "logit-normal scale (standard deviation of logit t)", &TimestepDist::sigma,
                        [](double s) { return s > 0; }, "must be > 0"),
  }};
  return b;
}

const Binder<AdamConfig>& adam_binder() {
  static const Binder<AdamConfig> b{{
      num<AdamConfig>("lr", "Adam learning rate", &AdamConfig::lr, [](double x) { return x > 0; }, "must be > 0"),
      num<AdamConfig>("beta1", "first-moment decay", &AdamConfig::beta1, [](double x) { return x >= 0 && x < 1; },
                      "must be in [0, 1)"),
      num<AdamConfig>("beta2", "second-moment decay", &AdamConfig::beta2, [](double x) { return x >= 0 && x < 1; },
                      "must be in [0, 1)"),
      num<AdamConfig>("eps", "denominator floor", &AdamConfig::eps, [](double x) { return x > 0; }, "must be > 0"),
  }};
  return b;
}

const Binder<SamplerConfig>& sampler_binder() {
  static const Binder<SamplerConfig> b{{
      integer<SamplerConfig>("steps", "Euler steps from t=1 to t=0", &SamplerConfig::steps, 1, "must be >= 1"),
      num<SamplerConfig>("guidance_scale", "classifier-free guidance scale", &SamplerConfig::guidance_scale,
                         [](double x) { return x >= 0; }, "must be >= 0"),
      num<SamplerConfig>("cond_dropout_p", "training-time condition dropout", &SamplerConfig::cond_dropout_p,
                         [](double x) { return x >= 0 && x < 1; }, "must be in [0, 1)"),
  }};
  return b;
}

const Binder<TrainConfig>& train_binder() {
  static const Binder<TrainConfig> b{{
      num<TrainConfig>("beta", "pairwise loss temperature (sfo)", &TrainConfig::beta,
                       [](double x) { return x > 0; }, "must be > 0"),
      integer<TrainConfig>("iterations", "optimizer steps", &TrainConfig::iterations, 0, "must be >= 0"),
      integer<TrainConfig>("batch_size", "records (sfo: pairs) per step", &TrainConfig::batch_size, 1, "must be >= 1"),
      {"timestep", "object", "training-time p(t)", [](const TrainConfig& c) { return to_json(c.timestep); },
       [](TrainConfig& c, const json& j, const std::string& p) { timestep_binder().load(c.timestep, j, p); }},
      {"optimizer", "object", "Adam settings", [](const TrainConfig& c) { return adam_binder().dump(c.optimizer); },
       [](TrainConfig& c, const json& j, const std::string& p) { adam_binder().load(c.optimizer, j, p); }},
      integer<TrainConfig>("adapter_rank", "rank of the adapter this stage attaches", &TrainConfig::adapter_rank, 0,
                           "must be >= 0"),
      num<TrainConfig>("cond_dropout_p", "probability of replacing the condition by the null condition",
                       &TrainConfig::cond_dropout_p, [](double x) { return x >= 0 && x < 1; }, "must be in [0, 1)"),
      integer<TrainConfig>("eval_every", "evaluation period in steps (0 = off)", &TrainConfig::eval_every, 0,
                           "must be >= 0"),
      boolean<TrainConfig>("direct", "sfo: optimize the ref adapter itself instead of a new one", &TrainConfig::direct),
      boolean<TrainConfig>("text_only", "pretrain: zero the image cue", &TrainConfig::text_only),
      {"adapter_name", "string", "sft: name of the adapter to attach",
       [](const TrainConfig& c) { return json(c.adapter_name); },
       [](TrainConfig& c, const json& j, const std::string& p) { c.adapter_name = as_string(j, p); }},
      boolean<TrainConfig>("allow_mixed_provenance", "sfo: accept quadruplets from several strategies",
                           &TrainConfig::allow_mixed_provenance),
      boolean<TrainConfig>("metrics_wall_time", "write wall_ms into metrics lines (breaks byte-reproducibility)",
                           &TrainConfig::metrics_wall_time),
  }};
  return b;
}

const Binder<SynthConfig>& synth_binder() {
  static const Binder<SynthConfig> b{{
      {"strategy", "string", "cdns, selfplay, dpo-sim, cdns-img-only or cdns-text-only",
       [](const SynthConfig& s) { return json(to_string(s.strategy)); },
       [](SynthConfig& s, const json& j, const std::string& p) {
         try {
           s.strategy = strategy_from_string(as_string(j, p));
         } catch (const ValueError& e) {
           throw ConfigError(p + ": " + e.what());
         }
       }},
      {"sampler", "object", "sampler used to generate negatives",
       [](const SynthConfig& s) { return to_json(s.sampler); },
       [](SynthConfig& s, const json& j, const std::string& p) { sampler_binder().load(s.sampler, j, p); }},
      integer<SynthConfig>("n_per_triplet", "negatives per source triplet", &SynthConfig::n_per_triplet, 1,
                           "must be >= 1"),
      num<SynthConfig>("leak_lambda", "context leakage into the scene-derived subject cue", &SynthConfig::leak_lambda,
                       [](double x) { return x >= 0; }, "must be >= 0"),
      {"similarity_filter", "number|null", "drop pairs with subject similarity above this (null = keep all)",
       [](const SynthConfig& s) { return s.similarity_filter ? json(*s.similarity_filter) : json(nullptr); },
       [](SynthConfig& s, const json& j, const std::string& p) {
         if (j.is_null()) s.similarity_filter.reset();
         else s.similarity_filter = as_number(j, p);
       }},
  }};
  return b;
}

const Binder<EvalSpec>& eval_binder() {
  static const Binder<EvalSpec> b{{
      integer<EvalSpec>("n_samples", "samples per evaluated condition", &EvalSpec::n_samples, 1, "must be >= 1"),
      {"sampler", "object", "sampler used for evaluation", [](const EvalSpec& e) { return to_json(e.sampler); },
       [](EvalSpec& e, const json& j, const std::string& p) { sampler_binder().load(e.sampler, j, p); }},
      {"held_out_subject_ids", "integer list", "subjects to evaluate (empty = the world's held-out split)",
       [](const EvalSpec& e) { return json(e.held_out_subject_ids); },
       [](EvalSpec& e, const json& j, const std::string& p) {
         if (!j.is_array()) throw ConfigError(p + ": expected a list of integers");
         e.held_out_subject_ids.clear();
         for (const auto& v : j) e.held_out_subject_ids.push_back(as_integer(v, p));
       }},
      {"report_path", "string", "optional path for the evaluation summary",
       [](const EvalSpec& e) { return json(e.report_path); },
       [](EvalSpec& e, const json& j, const std::string& p) { e.report_path = as_string(j, p); }},
  }};
  return b;
}

const Binder<WorldSpec>& world_binder() {
  static const Binder<WorldSpec> b{{
      integer<WorldSpec>("k", "subject block dimension", &WorldSpec::k, 1, "must be >= 1"),
      integer<WorldSpec>("m", "context block dimension", &WorldSpec::m, 1, "must be >= 1"),
      integer<WorldSpec>("n_subjects", "number of subjects", &WorldSpec::n_subjects, 2, "must be >= 2"),
      integer<WorldSpec>("contexts_per_subject", "contexts drawn per subject", &WorldSpec::contexts_per_subject, 1,
                         "must be >= 1"),
      num<WorldSpec>("obs_noise_std", "observation noise on scenes", &WorldSpec::obs_noise_std,
                     [](double x) { return x >= 0; }, "must be >= 0"),
      num<WorldSpec>("cimg_noise_std", "noise on the clean subject cue", &WorldSpec::cimg_noise_std,
                     [](double x) { return x >= 0; }, "must be >= 0"),
      num<WorldSpec>("context_coupling", "how strongly a subject's contexts echo the subject", &WorldSpec::context_coupling,
                     [](double x) { return x >= 0 && x < 1; }, "must be in [0, 1)"),
      num<WorldSpec>("heldout_fraction", "fraction of subjects held out", &WorldSpec::heldout_fraction,
                     [](double x) { return x > 0 && x < 1; }, "must be in (0, 1)"),
  }};
  return b;
}

const Binder<CarMixtureSpec>& cars_binder() {
  static const Binder<CarMixtureSpec> b{{
      integer<CarMixtureSpec>("K", "number of colour modes", &CarMixtureSpec::K, 2, "must be >= 2"),
      num<CarMixtureSpec>("radius", "radius of the circle holding the mode centers", &CarMixtureSpec::radius,
                          [](double x) { return x > 0; }, "must be > 0"),
      num<CarMixtureSpec>("sigma", "per-mode standard deviation", &CarMixtureSpec::sigma,
                          [](double x) { return x > 0; }, "must be > 0"),
      integer<CarMixtureSpec>("n_positive", "target-mode samples", &CarMixtureSpec::n_positive, 1, "must be >= 1"),
      integer<CarMixtureSpec>("n_negative", "other-mode samples", &CarMixtureSpec::n_negative, 1, "must be >= 1"),
      integer<CarMixtureSpec>("n_pretrain", "all-mode samples for the base model", &CarMixtureSpec::n_pretrain, 2,
                              "must be >= 2"),
  }};
  return b;
}

const Binder<MlpSpec>& model_binder() {
  static const Binder<MlpSpec> b{{
      {"hidden_widths", "integer list", "hidden layer widths", [](const MlpSpec& m) { return json(m.hidden_widths); },
       [](MlpSpec& m, const json& j, const std::string& p) {
         if (!j.is_array() || j.empty()) throw ConfigError(p + ": expected a non-empty list of integers");
         m.hidden_widths.clear();
         for (const auto& v : j) {
           long long w = as_integer(v, p);
           if (w < 1 || w > 65536) throw ConfigError(p + ": widths must be in [1, 65536]");
           m.hidden_widths.push_back(static_cast<int>(w));
         }
       }},
      {"activation", "string", "tanh or gelu", [](const MlpSpec& m) { return json(to_string(m.activation)); },
       [](MlpSpec& m, const json& j, const std::string& p) {
         try {
           m.activation = activation_from_string(as_string(j, p));
         } catch (const ValueError& e) {
           throw ConfigError(p + ": " + e.what());
         }
       }},
  }};
  return b;
}

std::optional<TimestepDist> opt_timestep(const json& j, const std::string& p) {
  TimestepDist t;
  timestep_binder().load(t, j, p);
  return t;
}

AblationRow row_from_json(const json& j, const std::string& path) {
  if (!j.is_object()) throw ConfigError(path + ": expected an object");
  AblationRow r;
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string p = path + "." + it.key();
    const json& v = it.value();
    if (it.key() == "label") r.label = as_string(v, p);
    else if (it.key() == "kind") r.kind = as_string(v, p);
    else if (it.key() == "strategy") {
      try {
        r.strategy = strategy_from_string(as_string(v, p));
      } catch (const ValueError& e) {
        throw ConfigError(p + ": " + e.what());
      }
    } else if (it.key() == "beta") r.beta = as_number(v, p);
    else if (it.key() == "timestep") r.timestep = opt_timestep(v, p);
    else if (it.key() == "adapter_rank") r.adapter_rank = static_cast<int>(as_integer(v, p));
    else if (it.key() == "iterations") r.iterations = static_cast<int>(as_integer(v, p));
    else if (it.key() == "direct") r.direct = as_bool(v, p);
    else throw ConfigError(p + ": unknown key");
  }
  return r;
}

}  // namespace

json to_json(const TimestepDist& t) { return timestep_binder().dump(t); }
json to_json(const SamplerConfig& c) { return sampler_binder().dump(c); }
json to_json(const TrainConfig& c) { return train_binder().dump(c); }
json to_json(const SynthConfig& s) { return synth_binder().dump(s); }
json to_json(const EvalSpec& e) { return eval_binder().dump(e); }
json to_json(const WorldSpec& w) { return world_binder().dump(w); }
json to_json(const CarMixtureSpec& c) { return cars_binder().dump(c); }
json to_json(const MlpSpec& m) { return model_binder().dump(m); }

json to_json(const AblationRow& r) {
  json j = json::object();
  j["label"] = r.label;
  j["kind"] = r.kind;
  if (r.strategy) j["strategy"] = to_string(*r.strategy);
  if (r.beta) j["beta"] = *r.beta;
  if (r.timestep) j["timestep"] = to_json(*r.timestep);
  if (r.adapter_rank) j["adapter_rank"] = *r.adapter_rank;
  if (r.iterations) j["iterations"] = *r.iterations;
  if (r.direct) j["direct"] = *r.direct;
  return j;
}

TimestepDist timestep_from_json(const json& j, TimestepDist base) {
  timestep_binder().load(base, j, "timestep");
  base.validate();
  return base;
}

SamplerConfig sampler_from_json(const json& j, SamplerConfig base) {
  sampler_binder().load(base, j, "");
  return base;
}

TrainConfig train_config_from_json(const json& j, TrainConfig base) {
  train_binder().load(base, j, "");
  base.validate();
  return base;
}

SynthConfig synth_config_from_json(const json& j, SynthConfig base) {
  synth_binder().load(base, j, "");
  return base;
}

EvalSpec eval_spec_from_json(const json& j, EvalSpec base) {
  eval_binder().load(base, j, "");
  base.validate();
  return base;
}

WorldSpec world_spec_from_json(const json& j, WorldSpec base) {
  world_binder().load(base, j, "");
  return base;
}

CarMixtureSpec cars_spec_from_json(const json& j, CarMixtureSpec base) {
  cars_binder().load(base, j, "");
  try {
    base.validate();
  } catch (const ValueError& e) {
    throw ConfigError(e.what());
  }
  return base;
}

MlpSpec mlp_spec_from_json(const json& j, MlpSpec base) {
  model_binder().load(base, j, "");
  return base;
}

json to_json(const PipelineConfig& c) {
  json j = json::object();
  j["preset"] = to_string(c.preset);
  j["world"] = to_json(c.world);
  j["cars"] = to_json(c.cars);
  j["model"] = to_json(c.model);
  j["pretrain"] = to_json(c.pretrain);
  j["sft"] = to_json(c.sft);
  j["sfo"] = to_json(c.sfo);
  j["synth"] = to_json(c.synth);
  j["eval"] = to_json(c.eval);
  j["ratio_every"] = c.ratio_every;
  j["ablation"] = json::array();
  for (const auto& r : c.ablation) j["ablation"].push_back(to_json(r));
  return j;
}

PipelineConfig pipeline_from_json(const json& j, PipelineConfig c) {
  if (!j.is_object()) throw ConfigError("config: expected a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string& k = it.key();
    const json& v = it.value();
    if (k == "preset") c.preset = preset_from_string(as_string(v, k));
    else if (k == "world") world_binder().load(c.world, v, k);
    else if (k == "cars") cars_binder().load(c.cars, v, k);
    else if (k == "model") model_binder().load(c.model, v, k);
    else if (k == "pretrain") train_binder().load(c.pretrain, v, k);
    else if (k == "sft") train_binder().load(c.sft, v, k);
    else if (k == "sfo") train_binder().load(c.sfo, v, k);
    else if (k == "synth") synth_binder().load(c.synth, v, k);
    else if (k == "eval") eval_binder().load(c.eval, v, k);
    else if (k == "ratio_every") c.ratio_every = static_cast<int>(as_integer(v, k));
    else if (k == "ablation") {
      if (!v.is_array()) throw ConfigError("ablation: expected a list of rows");
      c.ablation.clear();
      for (std::size_t i = 0; i < v.size(); ++i) c.ablation.push_back(row_from_json(v[i], "ablation[" + std::to_string(i) + "]"));
    } else {
      throw ConfigError(k + ": unknown key");
    }
  }
  c.validate();
  return c;
}

namespace {

AblationRow sfo_row(std::string label, Strategy s) {
  AblationRow r;
  r.label = std::move(label);
  r.strategy = s;
  return r;
}

}  // namespace

PipelineConfig preset_config(Preset p) {
  PipelineConfig c;
  c.preset = p;
  if (p == Preset::toy_cars) {
    c.pretrain.text_only = false;
    c.pretrain.iterations = 3000;
    // Both arms share rank, lr and budget. A rank-1 adapter caps how far the supervised arm can
    // reshape the field, and beta stays small because squared errors here are O(1), not O(1e-3).
    c.sft.adapter_rank = 1;
    c.sft.iterations = 800;
    c.sft.batch_size = 16;
    c.sft.optimizer.lr = 1e-4;
    c.sfo.adapter_rank = 1;
    c.sfo.iterations = 800;
    c.sfo.batch_size = 16;
    c.sfo.optimizer.lr = 1e-4;
    c.sfo.beta = 0.1;
    c.eval.n_samples = 1000;
    c.ratio_every = 50;
    return c;
  }
  // Subject world: the Tab.-3-style grid plus the timestep rows.
  AblationRow base;
  base.label = "sft-base";
  base.kind = "sft-base";
  AblationRow add;
  add.label = "sft-additional";
  add.kind = "sft-additional";
  c.ablation = {base, add, sfo_row("dpo-sim", Strategy::dpo_sim), sfo_row("selfplay", Strategy::selfplay),
                sfo_row("cdns", Strategy::cdns)};
  const std::vector<std::pair<std::string, TimestepDist>> ts = {
      {"cdns-uniform", TimestepDist::uniform()},
      {"cdns-ln(-2,1)", TimestepDist::logit_normal(-2, 1)},
      {"cdns-ln(2,1)", TimestepDist::logit_normal(2, 1)},
  };
  for (const auto& [label, dist] : ts) {
    AblationRow r = sfo_row(label, Strategy::cdns);
    r.timestep = dist;
    c.ablation.push_back(r);
  }
  return c;
}

json config_schema() {
  PipelineConfig d;
  json s = json::object();
  s["preset"] = json{{"type", "string"}, {"default", to_string(d.preset)}, {"doc", "toy-cars or subject-world"}};
  s["world"] = world_binder().schema(d.world);
  s["cars"] = cars_binder().schema(d.cars);
  s["model"] = model_binder().schema(d.model);
  s["pretrain"] = train_binder().schema(d.pretrain);
  s["sft"] = train_binder().schema(d.sft);
  s["sfo"] = train_binder().schema(d.sfo);
  s["synth"] = synth_binder().schema(d.synth);
  s["eval"] = eval_binder().schema(d.eval);
  s["ratio_every"] = json{{"type", "integer"}, {"default", d.ratio_every}, {"doc", "toy cars: steps between ratio checkpoints"}};
  s["ablation"] = json{{"type", "list"},
                       {"default", json::array()},
                       {"doc", "rows {label, kind, strategy, beta, timestep, adapter_rank, iterations, direct}"}};
  json nested = json::object();
  nested["timestep"] = timestep_binder().schema(TimestepDist{});
  nested["optimizer"] = adam_binder().schema(AdamConfig{});
  nested["sampler"] = sampler_binder().schema(SamplerConfig{});
  return json{{"version", 1}, {"sections", s}, {"nested", nested}};
}

}  // namespace sfolab
