#pragma once

#include "sfolab/flow.hpp"
#include "sfolab/negatives.hpp"
#include "sfolab/numcore.hpp"
#include "sfolab/schedule.hpp"
#include "sfolab/world.hpp"

#include <json.hpp>

#include <optional>
#include <string>
#include <vector>

namespace sfolab {

using json = nlohmann::ordered_json;

struct ConfigError : Error {
  using Error::Error;
};

enum class Stage { pretrain, sft, sfo };
std::string to_string(Stage s);

struct TrainConfig {
  Stage stage = Stage::sfo;
  double beta = 1000.0;
  int iterations = 300;
  int batch_size = 4;
  TimestepDist timestep;
  AdamConfig optimizer;
  std::uint64_t seed = 0;  // supplied on the command line, echoed into checkpoints
  int adapter_rank = 16;
  double cond_dropout_p = 0.1;
  int eval_every = 0;
  bool direct = false;         // sfo: train the "ref" adapter itself
  bool text_only = false;      // pretrain: zero the image cue
  std::string adapter_name;    // sft: adapter to attach (default "ref")
  bool allow_mixed_provenance = false;
  bool metrics_wall_time = false;

  void validate() const;
  bool operator==(const TrainConfig&) const = default;
};

TrainConfig default_train_config(Stage stage);

struct EvalSpec {
  int n_samples = 16;
  SamplerConfig sampler;
  std::vector<std::int64_t> held_out_subject_ids;  // empty: the world's held-out split
  std::string report_path;

  void validate() const;
  bool operator==(const EvalSpec&) const = default;
};

// One row of an ablation grid.
struct AblationRow {
  std::string label;
  std::string kind = "sfo";  // sfo | sft-base | sft-additional
  std::optional<Strategy> strategy;
  std::optional<double> beta;
  std::optional<TimestepDist> timestep;
  std::optional<int> adapter_rank;
  std::optional<int> iterations;
  std::optional<bool> direct;

  bool operator==(const AblationRow&) const = default;
};

enum class Preset { subject_world, toy_cars };
std::string to_string(Preset p);
Preset preset_from_string(const std::string& s);

struct PipelineConfig {
  Preset preset = Preset::subject_world;
  WorldSpec world;
  CarMixtureSpec cars;
  MlpSpec model;  // input/output dims are derived from the data
  TrainConfig pretrain = default_train_config(Stage::pretrain);
  TrainConfig sft = default_train_config(Stage::sft);
  TrainConfig sfo = default_train_config(Stage::sfo);
  SynthConfig synth;
  EvalSpec eval;
  int ratio_every = 100;  // toy cars: mode-ratio checkpoints during fine-tuning
  std::vector<AblationRow> ablation;

  void validate() const;
  bool operator==(const PipelineConfig&) const = default;
};

// Parses text; parse errors report line and column.
json parse_json_text(const std::string& text, const std::string& origin);
json read_json_file(const std::string& path);

// All loaders are strict: unknown keys are rejected and every value is type- and
// range-checked, with errors naming the offending key path. Missing keys keep `base`.
PipelineConfig pipeline_from_json(const json& j, PipelineConfig base = {});
TrainConfig train_config_from_json(const json& j, TrainConfig base);
SynthConfig synth_config_from_json(const json& j, SynthConfig base = {});
EvalSpec eval_spec_from_json(const json& j, EvalSpec base = {});
WorldSpec world_spec_from_json(const json& j, WorldSpec base = {});
CarMixtureSpec cars_spec_from_json(const json& j, CarMixtureSpec base = {});
MlpSpec mlp_spec_from_json(const json& j, MlpSpec base = {});
SamplerConfig sampler_from_json(const json& j, SamplerConfig base = {});
TimestepDist timestep_from_json(const json& j, TimestepDist base = {});

json to_json(const PipelineConfig& c);
json to_json(const TrainConfig& c);
json to_json(const SynthConfig& s);
json to_json(const EvalSpec& e);
json to_json(const WorldSpec& w);
json to_json(const CarMixtureSpec& c);
json to_json(const MlpSpec& m);
json to_json(const SamplerConfig& c);
json to_json(const TimestepDist& t);
json to_json(const AblationRow& r);

PipelineConfig preset_config(Preset p);

// Every config section with its keys, types, defaults and a one-line description.
json config_schema();

}  // namespace sfolab
