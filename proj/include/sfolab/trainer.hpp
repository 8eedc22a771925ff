#pragma once

#include "sfolab/adapters.hpp"
#include "sfolab/config.hpp"
#include "sfolab/objectives.hpp"
#include "sfolab/world.hpp"

#include <functional>
#include <string>
#include <vector>

namespace sfolab {

constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  AdapterStack stack;  // stack.enabled is the set used for generation
  Stage stage = Stage::pretrain;
  TrainConfig config;
  std::int64_t iteration = 0;
  RngStream rng;  // position of the batch stream when the checkpoint was taken
  json extra = json::object();

  bool operator==(const Checkpoint& o) const {
    return stack == o.stack && stage == o.stage && config == o.config && iteration == o.iteration && rng == o.rng &&
           extra == o.extra;
  }
};

// Layout: "SFOCKPT1", u32 version, u64 + JSON metadata, u64 + parameter blob,
// then the hex SHA-256 of everything before it.
std::string encode_checkpoint(const Checkpoint& c);
Checkpoint decode_checkpoint(std::string_view bytes);
void save_checkpoint(const std::string& path, const Checkpoint& c);
Checkpoint load_checkpoint(const std::string& path);
std::string checkpoint_hash(const Checkpoint& c);

struct DivergenceError : Error {
  DivergenceError(const std::string& msg, Checkpoint last_good, std::int64_t iteration)
      : Error(msg), last_good(std::move(last_good)), iteration(iteration) {}
  Checkpoint last_good;
  std::int64_t iteration;
};

using MetricsSink = std::function<void(const json&)>;
// Called after step i when (i + 1) % eval_every == 0; the result lands in that step's metrics line.
using EvalHook = std::function<json(const AdapterStack& stack, std::int64_t iteration)>;

struct TrainHooks {
  MetricsSink metrics;
  EvalHook eval;
};

// Appends one compact JSON document per line.
class JsonlWriter {
 public:
  explicit JsonlWriter(const std::string& path);
  void operator()(const json& j);
  const std::string& text() const { return text_; }
  void flush() const;

 private:
  std::string path_;
  std::string text_;
};

// Model dims for records of this shape: input [x_t | t | cond], output x.
MlpSpec model_spec(const MlpSpec& arch, int data_dim, int img_dim, int text_dim);

// Weights and biases ~ U(-1/sqrt(in), 1/sqrt(in)).
ParamSet init_params(const MlpSpec& spec, RngStream& rng);

Checkpoint pretrain_base(const std::vector<Triplet>& data, const MlpSpec& arch, const TrainConfig& config,
                         const TrainHooks& hooks = {});

// Attaches config.adapter_name on top of the currently enabled set and trains only it.
// On a fresh base this is the "ref" adapter; on an SFT checkpoint it gives the additional-adapter ablation.
Checkpoint train_sft(const Checkpoint& base, const std::vector<Triplet>& data, const TrainConfig& config,
                     const TrainHooks& hooks = {});

// Attaches "sfo" (or, with config.direct, trains "ref" against a frozen copy of itself).
Checkpoint train_sfo(const Checkpoint& sft, const std::vector<Quadruplet>& data, const TrainConfig& config,
                     const TrainHooks& hooks = {});

}  // namespace sfolab
