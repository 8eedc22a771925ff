#pragma once

#include "sfolab/config.hpp"
#include "sfolab/evalkit.hpp"
#include "sfolab/negatives.hpp"
#include "sfolab/trainer.hpp"
#include "sfolab/world.hpp"

#include <map>
#include <string>

namespace sfolab {

struct RunOptions {
  std::uint64_t seed = 0;
  int threads = 1;
};

// Every stage takes the run seed; streams are separated by stage tags.
TrainConfig seeded(TrainConfig c, std::uint64_t seed);

RngStream synth_root(std::uint64_t seed);
RngStream eval_root(std::uint64_t seed);

// ---- subject world ----

struct SubjectBase {
  World world;
  WorldData data;
  Checkpoint base;
  Checkpoint sft;
};

SubjectBase prepare_subject(const PipelineConfig& cfg, const RunOptions& opt, const MetricsSink& metrics = {});

// The SFO config an ablation row runs with.
TrainConfig row_sfo_config(const PipelineConfig& cfg, const AblationRow& row, std::uint64_t seed);
// The second supervised adapter trained on SFO's schedule.
TrainConfig sft_additional_config(const PipelineConfig& cfg, const AblationRow& row, std::uint64_t seed);

struct SubjectRun {
  AblationTable table;
  std::map<std::string, GapStats> gaps;  // per synthesized strategy
  std::string metrics;                   // JSONL text
};

SubjectRun run_subject(const PipelineConfig& cfg, const RunOptions& opt);

// ---- toy cars ----

struct RatioCurve {
  std::vector<std::int64_t> iterations;
  std::vector<double> ratios;

  // First checkpointed iteration whose ratio reaches `level`, or -1.
  std::int64_t first_reaching(double level) const;
};

struct CarsRun {
  double base_ratio = 0;
  RatioCurve sft;
  RatioCurve comparative;
  AblationTable table;
  std::string metrics;
};

// Mode 0 positives paired row-for-row with the other-mode pool.
std::vector<Quadruplet> car_pairs(const CarMixture& mix);

CarsRun run_toy_cars(const PipelineConfig& cfg, const RunOptions& opt);

json gap_json(const GapStats& g);

}  // namespace sfolab
