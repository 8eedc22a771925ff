#pragma once

#include "sfolab/adapters.hpp"
#include "sfolab/config.hpp"
#include "sfolab/flow.hpp"
#include "sfolab/world.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace sfolab {

struct ModeRatio {
  double ratio = 0;  // fraction classified into mode 0
  std::vector<std::int64_t> counts;
  std::int64_t n = 0;
};

ModeRatio mode_ratio(const Matrix& samples, const Matrix& centers);

// n = spec.n_samples draws for one condition; sample j starts from rng.split(j).
ModeRatio target_mode_ratio(const VelocityField& model, const ConditionPair& cond, const Matrix& centers,
                            const EvalSpec& spec, const RngStream& rng, int threads = 1);
ModeRatio target_mode_ratio(const AdapterStack& stack, const ConditionPair& cond, const Matrix& centers,
                            const EvalSpec& spec, const RngStream& rng, int threads = 1);

struct SweepStats {
  double fidelity_mean = 0;
  double fidelity_std = 0;
  double alignment_mean = 0;
  double alignment_std = 0;
  std::int64_t n = 0;
  std::int64_t degenerate = 0;
};

json to_json(const SweepStats& s);

struct SweepSamples {
  Matrix x;
  std::vector<std::int64_t> subject;
  std::vector<std::int64_t> context;
};

// Scores generated scenes against their conditions with the two oracles.
SweepStats score_samples(const SweepSamples& s, const World& world);

// The conditions evaluated: the given triplets, restricted to spec.held_out_subject_ids when set.
// Every subject must be outside the world's training split.
std::vector<Triplet> sweep_conditions(const std::vector<Triplet>& heldout, const World& world, const EvalSpec& spec);

// spec.n_samples generations per condition; condition i, sample j starts from rng.split(i).split(j).
SweepSamples generate_sweep(const VelocityField& model, const std::vector<Triplet>& conditions, const EvalSpec& spec,
                            const RngStream& rng, int threads = 1);

SweepStats subject_sweep(const VelocityField& model, const World& world, const std::vector<Triplet>& heldout,
                         const EvalSpec& spec, const RngStream& rng, int threads = 1);
SweepStats subject_sweep(const AdapterStack& stack, const World& world, const std::vector<Triplet>& heldout,
                         const EvalSpec& spec, const RngStream& rng, int threads = 1);

constexpr int kReportVersion = 1;

struct AblationResult {
  std::string label;
  bool ok = true;
  std::string error;
  SweepStats stats;
  std::optional<double> target_mode_ratio;
  json extra = json::object();
};

struct AblationTable {
  std::vector<AblationResult> rows;

  void add(AblationResult r);  // rejects duplicate labels
  const AblationResult* find(const std::string& label) const;
  std::string to_csv() const;
  json to_json() const;
  static std::string csv_header();
};

using RowDriver = std::function<AblationResult(const AblationRow& row)>;

// Runs every row; a throwing row is recorded as failed and the table is still produced.
AblationTable run_ablation(const std::vector<AblationRow>& grid, const RowDriver& driver);

}  // namespace sfolab
