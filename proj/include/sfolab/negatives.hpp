#pragma once

#include "sfolab/adapters.hpp"
#include "sfolab/flow.hpp"
#include "sfolab/world.hpp"

#include <array>
#include <optional>
#include <vector>

namespace sfolab {

enum class Strategy { cdns, selfplay, dpo_sim, cdns_img_only, cdns_text_only };

std::string to_string(Strategy s);
Strategy strategy_from_string(const std::string& s);  // accepts "dpo-sim" and "dpo_sim" spellings
Provenance provenance_of(Strategy s);

struct SynthConfig {
  Strategy strategy = Strategy::cdns;
  SamplerConfig sampler;
  int n_per_triplet = 1;
  double leak_lambda = 0.5;
  // Pairs whose subject similarity exceeds this are dropped; unset keeps everything.
  std::optional<double> similarity_filter;

  void validate() const;
  bool operator==(const SynthConfig&) const = default;
};

struct GapStats {
  static constexpr int kBins = 50;
  std::size_t count = 0;
  double mean = 0;
  double std = 0;
  double median = 0;
  std::array<std::size_t, kBins> histogram{};

  // Bin i covers [-1 + 0.04 i, -1 + 0.04 (i + 1)); 1.0 lands in the last bin.
  static int bin_of(double similarity);
  double mass_below(double threshold) const;  // fraction of pairs in bins entirely below threshold
};

GapStats gap_stats(const std::vector<double>& similarities);
GapStats pair_gap_stats(const std::vector<Quadruplet>& quads, const World& world);

// The degraded conditions: scene-derived subject cue with context leakage and/or the
// generic (all-zero) text embedding. Never mutates the source.
ConditionPair degrade_condition(const Triplet& t, const World& world, bool degrade_img, bool degrade_text,
                                double leak_lambda, RngStream& rng);

// DPO labeling: the higher-fidelity generation is the positive; exact ties go to the first.
inline bool dpo_first_is_positive(double fid_first, double fid_second) { return fid_first >= fid_second; }

// Single-record forms. `ref` is the reference view ("ref" enabled only).
Quadruplet synth_selfplay(const StackView& ref, const Triplet& t, const SamplerConfig& sampler, RngStream rng);
Quadruplet synth_cdns(const StackView& ref, const Triplet& t, const World& world, const SamplerConfig& sampler,
                      RngStream rng, double leak_lambda = 0.5, Strategy variant = Strategy::cdns);
Quadruplet synth_dpo_sim(const StackView& ref, const Triplet& t, const World& world, const SamplerConfig& sampler,
                         RngStream rng);

// Batched synthesis over a triplet list. Record i (replica r) uses stream root.split(i).split(r);
// the output order follows the input and is independent of `threads`.
std::vector<Quadruplet> synthesize(const StackView& ref, const std::vector<Triplet>& triplets, const World& world,
                                   const SynthConfig& config, const RngStream& root, int threads = 1);

}  // namespace sfolab
