#pragma once

#include "sfolab/numcore.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace sfolab {

struct WorldSpec {
  int k = 8;  // subject block
  int m = 8;  // context block
  int n_subjects = 64;
  int contexts_per_subject = 16;
  double obs_noise_std = 0.02;
  double cimg_noise_std = 0.01;
  // Contexts are drawn as coupling * (leak map^T s) + sqrt(1 - coupling^2) * fresh noise.
  double context_coupling = 0.0;
  double heldout_fraction = 0.25;

  int data_dim() const { return k + m; }
  void validate() const;
  bool operator==(const WorldSpec&) const = default;
};

struct ConditionPair {
  Vector c_img;
  bool degraded = false;
  Vector c_text;
  bool generic = false;
  bool null_flag = false;

  bool operator==(const ConditionPair&) const = default;
};

// [c_img | c_text | null flag]; a null condition zeroes both embeddings.
Vector encode_condition(const ConditionPair& c);
Vector null_condition(int img_dim, int text_dim);
int condition_dim(int img_dim, int text_dim);

struct Triplet {
  Vector x_tgt;
  ConditionPair cond;
  std::int64_t subject_id = 0;
  std::int64_t context_id = 0;

  bool operator==(const Triplet&) const = default;
};

enum class Provenance : std::uint8_t { cdns = 0, selfplay = 1, dpo_sim = 2, cdns_img_only = 3, cdns_text_only = 4, mode_pool = 5 };
std::string to_string(Provenance p);
Provenance provenance_from_string(const std::string& s);

struct Quadruplet {
  Triplet pos;
  Vector x_neg;
  // The condition the negative was generated from (degraded for CDNS).
  ConditionPair neg_cond;
  Provenance provenance = Provenance::selfplay;

  bool operator==(const Quadruplet&) const = default;
};

struct World {
  WorldSpec spec;
  std::uint64_t seed = 0;
  Matrix Q;         // d x d orthogonal
  Matrix subjects;  // n_subjects x k, unit rows
  Matrix contexts;  // (n_subjects * contexts_per_subject) x m
  Matrix leak;      // k x m map used for context leakage and coupling
  std::vector<std::int64_t> train_subjects;
  std::vector<std::int64_t> heldout_subjects;
  int regenerations = 0;  // subject redraws caused by near-duplicates

  std::int64_t context_index(std::int64_t subject, std::int64_t context) const {
    return subject * spec.contexts_per_subject + context;
  }
  Vector scene(std::int64_t subject, std::int64_t context) const;  // noiseless
  Vector unmix(const Vector& x) const { return Q.transpose() * x; }
  bool is_heldout(std::int64_t subject) const;
};

World make_world(const WorldSpec& spec, std::uint64_t seed);

// All (subject, context) triplets in subject-major order, split by subject.
struct WorldData {
  std::vector<Triplet> train;
  std::vector<Triplet> heldout;
};
WorldData gen_world(const World& world);

// Deterministic orthogonal matrix from a seeded Gaussian via Householder QR (sign-fixed).
Matrix random_orthogonal(int n, RngStream& rng);

struct OracleScore {
  double value = 0;
  bool degenerate = false;  // zero-norm block, value defined as 0
};

OracleScore fidelity_oracle(const Vector& x_gen, std::int64_t subject_id, const World& world);
OracleScore alignment_oracle(const Vector& x_gen, std::int64_t subject_id, std::int64_t context_id, const World& world);
double block_cosine(const Vector& a, const Vector& b, bool* degenerate = nullptr);

// Subject-block cosine between two data vectors.
double subject_similarity(const Vector& a, const Vector& b, const World& world);

// ---- toy car mixture ----

struct CarMixtureSpec {
  int K = 4;
  double radius = 2.0;
  double sigma = 0.25;
  int n_positive = 500;
  int n_negative = 500;
  int n_pretrain = 4000;

  void validate() const;
  bool operator==(const CarMixtureSpec&) const = default;
};

struct CarMixture {
  CarMixtureSpec spec;
  std::uint64_t seed = 0;
  Matrix centers;  // K x 2
  std::vector<Triplet> pretrain;
  std::vector<Triplet> positives;
  std::vector<Triplet> negatives;
};

// The single generic prompt token shared by every car record.
ConditionPair car_condition();

CarMixture gen_car_mixture(const CarMixtureSpec& spec, std::uint64_t seed);

int mode_classifier(const Vector& x, const Matrix& centers);

}  // namespace sfolab
