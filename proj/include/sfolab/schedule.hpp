#pragma once

#include "sfolab/numcore.hpp"

#include <vector>

namespace sfolab {

struct TimestepDist {
  enum class Variant { uniform, logit_normal };
  Variant variant = Variant::logit_normal;
  double mu = 0.0;
  double sigma = 1.0;

  static TimestepDist uniform() { return {Variant::uniform, 0.0, 1.0}; }
  static TimestepDist logit_normal(double mu, double sigma) { return {Variant::logit_normal, mu, sigma}; }

  void validate() const;
  std::string label() const;
  bool operator==(const TimestepDist&) const = default;
};

constexpr double kTimestepClamp = 1e-9;

double logistic(double x);
double logit(double t);

double sample_t(const TimestepDist& dist, RngStream& rng);
// The logit-normal map for a given standard-normal z (uniform ignores z and is undefined here).
double logit_normal_t(double mu, double sigma, double z);
Vector sample_t_batch(const TimestepDist& dist, RngStream& rng, Eigen::Index n);

struct LogitMoments {
  double mean;
  double std;
};
LogitMoments logit_moments(const std::vector<double>& samples);

struct KsResult {
  double statistic;
  double p_value;
};
// One-sample Kolmogorov-Smirnov test against U(0, 1).
KsResult ks_uniform(std::vector<double> samples);

}  // namespace sfolab
