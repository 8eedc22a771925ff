#include "sfolab/schedule.hpp"

#include <algorithm>
#include <cstdio>

namespace sfolab {

void TimestepDist::validate() const {
  if (variant == Variant::logit_normal && !(sigma > 0)) throw ValueError("timestep.sigma must be > 0");
  if (!std::isfinite(mu)) throw ValueError("timestep.mu must be finite");
}

std::string TimestepDist::label() const {
  if (variant == Variant::uniform) return "U(0,1)";
  char buf[64];
  std::snprintf(buf, sizeof buf, "LN(%g,%g)", mu, sigma);
  return buf;
}

double logistic(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  double e = std::exp(x);
  return e / (1.0 + e);
}

double logit(double t) {
  if (!(t > 0 && t < 1)) throw ValueError("logit: sample outside (0, 1)");
  return std::log(t) - std::log1p(-t);
}

double logit_normal_t(double mu, double sigma, double z) {
  return std::clamp(logistic(mu + sigma * z), kTimestepClamp, 1.0 - kTimestepClamp);
}

double sample_t(const TimestepDist& dist, RngStream& rng) {
  if (dist.variant == TimestepDist::Variant::uniform)
    return std::clamp(rng.uniform(), kTimestepClamp, 1.0 - kTimestepClamp);
  return logit_normal_t(dist.mu, dist.sigma, rng.normal());
}

Vector sample_t_batch(const TimestepDist& dist, RngStream& rng, Eigen::Index n) {
  Vector t(n);
  for (Eigen::Index i = 0; i < n; ++i) t[i] = sample_t(dist, rng);
  return t;
}

LogitMoments logit_moments(const std::vector<double>& samples) {
  if (samples.empty()) throw ValueError("logit_moments: no samples");
  double sum = 0;
  std::vector<double> z;
  z.reserve(samples.size());
  for (double t : samples) {
    z.push_back(logit(t));
    sum += z.back();
  }
  const double mean = sum / z.size();
  double ss = 0;
  for (double v : z) ss += (v - mean) * (v - mean);
  return {mean, std::sqrt(ss / z.size())};
}

namespace {
// Asymptotic Kolmogorov distribution tail, Q(lambda) = 2 sum (-1)^{j-1} exp(-2 j^2 lambda^2).
double kolmogorov_q(double lambda) {
  if (lambda < 1e-3) return 1.0;
  double sum = 0, sign = 1;
  for (int j = 1; j <= 200; ++j) {
    double term = sign * std::exp(-2.0 * j * j * lambda * lambda);
    sum += term;
    if (std::fabs(term) < 1e-16) break;
    sign = -sign;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}
}  // namespace

KsResult ks_uniform(std::vector<double> samples) {
  if (samples.empty()) throw ValueError("ks_uniform: no samples");
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double d = 0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    double f = std::clamp(samples[i], 0.0, 1.0);
    d = std::max({d, (i + 1) / n - f, f - i / n});
  }
  const double sn = std::sqrt(n);
  return {d, kolmogorov_q((sn + 0.12 + 0.11 / sn) * d)};
}

}  // namespace sfolab
