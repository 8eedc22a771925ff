#pragma once

#include "sfolab/adapters.hpp"
#include "sfolab/numcore.hpp"

#include <cmath>
#include <functional>

namespace sfolab::testing {

inline ParamSet random_params(const MlpSpec& spec, RngStream& rng, double std = 0.5) {
  ParamSet p = ParamSet::zeros(spec);
  for (auto& l : p.layers) {
    l.weight = normal_matrix(rng, l.weight.rows(), l.weight.cols(), std);
    l.bias = normal_matrix(rng, l.bias.size(), 1, std);
  }
  return p;
}

inline Vector central_diff(const std::function<double(const Vector&)>& f, Vector x, double h = 1e-5) {
  Vector g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double keep = x[i];
    x[i] = keep + h;
    const double up = f(x);
    x[i] = keep - h;
    const double down = f(x);
    x[i] = keep;
    g[i] = (up - down) / (2 * h);
  }
  return g;
}

// Relative error with an absolute floor so entries near zero do not blow up.
inline double rel_err(double a, double b, double floor = 1e-8) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

inline double max_rel_err(const Vector& a, const Vector& b, double floor = 1e-8) {
  double worst = 0;
  for (Eigen::Index i = 0; i < a.size(); ++i) worst = std::max(worst, rel_err(a[i], b[i], floor));
  return worst;
}

}  // namespace sfolab::testing
