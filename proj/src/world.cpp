#include "sfolab/world.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace sfolab {

void WorldSpec::validate() const {
  if (k < 1 || m < 1) throw ValueError("world: k and m must be >= 1");
  if (n_subjects < 2) throw ValueError("world: n_subjects must be >= 2");
  if (contexts_per_subject < 1) throw ValueError("world: contexts_per_subject must be >= 1");
  if (!(obs_noise_std >= 0) || !(cimg_noise_std >= 0)) throw ValueError("world: noise std must be >= 0");
  if (!(context_coupling >= 0 && context_coupling < 1)) throw ValueError("world: context_coupling must be in [0, 1)");
  if (!(heldout_fraction > 0 && heldout_fraction < 1)) throw ValueError("world: heldout_fraction must be in (0, 1)");
}

Vector encode_condition(const ConditionPair& c) {
  Vector v(c.c_img.size() + c.c_text.size() + 1);
  if (c.null_flag) {
    v.setZero();
    v[v.size() - 1] = 1.0;
    return v;
  }
  v << c.c_img, c.c_text, 0.0;
  return v;
}

Vector null_condition(int img_dim, int text_dim) {
  Vector v = Vector::Zero(img_dim + text_dim + 1);
  v[img_dim + text_dim] = 1.0;
  return v;
}

int condition_dim(int img_dim, int text_dim) { return img_dim + text_dim + 1; }

std::string to_string(Provenance p) {
  switch (p) {
    case Provenance::cdns: return "cdns";
    case Provenance::selfplay: return "selfplay";
    case Provenance::dpo_sim: return "dpo-sim";
    case Provenance::cdns_img_only: return "cdns-img-only";
    case Provenance::cdns_text_only: return "cdns-text-only";
    case Provenance::mode_pool: return "mode-pool";
  }
  return "?";
}

Provenance provenance_from_string(const std::string& s) {
  for (auto p : {Provenance::cdns, Provenance::selfplay, Provenance::dpo_sim, Provenance::cdns_img_only,
                 Provenance::cdns_text_only, Provenance::mode_pool})
    if (to_string(p) == s) return p;
  throw ValueError("unknown provenance/strategy '" + s + "'");
}

Matrix random_orthogonal(int n, RngStream& rng) {
  Matrix g = normal_matrix(rng, n, n);
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ() * Matrix::Identity(n, n);
  Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int j = 0; j < n; ++j)
    if (r(j, j) < 0) q.col(j) *= -1.0;
  return q;
}

Vector World::scene(std::int64_t subject, std::int64_t context) const {
  Vector z(spec.data_dim());
  z << subjects.row(subject).transpose(), contexts.row(context_index(subject, context)).transpose();
  return Q * z;
}

bool World::is_heldout(std::int64_t subject) const {
  for (auto h : heldout_subjects)
    if (h == subject) return true;
  return false;
}

World make_world(const WorldSpec& spec, std::uint64_t seed) {
  spec.validate();
  World w;
  w.spec = spec;
  w.seed = seed;
  RngStream root(seed, tag_of("world"));

  RngStream qrng = root.split(tag_of("mixing"));
  w.Q = random_orthogonal(spec.data_dim(), qrng);

  if (spec.k == spec.m) {
    w.leak = Matrix::Identity(spec.k, spec.m);
  } else {
    RngStream lrng = root.split(tag_of("leak"));
    Matrix o = random_orthogonal(std::max(spec.k, spec.m), lrng);
    w.leak = o.topLeftCorner(spec.k, spec.m);
  }

  RngStream srng = root.split(tag_of("subjects"));
  w.subjects.resize(spec.n_subjects, spec.k);
  for (int i = 0; i < spec.n_subjects; ++i) {
    for (int attempt = 0;; ++attempt) {
      if (attempt > 10000) throw ValueError("world: cannot draw subjects with pairwise cosine < 0.9");
      Vector s(spec.k);
      for (int j = 0; j < spec.k; ++j) s[j] = srng.normal();
      double nrm = s.norm();
      if (nrm == 0) continue;
      s /= nrm;
      bool ok = true;
      for (int p = 0; p < i && ok; ++p) ok = w.subjects.row(p).dot(s) < 0.9;
      if (ok) {
        w.subjects.row(i) = s.transpose();
        break;
      }
      ++w.regenerations;
    }
  }

  RngStream crng = root.split(tag_of("contexts"));
  const int nc = spec.n_subjects * spec.contexts_per_subject;
  w.contexts.resize(nc, spec.m);
  const double rho = spec.context_coupling;
  const double fresh = std::sqrt(1.0 - rho * rho) / std::sqrt(static_cast<double>(spec.m));
  for (int i = 0; i < spec.n_subjects; ++i) {
    Vector anchor = w.leak.transpose() * w.subjects.row(i).transpose();
    for (int c = 0; c < spec.contexts_per_subject; ++c) {
      Vector v(spec.m);
      for (int j = 0; j < spec.m; ++j) v[j] = crng.normal();
      w.contexts.row(w.context_index(i, c)) = (rho * anchor + fresh * v).transpose();
    }
  }

  const int n_held = std::max(1, static_cast<int>(std::lround(spec.n_subjects * spec.heldout_fraction)));
  for (int i = 0; i < spec.n_subjects; ++i)
    (i < spec.n_subjects - n_held ? w.train_subjects : w.heldout_subjects).push_back(i);
  return w;
}

WorldData gen_world(const World& w) {
  const auto& spec = w.spec;
  RngStream rec_root = RngStream(w.seed, tag_of("world")).split(tag_of("records"));
  WorldData out;
  for (int s = 0; s < spec.n_subjects; ++s) {
    for (int c = 0; c < spec.contexts_per_subject; ++c) {
      const std::int64_t idx = w.context_index(s, c);
      RngStream r = rec_root.split(static_cast<std::uint64_t>(idx));
      Triplet t;
      t.subject_id = s;
      t.context_id = c;
      t.x_tgt = w.scene(s, c);
      for (int j = 0; j < spec.data_dim(); ++j) t.x_tgt[j] += spec.obs_noise_std * r.normal();
      t.cond.c_img = w.subjects.row(s).transpose();
      for (int j = 0; j < spec.k; ++j) t.cond.c_img[j] += spec.cimg_noise_std * r.normal();
      t.cond.c_text = w.contexts.row(idx).transpose();
      (w.is_heldout(s) ? out.heldout : out.train).push_back(std::move(t));
    }
  }
  return out;
}

double block_cosine(const Vector& a, const Vector& b, bool* degenerate) {
  const double na = a.norm(), nb = b.norm();
  if (na == 0 || nb == 0) {
    if (degenerate) *degenerate = true;
    return 0.0;
  }
  if (degenerate) *degenerate = false;
  return std::clamp(a.dot(b) / (na * nb), -1.0, 1.0);
}

OracleScore fidelity_oracle(const Vector& x_gen, std::int64_t subject_id, const World& w) {
  if (x_gen.size() != w.spec.data_dim()) throw ShapeError("fidelity_oracle: wrong data dimension");
  Vector z = w.unmix(x_gen);
  OracleScore s;
  s.value = block_cosine(z.head(w.spec.k), w.subjects.row(subject_id).transpose(), &s.degenerate);
  return s;
}

OracleScore alignment_oracle(const Vector& x_gen, std::int64_t subject_id, std::int64_t context_id, const World& w) {
  if (x_gen.size() != w.spec.data_dim()) throw ShapeError("alignment_oracle: wrong data dimension");
  Vector z = w.unmix(x_gen);
  OracleScore s;
  s.value = block_cosine(z.tail(w.spec.m), w.contexts.row(w.context_index(subject_id, context_id)).transpose(),
                         &s.degenerate);
  return s;
}

double subject_similarity(const Vector& a, const Vector& b, const World& w) {
  return block_cosine(w.unmix(a).head(w.spec.k), w.unmix(b).head(w.spec.k));
}

// ---- toy cars ----

void CarMixtureSpec::validate() const {
  if (K < 2) throw ValueError("toy cars: K must be >= 2");
  if (!(sigma > 0) || !(radius > 0)) throw ValueError("toy cars: radius and sigma must be > 0");
  if (2 * radius * std::sin(std::numbers::pi / K) < 6 * sigma)
    throw ValueError("toy cars: centers closer than 6 sigma");
  if (n_positive < 1 || n_negative < 1 || n_pretrain < K) throw ValueError("toy cars: sample counts too small");
}

ConditionPair car_condition() {
  ConditionPair c;
  c.c_img = Vector(0);
  c.c_text = Vector::Ones(1);
  return c;
}

CarMixture gen_car_mixture(const CarMixtureSpec& spec, std::uint64_t seed) {
  spec.validate();
  CarMixture mix;
  mix.spec = spec;
  mix.seed = seed;
  mix.centers.resize(spec.K, 2);
  for (int j = 0; j < spec.K; ++j) {
    const double a = 2 * std::numbers::pi * j / spec.K;
    mix.centers(j, 0) = spec.radius * std::cos(a);
    mix.centers(j, 1) = spec.radius * std::sin(a);
  }
  RngStream root(seed, tag_of("toy-cars"));
  auto draw = [&](RngStream r, int mode, std::int64_t index) {
    Triplet t;
    t.subject_id = mode;
    t.context_id = index;
    t.x_tgt = mix.centers.row(mode).transpose();
    t.x_tgt[0] += spec.sigma * r.normal();
    t.x_tgt[1] += spec.sigma * r.normal();
    t.cond = car_condition();
    return t;
  };
  RngStream pre = root.split(tag_of("pretrain"));
  for (int i = 0; i < spec.n_pretrain; ++i) {
    RngStream r = pre.split(i);
    int mode = static_cast<int>(r.below(spec.K));
    mix.pretrain.push_back(draw(r, mode, i));
  }
  RngStream pos = root.split(tag_of("positives"));
  for (int i = 0; i < spec.n_positive; ++i) mix.positives.push_back(draw(pos.split(i), 0, i));
  RngStream neg = root.split(tag_of("negatives"));
  for (int i = 0; i < spec.n_negative; ++i) {
    RngStream r = neg.split(i);
    int mode = 1 + static_cast<int>(r.below(spec.K - 1));
    mix.negatives.push_back(draw(r, mode, i));
  }
  return mix;
}

int mode_classifier(const Vector& x, const Matrix& centers) {
  if (centers.rows() == 0) throw ValueError("mode_classifier: no centers");
  int best = 0;
  double bd = (centers.row(0).transpose() - x).squaredNorm();
  for (int j = 1; j < centers.rows(); ++j) {
    double dj = (centers.row(j).transpose() - x).squaredNorm();
    if (dj < bd) {
      bd = dj;
      best = j;
    }
  }
  return best;
}

}  // namespace sfolab
