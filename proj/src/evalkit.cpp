#include "sfolab/evalkit.hpp"

#include "sfolab/objectives.hpp"

#include <algorithm>
#include <cstdio>

namespace sfolab {

ModeRatio mode_ratio(const Matrix& samples, const Matrix& centers) {
  ModeRatio r;
  r.counts.assign(static_cast<std::size_t>(centers.rows()), 0);
  for (Eigen::Index i = 0; i < samples.rows(); ++i)
    r.counts[mode_classifier(samples.row(i).transpose(), centers)] += 1;
  r.n = samples.rows();
  r.ratio = r.n ? static_cast<double>(r.counts[0]) / static_cast<double>(r.n) : 0.0;
  return r;
}

namespace {

Matrix noise_rows(const RngStream& rng, Eigen::Index n, Eigen::Index d) {
  Matrix x1(n, d);
  for (Eigen::Index j = 0; j < n; ++j) {
    RngStream r = rng.split(static_cast<std::uint64_t>(j));
    for (Eigen::Index c = 0; c < d; ++c) x1(j, c) = r.normal();
  }
  return x1;
}

}  // namespace

ModeRatio target_mode_ratio(const VelocityField& model, const ConditionPair& cond, const Matrix& centers,
                            const EvalSpec& spec, const RngStream& rng, int threads) {
  spec.validate();
  const Eigen::Index n = spec.n_samples, d = centers.cols();
  Matrix c = encode_condition(cond).transpose().replicate(n, 1);
  const Vector null = null_condition(static_cast<int>(cond.c_img.size()), static_cast<int>(cond.c_text.size()));
  Matrix x = euler_sample_rows(model, noise_rows(rng, n, d), c, null, spec.sampler, threads);
  return mode_ratio(x, centers);
}

ModeRatio target_mode_ratio(const AdapterStack& stack, const ConditionPair& cond, const Matrix& centers,
                            const EvalSpec& spec, const RngStream& rng, int threads) {
  const StackView view(stack);
  return target_mode_ratio(velocity_field(view), cond, centers, spec, rng, threads);
}

json to_json(const SweepStats& s) {
  return json{{"fidelity_mean", s.fidelity_mean}, {"fidelity_std", s.fidelity_std},
              {"alignment_mean", s.alignment_mean}, {"alignment_std", s.alignment_std},
              {"n", s.n}, {"degenerate", s.degenerate}};
}

SweepStats score_samples(const SweepSamples& s, const World& world) {
  SweepStats out;
  const Eigen::Index n = s.x.rows();
  if (n == 0) throw ValueError("score_samples: no samples");
  if (static_cast<Eigen::Index>(s.subject.size()) != n || static_cast<Eigen::Index>(s.context.size()) != n)
    throw ShapeError("score_samples: labels do not match the sample count");
  std::vector<double> fid(n), ali(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Vector x = s.x.row(i).transpose();
    OracleScore f = fidelity_oracle(x, s.subject[i], world);
    OracleScore a = alignment_oracle(x, s.subject[i], s.context[i], world);
    fid[i] = f.value;
    ali[i] = a.value;
    out.degenerate += f.degenerate || a.degenerate;
  }
  auto moments = [](const std::vector<double>& v, double& mean, double& std) {
    double sum = 0;
    for (double x : v) sum += x;
    mean = sum / v.size();
    double ss = 0;
    for (double x : v) ss += (x - mean) * (x - mean);
    std = std::sqrt(ss / v.size());
  };
  moments(fid, out.fidelity_mean, out.fidelity_std);
  moments(ali, out.alignment_mean, out.alignment_std);
  out.n = n;
  return out;
}

std::vector<Triplet> sweep_conditions(const std::vector<Triplet>& heldout, const World& world, const EvalSpec& spec) {
  std::vector<Triplet> out;
  for (const auto& t : heldout) {
    if (!world.is_heldout(t.subject_id))
      throw ValueError("subject_sweep: subject " + std::to_string(t.subject_id) + " belongs to the training split");
    const auto& ids = spec.held_out_subject_ids;
    if (ids.empty() || std::find(ids.begin(), ids.end(), t.subject_id) != ids.end()) out.push_back(t);
  }
  for (auto id : spec.held_out_subject_ids)
    if (!world.is_heldout(id))
      throw ValueError("subject_sweep: subject " + std::to_string(id) + " is not in the held-out split");
  if (out.empty()) throw ValueError("subject_sweep: no held-out conditions selected");
  return out;
}

SweepSamples generate_sweep(const VelocityField& model, const std::vector<Triplet>& conditions, const EvalSpec& spec,
                            const RngStream& rng, int threads) {
  spec.validate();
  const Eigen::Index per = spec.n_samples;
  const Eigen::Index rows = per * static_cast<Eigen::Index>(conditions.size());
  const Eigen::Index d = conditions.at(0).x_tgt.size();
  const int img = static_cast<int>(conditions[0].cond.c_img.size());
  const int text = static_cast<int>(conditions[0].cond.c_text.size());
  Matrix x1(rows, d), cond(rows, condition_dim(img, text));
  SweepSamples s;
  Eigen::Index r = 0;
  for (std::size_t i = 0; i < conditions.size(); ++i) {
    const Vector c = encode_condition(conditions[i].cond);
    const Matrix noise = noise_rows(rng.split(i), per, d);
    for (Eigen::Index j = 0; j < per; ++j, ++r) {
      x1.row(r) = noise.row(j);
      cond.row(r) = c.transpose();
      s.subject.push_back(conditions[i].subject_id);
      s.context.push_back(conditions[i].context_id);
    }
  }
  s.x = euler_sample_rows(model, x1, cond, null_condition(img, text), spec.sampler, threads);
  return s;
}

SweepStats subject_sweep(const VelocityField& model, const World& world, const std::vector<Triplet>& heldout,
                         const EvalSpec& spec, const RngStream& rng, int threads) {
  return score_samples(generate_sweep(model, sweep_conditions(heldout, world, spec), spec, rng, threads), world);
}

SweepStats subject_sweep(const AdapterStack& stack, const World& world, const std::vector<Triplet>& heldout,
                         const EvalSpec& spec, const RngStream& rng, int threads) {
  const StackView view(stack);
  return subject_sweep(velocity_field(view), world, heldout, spec, rng, threads);
}

// ---- tables ----

void AblationTable::add(AblationResult r) {
  if (find(r.label)) throw ValueError("ablation table: duplicate row label '" + r.label + "'");
  rows.push_back(std::move(r));
}

const AblationResult* AblationTable::find(const std::string& label) const {
  for (const auto& r : rows)
    if (r.label == label) return &r;
  return nullptr;
}

std::string AblationTable::csv_header() {
  return "table_version,label,status,fidelity_mean,fidelity_std,alignment_mean,alignment_std,n,target_mode_ratio";
}

namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

std::string AblationTable::to_csv() const {
  std::string out = csv_header() + "\n";
  for (const auto& r : rows) {
    out += std::to_string(kReportVersion) + "," + csv_field(r.label) + "," + (r.ok ? "ok" : "failed") + ",";
    if (r.ok && r.stats.n > 0)
      out += fmt(r.stats.fidelity_mean) + "," + fmt(r.stats.fidelity_std) + "," + fmt(r.stats.alignment_mean) + "," +
             fmt(r.stats.alignment_std) + "," + std::to_string(r.stats.n) + ",";
    else
      out += ",,,,,";
    out += r.target_mode_ratio ? fmt(*r.target_mode_ratio) : "";
    out += "\n";
  }
  return out;
}

json AblationTable::to_json() const {
  json rs = json::array();
  for (const auto& r : rows) {
    json j{{"label", r.label}, {"status", r.ok ? "ok" : "failed"}};
    if (!r.ok) j["error"] = r.error;
    if (r.stats.n > 0) j["stats"] = sfolab::to_json(r.stats);
    if (r.target_mode_ratio) j["target_mode_ratio"] = *r.target_mode_ratio;
    if (!r.extra.empty()) j["extra"] = r.extra;
    rs.push_back(j);
  }
  return json{{"table_version", kReportVersion}, {"rows", rs}};
}

AblationTable run_ablation(const std::vector<AblationRow>& grid, const RowDriver& driver) {
  AblationTable table;
  for (const auto& row : grid) {
    AblationResult r;
    try {
      r = driver(row);
      r.label = row.label;
    } catch (const std::exception& e) {
      r = AblationResult{};
      r.label = row.label;
      r.ok = false;
      r.error = e.what();
    }
    table.add(std::move(r));
  }
  return table;
}

}  // namespace sfolab
