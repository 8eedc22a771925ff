#include "sfolab/io.hpp"
#include "sfolab/trainer.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

using namespace sfolab;

namespace {

struct Small {
  World world;
  WorldData data;
  MlpSpec arch;
};

const Small& small() {
  static const Small s = [] {
    WorldSpec ws;
    ws.k = 3;
    ws.m = 3;
    ws.n_subjects = 6;
    ws.contexts_per_subject = 4;
    Small out;
    out.world = make_world(ws, 5);
    out.data = gen_world(out.world);
    out.arch.hidden_widths = {16, 16};
    return out;
  }();
  return s;
}

TrainConfig cfg(Stage stage, int iterations) {
  TrainConfig c = default_train_config(stage);
  c.iterations = iterations;
  c.batch_size = 8;
  c.seed = 3;
  return c;
}

Checkpoint base_ckpt() {
  static const Checkpoint c = pretrain_base(small().data.train, small().arch, cfg(Stage::pretrain, 20));
  return c;
}

Checkpoint sft_ckpt() {
  static const Checkpoint c = train_sft(base_ckpt(), small().data.train, cfg(Stage::sft, 20));
  return c;
}

// Pairs each training triplet with another record's scene, tagged as self-play.
std::vector<Quadruplet> quads(Provenance p = Provenance::selfplay) {
  const auto& tr = small().data.train;
  std::vector<Quadruplet> out;
  for (std::size_t i = 0; i < tr.size(); ++i) {
    Quadruplet q;
    q.pos = tr[i];
    q.x_neg = tr[(i + 5) % tr.size()].x_tgt;
    q.neg_cond = tr[i].cond;
    q.provenance = p;
    out.push_back(q);
  }
  return out;
}

Matrix probe(const AdapterStack& s) {
  RngStream rng(77);
  return stack_forward(s, normal_matrix(rng, 6, s.spec.input_dim));
}

std::string tmp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("sfolab_trainer_" + name)).string();
}

}  // namespace

TEST(Checkpoint, RoundTrip) {
  Checkpoint c = sft_ckpt();
  c.extra["note"] = "x";
  const std::string bytes = encode_checkpoint(c);
  EXPECT_EQ(decode_checkpoint(bytes), c);
  const std::string path = tmp_path("rt.ckpt");
  save_checkpoint(path, c);
  EXPECT_EQ(load_checkpoint(path), c);
  EXPECT_EQ(checkpoint_hash(c), checkpoint_hash(load_checkpoint(path)));
  std::filesystem::remove(path);
}

TEST(Checkpoint, CorruptionDetected) {
  std::string bytes = encode_checkpoint(sft_ckpt());
  bytes[bytes.size() / 2] ^= 0x01;
  try {
    decode_checkpoint(bytes);
    FAIL() << "no throw";
  } catch (const IoError& e) {
    EXPECT_NE(std::string(e.what()).find("hash"), std::string::npos);
  }
  EXPECT_THROW(decode_checkpoint(bytes.substr(0, 20)), IoError);
}

TEST(Checkpoint, UnknownVersionRejected) {
  std::string bytes = encode_checkpoint(base_ckpt());
  // Bump the version field and re-seal so only the version check can fire.
  std::string body = bytes.substr(0, bytes.size() - 64);
  body[8] = 7;
  body += sha256_hex(body);
  try {
    decode_checkpoint(body);
    FAIL() << "no throw";
  } catch (const IoError& e) {
    EXPECT_NE(std::string(e.what()).find("version 7"), std::string::npos);
  }
}

TEST(Sft, ZeroIterationsMatchesBase) {
  const Checkpoint s = train_sft(base_ckpt(), small().data.train, cfg(Stage::sft, 0));
  EXPECT_EQ(probe(s.stack), probe(base_ckpt().stack));
  EXPECT_TRUE(s.stack.is_enabled("ref"));
  EXPECT_EQ(s.stack.find("ref")->rank, 4);
}

TEST(Sft, TrainsOnlyItsAdapter) {
  const Checkpoint s = sft_ckpt();
  EXPECT_EQ(s.stack.base, base_ckpt().stack.base);
  EXPECT_NE(probe(s.stack), probe(base_ckpt().stack));
}

TEST(Sft, AdditionalAdapterStacksOnRef) {
  TrainConfig c = cfg(Stage::sft, 5);
  c.adapter_name = "sft-additional";
  const Checkpoint s = train_sft(sft_ckpt(), small().data.train, c);
  EXPECT_EQ(*s.stack.find("ref"), *sft_ckpt().stack.find("ref"));
  EXPECT_EQ(s.stack.enabled, (std::vector<std::string>{"ref", "sft-additional"}));
}

TEST(Pretrain, LossDrops) {
  std::vector<double> losses;
  TrainConfig c = cfg(Stage::pretrain, 400);
  c.batch_size = 64;
  pretrain_base(small().data.train, small().arch, c, {[&](const json& j) { losses.push_back(j["loss"]); }, {}});
  ASSERT_EQ(losses.size(), 400u);
  double head = 0, tail = 0;
  for (int i = 0; i < 20; ++i) {
    head += losses[i];
    tail += losses[380 + i];
  }
  EXPECT_LT(tail, 0.5 * head);
}

TEST(Sfo, FirstIterationIsLn2AndOnlySfoMoves) {
  std::vector<json> lines;
  TrainConfig c = cfg(Stage::sfo, 10);
  const Checkpoint out = train_sfo(sft_ckpt(), quads(), c, {[&](const json& j) { lines.push_back(j); }, {}});
  ASSERT_EQ(lines.size(), 10u);
  EXPECT_NEAR(lines[0]["loss"].get<double>(), std::log(2.0), 1e-9);
  EXPECT_EQ(lines[0]["inner"].get<double>(), 0.0);
  for (const char* k : {"stage", "iteration", "loss", "delta_policy", "delta_ref", "inner", "implicit_accuracy"})
    EXPECT_TRUE(lines[3].contains(k)) << k;
  EXPECT_FALSE(lines[3].contains("wall_ms"));
  EXPECT_EQ(out.stack.base, sft_ckpt().stack.base);
  EXPECT_EQ(*out.stack.find("ref"), *sft_ckpt().stack.find("ref"));
  EXPECT_NE(*out.stack.find("sfo"), LowRankAdapter{});
  EXPECT_EQ(out.stack.find("sfo")->rank, 16);
  EXPECT_EQ(out.extra["sfo_provenance"], "selfplay");
}

TEST(Sfo, DirectTrainsRef) {
  TrainConfig c = cfg(Stage::sfo, 5);
  c.direct = true;
  const Checkpoint out = train_sfo(sft_ckpt(), quads(), c);
  EXPECT_EQ(out.stack.find("sfo"), nullptr);
  EXPECT_NE(*out.stack.find("ref"), *sft_ckpt().stack.find("ref"));
  EXPECT_EQ(out.stack.base, sft_ckpt().stack.base);
}

TEST(Sfo, RejectsMixedProvenance) {
  auto q = quads();
  q[3].provenance = Provenance::cdns;
  try {
    train_sfo(sft_ckpt(), q, cfg(Stage::sfo, 2));
    FAIL() << "no throw";
  } catch (const ValueError& e) {
    EXPECT_NE(std::string(e.what()).find("record 3"), std::string::npos);
  }
  TrainConfig c = cfg(Stage::sfo, 2);
  c.allow_mixed_provenance = true;
  EXPECT_NO_THROW(train_sfo(sft_ckpt(), q, c));
}

TEST(Sfo, RequiresRef) {
  EXPECT_THROW(train_sfo(base_ckpt(), quads(), cfg(Stage::sfo, 2)), ValueError);
  EXPECT_THROW(train_sfo(sft_ckpt(), quads(), cfg(Stage::sft, 2)), ValueError);
}

TEST(Trainer, DeterministicHash) {
  auto run = [] { return checkpoint_hash(train_sfo(sft_ckpt(), quads(), cfg(Stage::sfo, 15))); };
  EXPECT_EQ(run(), run());
  TrainConfig other = cfg(Stage::sfo, 15);
  other.seed = 4;
  EXPECT_NE(run(), checkpoint_hash(train_sfo(sft_ckpt(), quads(), other)));
}

TEST(Trainer, DivergenceKeepsLastGood) {
  auto data = small().data.train;
  data[0].x_tgt[0] = std::nan("");
  TrainConfig c = cfg(Stage::sft, 50);
  c.batch_size = static_cast<int>(data.size()) * 4;
  try {
    train_sft(base_ckpt(), data, c);
    FAIL() << "no throw";
  } catch (const DivergenceError& e) {
    EXPECT_EQ(e.iteration, 0);
    EXPECT_EQ(e.last_good.iteration, 0);
    EXPECT_EQ(e.last_good.stack.base, base_ckpt().stack.base);
    EXPECT_NE(std::string(e.what()).find("iteration 0"), std::string::npos);
  }
}

TEST(Trainer, WallTimeOnlyWhenAsked) {
  TrainConfig c = cfg(Stage::sft, 2);
  c.metrics_wall_time = true;
  std::vector<json> lines;
  train_sft(base_ckpt(), small().data.train, c, {[&](const json& j) { lines.push_back(j); }, {}});
  EXPECT_TRUE(lines[1].contains("wall_ms"));
}

TEST(Trainer, EvalHookCadence) {
  TrainConfig c = cfg(Stage::sft, 9);
  c.eval_every = 3;
  std::vector<std::int64_t> seen;
  std::vector<json> lines;
  train_sft(base_ckpt(), small().data.train, c,
            {[&](const json& j) { lines.push_back(j); },
             [&](const AdapterStack&, std::int64_t it) {
               seen.push_back(it);
               return json{{"at", it}};
             }});
  EXPECT_EQ(seen, (std::vector<std::int64_t>{3, 6, 9}));
  EXPECT_EQ(lines[2]["eval"]["at"], 3);
  EXPECT_FALSE(lines[3].contains("eval"));
}

TEST(Trainer, StageMismatchRejected) {
  EXPECT_THROW(pretrain_base(small().data.train, small().arch, cfg(Stage::sft, 1)), ValueError);
  TrainConfig bad = cfg(Stage::sfo, 1);
  bad.beta = -1;
  EXPECT_THROW(train_sfo(sft_ckpt(), quads(), bad), ConfigError);
}

TEST(Jsonl, WritesOneLinePerRecord) {
  const std::string path = tmp_path("m.jsonl");
  {
    JsonlWriter w(path);
    w(json{{"a", 1}});
    w(json{{"b", 2}});
    EXPECT_EQ(w.text(), "{\"a\":1}\n{\"b\":2}\n");
  }
  EXPECT_EQ(read_file(path), "{\"a\":1}\n{\"b\":2}\n");
  std::filesystem::remove(path);
}
