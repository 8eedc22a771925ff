#include "sfolab/cli.hpp"
#include "sfolab/config.hpp"
#include "sfolab/evalkit.hpp"
#include "sfolab/io.hpp"
#include "sfolab/trainer.hpp"

#include <gtest/gtest.h>

#include <filesystem>

using namespace sfolab;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("sfolab_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

int run(std::vector<std::string> args) {
  args.insert(args.begin(), "sfolab");
  return dispatch(args);
}

// A world and budgets small enough for a full command chain in a few seconds.
const char* kTinyConfig = R"({
  "world": {"k": 4, "m": 4, "n_subjects": 8, "contexts_per_subject": 4},
  "model": {"hidden_widths": [16, 16]},
  "pretrain": {"iterations": 30, "batch_size": 16},
  "sft": {"iterations": 20, "batch_size": 8},
  "sfo": {"iterations": 10, "batch_size": 4, "beta": 10},
  "synth": {"sampler": {"steps": 4}},
  "eval": {"n_samples": 2, "sampler": {"steps": 4}},
  "ablation": [
    {"label": "sft-base", "kind": "sft-base"},
    {"label": "cdns", "kind": "sfo", "strategy": "cdns"}
  ]
})";

}  // namespace

TEST(Config, EmptyObjectKeepsDefaults) {
  const PipelineConfig c = pipeline_from_json(json::object());
  EXPECT_EQ(c, PipelineConfig{});
  EXPECT_EQ(c.sfo.beta, 1000.0);
  EXPECT_EQ(c.sfo.timestep, TimestepDist::logit_normal(0, 1));
  EXPECT_EQ(c.sfo.adapter_rank, 16);
  EXPECT_EQ(c.sft.adapter_rank, 4);
  EXPECT_EQ(c.sfo.iterations, 300);
  EXPECT_EQ(c.sfo.batch_size, 4);
  EXPECT_EQ(c.eval.sampler.guidance_scale, 3.5);
}

TEST(Config, NegativeBetaNamesKey) {
  try {
    pipeline_from_json(json::parse(R"({"sfo": {"beta": -1}})"));
    FAIL() << "no throw";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("beta"), std::string::npos);
  }
  try {
    train_config_from_json(json::parse(R"({"beta": -1})"), default_train_config(Stage::sfo));
    FAIL() << "no throw";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("beta"), std::string::npos);
  }
  EXPECT_EQ(train_config_from_json(json::object(), default_train_config(Stage::sfo)), default_train_config(Stage::sfo));
}

TEST(Config, UnknownKeyAndWrongType) {
  EXPECT_THROW(pipeline_from_json(json::parse(R"({"sfo": {"betta": 1}})")), ConfigError);
  EXPECT_THROW(pipeline_from_json(json::parse(R"({"sfo": {"iterations": "many"}})")), ConfigError);
  EXPECT_THROW(pipeline_from_json(json::parse(R"({"preset": "moon"})")), ConfigError);
}

TEST(Config, ParseErrorHasLineAndColumn) {
  try {
    parse_json_text("{\n  \"sfo\": {\n    \"beta\": ,\n  }\n}", "cfg.json");
    FAIL() << "no throw";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("cfg.json:3:"), std::string::npos) << e.what();
  }
}

TEST(Config, RoundTrip) {
  for (Preset p : {Preset::subject_world, Preset::toy_cars}) {
    const PipelineConfig c = preset_config(p);
    EXPECT_EQ(pipeline_from_json(json::parse(to_json(c).dump())), c);
  }
}

TEST(Config, SchemaListsSections) {
  const json s = config_schema();
  for (const char* k : {"world", "cars", "model", "pretrain", "sft", "sfo", "synth", "eval"})
    EXPECT_TRUE(s["sections"].contains(k)) << k;
  EXPECT_EQ(s["sections"]["sfo"]["beta"]["default"], 1000.0);
}

TEST(Dispatch, UsageErrors) {
  EXPECT_EQ(run({}), 1);
  EXPECT_EQ(run({"no-such-command"}), 1);
  EXPECT_EQ(run({"--help"}), 0);
  EXPECT_EQ(run({"gen-data", "--preset", "moon", "--seed", "1", "--out", fresh_dir("moon").string()}), 1);
}

TEST(Dispatch, MissingCheckpointWritesNothing) {
  const fs::path dir = fresh_dir("missing");
  const fs::path out = dir / "sfo.ckpt";
  EXPECT_EQ(run({"train-sfo", "--quads", (dir / "q.bin").string(), "--seed", "1", "--out", out.string()}), 1);
  EXPECT_TRUE(fs::is_empty(dir));
}

TEST(Dispatch, GenDataToyCars) {
  const fs::path dir = fresh_dir("cars");
  ASSERT_EQ(run({"gen-data", "--preset", "toy-cars", "--seed", "7", "--out", (dir / "d").string()}), 0);
  const json m = json::parse(read_file((dir / "d" / "manifest.json").string()));
  EXPECT_EQ(m["kind"], "sfolab-dataset");
  for (auto& [key, f] : m["files"].items())
    EXPECT_EQ(sha256_file((dir / "d" / f["path"].get<std::string>()).string()), f["sha256"]) << key;
  EXPECT_TRUE(fs::exists(dir / "d" / "run_manifest.json") || fs::exists(dir / "d.manifest.json"));
}

TEST(Dispatch, CommandChainEndToEnd) {
  const fs::path dir = fresh_dir("chain");
  const std::string cfg = (dir / "tiny.json").string();
  write_file_atomic(cfg, kTinyConfig);
  const std::string d = (dir / "data").string();
  auto p = [&](const char* n) { return (dir / n).string(); };
  ASSERT_EQ(run({"gen-data", "--preset", "subject-world", "--seed", "3", "--config", cfg, "--out", d}), 0);
  ASSERT_EQ(run({"pretrain", "--data", d, "--seed", "3", "--config", cfg, "--out", p("base.ckpt"), "--metrics",
                 p("pre.jsonl")}),
            0);
  ASSERT_EQ(run({"train-sft", "--checkpoint", p("base.ckpt"), "--data", d, "--seed", "3", "--config", cfg, "--out",
                 p("sft.ckpt")}),
            0);
  ASSERT_EQ(run({"synth-negatives", "--strategy", "cdns", "--checkpoint", p("sft.ckpt"), "--in", d, "--seed", "3",
                 "--config", cfg, "--out", p("q.bin"), "--threads", "2"}),
            0);
  ASSERT_EQ(run({"train-sfo", "--checkpoint", p("sft.ckpt"), "--quads", p("q.bin"), "--seed", "3", "--config", cfg,
                 "--out", p("sfo.ckpt"), "--metrics", p("sfo.jsonl")}),
            0);
  ASSERT_EQ(run({"eval", "--checkpoint", p("sfo.ckpt"), "--data", d, "--seed", "3", "--config", cfg, "--out",
                 p("eval_sfo.json")}),
            0);
  ASSERT_EQ(run({"eval", "--checkpoint", p("sft.ckpt"), "--data", d, "--seed", "3", "--config", cfg, "--out",
                 p("eval_sft.json")}),
            0);
  ASSERT_EQ(run({"sample", "--checkpoint", p("sfo.ckpt"), "--data", d, "--seed", "3", "--config", cfg, "--out",
                 p("samples.csv")}),
            0);
  ASSERT_EQ(run({"report", "--from", p("eval_sft.json"), p("eval_sfo.json"), "--out", p("report.csv")}), 0);

  const Checkpoint sfo = load_checkpoint(p("sfo.ckpt"));
  EXPECT_EQ(sfo.stage, Stage::sfo);
  EXPECT_EQ(sfo.config.iterations, 10);
  EXPECT_TRUE(sfo.stack.is_enabled("sfo"));
  const std::string csv = read_file(p("report.csv"));
  EXPECT_EQ(csv.substr(0, csv.find('\n')), AblationTable::csv_header());
  EXPECT_NE(csv.find(",sfo,ok,"), std::string::npos);
  const json manifest = json::parse(read_file(p("sfo.ckpt") + ".manifest.json"));
  EXPECT_EQ(manifest["command"], "train-sfo");
  EXPECT_EQ(manifest["seed"], 3);
  EXPECT_EQ(manifest["outputs"].size(), 2u);
  EXPECT_EQ(json::parse(read_file(p("q.bin") + ".gapstats.json"))["count"], 24);

  // Tampering with an input is caught through the dataset manifest.
  write_file_atomic(d + "/train.bin", "garbage");
  EXPECT_EQ(run({"pretrain", "--data", d, "--seed", "3", "--config", cfg, "--out", p("again.ckpt")}), 2);
}

TEST(Dispatch, PipelineIsReproducible) {
  const fs::path dir = fresh_dir("pipe");
  const std::string cfg = (dir / "tiny.json").string();
  write_file_atomic(cfg, kTinyConfig);
  auto go = [&](const std::string& name, const char* threads) {
    const std::string out = (dir / name).string();
    EXPECT_EQ(run({"pipeline", "--preset", "subject-world", "--seed", "5", "--config", cfg, "--threads", threads,
                   "--out", out}),
              0);
    return read_file(out + "/metrics.jsonl") + read_file(out + "/report.csv");
  };
  const std::string a = go("a", "1");
  EXPECT_EQ(a, go("b", "3"));
  EXPECT_FALSE(a.empty());
}
