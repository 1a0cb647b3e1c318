#include <filesystem>
#include <fstream>

#include "ccmqd/errors.hpp"
#include "ccmqd/io.hpp"
#include "test_util.hpp"

using namespace ccmqd;
using namespace ccmqd::test;
namespace fs = std::filesystem;

namespace {

std::string config_error(const Json& j) {
  try {
    experiment_from_json(j);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return {};
}

RunResult small_run(bool keep_states) {
  TrainConfig cfg;
  cfg.schedule.depth = 2;
  cfg.schedule.kraus_count = 2;
  cfg.backward_depth = 2;
  cfg.backward_kraus = 2;
  cfg.max_iters = 10;
  cfg.seeds = {0, 1};
  cfg.keep_states = keep_states;
  return run_experiment(cfg);
}

}  // namespace

TEST(MatrixJson, RoundTripIsExact) {
  Rng rng(1);
  const CMatrix m = random_matrix(3, 5, rng);
  EXPECT_EQ(matrix_from_json(Json::parse(matrix_to_json(m).dump())), m);
  Json bad = matrix_to_json(m);
  bad["rows"] = 4;
  EXPECT_THROW(matrix_from_json(bad), DimensionError);
}

TEST(ChannelJson, RoundTrip) {
  Rng rng(2);
  const Channel k(haar_random_channel(4, 3, rng), 2);
  const Channel back = channel_from_json(Json::parse(channel_to_json(k, NoiseFamily::haar_random, 9).dump()));
  ASSERT_NE(back.kraus(), nullptr);
  EXPECT_EQ(back.repeats(), 2);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(back.kraus()->ops()[i], k.kraus()->ops()[i]);

  const Channel d(DepolarizingMap(2, 0.3));
  const Channel dback = channel_from_json(channel_to_json(d, NoiseFamily::depolarizing, 0));
  ASSERT_NE(dback.depolarizing(), nullptr);
  EXPECT_EQ(dback.depolarizing()->strength(), 0.3);
}

TEST(ModelJson, RoundTripIsExact) {
  Rng rng(3);
  const BackwardModel m = init_backward(3, 2, 4, rng);
  const BackwardModel back = model_from_json(Json::parse(model_to_json(m).dump()));
  ASSERT_EQ(back.depth(), 3);
  EXPECT_EQ(back.kraus_count, 2);
  for (int t = 0; t < 3; ++t) EXPECT_EQ(back.blocks[std::size_t(t)].kappa(), m.blocks[std::size_t(t)].kappa());
}

TEST(ExperimentJson, RoundTrip) {
  ExperimentConfig cfg;
  cfg.train.n_qubits = 2;
  cfg.train.schedule.family = NoiseFamily::depolarizing;
  cfg.train.schedule.p_max = 0.6;
  cfg.train.loss.lambda = 0.1;
  cfg.train.strategy = Strategy::hqto;
  cfg.train.seeds = {7, 8};
  cfg.output_dir = "elsewhere";
  cfg.export_bloch = true;
  cfg.note = "a note";
  const Json j = experiment_to_json(cfg);
  const ExperimentConfig back = experiment_from_json(Json::parse(j.dump()));
  EXPECT_EQ(experiment_to_json(back), j);
  EXPECT_EQ(config_hash(back.train), config_hash(cfg.train));
  cfg.train.loss.lambda = 0.2;
  EXPECT_NE(config_hash(back.train), config_hash(cfg.train));
  EXPECT_EQ(config_hash(cfg.train).size(), 16u);
}

TEST(ExperimentJson, UnknownKeysAreNamed) {
  Json j = experiment_to_json(ExperimentConfig{});
  j["backward"]["depth"] = 3;
  EXPECT_NE(config_error(j).find("backward.depth"), std::string::npos);
  j = experiment_to_json(ExperimentConfig{});
  j["colour"] = "red";
  EXPECT_NE(config_error(j).find("colour"), std::string::npos);
}

TEST(ExperimentJson, SchemaVersionAndValues) {
  Json j = experiment_to_json(ExperimentConfig{});
  j["schema_version"] = 2;
  EXPECT_NE(config_error(j).find("schema_version"), std::string::npos);
  j = experiment_to_json(ExperimentConfig{});
  j["n_qubits"] = "two";
  EXPECT_NE(config_error(j).find("n_qubits"), std::string::npos);
  j = experiment_to_json(ExperimentConfig{});
  j["seeds"] = Json::array();
  EXPECT_FALSE(config_error(j).empty());
  j = experiment_to_json(ExperimentConfig{});
  j["forward"]["family"] = "gaussian";
  EXPECT_FALSE(config_error(j).empty());
}

TEST(ExperimentJson, MissingSectionsTakeDefaults) {
  const ExperimentConfig cfg = experiment_from_json(Json{{"schema_version", 1}});
  const ExperimentConfig def;
  EXPECT_EQ(train_config_to_json(cfg.train), train_config_to_json(def.train));
}

TEST(RunResultJson, RoundTripIsExact) {
  for (bool keep : {false, true}) {
    const RunResult run = small_run(keep);
    const Json j = run_result_to_json(run);
    const RunResult back = run_result_from_json(Json::parse(j.dump()));
    EXPECT_EQ(run_result_to_json(back), j);
    EXPECT_EQ(back.mean, run.mean);
    ASSERT_EQ(back.seeds.size(), run.seeds.size());
    for (std::size_t i = 0; i < run.seeds.size(); ++i) {
      EXPECT_EQ(back.seeds[i].fidelity_curves, run.seeds[i].fidelity_curves);
      EXPECT_EQ(back.seeds[i].model.has_value(), keep);
      EXPECT_EQ(back.seeds[i].backward_states.size(), run.seeds[i].backward_states.size());
    }
  }
}

TEST(Files, AtomicWriteAndRead) {
  const fs::path dir = fs::temp_directory_path() / "ccmqd_io_test";
  fs::remove_all(dir);
  write_text_atomic(dir / "sub" / "a.json", R"({"x": 1})");
  EXPECT_EQ(read_json_file(dir / "sub" / "a.json").at("x"), 1);
  EXPECT_FALSE(fs::exists(dir / "sub" / "a.json.tmp"));
  EXPECT_THROW(read_json_file(dir / "missing.json"), ConfigError);
  std::ofstream(dir / "bad.json") << "{not json";
  EXPECT_THROW(read_json_file(dir / "bad.json"), ConfigError);
  fs::remove_all(dir);
}

TEST(Sweep, GridOrderAndLabels) {
  const Json j = Json::parse(R"({
    "schema_version": 1,
    "base": {"forward": {"L_f": 3}, "backward": {"L_b": 3}},
    "note": "shared",
    "grid": {"strategy": ["sqco", "hqto"], "qubits": [1, 2, 3]}
  })");
  const auto cells = expand_sweep(j);
  ASSERT_EQ(cells.size(), 6u);
  EXPECT_EQ(cells[0].label, "qubits=1,strategy=sqco");
  EXPECT_EQ(cells[1].config.train.n_qubits, 1);
  EXPECT_EQ(cells[1].config.train.strategy, Strategy::hqto);
  EXPECT_EQ(cells[2].config.train.n_qubits, 2);
  EXPECT_EQ(cells[5].config.train.n_qubits, 3);
  for (const SweepCell& c : cells) {
    EXPECT_EQ(c.config.train.schedule.depth, 3);
    EXPECT_EQ(c.config.note, "shared");
  }
}

TEST(Sweep, ExplicitCells) {
  const Json j = Json::parse(R"({
    "schema_version": 1,
    "cells": [{"qubits": 2, "L_b": 6, "K_b": 3}, {"qubits": 1, "lambda": 0.5}]
  })");
  const auto cells = expand_sweep(j);
  ASSERT_EQ(cells.size(), 2u);
  EXPECT_EQ(cells[0].config.train.backward_depth, 6);
  EXPECT_EQ(cells[0].config.train.backward_kraus, 3);
  EXPECT_EQ(cells[1].config.train.loss.lambda, 0.5);
}

TEST(Sweep, Errors) {
  EXPECT_THROW(expand_sweep(Json::parse(R"({"schema_version": 1, "grid": {}})")), ConfigError);
  EXPECT_THROW(expand_sweep(Json::parse(R"({"schema_version": 1})")), ConfigError);
  EXPECT_THROW(expand_sweep(Json::parse(R"({"schema_version": 1, "grid": {"qubits": []}})")), ConfigError);
  EXPECT_THROW(expand_sweep(Json::parse(R"({"schema_version": 1, "grid": {"depth": [1]}})")), ConfigError);
  EXPECT_THROW(expand_sweep(Json::parse(R"({"schema_version": 1, "cells": [], "grid": {"qubits": [1]}})")),
               ConfigError);
  // sqco with mismatched depths is rejected per cell
  EXPECT_THROW(expand_sweep(Json::parse(R"({"schema_version": 1, "cells": [{"strategy": "sqco", "L_b": 4}]})")),
               ConfigError);
}
