#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "core/errors.hpp"
#include "core/train_config.hpp"

using namespace rehand;

TEST_CASE("defaults validate and hash stably") {
  TrainConfig c;
  c.validate();
  CHECK(config_hash(c) == config_hash(TrainConfig{}));

  // Locations are not part of the experiment identity.
  TrainConfig located = c;
  located.dataset_dir = "/somewhere/data";
  located.out_dir = "/somewhere/out";
  located.backgrounds = "/somewhere/bg.txt";
  CHECK(config_hash(located) == config_hash(c));

  // Every learning-relevant field moves the hash.
  auto differs = [&](auto mutate) {
    TrainConfig m = c;
    mutate(m);
    CHECK(config_hash(m) != config_hash(c));
  };
  differs([](TrainConfig& m) { m.weights.gamma = 0.5; });
  differs([](TrainConfig& m) { m.weights.norm = Norm::L2; });
  differs([](TrainConfig& m) { m.seed = 99; });
  differs([](TrainConfig& m) { m.batch_size = 8; });
  differs([](TrainConfig& m) { m.initial_lr = 2e-4; });
  differs([](TrainConfig& m) { m.corr_grads = CorrGradMode::Phase2Only; });
  differs([](TrainConfig& m) { m.intrinsics = IntrinsicsMode::GroundTruth; });
  differs([](TrainConfig& m) {
    m.recycle = false;
    m.corr = false;
    m.weights.beta = 0.0;
    m.weights.gamma = 0.0;
  });
}

TEST_CASE("canonical JSON round-trips through the parser") {
  TrainConfig c;
  c.seed = 17;
  c.batch_size = 8;
  c.weights.alpha = 2.0;
  c.weights.gamma = 0.25;
  c.weights.norm = Norm::L2;
  c.corr_grads = CorrGradMode::Phase2Only;
  c.intrinsics = IntrinsicsMode::GroundTruth;
  c.initial_lr = 3e-4;
  c.plateau_epochs = 7;

  TrainConfig back = parse_train_config(canonical_config_json(c));
  CHECK(canonical_config_json(back) == canonical_config_json(c));
  CHECK(config_hash(back) == config_hash(c));
}

TEST_CASE("parser applies defaults and rejects junk") {
  TrainConfig def = parse_train_config("{}");
  CHECK(config_hash(def) == config_hash(TrainConfig{}));

  TrainConfig partial = parse_train_config(R"({"gamma": 2.5, "batch_size": 4})");
  CHECK(partial.weights.gamma == 2.5);
  CHECK(partial.batch_size == 4);
  CHECK(partial.weights.alpha == 1.0);

  auto rejected = [](const std::string& text) {
    try {
      parse_train_config(text);
      FAIL("expected rejection of ", text);
    } catch (const RehandError& e) {
      CHECK(e.kind() == ErrorKind::InvalidConfig);
    }
  };
  rejected("not json at all");
  rejected("[1,2,3]");
  rejected(R"({"batch_sze": 4})");            // unknown key
  rejected(R"({"batch_size": "four"})");      // wrong type
  rejected(R"({"batch_size": 0})");
  rejected(R"({"lr_decay": 1.0})");
  rejected(R"({"lr_decay": 0.0})");
  rejected(R"({"initial_lr": -1e-4})");
  rejected(R"({"plateau_epochs": 0})");
  rejected(R"({"weight_decay": -0.1})");
  rejected(R"({"norm": "l3"})");
  rejected(R"({"intrinsics": "psychic"})");
  rejected(R"({"corr_grads": "phase9"})");
  rejected(R"({"recycle": false})");          // beta still 1
  rejected(R"({"recycle": false, "beta": 0.0})");  // corr still on
  rejected(R"({"corr": false})");             // gamma still 1
  rejected(R"({"max_epochs": -1})");
  rejected(R"({"eval_every": 0})");
  rejected(R"({"max_bad_steps": 0})");

  // The baseline combination is legal.
  TrainConfig base = parse_train_config(
      R"({"recycle": false, "corr": false, "beta": 0.0, "gamma": 0.0})");
  CHECK_FALSE(base.recycle);
  CHECK_FALSE(base.corr);
}

TEST_CASE("mode names round-trip") {
  for (IntrinsicsMode m : {IntrinsicsMode::Predicted, IntrinsicsMode::GroundTruth})
    CHECK(intrinsics_mode_from_name(intrinsics_mode_name(m)) == m);
  for (CorrGradMode m : {CorrGradMode::BothPhases, CorrGradMode::Phase2Only})
    CHECK(corr_grad_mode_from_name(corr_grad_mode_name(m)) == m);
  CHECK_THROWS_AS(intrinsics_mode_from_name(""), RehandError);
  CHECK_THROWS_AS(corr_grad_mode_from_name("both phases"), RehandError);
}

TEST_CASE("config files load and surface IO failures") {
  auto dir = std::filesystem::temp_directory_path() / "rehand_cfg_test";
  std::filesystem::create_directories(dir);
  std::ofstream(dir / "ok.json") << R"({"seed": 99, "max_epochs": 3})";
  TrainConfig c = load_train_config(dir / "ok.json");
  CHECK(c.seed == 99);
  CHECK(c.max_epochs == 3);

  try {
    load_train_config(dir / "absent.json");
    FAIL("expected an IO error");
  } catch (const RehandError& e) {
    CHECK(e.kind() == ErrorKind::Io);
  }
}
