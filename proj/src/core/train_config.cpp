#include "core/train_config.hpp"

#include <cmath>
#include <fstream>
#include <set>

#include <json.hpp>

#include "core/errors.hpp"
#include "core/hash.hpp"

namespace rehand {

const char* intrinsics_mode_name(IntrinsicsMode m) {
  return m == IntrinsicsMode::Predicted ? "predicted" : "ground-truth";
}

IntrinsicsMode intrinsics_mode_from_name(const std::string& name) {
  if (name == "predicted") return IntrinsicsMode::Predicted;
  if (name == "ground-truth") return IntrinsicsMode::GroundTruth;
  throw_invalid_config("unknown intrinsics mode: " + name);
}

const char* corr_grad_mode_name(CorrGradMode m) {
  return m == CorrGradMode::BothPhases ? "both" : "phase2";
}

CorrGradMode corr_grad_mode_from_name(const std::string& name) {
  if (name == "both") return CorrGradMode::BothPhases;
  if (name == "phase2") return CorrGradMode::Phase2Only;
  throw_invalid_config("unknown correlation gradient mode: " + name);
}

void TrainConfig::validate() const {
  weights.validate();
  if (batch_size < 1) throw_invalid_config("batch_size must be at least 1");
  if (max_epochs < 0) throw_invalid_config("max_epochs must be non-negative");
  if (!(initial_lr > 0.0) || !std::isfinite(initial_lr))
    throw_invalid_config("initial_lr must be positive and finite");
  if (!(lr_decay > 0.0 && lr_decay < 1.0))
    throw_invalid_config("lr_decay must lie strictly between 0 and 1");
  if (plateau_epochs < 1) throw_invalid_config("plateau_epochs must be at least 1");
  if (weight_decay < 0.0 || !std::isfinite(weight_decay))
    throw_invalid_config("weight_decay must be non-negative and finite");
  if (eval_every < 1) throw_invalid_config("eval_every must be at least 1");
  if (max_bad_steps < 1) throw_invalid_config("max_bad_steps must be at least 1");
  if (!recycle && weights.beta != 0.0)
    throw_invalid_config("recycle disabled but beta is non-zero");
  if (corr && !recycle)
    throw_invalid_config("self-correlation needs the second phase enabled");
  if (!corr && weights.gamma != 0.0)
    throw_invalid_config("self-correlation disabled but gamma is non-zero");
}

std::string canonical_config_json(const TrainConfig& c) {
  nlohmann::json j;  // object keys serialize sorted, which fixes the order
  j["alpha"] = c.weights.alpha;
  j["batch_size"] = c.batch_size;
  j["beta"] = c.weights.beta;
  j["corr"] = c.corr;
  j["corr_grads"] = corr_grad_mode_name(c.corr_grads);
  j["eval_every"] = c.eval_every;
  j["gamma"] = c.weights.gamma;
  j["initial_lr"] = c.initial_lr;
  j["intrinsics"] = intrinsics_mode_name(c.intrinsics);
  j["lr_decay"] = c.lr_decay;
  j["max_bad_steps"] = c.max_bad_steps;
  j["max_epochs"] = c.max_epochs;
  j["norm"] = norm_name(c.weights.norm);
  j["plateau_epochs"] = c.plateau_epochs;
  j["recycle"] = c.recycle;
  j["seed"] = c.seed;
  j["weight_decay"] = c.weight_decay;
  return j.dump();
}

uint64_t config_hash(const TrainConfig& c) {
  std::string s = canonical_config_json(c);
  return fnv1a64(s.data(), s.size());
}

TrainConfig parse_train_config(const std::string& json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw_invalid_config(std::string("malformed config JSON: ") + e.what());
  }
  if (!j.is_object()) throw_invalid_config("config must be a JSON object");

  static const std::set<std::string> known = {
      "dataset_dir", "out_dir",        "backgrounds",   "seed",        "batch_size",
      "max_epochs",  "initial_lr",     "lr_decay",      "plateau_epochs", "weight_decay",
      "alpha",       "beta",           "gamma",         "norm",        "recycle",
      "corr",        "intrinsics",     "corr_grads",    "eval_every",  "max_bad_steps"};
  for (const auto& [key, value] : j.items())
    if (!known.count(key)) throw_invalid_config("unknown config key: " + key);

  TrainConfig c;
  try {
    if (j.contains("dataset_dir")) c.dataset_dir = j["dataset_dir"].get<std::string>();
    if (j.contains("out_dir")) c.out_dir = j["out_dir"].get<std::string>();
    if (j.contains("backgrounds")) c.backgrounds = j["backgrounds"].get<std::string>();
    if (j.contains("seed")) c.seed = j["seed"].get<uint64_t>();
    if (j.contains("batch_size")) c.batch_size = j["batch_size"].get<int>();
    if (j.contains("max_epochs")) c.max_epochs = j["max_epochs"].get<int>();
    if (j.contains("initial_lr")) c.initial_lr = j["initial_lr"].get<double>();
    if (j.contains("lr_decay")) c.lr_decay = j["lr_decay"].get<double>();
    if (j.contains("plateau_epochs")) c.plateau_epochs = j["plateau_epochs"].get<int>();
    if (j.contains("weight_decay")) c.weight_decay = j["weight_decay"].get<double>();
    if (j.contains("alpha")) c.weights.alpha = j["alpha"].get<double>();
    if (j.contains("beta")) c.weights.beta = j["beta"].get<double>();
    if (j.contains("gamma")) c.weights.gamma = j["gamma"].get<double>();
    if (j.contains("norm")) c.weights.norm = norm_from_name(j["norm"].get<std::string>());
    if (j.contains("recycle")) c.recycle = j["recycle"].get<bool>();
    if (j.contains("corr")) c.corr = j["corr"].get<bool>();
    if (j.contains("intrinsics"))
      c.intrinsics = intrinsics_mode_from_name(j["intrinsics"].get<std::string>());
    if (j.contains("corr_grads"))
      c.corr_grads = corr_grad_mode_from_name(j["corr_grads"].get<std::string>());
    if (j.contains("eval_every")) c.eval_every = j["eval_every"].get<int>();
    if (j.contains("max_bad_steps")) c.max_bad_steps = j["max_bad_steps"].get<int>();
  } catch (const RehandError&) {
    throw;
  } catch (const nlohmann::json::exception& e) {
    throw_invalid_config(std::string("config value has the wrong type: ") + e.what());
  }
  c.validate();
  return c;
}

TrainConfig load_train_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw_io("cannot open for reading: " + path.string());
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_train_config(text);
}

}  // namespace rehand
