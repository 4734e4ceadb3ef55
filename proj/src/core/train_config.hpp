#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "core/losses.hpp"

namespace rehand {

// Where the estimator's camera comes from during training and evaluation:
// its own intrinsics head, or the ground-truth camera of each sample.
enum class IntrinsicsMode { Predicted, GroundTruth };

// Which phases receive self-correlation gradients. Both sides is the
// default; Phase2Only treats the first pass as a frozen reference.
enum class CorrGradMode { BothPhases, Phase2Only };

const char* intrinsics_mode_name(IntrinsicsMode m);
IntrinsicsMode intrinsics_mode_from_name(const std::string& name);
const char* corr_grad_mode_name(CorrGradMode m);
CorrGradMode corr_grad_mode_from_name(const std::string& name);

struct TrainConfig {
  // Locations are environment, not experiment: excluded from the hash.
  std::filesystem::path dataset_dir;
  std::filesystem::path out_dir;
  std::filesystem::path backgrounds;  // recycle-render corpus manifest;
                                      // empty uses the dataset's train pool

  uint64_t seed = 1;
  int batch_size = 16;
  int max_epochs = 30;
  double initial_lr = 1e-4;
  double lr_decay = 0.5;      // multiplier applied on plateau
  int plateau_epochs = 20;    // evals without improvement before decaying
  double weight_decay = 1e-4;
  LossWeights weights;
  bool recycle = true;        // render + second pass at all
  bool corr = true;           // compute self-correlation terms (gamma weighs
                              // them into the total)
  IntrinsicsMode intrinsics = IntrinsicsMode::Predicted;
  CorrGradMode corr_grads = CorrGradMode::BothPhases;
  int eval_every = 1;         // epochs between eval passes
  int max_bad_steps = 5;      // consecutive non-finite steps before aborting

  void validate() const;
};

// Canonical JSON of every field that shapes the learned parameters
// (locations excluded). Key order and number formatting are fixed, so the
// fnv1a64 of this string identifies a training setup across checkpoints,
// ablation rows, and reports.
std::string canonical_config_json(const TrainConfig& c);
uint64_t config_hash(const TrainConfig& c);

// Flat JSON object; unknown keys are rejected, missing keys keep defaults.
TrainConfig parse_train_config(const std::string& json_text);
TrainConfig load_train_config(const std::filesystem::path& path);

}  // namespace rehand
