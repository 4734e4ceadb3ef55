#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <string>
#include <vector>

#include "core/dataset.hpp"
#include "core/estimator.hpp"
#include "core/metrics.hpp"
#include "core/optim.hpp"
#include "core/renderer.hpp"
#include "core/train_config.hpp"

namespace rehand {

// Stream tags for the training loop's two draw sites. Epoch e shuffles the
// sample order with Rng::derive(seed, kShuffleStreamTag, e) driving a
// Fisher-Yates pass over the identity permutation (i from n-1 down to 1,
// j = below(i+1), swap a[i] and a[j]); the recycle render of dataset sample
// j in epoch e is seeded with
// seed_mix(seed_mix(seed_mix(seed, kRecycleStreamTag), e), j). Keying renders
// by dataset index keeps them independent of batch size and order. When
// recycle is disabled neither render stream is created: the baseline
// consumes exactly the draws a single-phase trainer would.
inline constexpr uint64_t kShuffleStreamTag = 0x5F8A33D1u;
inline constexpr uint64_t kRecycleStreamTag = 0x52E37C1Eu;
// Seed salt for re-rendering the training set from ground-truth meshes in
// the synthetic-only experiment: sample j uses
// seed_mix(seed_mix(seed, kSyntheticSetSalt), j).
inline constexpr uint64_t kSyntheticSetSalt = 0x5D11F0A3u;

struct TrainSample {
  std::string id;  // record name, used in reports and error messages
  Image image;
  GroundTruth gt;
};

struct TrainState {
  int64_t step = 0;  // applied optimizer updates
  int epoch = 0;
  double current_lr = 0.0;
  double best_pa_mpjpe = std::numeric_limits<double>::infinity();
  int epochs_since_best = 0;
  int consecutive_bad = 0;
  AdamWState opt;
};

// Shared context for step/evaluate: the estimator owns the template,
// backgrounds may be null when recycle is disabled.
struct TrainContext {
  const Estimator* estimator = nullptr;
  const BackgroundCorpus* backgrounds = nullptr;
  const TrainConfig* config = nullptr;
};

struct TrainStepResult {
  LossBreakdown loss;   // batch means, component-wise
  bool applied = false;
  std::string error;    // set when the step was aborted
};

// Loads a split fully into memory, checking record shapes against the
// template.
std::vector<TrainSample> load_split(const Dataset& ds, const DatasetSplit& split);

// One optimizer update over the batch. Phase 1 runs on the stored images;
// when recycle is enabled each phase-1 mesh is re-rendered (no gradient
// through the renderer) and fed through the same parameters again. Distance
// terms of both phases target the original ground truth; self-correlation
// couples the phases directly. Per-sample parameter gradients are summed and
// divided by the batch size before the update. A non-finite loss or a failed
// render aborts the step without touching params or optimizer state; after
// max_bad_steps consecutive aborts a numerical error is raised.
// render_seeds runs parallel to batch (ignored when recycle is off).
TrainStepResult train_step(const TrainContext& ctx, const std::vector<const TrainSample*>& batch,
                           const std::vector<uint64_t>& render_seeds, EstimatorParams& params,
                           TrainState& state);

// Plateau rule: a new best resets the counter; once the counter reaches
// plateau_epochs the learning rate is multiplied by lr_decay and the counter
// resets (the best value stands).
void lr_schedule(TrainState& state, double eval_pa_mpjpe, const TrainConfig& config);

struct SampleEval {
  std::string id;
  MetricsReport metrics;  // sample_count == 1
};

// First-pass-only evaluation: forward each sample, per-sample metrics, mean
// aggregation. Per-sample failures are rethrown with the sample index.
// inject_ground_truth bypasses the network and scores the ground truth
// against itself — a wiring check that must produce exact zeros. per_sample,
// when given, receives one row per eval sample in dataset order.
MetricsReport evaluate(const Estimator& estimator, const EstimatorParams& params,
                       const std::vector<TrainSample>& eval_set,
                       bool inject_ground_truth = false,
                       std::vector<SampleEval>* per_sample = nullptr);

// Versioned checkpoint container: layout, anchor, theta, optimizer moments,
// and train counters, tied to the template and config by hash.
struct Checkpoint {
  EstimatorParams params;
  TrainState state;
  uint64_t template_hash = 0;
  uint64_t config_hash = 0;
};

std::vector<uint8_t> serialize_checkpoint(const Checkpoint& c);
Checkpoint deserialize_checkpoint(const std::vector<uint8_t>& bytes);
void save_checkpoint(const Checkpoint& c, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

struct TrainResult {
  EstimatorParams params;
  TrainState state;
  MetricsReport final_eval;
  uint64_t config_hash = 0;
  std::filesystem::path checkpoint_file;
  std::filesystem::path train_log_file;
  std::filesystem::path eval_log_file;
};

// Full loop: init from config.seed, per-epoch shuffled passes, eval +
// plateau schedule every eval_every epochs, then final checkpoint,
// train_log.csv and eval_log.csv under config.out_dir (which must be fresh).
TrainResult train(const TrainConfig& config);

// Ablation over seeds: three variants derived from the base config —
// "Original" (single phase), "+Recycle Learning" (second phase, no
// correlation), "+Self-Correlation Loss" (the base config) — every variant
// sharing init and data order per seed. A failed run is recorded and marked
// in the table instead of aborting the sweep.
struct AblationConfig {
  TrainConfig base;
  std::vector<uint64_t> seeds;
};

struct AblationCell {
  uint64_t seed = 0;
  MetricsReport report;
  uint64_t config_hash = 0;
  bool failed = false;
  std::string error;
};

struct AblationVariant {
  std::string name;
  std::vector<AblationCell> cells;
  MetricsReport mean;  // over the seeds that finished
  int failed_count = 0;
};

struct AblationResult {
  std::vector<AblationVariant> variants;
  std::string table;
};

AblationResult run_ablation(const AblationConfig& config);

// Trains one model on the original images and one on the training set
// re-rendered from ground-truth meshes (both single phase), evaluates both
// and the untrained init on the original eval images.
struct SyntheticOnlyResult {
  MetricsReport original_trained;
  MetricsReport synthetic_trained;
  MetricsReport untrained;
  uint64_t rendered_hash = 0;  // digest of the re-rendered training images
  std::string table;
};

SyntheticOnlyResult run_synthetic_only(const TrainConfig& config);

}  // namespace rehand
