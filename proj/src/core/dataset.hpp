#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "core/camera.hpp"
#include "core/hand_model.hpp"
#include "core/image.hpp"
#include "core/types.hpp"

namespace rehand {

// Stream tag for the per-sample ground-truth background pick:
// Rng::derive(sample_seed, kDatasetBgStreamTag).below(pool_size).
inline constexpr uint64_t kDatasetBgStreamTag = 0xD5E7B019u;

// Salts mixed with the dataset seed to give each split its own sample-seed
// sequence: sample i uses seed_mix(seed_mix(seed, salt), i).
inline constexpr uint64_t kTrainSampleSalt = 0x7261696Eu;
inline constexpr uint64_t kEvalSampleSalt = 0x6576616Cu;

// One ground-truth record: camera, 3D keypoints, fine vertices, and the
// rendered image it belongs to (path relative to the split directory).
struct SampleRecord {
  CameraIntrinsics intrinsics;
  MatX3 keypoints;
  MatX3 vertices;
  std::string image_file;
};

std::vector<uint8_t> serialize_sample(const SampleRecord& s);
SampleRecord deserialize_sample(const std::vector<uint8_t>& bytes);
void save_sample(const SampleRecord& s, const std::filesystem::path& path);
SampleRecord load_sample(const std::filesystem::path& path);

struct DatasetGenConfig {
  int train_count = 512;
  int eval_count = 128;
  int background_count = 12;       // total corpus size
  int eval_background_count = 4;   // held out of training entirely
  int background_size = 160;       // generated larger than the camera raster
  uint64_t seed = 1;
  SampleGenConfig sample;
  Rgb skin_color{210, 170, 145};   // ground-truth hand paint

  void validate() const;
};

struct DatasetSplit {
  std::filesystem::path dir;
  std::vector<std::string> files;  // record names in manifest order

  size_t size() const { return files.size(); }
};

struct Dataset {
  std::filesystem::path root;
  HandTemplate tpl;
  DatasetSplit train;
  DatasetSplit eval;
  std::filesystem::path train_backgrounds;  // manifest paths
  std::filesystem::path eval_backgrounds;
};

// Parses a generation config from JSON. Recognized keys: train_count,
// eval_count, background_count, eval_background_count, background_size,
// seed, width, height (camera raster). Unknown keys are rejected; absent
// keys keep their defaults.
DatasetGenConfig parse_dataset_gen_config(const std::string& json_text);

// Writes a complete self-contained dataset under root: hand template,
// procedural background corpus (train/eval manifests over disjoint files),
// and per-split ground-truth records with images rendered from the
// ground-truth mesh in the fixed skin color. Fully determined by the config.
void generate_dataset(const std::filesystem::path& root, const DatasetGenConfig& cfg);

Dataset open_dataset(const std::filesystem::path& root);

SampleRecord load_split_sample(const DatasetSplit& split, size_t index);
Image load_split_image(const DatasetSplit& split, const SampleRecord& record);

}  // namespace rehand
