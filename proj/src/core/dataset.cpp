#include "core/dataset.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <set>

#include <json.hpp>

#include "core/backgrounds.hpp"
#include "core/binio.hpp"
#include "core/errors.hpp"
#include "core/image_io.hpp"
#include "core/renderer.hpp"
#include "core/rng.hpp"

namespace rehand {

namespace {

constexpr char kSampleMagic[8] = {'R', 'H', 'S', 'A', 'M', 'P', '0', '1'};
constexpr uint32_t kSampleVersion = 1;

// Salt for the background-image generator streams, distinct from the
// per-sample pick tag so regenerating the corpus never perturbs sample draws.
constexpr uint64_t kBackgroundGenSalt = 0x6267656Eu;

std::string indexed_name(const char* stem, int i, const char* ext) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s_%05d.%s", stem, i, ext);
  return buf;
}

void write_matrix(BinWriter& w, const MatX3& m) {
  w.u32(static_cast<uint32_t>(m.rows()));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < 3; ++j) w.f64(m(i, j));
}

MatX3 read_matrix(BinReader& r, uint32_t max_rows, const char* what) {
  uint32_t n = r.u32();
  if (n == 0 || n > max_rows) throw_invalid_input(std::string("implausible row count for ") + what);
  MatX3 m(n, 3);
  for (uint32_t i = 0; i < n; ++i)
    for (int j = 0; j < 3; ++j) m(i, j) = r.f64();
  return m;
}

}  // namespace

std::vector<uint8_t> serialize_sample(const SampleRecord& s) {
  BinWriter w;
  w.bytes(kSampleMagic, sizeof kSampleMagic);
  w.u32(kSampleVersion);
  w.u32(0);  // flags, reserved
  w.f64(s.intrinsics.fx);
  w.f64(s.intrinsics.fy);
  w.f64(s.intrinsics.cx);
  w.f64(s.intrinsics.cy);
  w.u32(static_cast<uint32_t>(s.intrinsics.width));
  w.u32(static_cast<uint32_t>(s.intrinsics.height));
  write_matrix(w, s.keypoints);
  write_matrix(w, s.vertices);
  w.str(s.image_file);
  return w.data();
}

SampleRecord deserialize_sample(const std::vector<uint8_t>& bytes) {
  BinReader r(bytes);
  char magic[8];
  for (char& c : magic) c = static_cast<char>(r.u8());
  if (std::memcmp(magic, kSampleMagic, sizeof magic) != 0)
    throw_invalid_input("not a hand sample record (bad magic)");
  uint32_t version = r.u32();
  if (version != kSampleVersion) throw_invalid_input("unsupported sample record version");
  uint32_t flags = r.u32();
  if (flags != 0) throw_invalid_input("unsupported sample record flags");

  SampleRecord s;
  s.intrinsics.fx = r.f64();
  s.intrinsics.fy = r.f64();
  s.intrinsics.cx = r.f64();
  s.intrinsics.cy = r.f64();
  s.intrinsics.width = static_cast<int>(r.u32());
  s.intrinsics.height = static_cast<int>(r.u32());
  if (!std::isfinite(s.intrinsics.fx) || !std::isfinite(s.intrinsics.fy) ||
      s.intrinsics.fx <= 0.0 || s.intrinsics.fy <= 0.0)
    throw_invalid_input("sample record has non-positive focal length");
  if (s.intrinsics.width <= 0 || s.intrinsics.height <= 0 ||
      s.intrinsics.width > (1 << 16) || s.intrinsics.height > (1 << 16))
    throw_invalid_input("sample record has implausible image size");

  s.keypoints = read_matrix(r, 1u << 10, "keypoints");
  if (s.keypoints.rows() != 21) throw_invalid_input("sample record must carry 21 keypoints");
  s.vertices = read_matrix(r, 1u << 20, "vertices");
  s.image_file = r.str();
  if (s.image_file.empty()) throw_invalid_input("sample record has empty image path");
  if (r.remaining() != 0) throw_invalid_input("trailing bytes after sample record");
  return s;
}

void save_sample(const SampleRecord& s, const std::filesystem::path& path) {
  BinWriter w;
  std::vector<uint8_t> bytes = serialize_sample(s);
  w.bytes(bytes.data(), bytes.size());
  w.save(path);
}

SampleRecord load_sample(const std::filesystem::path& path) {
  return deserialize_sample(BinReader::from_file(path).raw());
}

void DatasetGenConfig::validate() const {
  if (train_count <= 0 || eval_count <= 0) throw_invalid_config("split counts must be positive");
  if (background_count < 2) throw_invalid_config("need at least two backgrounds");
  if (eval_background_count < 1 || eval_background_count >= background_count)
    throw_invalid_config("eval background count must leave both pools non-empty");
  if (background_size < 8) throw_invalid_config("background size too small");
}

DatasetGenConfig parse_dataset_gen_config(const std::string& json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw_invalid_config(std::string("malformed config JSON: ") + e.what());
  }
  if (!j.is_object()) throw_invalid_config("config must be a JSON object");

  static const std::set<std::string> known = {"train_count",     "eval_count",
                                              "background_count", "eval_background_count",
                                              "background_size",  "seed",
                                              "width",            "height"};
  for (const auto& [key, value] : j.items())
    if (!known.count(key)) throw_invalid_config("unknown config key: " + key);

  DatasetGenConfig c;
  try {
    if (j.contains("train_count")) c.train_count = j["train_count"].get<int>();
    if (j.contains("eval_count")) c.eval_count = j["eval_count"].get<int>();
    if (j.contains("background_count")) c.background_count = j["background_count"].get<int>();
    if (j.contains("eval_background_count"))
      c.eval_background_count = j["eval_background_count"].get<int>();
    if (j.contains("background_size")) c.background_size = j["background_size"].get<int>();
    if (j.contains("seed")) c.seed = j["seed"].get<uint64_t>();
    if (j.contains("width")) c.sample.width = j["width"].get<int>();
    if (j.contains("height")) c.sample.height = j["height"].get<int>();
  } catch (const nlohmann::json::exception& e) {
    throw_invalid_config(std::string("config value has the wrong type: ") + e.what());
  }
  c.validate();
  return c;
}

namespace {

void write_background_manifest(const std::filesystem::path& path, int first, int last,
                               const char* pool) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw_io("cannot open for writing: " + path.string());
  out << "# procedural backgrounds, " << pool << " pool\n";
  for (int i = first; i < last; ++i)
    out << "backgrounds/" << indexed_name("bg", i, "png") << "\n";
  if (!out) throw_io("write failed: " + path.string());
}

void generate_split(const std::filesystem::path& dir, const char* split_name, int count,
                    uint64_t split_seed, const HandTemplate& tpl,
                    const BackgroundCorpus& backgrounds, const DatasetGenConfig& cfg) {
  std::filesystem::create_directories(dir);
  nlohmann::json records = nlohmann::json::array();
  for (int i = 0; i < count; ++i) {
    uint64_t sseed = seed_mix(split_seed, static_cast<uint64_t>(i));
    GeneratedSample sample = generate_sample(tpl, sseed, cfg.sample);

    size_t bg_index = Rng::derive(sseed, kDatasetBgStreamTag).below(backgrounds.size());
    Image bg = backgrounds.image(bg_index);
    if (bg.width != sample.intrinsics.width || bg.height != sample.intrinsics.height)
      bg = resize_bilinear(bg, sample.intrinsics.width, sample.intrinsics.height);
    auto [fg, depth] = rasterize(sample.fine, tpl, sample.intrinsics, cfg.skin_color);
    Image img = composite(fg, bg);

    SampleRecord rec;
    rec.intrinsics = sample.intrinsics;
    rec.keypoints = sample.keypoints;
    rec.vertices = sample.fine.vertices;
    rec.image_file = indexed_name("sample", i, "png");
    write_png(img, dir / rec.image_file);

    std::string rhs = indexed_name("sample", i, "rhs");
    save_sample(rec, dir / rhs);
    records.push_back(rhs);
  }

  nlohmann::json manifest;
  manifest["split"] = split_name;
  manifest["count"] = count;
  manifest["records"] = std::move(records);
  std::ofstream out(dir / "manifest.json", std::ios::trunc);
  if (!out) throw_io("cannot open for writing: " + (dir / "manifest.json").string());
  out << manifest.dump(2) << "\n";
  if (!out) throw_io("write failed: " + (dir / "manifest.json").string());
}

DatasetSplit open_split(const std::filesystem::path& dir) {
  auto manifest_path = dir / "manifest.json";
  std::ifstream in(manifest_path);
  if (!in) throw_io("cannot open for reading: " + manifest_path.string());
  nlohmann::json manifest;
  try {
    in >> manifest;
  } catch (const nlohmann::json::exception& e) {
    throw_invalid_input("malformed split manifest " + manifest_path.string() + ": " + e.what());
  }
  if (!manifest.contains("records") || !manifest["records"].is_array())
    throw_invalid_input("split manifest missing records array: " + manifest_path.string());
  DatasetSplit split;
  split.dir = dir;
  for (const auto& entry : manifest["records"]) {
    if (!entry.is_string())
      throw_invalid_input("split manifest records must be file names: " + manifest_path.string());
    split.files.push_back(entry.get<std::string>());
  }
  if (manifest.contains("count") &&
      manifest["count"].get<int64_t>() != static_cast<int64_t>(split.files.size()))
    throw_invalid_input("split manifest count disagrees with its records: " +
                        manifest_path.string());
  if (split.files.empty()) throw_invalid_input("split manifest lists no records: " +
                                               manifest_path.string());
  for (const auto& f : split.files)
    if (!std::filesystem::exists(dir / f))
      throw_io("split record listed but missing: " + (dir / f).string());
  return split;
}

}  // namespace

void generate_dataset(const std::filesystem::path& root, const DatasetGenConfig& cfg) {
  cfg.validate();
  if (std::filesystem::exists(root) && !std::filesystem::is_empty(root))
    throw_invalid_config("dataset directory exists and is not empty: " + root.string());
  std::filesystem::create_directories(root / "backgrounds");

  HandTemplate tpl = build_default_template();
  save_template(tpl, root / "template.rht");

  uint64_t bg_seed = seed_mix(cfg.seed, kBackgroundGenSalt);
  for (int i = 0; i < cfg.background_count; ++i) {
    Image bg = make_background(seed_mix(bg_seed, static_cast<uint64_t>(i)), cfg.background_size,
                               cfg.background_size);
    write_png(bg, root / "backgrounds" / indexed_name("bg", i, "png"));
  }
  int train_bg = cfg.background_count - cfg.eval_background_count;
  write_background_manifest(root / "backgrounds_train.txt", 0, train_bg, "training");
  write_background_manifest(root / "backgrounds_eval.txt", train_bg, cfg.background_count,
                            "held-out evaluation");

  BackgroundCorpus train_corpus = BackgroundCorpus::load(root / "backgrounds_train.txt");
  BackgroundCorpus eval_corpus = BackgroundCorpus::load(root / "backgrounds_eval.txt");
  generate_split(root / "train", "train", cfg.train_count, seed_mix(cfg.seed, kTrainSampleSalt),
                 tpl, train_corpus, cfg);
  generate_split(root / "eval", "eval", cfg.eval_count, seed_mix(cfg.seed, kEvalSampleSalt), tpl,
                 eval_corpus, cfg);
}

Dataset open_dataset(const std::filesystem::path& root) {
  if (!std::filesystem::is_directory(root))
    throw_io("dataset directory does not exist: " + root.string());
  Dataset ds;
  ds.root = root;
  ds.tpl = load_template(root / "template.rht");
  ds.train = open_split(root / "train");
  ds.eval = open_split(root / "eval");
  ds.train_backgrounds = root / "backgrounds_train.txt";
  ds.eval_backgrounds = root / "backgrounds_eval.txt";
  if (!std::filesystem::exists(ds.train_backgrounds) ||
      !std::filesystem::exists(ds.eval_backgrounds))
    throw_io("dataset background manifests missing under " + root.string());
  return ds;
}

SampleRecord load_split_sample(const DatasetSplit& split, size_t index) {
  if (index >= split.files.size()) throw_invalid_input("sample index out of range");
  return load_sample(split.dir / split.files[index]);
}

Image load_split_image(const DatasetSplit& split, const SampleRecord& record) {
  return read_png(split.dir / record.image_file);
}

}  // namespace rehand
