#include "rehand.h"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "core/backgrounds.hpp"
#include "core/dataset.hpp"
#include "core/errors.hpp"
#include "core/image_io.hpp"
#include "core/renderer.hpp"
#include "core/rng.hpp"
#include "core/trainer.hpp"

using namespace rehand;

extern "C" {

struct rh_dataset {
  Dataset ds;
};

struct rh_model {
  // The estimator keeps a pointer into the template, so both live behind
  // stable heap storage.
  std::unique_ptr<HandTemplate> tpl;
  std::unique_ptr<Estimator> est;
  EstimatorParams params;
};

}  // extern "C"

namespace {

thread_local std::string g_last_error;

rh_status status_of(const RehandError& e) {
  switch (e.kind()) {
    case ErrorKind::InvalidConfig:
      return RH_ERROR_CONFIG;
    case ErrorKind::Numerical:
      return RH_ERROR_NUMERIC;
    default:
      return RH_ERROR;
  }
}

template <typename F>
rh_status guarded(F&& body) {
  try {
    body();
    g_last_error.clear();
    return RH_OK;
  } catch (const RehandError& e) {
    g_last_error = e.what();
    return status_of(e);
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return RH_ERROR;
  } catch (...) {
    g_last_error = "unknown error";
    return RH_ERROR;
  }
}

char* copy_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

const std::string& require(const char* arg, const char* name) {
  thread_local std::string value;
  if (!arg) throw_invalid_input(std::string(name) + " must not be NULL");
  value = arg;
  return value;
}

const DatasetSplit& pick_split(const Dataset& ds, const std::string& split) {
  if (split == "train") return ds.train;
  if (split == "eval") return ds.eval;
  throw_invalid_input("unknown split: " + split + " (expected \"train\" or \"eval\")");
}

TrainConfig parse_run_config(const char* config_json) {
  TrainConfig cfg = parse_train_config(require(config_json, "config_json"));
  if (cfg.dataset_dir.empty()) throw_invalid_config("config is missing dataset_dir");
  if (cfg.out_dir.empty()) throw_invalid_config("config is missing out_dir");
  return cfg;
}

nlohmann::json metrics_json(const MetricsReport& r) {
  return {{"pa_mpjpe_mm", r.pa_mpjpe_mm},
          {"pa_mpvpe_mm", r.pa_mpvpe_mm},
          {"f_at_5mm", r.f_at_5mm},
          {"f_at_15mm", r.f_at_15mm},
          {"sample_count", r.sample_count}};
}

struct GradCheckRun {
  int trials = 50;
  uint64_t seed = 1;
  GradCheckConfig check;
};

GradCheckRun parse_grad_check_config(const char* config_json) {
  GradCheckRun run;
  if (!config_json) return run;
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(config_json);
  } catch (const nlohmann::json::exception& e) {
    throw_invalid_config(std::string("malformed config JSON: ") + e.what());
  }
  if (!j.is_object()) throw_invalid_config("config must be a JSON object");
  for (const auto& [key, value] : j.items())
    if (key != "trials" && key != "seed" && key != "eps" && key != "coords" && key != "norm")
      throw_invalid_config("unknown config key: " + key);
  try {
    if (j.contains("trials")) run.trials = j["trials"].get<int>();
    if (j.contains("seed")) run.seed = j["seed"].get<uint64_t>();
    if (j.contains("eps")) run.check.eps = j["eps"].get<double>();
    if (j.contains("coords")) run.check.sample_coords = j["coords"].get<int>();
    if (j.contains("norm")) run.check.weights.norm = norm_from_name(j["norm"].get<std::string>());
  } catch (const RehandError&) {
    throw;
  } catch (const nlohmann::json::exception& e) {
    throw_invalid_config(std::string("config value has the wrong type: ") + e.what());
  }
  if (run.trials < 1) throw_invalid_config("trials must be at least 1");
  if (!(run.check.eps > 0.0)) throw_invalid_config("eps must be positive");
  if (run.check.sample_coords < 1) throw_invalid_config("coords must be at least 1");
  return run;
}

}  // namespace

extern "C" {

const char* rh_version(void) { return "0.1.0"; }

const char* rh_last_error(void) { return g_last_error.c_str(); }

void rh_string_free(char* s) { std::free(s); }

rh_status rh_generate_dataset(const char* root_dir, const char* config_json) {
  return guarded([&] {
    DatasetGenConfig cfg = parse_dataset_gen_config(config_json ? config_json : "{}");
    generate_dataset(require(root_dir, "root_dir"), cfg);
  });
}

rh_dataset* rh_dataset_open(const char* root_dir) {
  rh_dataset* out = nullptr;
  guarded([&] {
    auto handle = std::make_unique<rh_dataset>();
    handle->ds = open_dataset(require(root_dir, "root_dir"));
    out = handle.release();
  });
  return out;
}

void rh_dataset_close(rh_dataset* ds) { delete ds; }

rh_status rh_dataset_count(const rh_dataset* ds, const char* split, int64_t* count_out) {
  return guarded([&] {
    if (!ds) throw_invalid_input("ds must not be NULL");
    if (!count_out) throw_invalid_input("count_out must not be NULL");
    *count_out = static_cast<int64_t>(pick_split(ds->ds, require(split, "split")).size());
  });
}

rh_model* rh_model_init(const rh_dataset* ds, uint64_t seed) {
  rh_model* out = nullptr;
  guarded([&] {
    if (!ds) throw_invalid_input("ds must not be NULL");
    auto m = std::make_unique<rh_model>();
    m->tpl = std::make_unique<HandTemplate>(ds->ds.tpl);
    EstimatorLayout layout;
    layout.coarse_count = m->tpl->v_coarse();
    m->est = std::make_unique<Estimator>(*m->tpl, layout);
    m->params = m->est->init_params(seed);
    out = m.release();
  });
  return out;
}

rh_model* rh_model_load(const rh_dataset* ds, const char* checkpoint_file) {
  rh_model* out = nullptr;
  guarded([&] {
    if (!ds) throw_invalid_input("ds must not be NULL");
    Checkpoint ck = load_checkpoint(require(checkpoint_file, "checkpoint_file"));
    if (ck.template_hash != ds->ds.tpl.content_hash)
      throw_invalid_input("checkpoint was trained against a different hand template");
    auto m = std::make_unique<rh_model>();
    m->tpl = std::make_unique<HandTemplate>(ds->ds.tpl);
    m->est = std::make_unique<Estimator>(*m->tpl, ck.params.layout);
    m->params = std::move(ck.params);
    out = m.release();
  });
  return out;
}

void rh_model_close(rh_model* m) { delete m; }

rh_status rh_evaluate(const rh_model* m, const rh_dataset* ds, const char* split,
                      int inject_ground_truth, char** report_json_out) {
  return guarded([&] {
    if (!m || !ds) throw_invalid_input("model and dataset must not be NULL");
    if (!report_json_out) throw_invalid_input("report_json_out must not be NULL");
    std::vector<TrainSample> data = load_split(ds->ds, pick_split(ds->ds, require(split, "split")));
    std::vector<SampleEval> rows;
    MetricsReport report =
        evaluate(*m->est, m->params, data, inject_ground_truth != 0, &rows);

    nlohmann::json j = metrics_json(report);
    j["split"] = split;
    nlohmann::json samples = nlohmann::json::array();
    for (const SampleEval& row : rows) {
      nlohmann::json s = metrics_json(row.metrics);
      s.erase("sample_count");
      s["id"] = row.id;
      samples.push_back(std::move(s));
    }
    j["samples"] = std::move(samples);
    *report_json_out = copy_string(j.dump(2));
  });
}

rh_status rh_render(const rh_model* m, const rh_dataset* ds, const char* split, int64_t index,
                    int ground_truth_mesh, uint64_t seed, const char* out_png) {
  return guarded([&] {
    if (!m || !ds) throw_invalid_input("model and dataset must not be NULL");
    const std::string& split_name = require(split, "split");
    const DatasetSplit& sp = pick_split(ds->ds, split_name);
    if (index < 0 || static_cast<size_t>(index) >= sp.size())
      throw_invalid_input("sample index out of range");
    SampleRecord rec = load_split_sample(sp, static_cast<size_t>(index));

    HandMesh mesh;
    CameraIntrinsics camera;
    if (ground_truth_mesh) {
      mesh = HandMesh{rec.vertices, MeshResolution::Fine};
      camera = rec.intrinsics;
    } else {
      Image input = load_split_image(sp, rec);
      EstimatorOutput out = m->est->forward(input, m->params);
      mesh = std::move(out.fine);
      camera = out.intrinsics;
    }
    BackgroundCorpus corpus = BackgroundCorpus::load(
        split_name == "train" ? ds->ds.train_backgrounds : ds->ds.eval_backgrounds);
    Image rendered = render_synthetic(mesh, *m->tpl, camera, corpus, seed);
    write_png(rendered, require(out_png, "out_png"));
  });
}

rh_status rh_train(const char* config_json, char** summary_json_out) {
  return guarded([&] {
    if (!summary_json_out) throw_invalid_input("summary_json_out must not be NULL");
    TrainConfig cfg = parse_run_config(config_json);
    TrainResult result = train(cfg);

    char hash[32];
    std::snprintf(hash, sizeof hash, "%016llx",
                  static_cast<unsigned long long>(result.config_hash));
    nlohmann::json j = {{"checkpoint", result.checkpoint_file.string()},
                        {"train_log", result.train_log_file.string()},
                        {"eval_log", result.eval_log_file.string()},
                        {"steps", result.state.step},
                        {"epochs", result.state.epoch},
                        {"final_lr", result.state.current_lr},
                        {"config_hash", hash},
                        {"final_eval", metrics_json(result.final_eval)}};
    *summary_json_out = copy_string(j.dump(2));
  });
}

rh_status rh_ablation(const char* config_json, const uint64_t* seeds, size_t seed_count,
                      char** table_out) {
  return guarded([&] {
    if (!table_out) throw_invalid_input("table_out must not be NULL");
    if (!seeds && seed_count > 0) throw_invalid_input("seeds must not be NULL");
    AblationConfig cfg;
    cfg.base = parse_run_config(config_json);
    cfg.seeds.assign(seeds, seeds + seed_count);
    AblationResult result = run_ablation(cfg);
    *table_out = copy_string(result.table);
  });
}

rh_status rh_synthetic_only(const char* config_json, char** table_out) {
  return guarded([&] {
    if (!table_out) throw_invalid_input("table_out must not be NULL");
    SyntheticOnlyResult result = run_synthetic_only(parse_run_config(config_json));
    *table_out = copy_string(result.table);
  });
}

rh_status rh_grad_check(const char* config_json, double* max_rel_err_out) {
  return guarded([&] {
    if (!max_rel_err_out) throw_invalid_input("max_rel_err_out must not be NULL");
    GradCheckRun run = parse_grad_check_config(config_json);

    HandTemplate tpl = build_default_template();
    EstimatorLayout layout;
    layout.coarse_count = tpl.v_coarse();
    Estimator est(tpl, layout);
    SampleGenConfig scene;
    const Rgb skin{210, 170, 145};

    double worst = 0.0;
    for (int t = 0; t < run.trials; ++t) {
      uint64_t trial_seed = seed_mix(run.seed, static_cast<uint64_t>(t));
      GeneratedSample gs = generate_sample(tpl, trial_seed, scene);
      Image bg = make_background(seed_mix(trial_seed, 1), scene.width, scene.height);
      Image original = composite(rasterize(gs.fine, tpl, gs.intrinsics, skin).first, bg);

      EstimatorParams params = est.init_params(trial_seed);
      EstimatorOutput first = est.forward(original, params);
      Image bg2 = make_background(seed_mix(trial_seed, 2), scene.width, scene.height);
      Image synthetic =
          composite(rasterize(first.fine, tpl, first.intrinsics, average_color(bg2)).first, bg2);

      GroundTruth gt{gs.fine.vertices, gs.keypoints, gs.intrinsics};
      GradCheckConfig check = run.check;
      check.seed = trial_seed;
      worst = std::max(worst, est.finite_diff_check(original, synthetic, gt, params, check));
    }
    *max_rel_err_out = worst;
  });
}

}  // extern "C"
