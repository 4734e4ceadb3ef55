#include "core/trainer.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <numeric>
#include <utility>

#include <json.hpp>

#include "core/binio.hpp"
#include "core/errors.hpp"
#include "core/hash.hpp"
#include "core/rng.hpp"

namespace rehand {

namespace {

constexpr char kCheckpointMagic[8] = {'R', 'H', 'C', 'K', 'P', 'T', '0', '1'};
constexpr uint32_t kCheckpointVersion = 1;

std::string fmt17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

PhaseOutput to_phase(const EstimatorOutput& out, IntrinsicsMode mode, const GroundTruth& gt) {
  PhaseOutput p;
  p.vertices = out.fine.vertices;
  p.keypoints = out.keypoints;
  p.intrinsics = mode == IntrinsicsMode::Predicted ? out.intrinsics : gt.intrinsics;
  p.intrinsics_predicted = mode == IntrinsicsMode::Predicted;
  return p;
}

void add_breakdown(LossBreakdown& acc, const LossBreakdown& b) {
  acc.dist_k += b.dist_k;
  acc.dist_v += b.dist_v;
  acc.dist_proj += b.dist_proj;
  acc.corr_k += b.corr_k;
  acc.corr_v += b.corr_v;
  acc.corr_proj += b.corr_proj;
  acc.ori += b.ori;
  acc.recycle += b.recycle;
  acc.total += b.total;
}

void scale_breakdown(LossBreakdown& b, double s) {
  b.dist_k *= s;
  b.dist_v *= s;
  b.dist_proj *= s;
  b.corr_k *= s;
  b.corr_v *= s;
  b.corr_proj *= s;
  b.ori *= s;
  b.recycle *= s;
  b.total *= s;
}

}  // namespace

std::vector<TrainSample> load_split(const Dataset& ds, const DatasetSplit& split) {
  std::vector<TrainSample> out;
  out.reserve(split.size());
  for (size_t i = 0; i < split.size(); ++i) {
    SampleRecord rec = load_split_sample(split, i);
    if (rec.vertices.rows() != ds.tpl.v_fine())
      throw_invalid_input("sample " + std::to_string(i) + " vertex count does not match template");
    TrainSample s;
    s.id = std::filesystem::path(rec.image_file).stem().string();
    s.image = load_split_image(split, rec);
    s.gt.vertices = std::move(rec.vertices);
    s.gt.keypoints = std::move(rec.keypoints);
    s.gt.intrinsics = rec.intrinsics;
    out.push_back(std::move(s));
  }
  return out;
}

TrainStepResult train_step(const TrainContext& ctx, const std::vector<const TrainSample*>& batch,
                           const std::vector<uint64_t>& render_seeds, EstimatorParams& params,
                           TrainState& state) {
  if (!ctx.estimator || !ctx.config) throw_invalid_input("train_step: context not wired");
  const TrainConfig& cfg = *ctx.config;
  if (batch.empty()) throw_invalid_input("train_step: empty batch");
  if (cfg.recycle) {
    if (!ctx.backgrounds) throw_invalid_input("train_step: recycle enabled without backgrounds");
    if (render_seeds.size() != batch.size())
      throw_invalid_input("train_step: one render seed per sample required");
  }

  const Estimator& est = *ctx.estimator;
  const HandTemplate& tpl = est.hand_template();
  const Eigen::Index vn = tpl.v_fine();
  const Norm norm = cfg.weights.norm;

  TrainStepResult res;
  VecX grad = VecX::Zero(params.theta.size());
  LossBreakdown sums;

  try {
    for (size_t i = 0; i < batch.size(); ++i) {
      const TrainSample& s = *batch[i];
      ForwardCache c1;
      EstimatorOutput out1 = est.forward(s.image, params, &c1);
      PhaseOutput p1 = to_phase(out1, cfg.intrinsics, s.gt);
      PhaseGrad g1(vn), g2(vn);

      DistTerms ori = loss_dist(p1, s.gt, norm, cfg.weights.alpha, &g1);
      DistTerms rec;
      CorrTerms corr;
      ForwardCache c2;
      bool ran_phase2 = false;
      if (cfg.recycle) {
        Image synthetic =
            render_synthetic(out1.fine, tpl, p1.intrinsics, *ctx.backgrounds, render_seeds[i]);
        EstimatorOutput out2 = est.forward(synthetic, params, &c2);
        PhaseOutput p2 = to_phase(out2, cfg.intrinsics, s.gt);
        ran_phase2 = true;

        rec = loss_dist(p2, s.gt, norm, cfg.weights.beta, &g2);
        if (cfg.corr) {
          if (cfg.corr_grads == CorrGradMode::BothPhases) {
            corr = loss_corr(p1, p2, norm, cfg.weights.gamma, &g1, &g2);
          } else {
            PhaseGrad discard(vn);  // first pass treated as a frozen reference
            corr = loss_corr(p1, p2, norm, cfg.weights.gamma, &discard, &g2);
          }
        }
      }

      LossBreakdown lb = loss_total(ori, rec, corr, cfg.weights);
      add_breakdown(sums, lb);
      grad += est.backward(params, c1, g1);
      if (ran_phase2) grad += est.backward(params, c2, g2);
    }
    grad /= static_cast<double>(batch.size());
    if (!grad.allFinite()) throw_numerical("non-finite gradient in train step");
  } catch (const RehandError& e) {
    if (e.kind() != ErrorKind::Numerical && e.kind() != ErrorKind::Geometry) throw;
    ++state.consecutive_bad;
    res.error = e.what();
    if (state.consecutive_bad >= cfg.max_bad_steps)
      throw_numerical("aborted " + std::to_string(state.consecutive_bad) +
                      " consecutive training steps; last error: " + res.error);
    return res;
  }

  AdamWConfig opt;
  opt.lr = state.current_lr;
  opt.weight_decay = cfg.weight_decay;
  adamw_step(params.theta, grad, state.opt, opt);

  scale_breakdown(sums, 1.0 / static_cast<double>(batch.size()));
  res.loss = sums;
  res.applied = true;
  ++state.step;
  state.consecutive_bad = 0;
  return res;
}

void lr_schedule(TrainState& state, double eval_pa_mpjpe, const TrainConfig& config) {
  if (!std::isfinite(eval_pa_mpjpe)) throw_numerical("lr_schedule: non-finite evaluation metric");
  if (eval_pa_mpjpe < state.best_pa_mpjpe) {
    state.best_pa_mpjpe = eval_pa_mpjpe;
    state.epochs_since_best = 0;
    return;
  }
  ++state.epochs_since_best;
  if (state.epochs_since_best >= config.plateau_epochs) {
    state.current_lr *= config.lr_decay;
    state.epochs_since_best = 0;
  }
}

MetricsReport evaluate(const Estimator& estimator, const EstimatorParams& params,
                       const std::vector<TrainSample>& eval_set, bool inject_ground_truth,
                       std::vector<SampleEval>* per_sample) {
  if (eval_set.empty()) throw_invalid_input("evaluate: empty evaluation set");
  if (per_sample) per_sample->clear();
  std::vector<MetricsReport> reports;
  reports.reserve(eval_set.size());
  for (size_t i = 0; i < eval_set.size(); ++i) {
    const TrainSample& s = eval_set[i];
    try {
      if (inject_ground_truth) {
        reports.push_back(sample_metrics(s.gt.keypoints, s.gt.keypoints, s.gt.vertices,
                                         s.gt.vertices));
      } else {
        EstimatorOutput out = estimator.forward(s.image, params);
        reports.push_back(sample_metrics(out.keypoints, s.gt.keypoints, out.fine.vertices,
                                         s.gt.vertices));
      }
    } catch (const RehandError& e) {
      throw RehandError(e.kind(), "eval sample " + std::to_string(i) + ": " + e.what());
    }
    if (per_sample) {
      std::string id = s.id.empty() ? "sample_" + std::to_string(i) : s.id;
      per_sample->push_back({std::move(id), reports.back()});
    }
  }
  return aggregate_metrics(reports);
}

std::vector<uint8_t> serialize_checkpoint(const Checkpoint& c) {
  c.params.validate();
  const Eigen::Index n = c.params.theta.size();
  if (c.state.opt.m.size() != 0 && c.state.opt.m.size() != n)
    throw_invalid_input("checkpoint optimizer state does not match theta");
  if (c.state.opt.v.size() != c.state.opt.m.size())
    throw_invalid_input("checkpoint optimizer moments have different sizes");

  BinWriter w;
  w.bytes(kCheckpointMagic, sizeof kCheckpointMagic);
  w.u32(kCheckpointVersion);
  w.u32(0);  // flags, reserved
  w.u64(c.template_hash);
  w.u64(c.config_hash);

  const EstimatorLayout& l = c.params.layout;
  w.i32(l.input_width);
  w.i32(l.input_height);
  w.i32(l.feat_grid);
  w.i32(l.hidden);
  w.u32(static_cast<uint32_t>(l.coarse_count));
  w.f64(c.params.anchor.fx);
  w.f64(c.params.anchor.fy);
  w.f64(c.params.anchor.cx);
  w.f64(c.params.anchor.cy);

  w.u32(static_cast<uint32_t>(n));
  w.f64_array(c.params.theta.data(), static_cast<size_t>(n));

  w.u64(static_cast<uint64_t>(c.state.opt.t));
  w.u32(static_cast<uint32_t>(c.state.opt.m.size()));
  w.f64_array(c.state.opt.m.data(), static_cast<size_t>(c.state.opt.m.size()));
  w.f64_array(c.state.opt.v.data(), static_cast<size_t>(c.state.opt.v.size()));

  w.u64(static_cast<uint64_t>(c.state.step));
  w.i32(c.state.epoch);
  w.f64(c.state.current_lr);
  w.f64(c.state.best_pa_mpjpe);
  w.i32(c.state.epochs_since_best);
  w.i32(c.state.consecutive_bad);
  return w.data();
}

Checkpoint deserialize_checkpoint(const std::vector<uint8_t>& bytes) {
  BinReader r(bytes);
  char magic[8];
  for (char& ch : magic) ch = static_cast<char>(r.u8());
  if (std::memcmp(magic, kCheckpointMagic, sizeof magic) != 0)
    throw_invalid_input("not a checkpoint (bad magic)");
  if (r.u32() != kCheckpointVersion) throw_invalid_input("unsupported checkpoint version");
  if (r.u32() != 0) throw_invalid_input("unsupported checkpoint flags");

  Checkpoint c;
  c.template_hash = r.u64();
  c.config_hash = r.u64();

  c.params.layout.input_width = r.i32();
  c.params.layout.input_height = r.i32();
  c.params.layout.feat_grid = r.i32();
  c.params.layout.hidden = r.i32();
  c.params.layout.coarse_count = static_cast<Eigen::Index>(r.u32());
  c.params.layout.validate();
  c.params.anchor.fx = r.f64();
  c.params.anchor.fy = r.f64();
  c.params.anchor.cx = r.f64();
  c.params.anchor.cy = r.f64();

  uint32_t n = r.u32();
  if (n != c.params.layout.total_params())
    throw_invalid_input("checkpoint theta size does not match its layout");
  c.params.theta.resize(n);
  r.f64_array(c.params.theta.data(), n);

  c.state.opt.t = static_cast<int64_t>(r.u64());
  uint32_t mn = r.u32();
  if (mn != 0 && mn != n) throw_invalid_input("checkpoint optimizer state does not match theta");
  c.state.opt.m.resize(mn);
  r.f64_array(c.state.opt.m.data(), mn);
  c.state.opt.v.resize(mn);
  r.f64_array(c.state.opt.v.data(), mn);

  c.state.step = static_cast<int64_t>(r.u64());
  c.state.epoch = r.i32();
  c.state.current_lr = r.f64();
  c.state.best_pa_mpjpe = r.f64();
  c.state.epochs_since_best = r.i32();
  c.state.consecutive_bad = r.i32();
  if (r.remaining() != 0) throw_invalid_input("trailing bytes after checkpoint");
  c.params.validate();
  return c;
}

void save_checkpoint(const Checkpoint& c, const std::filesystem::path& path) {
  BinWriter w;
  std::vector<uint8_t> bytes = serialize_checkpoint(c);
  w.bytes(bytes.data(), bytes.size());
  w.save(path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  return deserialize_checkpoint(BinReader::from_file(path).raw());
}

namespace {

std::vector<size_t> epoch_permutation(size_t n, uint64_t seed, int epoch) {
  std::vector<size_t> perm(n);
  std::iota(perm.begin(), perm.end(), size_t{0});
  Rng rng = Rng::derive(seed, kShuffleStreamTag, static_cast<uint64_t>(epoch));
  for (size_t i = n; i-- > 1;) std::swap(perm[i], perm[rng.below(i + 1)]);
  return perm;
}

void write_config_artifact(const TrainConfig& cfg, const std::filesystem::path& path) {
  nlohmann::json j = nlohmann::json::parse(canonical_config_json(cfg));
  j["dataset_dir"] = cfg.dataset_dir.string();
  j["out_dir"] = cfg.out_dir.string();
  if (!cfg.backgrounds.empty()) j["backgrounds"] = cfg.backgrounds.string();
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw_io("cannot open for writing: " + path.string());
  out << j.dump(2) << "\n";
}

std::filesystem::path prepare_out_dir(const std::filesystem::path& out_dir) {
  if (out_dir.empty()) throw_invalid_config("out_dir is required");
  if (std::filesystem::exists(out_dir) && !std::filesystem::is_empty(out_dir))
    throw_invalid_config("out_dir exists and is not empty: " + out_dir.string());
  std::filesystem::create_directories(out_dir);
  return out_dir;
}

// Core loop shared by train() and the synthetic-only experiment, which feeds
// its own in-memory training images.
TrainResult train_on(const std::vector<TrainSample>& train_data,
                     const std::vector<TrainSample>& eval_data, const Estimator& est,
                     const BackgroundCorpus* corpus, uint64_t template_hash,
                     const TrainConfig& cfg) {
  if (train_data.empty()) throw_invalid_input("training set is empty");
  prepare_out_dir(cfg.out_dir);
  write_config_artifact(cfg, cfg.out_dir / "config.json");

  TrainContext ctx{&est, corpus, &cfg};
  TrainResult result;
  result.config_hash = config_hash(cfg);
  result.params = est.init_params(cfg.seed);
  result.state.current_lr = cfg.initial_lr;
  result.state.opt = AdamWState(result.params.theta.size());

  result.train_log_file = cfg.out_dir / "train_log.csv";
  result.eval_log_file = cfg.out_dir / "eval_log.csv";
  std::ofstream train_log(result.train_log_file, std::ios::trunc);
  std::ofstream eval_log(result.eval_log_file, std::ios::trunc);
  if (!train_log || !eval_log) throw_io("cannot open logs under " + cfg.out_dir.string());
  train_log << "step,epoch,lr,dist_k,dist_v,dist_proj,corr_k,corr_v,corr_proj,ori,recycle,total\n";
  eval_log << "epoch,lr,pa_mpjpe_mm,pa_mpvpe_mm,f_at_5mm,f_at_15mm,samples\n";

  bool evaluated = false;
  for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    std::vector<size_t> perm = epoch_permutation(train_data.size(), cfg.seed, epoch);
    uint64_t epoch_render_seed =
        cfg.recycle ? seed_mix(seed_mix(cfg.seed, kRecycleStreamTag), static_cast<uint64_t>(epoch))
                    : 0;
    for (size_t start = 0; start < perm.size(); start += static_cast<size_t>(cfg.batch_size)) {
      size_t stop = std::min(perm.size(), start + static_cast<size_t>(cfg.batch_size));
      std::vector<const TrainSample*> batch;
      std::vector<uint64_t> render_seeds;
      for (size_t k = start; k < stop; ++k) {
        batch.push_back(&train_data[perm[k]]);
        if (cfg.recycle)
          render_seeds.push_back(seed_mix(epoch_render_seed, static_cast<uint64_t>(perm[k])));
      }
      TrainStepResult step = train_step(ctx, batch, render_seeds, result.params, result.state);
      if (step.applied) {
        const LossBreakdown& b = step.loss;
        train_log << result.state.step << ',' << epoch << ',' << fmt17(result.state.current_lr)
                  << ',' << fmt17(b.dist_k) << ',' << fmt17(b.dist_v) << ','
                  << fmt17(b.dist_proj) << ',' << fmt17(b.corr_k) << ',' << fmt17(b.corr_v)
                  << ',' << fmt17(b.corr_proj) << ',' << fmt17(b.ori) << ','
                  << fmt17(b.recycle) << ',' << fmt17(b.total) << '\n';
      } else {
        std::ofstream events(cfg.out_dir / "events.log", std::ios::app);
        events << "epoch " << epoch << " batch@" << start << " aborted: " << step.error << "\n";
      }
    }
    result.state.epoch = epoch + 1;

    if ((epoch + 1) % cfg.eval_every == 0 || epoch + 1 == cfg.max_epochs) {
      result.final_eval = evaluate(est, result.params, eval_data);
      lr_schedule(result.state, result.final_eval.pa_mpjpe_mm, cfg);
      evaluated = true;
      eval_log << (epoch + 1) << ',' << fmt17(result.state.current_lr) << ','
               << fmt17(result.final_eval.pa_mpjpe_mm) << ','
               << fmt17(result.final_eval.pa_mpvpe_mm) << ','
               << fmt17(result.final_eval.f_at_5mm) << ','
               << fmt17(result.final_eval.f_at_15mm) << ','
               << result.final_eval.sample_count << '\n';
    }
  }
  if (!evaluated) result.final_eval = evaluate(est, result.params, eval_data);

  if (!train_log || !eval_log) throw_io("log write failed under " + cfg.out_dir.string());
  train_log.close();
  eval_log.close();

  Checkpoint ckpt{result.params, result.state, template_hash, result.config_hash};
  result.checkpoint_file = cfg.out_dir / "checkpoint.rhc";
  save_checkpoint(ckpt, result.checkpoint_file);

  std::ofstream metrics(cfg.out_dir / "final_metrics.csv", std::ios::trunc);
  metrics << metrics_csv(result.final_eval);
  return result;
}

EstimatorLayout layout_for(const Dataset& ds, const std::vector<TrainSample>& train_data) {
  EstimatorLayout layout;
  layout.coarse_count = ds.tpl.v_coarse();
  if (!train_data.empty()) {
    layout.input_width = train_data.front().gt.intrinsics.width;
    layout.input_height = train_data.front().gt.intrinsics.height;
  }
  return layout;
}

}  // namespace

TrainResult train(const TrainConfig& config) {
  config.validate();
  if (config.dataset_dir.empty()) throw_invalid_config("dataset_dir is required");
  Dataset ds = open_dataset(config.dataset_dir);
  std::vector<TrainSample> train_data = load_split(ds, ds.train);
  std::vector<TrainSample> eval_data = load_split(ds, ds.eval);
  Estimator est(ds.tpl, layout_for(ds, train_data));

  BackgroundCorpus corpus;
  if (config.recycle)
    corpus = BackgroundCorpus::load(config.backgrounds.empty() ? ds.train_backgrounds
                                                               : config.backgrounds);
  return train_on(train_data, eval_data, est, config.recycle ? &corpus : nullptr,
                  ds.tpl.content_hash, config);
}

namespace {

TrainConfig ablation_variant(const TrainConfig& base, bool recycle, bool corr) {
  TrainConfig v = base;
  v.recycle = recycle;
  v.corr = corr;
  if (!recycle) v.weights.beta = 0.0;
  if (!corr) v.weights.gamma = 0.0;
  return v;
}

std::string seed_label(const std::string& name, uint64_t seed) {
  return name + "  seed=" + std::to_string(seed);
}

}  // namespace

AblationResult run_ablation(const AblationConfig& config) {
  const TrainConfig& base = config.base;
  base.validate();
  if (config.seeds.size() < 3) throw_invalid_config("ablation needs at least three seeds");
  if (!base.recycle || !base.corr || base.weights.beta <= 0.0 || base.weights.gamma <= 0.0)
    throw_invalid_config(
        "ablation base config must enable recycle and self-correlation with positive beta and "
        "gamma");
  prepare_out_dir(base.out_dir);

  struct VariantSpec {
    const char* name;
    const char* slug;
    bool recycle;
    bool corr;
  };
  const VariantSpec specs[] = {
      {"Original", "original", false, false},
      {"+Recycle Learning", "recycle", true, false},
      {"+Self-Correlation Loss", "self_corr", true, true},
  };

  AblationResult result;
  for (const VariantSpec& spec : specs) {
    AblationVariant variant;
    variant.name = spec.name;
    TrainConfig vcfg = ablation_variant(base, spec.recycle, spec.corr);
    for (uint64_t seed : config.seeds) {
      AblationCell cell;
      cell.seed = seed;
      TrainConfig run = vcfg;
      run.seed = seed;
      run.out_dir = base.out_dir / spec.slug / ("seed_" + std::to_string(seed));
      cell.config_hash = config_hash(run);
      try {
        cell.report = train(run).final_eval;
      } catch (const RehandError& e) {
        cell.failed = true;
        cell.error = e.what();
        ++variant.failed_count;
      }
      variant.cells.push_back(std::move(cell));
    }
    std::vector<MetricsReport> ok;
    for (const AblationCell& c : variant.cells)
      if (!c.failed) ok.push_back(c.report);
    if (!ok.empty()) variant.mean = aggregate_metrics(ok);
    result.variants.push_back(std::move(variant));
  }

  // Mean rows first (the headline comparison), then the per-seed detail.
  std::vector<std::pair<std::string, MetricsReport>> rows;
  for (const AblationVariant& v : result.variants) {
    std::string label = v.name;
    if (v.failed_count > 0)
      label += " [" + std::to_string(v.failed_count) + "/" +
               std::to_string(v.cells.size()) + " FAILED]";
    rows.push_back({label, v.mean});
  }
  for (const AblationVariant& v : result.variants)
    for (const AblationCell& c : v.cells)
      if (!c.failed) rows.push_back({seed_label(v.name, c.seed), c.report});
  result.table = metrics_table(rows);
  for (const AblationVariant& v : result.variants)
    for (const AblationCell& c : v.cells)
      if (c.failed)
        result.table += "FAILED " + seed_label(v.name, c.seed) + ": " + c.error + "\n";

  std::ofstream table_file(base.out_dir / "ablation_table.txt", std::ios::trunc);
  if (!table_file) throw_io("cannot write ablation table under " + base.out_dir.string());
  table_file << result.table;
  return result;
}

SyntheticOnlyResult run_synthetic_only(const TrainConfig& config) {
  config.validate();
  if (config.dataset_dir.empty()) throw_invalid_config("dataset_dir is required");
  prepare_out_dir(config.out_dir);

  Dataset ds = open_dataset(config.dataset_dir);
  std::vector<TrainSample> train_data = load_split(ds, ds.train);
  std::vector<TrainSample> eval_data = load_split(ds, ds.eval);
  Estimator est(ds.tpl, layout_for(ds, train_data));
  BackgroundCorpus corpus = BackgroundCorpus::load(
      config.backgrounds.empty() ? ds.train_backgrounds : config.backgrounds);

  // Replace every training image with a render of its ground-truth mesh;
  // labels and cameras stay.
  SyntheticOnlyResult result;
  uint64_t set_seed = seed_mix(config.seed, kSyntheticSetSalt);
  std::vector<TrainSample> synthetic_data = train_data;
  uint64_t h = fnv1a64("", 0);
  for (size_t j = 0; j < synthetic_data.size(); ++j) {
    TrainSample& s = synthetic_data[j];
    HandMesh mesh{s.gt.vertices, MeshResolution::Fine};
    s.image = render_synthetic(mesh, ds.tpl, s.gt.intrinsics, corpus,
                               seed_mix(set_seed, static_cast<uint64_t>(j)));
    h = fnv1a64(s.image.data.data(), s.image.data.size(), h);
  }
  result.rendered_hash = h;

  TrainConfig branch = ablation_variant(config, false, false);
  TrainConfig original_cfg = branch;
  original_cfg.out_dir = config.out_dir / "original";
  TrainConfig synthetic_cfg = branch;
  synthetic_cfg.out_dir = config.out_dir / "synthetic";

  result.original_trained =
      train_on(train_data, eval_data, est, nullptr, ds.tpl.content_hash, original_cfg).final_eval;
  result.synthetic_trained =
      train_on(synthetic_data, eval_data, est, nullptr, ds.tpl.content_hash, synthetic_cfg)
          .final_eval;
  result.untrained = evaluate(est, est.init_params(config.seed), eval_data);

  result.table = metrics_table({{"Trained on originals", result.original_trained},
                                {"Trained on re-renders", result.synthetic_trained},
                                {"Untrained init", result.untrained}});
  char line[64];
  std::snprintf(line, sizeof line, "rendered training set hash: %016llx\n",
                static_cast<unsigned long long>(result.rendered_hash));
  result.table += line;

  std::ofstream table_file(config.out_dir / "synthetic_only.txt", std::ios::trunc);
  if (!table_file) throw_io("cannot write report under " + config.out_dir.string());
  table_file << result.table;
  return result;
}

}  // namespace rehand
