// Command-line front end. Talks to the library exclusively through the C API;
// flags are serialized into the JSON configs it understands. Exit codes match
// rh_status: 0 ok, 1 generic, 2 bad config/usage, 3 numerical failure.
#include <rehand.h>

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

namespace {

using nlohmann::json;

int report(rh_status st) {
  if (st != RH_OK) std::fprintf(stderr, "error: %s\n", rh_last_error());
  return static_cast<int>(st);
}

bool write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  out << text;
  return static_cast<bool>(out);
}

// Storage + option handles for the knobs shared by train, ablate and
// synthetic-only. Only flags the user actually passed are serialized, so
// library defaults (and --config values) stay authoritative.
struct TrainFlags {
  std::string dataset, out_dir, backgrounds, config_file;
  uint64_t seed = 1;
  int batch_size = 16, max_epochs = 30, plateau_epochs = 20, eval_every = 1, max_bad_steps = 5;
  double initial_lr = 1e-4, lr_decay = 0.5, weight_decay = 1e-4;
  double alpha = 1.0, beta = 1.0, gamma = 1.0;
  std::string norm = "l1", intrinsics = "predicted", corr_grads = "both";
  bool no_recycle = false, no_corr = false;
  std::map<std::string, CLI::Option*> opt;
};

void add_train_flags(CLI::App* cmd, TrainFlags& f) {
  cmd->add_option("--dataset", f.dataset, "dataset directory")->required();
  cmd->add_option("--out-dir", f.out_dir, "fresh output directory for logs and checkpoint")
      ->required();
  cmd->add_option("--seed", f.seed, "seed for init, shuffling and renders")->required();
  f.opt["backgrounds"] =
      cmd->add_option("--backgrounds", f.backgrounds,
                      "background manifest override (default: the dataset's training pool)");
  cmd->add_option("--config", f.config_file, "JSON config file; explicit flags override it");
  f.opt["batch_size"] = cmd->add_option("--batch-size", f.batch_size, "samples per update");
  f.opt["max_epochs"] = cmd->add_option("--epochs", f.max_epochs, "training epochs");
  f.opt["initial_lr"] = cmd->add_option("--lr", f.initial_lr, "initial learning rate");
  f.opt["lr_decay"] = cmd->add_option("--lr-decay", f.lr_decay, "plateau decay factor");
  f.opt["plateau_epochs"] =
      cmd->add_option("--plateau-epochs", f.plateau_epochs, "evals without a new best per decay");
  f.opt["weight_decay"] = cmd->add_option("--weight-decay", f.weight_decay, "AdamW weight decay");
  f.opt["alpha"] = cmd->add_option("--alpha", f.alpha, "weight of the original-pass loss");
  f.opt["beta"] = cmd->add_option("--beta", f.beta, "weight of the recycled-pass loss");
  f.opt["gamma"] = cmd->add_option("--gamma", f.gamma, "weight of the self-correlation loss");
  f.opt["norm"] = cmd->add_option("--norm", f.norm, "distance norm: l1 or l2");
  f.opt["intrinsics"] = cmd->add_option("--intrinsics", f.intrinsics,
                                        "camera source for losses: predicted or ground-truth");
  f.opt["corr_grads"] = cmd->add_option(
      "--corr-grads", f.corr_grads, "phases the correlation loss backpropagates into: both or phase2");
  f.opt["eval_every"] = cmd->add_option("--eval-every", f.eval_every, "epochs between evals");
  f.opt["max_bad_steps"] = cmd->add_option("--max-bad-steps", f.max_bad_steps,
                                           "consecutive aborted steps tolerated before giving up");
  f.opt["no_recycle"] = cmd->add_flag(
      "--no-recycle", f.no_recycle,
      "single-phase training (implies --beta 0 and --no-corr unless overridden)");
  f.opt["no_corr"] = cmd->add_flag("--no-corr", f.no_corr,
                                   "drop the self-correlation terms (implies --gamma 0)");
}

// Flags land on top of the --config file (if any); paths and seed always come
// from the command line.
std::string build_train_config(const TrainFlags& f) {
  json j = json::object();
  if (!f.config_file.empty()) {
    std::ifstream in(f.config_file);
    if (!in) throw std::runtime_error("cannot open config file: " + f.config_file);
    std::stringstream buf;
    buf << in.rdbuf();
    j = json::parse(buf.str());  // malformed text is reported as usage error
    if (!j.is_object()) throw std::runtime_error("config file must hold a JSON object");
  }
  j["dataset_dir"] = f.dataset;
  j["out_dir"] = f.out_dir;
  j["seed"] = f.seed;
  if (f.opt.at("backgrounds")->count()) j["backgrounds"] = f.backgrounds;
  if (f.opt.at("batch_size")->count()) j["batch_size"] = f.batch_size;
  if (f.opt.at("max_epochs")->count()) j["max_epochs"] = f.max_epochs;
  if (f.opt.at("initial_lr")->count()) j["initial_lr"] = f.initial_lr;
  if (f.opt.at("lr_decay")->count()) j["lr_decay"] = f.lr_decay;
  if (f.opt.at("plateau_epochs")->count()) j["plateau_epochs"] = f.plateau_epochs;
  if (f.opt.at("weight_decay")->count()) j["weight_decay"] = f.weight_decay;
  if (f.opt.at("alpha")->count()) j["alpha"] = f.alpha;
  if (f.opt.at("beta")->count()) j["beta"] = f.beta;
  if (f.opt.at("gamma")->count()) j["gamma"] = f.gamma;
  if (f.opt.at("norm")->count()) j["norm"] = f.norm;
  if (f.opt.at("intrinsics")->count()) j["intrinsics"] = f.intrinsics;
  if (f.opt.at("corr_grads")->count()) j["corr_grads"] = f.corr_grads;
  if (f.opt.at("eval_every")->count()) j["eval_every"] = f.eval_every;
  if (f.opt.at("max_bad_steps")->count()) j["max_bad_steps"] = f.max_bad_steps;
  if (f.no_recycle) {
    j["recycle"] = false;
    if (!f.opt.at("beta")->count()) j["beta"] = 0.0;
    if (!f.no_corr && !f.opt.at("no_corr")->count()) j["corr"] = false;
    if (!f.opt.at("gamma")->count()) j["gamma"] = 0.0;
  }
  if (f.no_corr) {
    j["corr"] = false;
    if (!f.opt.at("gamma")->count()) j["gamma"] = 0.0;
  }
  return j.dump();
}

int run_generate(const std::string& out, const json& cfg) {
  int rc = report(rh_generate_dataset(out.c_str(), cfg.dump().c_str()));
  if (rc == 0) std::printf("dataset written to %s\n", out.c_str());
  return rc;
}

int run_train(const TrainFlags& f) {
  char* summary = nullptr;
  int rc = report(rh_train(build_train_config(f).c_str(), &summary));
  if (rc == 0) {
    std::printf("%s\n", summary);
    rh_string_free(summary);
  }
  return rc;
}

int run_eval(const std::string& dataset, const std::string& checkpoint, const std::string& split,
             bool inject_gt, const std::string& out_file) {
  rh_dataset* ds = rh_dataset_open(dataset.c_str());
  if (!ds) return report(RH_ERROR);
  rh_model* model = rh_model_load(ds, checkpoint.c_str());
  if (!model) {
    rh_dataset_close(ds);
    return report(RH_ERROR);
  }
  char* json_report = nullptr;
  rh_status st = rh_evaluate(model, ds, split.c_str(), inject_gt ? 1 : 0, &json_report);
  int rc = report(st);
  if (rc == 0) {
    if (out_file.empty()) {
      std::printf("%s\n", json_report);
    } else if (write_text(out_file, json_report)) {
      std::printf("report written to %s\n", out_file.c_str());
    } else {
      std::fprintf(stderr, "error: cannot write %s\n", out_file.c_str());
      rc = 1;
    }
    rh_string_free(json_report);
  }
  rh_model_close(model);
  rh_dataset_close(ds);
  return rc;
}

int run_render(const std::string& dataset, const std::string& split, int64_t index,
               const std::string& checkpoint, bool gt_mesh, uint64_t seed,
               const std::string& out_png) {
  rh_dataset* ds = rh_dataset_open(dataset.c_str());
  if (!ds) return report(RH_ERROR);
  rh_model* model = checkpoint.empty() ? rh_model_init(ds, 0) : rh_model_load(ds, checkpoint.c_str());
  if (!model) {
    rh_dataset_close(ds);
    return report(RH_ERROR);
  }
  // Without a checkpoint there is no estimate worth drawing.
  int use_gt = (gt_mesh || checkpoint.empty()) ? 1 : 0;
  int rc = report(rh_render(model, ds, split.c_str(), index, use_gt, seed, out_png.c_str()));
  if (rc == 0) std::printf("wrote %s\n", out_png.c_str());
  rh_model_close(model);
  rh_dataset_close(ds);
  return rc;
}

int run_ablate(const TrainFlags& f, const std::vector<uint64_t>& seeds) {
  char* table = nullptr;
  int rc = report(rh_ablation(build_train_config(f).c_str(), seeds.data(), seeds.size(), &table));
  if (rc == 0) {
    std::printf("%s", table);
    rh_string_free(table);
  }
  return rc;
}

int run_synthetic_only(const TrainFlags& f) {
  char* table = nullptr;
  int rc = report(rh_synthetic_only(build_train_config(f).c_str(), &table));
  if (rc == 0) {
    std::printf("%s", table);
    rh_string_free(table);
  }
  return rc;
}

int run_grad_check(int trials, uint64_t seed, double eps, int coords, const std::string& norm,
                   double threshold) {
  json j = {{"trials", trials}, {"seed", seed}, {"eps", eps}, {"coords", coords}, {"norm", norm}};
  double max_err = 0.0;
  int rc = report(rh_grad_check(j.dump().c_str(), &max_err));
  if (rc != 0) return rc;
  std::printf("max relative gradient error over %d trials: %.3e (threshold %.3e)\n", trials,
              max_err, threshold);
  if (!(max_err <= threshold)) {
    std::fprintf(stderr, "error: analytic gradient disagrees with finite differences\n");
    return static_cast<int>(RH_ERROR_NUMERIC);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"rehand: recycled two-phase hand pose and mesh estimation"};
  app.require_subcommand(1);
  int rc = 0;

  // generate-dataset ---------------------------------------------------
  auto* gen = app.add_subcommand("generate-dataset", "write a self-contained synthetic dataset");
  struct {
    std::string out;
    int train_count = 512, eval_count = 128, backgrounds = 12, eval_backgrounds = 4,
        background_size = 160, width = 128, height = 128;
    uint64_t seed = 1;
    std::map<std::string, CLI::Option*> opt;
  } g;
  gen->add_option("--out", g.out, "target directory (must not contain files)")->required();
  g.opt["train_count"] = gen->add_option("--train-count", g.train_count, "training samples");
  g.opt["eval_count"] = gen->add_option("--eval-count", g.eval_count, "evaluation samples");
  g.opt["background_count"] =
      gen->add_option("--backgrounds", g.backgrounds, "background corpus size");
  g.opt["eval_background_count"] = gen->add_option("--eval-backgrounds", g.eval_backgrounds,
                                                   "backgrounds held out for evaluation");
  g.opt["background_size"] =
      gen->add_option("--background-size", g.background_size, "background image side length");
  g.opt["width"] = gen->add_option("--width", g.width, "camera raster width");
  g.opt["height"] = gen->add_option("--height", g.height, "camera raster height");
  g.opt["seed"] = gen->add_option("--seed", g.seed, "generation seed");
  gen->callback([&] {
    json j = json::object();
    for (const auto& [key, option] : g.opt)
      if (option->count()) {
        if (key == "seed")
          j[key] = g.seed;
        else if (key == "train_count")
          j[key] = g.train_count;
        else if (key == "eval_count")
          j[key] = g.eval_count;
        else if (key == "background_count")
          j[key] = g.backgrounds;
        else if (key == "eval_background_count")
          j[key] = g.eval_backgrounds;
        else if (key == "background_size")
          j[key] = g.background_size;
        else if (key == "width")
          j[key] = g.width;
        else if (key == "height")
          j[key] = g.height;
      }
    rc = run_generate(g.out, j);
  });

  // train ----------------------------------------------------------------
  auto* tr = app.add_subcommand("train", "two-phase training with mesh recycling");
  TrainFlags tf;
  add_train_flags(tr, tf);
  tr->callback([&] { rc = run_train(tf); });

  // eval -----------------------------------------------------------------
  auto* ev = app.add_subcommand("eval", "score a checkpoint on a dataset split");
  struct {
    std::string dataset, checkpoint, split = "eval", out;
    bool inject_gt = false;
  } e;
  ev->add_option("--dataset", e.dataset, "dataset directory")->required();
  ev->add_option("--checkpoint", e.checkpoint, "checkpoint file")->required();
  ev->add_option("--split", e.split, "train or eval (default eval)");
  ev->add_option("--out", e.out, "write the JSON report here instead of stdout");
  ev->add_flag("--inject-gt", e.inject_gt, "score ground truth against itself (wiring check)");
  ev->callback([&] { rc = run_eval(e.dataset, e.checkpoint, e.split, e.inject_gt, e.out); });

  // render ---------------------------------------------------------------
  auto* rd = app.add_subcommand("render", "render one sample's hand over a pool background");
  struct {
    std::string dataset, checkpoint, split = "train", out;
    int64_t index = 0;
    uint64_t seed = 1;
    bool gt = false;
  } r;
  rd->add_option("--dataset", r.dataset, "dataset directory")->required();
  rd->add_option("--index", r.index, "sample index within the split")->required();
  rd->add_option("--out", r.out, "output PNG path")->required();
  rd->add_option("--split", r.split, "train or eval (default train)");
  rd->add_option("--checkpoint", r.checkpoint, "render this model's estimate");
  rd->add_option("--seed", r.seed, "background selection seed");
  rd->add_flag("--gt", r.gt, "render the stored ground-truth mesh (default without --checkpoint)");
  rd->callback([&] { rc = run_render(r.dataset, r.split, r.index, r.checkpoint, r.gt, r.seed, r.out); });

  // ablate -----------------------------------------------------------------
  auto* ab = app.add_subcommand("ablate",
                                "per-seed comparison: single phase, +recycling, +self-correlation");
  TrainFlags af;
  std::vector<uint64_t> seeds{1, 2, 3};
  add_train_flags(ab, af);
  ab->get_option("--seed")->required(false)->description(
      "ignored; per-run seeds come from --seeds");
  ab->add_option("--seeds", seeds, "comma-separated run seeds (at least three)")
      ->delimiter(',');
  ab->callback([&] { rc = run_ablate(af, seeds); });

  // synthetic-only ---------------------------------------------------------
  auto* so = app.add_subcommand(
      "synthetic-only", "train on the training set re-rendered from ground-truth meshes");
  TrainFlags sf;
  add_train_flags(so, sf);
  so->callback([&] { rc = run_synthetic_only(sf); });

  // grad-check ---------------------------------------------------------------
  auto* gc = app.add_subcommand("grad-check",
                                "compare analytic gradients against central differences");
  struct {
    int trials = 50, coords = 64;
    uint64_t seed = 1;
    double eps = 1e-4, threshold = 1e-4;
    std::string norm = "l2";
  } k;
  gc->add_option("--trials", k.trials, "number of random scenes");
  gc->add_option("--seed", k.seed, "base seed");
  gc->add_option("--eps", k.eps, "finite-difference step");
  gc->add_option("--coords", k.coords, "parameter coordinates sampled per trial");
  gc->add_option("--norm", k.norm, "objective norm: l1 or l2");
  gc->add_option("--threshold", k.threshold, "max relative error accepted");
  gc->callback(
      [&] { rc = run_grad_check(k.trials, k.seed, k.eps, k.coords, k.norm, k.threshold); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;  // bad usage maps to the config exit code
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return rc;
}
