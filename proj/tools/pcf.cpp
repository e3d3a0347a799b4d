#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "pcf/image_io.hpp"
#include "pcf/pipeline.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace fs = std::filesystem;
using namespace pcf;

namespace {

struct CommonOpts {
  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  int threads = 1;
  std::string kernel = "probabilistic";
  double fixed_sigma2 = 1.0;
  bool permute = false;
  double split_prob = 0.0;
  int anchors = 0;
  int window = 3;
  double threshold = -1.0;
  bool auto_threshold = false;
  int k_instances = 10;
  int n_views = 6;
  int epochs = 200;
};

void add_common(CLI::App* cmd, CommonOpts& o) {
  cmd->add_option("--config", o.config_path, "JSON config file; flags override it");
  cmd->add_option("--out", o.out_dir, "output directory");
  cmd->add_option("--seed", o.seed, "top-level seed");
  cmd->add_option("--threads", o.threads, "worker thread count (1 = deterministic default)");
  cmd->add_option("--kernel", o.kernel, "probabilistic|deterministic")
      ->check(CLI::IsMember({"probabilistic", "deterministic"}));
  cmd->add_option("--fixed-sigma2", o.fixed_sigma2, "frozen variance of the deterministic arm");
  cmd->add_flag("--permute-ids", o.permute, "apply per-view instance id permutation");
  cmd->add_option("--split-prob", o.split_prob, "per-instance split probability");
  cmd->add_option("--anchors", o.anchors, "boundary-noise anchor count");
  cmd->add_option("--window", o.window, "boundary-noise window size (odd)");
  cmd->add_option("--threshold", o.threshold, "manual MVOA threshold override");
  cmd->add_flag("--auto-threshold", o.auto_threshold,
                "derive the MVOA threshold from the data instead of the fixed default");
  cmd->add_option("--instances", o.k_instances, "instance count for scene generation");
  cmd->add_option("--views", o.n_views, "view count for scene generation");
  cmd->add_option("--epochs", o.epochs, "training epochs");
}

RunConfig build_config(const CLI::App* cmd, const CommonOpts& o) {
  RunConfig cfg;
  if (!o.config_path.empty()) cfg = load_run_config(o.config_path);
  auto set = [&](const char* flag, auto&& apply) {
    if (cmd->count(flag) > 0) apply();
  };
  set("--out", [&] { cfg.out_dir = o.out_dir; });
  set("--seed", [&] { cfg.seed = o.seed; });
  set("--threads", [&] { cfg.threads = o.threads; });
  set("--kernel", [&] { cfg.train.deterministic_kernel = o.kernel == "deterministic"; });
  set("--fixed-sigma2", [&] { cfg.train.fixed_sigma2 = o.fixed_sigma2; });
  set("--permute-ids", [&] { cfg.permute_ids = o.permute; });
  set("--split-prob", [&] { cfg.split_prob = o.split_prob; });
  set("--anchors", [&] { cfg.n_anchors = o.anchors; });
  set("--window", [&] { cfg.window_w = o.window; });
  set("--threshold", [&] { cfg.threshold_override = o.threshold; });
  set("--auto-threshold", [&] { cfg.threshold_override.reset(); });
  set("--instances", [&] { cfg.scene.k_instances = o.k_instances; });
  set("--views", [&] { cfg.scene.n_views = o.n_views; });
  set("--epochs", [&] { cfg.train.epochs = o.epochs; });
  if (cfg.window_w % 2 == 0)
    throw std::invalid_argument("window must be odd");
  if (cfg.out_dir.empty()) throw std::invalid_argument("an output directory is required");
#ifdef _OPENMP
  omp_set_num_threads(cfg.threads > 0 ? cfg.threads : 1);
#endif
  return cfg;
}

void echo_config(const RunConfig& cfg) {
  fs::create_directories(cfg.out_dir);
  save_run_config(cfg, cfg.out_dir + "/effective_config.json");
}

int cmd_synth(const RunConfig& cfg) {
  echo_config(cfg);
  Scene scene = make_noisy_scene(cfg);
  save_scene(scene, cfg.out_dir);
  std::size_t fg = 0;
  for (const View& v : scene.views)
    for (auto id : v.inst)
      if (id > 0) ++fg;
  std::cout << "scene: " << scene.n_instances() << " instances, " << scene.views.size()
            << " views, " << fg << " foreground pixels\n"
            << "noise: permute=" << (cfg.permute_ids ? "on" : "off")
            << " split_prob=" << cfg.split_prob << " anchors=" << cfg.n_anchors
            << " window=" << cfg.window_w << "\n";
  return 0;
}

int cmd_train(const std::string& scene_dir, RunConfig cfg) {
  echo_config(cfg);
  cfg.derive_seeds();
  Scene scene = load_scene(scene_dir);
  TrainResult result = train(scene, cfg.train);
  save_checkpoint(result.table, cfg.out_dir + "/checkpoint.json");
  std::ofstream log(cfg.out_dir + "/loss_log.csv");
  log << "epoch,pixel_contra,concen,cross,reg,total\n";
  for (const EpochLoss& e : result.history)
    log << e.epoch << "," << e.pixel_contra << "," << e.concen << "," << e.cross << ","
        << e.reg << "," << e.total << "\n";
  if (!result.history.empty())
    std::cout << "final epoch loss: " << result.history.back().total << "\n";
  std::cout << "checkpoint: " << cfg.out_dir << "/checkpoint.json\n";
  return 0;
}

int cmd_cluster(const std::string& scene_dir, const std::string& checkpoint,
                const RunConfig& cfg) {
  echo_config(cfg);
  Scene scene = load_scene(scene_dir);
  EmbeddingTable table = load_checkpoint(checkpoint);
  ClusterOutput out = cluster_scene(scene, table, cfg);
  save_prototypes(out.prototypes, cfg.out_dir + "/prototypes.json");
  for (std::size_t v = 0; v < scene.views.size(); ++v) {
    const PanopticMask& m = out.predictions[v];
    const int id = scene.views[v].view_id;
    std::vector<std::uint16_t> inst(m.pixels()), sem(m.pixels());
    for (std::size_t i = 0; i < m.pixels(); ++i) {
      inst[i] = static_cast<std::uint16_t>(m.instance_id[i]);
      sem[i] = static_cast<std::uint16_t>(m.semantic_class[i]);
    }
    write_pgm16(cfg.out_dir + "/view_" + std::to_string(id) + "_pred_inst.pgm",
                m.width, m.height, inst);
    write_pgm16(cfg.out_dir + "/view_" + std::to_string(id) + "_pred_sem.pgm",
                m.width, m.height, sem);
  }
  std::cout << "prototypes: " << out.prototypes.prototypes.size()
            << " threshold: " << out.threshold << "\n";
  return 0;
}

int cmd_eval(const std::string& scene_dir, const std::string& pred_dir,
             const RunConfig& cfg) {
  echo_config(cfg);
  Scene scene = load_scene(scene_dir);
  std::vector<PanopticMask> preds;
  for (const View& v : scene.views) {
    const std::string base = pred_dir + "/view_" + std::to_string(v.view_id);
    if (!fs::exists(base + "_pred_inst.pgm"))
      throw std::runtime_error("missing prediction for view " + std::to_string(v.view_id));
    PanopticMask m;
    int w = 0, h = 0;
    auto inst = read_pgm16(base + "_pred_inst.pgm", w, h);
    m.width = w;
    m.height = h;
    m.instance_id.assign(inst.begin(), inst.end());
    auto sem = read_pgm16(base + "_pred_sem.pgm", w, h);
    m.semantic_class.assign(sem.begin(), sem.end());
    preds.push_back(std::move(m));
  }
  PqResult r = evaluate_scene(scene, preds);
  save_pq_report(r, cfg.out_dir + "/metrics.json");
  std::cout << "PQ: " << r.pq << " SQ: " << r.sq << " RQ: " << r.rq << "\n";
  return 0;
}

int cmd_run(const RunConfig& cfg) {
  RunOutput out = run_pipeline(cfg, /*write_outputs=*/true);
  std::cout << "prototypes: " << out.n_prototypes << " threshold: " << out.threshold
            << "\n"
            << "PQ: " << out.metrics.pq << " SQ: " << out.metrics.sq
            << " RQ: " << out.metrics.rq << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"multi-view panoptic fusion with probabilistic embeddings"};
  app.require_subcommand(1);

  CommonOpts o;
  std::string scene_dir, pred_dir, checkpoint;

  CLI::App* synth = app.add_subcommand("synth", "generate a synthetic scene");
  add_common(synth, o);
  CLI::App* train_cmd = app.add_subcommand("train", "train the embedding table");
  add_common(train_cmd, o);
  train_cmd->add_option("--scene", scene_dir, "scene directory")->required();
  CLI::App* cluster = app.add_subcommand("cluster", "extract prototypes and label views");
  add_common(cluster, o);
  cluster->add_option("--scene", scene_dir, "scene directory")->required();
  cluster->add_option("--checkpoint", checkpoint, "checkpoint file")->required();
  CLI::App* eval_cmd = app.add_subcommand("eval", "score predictions against ground truth");
  add_common(eval_cmd, o);
  eval_cmd->add_option("--scene", scene_dir, "scene directory")->required();
  eval_cmd->add_option("--pred", pred_dir, "predictions directory")->required();
  CLI::App* run_cmd = app.add_subcommand("run", "full synth-train-cluster-eval pipeline");
  add_common(run_cmd, o);

  CLI11_PARSE(app, argc, argv);

  try {
    CLI::App* cmd = app.get_subcommands().front();
    RunConfig cfg = build_config(cmd, o);
    if (cmd == synth) return cmd_synth(cfg);
    if (cmd == train_cmd) return cmd_train(scene_dir, cfg);
    if (cmd == cluster) return cmd_cluster(scene_dir, checkpoint, cfg);
    if (cmd == eval_cmd) return cmd_eval(scene_dir, pred_dir, cfg);
    return cmd_run(cfg);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
