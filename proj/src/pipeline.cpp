#include "pcf/pipeline.hpp"

#include <filesystem>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "pcf/image_io.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace pcf {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::uint64_t stage_seed(std::uint64_t root, std::uint64_t tag) {
  std::uint64_t z = root ^ (tag * 0x9e3779b97f4a7c15ull);
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

constexpr std::uint64_t kSceneTag = 1;
constexpr std::uint64_t kNoiseTag = 2;
constexpr std::uint64_t kTrainTag = 3;

}  // namespace

void RunConfig::derive_seeds() {
  scene.seed = stage_seed(seed, kSceneTag);
  train.seed = stage_seed(seed, kTrainTag);
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw std::runtime_error("malformed config " + path + ": " + e.what());
  }
  RunConfig cfg;
  auto get = [&](const char* key, auto& field) {
    if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
  };
  get("k_instances", cfg.scene.k_instances);
  get("n_views", cfg.scene.n_views);
  get("canvas_width", cfg.scene.canvas_width);
  get("canvas_height", cfg.scene.canvas_height);
  get("view_width", cfg.scene.view_width);
  get("view_height", cfg.scene.view_height);
  get("n_thing_classes", cfg.scene.n_thing_classes);
  get("permute_ids", cfg.permute_ids);
  get("split_prob", cfg.split_prob);
  get("anchors", cfg.n_anchors);
  get("window", cfg.window_w);
  get("n_dims", cfg.train.n_dims);
  get("epochs", cfg.train.epochs);
  get("cross_view_epochs", cfg.train.cross_view_epochs);
  get("batch_pixels", cfg.train.batch_pixels);
  get("learning_rate", cfg.train.learning_rate);
  get("tau", cfg.train.tau);
  get("w_cross", cfg.train.w_cross);
  get("w_reg", cfg.train.w_reg);
  get("fixed_sigma2", cfg.train.fixed_sigma2);
  get("out", cfg.out_dir);
  get("seed", cfg.seed);
  get("threads", cfg.threads);
  get("band_radius", cfg.uncertainty_band_radius);
  if (j.contains("optimizer")) {
    std::string o = j.at("optimizer").get<std::string>();
    if (o == "sgd") cfg.train.optimizer = OptimizerKind::GradientDescent;
    else if (o == "adam") cfg.train.optimizer = OptimizerKind::AdaptiveMoment;
    else throw std::runtime_error("unknown optimizer: " + o);
  }
  if (j.contains("kernel")) {
    std::string k = j.at("kernel").get<std::string>();
    if (k == "deterministic") cfg.train.deterministic_kernel = true;
    else if (k != "probabilistic") throw std::runtime_error("unknown kernel mode: " + k);
  }
  if (j.contains("threshold")) {
    if (j.at("threshold").is_string()) {
      if (j.at("threshold").get<std::string>() != "auto")
        throw std::runtime_error("threshold must be a number or \"auto\"");
      cfg.threshold_override.reset();
    } else {
      cfg.threshold_override = j.at("threshold").get<double>();
    }
  }
  if (j.contains("threshold_mode")) {
    std::string m = j.at("threshold_mode").get<std::string>();
    if (m == "per_view") cfg.threshold_mode = ThresholdMode::PerViewMeanOfMeans;
    else if (m == "global") cfg.threshold_mode = ThresholdMode::GlobalPairMean;
    else throw std::runtime_error("unknown threshold_mode: " + m);
  }
  return cfg;
}

void save_run_config(const RunConfig& cfg, const std::string& path) {
  json j;
  j["k_instances"] = cfg.scene.k_instances;
  j["n_views"] = cfg.scene.n_views;
  j["canvas_width"] = cfg.scene.canvas_width;
  j["canvas_height"] = cfg.scene.canvas_height;
  j["view_width"] = cfg.scene.view_width;
  j["view_height"] = cfg.scene.view_height;
  j["n_thing_classes"] = cfg.scene.n_thing_classes;
  j["permute_ids"] = cfg.permute_ids;
  j["split_prob"] = cfg.split_prob;
  j["anchors"] = cfg.n_anchors;
  j["window"] = cfg.window_w;
  j["n_dims"] = cfg.train.n_dims;
  j["epochs"] = cfg.train.epochs;
  j["cross_view_epochs"] = cfg.train.cross_view_epochs;
  j["batch_pixels"] = cfg.train.batch_pixels;
  j["learning_rate"] = cfg.train.learning_rate;
  j["tau"] = cfg.train.tau;
  j["w_cross"] = cfg.train.w_cross;
  j["w_reg"] = cfg.train.w_reg;
  j["optimizer"] =
      cfg.train.optimizer == OptimizerKind::AdaptiveMoment ? "adam" : "sgd";
  j["kernel"] = cfg.train.deterministic_kernel ? "deterministic" : "probabilistic";
  j["fixed_sigma2"] = cfg.train.fixed_sigma2;
  if (cfg.threshold_override) j["threshold"] = *cfg.threshold_override;
  else j["threshold"] = "auto";
  j["threshold_mode"] =
      cfg.threshold_mode == ThresholdMode::PerViewMeanOfMeans ? "per_view" : "global";
  j["out"] = cfg.out_dir;
  j["seed"] = cfg.seed;
  j["threads"] = cfg.threads;
  j["band_radius"] = cfg.uncertainty_band_radius;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write config: " + path);
  out << j.dump(2) << "\n";
}

Scene make_noisy_scene(const RunConfig& cfg) {
  if (cfg.window_w % 2 == 0) throw std::invalid_argument("window must be odd");
  RunConfig c = cfg;
  c.derive_seeds();
  Scene scene = generate_scene(c.scene);
  const std::uint64_t noise_root = stage_seed(c.seed, kNoiseTag);
  for (View& view : scene.views) {
    const std::uint64_t vs = stage_seed(noise_root, static_cast<std::uint64_t>(view.view_id));
    if (c.permute_ids) permute_ids(view, stage_seed(vs, 1));
    if (c.split_prob > 0.0) split_instances(view, c.split_prob, stage_seed(vs, 2));
    if (c.n_anchors > 0) inject_boundary_noise(view, c.n_anchors, c.window_w, stage_seed(vs, 3));
  }
  return scene;
}

ClusterOutput cluster_scene(const Scene& scene, const EmbeddingTable& table,
                            const RunConfig& cfg) {
  if (table.size() != scene.point_count())
    throw std::invalid_argument("checkpoint point count does not match the scene");
  ClusterOutput out;
  std::vector<GroupedFeature> features = group_instances(scene, table);
  SimilarityGraph graph = build_similarity_graph(features);
  out.threshold = cfg.threshold_override ? *cfg.threshold_override
                                         : compute_threshold(features, cfg.threshold_mode);
  out.prototypes = select_prototypes(features, graph, out.threshold);
  std::vector<int> semantics = majority_semantics(scene);
  for (const View& v : scene.views)
    out.predictions.push_back(assign_labels(scene, v.view_id, table, out.prototypes, semantics));
  return out;
}

std::vector<PanopticMask> gt_masks(const Scene& scene) {
  std::vector<PanopticMask> masks;
  for (const View& v : scene.views) {
    PanopticMask m;
    m.width = v.width;
    m.height = v.height;
    m.semantic_class.assign(v.pixels(), 0);
    m.instance_id.assign(v.pixels(), 0);
    for (std::size_t i = 0; i < v.pixels(); ++i) {
      const std::int32_t gt = v.gt_inst[i];
      if (gt <= 0) continue;
      m.instance_id[i] = gt;
      m.semantic_class[i] = scene.instance_class.at(gt - 1);
    }
    masks.push_back(std::move(m));
  }
  return masks;
}

PqResult evaluate_scene(const Scene& scene, const std::vector<PanopticMask>& predictions) {
  if (predictions.size() != scene.views.size())
    throw std::invalid_argument("prediction count does not match view count");
  auto pred_segs = merge_to_scene_segments(predictions);
  auto gt_segs = merge_to_scene_segments(gt_masks(scene));
  return pq_scene(pred_segs, gt_segs);
}

namespace {

template <typename F>
auto run_stage(const char* name, F&& f) {
  try {
    return f();
  } catch (const std::exception& e) {
    throw std::runtime_error(std::string(name) + " stage failed: " + e.what());
  }
}

}  // namespace

RunOutput run_pipeline(const RunConfig& cfg, bool write_outputs) {
#ifdef _OPENMP
  omp_set_num_threads(cfg.threads > 0 ? cfg.threads : 1);
#endif
  RunConfig c = cfg;
  c.derive_seeds();

  const std::string dir = c.out_dir;
  if (write_outputs) {
    fs::create_directories(dir);
    save_run_config(cfg, dir + "/effective_config.json");
  }

  Scene scene = run_stage("synth", [&] { return make_noisy_scene(c); });
  if (write_outputs) save_scene(scene, dir + "/scene");

  TrainResult trained = run_stage("train", [&] { return train(scene, c.train); });
  if (write_outputs) {
    save_checkpoint(trained.table, dir + "/checkpoint.json");
    std::ofstream log(dir + "/loss_log.csv");
    log << "epoch,pixel_contra,concen,cross,reg,total\n";
    for (const EpochLoss& e : trained.history)
      log << e.epoch << "," << e.pixel_contra << "," << e.concen << "," << e.cross
          << "," << e.reg << "," << e.total << "\n";
  }

  ClusterOutput cluster =
      run_stage("cluster", [&] { return cluster_scene(scene, trained.table, c); });
  if (write_outputs) {
    save_prototypes(cluster.prototypes, dir + "/prototypes.json");
    for (std::size_t v = 0; v < scene.views.size(); ++v) {
      const PanopticMask& m = cluster.predictions[v];
      const int id = scene.views[v].view_id;
      std::vector<std::uint16_t> inst(m.pixels()), sem(m.pixels());
      for (std::size_t i = 0; i < m.pixels(); ++i) {
        inst[i] = static_cast<std::uint16_t>(m.instance_id[i]);
        sem[i] = static_cast<std::uint16_t>(m.semantic_class[i]);
      }
      write_pgm16(dir + "/view_" + std::to_string(id) + "_pred_inst.pgm", m.width,
                  m.height, inst);
      write_pgm16(dir + "/view_" + std::to_string(id) + "_pred_sem.pgm", m.width,
                  m.height, sem);
      // colorized instance visualization
      std::vector<std::uint8_t> rgb(m.pixels() * 3);
      for (std::size_t i = 0; i < m.pixels(); ++i)
        id_to_color(m.instance_id[i], rgb[i * 3], rgb[i * 3 + 1], rgb[i * 3 + 2]);
      write_ppm8(dir + "/view_" + std::to_string(id) + "_pred_inst.ppm", m.width,
                 m.height, rgb);
    }
  }

  RunOutput out;
  out.n_prototypes = cluster.prototypes.prototypes.size();
  out.threshold = cluster.threshold;
  out.metrics = run_stage("eval", [&] { return evaluate_scene(scene, cluster.predictions); });
  out.uncertainty = uncertainty_stats(scene, trained.table, c.uncertainty_band_radius);

  if (write_outputs) {
    save_pq_report(out.metrics, dir + "/metrics.json");
    std::ofstream csv(dir + "/uncertainty.csv");
    csv << "region,bin_log10_lo,bin_log10_hi,count\n";
    auto dump = [&](const char* name, const Histogram& h) {
      const std::size_t bins = h.counts.size();
      for (std::size_t b = 0; b < bins; ++b) {
        double lo = h.lo + (h.hi - h.lo) * b / bins;
        double hi = h.lo + (h.hi - h.lo) * (b + 1) / bins;
        csv << name << "," << lo << "," << hi << "," << h.counts[b] << "\n";
      }
      csv << name << "_mean," << h.mean << ",,\n";
    };
    dump("boundary", out.uncertainty.boundary);
    dump("interior", out.uncertainty.interior);
  }
  return out;
}

}  // namespace pcf
