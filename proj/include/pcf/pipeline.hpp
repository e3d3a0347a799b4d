#pragma once

#include <optional>
#include <string>

#include "pcf/metrics.hpp"
#include "pcf/mvoa.hpp"
#include "pcf/synth.hpp"
#include "pcf/trainer.hpp"

namespace pcf {

// Full-run configuration shared by the CLI subcommands.
struct RunConfig {
  SceneParams scene;
  // noise, applied per view in the fixed order permute -> split -> boundary
  bool permute_ids = false;
  double split_prob = 0.0;
  int n_anchors = 0;
  int window_w = 3;

  TrainConfig train;

  // MVOA suppression threshold. The default pins 0.5, which sits between the
  // intra-instance (near 1) and inter-instance (near 0) kernel modes once
  // training has separated the instances. Clearing it (config "threshold":
  // "auto", flag --auto-threshold) derives the threshold from the data via
  // compute_threshold instead.
  std::optional<double> threshold_override = 0.5;
  ThresholdMode threshold_mode = ThresholdMode::PerViewMeanOfMeans;

  std::string out_dir = "out";
  std::uint64_t seed = 0;
  int threads = 1;
  int uncertainty_band_radius = 2;

  // Pushes the top-level seed into the per-stage sub-seeds.
  void derive_seeds();
};

RunConfig load_run_config(const std::string& path);
void save_run_config(const RunConfig& cfg, const std::string& path);

struct ClusterOutput {
  PrototypeSet prototypes;
  double threshold = 0.0;
  std::vector<PanopticMask> predictions;  // one per view, in scene order
};

Scene make_noisy_scene(const RunConfig& cfg);
ClusterOutput cluster_scene(const Scene& scene, const EmbeddingTable& table,
                            const RunConfig& cfg);
PqResult evaluate_scene(const Scene& scene, const std::vector<PanopticMask>& predictions);

struct RunOutput {
  PqResult metrics;
  std::size_t n_prototypes = 0;
  double threshold = 0.0;
  UncertaintyStats uncertainty;
};

// synth -> train -> cluster -> eval, writing all artifacts when out_dir is
// non-empty (pass empty to keep everything in memory).
RunOutput run_pipeline(const RunConfig& cfg, bool write_outputs);

std::vector<PanopticMask> gt_masks(const Scene& scene);

}  // namespace pcf
