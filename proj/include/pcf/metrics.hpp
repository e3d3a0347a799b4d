#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "pcf/panoptic.hpp"
#include "pcf/scene.hpp"
#include "pcf/table.hpp"

namespace pcf {

// One scene-level segment: the multi-view pixel union of a consistent
// (semantic class, instance id) pair.
struct SceneSegment {
  int semantic_class = 0;
  int instance_id = 0;  // 0 for stuff segments
  std::vector<std::uint64_t> pixels;  // sorted encoded (view, y, x)
};

struct ClassPq {
  double pq = 0.0, sq = 0.0, rq = 0.0;
  int tp = 0, fp = 0, fn = 0;
};

struct PqResult {
  double pq = 0.0, sq = 0.0, rq = 0.0;
  int n_tp = 0, n_fp = 0, n_fn = 0;
  std::map<int, ClassPq> per_class;
};

std::vector<SceneSegment> merge_to_scene_segments(const std::vector<PanopticMask>& masks);

// Scene-level panoptic quality: class-respecting matching at IoU > 0.5,
// averaged over classes present in the ground truth.
PqResult pq_scene(const std::vector<SceneSegment>& pred,
                  const std::vector<SceneSegment>& gt);

struct Histogram {
  double lo = 0.0, hi = 0.0;  // log10 variance-product range
  std::vector<std::size_t> counts;
  double mean = 0.0;  // mean variance product (linear scale)
};

struct UncertaintyStats {
  Histogram boundary;
  Histogram interior;
};

// Classifies foreground pixels by distance to a GT instance-label change and
// histograms the per-pixel variance product.
UncertaintyStats uncertainty_stats(const Scene& scene, const EmbeddingTable& table,
                                   int band_radius);

void save_pq_report(const PqResult& result, const std::string& path);

}  // namespace pcf
