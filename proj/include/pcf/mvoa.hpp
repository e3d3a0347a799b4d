#pragma once

#include <string>
#include <vector>

#include "pcf/panoptic.hpp"
#include "pcf/scene.hpp"
#include "pcf/table.hpp"

namespace pcf {

// One per-view instance: the averaged member embedding and its
// concentration score.
struct GroupedFeature {
  GaussianEmbedding embedding;
  double score = 0.0;  // mean member kernel, in (0, 1]
  int view_id = 0;
  int local_instance_id = 0;
};

struct SimilarityGraph {
  std::size_t n = 0;
  std::vector<double> edges;  // n x n, symmetric, unit diagonal

  double at(std::size_t g, std::size_t h) const { return edges[g * n + h]; }
};

struct PrototypeSet {
  std::vector<GaussianEmbedding> prototypes;  // position = global instance id
};

enum class ThresholdMode {
  PerViewMeanOfMeans,  // mean over views of each view's mean pairwise kernel
  GlobalPairMean,      // mean over all within-view pairs pooled together
};

std::vector<GroupedFeature> group_instances(const Scene& scene, const EmbeddingTable& table);

SimilarityGraph build_similarity_graph(const std::vector<GroupedFeature>& features);

double compute_threshold(const std::vector<GroupedFeature>& features,
                         ThresholdMode mode = ThresholdMode::PerViewMeanOfMeans);

// Greedy score-ordered selection with kernel suppression at threshold T.
PrototypeSet select_prototypes(const std::vector<GroupedFeature>& features,
                               const SimilarityGraph& graph, double threshold);

// Nearest-prototype labeling of one view. Foreground pixels take the 1-based
// index of the highest-kernel prototype; semantics come from the per-point
// majority vote.
PanopticMask assign_labels(const Scene& scene, int view_id, const EmbeddingTable& table,
                           const PrototypeSet& prototypes,
                           const std::vector<int>& point_semantics);

void save_prototypes(const PrototypeSet& set, const std::string& path);
PrototypeSet load_prototypes(const std::string& path);

}  // namespace pcf
