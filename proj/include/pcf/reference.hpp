#pragma once

#include <vector>

#include "pcf/loss.hpp"
#include "pcf/metrics.hpp"
#include "pcf/mvoa.hpp"

// Serial reference implementations, written as direct transcriptions of the
// formulas without the log-space and staging machinery of the main paths.
// Kept for testing and for the kernel benchmark.
namespace pcf::ref {

// Prefactor product times mean-offset exponential, formed term by term.
double pp_kernel(const GaussianEmbedding& a, const GaussianEmbedding& b);

// Dense kernel matrix over a feature list, single-threaded.
std::vector<double> kernel_matrix(const std::vector<GaussianEmbedding>& embs);

// Loss values only (no gradients), direct double loops.
double pixel_contrastive_loss(const SampleBatch& batch, const EmbeddingTable& table);
double concentration_loss(const SampleBatch& batch, const EmbeddingTable& table);

// Exhaustive pair enumeration for cross-view mining.
PositivePairSet mine_cross_view_pairs(const std::vector<GaussianEmbedding>& emb_m,
                                      const std::vector<GaussianEmbedding>& emb_n,
                                      double tau);

// Step-by-step simulation of the greedy selection: repeated argmax over the
// remaining score set, removal of the pick and of every neighbor at kernel
// >= threshold.
PrototypeSet select_prototypes(const std::vector<GroupedFeature>& features,
                               double threshold);

// Enumerates all class-respecting one-to-one matchings, keeps IoU > 0.5
// pairs, and picks the matching with maximal total IoU.
PqResult pq_scene(const std::vector<SceneSegment>& pred,
                  const std::vector<SceneSegment>& gt);

// Serial nearest-prototype assignment over a flat embedding list.
std::vector<int> assign_nearest(const std::vector<GaussianEmbedding>& embs,
                                const PrototypeSet& prototypes);

}  // namespace pcf::ref
