#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "pcf/table.hpp"

namespace pcf {

// Pixel samples drawn from a single view, used for the contrastive losses.
struct Sample {
  std::size_t point = 0;   // index into the embedding table
  int instance_id = 0;     // view-local observed instance id
};

struct SampleBatch {
  int view_id = 0;
  std::vector<Sample> samples;

  std::size_t size() const { return samples.size(); }
};

// Cross-view positive pairs, as (index into batch m, index into batch n).
struct PositivePairSet {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
};

struct LossBreakdown {
  double pixel_contra = 0.0;
  double concen = 0.0;
  double cross = 0.0;
  double reg = 0.0;
  double total = 0.0;
};

// Pixel-wise contrastive loss over all ordered sample pairs of one batch,
// with self-pairs included in numerator and denominator. Gradients are
// accumulated into `grad`; pass nullptr to skip gradient work.
double pixel_contrastive_loss(const SampleBatch& batch, const EmbeddingTable& table,
                              GradientTable* grad);

// Pulls each sample toward the parameter-wise mean embedding of its instance.
double concentration_loss(const SampleBatch& batch, const EmbeddingTable& table,
                          GradientTable* grad);

double combined_contrastive_loss(const SampleBatch& batch, const EmbeddingTable& table,
                                 GradientTable* grad);

// All (r, s) with pp_kernel(emb_m[r], emb_n[s]) > tau. Pure set construction;
// no gradients flow through mining.
PositivePairSet mine_cross_view_pairs(const std::vector<GaussianEmbedding>& emb_m,
                                      const std::vector<GaussianEmbedding>& emb_n,
                                      double tau, int view_m, int view_n);

// -(1/|P|) sum log K over mined pairs; 0 with zero gradients when P is empty.
double cross_view_loss(const PositivePairSet& pairs, const SampleBatch& batch_m,
                       const SampleBatch& batch_n, const EmbeddingTable& table,
                       GradientTable* grad);

// log prod sigma^2 = sum of log_var components; gradient is 1 per component.
double regularization_loss(const GaussianEmbedding& e, std::vector<double>* d_log_var);

// Mean contrastive loss over the batches plus weighted cross-view and
// regularization terms. `pairs` may be nullptr when no cross-view term applies.
LossBreakdown total_loss(const std::vector<const SampleBatch*>& batches,
                         const PositivePairSet* pairs, const EmbeddingTable& table,
                         double w_cross, double w_reg, GradientTable* grad);

}  // namespace pcf
