#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "pcf/loss.hpp"
#include "pcf/scene.hpp"
#include "pcf/table.hpp"

namespace pcf {

enum class OptimizerKind { GradientDescent, AdaptiveMoment };

struct TrainConfig {
  std::size_t n_dims = 3;
  int epochs = 200;
  int cross_view_epochs = -1;  // -1: 20% of epochs
  std::size_t batch_pixels = 256;
  double learning_rate = 1e-2;
  double tau = 0.9;
  double w_cross = 0.05;
  double w_reg = 0.001;
  OptimizerKind optimizer = OptimizerKind::AdaptiveMoment;
  std::uint64_t seed = 0;
  // Deterministic arm: freeze every log_var at ln(fixed_sigma2), reducing the
  // PP kernel to the RBF kernel.
  bool deterministic_kernel = false;
  double fixed_sigma2 = 1.0;

  int effective_cross_view_epochs() const {
    return cross_view_epochs >= 0 ? cross_view_epochs : epochs / 5;
  }
};

struct EpochLoss {
  int epoch = 0;
  double pixel_contra = 0.0;
  double concen = 0.0;
  double cross = 0.0;
  double reg = 0.0;
  double total = 0.0;
};

struct TrainResult {
  EmbeddingTable table;
  std::vector<EpochLoss> history;
};

EmbeddingTable init_table(const Scene& scene, const TrainConfig& config);

// k foreground pixels (correspondence present, observed id > 0) drawn
// uniformly without replacement; fewer when the view has fewer.
SampleBatch sample_batch(const Scene& scene, int view_id, std::size_t k,
                         std::mt19937_64& rng);

// Table entry per foreground pixel; kNoPoint pixels yield nullptr.
std::vector<const GaussianEmbedding*> lookup_view_embeddings(const Scene& scene,
                                                             int view_id,
                                                             const EmbeddingTable& table);

TrainResult train(const Scene& scene, const TrainConfig& config);

}  // namespace pcf
