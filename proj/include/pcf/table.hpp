#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "pcf/gaussian.hpp"

namespace pcf {

// Per-3D-point probabilistic embedding table. One entry per scene point.
struct EmbeddingTable {
  std::size_t n_dims = 0;
  std::vector<GaussianEmbedding> entries;

  std::size_t size() const { return entries.size(); }
  const GaussianEmbedding& at(std::size_t point) const { return entries.at(point); }
};

// Flat gradient accumulator matching an EmbeddingTable layout.
struct GradientTable {
  std::size_t n_dims = 0;
  std::vector<double> d_mu;       // size() * n_dims
  std::vector<double> d_log_var;  // size() * n_dims

  GradientTable() = default;
  GradientTable(std::size_t points, std::size_t dims)
      : n_dims(dims), d_mu(points * dims, 0.0), d_log_var(points * dims, 0.0) {}

  void reset() {
    std::fill(d_mu.begin(), d_mu.end(), 0.0);
    std::fill(d_log_var.begin(), d_log_var.end(), 0.0);
  }

  void add(std::size_t point, const std::vector<double>& gmu,
           const std::vector<double>& glv, double scale = 1.0) {
    const std::size_t base = point * n_dims;
    for (std::size_t d = 0; d < n_dims; ++d) {
      d_mu[base + d] += scale * gmu[d];
      d_log_var[base + d] += scale * glv[d];
    }
  }
};

void save_checkpoint(const EmbeddingTable& table, const std::string& path);
EmbeddingTable load_checkpoint(const std::string& path);

}  // namespace pcf
