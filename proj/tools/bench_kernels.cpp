// Benchmark of the OpenMP loss/graph paths against the serial reference.
#include <chrono>
#include <cstdio>
#include <random>
#include <vector>

#include "pcf/loss.hpp"
#include "pcf/mvoa.hpp"
#include "pcf/reference.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

using namespace pcf;

namespace {

double now_ms() {
  using clock = std::chrono::steady_clock;
  return std::chrono::duration<double, std::milli>(clock::now().time_since_epoch()).count();
}

EmbeddingTable random_table(std::size_t points, std::size_t dims, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> mu(0.0, 1.0);
  std::normal_distribution<double> lv(0.0, 0.3);
  EmbeddingTable t;
  t.n_dims = dims;
  t.entries.resize(points);
  for (auto& e : t.entries) {
    e.mu.resize(dims);
    e.log_var.resize(dims);
    for (auto& x : e.mu) x = mu(rng);
    for (auto& x : e.log_var) x = lv(rng);
  }
  return t;
}

SampleBatch random_batch(std::size_t n, std::size_t points, int instances,
                         std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  SampleBatch b;
  b.view_id = 0;
  for (std::size_t i = 0; i < n; ++i)
    b.samples.push_back(
        {std::uniform_int_distribution<std::size_t>(0, points - 1)(rng),
         std::uniform_int_distribution<int>(1, instances)(rng)});
  return b;
}

}  // namespace

int main(int argc, char** argv) {
  int threads = argc > 1 ? std::atoi(argv[1]) : 4;
#ifdef _OPENMP
  omp_set_num_threads(threads);
  std::printf("openmp threads: %d\n", threads);
#else
  std::printf("built without OpenMP; both columns are serial\n");
#endif

  const std::size_t points = 4096, dims = 3;
  EmbeddingTable table = random_table(points, dims, 7);

  for (std::size_t n : {256, 512, 1024}) {
    SampleBatch batch = random_batch(n, points, 8, n);
    GradientTable grad(points, dims);

    double t0 = now_ms();
    double serial = ref::pixel_contrastive_loss(batch, table);
    double t1 = now_ms();
    grad.reset();
    double parallel = pixel_contrastive_loss(batch, table, &grad);
    double t2 = now_ms();
    std::printf("contrastive n=%4zu  serial %8.2f ms  omp(+grad) %8.2f ms  |diff| %.3e\n",
                n, t1 - t0, t2 - t1, std::abs(serial - parallel));
  }

  for (std::size_t n : {128, 256, 512}) {
    std::vector<GroupedFeature> features(n);
    EmbeddingTable t = random_table(n, dims, n);
    for (std::size_t i = 0; i < n; ++i) {
      features[i].embedding = t.entries[i];
      features[i].score = 0.5;
      features[i].view_id = static_cast<int>(i);
    }
    double t0 = now_ms();
    std::vector<GaussianEmbedding> embs;
    for (const auto& f : features) embs.push_back(f.embedding);
    auto mat = ref::kernel_matrix(embs);
    double t1 = now_ms();
    auto graph = build_similarity_graph(features);
    double t2 = now_ms();
    double max_diff = 0.0;
    for (std::size_t i = 0; i < n * n; ++i)
      max_diff = std::max(max_diff, std::abs(mat[i] - graph.edges[i]));
    std::printf("graph       n=%4zu  serial %8.2f ms  omp        %8.2f ms  |diff| %.3e\n",
                n, t1 - t0, t2 - t1, max_diff);
  }
  return 0;
}
