#include "pcf/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace pcf {

namespace {

const View& find_view(const Scene& scene, int view_id) {
  for (const View& v : scene.views)
    if (v.view_id == view_id) return v;
  throw std::invalid_argument("no such view: " + std::to_string(view_id));
}

// First-order optimizer over the flattened (mu, log_var) parameters.
struct Optimizer {
  TrainConfig cfg;
  std::size_t n_params = 0;
  std::vector<double> m, v;
  long step_count = 0;

  explicit Optimizer(const TrainConfig& c, std::size_t params) : cfg(c), n_params(params) {
    if (cfg.optimizer == OptimizerKind::AdaptiveMoment) {
      m.assign(params, 0.0);
      v.assign(params, 0.0);
    }
  }

  void step(EmbeddingTable& table, const GradientTable& grad) {
    ++step_count;
    const double lr = cfg.learning_rate;
    auto update = [&](double& param, double g, std::size_t slot) {
      if (cfg.optimizer == OptimizerKind::GradientDescent) {
        param -= lr * g;
        return;
      }
      const double b1 = 0.9, b2 = 0.999, eps = 1e-8;
      m[slot] = b1 * m[slot] + (1.0 - b1) * g;
      v[slot] = b2 * v[slot] + (1.0 - b2) * g * g;
      double mh = m[slot] / (1.0 - std::pow(b1, step_count));
      double vh = v[slot] / (1.0 - std::pow(b2, step_count));
      param -= lr * mh / (std::sqrt(vh) + eps);
    };
    const std::size_t dims = table.n_dims;
    for (std::size_t p = 0; p < table.size(); ++p) {
      GaussianEmbedding& e = table.entries[p];
      const std::size_t base = p * dims;
      for (std::size_t d = 0; d < dims; ++d) {
        update(e.mu[d], grad.d_mu[base + d], base + d);
        if (!cfg.deterministic_kernel)
          update(e.log_var[d], grad.d_log_var[base + d], n_params / 2 + base + d);
      }
    }
  }
};

std::uint64_t sub_seed(std::uint64_t root, std::uint64_t tag) {
  // splitmix64 over root ^ tag
  std::uint64_t z = root ^ (tag * 0x9e3779b97f4a7c15ull);
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

}  // namespace

EmbeddingTable init_table(const Scene& scene, const TrainConfig& config) {
  if (scene.point_count() == 0) throw std::invalid_argument("scene has no points");
  EmbeddingTable table;
  table.n_dims = config.n_dims;
  table.entries.resize(scene.point_count());
  std::mt19937_64 rng(sub_seed(config.seed, 0x696e6974));  // "init"
  std::normal_distribution<double> normal(0.0, 0.1);
  const double lv0 = config.deterministic_kernel ? std::log(config.fixed_sigma2) : 0.0;
  for (auto& e : table.entries) {
    e.mu.resize(config.n_dims);
    for (auto& x : e.mu) x = normal(rng);
    e.log_var.assign(config.n_dims, lv0);
  }
  return table;
}

SampleBatch sample_batch(const Scene& scene, int view_id, std::size_t k,
                         std::mt19937_64& rng) {
  if (k < 2) throw std::invalid_argument("batch size must be >= 2");
  const View& view = find_view(scene, view_id);
  std::vector<std::size_t> fg;
  for (std::size_t i = 0; i < view.pixels(); ++i)
    if (view.correspondence[i] != kNoPoint && view.inst[i] > 0) fg.push_back(i);
  if (fg.empty()) throw std::invalid_argument("view has no foreground pixels");

  const std::size_t take = std::min(k, fg.size());
  // partial Fisher-Yates
  for (std::size_t i = 0; i < take; ++i) {
    std::size_t j = i + std::uniform_int_distribution<std::size_t>(0, fg.size() - 1 - i)(rng);
    std::swap(fg[i], fg[j]);
  }
  SampleBatch batch;
  batch.view_id = view_id;
  batch.samples.reserve(take);
  for (std::size_t i = 0; i < take; ++i) {
    batch.samples.push_back({static_cast<std::size_t>(view.correspondence[fg[i]]),
                             view.inst[fg[i]]});
  }
  return batch;
}

std::vector<const GaussianEmbedding*> lookup_view_embeddings(const Scene& scene,
                                                             int view_id,
                                                             const EmbeddingTable& table) {
  const View& view = find_view(scene, view_id);
  std::vector<const GaussianEmbedding*> out(view.pixels(), nullptr);
  for (std::size_t i = 0; i < view.pixels(); ++i) {
    const std::int32_t p = view.correspondence[i];
    if (p == kNoPoint) continue;
    if (static_cast<std::size_t>(p) >= table.size())
      throw std::invalid_argument("correspondence references a nonexistent point");
    out[i] = &table.at(p);
  }
  return out;
}

TrainResult train(const Scene& scene, const TrainConfig& config) {
  const int cross_epochs = config.effective_cross_view_epochs();
  if (cross_epochs > config.epochs)
    throw std::invalid_argument("cross_view_epochs exceeds epochs");
  if (cross_epochs > 0 && scene.views.size() < 2)
    throw std::invalid_argument("cross-view training needs at least 2 views");

  TrainResult result;
  result.table = init_table(scene, config);
  EmbeddingTable& table = result.table;

  Optimizer opt(config, table.size() * table.n_dims * 2);
  GradientTable grad(table.size(), table.n_dims);
  std::mt19937_64 rng(sub_seed(config.seed, 0x73616d70));  // "samp"

  const int n_views = static_cast<int>(scene.views.size());
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const bool cross_active = epoch >= config.epochs - cross_epochs;
    EpochLoss el;
    el.epoch = epoch;
    int steps = 0;
    for (int step = 0; step < n_views; ++step, ++steps) {
      grad.reset();
      LossBreakdown lb;
      if (!cross_active) {
        SampleBatch batch =
            sample_batch(scene, scene.views[step].view_id, config.batch_pixels, rng);
        lb = total_loss({&batch}, nullptr, table, 0.0, config.w_reg, &grad);
      } else {
        int a = std::uniform_int_distribution<int>(0, n_views - 1)(rng);
        int b = std::uniform_int_distribution<int>(0, n_views - 2)(rng);
        if (b >= a) ++b;
        SampleBatch bm = sample_batch(scene, scene.views[a].view_id, config.batch_pixels, rng);
        SampleBatch bn = sample_batch(scene, scene.views[b].view_id, config.batch_pixels, rng);

        std::vector<GaussianEmbedding> em, en;
        em.reserve(bm.size());
        en.reserve(bn.size());
        for (const Sample& s : bm.samples) em.push_back(table.at(s.point));
        for (const Sample& s : bn.samples) en.push_back(table.at(s.point));
        PositivePairSet pairs = mine_cross_view_pairs(em, en, config.tau,
                                                      bm.view_id, bn.view_id);
        lb = total_loss({&bm, &bn}, &pairs, table, config.w_cross, config.w_reg, &grad);
      }
      opt.step(table, grad);
      el.pixel_contra += lb.pixel_contra;
      el.concen += lb.concen;
      el.cross += lb.cross;
      el.reg += lb.reg;
      el.total += lb.total;
    }
    const double inv = steps > 0 ? 1.0 / steps : 0.0;
    el.pixel_contra *= inv;
    el.concen *= inv;
    el.cross *= inv;
    el.reg *= inv;
    el.total *= inv;
    result.history.push_back(el);
  }
  return result;
}

}  // namespace pcf
