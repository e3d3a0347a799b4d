#include "pcf/mvoa.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <numeric>
#include <stdexcept>

#include <json.hpp>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace pcf {

std::vector<GroupedFeature> group_instances(const Scene& scene, const EmbeddingTable& table) {
  std::vector<GroupedFeature> features;
  for (const View& view : scene.views) {
    // member pixels per observed instance id, row-major order
    std::map<int, std::vector<const GaussianEmbedding*>> members;
    for (std::size_t i = 0; i < view.pixels(); ++i) {
      if (view.correspondence[i] == kNoPoint || view.inst[i] <= 0) continue;
      members[view.inst[i]].push_back(&table.at(view.correspondence[i]));
    }
    for (const auto& [id, embs] : members) {
      GroupedFeature f;
      f.view_id = view.view_id;
      f.local_instance_id = id;
      f.embedding = average_embeddings(embs);
      double acc = 0.0;
      for (const GaussianEmbedding* e : embs) acc += pp_kernel(f.embedding, *e);
      f.score = acc / static_cast<double>(embs.size());
      features.push_back(std::move(f));
    }
  }
  return features;
}

SimilarityGraph build_similarity_graph(const std::vector<GroupedFeature>& features) {
  if (features.empty()) throw std::invalid_argument("no grouped features");
  SimilarityGraph g;
  g.n = features.size();
  g.edges.assign(g.n * g.n, 1.0);
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(g.n); ++i) {
    for (std::size_t j = 0; j < static_cast<std::size_t>(i); ++j) {
      double k = pp_kernel(features[i].embedding, features[j].embedding);
      g.edges[i * g.n + j] = k;
      g.edges[j * g.n + i] = k;
    }
  }
  return g;
}

double compute_threshold(const std::vector<GroupedFeature>& features, ThresholdMode mode) {
  std::map<int, std::vector<const GroupedFeature*>> by_view;
  for (const GroupedFeature& f : features) by_view[f.view_id].push_back(&f);

  double mean_acc = 0.0;
  int views_used = 0;
  double pair_acc = 0.0;
  long pair_count = 0;
  for (const auto& [view_id, fs] : by_view) {
    if (fs.size() < 2) continue;
    double acc = 0.0;
    long count = 0;
    for (std::size_t i = 0; i < fs.size(); ++i)
      for (std::size_t j = i + 1; j < fs.size(); ++j) {
        acc += pp_kernel(fs[i]->embedding, fs[j]->embedding);
        ++count;
      }
    mean_acc += acc / static_cast<double>(count);
    ++views_used;
    pair_acc += acc;
    pair_count += count;
  }
  if (views_used == 0)
    throw std::runtime_error(
        "no view has two grouped features; set the threshold manually");
  return mode == ThresholdMode::PerViewMeanOfMeans ? mean_acc / views_used
                                                   : pair_acc / pair_count;
}

PrototypeSet select_prototypes(const std::vector<GroupedFeature>& features,
                               const SimilarityGraph& graph, double threshold) {
  if (graph.n != features.size()) throw std::invalid_argument("graph/features size mismatch");
  if (!(threshold > 0.0 && threshold < 1.0))
    throw std::invalid_argument("threshold must be in (0,1)");

  // Deterministic order: score descending, ties by (view_id, local_instance_id).
  std::vector<std::size_t> order(features.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (features[a].score != features[b].score) return features[a].score > features[b].score;
    if (features[a].view_id != features[b].view_id)
      return features[a].view_id < features[b].view_id;
    return features[a].local_instance_id < features[b].local_instance_id;
  });

  std::vector<bool> alive(features.size(), true);
  PrototypeSet out;
  for (std::size_t oi = 0; oi < order.size(); ++oi) {
    const std::size_t m = order[oi];
    if (!alive[m]) continue;
    out.prototypes.push_back(features[m].embedding);
    alive[m] = false;
    for (std::size_t oj = 0; oj < order.size(); ++oj) {
      const std::size_t i = order[oj];
      if (alive[i] && graph.at(m, i) >= threshold) alive[i] = false;
    }
  }
  return out;
}

PanopticMask assign_labels(const Scene& scene, int view_id, const EmbeddingTable& table,
                           const PrototypeSet& prototypes,
                           const std::vector<int>& point_semantics) {
  if (prototypes.prototypes.empty()) throw std::invalid_argument("empty prototype set");
  const View* view = nullptr;
  for (const View& v : scene.views)
    if (v.view_id == view_id) view = &v;
  if (!view) throw std::invalid_argument("no such view: " + std::to_string(view_id));

  PanopticMask mask;
  mask.width = view->width;
  mask.height = view->height;
  mask.semantic_class.assign(view->pixels(), 0);
  mask.instance_id.assign(view->pixels(), 0);

#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(view->pixels()); ++i) {
    const std::int32_t p = view->correspondence[i];
    if (p == kNoPoint) continue;
    const int cls = point_semantics.at(p);
    if (cls <= 0) continue;
    const GaussianEmbedding& e = table.at(p);
    std::size_t best = 0;
    double best_k = -1.0;
    for (std::size_t c = 0; c < prototypes.prototypes.size(); ++c) {
      double k = pp_kernel(e, prototypes.prototypes[c]);
      if (k > best_k) {  // ties keep the lowest prototype index
        best_k = k;
        best = c;
      }
    }
    mask.semantic_class[i] = cls;
    mask.instance_id[i] = static_cast<std::int32_t>(best) + 1;
  }
  return mask;
}

void save_prototypes(const PrototypeSet& set, const std::string& path) {
  nlohmann::json j;
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& p : set.prototypes)
    arr.push_back({{"mu", p.mu}, {"log_var", p.log_var}});
  j["prototypes"] = std::move(arr);
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write prototypes: " + path);
  out << j.dump(2) << "\n";
}

PrototypeSet load_prototypes(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open prototypes: " + path);
  nlohmann::json j;
  in >> j;
  PrototypeSet set;
  for (const auto& pj : j.at("prototypes")) {
    GaussianEmbedding e;
    e.mu = pj.at("mu").get<std::vector<double>>();
    e.log_var = pj.at("log_var").get<std::vector<double>>();
    set.prototypes.push_back(std::move(e));
  }
  return set;
}

}  // namespace pcf
