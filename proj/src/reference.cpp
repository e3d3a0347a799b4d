#include "pcf/reference.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace pcf::ref {

double pp_kernel(const GaussianEmbedding& a, const GaussianEmbedding& b) {
  double prefactor = 1.0;
  double exponent = 0.0;
  for (std::size_t d = 0; d < a.mu.size(); ++d) {
    double va = variance(a.log_var[d]);
    double vb = variance(b.log_var[d]);
    prefactor *= (va / vb + vb / va) / 2.0;
    double diff = a.mu[d] - b.mu[d];
    exponent += diff * diff / (4.0 * (va + vb));
  }
  return std::pow(prefactor, -0.5) * std::exp(-exponent);
}

std::vector<double> kernel_matrix(const std::vector<GaussianEmbedding>& embs) {
  const std::size_t n = embs.size();
  std::vector<double> out(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] = ref::pp_kernel(embs[i], embs[j]);
  return out;
}

double pixel_contrastive_loss(const SampleBatch& batch, const EmbeddingTable& table) {
  const std::size_t n = batch.size();
  double loss = 0.0;
  for (std::size_t u = 0; u < n; ++u) {
    double num = 0.0, den = 0.0;
    for (std::size_t v = 0; v < n; ++v) {
      double e = std::exp(ref::pp_kernel(table.at(batch.samples[u].point),
                                    table.at(batch.samples[v].point)));
      den += e;
      if (batch.samples[u].instance_id == batch.samples[v].instance_id) num += e;
    }
    loss += -std::log(num / den);
  }
  return loss / static_cast<double>(n);
}

double concentration_loss(const SampleBatch& batch, const EmbeddingTable& table) {
  const std::size_t n = batch.size();
  double loss = 0.0;
  for (std::size_t u = 0; u < n; ++u) {
    std::vector<const GaussianEmbedding*> members;
    for (std::size_t v = 0; v < n; ++v)
      if (batch.samples[v].instance_id == batch.samples[u].instance_id)
        members.push_back(&table.at(batch.samples[v].point));
    GaussianEmbedding mean = average_embeddings(members);
    loss += -std::log(ref::pp_kernel(table.at(batch.samples[u].point), mean));
  }
  return loss / static_cast<double>(n);
}

PositivePairSet mine_cross_view_pairs(const std::vector<GaussianEmbedding>& emb_m,
                                      const std::vector<GaussianEmbedding>& emb_n,
                                      double tau) {
  PositivePairSet out;
  for (std::size_t r = 0; r < emb_m.size(); ++r)
    for (std::size_t s = 0; s < emb_n.size(); ++s)
      if (ref::pp_kernel(emb_m[r], emb_n[s]) > tau) out.pairs.emplace_back(r, s);
  return out;
}

PrototypeSet select_prototypes(const std::vector<GroupedFeature>& features,
                               double threshold) {
  std::vector<bool> remaining(features.size(), true);
  PrototypeSet out;
  while (true) {
    // argmax over the remaining scores; ties by (view_id, local_instance_id)
    std::ptrdiff_t best = -1;
    for (std::size_t i = 0; i < features.size(); ++i) {
      if (!remaining[i]) continue;
      if (best < 0) { best = static_cast<std::ptrdiff_t>(i); continue; }
      const GroupedFeature& f = features[i];
      const GroupedFeature& g = features[best];
      if (f.score > g.score ||
          (f.score == g.score &&
           (f.view_id < g.view_id ||
            (f.view_id == g.view_id && f.local_instance_id < g.local_instance_id))))
        best = static_cast<std::ptrdiff_t>(i);
    }
    if (best < 0) break;
    out.prototypes.push_back(features[best].embedding);
    remaining[best] = false;
    for (std::size_t i = 0; i < features.size(); ++i) {
      if (!remaining[i]) continue;
      if (ref::pp_kernel(features[best].embedding, features[i].embedding) >= threshold)
        remaining[i] = false;
    }
  }
  return out;
}

namespace {

struct BruteState {
  const std::vector<const SceneSegment*>* pred;
  const std::vector<const SceneSegment*>* gt;
  std::vector<double> iou;  // gt x pred
  std::vector<int> best_assign;
  double best_total = -1.0;
};

void search(BruteState& st, std::size_t gi, std::vector<bool>& used,
            std::vector<int>& assign, double total) {
  if (gi == st.gt->size()) {
    if (total > st.best_total) {
      st.best_total = total;
      st.best_assign = assign;
    }
    return;
  }
  assign[gi] = -1;
  search(st, gi + 1, used, assign, total);
  for (std::size_t pi = 0; pi < st.pred->size(); ++pi) {
    if (used[pi]) continue;
    double iou = st.iou[gi * st.pred->size() + pi];
    if (iou <= 0.5) continue;
    used[pi] = true;
    assign[gi] = static_cast<int>(pi);
    search(st, gi + 1, used, assign, total + iou);
    used[pi] = false;
  }
  assign[gi] = -1;
}

std::size_t inter_count(const std::vector<std::uint64_t>& a,
                        const std::vector<std::uint64_t>& b) {
  std::size_t i = 0, j = 0, c = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i] < b[j]) ++i;
    else if (b[j] < a[i]) ++j;
    else { ++c; ++i; ++j; }
  }
  return c;
}

}  // namespace

PqResult pq_scene(const std::vector<SceneSegment>& pred,
                  const std::vector<SceneSegment>& gt) {
  std::map<int, std::vector<const SceneSegment*>> pred_by_class, gt_by_class;
  for (const SceneSegment& s : pred) pred_by_class[s.semantic_class].push_back(&s);
  for (const SceneSegment& s : gt) gt_by_class[s.semantic_class].push_back(&s);

  PqResult result;
  for (const auto& [cls, gt_segs] : gt_by_class) {
    const auto pred_segs = pred_by_class.count(cls) ? pred_by_class[cls]
                                                    : std::vector<const SceneSegment*>{};
    BruteState st;
    st.pred = &pred_segs;
    st.gt = &gt_segs;
    st.iou.assign(gt_segs.size() * std::max<std::size_t>(pred_segs.size(), 1), 0.0);
    for (std::size_t gi = 0; gi < gt_segs.size(); ++gi)
      for (std::size_t pi = 0; pi < pred_segs.size(); ++pi) {
        std::size_t inter = inter_count(gt_segs[gi]->pixels, pred_segs[pi]->pixels);
        std::size_t uni = gt_segs[gi]->pixels.size() + pred_segs[pi]->pixels.size() - inter;
        st.iou[gi * pred_segs.size() + pi] = uni ? static_cast<double>(inter) / uni : 0.0;
      }
    std::vector<bool> used(pred_segs.size(), false);
    std::vector<int> assign(gt_segs.size(), -1);
    search(st, 0, used, assign, 0.0);

    ClassPq cp;
    double iou_sum = 0.0;
    std::vector<bool> pred_used(pred_segs.size(), false);
    for (std::size_t gi = 0; gi < gt_segs.size(); ++gi) {
      int pi = st.best_assign.empty() ? -1 : st.best_assign[gi];
      if (pi >= 0) {
        ++cp.tp;
        iou_sum += st.iou[gi * pred_segs.size() + pi];
        pred_used[pi] = true;
      } else {
        ++cp.fn;
      }
    }
    for (bool u : pred_used)
      if (!u) ++cp.fp;
    cp.sq = cp.tp > 0 ? iou_sum / cp.tp : 0.0;
    double denom = cp.tp + 0.5 * cp.fp + 0.5 * cp.fn;
    cp.rq = denom > 0.0 ? cp.tp / denom : 0.0;
    cp.pq = cp.sq * cp.rq;
    result.n_tp += cp.tp;
    result.n_fp += cp.fp;
    result.n_fn += cp.fn;
    result.pq += cp.pq;
    result.sq += cp.sq;
    result.rq += cp.rq;
    result.per_class[cls] = cp;
  }
  const double n_classes = static_cast<double>(result.per_class.size());
  result.pq /= n_classes;
  result.sq /= n_classes;
  result.rq /= n_classes;
  return result;
}

std::vector<int> assign_nearest(const std::vector<GaussianEmbedding>& embs,
                                const PrototypeSet& prototypes) {
  std::vector<int> out(embs.size(), 0);
  for (std::size_t i = 0; i < embs.size(); ++i) {
    std::size_t best = 0;
    double best_k = -1.0;
    for (std::size_t c = 0; c < prototypes.prototypes.size(); ++c) {
      double k = ref::pp_kernel(embs[i], prototypes.prototypes[c]);
      if (k > best_k) { best_k = k; best = c; }
    }
    out[i] = static_cast<int>(best) + 1;
  }
  return out;
}

}  // namespace pcf::ref
