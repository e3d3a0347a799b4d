#include "pcf/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace pcf {

namespace {

std::uint64_t encode_pixel(std::size_t view, int y, int x) {
  return (static_cast<std::uint64_t>(view) << 40) |
         (static_cast<std::uint64_t>(y) << 20) | static_cast<std::uint64_t>(x);
}

std::size_t intersection_count(const std::vector<std::uint64_t>& a,
                               const std::vector<std::uint64_t>& b) {
  std::size_t i = 0, j = 0, count = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i] < b[j]) ++i;
    else if (b[j] < a[i]) ++j;
    else { ++count; ++i; ++j; }
  }
  return count;
}

}  // namespace

std::vector<SceneSegment> merge_to_scene_segments(const std::vector<PanopticMask>& masks) {
  if (masks.empty()) throw std::invalid_argument("no masks to merge");
  const int w = masks.front().width, h = masks.front().height;
  for (const PanopticMask& m : masks)
    if (m.width != w || m.height != h)
      throw std::invalid_argument("mask dimensions are inconsistent");

  std::map<std::pair<int, int>, SceneSegment> segs;  // (class, instance)
  for (std::size_t v = 0; v < masks.size(); ++v) {
    const PanopticMask& m = masks[v];
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        const std::size_t i = static_cast<std::size_t>(y) * w + x;
        const int cls = m.semantic_class[i];
        const int id = cls > 0 ? m.instance_id[i] : 0;  // stuff merges per class
        auto& seg = segs[{cls, id}];
        seg.semantic_class = cls;
        seg.instance_id = id;
        seg.pixels.push_back(encode_pixel(v, y, x));
      }
  }
  std::vector<SceneSegment> out;
  out.reserve(segs.size());
  for (auto& [key, seg] : segs) {
    std::sort(seg.pixels.begin(), seg.pixels.end());
    out.push_back(std::move(seg));
  }
  return out;
}

PqResult pq_scene(const std::vector<SceneSegment>& pred,
                  const std::vector<SceneSegment>& gt) {
  if (gt.empty()) throw std::invalid_argument("empty ground-truth segmentation");

  std::map<int, std::vector<const SceneSegment*>> pred_by_class, gt_by_class;
  for (const SceneSegment& s : pred) pred_by_class[s.semantic_class].push_back(&s);
  for (const SceneSegment& s : gt) gt_by_class[s.semantic_class].push_back(&s);

  PqResult result;
  for (const auto& [cls, gt_segs] : gt_by_class) {
    const auto& pred_segs = pred_by_class.count(cls) ? pred_by_class[cls]
                                                     : std::vector<const SceneSegment*>{};
    std::vector<bool> pred_matched(pred_segs.size(), false);
    std::vector<bool> gt_matched(gt_segs.size(), false);
    ClassPq cp;
    double iou_sum = 0.0;
    for (std::size_t gi = 0; gi < gt_segs.size(); ++gi) {
      for (std::size_t pi = 0; pi < pred_segs.size(); ++pi) {
        const std::size_t inter = intersection_count(gt_segs[gi]->pixels, pred_segs[pi]->pixels);
        if (inter == 0) continue;
        const std::size_t uni = gt_segs[gi]->pixels.size() + pred_segs[pi]->pixels.size() - inter;
        const double iou = static_cast<double>(inter) / static_cast<double>(uni);
        if (iou > 0.5) {
          // IoU > 0.5 makes the match unique per segment
          if (gt_matched[gi] || pred_matched[pi])
            throw std::logic_error("non-unique IoU>0.5 matching");
          gt_matched[gi] = true;
          pred_matched[pi] = true;
          ++cp.tp;
          iou_sum += iou;
        }
      }
    }
    for (bool m : pred_matched)
      if (!m) ++cp.fp;
    for (bool m : gt_matched)
      if (!m) ++cp.fn;
    cp.sq = cp.tp > 0 ? iou_sum / cp.tp : 0.0;
    const double denom = cp.tp + 0.5 * cp.fp + 0.5 * cp.fn;
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

UncertaintyStats uncertainty_stats(const Scene& scene, const EmbeddingTable& table,
                                   int band_radius) {
  if (band_radius < 0) throw std::invalid_argument("band_radius must be >= 0");
  int min_dim = scene.views.empty() ? 0 : std::min(scene.views.front().width,
                                                   scene.views.front().height);
  for (const View& v : scene.views) min_dim = std::min({min_dim, v.width, v.height});
  if (band_radius >= min_dim / 2)
    throw std::invalid_argument("band_radius too large for the view size");

  std::vector<double> boundary_vals, interior_vals;
  for (const View& view : scene.views) {
    for (int y = 0; y < view.height; ++y) {
      for (int x = 0; x < view.width; ++x) {
        const std::size_t i = static_cast<std::size_t>(y) * view.width + x;
        if (view.gt_inst[i] <= 0 || view.correspondence[i] == kNoPoint) continue;
        bool boundary = false;
        for (int dy = -band_radius; dy <= band_radius && !boundary; ++dy) {
          for (int dx = -band_radius; dx <= band_radius; ++dx) {
            const int nx = x + dx, ny = y + dy;
            if (nx < 0 || ny < 0 || nx >= view.width || ny >= view.height) continue;
            if (view.gt_inst[static_cast<std::size_t>(ny) * view.width + nx] !=
                view.gt_inst[i]) {
              boundary = true;
              break;
            }
          }
        }
        const GaussianEmbedding& e = table.at(view.correspondence[i]);
        double prod = 1.0;
        for (double lv : e.log_var) prod *= variance(lv);
        (boundary ? boundary_vals : interior_vals).push_back(prod);
      }
    }
  }

  auto make_hist = [](const std::vector<double>& vals) {
    Histogram h;
    if (vals.empty()) return h;
    double lo = std::log10(*std::min_element(vals.begin(), vals.end()));
    double hi = std::log10(*std::max_element(vals.begin(), vals.end()));
    if (hi - lo < 1e-12) hi = lo + 1e-12;
    const int bins = 32;
    h.lo = lo;
    h.hi = hi;
    h.counts.assign(bins, 0);
    double sum = 0.0;
    for (double v : vals) {
      int b = static_cast<int>((std::log10(v) - lo) / (hi - lo) * bins);
      b = std::clamp(b, 0, bins - 1);
      ++h.counts[b];
      sum += v;
    }
    h.mean = sum / vals.size();
    return h;
  };
  UncertaintyStats stats;
  stats.boundary = make_hist(boundary_vals);
  stats.interior = make_hist(interior_vals);
  return stats;
}

void save_pq_report(const PqResult& result, const std::string& path) {
  nlohmann::json j;
  j["pq"] = result.pq;
  j["sq"] = result.sq;
  j["rq"] = result.rq;
  j["n_tp"] = result.n_tp;
  j["n_fp"] = result.n_fp;
  j["n_fn"] = result.n_fn;
  nlohmann::json per_class = nlohmann::json::object();
  for (const auto& [cls, cp] : result.per_class) {
    per_class[std::to_string(cls)] = {{"pq", cp.pq},  {"sq", cp.sq},  {"rq", cp.rq},
                                      {"tp", cp.tp},  {"fp", cp.fp},  {"fn", cp.fn}};
  }
  j["per_class"] = std::move(per_class);
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write metrics report: " + path);
  out << j.dump(2) << "\n";
}

}  // namespace pcf
