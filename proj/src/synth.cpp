#include "pcf/synth.hpp"

#include <algorithm>
#include <random>
#include <stdexcept>
#include <vector>

namespace pcf {

namespace {

struct Rect {
  int x0, y0, x1, y1;  // half-open

  bool overlaps(const Rect& o, int gap) const {
    return x0 < o.x1 + gap && o.x0 < x1 + gap && y0 < o.y1 + gap && o.y0 < y1 + gap;
  }
};

int rand_int(std::mt19937_64& rng, int lo, int hi) {  // inclusive bounds
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

}  // namespace

Scene generate_scene(const SceneParams& p) {
  if (p.k_instances < 1) throw std::invalid_argument("k_instances must be >= 1");
  if (p.n_views < 2) throw std::invalid_argument("n_views must be >= 2");
  if (p.view_width > p.canvas_width || p.view_height > p.canvas_height)
    throw std::invalid_argument("view window larger than canvas");

  std::mt19937_64 rng(p.seed);

  Scene scene;
  scene.canvas_width = p.canvas_width;
  scene.canvas_height = p.canvas_height;
  scene.seed = p.seed;
  scene.instance_class.resize(p.k_instances);
  for (int i = 0; i < p.k_instances; ++i)
    scene.instance_class[i] = 1 + i % p.n_thing_classes;

  // Rejection-sample non-overlapping rectangles, 1px gap between instances.
  const int min_side = 8;
  const int max_side = std::max(min_side, std::min({22, p.canvas_width / 4, p.canvas_height / 4}));
  auto place_rects = [&] {
    std::vector<Rect> rects;
    int attempts = 0;
    while (static_cast<int>(rects.size()) < p.k_instances) {
      if (++attempts > 20000)
        throw std::runtime_error(
            "instance placement failed; reduce k_instances or enlarge the canvas");
      int w = rand_int(rng, min_side, max_side);
      int h = rand_int(rng, min_side, max_side);
      int x = rand_int(rng, 0, p.canvas_width - w);
      int y = rand_int(rng, 0, p.canvas_height - h);
      Rect r{x, y, x + w, y + h};
      bool ok = true;
      for (const Rect& q : rects)
        if (r.overlaps(q, 1)) { ok = false; break; }
      if (ok) rects.push_back(r);
    }
    return rects;
  };

  // Views cycle through the four canvas corners with a small jitter. If some
  // instance still lands in a region covered by fewer than two windows, both
  // the placement and the windows are redrawn.
  const int mx = p.canvas_width - p.view_width;
  const int my = p.canvas_height - p.view_height;
  const int jitter = std::min({4, mx, my});
  const int corners[4][2] = {{0, 0}, {mx, 0}, {0, my}, {mx, my}};

  for (int scene_try = 0; scene_try < 200; ++scene_try) {
    const std::vector<Rect> rects = place_rects();
    std::vector<std::int32_t> canvas_gt(scene.point_count(), 0);
    for (int i = 0; i < p.k_instances; ++i) {
      const Rect& r = rects[i];
      for (int y = r.y0; y < r.y1; ++y)
        for (int x = r.x0; x < r.x1; ++x)
          canvas_gt[static_cast<std::size_t>(y) * p.canvas_width + x] = i + 1;
    }

    std::mt19937_64 vrng(rng());
    std::vector<View> views;
    for (int v = 0; v < p.n_views; ++v) {
      int ox = corners[v % 4][0];
      int oy = corners[v % 4][1];
      if (jitter > 0) {
        ox = std::clamp(ox + rand_int(vrng, -jitter, jitter), 0, mx);
        oy = std::clamp(oy + rand_int(vrng, -jitter, jitter), 0, my);
      }
      View view;
      view.view_id = v;
      view.width = p.view_width;
      view.height = p.view_height;
      view.correspondence.assign(view.pixels(), kNoPoint);
      view.inst.assign(view.pixels(), 0);
      view.sem.assign(view.pixels(), 0);
      view.gt_inst.assign(view.pixels(), 0);
      for (int y = 0; y < view.height; ++y) {
        for (int x = 0; x < view.width; ++x) {
          const std::size_t ci = static_cast<std::size_t>(oy + y) * p.canvas_width + (ox + x);
          const std::int32_t gt = canvas_gt[ci];
          if (gt == 0) continue;
          const std::size_t vi = static_cast<std::size_t>(y) * view.width + x;
          view.correspondence[vi] = static_cast<std::int32_t>(ci);
          view.gt_inst[vi] = gt;
          view.inst[vi] = gt;  // clean masks start as GT; noise is applied later
          view.sem[vi] = scene.instance_class[gt - 1];
        }
      }
      views.push_back(std::move(view));
    }

    // Associability: every instance visible in >= 2 views.
    std::vector<int> seen(p.k_instances + 1, 0);
    for (const View& view : views) {
      std::vector<bool> here(p.k_instances + 1, false);
      for (std::int32_t id : view.gt_inst)
        if (id > 0) here[id] = true;
      for (int i = 1; i <= p.k_instances; ++i)
        if (here[i]) ++seen[i];
    }
    bool ok = true;
    for (int i = 1; i <= p.k_instances; ++i)
      if (seen[i] < 2) { ok = false; break; }
    if (ok) {
      scene.views = std::move(views);
      return scene;
    }
  }
  throw std::runtime_error(
      "could not make every instance visible in >= 2 views; add views or "
      "shrink the canvas-to-window gap");
}

void permute_ids(View& view, std::uint64_t seed) {
  std::vector<std::int32_t> ids;
  for (std::int32_t id : view.inst)
    if (id > 0) ids.push_back(id);
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  if (ids.empty()) return;

  std::vector<std::int32_t> target = ids;
  std::mt19937_64 rng(seed);
  std::shuffle(target.begin(), target.end(), rng);
  std::vector<std::int32_t> map(ids.back() + 1, 0);
  for (std::size_t i = 0; i < ids.size(); ++i) map[ids[i]] = target[i];
  for (std::int32_t& id : view.inst)
    if (id > 0) id = map[id];
}

void split_instances(View& view, double split_probability, std::uint64_t seed) {
  if (split_probability < 0.0 || split_probability > 1.0)
    throw std::invalid_argument("split_probability must be in [0,1]");
  std::vector<std::int32_t> ids;
  for (std::int32_t id : view.inst)
    if (id > 0) ids.push_back(id);
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  if (ids.empty()) return;

  std::mt19937_64 rng(seed);
  std::int32_t next_id = ids.back() + 1;
  for (std::int32_t id : ids) {
    if (std::uniform_real_distribution<double>(0.0, 1.0)(rng) >= split_probability)
      continue;
    int x0 = view.width, x1 = -1, y0 = view.height, y1 = -1;
    for (int y = 0; y < view.height; ++y)
      for (int x = 0; x < view.width; ++x)
        if (view.inst[static_cast<std::size_t>(y) * view.width + x] == id) {
          x0 = std::min(x0, x); x1 = std::max(x1, x);
          y0 = std::min(y0, y); y1 = std::max(y1, y);
        }
    bool vertical = std::uniform_int_distribution<int>(0, 1)(rng) == 0;
    if (vertical && x1 - x0 < 1) vertical = false;
    if (!vertical && y1 - y0 < 1) {
      if (x1 - x0 < 1) continue;  // 1x1 region, never split
      vertical = true;
    }
    // split line strictly inside the bbox so both halves keep pixels
    int cut = vertical ? rand_int(rng, x0 + 1, x1) : rand_int(rng, y0 + 1, y1);
    for (int y = 0; y < view.height; ++y)
      for (int x = 0; x < view.width; ++x) {
        const std::size_t i = static_cast<std::size_t>(y) * view.width + x;
        if (view.inst[i] != id) continue;
        if ((vertical ? x : y) >= cut) view.inst[i] = next_id;
      }
    ++next_id;
  }
}

void inject_boundary_noise(View& view, int n_anchors, int window_w, std::uint64_t seed) {
  if (window_w < 1 || window_w % 2 == 0)
    throw std::invalid_argument("window_w must be odd and >= 1");
  if (n_anchors < 0) throw std::invalid_argument("n_anchors must be >= 0");

  std::mt19937_64 rng(seed);
  const int half = window_w / 2;
  for (int a = 0; a < n_anchors; ++a) {
    int ax = std::uniform_int_distribution<int>(0, view.width - 1)(rng);
    int ay = std::uniform_int_distribution<int>(0, view.height - 1)(rng);
    int x0 = std::max(0, ax - half), x1 = std::min(view.width - 1, ax + half);
    int y0 = std::max(0, ay - half), y1 = std::min(view.height - 1, ay + half);
    int sx = std::uniform_int_distribution<int>(x0, x1)(rng);
    int sy = std::uniform_int_distribution<int>(y0, y1)(rng);
    const std::int32_t id = view.inst[static_cast<std::size_t>(sy) * view.width + sx];
    for (int y = y0; y <= y1; ++y)
      for (int x = x0; x <= x1; ++x)
        view.inst[static_cast<std::size_t>(y) * view.width + x] = id;
  }
}

}  // namespace pcf
