#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace pcf {

inline constexpr std::int32_t kNoPoint = -1;

// One camera view: a translated window into the scene canvas. Correspondences
// exist only at foreground (instance) pixels; the observed instance mask is
// the noisy per-view segmentation, the gt mask is kept clean for evaluation.
struct View {
  int view_id = 0;
  int width = 0;
  int height = 0;
  std::vector<std::int32_t> correspondence;  // point_id or kNoPoint
  std::vector<std::int32_t> inst;            // observed instance mask, 0 = background
  std::vector<std::int32_t> sem;             // observed semantic mask, 0 = background
  std::vector<std::int32_t> gt_inst;         // clean instance mask, evaluation only

  std::size_t pixels() const { return static_cast<std::size_t>(width) * height; }
  std::int32_t corr_at(int x, int y) const { return correspondence[static_cast<std::size_t>(y) * width + x]; }
};

struct Scene {
  int canvas_width = 0;
  int canvas_height = 0;
  std::uint64_t seed = 0;
  // instance_class[i] is the semantic class of gt instance id i+1.
  std::vector<int> instance_class;
  std::vector<View> views;

  std::size_t point_count() const {
    return static_cast<std::size_t>(canvas_width) * canvas_height;
  }
  int n_instances() const { return static_cast<int>(instance_class.size()); }
};

void save_scene(const Scene& scene, const std::string& dir);
Scene load_scene(const std::string& dir);

// Per-point majority vote of the observed semantic masks across views.
// Points never observed get class 0.
std::vector<int> majority_semantics(const Scene& scene);

}  // namespace pcf
