#pragma once

#include <cstdint>

#include "pcf/scene.hpp"

namespace pcf {

struct SceneParams {
  int k_instances = 10;
  int n_views = 6;
  int canvas_width = 128;
  int canvas_height = 128;
  int view_width = 96;
  int view_height = 96;
  int n_thing_classes = 3;
  std::uint64_t seed = 0;
};

// Places k non-overlapping rectangular instances on the canvas and derives
// clean per-view masks through translated window views. Every instance is
// visible in at least two views.
Scene generate_scene(const SceneParams& params);

// Random bijection over the nonzero ids of the observed instance mask.
void permute_ids(View& view, std::uint64_t seed);

// Splits each observed instance, with the given probability, along a random
// axis-aligned line through its bounding box into two view-local ids.
void split_instances(View& view, double split_probability, std::uint64_t seed);

// Anchor-window boundary corruption: for each anchor, one random pixel inside
// the W x W window (clipped at borders) donates its id to the whole window.
void inject_boundary_noise(View& view, int n_anchors, int window_w, std::uint64_t seed);

}  // namespace pcf
