#pragma once

#include <cstdint>
#include <vector>

namespace pcf {

// Per-pixel (semantic class, instance id) labeling of one view.
// Class 0 is the single stuff/background class; instance id 0 is reserved
// for non-thing pixels.
struct PanopticMask {
  int width = 0;
  int height = 0;
  std::vector<std::int32_t> semantic_class;
  std::vector<std::int32_t> instance_id;

  std::size_t pixels() const { return static_cast<std::size_t>(width) * height; }
};

}  // namespace pcf
