#include "pcf/scene.hpp"

#include <filesystem>
#include <fstream>
#include <map>
#include <stdexcept>

#include <json.hpp>

#include "pcf/image_io.hpp"

namespace pcf {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::vector<std::uint16_t> to_u16(const std::vector<std::int32_t>& v, std::int32_t offset) {
  std::vector<std::uint16_t> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    std::int32_t x = v[i] + offset;
    if (x < 0 || x > 65535) throw std::runtime_error("value out of PGM 16-bit range");
    out[i] = static_cast<std::uint16_t>(x);
  }
  return out;
}

std::vector<std::int32_t> from_u16(const std::vector<std::uint16_t>& v, std::int32_t offset) {
  std::vector<std::int32_t> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i)
    out[i] = static_cast<std::int32_t>(v[i]) + offset;
  return out;
}

std::string view_file(const std::string& dir, int id, const char* kind) {
  return dir + "/view_" + std::to_string(id) + "_" + kind + ".pgm";
}

}  // namespace

void save_scene(const Scene& scene, const std::string& dir) {
  fs::create_directories(dir);
  json j;
  j["canvas_width"] = scene.canvas_width;
  j["canvas_height"] = scene.canvas_height;
  j["point_count"] = scene.point_count();
  j["seed"] = scene.seed;
  j["instance_class"] = scene.instance_class;
  json views = json::array();
  for (const View& v : scene.views)
    views.push_back({{"id", v.view_id}, {"width", v.width}, {"height", v.height}});
  j["views"] = views;
  std::ofstream out(dir + "/scene.json");
  if (!out) throw std::runtime_error("cannot write scene.json in " + dir);
  out << j.dump(2) << "\n";

  for (const View& v : scene.views) {
    // correspondence stored as point_id + 1, 0 = absent
    std::vector<std::int32_t> corr = v.correspondence;
    for (auto& c : corr)
      if (c == kNoPoint) c = -1;
    write_pgm16(view_file(dir, v.view_id, "corr"), v.width, v.height, to_u16(corr, 1));
    write_pgm16(view_file(dir, v.view_id, "inst"), v.width, v.height, to_u16(v.inst, 0));
    write_pgm16(view_file(dir, v.view_id, "sem"), v.width, v.height, to_u16(v.sem, 0));
    write_pgm16(view_file(dir, v.view_id, "gt"), v.width, v.height, to_u16(v.gt_inst, 0));
  }
}

Scene load_scene(const std::string& dir) {
  std::ifstream in(dir + "/scene.json");
  if (!in) throw std::runtime_error("missing scene.json in " + dir);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw std::runtime_error("malformed scene.json: " + std::string(e.what()));
  }

  Scene scene;
  scene.canvas_width = j.at("canvas_width").get<int>();
  scene.canvas_height = j.at("canvas_height").get<int>();
  scene.seed = j.at("seed").get<std::uint64_t>();
  scene.instance_class = j.at("instance_class").get<std::vector<int>>();

  for (const auto& vj : j.at("views")) {
    View v;
    v.view_id = vj.at("id").get<int>();
    int w = 0, h = 0;
    v.correspondence = from_u16(read_pgm16(view_file(dir, v.view_id, "corr"), w, h), -1);
    v.width = w;
    v.height = h;
    for (auto& c : v.correspondence) {
      if (c < 0) c = kNoPoint;
      else if (static_cast<std::size_t>(c) >= static_cast<std::size_t>(scene.canvas_width) * scene.canvas_height)
        throw std::runtime_error("correspondence references a nonexistent point in " +
                                 view_file(dir, v.view_id, "corr"));
    }
    auto load_mask = [&](const char* kind) {
      int mw = 0, mh = 0;
      auto m = from_u16(read_pgm16(view_file(dir, v.view_id, kind), mw, mh), 0);
      if (mw != w || mh != h)
        throw std::runtime_error("mask dimensions disagree in " + view_file(dir, v.view_id, kind));
      return m;
    };
    v.inst = load_mask("inst");
    v.sem = load_mask("sem");
    v.gt_inst = load_mask("gt");
    scene.views.push_back(std::move(v));
  }
  if (scene.views.empty()) throw std::runtime_error("scene has no views: " + dir);
  return scene;
}

std::vector<int> majority_semantics(const Scene& scene) {
  std::vector<std::map<int, int>> votes(scene.point_count());
  for (const View& v : scene.views) {
    for (std::size_t i = 0; i < v.pixels(); ++i) {
      if (v.correspondence[i] == kNoPoint) continue;
      ++votes[v.correspondence[i]][v.sem[i]];
    }
  }
  std::vector<int> out(scene.point_count(), 0);
  for (std::size_t p = 0; p < votes.size(); ++p) {
    int best = 0, best_count = 0;
    for (const auto& [cls, count] : votes[p]) {
      if (count > best_count) {  // ties resolve to the lowest class (map order)
        best = cls;
        best_count = count;
      }
    }
    out[p] = best;
  }
  return out;
}

}  // namespace pcf
