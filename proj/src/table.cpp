#include "pcf/table.hpp"

#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace pcf {

using nlohmann::json;

void save_checkpoint(const EmbeddingTable& table, const std::string& path) {
  json j;
  j["n_dims"] = table.n_dims;
  j["points"] = table.size();
  json mu = json::array(), log_var = json::array();
  for (const auto& e : table.entries) {
    mu.push_back(e.mu);
    log_var.push_back(e.log_var);
  }
  j["mu"] = std::move(mu);
  j["log_var"] = std::move(log_var);
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write checkpoint: " + path);
  out << j.dump() << "\n";
}

EmbeddingTable load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw std::runtime_error("malformed checkpoint " + path + ": " + e.what());
  }
  EmbeddingTable table;
  table.n_dims = j.at("n_dims").get<std::size_t>();
  const std::size_t points = j.at("points").get<std::size_t>();
  const auto& mu = j.at("mu");
  const auto& lv = j.at("log_var");
  if (mu.size() != points || lv.size() != points)
    throw std::runtime_error("checkpoint arrays disagree with point count: " + path);
  table.entries.resize(points);
  for (std::size_t p = 0; p < points; ++p) {
    table.entries[p].mu = mu[p].get<std::vector<double>>();
    table.entries[p].log_var = lv[p].get<std::vector<double>>();
    if (table.entries[p].mu.size() != table.n_dims ||
        table.entries[p].log_var.size() != table.n_dims)
      throw std::runtime_error("checkpoint entry dimension mismatch: " + path);
  }
  return table;
}

}  // namespace pcf
