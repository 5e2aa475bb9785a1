#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "solace/errors.hpp"
#include "solace/nn/activation.hpp"
#include "solace/nn/params.hpp"

namespace solace::nn {

inline constexpr int kCheckpointFormatVersion = 1;

/// Header fields shared by every model file.
struct CheckpointMeta {
  Eigen::Index input_dim = 0;
  std::vector<Eigen::Index> hidden_dims;
  CellSquash activation = CellSquash::sigmoid;
};

/// Serializes tensors as {shape, row-major data}. Vectors get a 1-D shape.
template <ParamBundle P>
nlohmann::json tensors_to_json(const P& params) {
  nlohmann::json out = nlohmann::json::object();
  for (const auto& t : tensors(params)) {
    nlohmann::json data = nlohmann::json::array();
    for (std::size_t k = 0; k < t.size(); ++k) data.push_back(t.row_major_at(k));
    nlohmann::json shape = t.is_vector ? nlohmann::json::array({t.rows}) : nlohmann::json::array({t.rows, t.cols});
    out[t.name] = {{"shape", shape}, {"data", std::move(data)}};
  }
  return out;
}

/// Fills an already-shaped bundle from `tensors_to_json` output. Every
/// tensor must be present with the expected shape.
template <ParamBundle P>
void tensors_from_json(const nlohmann::json& j, P& params) {
  for (const auto& t : tensors(params)) {
    if (!j.contains(t.name)) throw ParseError(0, "checkpoint missing tensor '" + t.name + "'");
    const auto& entry = j.at(t.name);
    const auto shape = entry.at("shape").template get<std::vector<Eigen::Index>>();
    const bool ok = t.is_vector ? (shape.size() == 1 && shape[0] == t.rows)
                                : (shape.size() == 2 && shape[0] == t.rows && shape[1] == t.cols);
    if (!ok) throw ParseError(0, "checkpoint tensor '" + t.name + "' has unexpected shape");
    const auto& data = entry.at("data");
    if (data.size() != t.size()) throw ParseError(0, "checkpoint tensor '" + t.name + "' has wrong element count");
    for (std::size_t k = 0; k < t.size(); ++k) t.row_major_at(k) = data[k].template get<double>();
  }
}

template <ParamBundle P>
nlohmann::json make_checkpoint(const P& params, const CheckpointMeta& meta) {
  return {{"format_version", kCheckpointFormatVersion},
          {"input_dim", meta.input_dim},
          {"hidden_dims", meta.hidden_dims},
          {"activation_flag", std::string(to_string(meta.activation))},
          {"tensors", tensors_to_json(params)}};
}

inline CheckpointMeta read_checkpoint_meta(const nlohmann::json& j) {
  if (!j.contains("format_version") || j.at("format_version").get<int>() != kCheckpointFormatVersion)
    throw ParseError(0, "unsupported checkpoint format_version");
  CheckpointMeta meta;
  meta.input_dim = j.at("input_dim").get<Eigen::Index>();
  meta.hidden_dims = j.at("hidden_dims").get<std::vector<Eigen::Index>>();
  meta.activation = cell_squash_from_string(j.at("activation_flag").get<std::string>());
  return meta;
}

inline void write_json_file(const std::filesystem::path& path, const nlohmann::json& j) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open '" + tmp.string() + "' for writing");
    out << j.dump() << '\n';
    if (!out) throw Error("failed writing '" + tmp.string() + "'");
  }
  std::filesystem::rename(tmp, path);
}

inline nlohmann::json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw NotFound("cannot open '" + path.string() + "'");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(0, path.string() + ": " + e.what());
  }
}

}  // namespace solace::nn
