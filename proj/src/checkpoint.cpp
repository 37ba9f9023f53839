#include "gaxnet/nn/checkpoint.hpp"

#include "gaxnet/io.hpp"

#include <json.hpp>

namespace gaxnet::nn {

void save_checkpoint(const std::string& path, const CheckpointManifest& manifest,
                     const std::vector<const ParamStore*>& stores) {
  nlohmann::json j;
  j["format"] = "gaxnet-checkpoint";
  j["version"] = kCheckpointVersion;
  j["manifest"] = {{"seed", manifest.seed},
                   {"config_hash", manifest.config_hash},
                   {"iteration", manifest.iteration},
                   {"mode", manifest.mode}};
  auto& params = j["params"] = nlohmann::json::object();
  for (const ParamStore* store : stores) {
    store->for_each([&](const std::string& name, const Param<double>& p) {
      if (params.contains(name)) throw ConfigError("checkpoint: duplicate parameter '" + name + "'");
      std::vector<double> data;
      data.reserve(std::size_t(p.value.size()));
      for (Index r = 0; r < p.value.rows(); ++r)
        for (Index c = 0; c < p.value.cols(); ++c) data.push_back(p.value(r, c));
      params[name] = {{"shape", {p.value.rows(), p.value.cols()}}, {"data", std::move(data)}};
    });
  }
  io::write_file(path, j.dump());
}

Checkpoint load_checkpoint(const std::string& path) {
  const auto j = nlohmann::json::parse(io::read_file(path));
  if (j.value("format", "") != "gaxnet-checkpoint") throw VersionError("checkpoint: " + path + " is not a checkpoint");
  if (j.at("version").get<int>() != kCheckpointVersion)
    throw VersionError("checkpoint: unsupported version " + j.at("version").dump());
  Checkpoint ck;
  const auto& m = j.at("manifest");
  ck.manifest.seed = m.at("seed").get<std::uint64_t>();
  ck.manifest.config_hash = m.at("config_hash").get<std::string>();
  ck.manifest.iteration = m.at("iteration").get<std::int64_t>();
  ck.manifest.mode = m.at("mode").get<std::string>();
  for (const auto& [name, t] : j.at("params").items()) {
    const Index rows = t.at("shape").at(0).get<Index>(), cols = t.at("shape").at(1).get<Index>();
    const auto& data = t.at("data");
    if (Index(data.size()) != rows * cols) throw VersionError("checkpoint: '" + name + "' data/shape mismatch");
    Matrix v(rows, cols);
    for (Index r = 0; r < rows; ++r)
      for (Index c = 0; c < cols; ++c) v(r, c) = data[std::size_t(r * cols + c)].get<double>();
    ck.tensors.emplace(name, std::move(v));
  }
  return ck;
}

void restore(ParamStore& store, const Checkpoint& ckpt) {
  store.for_each([&](const std::string& name, Param<double>& p) {
    auto it = ckpt.tensors.find(name);
    if (it == ckpt.tensors.end()) throw VersionError("checkpoint: missing parameter '" + name + "'");
    if (it->second.rows() != p.value.rows() || it->second.cols() != p.value.cols())
      throw VersionError("checkpoint: shape mismatch for '" + name + "'");
    p.value = it->second;
  });
}

}  // namespace gaxnet::nn
