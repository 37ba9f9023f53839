#pragma once

// JSON checkpoint: {"format", "version", "manifest", "params": {name: {shape, data}}}
// with row-major data. Stores are written side by side; loading restores
// by name, so an actor-only file is enough to rebuild the actors.

#include "gaxnet/nn/param_store.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace gaxnet::nn {

inline constexpr int kCheckpointVersion = 1;

struct CheckpointManifest {
  std::uint64_t seed = 0;
  std::string config_hash;
  std::int64_t iteration = 0;
  std::string mode;
};

struct Checkpoint {
  CheckpointManifest manifest;
  std::map<std::string, Matrix> tensors;
};

void save_checkpoint(const std::string& path, const CheckpointManifest& manifest,
                     const std::vector<const ParamStore*>& stores);
Checkpoint load_checkpoint(const std::string& path);

/// Copies every parameter of `store` from the checkpoint. Missing names
/// or shape mismatches raise VersionError.
void restore(ParamStore& store, const Checkpoint& ckpt);

}  // namespace gaxnet::nn
