#pragma once

#include <cstdint>
#include <string>

#include "slscom/nn.hpp"

namespace slscom {

struct CheckpointError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct MissingCheckpoint : CheckpointError {
  using CheckpointError::CheckpointError;
};

// Named-array archive: magic "SLSCKPT1", JSON manifest (component, preset,
// config fingerprint, array table), then raw little-endian doubles.
struct CheckpointMeta {
  std::string component;
  std::string preset;
  std::uint64_t config_fingerprint = 0;
};

void save_checkpoint(const std::string& path, const CheckpointMeta& meta,
                     nn::Module& module);
// Loads arrays by name; shapes must match the module exactly.
CheckpointMeta load_checkpoint(const std::string& path, nn::Module& module);
CheckpointMeta read_checkpoint_meta(const std::string& path);

}  // namespace slscom
