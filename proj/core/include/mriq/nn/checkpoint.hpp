#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "mriq/nn/dual_task_net.hpp"

namespace mriq::nn {

struct Checkpoint {
  DualTaskNet net;
  std::uint64_t training_seed = 0;
  std::string manifest_hash;
};

/// Container: the line "MRIQCKPT1", one line of JSON (architecture config,
/// seed, manifest hash, tensor table with shapes and byte offsets), then all
/// tensors as little-endian float32.
void save_checkpoint(const std::filesystem::path& path, const DualTaskNet& net, std::uint64_t training_seed,
                     const std::string& manifest_hash);
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// SHA-256 of the checkpoint file, hex encoded.
std::string checkpoint_hash(const std::filesystem::path& path);

}  // namespace mriq::nn
