#ifndef SEMCOM_CHECKPOINT_HPP
#define SEMCOM_CHECKPOINT_HPP

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "semcom/pipeline.hpp"
#include "semcom/tensor.hpp"

namespace semcom {

// Versioned binary container: magic "SCCK", little-endian throughout, a
// string key-value section, then named tensors with shapes and raw IEEE-754
// payloads. Round-trips are bit-exact.
struct Checkpoint {
  std::map<std::string, std::string> config;  // sorted -> deterministic bytes
  std::vector<std::pair<std::string, Tensor>> tensors;
};

void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);  // DataError names offset

// Whole-system persistence: architecture settings, head kind, every network
// parameter, and the codebook (both endpoints must load identical copies).
void save_system(const SemanticSystem& sys, const std::string& path);
SemanticSystem load_system(const std::string& path);

}  // namespace semcom

#endif  // SEMCOM_CHECKPOINT_HPP
