#pragma once

#include "tabkan/network.hpp"

#include <nlohmann/json.hpp>

#include <string>

namespace tabkan::checkpoint {

using json = nlohmann::json;

json spec_to_json(const network::NetworkSpec& spec);
network::NetworkSpec spec_from_json(const json& j);

// Checkpoint file: 8-byte little-endian header length, JSON header
// (variant, widths, hyperparameters, per-tensor byte offsets), then the
// flat parameter vector as little-endian float64.
void save_checkpoint(const std::string& path, const network::Model& model);
network::Model load_checkpoint(const std::string& path);

std::string sha256_hex(const void* data, std::size_t size);
// Fingerprint of a preprocessed matrix (row-major doubles).
std::string fingerprint(const Matrix& x);

}  // namespace tabkan::checkpoint
