#pragma once

#include "hfp/factor_tensor.hpp"

#include <filesystem>
#include <string>

namespace hfp {

// HFTC v1 checkpoint: 8-byte magic "HFTC0001", little-endian u64 header
// length, JSON header (n, leaf_size, coarse_size, layout version, free-form
// metadata), then the raw little-endian float payload of packed width.

void write_checkpoint(const FactorTensor& factors, const std::filesystem::path& path,
                      const std::string& metadata_json = "{}");

struct Checkpoint {
    FactorTensor factors;
    std::string metadata_json;
};

Checkpoint read_checkpoint(const std::filesystem::path& path);

} // namespace hfp
