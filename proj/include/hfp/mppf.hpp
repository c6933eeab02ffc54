#pragma once

#include "hfp/frame.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace hfp {

// MPPF v1 frame container: 8-byte magic "MPPF0001", a little-endian u64
// header length, a JSON header (dims, seeds, barriers, per-section offset /
// length / dtype / crc32), then raw little-endian sections:
//   rho (f64) | row_offsets (u64) | col_indices (u32) | values (f64) | b (f64)
// Section offsets are relative to the end of the header. Readers verify the
// magic, every checksum, and the CSR invariants.

void write_mppf(const Frame& frame, const std::filesystem::path& path);

Frame read_mppf(const std::filesystem::path& path);

struct DatasetSpec {
    std::vector<std::size_t> scales;
    std::size_t train_per_scale = 100;
    std::size_t test_per_scale = 20;
    std::uint64_t master_seed = 0;
    std::size_t leaf_size = 128; // scales must be divisible by this
};

// Writes <out>/train_N<scale>_<idx>.mppf and test_... with disjoint frame
// ids. Returns the written paths; throws on config or I/O errors.
std::vector<std::filesystem::path> generate_dataset(const DatasetSpec& spec,
                                                    const std::filesystem::path& out_dir);

} // namespace hfp
