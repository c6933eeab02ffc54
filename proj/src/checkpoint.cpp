#include "hfp/checkpoint.hpp"

#include "json.hpp"
#include <zlib.h>

#include <cstring>
#include <fstream>
#include <stdexcept>

namespace hfp {

namespace {
constexpr char kMagic[8] = {'H', 'F', 'T', 'C', '0', '0', '0', '1'};
constexpr int kLayoutVersion = 1;
} // namespace

void write_checkpoint(const FactorTensor& factors, const std::filesystem::path& path,
                      const std::string& metadata_json) {
    nlohmann::json header;
    header["format"] = "HFTC";
    header["layout_version"] = kLayoutVersion;
    header["n"] = factors.layout.n;
    header["leaf_size"] = factors.layout.leaf_size;
    header["coarse_size"] = factors.layout.coarse_size;
    header["packed_width"] = factors.layout.total;
    header["spd_shift_enabled"] = factors.spd_shift_enabled;
    header["spd_shift_raw"] = factors.spd_shift_raw;
    header["payload_crc32"] = static_cast<std::uint32_t>(
        ::crc32(0L, reinterpret_cast<const Bytef*>(factors.data.data()),
                static_cast<uInt>(factors.data.size() * sizeof(float))));
    header["metadata"] = nlohmann::json::parse(metadata_json);

    const std::string header_str = header.dump();
    const std::uint64_t header_len = header_str.size();
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("write_checkpoint: cannot open " + path.string());
    out.write(kMagic, sizeof(kMagic));
    out.write(reinterpret_cast<const char*>(&header_len), sizeof(header_len));
    out.write(header_str.data(), static_cast<std::streamsize>(header_len));
    out.write(reinterpret_cast<const char*>(factors.data.data()),
              static_cast<std::streamsize>(factors.data.size() * sizeof(float)));
    if (!out) throw std::runtime_error("write_checkpoint: write failed");
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("read_checkpoint: cannot open " + path.string());
    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        throw std::runtime_error("read_checkpoint: bad magic");
    std::uint64_t header_len = 0;
    in.read(reinterpret_cast<char*>(&header_len), sizeof(header_len));
    if (!in || header_len == 0 || header_len > (1ULL << 30))
        throw std::runtime_error("read_checkpoint: bad header length");
    std::string header_str(header_len, '\0');
    in.read(header_str.data(), static_cast<std::streamsize>(header_len));
    nlohmann::json header = nlohmann::json::parse(header_str);
    if (header.at("layout_version").get<int>() != kLayoutVersion)
        throw std::runtime_error("read_checkpoint: unsupported layout version");

    const auto n = header.at("n").get<std::size_t>();
    const auto leaf = header.at("leaf_size").get<std::size_t>();
    const auto coarse = header.at("coarse_size").get<std::size_t>();
    const HPartition p = build_partition(n, leaf);

    Checkpoint ck;
    ck.factors = FactorTensor(make_factor_layout(p, coarse));
    if (header.contains("spd_shift_enabled")) {
        ck.factors.spd_shift_enabled = header["spd_shift_enabled"].get<bool>();
        ck.factors.spd_shift_raw = header["spd_shift_raw"].get<double>();
    }
    if (ck.factors.layout.total != header.at("packed_width").get<std::size_t>())
        throw std::runtime_error("read_checkpoint: packed width mismatch");
    in.read(reinterpret_cast<char*>(ck.factors.data.data()),
            static_cast<std::streamsize>(ck.factors.data.size() * sizeof(float)));
    if (!in) throw std::runtime_error("read_checkpoint: truncated payload");
    const auto crc = static_cast<std::uint32_t>(
        ::crc32(0L, reinterpret_cast<const Bytef*>(ck.factors.data.data()),
                static_cast<uInt>(ck.factors.data.size() * sizeof(float))));
    if (crc != header.at("payload_crc32").get<std::uint32_t>())
        throw std::runtime_error("read_checkpoint: payload checksum mismatch");
    ck.metadata_json = header.at("metadata").dump();
    return ck;
}

} // namespace hfp
