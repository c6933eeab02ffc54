#include "hfp/mppf.hpp"

#include "json.hpp"
#include <zlib.h>

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

static_assert(std::endian::native == std::endian::little,
              "MPPF containers are little-endian; big-endian hosts unsupported");

namespace hfp {

namespace {

constexpr char kMagic[8] = {'M', 'P', 'P', 'F', '0', '0', '0', '1'};

std::uint32_t section_crc(const void* data, std::size_t bytes) {
    return static_cast<std::uint32_t>(
        ::crc32(0L, static_cast<const Bytef*>(data), static_cast<uInt>(bytes)));
}

struct SectionDesc {
    std::string name;
    std::string dtype;
    std::size_t offset = 0;
    std::size_t bytes = 0;
    std::uint32_t crc = 0;
};

template <typename T>
SectionDesc describe(const std::string& name, const std::string& dtype,
                     const std::vector<T>& v, std::size_t& cursor) {
    SectionDesc s;
    s.name = name;
    s.dtype = dtype;
    s.offset = cursor;
    s.bytes = v.size() * sizeof(T);
    s.crc = section_crc(v.data(), s.bytes);
    cursor += s.bytes;
    return s;
}

} // namespace

void write_mppf(const Frame& frame, const std::filesystem::path& path) {
    std::size_t cursor = 0;
    std::vector<SectionDesc> sections;
    sections.push_back(describe("rho", "f64", frame.rho, cursor));
    sections.push_back(describe("row_offsets", "u64", frame.A.row_offsets, cursor));
    sections.push_back(describe("col_indices", "u32", frame.A.col_indices, cursor));
    sections.push_back(describe("values", "f64", frame.A.values, cursor));
    sections.push_back(describe("b", "f64", frame.b, cursor));

    nlohmann::json header;
    header["format"] = "MPPF";
    header["version"] = 1;
    header["n"] = frame.n;
    header["width"] = frame.width;
    header["height"] = frame.height;
    header["seeds"] = {{"master", frame.master_seed}, {"frame", frame.frame_index}};
    header["rho_heavy"] = frame.rho_heavy;
    nlohmann::json jb = nlohmann::json::array();
    for (const BarrierSpec& bar : frame.barriers)
        jb.push_back({{"orientation", static_cast<int>(bar.orientation)},
                      {"center", bar.center},
                      {"thickness", bar.thickness},
                      {"gap", static_cast<int>(bar.gap)}});
    header["barriers"] = jb;
    nlohmann::json js = nlohmann::json::array();
    for (const SectionDesc& s : sections)
        js.push_back({{"name", s.name},
                      {"dtype", s.dtype},
                      {"offset", s.offset},
                      {"bytes", s.bytes},
                      {"crc32", s.crc}});
    header["sections"] = js;

    const std::string header_str = header.dump();
    const std::uint64_t header_len = header_str.size();

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("write_mppf: cannot open " + path.string());
    out.write(kMagic, sizeof(kMagic));
    out.write(reinterpret_cast<const char*>(&header_len), sizeof(header_len));
    out.write(header_str.data(), static_cast<std::streamsize>(header_len));
    auto write_vec = [&](const auto& v) {
        out.write(reinterpret_cast<const char*>(v.data()),
                  static_cast<std::streamsize>(v.size() * sizeof(v[0])));
    };
    write_vec(frame.rho);
    write_vec(frame.A.row_offsets);
    write_vec(frame.A.col_indices);
    write_vec(frame.A.values);
    write_vec(frame.b);
    if (!out) throw std::runtime_error("write_mppf: write failed for " + path.string());
}

Frame read_mppf(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("read_mppf: cannot open " + path.string());
    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        throw std::runtime_error("read_mppf: bad magic in " + path.string());
    std::uint64_t header_len = 0;
    in.read(reinterpret_cast<char*>(&header_len), sizeof(header_len));
    if (!in || header_len == 0 || header_len > (1ULL << 30))
        throw std::runtime_error("read_mppf: bad header length in " + path.string());
    std::string header_str(header_len, '\0');
    in.read(header_str.data(), static_cast<std::streamsize>(header_len));
    if (!in) throw std::runtime_error("read_mppf: truncated header in " + path.string());

    nlohmann::json header = nlohmann::json::parse(header_str);
    if (header.at("version").get<int>() != 1)
        throw std::runtime_error("read_mppf: unsupported version");

    Frame f;
    f.n = header.at("n").get<std::size_t>();
    f.width = header.at("width").get<std::size_t>();
    f.height = header.at("height").get<std::size_t>();
    f.master_seed = header.at("seeds").at("master").get<std::uint64_t>();
    f.frame_index = header.at("seeds").at("frame").get<std::uint64_t>();
    f.rho_heavy = header.at("rho_heavy").get<double>();
    for (const auto& jb : header.at("barriers")) {
        BarrierSpec bar;
        bar.orientation = static_cast<BarrierOrientation>(jb.at("orientation").get<int>());
        bar.center = jb.at("center").get<double>();
        bar.thickness = jb.at("thickness").get<double>();
        bar.gap = static_cast<BarrierGap>(jb.at("gap").get<int>());
        f.barriers.push_back(bar);
    }

    const std::streampos payload_start = in.tellg();
    auto read_section = [&](const nlohmann::json& s, void* dst, std::size_t elem_bytes,
                            std::size_t& count_out) {
        const auto bytes = s.at("bytes").get<std::size_t>();
        const auto offset = s.at("offset").get<std::size_t>();
        count_out = bytes / elem_bytes;
        in.seekg(payload_start + static_cast<std::streamoff>(offset));
        in.read(static_cast<char*>(dst), static_cast<std::streamsize>(bytes));
        if (!in) throw std::runtime_error("read_mppf: truncated section in " + path.string());
        if (section_crc(dst, bytes) != s.at("crc32").get<std::uint32_t>())
            throw std::runtime_error("read_mppf: checksum mismatch in section " +
                                     s.at("name").get<std::string>());
    };

    for (const auto& s : header.at("sections")) {
        const std::string name = s.at("name").get<std::string>();
        const std::size_t bytes = s.at("bytes").get<std::size_t>();
        std::size_t count = 0;
        if (name == "rho") {
            f.rho.resize(bytes / 8);
            read_section(s, f.rho.data(), 8, count);
        } else if (name == "row_offsets") {
            f.A.row_offsets.resize(bytes / 8);
            read_section(s, f.A.row_offsets.data(), 8, count);
        } else if (name == "col_indices") {
            f.A.col_indices.resize(bytes / 4);
            read_section(s, f.A.col_indices.data(), 4, count);
        } else if (name == "values") {
            f.A.values.resize(bytes / 8);
            read_section(s, f.A.values.data(), 8, count);
        } else if (name == "b") {
            f.b.resize(bytes / 8);
            read_section(s, f.b.data(), 8, count);
        } else {
            throw std::runtime_error("read_mppf: unknown section " + name);
        }
    }

    f.A.n_rows = f.A.n_cols = f.n;
    f.A.validate(/*check_symmetric=*/true);
    if (f.rho.size() != f.n || f.b.size() != f.n)
        throw std::runtime_error("read_mppf: section sizes inconsistent with n");
    f.cell_order = morton_cell_order(f.width, f.height, f.n);
    return f;
}

std::vector<std::filesystem::path> generate_dataset(const DatasetSpec& spec,
                                                    const std::filesystem::path& out_dir) {
    for (std::size_t n : spec.scales) {
        if (n < 256 || spec.leaf_size == 0 || n % spec.leaf_size != 0)
            throw std::invalid_argument(
                "generate_dataset: scale must be >= 256 and divisible by the leaf size");
        const std::size_t k = n / spec.leaf_size;
        if (k < 2 || (k & (k - 1)) != 0)
            throw std::invalid_argument(
                "generate_dataset: scale / leaf_size must be a power of two >= 2");
    }
    std::filesystem::create_directories(out_dir);
    std::vector<std::filesystem::path> written;
    char name[64];
    for (std::size_t n : spec.scales) {
        for (std::size_t i = 0; i < spec.train_per_scale; ++i) {
            std::snprintf(name, sizeof(name), "train_N%zu_%03zu.mppf", n, i);
            Frame f = make_frame(n, spec.master_seed, train_frame_id(n, i));
            write_mppf(f, out_dir / name);
            written.push_back(out_dir / name);
        }
        for (std::size_t i = 0; i < spec.test_per_scale; ++i) {
            std::snprintf(name, sizeof(name), "test_N%zu_%03zu.mppf", n, i);
            Frame f = make_frame(n, spec.master_seed, test_frame_id(n, i));
            write_mppf(f, out_dir / name);
            written.push_back(out_dir / name);
        }
    }
    return written;
}

} // namespace hfp
