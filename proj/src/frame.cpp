#include "hfp/frame.hpp"

#include "hfp/morton.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace hfp {

std::pair<std::uint32_t, std::uint32_t> Frame::cell_xy(std::size_t rank) const {
    const std::uint32_t id = cell_order[rank];
    return {id % static_cast<std::uint32_t>(width), id / static_cast<std::uint32_t>(width)};
}

std::pair<std::size_t, std::size_t> grid_dims(std::size_t n) {
    if (n < 4) throw std::invalid_argument("grid_dims: need at least 4 cells");
    std::size_t w = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(n))));
    while (w * w < n) ++w; // guard against sqrt rounding
    const std::size_t h = (n + w - 1) / w;
    return {w, h};
}

std::vector<std::uint32_t> morton_cell_order(std::size_t width, std::size_t height,
                                             std::size_t n) {
    if (width * height < n)
        throw std::invalid_argument("morton_cell_order: grid smaller than n");
    if (width >= (1u << 16) || height >= (1u << 16))
        throw std::invalid_argument("morton_cell_order: grid dimension >= 2^16");
    std::vector<std::uint32_t> ids(width * height);
    for (std::size_t y = 0; y < height; ++y)
        for (std::size_t x = 0; x < width; ++x)
            ids[y * width + x] = static_cast<std::uint32_t>(y * width + x);
    std::sort(ids.begin(), ids.end(), [&](std::uint32_t a, std::uint32_t b) {
        const std::uint32_t ax = a % width, ay = a / width;
        const std::uint32_t bx = b % width, by = b / width;
        return morton_encode(ax, ay) < morton_encode(bx, by);
    });
    ids.resize(n);
    return ids;
}

namespace {

bool in_heavy_region(double xn, double yn, const BarrierSpec& bar) {
    const double cross = (bar.orientation == BarrierOrientation::vertical) ? xn : yn;
    const double along = (bar.orientation == BarrierOrientation::vertical) ? yn : xn;
    if (std::fabs(cross - bar.center) > 0.5 * bar.thickness) return false;
    switch (bar.gap) {
        case BarrierGap::top: return along < 0.8;
        case BarrierGap::bottom: return along > 0.2;
        case BarrierGap::middle_hole: return along < 0.4 || along > 0.6;
        case BarrierGap::closed: return true;
    }
    return true;
}

} // namespace

std::vector<double> density_from_barriers(std::size_t width, std::size_t height,
                                          const std::vector<std::uint32_t>& cell_order,
                                          const std::vector<BarrierSpec>& barriers,
                                          double rho_heavy, RngStream& stream) {
    std::vector<double> rho(cell_order.size());
    for (std::size_t i = 0; i < cell_order.size(); ++i) {
        const std::uint32_t id = cell_order[i];
        const double xn = (static_cast<double>(id % width) + 0.5) / static_cast<double>(width);
        const double yn = (static_cast<double>(id / width) + 0.5) / static_cast<double>(height);
        bool heavy = false;
        for (const BarrierSpec& bar : barriers)
            if (in_heavy_region(xn, yn, bar)) {
                heavy = true;
                break;
            }
        const double noise = std::max(0.5, 1.0 + 0.05 * stream.next_normal());
        rho[i] = (heavy ? rho_heavy : 1.0) * noise;
    }
    return rho;
}

DensitySample sample_density(std::size_t width, std::size_t height,
                             const std::vector<std::uint32_t>& cell_order,
                             RngStream& stream) {
    DensitySample s;
    s.rho_heavy = std::exp(stream.next_uniform(std::log(5.0), std::log(100.0)));
    const std::size_t n_b = 1 + stream.next_below(3);
    for (std::size_t i = 0; i < n_b; ++i) {
        BarrierSpec bar;
        bar.orientation = static_cast<BarrierOrientation>(stream.next_below(2));
        bar.center = stream.next_uniform(0.2, 0.8);
        bar.thickness = stream.next_uniform(0.05, 0.20);
        bar.gap = static_cast<BarrierGap>(stream.next_below(4));
        s.barriers.push_back(bar);
    }
    s.rho = density_from_barriers(width, height, cell_order, s.barriers, s.rho_heavy,
                                  stream);
    return s;
}

CsrMatrix assemble_operator(const std::vector<double>& rho, std::size_t width,
                            std::size_t height,
                            const std::vector<std::uint32_t>& cell_order) {
    const std::size_t n = cell_order.size();
    for (double r : rho)
        if (!(r > 0.0)) throw std::invalid_argument("assemble_operator: density must be positive");
    if (rho.size() != n)
        throw std::invalid_argument("assemble_operator: density/cell count mismatch");

    // Morton rank of each retained grid cell; absent or truncated cells get
    // no rank and their faces drop out (zero-flux).
    std::vector<std::int64_t> rank_of(width * height, -1);
    for (std::size_t i = 0; i < n; ++i) rank_of[cell_order[i]] = static_cast<std::int64_t>(i);

    CsrMatrix A;
    A.n_rows = A.n_cols = n;
    A.row_offsets.reserve(n + 1);
    A.row_offsets.push_back(0);
    std::vector<std::pair<std::uint32_t, double>> row;
    for (std::size_t i = 0; i < n; ++i) {
        const std::uint32_t id = cell_order[i];
        const std::int64_t x = id % width, y = id / width;
        row.clear();
        double diag = 0.0;
        const std::int64_t nbr[4][2] = {{x - 1, y}, {x + 1, y}, {x, y - 1}, {x, y + 1}};
        for (const auto& c : nbr) {
            if (c[0] < 0 || c[0] >= static_cast<std::int64_t>(width) || c[1] < 0 ||
                c[1] >= static_cast<std::int64_t>(height))
                continue;
            const std::int64_t j = rank_of[static_cast<std::size_t>(c[1]) * width +
                                           static_cast<std::size_t>(c[0])];
            if (j < 0) continue;
            const double w = 2.0 * rho[i] * rho[j] / (rho[i] + rho[j]);
            diag += w;
            row.emplace_back(static_cast<std::uint32_t>(j), -w);
        }
        row.emplace_back(static_cast<std::uint32_t>(i), diag);
        std::sort(row.begin(), row.end());
        for (const auto& [c, v] : row) {
            A.col_indices.push_back(c);
            A.values.push_back(v);
        }
        A.row_offsets.push_back(A.col_indices.size());
    }
    return A;
}

void project_out_constant(std::span<double> b) {
    double mean = 0.0;
    for (double v : b) mean += v;
    mean /= static_cast<double>(b.size());
    for (double& v : b) v -= mean;
}

std::vector<double> sample_rhs(std::size_t n, RngStream& stream) {
    std::vector<double> b(n);
    stream.fill_normal(b);
    project_out_constant(b);
    return b;
}

Frame make_frame(std::size_t n, std::uint64_t master_seed, std::uint64_t frame_index) {
    Frame f;
    f.n = n;
    f.master_seed = master_seed;
    f.frame_index = frame_index;
    const auto [w, h] = grid_dims(n);
    f.width = w;
    f.height = h;
    f.cell_order = morton_cell_order(w, h, n);

    RngStream density_stream(master_seed, frame_index, RngPurpose::density);
    DensitySample ds = sample_density(w, h, f.cell_order, density_stream);
    f.rho = std::move(ds.rho);
    f.barriers = std::move(ds.barriers);
    f.rho_heavy = ds.rho_heavy;
    f.A = assemble_operator(f.rho, w, h, f.cell_order);

    RngStream rhs_stream(master_seed, frame_index, RngPurpose::rhs);
    f.b = sample_rhs(n, rhs_stream);
    return f;
}

} // namespace hfp
