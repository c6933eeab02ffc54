#include "hfp/ic0.hpp"

#include <cmath>
#include <memory>
#include <stdexcept>
#include <string>

namespace hfp {

Ic0Factor ic0_factorize(const CsrMatrix& A, Ic0Shift policy) {
    const std::size_t n = A.n_rows;
    if (A.n_cols != n) throw std::invalid_argument("ic0_factorize: matrix not square");

    Ic0Factor out;
    if (policy == Ic0Shift::scaled) {
        double dmax = 0.0;
        for (double d : A.diagonal()) dmax = std::max(dmax, d);
        out.shift = 1e-8 * dmax;
    }

    // Pattern: lower triangle of A, diagonal last in each row (columns are
    // sorted, diagonal is the largest retained column).
    CsrMatrix& L = out.lower;
    L.n_rows = L.n_cols = n;
    L.row_offsets.push_back(0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::uint64_t p = A.row_offsets[i]; p < A.row_offsets[i + 1]; ++p)
            if (A.col_indices[p] <= i) {
                L.col_indices.push_back(A.col_indices[p]);
                L.values.push_back(A.values[p]);
            }
        if (L.col_indices.empty() ||
            L.col_indices.back() != static_cast<std::uint32_t>(i)) {
            // Missing structural diagonal; treat as zero entry.
            L.col_indices.push_back(static_cast<std::uint32_t>(i));
            L.values.push_back(0.0);
        }
        L.row_offsets.push_back(L.col_indices.size());
    }

    for (std::size_t i = 0; i < n; ++i) {
        const std::uint64_t ibeg = L.row_offsets[i], iend = L.row_offsets[i + 1];
        for (std::uint64_t p = ibeg; p < iend; ++p) {
            const std::uint32_t j = L.col_indices[p];
            // Dot of the already-computed prefixes of rows i and j over the
            // shared pattern (columns < j).
            double s = L.values[p];
            const std::uint64_t jbeg = L.row_offsets[j], jend = L.row_offsets[j + 1];
            std::uint64_t pi = ibeg, pj = jbeg;
            while (pi < p && pj < jend && L.col_indices[pj] < j) {
                if (L.col_indices[pi] < L.col_indices[pj])
                    ++pi;
                else if (L.col_indices[pi] > L.col_indices[pj])
                    ++pj;
                else {
                    s -= L.values[pi] * L.values[pj];
                    ++pi;
                    ++pj;
                }
            }
            if (j < i) {
                const double ljj = L.values[jend - 1];
                L.values[p] = s / ljj;
            } else {
                s += out.shift;
                if (!(s > 0.0))
                    throw std::runtime_error(
                        "ic0_factorize: nonpositive pivot at row " + std::to_string(i));
                L.values[p] = std::sqrt(s);
            }
        }
    }
    return out;
}

PrecondApplier ic0_applier(const Ic0Factor& factor) {
    auto L = std::make_shared<CsrMatrix>(factor.lower);
    auto work = std::make_shared<std::vector<double>>(L->n_rows);
    return [L, work](std::span<const double> r, std::span<double> z) {
        const std::size_t n = L->n_rows;
        std::vector<double>& y = *work;
        // Forward: L y = r (diagonal entry is last in each row).
        for (std::size_t i = 0; i < n; ++i) {
            double s = r[i];
            const std::uint64_t end = L->row_offsets[i + 1] - 1;
            for (std::uint64_t p = L->row_offsets[i]; p < end; ++p)
                s -= L->values[p] * y[L->col_indices[p]];
            y[i] = s / L->values[end];
        }
        // Backward: L^T z = y, consuming rows of L from the bottom.
        for (std::size_t i = 0; i < n; ++i) z[i] = y[i];
        for (std::size_t i = n; i-- > 0;) {
            const std::uint64_t end = L->row_offsets[i + 1] - 1;
            z[i] /= L->values[end];
            const double zi = z[i];
            for (std::uint64_t p = L->row_offsets[i]; p < end; ++p)
                z[L->col_indices[p]] -= L->values[p] * zi;
        }
    };
}

} // namespace hfp
