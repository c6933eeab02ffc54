#pragma once

#include "hfp/csr.hpp"
#include "hfp/partition.hpp"

#include <string>
#include <vector>

namespace hfp {

// Required truncated-SVD rank of the pseudo-inverse tiles, grouped by span.
struct RankAuditRow {
    std::size_t span = 0;
    double provided_fraction = 0.0; // L_s / (span * L)
    std::size_t tile_count = 0;
    // One entry per epsilon, in the query order.
    std::vector<double> required_mean;
    std::vector<double> required_std; // population
};

struct RankAuditReport {
    std::vector<double> epsilons;
    std::vector<RankAuditRow> rows; // ascending span
    std::string to_csv() const;     // S,eps,provided,required_mean,required_std
    std::string to_json() const;
};

// For every off-diagonal tile of A^+ (dense pseudo-inverse), the smallest
// rank r with tail energy below eps^2 |X|_F^2, reported as a fraction of the
// tile side and aggregated per span class. The bound is asserted exact from
// the singular-value tail.
RankAuditReport rank_audit(const CsrMatrix& A, const HPartition& partition,
                           std::size_t coarse_size, const std::vector<double>& epsilons,
                           std::size_t dense_cap = 2048);

} // namespace hfp
