#include "hfp/rank_audit.hpp"

#include "hfp/eig.hpp"
#include "hfp/spectrum.hpp"

#include "json.hpp"

#include <cmath>
#include <map>
#include <sstream>
#include <stdexcept>

namespace hfp {

namespace {

// Smallest r with sum_{i >= r} sigma_i^2 <= eps^2 * sum sigma_i^2.
std::size_t required_rank(const std::vector<double>& sv, double eps) {
    double total = 0.0;
    for (double s : sv) total += s * s;
    if (total == 0.0) return 0;
    const double budget = eps * eps * total;
    double tail = total;
    std::size_t r = 0;
    double prev_tail = tail;
    while (r < sv.size() && tail > budget) {
        prev_tail = tail;
        tail -= sv[r] * sv[r];
        ++r;
    }
    // Bound correctness by construction: tail(r) <= budget < tail(r-1).
    if (tail > budget + 1e-12 * total || (r > 0 && prev_tail <= budget))
        throw std::logic_error("rank_audit: tail-energy bound violated");
    return r;
}

} // namespace

RankAuditReport rank_audit(const CsrMatrix& A, const HPartition& partition,
                           std::size_t coarse_size, const std::vector<double>& epsilons,
                           std::size_t dense_cap) {
    if (A.n_rows != partition.n)
        throw std::invalid_argument("rank_audit: partition does not match operator");
    if (epsilons.empty()) throw std::invalid_argument("rank_audit: no epsilons");

    const DenseMat X = pseudo_inverse(A, dense_cap);
    const std::size_t l = partition.leaf_size;

    std::map<std::size_t, std::vector<std::vector<double>>> fractions; // span -> [eps][tile]
    for (const TileSpec& t : partition.tiles) {
        const std::size_t side = t.span * l;
        DenseMat block(side, side);
        const std::size_t r0 = t.row_begin * l, c0 = t.col_begin * l;
        for (std::size_t i = 0; i < side; ++i)
            for (std::size_t j = 0; j < side; ++j) block.at(i, j) = X.at(r0 + i, c0 + j);
        const auto sv = singular_values(block);
        auto& per_eps = fractions[t.span];
        per_eps.resize(epsilons.size());
        for (std::size_t e = 0; e < epsilons.size(); ++e)
            per_eps[e].push_back(static_cast<double>(required_rank(sv, epsilons[e])) /
                                 static_cast<double>(side));
    }

    RankAuditReport rep;
    rep.epsilons = epsilons;
    for (auto& [span, per_eps] : fractions) {
        RankAuditRow row;
        row.span = span;
        row.provided_fraction =
            static_cast<double>(coarse_size) / (static_cast<double>(span * l));
        row.tile_count = per_eps[0].size();
        for (std::size_t e = 0; e < epsilons.size(); ++e) {
            double mean = 0.0;
            for (double f : per_eps[e]) mean += f;
            mean /= static_cast<double>(per_eps[e].size());
            double var = 0.0;
            for (double f : per_eps[e]) var += (f - mean) * (f - mean);
            var /= static_cast<double>(per_eps[e].size());
            row.required_mean.push_back(mean);
            row.required_std.push_back(std::sqrt(var));
        }
        rep.rows.push_back(std::move(row));
    }
    return rep;
}

std::string RankAuditReport::to_json() const {
    nlohmann::json j;
    j["epsilons"] = epsilons;
    nlohmann::json rows_json = nlohmann::json::array();
    for (const RankAuditRow& row : rows)
        rows_json.push_back({{"span", row.span},
                             {"provided", row.provided_fraction},
                             {"tiles", row.tile_count},
                             {"required_mean", row.required_mean},
                             {"required_std", row.required_std}});
    j["rows"] = rows_json;
    return j.dump(2);
}

std::string RankAuditReport::to_csv() const {
    std::ostringstream out;
    out << "S,eps,provided,required_mean,required_std\n";
    for (const RankAuditRow& row : rows)
        for (std::size_t e = 0; e < epsilons.size(); ++e)
            out << row.span << ',' << epsilons[e] << ',' << row.provided_fraction << ','
                << row.required_mean[e] << ',' << row.required_std[e] << '\n';
    return out.str();
}

} // namespace hfp
