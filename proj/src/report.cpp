#include "hfp/report.hpp"

#include "json.hpp"

#include <cmath>
#include <map>
#include <sstream>

namespace hfp {

std::vector<SummaryRow> aggregate_reports(const std::vector<SolveReport>& reports) {
    std::vector<std::pair<std::string, std::size_t>> order;
    std::map<std::pair<std::string, std::size_t>, std::vector<const SolveReport*>> groups;
    for (const SolveReport& r : reports) {
        const auto key = std::make_pair(r.method, r.n);
        if (groups.find(key) == groups.end()) order.push_back(key);
        groups[key].push_back(&r);
    }
    std::vector<SummaryRow> rows;
    for (const auto& key : order) {
        const auto& g = groups[key];
        SummaryRow row;
        row.method = key.first;
        row.n = key.second;
        row.frames = g.size();
        row.iters_min = g[0]->iterations;
        double mean = 0.0;
        for (const SolveReport* r : g) {
            mean += static_cast<double>(r->iterations);
            row.iters_min = std::min(row.iters_min, r->iterations);
            row.iters_max = std::max(row.iters_max, r->iterations);
            if (!r->converged) ++row.failures;
            row.wall_ms_mean += r->wall_ms;
        }
        mean /= static_cast<double>(g.size());
        row.wall_ms_mean /= static_cast<double>(g.size());
        double var = 0.0;
        for (const SolveReport* r : g) {
            const double d = static_cast<double>(r->iterations) - mean;
            var += d * d;
        }
        var /= static_cast<double>(g.size());
        row.iters_mean = mean;
        row.iters_std = std::sqrt(var);
        rows.push_back(std::move(row));
    }
    return rows;
}

std::string summary_csv(const std::vector<SummaryRow>& rows) {
    std::ostringstream out;
    out << "method,N,frames,iters_mean,iters_std,iters_min,iters_max,failures,"
           "wall_ms_mean\n";
    for (const SummaryRow& r : rows)
        out << r.method << ',' << r.n << ',' << r.frames << ',' << r.iters_mean << ','
            << r.iters_std << ',' << r.iters_min << ',' << r.iters_max << ','
            << r.failures << ',' << r.wall_ms_mean << '\n';
    return out.str();
}

std::string summary_json(const std::vector<SummaryRow>& rows) {
    nlohmann::json arr = nlohmann::json::array();
    for (const SummaryRow& r : rows)
        arr.push_back({{"method", r.method},
                       {"N", r.n},
                       {"frames", r.frames},
                       {"iters_mean", r.iters_mean},
                       {"iters_std", r.iters_std},
                       {"iters_min", r.iters_min},
                       {"iters_max", r.iters_max},
                       {"failures", r.failures},
                       {"wall_ms_mean", r.wall_ms_mean}});
    return arr.dump(2);
}

} // namespace hfp
