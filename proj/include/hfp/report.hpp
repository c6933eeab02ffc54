#pragma once

#include "hfp/pcg.hpp"

#include <string>
#include <vector>

namespace hfp {

struct SummaryRow {
    std::string method;
    std::size_t n = 0;
    std::size_t frames = 0;
    double iters_mean = 0.0;
    double iters_std = 0.0; // population
    std::size_t iters_min = 0;
    std::size_t iters_max = 0;
    std::size_t failures = 0; // non-converged solves
    double wall_ms_mean = 0.0;
};

// Groups per (method, N), preserving first-appearance order of methods.
std::vector<SummaryRow> aggregate_reports(const std::vector<SolveReport>& reports);

// CSV schema: method,N,frames,iters_mean,iters_std,iters_min,iters_max,
// failures,wall_ms_mean
std::string summary_csv(const std::vector<SummaryRow>& rows);
std::string summary_json(const std::vector<SummaryRow>& rows);

} // namespace hfp
