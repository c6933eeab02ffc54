#pragma once

#include "hfp/eig.hpp"
#include "hfp/pcg.hpp"

#include <optional>
#include <string>
#include <vector>

namespace hfp {

struct SpectrumReport {
    std::string method;
    std::vector<double> eigenvalues; // spectrum of M A on the (deflated) range
    double kappa = 0.0;              // over the positive spectrum
    double kappa_unpreconditioned = 0.0;
    double kappa_reduction = 0.0;    // unpreconditioned / preconditioned
    std::size_t negative_count = 0;  // indefiniteness of M, flagged not fatal
    bool deflated = false;
};

enum class Deflation { automatic, on, off };

// Spectrum of the preconditioned operator through the symmetric congruence
// A^{1/2} M A^{1/2} restricted to the range of A: real for any symmetric M,
// equal to the spectrum of M A, and the constant-vector null space of the
// zero-flux operators drops out with the deflation. Dense path; refuses
// n > dense_cap.
SpectrumReport precond_spectrum(const CsrMatrix& A, const DenseMat& m_dense,
                                std::size_t dense_cap = 2048,
                                Deflation deflation = Deflation::automatic);

// Applier-backed variant; materializes M column by column first.
SpectrumReport precond_spectrum(const CsrMatrix& A, const PrecondApplier& applier,
                                std::size_t dense_cap = 2048,
                                Deflation deflation = Deflation::automatic);

// Dense Moore-Penrose pseudo-inverse of a symmetric PSD operator, dropping
// eigenvalues below 1e-8 * lambda_max (the Neumann null mode).
DenseMat pseudo_inverse(const CsrMatrix& A, std::size_t dense_cap = 2048);

DenseMat dense_from_csr(const CsrMatrix& A);

} // namespace hfp
