#pragma once

#include "hfp/pcg.hpp"

namespace hfp {

enum class Ic0Shift { none, scaled }; // scaled: factor A + 1e-8 max(diag) I

// Zero-fill incomplete Cholesky factor; pattern is the lower triangle of A.
struct Ic0Factor {
    CsrMatrix lower; // includes the diagonal
    double shift = 0.0;
};

// Throws std::runtime_error on a nonpositive pivot (after the shift).
Ic0Factor ic0_factorize(const CsrMatrix& A, Ic0Shift policy = Ic0Shift::scaled);

// Solves L L^T z = r by forward and back substitution.
PrecondApplier ic0_applier(const Ic0Factor& factor);

} // namespace hfp
