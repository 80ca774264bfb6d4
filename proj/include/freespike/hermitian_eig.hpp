#pragma once

#include "freespike/common.hpp"

namespace freespike {

struct EigenDecomposition {
    Eigen::VectorXd values;  // ascending
    CMatrix vectors;         // orthonormal columns; empty when only values were requested
};

/// Dense Hermitian eigensolver (LAPACK zheevr on the lower triangle). Throws Error on failure.
EigenDecomposition hermitian_eig(CMatrix m, bool vectors = true);

inline Eigen::VectorXd hermitian_eigenvalues(CMatrix m) { return hermitian_eig(std::move(m), false).values; }

/// Complex QR factorization m = Q R (LAPACK zgeqrf + zungqr); returns Q and the diagonal of R.
void householder_qr(CMatrix m, CMatrix& q, CVector& r_diagonal);

}  // namespace freespike
