#include "freespike/hermitian_eig.hpp"

#include <complex>
#define lapack_complex_float std::complex<float>
#define lapack_complex_double std::complex<double>
#include <lapacke.h>

namespace freespike {

EigenDecomposition hermitian_eig(CMatrix m, bool vectors) {
    const lapack_int n = static_cast<lapack_int>(m.rows());
    if (m.cols() != m.rows()) throw SizeError("hermitian_eig: matrix must be square");
    EigenDecomposition out;
    out.values.resize(n);
    if (n == 0) return out;
    if (vectors) out.vectors.resize(n, n);
    std::vector<lapack_int> support(2 * static_cast<std::size_t>(n));
    lapack_int found = 0;
    const lapack_int info = LAPACKE_zheevr(LAPACK_COL_MAJOR, vectors ? 'V' : 'N', 'A', 'L', n, m.data(), n, 0.0, 0.0, 0,
                                           0, 0.0, &found, out.values.data(), vectors ? out.vectors.data() : nullptr,
                                           vectors ? n : 1, support.data());
    if (info != 0 || found != n) throw Error("zheevr failed with info " + std::to_string(info));
    return out;
}

void householder_qr(CMatrix m, CMatrix& q, CVector& r_diagonal) {
    const lapack_int rows = static_cast<lapack_int>(m.rows());
    const lapack_int cols = static_cast<lapack_int>(m.cols());
    const lapack_int k = std::min(rows, cols);
    CVector tau(k);
    lapack_int info = LAPACKE_zgeqrf(LAPACK_COL_MAJOR, rows, cols, m.data(), rows, tau.data());
    if (info != 0) throw Error("zgeqrf failed with info " + std::to_string(info));
    r_diagonal = m.diagonal().head(k);
    info = LAPACKE_zungqr(LAPACK_COL_MAJOR, rows, k, k, m.data(), rows, tau.data());
    if (info != 0) throw Error("zungqr failed with info " + std::to_string(info));
    q = m.leftCols(k);
}

}  // namespace freespike
