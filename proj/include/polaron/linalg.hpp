#ifndef POLARON_LINALG_HPP
#define POLARON_LINALG_HPP

#include "polaron/types.hpp"

namespace polaron::linalg {

// Rank-truncated factorization M ~= U * sigma.asDiagonal() * Vh.
// U has orthonormal columns, Vh orthonormal rows; sigma is descending.
struct TruncatedSVD {
  Matrix U;
  RealVector sigma;
  Matrix Vh;
  double discarded_weight = 0.0;  // sum of dropped sigma^2
};

// Truncation policy: keep at most `max_rank` values and drop values below
// `rel_cutoff * sigma_max`, but always keep at least one.
struct TruncationPolicy {
  long max_rank;
  double rel_cutoff;
};

// Below this size the exact (BDC/Jacobi) SVD is used.  Above it the
// factorization goes through the Gram matrix on the smaller side, which is
// several times faster at large sizes; singular values below ~1e-8 relative
// are then indistinguishable from roundoff, so the effective cutoff is
// floored there.  The weight lost to that floor is <= 1e-16 of the total
// per bond, far below every tolerance used downstream.
inline constexpr long kGramEigThreshold = 384;
inline constexpr double kGramRelFloor = 1e-8;

TruncatedSVD svd_truncate(const Matrix& M, const TruncationPolicy& policy);

// Thin QR: M = Q * R with Q (m x r), r = min(m, n).
void thin_qr(const Matrix& M, Matrix& Q, Matrix& R);

// Thin LQ: M = L * Q with Q (r x n) having orthonormal rows.
void thin_lq(const Matrix& M, Matrix& L, Matrix& Q);

}  // namespace polaron::linalg

#endif
