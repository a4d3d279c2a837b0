#include "polaron/linalg.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>

namespace polaron::linalg {

namespace {

long kept_rank(const RealVector& sigma_desc, const TruncationPolicy& policy,
               double floor_rel) {
  const double smax = sigma_desc.size() ? sigma_desc(0) : 0.0;
  const double cut = std::max(policy.rel_cutoff, floor_rel) * smax;
  long r = 0;
  for (long i = 0; i < sigma_desc.size(); ++i)
    if (sigma_desc(i) > cut) ++r;
  r = std::min<long>(r, policy.max_rank);
  return std::max<long>(r, 1);
}

template <class SVD>
TruncatedSVD pack_svd(const SVD& svd, const TruncationPolicy& policy) {
  const RealVector& s = svd.singularValues();
  const long r = kept_rank(s, policy, 0.0);
  TruncatedSVD out;
  out.U = svd.matrixU().leftCols(r);
  out.sigma = s.head(r);
  out.Vh = svd.matrixV().leftCols(r).adjoint();
  for (long i = r; i < s.size(); ++i) out.discarded_weight += s(i) * s(i);
  return out;
}

TruncatedSVD exact_svd(const Matrix& M, const TruncationPolicy& policy) {
  // BDCSVD in Eigen 3.4 can silently misfactor matrices with clustered
  // singular values (deflation defect), which structured chain tensors hit
  // routinely.  Small blocks go straight to the one-sided Jacobi solver;
  // larger ones use BDC checked against a deterministic probe vector, with
  // a Jacobi fallback on failure.
  if (std::min(M.rows(), M.cols()) <= 64) {
    Eigen::JacobiSVD<Matrix> svd(M,
                                 Eigen::ComputeThinU | Eigen::ComputeThinV);
    return pack_svd(svd, policy);
  }
  Eigen::BDCSVD<Matrix> svd(M, Eigen::ComputeThinU | Eigen::ComputeThinV);
  Vector probe(M.cols());
  for (long i = 0; i < probe.size(); ++i)
    probe(i) = Complex(std::cos(0.7 * i + 0.3), std::sin(1.3 * i + 0.1));
  Vector lhs = M * probe;
  Vector rhs = svd.matrixU() *
               (svd.singularValues().asDiagonal() *
                (svd.matrixV().adjoint() * probe));
  const double scale = lhs.norm() + svd.singularValues()(0) * probe.norm();
  if ((lhs - rhs).norm() <= 1e-10 * scale) return pack_svd(svd, policy);
  Eigen::JacobiSVD<Matrix> jac(M, Eigen::ComputeThinU | Eigen::ComputeThinV);
  return pack_svd(jac, policy);
}

TruncatedSVD gram_svd(const Matrix& M, const TruncationPolicy& policy) {
  const long m = M.rows(), n = M.cols();
  TruncatedSVD out;
  if (m <= n) {
    Matrix G = M * M.adjoint();
    Eigen::SelfAdjointEigenSolver<Matrix> es(G);
    const long d = m;
    RealVector lam = es.eigenvalues();  // ascending
    RealVector sigma(d);
    for (long i = 0; i < d; ++i) sigma(i) = std::sqrt(std::max(lam(d - 1 - i), 0.0));
    const long r = kept_rank(sigma, policy, kGramRelFloor);
    out.U.resize(m, r);
    for (long i = 0; i < r; ++i) out.U.col(i) = es.eigenvectors().col(d - 1 - i);
    out.sigma = sigma.head(r);
    out.Vh = out.U.adjoint() * M;  // = sigma * V^H, rows not yet normalized
    for (long i = 0; i < r; ++i) {
      const double s = out.sigma(i) > 0 ? out.sigma(i) : 1.0;
      out.Vh.row(i) /= s;
    }
    for (long i = r; i < d; ++i) out.discarded_weight += sigma(i) * sigma(i);
  } else {
    Matrix G = M.adjoint() * M;
    Eigen::SelfAdjointEigenSolver<Matrix> es(G);
    const long d = n;
    RealVector lam = es.eigenvalues();
    RealVector sigma(d);
    for (long i = 0; i < d; ++i) sigma(i) = std::sqrt(std::max(lam(d - 1 - i), 0.0));
    const long r = kept_rank(sigma, policy, kGramRelFloor);
    Matrix V(n, r);
    for (long i = 0; i < r; ++i) V.col(i) = es.eigenvectors().col(d - 1 - i);
    out.U = M * V;
    for (long i = 0; i < r; ++i) {
      const double s = sigma(i) > 0 ? sigma(i) : 1.0;
      out.U.col(i) /= s;
    }
    out.sigma = sigma.head(r);
    out.Vh = V.adjoint();
    for (long i = r; i < d; ++i) out.discarded_weight += sigma(i) * sigma(i);
  }
  return out;
}

}  // namespace

TruncatedSVD svd_truncate(const Matrix& M, const TruncationPolicy& policy) {
  if (std::min(M.rows(), M.cols()) < kGramEigThreshold)
    return exact_svd(M, policy);
  return gram_svd(M, policy);
}

void thin_qr(const Matrix& M, Matrix& Q, Matrix& R) {
  const long r = std::min(M.rows(), M.cols());
  Eigen::HouseholderQR<Matrix> qr(M);
  Q = qr.householderQ() * Matrix::Identity(M.rows(), r);
  R = qr.matrixQR().topRows(r).triangularView<Eigen::Upper>();
}

void thin_lq(const Matrix& M, Matrix& L, Matrix& Q) {
  Matrix Qt, Rt;
  thin_qr(M.adjoint(), Qt, Rt);
  L = Rt.adjoint();
  Q = Qt.adjoint();
}

}  // namespace polaron::linalg
