#include "polaron/mps.hpp"

#include <Eigen/SVD>
#include <unsupported/Eigen/KroneckerProduct>

#include <cmath>

namespace polaron::tensor {

Matrix SiteTensor::stacked_rows() const {
  const long dl = left(), d = phys(), dr = right();
  Matrix m(dl * d, dr);
  for (long p = 0; p < d; ++p)
    for (long l = 0; l < dl; ++l) m.row(l * d + p) = blocks_[p].row(l);
  return m;
}

Matrix SiteTensor::stacked_cols() const {
  const long dl = left(), d = phys(), dr = right();
  Matrix m(dl, d * dr);
  for (long p = 0; p < d; ++p) m.middleCols(p * dr, dr) = blocks_[p];
  return m;
}

SiteTensor SiteTensor::from_stacked_rows(const Matrix& m, long dl, long d) {
  const long dr = m.cols();
  SiteTensor t(dl, d, dr);
  for (long p = 0; p < d; ++p)
    for (long l = 0; l < dl; ++l) t.blocks_[p].row(l) = m.row(l * d + p);
  return t;
}

SiteTensor SiteTensor::from_stacked_cols(const Matrix& m, long d, long dr) {
  SiteTensor t(m.rows(), d, dr);
  for (long p = 0; p < d; ++p) t.blocks_[p] = m.middleCols(p * dr, dr);
  return t;
}

double SiteTensor::squared_norm() const {
  double s = 0;
  for (const auto& b : blocks_) s += b.squaredNorm();
  return s;
}

MPS::MPS(std::vector<SiteTensor> sites, double log_scale)
    : sites_(std::move(sites)), log_scale_(log_scale) {
  check_consistent();
}

void MPS::check_consistent() const {
  require(!sites_.empty(), "MPS: needs at least one site");
  require(sites_.front().left() == 1 && sites_.back().right() == 1,
          "MPS: boundary bonds must have extent 1");
  for (size_t s = 0; s + 1 < sites_.size(); ++s)
    require(sites_[s].right() == sites_[s + 1].left(),
            "MPS: adjacent bond extents must match");
}

std::vector<long> MPS::phys_dims() const {
  std::vector<long> d(sites_.size());
  for (size_t s = 0; s < sites_.size(); ++s) d[s] = sites_[s].phys();
  return d;
}

long MPS::max_bond() const {
  long m = 1;
  for (const auto& t : sites_) m = std::max(m, t.right());
  return m;
}

MPS mps_vacuum(long num_sites, const std::vector<long>& phys_dims) {
  require(num_sites >= 1, "mps_vacuum: need at least one site");
  require(static_cast<long>(phys_dims.size()) == num_sites,
          "mps_vacuum: one physical extent per site");
  std::vector<SiteTensor> sites;
  sites.reserve(num_sites);
  for (long s = 0; s < num_sites; ++s) {
    require(phys_dims[s] >= 1, "mps_vacuum: physical extents must be >= 1");
    SiteTensor t(1, phys_dims[s], 1);
    for (long p = 0; p < phys_dims[s]; ++p) t.block(p)(0, 0) = 1.0;
    sites.push_back(std::move(t));
  }
  return MPS(std::move(sites));
}

namespace {

void left_orthogonalize(MPS& mps) {
  const long n = mps.num_sites();
  for (long s = 0; s + 1 < n; ++s) {
    Matrix Q, R;
    linalg::thin_qr(mps.site(s).stacked_rows(), Q, R);
    mps.site(s) = SiteTensor::from_stacked_rows(Q, mps.site(s).left(),
                                                mps.site(s).phys());
    SiteTensor& nxt = mps.site(s + 1);
    for (long p = 0; p < nxt.phys(); ++p) nxt.block(p) = R * nxt.block(p);
  }
  mps.set_canonical(CanonicalForm::left);
}

void right_orthogonalize(MPS& mps) {
  const long n = mps.num_sites();
  for (long s = n - 1; s > 0; --s) {
    Matrix L, Q;
    linalg::thin_lq(mps.site(s).stacked_cols(), L, Q);
    mps.site(s) = SiteTensor::from_stacked_cols(Q, mps.site(s).phys(),
                                                mps.site(s).right());
    SiteTensor& prv = mps.site(s - 1);
    for (long p = 0; p < prv.phys(); ++p) prv.block(p) = prv.block(p) * L;
  }
  mps.set_canonical(CanonicalForm::right);
}

// One truncation sweep left-to-right over a right-canonical state; each
// local cut is then globally optimal.  Leaves the state left-canonical.
void truncate_sweep_ltr(MPS& mps, long chi, double cutoff) {
  const long n = mps.num_sites();
  for (long s = 0; s + 1 < n; ++s) {
    auto tsvd = linalg::svd_truncate(mps.site(s).stacked_rows(),
                                     {chi, cutoff});
    mps.site(s) = SiteTensor::from_stacked_rows(tsvd.U, mps.site(s).left(),
                                                mps.site(s).phys());
    Matrix carry = tsvd.sigma.asDiagonal() * tsvd.Vh;
    const double nrm = tsvd.sigma.norm();
    if (nrm > 0) {
      carry /= nrm;
      mps.add_log_scale(std::log(nrm));
    }
    SiteTensor& nxt = mps.site(s + 1);
    for (long p = 0; p < nxt.phys(); ++p) nxt.block(p) = carry * nxt.block(p);
  }
  const double nf = std::sqrt(mps.site(n - 1).squared_norm());
  if (nf > 0) {
    for (long p = 0; p < mps.site(n - 1).phys(); ++p)
      mps.site(n - 1).block(p) /= nf;
    mps.add_log_scale(std::log(nf));
  }
  mps.set_canonical(CanonicalForm::left);
}

void truncate_sweep_rtl(MPS& mps, long chi, double cutoff) {
  const long n = mps.num_sites();
  for (long s = n - 1; s > 0; --s) {
    auto tsvd = linalg::svd_truncate(mps.site(s).stacked_cols(),
                                     {chi, cutoff});
    mps.site(s) = SiteTensor::from_stacked_cols(tsvd.Vh, mps.site(s).phys(),
                                                mps.site(s).right());
    Matrix carry = tsvd.U * tsvd.sigma.asDiagonal();
    const double nrm = tsvd.sigma.norm();
    if (nrm > 0) {
      carry /= nrm;
      mps.add_log_scale(std::log(nrm));
    }
    SiteTensor& prv = mps.site(s - 1);
    for (long p = 0; p < prv.phys(); ++p) prv.block(p) = prv.block(p) * carry;
  }
  const double nf = std::sqrt(mps.site(0).squared_norm());
  if (nf > 0) {
    for (long p = 0; p < mps.site(0).phys(); ++p) mps.site(0).block(p) /= nf;
    mps.add_log_scale(std::log(nf));
  }
  mps.set_canonical(CanonicalForm::right);
}

// Exact-rank restore of a contiguous span after a gate: orthogonalize
// left-to-right inside the span, then sweep back with a pure roundoff
// cutoff.  Bond content outside the span is untouched.
void restore_span(MPS& mps, long s0, long s1) {
  for (long s = s0; s < s1; ++s) {
    Matrix Q, R;
    linalg::thin_qr(mps.site(s).stacked_rows(), Q, R);
    mps.site(s) = SiteTensor::from_stacked_rows(Q, mps.site(s).left(),
                                                mps.site(s).phys());
    SiteTensor& nxt = mps.site(s + 1);
    for (long p = 0; p < nxt.phys(); ++p) nxt.block(p) = R * nxt.block(p);
  }
  for (long s = s1; s > s0; --s) {
    auto tsvd = linalg::svd_truncate(mps.site(s).stacked_cols(),
                                     {1L << 30, 1e-13});
    mps.site(s) = SiteTensor::from_stacked_cols(tsvd.Vh, mps.site(s).phys(),
                                                mps.site(s).right());
    Matrix carry = tsvd.U * tsvd.sigma.asDiagonal();
    SiteTensor& prv = mps.site(s - 1);
    for (long p = 0; p < prv.phys(); ++p) prv.block(p) = prv.block(p) * carry;
  }
}

}  // namespace

void compress(MPS& mps, long chi, double cutoff) {
  require(chi >= 1, "compress: bond cap must be >= 1");
  require(cutoff >= 0, "compress: cutoff must be >= 0");
  if (mps.num_sites() == 1) {
    const double nf = std::sqrt(mps.site(0).squared_norm());
    if (nf > 0) {
      for (long p = 0; p < mps.site(0).phys(); ++p) mps.site(0).block(p) /= nf;
      mps.add_log_scale(std::log(nf));
    }
    mps.set_canonical(CanonicalForm::left);
    return;
  }
  switch (mps.canonical()) {
    case CanonicalForm::left:
      truncate_sweep_rtl(mps, chi, cutoff);
      break;
    case CanonicalForm::right:
      truncate_sweep_ltr(mps, chi, cutoff);
      break;
    case CanonicalForm::none:
      right_orthogonalize(mps);
      truncate_sweep_ltr(mps, chi, cutoff);
      break;
  }
}

MPS mps_compress(MPS mps, long chi, double cutoff) {
  compress(mps, chi, cutoff);
  return mps;
}

void apply_diagonal_gate(MPS& mps, const std::vector<long>& sites,
                         const Vector& weights) {
  require(!sites.empty() && sites.size() <= 2,
          "apply_diagonal_gate: one- and two-site gates only");
  for (long s : sites)
    require(s >= 0 && s < mps.num_sites(),
            "apply_diagonal_gate: site index out of range");
  if (sites.size() == 1) {
    const long s = sites[0], d = mps.phys_dim(s);
    require(weights.size() == d, "apply_diagonal_gate: weight count mismatch");
    for (long p = 0; p < d; ++p) mps.site(s).block(p) *= weights(p);
    mps.set_canonical(CanonicalForm::none);
    return;
  }
  require(sites[0] < sites[1],
          "apply_diagonal_gate: site indices strictly increasing");
  const long s1 = sites[0], s2 = sites[1];
  const long d1 = mps.phys_dim(s1), d2 = mps.phys_dim(s2);
  require(weights.size() == d1 * d2,
          "apply_diagonal_gate: weight count mismatch");

  // Split the joint weight w[p1,p2] = sum_k u_k[p1] v_k[p2]; the in-between
  // sites pass the k label through, so long-range gates are exact.
  Matrix W(d1, d2);
  for (long p1 = 0; p1 < d1; ++p1)
    for (long p2 = 0; p2 < d2; ++p2) W(p1, p2) = weights(p1 * d2 + p2);
  Eigen::JacobiSVD<Matrix> svd(W, Eigen::ComputeThinU | Eigen::ComputeThinV);
  long rank = 0;
  for (long k = 0; k < svd.singularValues().size(); ++k)
    if (svd.singularValues()(k) > 1e-14 * svd.singularValues()(0)) ++rank;
  rank = std::max<long>(rank, 1);

  {  // open: right bond gains the k label
    SiteTensor& t = mps.site(s1);
    const long dl = t.left(), dr = t.right();
    SiteTensor out(dl, d1, dr * rank);
    for (long p = 0; p < d1; ++p)
      for (long k = 0; k < rank; ++k) {
        const Complex u = svd.matrixU()(p, k) * std::sqrt(svd.singularValues()(k));
        for (long j = 0; j < dr; ++j) out.block(p).col(j * rank + k) = u * t.block(p).col(j);
      }
    t = std::move(out);
  }
  for (long s = s1 + 1; s < s2; ++s) {
    SiteTensor& t = mps.site(s);
    SiteTensor out(t.left() * rank, t.phys(), t.right() * rank);
    for (long p = 0; p < t.phys(); ++p)
      out.block(p) = Eigen::kroneckerProduct(t.block(p),
                                             Matrix::Identity(rank, rank));
    t = std::move(out);
  }
  {  // close: contract the k label into the weights' right factor
    SiteTensor& t = mps.site(s2);
    const long dl = t.left(), dr = t.right();
    SiteTensor out(dl * rank, d2, dr);
    for (long p = 0; p < d2; ++p)
      for (long k = 0; k < rank; ++k) {
        const Complex v =
            std::sqrt(svd.singularValues()(k)) * std::conj(svd.matrixV()(p, k));
        for (long i = 0; i < dl; ++i) out.block(p).row(i * rank + k) = v * t.block(p).row(i);
      }
    t = std::move(out);
  }
  restore_span(mps, s1, s2);
  mps.set_canonical(CanonicalForm::none);
}

MPS apply_gate(MPS mps, const std::vector<long>& sites, const Vector& weights,
               long chi) {
  apply_diagonal_gate(mps, sites, weights);
  compress(mps, chi);
  return mps;
}

MPS elementwise_product_exact(const MPS& a, const MPS& b) {
  require(a.num_sites() == b.num_sites(),
          "elementwise product: site count mismatch");
  std::vector<SiteTensor> sites;
  sites.reserve(a.num_sites());
  for (long s = 0; s < a.num_sites(); ++s) {
    require(a.phys_dim(s) == b.phys_dim(s),
            "elementwise product: physical extent mismatch");
    SiteTensor t(a.site(s).left() * b.site(s).left(), a.phys_dim(s),
                 a.site(s).right() * b.site(s).right());
    for (long p = 0; p < a.phys_dim(s); ++p)
      t.block(p) = Eigen::kroneckerProduct(a.site(s).block(p), b.site(s).block(p));
    sites.push_back(std::move(t));
  }
  MPS out(std::move(sites), a.log_scale() + b.log_scale());
  return out;
}

MPS mps_elementwise_multiply(const MPS& a, const MPS& b, long chi,
                             double cutoff) {
  MPS out = elementwise_product_exact(a, b);
  compress(out, chi, cutoff);
  return out;
}

DenseTensor mps_to_dense(const MPS& mps, long size_cap) {
  long total = 1;
  for (long s = 0; s < mps.num_sites(); ++s) {
    total *= mps.phys_dim(s);
    if (total > size_cap)
      throw ResourceLimitError("mps_to_dense: dense size cap exceeded");
  }
  Matrix acc = Matrix::Ones(1, 1);
  for (long s = 0; s < mps.num_sites(); ++s) {
    const SiteTensor& t = mps.site(s);
    Matrix next(acc.rows() * t.phys(), t.right());
    for (long p = 0; p < t.phys(); ++p) {
      Matrix part = acc * t.block(p);  // (rows x dr)
      for (long i = 0; i < acc.rows(); ++i)
        next.row(i * t.phys() + p) = part.row(i);
    }
    acc = std::move(next);
  }
  Vector data = acc.col(0) * std::exp(mps.log_scale());
  return DenseTensor(mps.phys_dims(), std::move(data));
}

MPS mps_from_dense(const DenseTensor& t, long chi, double cutoff) {
  require(!t.shape.empty(), "mps_from_dense: rank must be >= 1");
  const long n = static_cast<long>(t.shape.size());
  std::vector<SiteTensor> sites;
  sites.reserve(n);
  long rest = t.size();
  Matrix m = t.data.transpose();  // 1 x rest, row-major flattening
  long dl = 1;
  for (long s = 0; s + 1 < n; ++s) {
    const long d = t.shape[s];
    rest /= d;
    // rows (dl*d), cols rest
    Matrix resh(dl * d, rest);
    for (long i = 0; i < dl; ++i)
      for (long p = 0; p < d; ++p)
        resh.row(i * d + p) = m.block(i, p * rest, 1, rest);
    auto tsvd = linalg::svd_truncate(resh, {chi, cutoff});
    sites.push_back(SiteTensor::from_stacked_rows(tsvd.U, dl, d));
    m = tsvd.sigma.asDiagonal() * tsvd.Vh;
    dl = m.rows();
  }
  SiteTensor last(dl, t.shape[n - 1], 1);
  for (long p = 0; p < t.shape[n - 1]; ++p) last.block(p) = m.col(p);
  sites.push_back(std::move(last));
  MPS out(std::move(sites));
  out.set_canonical(CanonicalForm::none);
  return out;
}

Complex mps_overlap(const MPS& a, const MPS& b) {
  require(a.num_sites() == b.num_sites(), "mps_overlap: site count mismatch");
  Matrix env = Matrix::Ones(1, 1);
  for (long s = 0; s < a.num_sites(); ++s) {
    require(a.phys_dim(s) == b.phys_dim(s), "mps_overlap: phys mismatch");
    Matrix next = Matrix::Zero(a.site(s).right(), b.site(s).right());
    for (long p = 0; p < a.phys_dim(s); ++p)
      next += a.site(s).block(p).adjoint() * env * b.site(s).block(p);
    env = std::move(next);
  }
  return env(0, 0) * std::exp(a.log_scale() + b.log_scale());
}

MPO identity_mpo(const std::vector<long>& phys_dims) {
  std::vector<MPOSite> sites;
  sites.reserve(phys_dims.size());
  for (long d : phys_dims) {
    MPOSite w(1, d, d, 1);
    for (long p = 0; p < d; ++p) w.block(p, p)(0, 0) = 1.0;
    sites.push_back(std::move(w));
  }
  return MPO(std::move(sites));
}

MPS apply_mpo(const MPO& op, const MPS& mps, long chi, double cutoff) {
  require(op.num_sites() == mps.num_sites(), "apply_mpo: site count mismatch");
  std::vector<SiteTensor> sites;
  sites.reserve(mps.num_sites());
  for (long s = 0; s < mps.num_sites(); ++s) {
    const MPOSite& w = op.site(s);
    const SiteTensor& t = mps.site(s);
    require(w.phys_in() == t.phys(), "apply_mpo: physical extent mismatch");
    SiteTensor out(w.left() * t.left(), w.phys_out(), w.right() * t.right());
    for (long po = 0; po < w.phys_out(); ++po)
      for (long pi = 0; pi < w.phys_in(); ++pi)
        out.block(po) += Eigen::kroneckerProduct(w.block(po, pi), t.block(pi));
    sites.push_back(std::move(out));
  }
  MPS out(std::move(sites), mps.log_scale());
  compress(out, chi, cutoff);
  return out;
}

}  // namespace polaron::tensor
