#ifndef POLARON_MPS_HPP
#define POLARON_MPS_HPP

#include "polaron/dense_tensor.hpp"
#include "polaron/linalg.hpp"
#include "polaron/types.hpp"

#include <vector>

namespace polaron::tensor {

// Rank-3 site tensor (left bond, physical, right bond), stored as one
// (left x right) matrix per physical value.
class SiteTensor {
 public:
  SiteTensor() = default;
  SiteTensor(long dl, long d, long dr)
      : blocks_(d, Matrix::Zero(dl, dr)) {}

  long left() const { return blocks_.empty() ? 0 : blocks_[0].rows(); }
  long phys() const { return static_cast<long>(blocks_.size()); }
  long right() const { return blocks_.empty() ? 0 : blocks_[0].cols(); }

  Matrix& block(long p) { return blocks_[p]; }
  const Matrix& block(long p) const { return blocks_[p]; }

  // (left*phys) x right, row index l*phys + p.
  Matrix stacked_rows() const;
  // left x (phys*right), column index p*right + r.
  Matrix stacked_cols() const;
  static SiteTensor from_stacked_rows(const Matrix& m, long dl, long d);
  static SiteTensor from_stacked_cols(const Matrix& m, long d, long dr);

  double squared_norm() const;

 private:
  std::vector<Matrix> blocks_;
};

enum class CanonicalForm { none, left, right };

// Matrix product state over an open chain; boundary bonds have extent 1.
// An explicit log-magnitude factor keeps tensor entries O(1) even when the
// represented tensor spans hundreds of orders of magnitude.
class MPS {
 public:
  MPS() = default;
  explicit MPS(std::vector<SiteTensor> sites, double log_scale = 0.0);

  long num_sites() const { return static_cast<long>(sites_.size()); }
  long phys_dim(long s) const { return sites_[s].phys(); }
  std::vector<long> phys_dims() const;
  long bond_dim(long cut) const { return sites_[cut].right(); }  // cut after site
  long max_bond() const;

  SiteTensor& site(long s) { return sites_[s]; }
  const SiteTensor& site(long s) const { return sites_[s]; }

  double log_scale() const { return log_scale_; }
  void add_log_scale(double x) { log_scale_ += x; }

  CanonicalForm canonical() const { return canon_; }
  void set_canonical(CanonicalForm c) { canon_ = c; }

  void check_consistent() const;

 private:
  std::vector<SiteTensor> sites_;
  double log_scale_ = 0.0;
  CanonicalForm canon_ = CanonicalForm::none;
};

// Product state with every entry 1; dense reconstruction is all ones.
MPS mps_vacuum(long num_sites, const std::vector<long>& phys_dims);

// Diagonal gate over one or two physical indices, element-wise
// multiplicative on the named sites.  `weights` has one entry per joint
// physical value (row-major over the listed sites).  Two-site gates on
// non-adjacent sites act as a small-bond MPO spanning the sites in between;
// afterwards the touched span is restored to its exact rank (relative
// cutoff 1e-13, no cap), so the operation itself is lossless.
void apply_diagonal_gate(MPS& mps, const std::vector<long>& sites,
                         const Vector& weights);
MPS apply_gate(MPS mps, const std::vector<long>& sites, const Vector& weights,
               long chi);

// Two-sided compression: orthogonalization sweep (skipped when the state is
// already canonical), then a singular-value truncation sweep in the
// opposite direction.  Keeps at most `chi` values per bond and drops values
// below cutoff * sigma_max.  Sets the canonical-form flag.
void compress(MPS& mps, long chi, double cutoff = 1e-12);
MPS mps_compress(MPS mps, long chi, double cutoff = 1e-12);

// Entry-wise product; pre-truncation bond extents are the products of the
// input bond extents.
MPS mps_elementwise_multiply(const MPS& a, const MPS& b, long chi,
                             double cutoff = 1e-12);
MPS elementwise_product_exact(const MPS& a, const MPS& b);

DenseTensor mps_to_dense(const MPS& mps, long size_cap = (1L << 24));
MPS mps_from_dense(const DenseTensor& t, long chi = 1L << 30,
                   double cutoff = 1e-14);

Complex mps_overlap(const MPS& a, const MPS& b);  // <a|b> including scales

// Matrix product operator: rank-4 sites (left, phys out, phys in, right).
class MPOSite {
 public:
  MPOSite() = default;
  MPOSite(long wl, long d_out, long d_in, long wr)
      : d_in_(d_in), blocks_(d_out * d_in, Matrix::Zero(wl, wr)) {}
  long left() const { return blocks_.empty() ? 0 : blocks_[0].rows(); }
  long right() const { return blocks_.empty() ? 0 : blocks_[0].cols(); }
  long phys_out() const { return static_cast<long>(blocks_.size()) / d_in_; }
  long phys_in() const { return d_in_; }
  Matrix& block(long p_out, long p_in) { return blocks_[p_out * d_in_ + p_in]; }
  const Matrix& block(long p_out, long p_in) const {
    return blocks_[p_out * d_in_ + p_in];
  }

 private:
  long d_in_ = 0;
  std::vector<Matrix> blocks_;
};

class MPO {
 public:
  MPO() = default;
  explicit MPO(std::vector<MPOSite> sites) : sites_(std::move(sites)) {}
  long num_sites() const { return static_cast<long>(sites_.size()); }
  MPOSite& site(long s) { return sites_[s]; }
  const MPOSite& site(long s) const { return sites_[s]; }

 private:
  std::vector<MPOSite> sites_;
};

MPO identity_mpo(const std::vector<long>& phys_dims);
MPS apply_mpo(const MPO& op, const MPS& mps, long chi, double cutoff = 1e-12);

}  // namespace polaron::tensor

#endif
