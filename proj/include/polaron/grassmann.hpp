#ifndef POLARON_GRASSMANN_HPP
#define POLARON_GRASSMANN_HPP

#include "polaron/mps.hpp"
#include "polaron/types.hpp"

#include <memory>
#include <optional>
#include <vector>

namespace polaron::grassmann {

// One chain site per (slice, flavor), carrying the joint occupation index
// (nbar, n) of the conjugate and plain generators of that slot, packed as
// idx = 2*nbar + n.  The canonical monomial ordering is
//   a_{S-1}^{n} abar_{S-1}^{nbar} ... a_0^{n} abar_0^{nbar}
// with sites ordered slice-major (flavor fastest), descending to the left.
struct Layout {
  long slices = 0;
  long flavors = 1;

  long sites() const { return slices * flavors; }
  long site(long slice, long flavor) const { return slice * flavors + flavor; }
  long slice_of(long site) const { return site / flavors; }
  long flavor_of(long site) const { return site % flavors; }

  friend bool operator==(const Layout&, const Layout&) = default;
};

enum class GenKind { conjugate, plain };  // abar, a

struct Generator {
  long site;
  GenKind kind;
  friend bool operator==(const Generator&, const Generator&) = default;
};

// Canonical position: smaller = further left in the canonical monomial.
inline long canonical_pos(const Layout& lay, const Generator& g) {
  return 2 * (lay.sites() - 1 - g.site) + (g.kind == GenKind::conjugate ? 1 : 0);
}

enum class Parity { even, odd };

// Grassmann tensor stored as a normal MPS over the canonical components.
// bond_parity, when present, labels every bond index with the occupation
// parity of the sites to its left; structured constructors provide it and
// lossy compression drops it.
struct GMPS {
  tensor::MPS mps;
  std::shared_ptr<const Layout> layout;
  Parity parity = Parity::even;
  std::optional<std::vector<std::vector<std::uint8_t>>> bond_parity;

  long sites() const { return layout->sites(); }
};

// The multiplicative unit (component of the empty monomial = 1).
GMPS gmps_constant(std::shared_ptr<const Layout> layout, Complex value = 1.0);

// Algebra product of two even elements in canonical components.  The sign
// bookkeeping rides on a parity bond routed through the second factor (or
// on its bond-parity labels when available).
GMPS grassmann_multiply(const GMPS& a, const GMPS& b, long chi,
                        double cutoff = 1e-12);

// Integral over the coherent-state measure prod_s dabar_s da_s e^{-abar a}
// of (ordered insertion monomial) * A.  The antiperiodic boundary sign of
// the kernel construction is the caller's concern.
Complex grassmann_integrate(const GMPS& a,
                            const std::vector<Generator>& insertions);

// Per-site contraction weights over the combined occupation index that
// evaluate the integral above; shared by the chain integration and the
// zipup evaluation of factor products.
struct IntegrationKernels {
  double presign = 1.0;
  std::vector<std::array<Complex, 4>> site;
};
IntegrationKernels integration_kernels(const Layout& lay,
                                       const std::vector<Generator>& ins);

// Multiply the component for every occupation pattern (nbar, n) by W[n],
// where W is an MPS over ket indices only (physical extent 2 per site).
GMPS reweight_ket_occupations(const GMPS& a, const tensor::MPS& w,
                              long chi = 1L << 30, double cutoff = 1e-12);

// The even element 1 - sum_k coeffs[k] * abar_{row} a_k as an exact bond-2
// GMPS with parity-labeled bonds; the building block of the partial
// influence-functional factors sharing one conjugate generator.
GMPS gmps_row_bilinear(std::shared_ptr<const Layout> layout, long row_site,
                       const Vector& coeffs);

// The even element 1 - c * (abar_j a_j)(abar_k a_k) for j < k, exact bond-2
// GMPS with parity labels (all even).  Used by the density-bilinear route.
GMPS gmps_density_pair(std::shared_ptr<const Layout> layout, long j, long k,
                       Complex c);

// 1 - sum_{k > row} coeffs[k] * (abar_row a_row)(abar_k a_k), bond 2.
GMPS gmps_density_row(std::shared_ptr<const Layout> layout, long row,
                      const Vector& coeffs);

// ---------------------------------------------------------------------
// Brute-force reference algebra for <= 12 generators (6 sites).  The
// implementation manipulates explicit generator lists, independent of the
// chain kernels above.
class DenseGrassmann {
 public:
  explicit DenseGrassmann(std::shared_ptr<const Layout> layout);

  static constexpr long kMaxGenerators = 12;

  std::shared_ptr<const Layout> layout;
  Vector coeff;  // size 4^sites, component index sum_s idx_s * 4^s

  long component_index(const std::vector<long>& per_site_idx) const;
};

DenseGrassmann dense_from_gmps(const GMPS& g);
GMPS gmps_from_dense_grassmann(const DenseGrassmann& d, Parity parity);

DenseGrassmann dense_grassmann_multiply(const DenseGrassmann& a,
                                        const DenseGrassmann& b);
Complex dense_grassmann_integrate(const DenseGrassmann& a,
                                  const std::vector<Generator>& insertions);
DenseGrassmann dense_reweight_ket(const DenseGrassmann& a, const Vector& w_flat);

}  // namespace polaron::grassmann

#endif
