#ifndef POLARON_INFLUENCE_HPP
#define POLARON_INFLUENCE_HPP

#include "polaron/contour.hpp"
#include "polaron/grassmann.hpp"
#include "polaron/mps.hpp"

#include <array>
#include <memory>
#include <optional>

namespace polaron::influence {

// Impurity with up to two fermionic flavors on the 2^F Fock space; basis
// index carries flavor p's occupation in bit p.
struct ImpurityModel {
  long flavors = 1;
  Matrix h_imp;
  std::array<bool, 2> el_coupled{true, true};
  std::optional<Matrix> rho_imp;  // Keldysh initial impurity state

  void validate() const;
};

ImpurityModel single_flavor_model(double eps_a);
ImpurityModel two_flavor_model(double eps_a, double u, double j_tunnel);

// annihilation operator of flavor p on the impurity Fock space
Matrix impurity_annihilator(long flavors, long p);

struct GateAudit {
  long one_body = 0;
  long two_body = 0;
};

// Partial-IF construction of the phonon influence functional over ket
// occupations: dense reconstruction is exp(-sum_{(s,s')} n_s L_{k(s)k(s')}
// n_{s'}) with the density sum running over all (slice, flavor) pairs.
tensor::MPS build_phonon_if(const contour::KernelMatrix& lambda, long flavors,
                            long chi, double cutoff = 1e-12,
                            GateAudit* audit = nullptr);

// Electron influence functional of one flavor as a GMPS,
// exp(-sum_{jk} abar_j Delta_jk a_k), assembled from bond-2 partial factors
// sharing one conjugate generator.
grassmann::GMPS build_electron_if(const contour::KernelMatrix& delta,
                                  std::shared_ptr<const grassmann::Layout> lay,
                                  long flavor, long chi,
                                  double cutoff = 1e-12);

// Bare-impurity kernel: canonical components are the propagator chains
// <nbar_0|U|n_{M-1}> ... <nbar_1|U|n_0> with the link weights taken from the
// contour cells, the antiperiodic boundary sign folded in, and the initial
// impurity state inserted at the t = 0 junction on Keldysh grids.
grassmann::GMPS build_bare_kernel(const ImpurityModel& model,
                                  const contour::ContourGrid& grid,
                                  long n_fine, long chi,
                                  double cutoff = 1e-12);

// Component-wise reweighting of the kernel by the phonon IF.
grassmann::GMPS build_KIph(const grassmann::GMPS& kernel,
                           const tensor::MPS& phonon_if, long chi,
                           double cutoff = 1e-12);

// The rejected direct discretization of the phonon IF as a Grassmann
// bilinear exponent (densities replaced by abar a pairs).  Kept as the
// contrast arm of the discretization experiment.
grassmann::GMPS build_phonon_if_grassmann_naive(
    const contour::KernelMatrix& lambda,
    std::shared_ptr<const grassmann::Layout> lay, long chi,
    double cutoff = 1e-12);

struct SolverOptions {
  long chi = 100;
  long chi_zip = 0;  // 0: same as chi
  double cutoff = 1e-12;
  long n_fine = 1;
  bool parallel_builds = true;

  long zip_chi() const { return chi_zip > 0 ? chi_zip : chi; }
};

struct InfluenceFunctional {
  std::shared_ptr<const grassmann::Layout> layout;
  std::shared_ptr<const contour::ContourGrid> grid;
  std::optional<tensor::MPS> phonon_if;
  std::vector<grassmann::GMPS> electron_if;  // one per flavor
  grassmann::GMPS kernel;
  grassmann::GMPS kiph;  // kernel when no phonon bath is present
  GateAudit audit;
};

InfluenceFunctional build_influence(
    const ImpurityModel& model, const contour::ContourGrid& grid,
    const std::optional<contour::BathSpectrum>& electron_bath,
    const std::optional<contour::BathSpectrum>& phonon_bath,
    const SolverOptions& opt);

}  // namespace polaron::influence

#endif
