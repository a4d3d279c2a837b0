#ifndef POLARON_OBSERVABLES_HPP
#define POLARON_OBSERVABLES_HPP

#include "polaron/influence.hpp"

#include <span>
#include <vector>

namespace polaron::obs {

enum class CorrelatorKind {
  matsubara_g,
  neq_greater,
  neq_lesser,
  eq_greater,
  eq_lesser,
  x_imag,
  x_neq,
  x_eq,
};

struct CorrelatorRequest {
  CorrelatorKind kind = CorrelatorKind::matsubara_g;
  long flavor_a = 0;  // p, carries the moving operator
  long flavor_b = 0;  // q, fixed at the contour reference point
  std::vector<long> slices;  // grid slice indices; empty = full branch
};

struct CorrelatorResult {
  CorrelatorKind kind;
  std::vector<double> times;
  std::vector<Complex> values;
  long chi = 0;
  long chi_zip = 0;
  double dtau = 0, dt = 0;
  contour::ContourKind contour = contour::ContourKind::imaginary;
};

// Impurity-normalized path-integral value Z / (Z_ph Z_el); the bath
// prefactors cancel in every reported ratio and are never computed.
Complex partition_function(const influence::InfluenceFunctional& f,
                           long chi_zip = 0);

// Contract all factors site-by-site against the integration kernels with
// the given ordered insertions, without forming the factor product.
Complex zipup_expectation(const influence::InfluenceFunctional& f,
                          const std::vector<grassmann::Generator>& insertions,
                          long chi_zip = 0);

CorrelatorResult green(const influence::InfluenceFunctional& f,
                       const CorrelatorRequest& req, long chi_zip = 0);
CorrelatorResult density_density(const influence::InfluenceFunctional& f,
                                 const CorrelatorRequest& req,
                                 long chi_zip = 0);

// <n_p> at a slice, via ket-occupation reweighting.
Complex occupation(const influence::InfluenceFunctional& f, long flavor,
                   long slice);

double mse(std::span<const Complex> x, std::span<const Complex> y);
double mse(const std::vector<Complex>& x, const std::vector<Complex>& y);

}  // namespace polaron::obs

#endif
