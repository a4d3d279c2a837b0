#ifndef POLARON_REFERENCE_HPP
#define POLARON_REFERENCE_HPP

#include "polaron/contour.hpp"
#include "polaron/observables.hpp"

#include <optional>
#include <vector>

namespace polaron::reference {

// Independent bosons model (no electron bath): closed-form solutions via
// the polaron shift Sigma = int J(w)/w dw and the dressing function F.
struct IBParams {
  long flavors = 1;
  double eps_a = 0;
  double u = 0;  // two-flavor interaction
  double beta = 1;
  contour::BathSpectrum j_spectrum;

  double sigma() const { return j_spectrum.moment(-1.0); }
  double eps_tilde() const { return eps_a - sigma(); }
  double u_tilde() const { return u - 2.0 * sigma(); }
};

std::vector<Complex> ib_matsubara(const IBParams& p,
                                  const std::vector<double>& taus);

struct IBRealtime {
  std::vector<Complex> greater;
  std::vector<Complex> lesser;
};
IBRealtime ib_realtime(const IBParams& p, const std::vector<double>& ts);

// Exact diagonalization of the impurity plus single-mode baths.
struct EDModel {
  long flavors = 1;
  double eps_a = 0;
  double u = 0;
  double j_tunnel = 0;
  std::array<bool, 2> el_coupled{true, true};
  bool has_electron = false;
  double eps0 = 0, lambda = 0;
  bool has_phonon = false;
  double omega0 = 0, g = 0;
  long n_max = 50;
  std::optional<Matrix> rho_imp;  // Keldysh initial impurity state

  long hilbert_dim() const;
};

obs::CorrelatorResult ed_solve(const EDModel& model, double beta,
                               obs::CorrelatorKind kind,
                               const std::vector<double>& times,
                               long flavor_a = 0, long flavor_b = 0);

// trace of the evolved density operator at the given times (unitarity probe)
std::vector<double> ed_evolved_trace(const EDModel& model, double beta,
                                     const std::vector<double>& ts);

}  // namespace polaron::reference

#endif
