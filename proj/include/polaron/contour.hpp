#ifndef POLARON_CONTOUR_HPP
#define POLARON_CONTOUR_HPP

#include "polaron/types.hpp"

#include <memory>
#include <string>
#include <vector>

namespace polaron::contour {

enum class ContourKind { imaginary, keldysh, kadanoff };
enum class Branch { forward, backward, imaginary };

struct ContourPoint {
  Branch branch;
  Complex z;        // contour coordinate of the cell start: t or -i tau
  Complex measure;  // cell weight dz: +dt, -dt, -i dtau
};

// Ordered contour discretization; point j starts cell j and z_j precedes
// z_k on the contour iff j < k.
struct ContourGrid {
  ContourKind kind = ContourKind::imaginary;
  double beta = 0.0;
  double t_max = 0.0;
  double dtau = 0.0;
  double dt = 0.0;
  std::vector<ContourPoint> points;

  long size() const { return static_cast<long>(points.size()); }
  long num_real() const;        // slices on the two real branches
  long first_imag_index() const;  // first imaginary-branch slice (or size())
  bool has_real_branches() const { return kind != ContourKind::imaginary; }
};

ContourGrid make_imaginary_grid(double beta, double dtau);
ContourGrid make_keldysh_grid(double beta, double t_max, double dt);
ContourGrid make_kadanoff_grid(double beta, double t_max, double dt,
                               double dtau);
ContourGrid make_grid(ContourKind kind, double beta, double t_max, double dt,
                      double dtau);

double fermi(double beta, double eps);
double bose(double beta, double omega);

// contour step function, Theta_C(z_i1, z_i2) with the equal-time
// convention Theta_C(z, z) = 1
inline bool theta_c(long i1, long i2) { return i1 >= i2; }

// free-bath contour-ordered Green's functions at single frequency
Complex d_el(double eps, long i1, long i2, const ContourGrid& grid);
Complex d_ph(double omega, long i1, long i2, const ContourGrid& grid);

enum class Statistics { fermionic, bosonic };
enum class SpectrumForm { delta, ohmic_family, semicircular, tabulated };

struct QuadratureNode {
  double x;
  double w;  // weight including the spectral density value
};

// A bath spectral density with a quadrature plan: integrals against the
// density are evaluated as sum_k w_k f(x_k); a delta spectrum has a single
// node, so the substitution is exact.
struct BathSpectrum {
  Statistics statistics = Statistics::bosonic;
  SpectrumForm form = SpectrumForm::delta;
  std::vector<QuadratureNode> nodes;
  // descriptive parameters, kept for configuration echo
  double strength = 0, position = 0, alpha = 0, omega_c = 0, dim = 0;
  double low_freq_exponent = 1;

  // integral of density * x^power over the support
  double moment(double power) const;
};

BathSpectrum delta_spectrum(Statistics stat, double strength, double position);
BathSpectrum ohmic_family_spectrum(double alpha, double omega_c, double d,
                                   long num_nodes = 400);
BathSpectrum semicircular_spectrum(long num_nodes = 400);
// Two-column (frequency, density) text file with a declared-support header
// line: "support <lo> <hi> [low_exponent <p>]".  Linear interpolation.
BathSpectrum tabulated_spectrum(Statistics stat, const std::string& path,
                                long num_nodes = 400);

Complex hybridization(const BathSpectrum& gamma, long i1, long i2,
                      const ContourGrid& grid);
Complex correlation(const BathSpectrum& j, long i1, long i2,
                    const ContourGrid& grid);

enum class KernelKind { hybridization, correlation };

// QuAPI cell-integral matrix: entry (j,k) integrates the bath kernel over
// cell j x cell k with the branch link weights (i * dz), which reduces to
// the plain double tau-integral on the imaginary contour.
struct KernelMatrix {
  Matrix values;
  KernelKind kind = KernelKind::correlation;
  std::shared_ptr<const ContourGrid> grid;
};

KernelMatrix cell_integrals(const BathSpectrum& spec, const ContourGrid& grid,
                            KernelKind kind);

}  // namespace polaron::contour

#endif
