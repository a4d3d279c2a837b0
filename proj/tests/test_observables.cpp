#include "doctest.h"

#include "polaron/observables.hpp"
#include "polaron/reference.hpp"

#include <random>

using namespace polaron;
using namespace polaron::obs;
using grassmann::GenKind;
using grassmann::Generator;
using grassmann::GMPS;
using influence::build_influence;
using influence::ImpurityModel;
using influence::InfluenceFunctional;
using influence::SolverOptions;

namespace {

InfluenceFunctional toy_if(const contour::ContourGrid& grid, double eps_a,
                           bool with_el, bool with_ph, long chi = 64,
                           double lambda = 1.0, double g = 1.0 / std::sqrt(2.0)) {
  ImpurityModel m = influence::single_flavor_model(eps_a);
  std::optional<contour::BathSpectrum> el, ph;
  if (with_el)
    el = contour::delta_spectrum(contour::Statistics::fermionic, lambda, 1.0);
  if (with_ph)
    ph = contour::delta_spectrum(contour::Statistics::bosonic, g, 1.0);
  SolverOptions opt;
  opt.chi = chi;
  opt.cutoff = 1e-13;
  return build_influence(m, grid, el, ph, opt);
}

}  // namespace

TEST_CASE("partition function worked examples") {
  const double beta = 1.25, eps = 0.8;
  auto grid = contour::make_imaginary_grid(beta, 0.25);

  // no baths
  auto f0 = toy_if(grid, eps, false, false);
  CHECK(std::abs(partition_function(f0) - (1.0 + std::exp(-beta * eps))) <
        1e-10);

  // independent bosons: Z = 1 + exp(-beta (eps - Sigma))
  auto fib = toy_if(grid, eps, false, true);
  const double sigma = 0.5;  // g^2 / omega0 = 1/2
  CHECK(std::abs(partition_function(fib) -
                 (1.0 + std::exp(-beta * (eps - sigma)))) < 1e-9);

  // Keldysh: Z equals Tr rho_imp = 1 (unitarity of the two real branches).
  // The phonon influence functional cancels exactly between matching
  // forward/backward cells; the electron one carries the first-order
  // Trotter deviation, which must vanish linearly with dt.
  auto kgrid = contour::make_keldysh_grid(beta, 0.5, 0.125);
  auto fph = toy_if(kgrid, eps, false, true, 128);
  CHECK(std::abs(partition_function(fph) - 1.0) < 1e-9);

  double dev[2];
  int i = 0;
  for (double dt : {0.125, 0.0625}) {
    auto g = contour::make_keldysh_grid(beta, 0.5, dt);
    auto f = toy_if(g, eps, true, true, 128);
    dev[i++] = std::abs(partition_function(f) - 1.0);
  }
  CHECK(dev[0] < 0.5 * 0.125);
  CHECK(dev[1] / dev[0] > 0.35);
  CHECK(dev[1] / dev[0] < 0.65);
}

TEST_CASE("zipup equals dense product-then-integrate at M <= 3") {
  std::mt19937 rng(17);
  for (double dtau : {0.25}) {
    for (long m_slices : {2L, 3L}) {
      auto grid = contour::make_imaginary_grid(m_slices * dtau, dtau);
      auto f = toy_if(grid, 0.6, true, true, 256);
      // dense route: multiply all factors, then integrate with insertions
      auto dk = grassmann::dense_from_gmps(f.kiph);
      auto del = grassmann::dense_from_gmps(f.electron_if[0]);
      auto prod = grassmann::dense_grassmann_multiply(dk, del);
      GMPS dense_prod = grassmann::gmps_from_dense_grassmann(
          prod, grassmann::Parity::even);
      std::vector<std::vector<Generator>> insertion_sets = {
          {},
          {{m_slices - 1, GenKind::plain}, {0, GenKind::conjugate}},
          {{0, GenKind::plain}, {0, GenKind::conjugate}},
          {{1, GenKind::conjugate}, {0, GenKind::plain}},
      };
      for (const auto& ins : insertion_sets) {
        const Complex direct = grassmann::dense_grassmann_integrate(prod, ins);
        const Complex zipped = zipup_expectation(f, ins);
        CHECK(std::abs(direct - zipped) < 1e-10 * std::max(1.0, std::abs(direct)));
      }
    }
  }
}

TEST_CASE("zipup with no insertions reproduces the partition function") {
  auto grid = contour::make_imaginary_grid(0.75, 0.25);
  auto f = toy_if(grid, 0.3, true, true);
  CHECK(std::abs(zipup_expectation(f, {}) - partition_function(f)) < 1e-12);
}

TEST_CASE("insertion ordering flips the zipup sign") {
  auto grid = contour::make_imaginary_grid(0.75, 0.25);
  auto f = toy_if(grid, 0.3, true, true);
  std::vector<Generator> fwd{{2, GenKind::plain}, {0, GenKind::conjugate}};
  std::vector<Generator> rev{{0, GenKind::conjugate}, {2, GenKind::plain}};
  const Complex a = zipup_expectation(f, fwd);
  const Complex b = zipup_expectation(f, rev);
  CHECK(std::abs(a + b) < 1e-12 * std::abs(a));
  CHECK(std::abs(a) > 1e-10);
}

TEST_CASE("free-impurity Matsubara Green's function is exact") {
  const double beta = 2.0, eps = 0.9;
  auto grid = contour::make_imaginary_grid(beta, 0.25);
  auto f = toy_if(grid, eps, false, false);
  CorrelatorRequest req;
  req.kind = CorrelatorKind::matsubara_g;
  auto res = green(f, req);
  REQUIRE(res.times.size() == 8);
  const double fbar = contour::fermi(beta, eps);
  for (size_t i = 0; i < res.times.size(); ++i) {
    const Complex expect = -(1.0 - fbar) * std::exp(-eps * res.times[i]);
    CHECK(std::abs(res.values[i] - expect) < 1e-10);
    CHECK(std::abs(std::imag(res.values[i])) < 1e-10);
  }
}

TEST_CASE("density-density on a free impurity") {
  // half filling: X(tau) = 1/2 for all tau
  auto grid = contour::make_imaginary_grid(2.0, 0.25);
  auto f = toy_if(grid, 0.0, false, false);
  CorrelatorRequest req;
  req.kind = CorrelatorKind::x_imag;
  auto res = density_density(f, req);
  for (const Complex& v : res.values) CHECK(std::abs(v - 0.5) < 1e-10);

  // independent bosons: X(tau) constant in tau
  auto fib = toy_if(grid, 0.4, false, true);
  auto rib = density_density(fib, req);
  for (const Complex& v : rib.values)
    CHECK(std::abs(v - rib.values[0]) < 1e-9);
}

TEST_CASE("fermionic sum rule and Keldysh equal-time jump") {
  auto grid = contour::make_imaginary_grid(1.5, 0.25);
  auto f = toy_if(grid, 0.5, true, true, 128);
  CorrelatorRequest req;
  req.kind = CorrelatorKind::matsubara_g;
  req.slices = {0};
  auto g0 = green(f, req);
  // G(beta^-) = -<n> by the cyclic identity
  const Complex gbeta = -occupation(f, 0, 0);
  CHECK(std::abs(g0.values[0] + gbeta - (-1.0)) < 1e-6);

  auto kgrid = contour::make_keldysh_grid(1.5, 0.5, 0.125);
  auto fk = toy_if(kgrid, 0.5, true, true, 128);
  CorrelatorRequest gr, le;
  gr.kind = CorrelatorKind::neq_greater;
  gr.slices = {0};
  le.kind = CorrelatorKind::neq_lesser;
  le.slices = {0};
  const Complex jump = green(fk, gr).values[0] -
                       (kImag * occupation(fk, 0, 0));  // G^<(0) = i <n>
  CHECK(std::abs(jump - (-kImag)) < 1e-6);
}

TEST_CASE("normalization independence of correlators") {
  auto grid = contour::make_imaginary_grid(1.0, 0.25);
  auto f = toy_if(grid, 0.3, true, true);
  CorrelatorRequest req;
  req.kind = CorrelatorKind::matsubara_g;
  auto base = green(f, req);
  f.kiph.mps.add_log_scale(3.7);  // scale KIph by a constant
  auto scaled = green(f, req);
  for (size_t i = 0; i < base.values.size(); ++i)
    CHECK(std::abs(base.values[i] - scaled.values[i]) < 1e-10);
}

TEST_CASE("Kadanoff partition reduces to the imaginary contour at t_max=0") {
  auto gi = contour::make_imaginary_grid(1.0, 0.25);
  auto gk = contour::make_kadanoff_grid(1.0, 0.0, 0.1, 0.25);
  auto fi = toy_if(gi, 0.4, true, true, 128);
  auto fk = toy_if(gk, 0.4, true, true, 128);
  const Complex zi = partition_function(fi);
  const Complex zk = partition_function(fk);
  CHECK(std::abs(zi - zk) < 1e-8 * std::abs(zi));
}

TEST_CASE("matsubara request validation") {
  auto kgrid = contour::make_keldysh_grid(1.0, 0.5, 0.25);
  auto fk = toy_if(kgrid, 0.0, false, false);
  CorrelatorRequest req;
  req.kind = CorrelatorKind::matsubara_g;
  CHECK_THROWS_AS(green(fk, req), std::invalid_argument);

  auto gi = contour::make_imaginary_grid(1.0, 0.25);
  auto fi = toy_if(gi, 0.0, false, false);
  CorrelatorRequest bad;
  bad.kind = CorrelatorKind::neq_greater;
  CHECK_THROWS_AS(green(fi, bad), std::invalid_argument);
  CorrelatorRequest dens;
  dens.kind = CorrelatorKind::x_imag;
  CHECK_THROWS_AS(green(fi, dens), std::invalid_argument);
}

TEST_CASE("mse") {
  std::vector<Complex> x{1.0, 0.0}, y{0.0, 1.0};
  CHECK(mse(x, x) == 0.0);
  CHECK(mse(x, y) == doctest::Approx(1.0));
  std::vector<Complex> cx{{0, 1}}, cy{{0, -1}};
  CHECK(mse(cx, cy) == doctest::Approx(4.0));
  std::vector<Complex> bad{1.0};
  CHECK_THROWS_AS(mse(x, bad), std::invalid_argument);
}

TEST_CASE("toy model Matsubara agrees with exact diagonalization") {
  const double beta = 2.0;
  auto grid = contour::make_imaginary_grid(beta, 0.1);
  auto f = toy_if(grid, 0.0, true, true, 100);
  CorrelatorRequest req;
  req.kind = CorrelatorKind::matsubara_g;
  auto got = green(f, req);

  reference::EDModel em;
  em.flavors = 1;
  em.eps_a = 0.0;
  em.has_electron = true;
  em.lambda = 1.0;
  em.eps0 = 1.0;
  em.has_phonon = true;
  em.g = 1.0 / std::sqrt(2.0);
  em.omega0 = 1.0;
  em.n_max = 30;
  auto ed = reference::ed_solve(em, beta, CorrelatorKind::matsubara_g,
                                got.times);
  CHECK(mse(got.values, ed.values) < 2e-3);

  CorrelatorRequest xq;
  xq.kind = CorrelatorKind::x_imag;
  auto gx = density_density(f, xq);
  auto edx = reference::ed_solve(em, beta, CorrelatorKind::x_imag, gx.times);
  CHECK(mse(gx.values, edx.values) < 2e-3);
}
