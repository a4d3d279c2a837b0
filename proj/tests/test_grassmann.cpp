#include "doctest.h"

#include "polaron/grassmann.hpp"

#include <random>

using namespace polaron;
using namespace polaron::grassmann;

namespace {

std::shared_ptr<const Layout> make_layout(long slices, long flavors) {
  return std::make_shared<Layout>(Layout{slices, flavors});
}

DenseGrassmann random_even(std::mt19937& rng,
                           std::shared_ptr<const Layout> lay) {
  std::normal_distribution<double> g;
  DenseGrassmann d(lay);
  const long S = lay->sites();
  for (long c = 0; c < d.coeff.size(); ++c) {
    long count = 0;
    for (long s = 0; s < S; ++s) {
      const long idx = (c >> (2 * s)) & 3;
      count += (idx & 1) + ((idx >> 1) & 1);
    }
    if (count % 2 == 0) d.coeff(c) = Complex(g(rng), g(rng));
  }
  return d;
}

double max_diff(const DenseGrassmann& a, const DenseGrassmann& b) {
  return (a.coeff - b.coeff).cwiseAbs().maxCoeff();
}

}  // namespace

TEST_CASE("unit element and measure normalization") {
  auto lay = make_layout(2, 1);
  GMPS one = gmps_constant(lay);
  CHECK(std::abs(grassmann_integrate(one, {}) - 1.0) < 1e-14);

  // A = 1 + c abar a per site on site 0: canonical component +c at (1,1)
  const Complex c{0.7, -0.2};
  DenseGrassmann d(lay);
  d.coeff(0) = 1.0;
  d.coeff(3) = c;  // site-0 component (nbar,n)=(1,1)
  GMPS a = gmps_from_dense_grassmann(d, Parity::even);
  const Complex got = grassmann_integrate(a, {});
  CHECK(std::abs(got - (1.0 + c)) < 1e-12);
}

TEST_CASE("golden: measure element with ordered pair insertion") {
  auto lay = make_layout(1, 1);
  // e^{-abar a} = 1 + a abar: components (0,0) -> 1, (1,1) -> +1
  DenseGrassmann d(lay);
  d.coeff(0) = 1.0;
  d.coeff(3) = 1.0;
  GMPS m = gmps_from_dense_grassmann(d, Parity::even);
  std::vector<Generator> ins{{0, GenKind::plain}, {0, GenKind::conjugate}};
  CHECK(std::abs(grassmann_integrate(m, ins) - 1.0) < 1e-12);
  CHECK(std::abs(dense_grassmann_integrate(d, ins) - 1.0) < 1e-12);
}

TEST_CASE("dense multiply worked examples") {
  auto lay = make_layout(2, 1);
  // abar0 a0 = -a0 abar0: canonical component -1 at site0 idx 3
  DenseGrassmann x(lay), y(lay);
  x.coeff(3) = -1.0;               // abar0 a0
  y.coeff(3 << 2) = -1.0;          // abar1 a1
  auto prod = dense_grassmann_multiply(x, y);
  // (abar0 a0)(abar1 a1) = +a1 abar1 a0 abar0: component +1 at both idx 3
  CHECK(std::abs(prod.coeff(3 + (3 << 2)) - Complex(1.0)) < 1e-14);

  // (a0)(abar0) = a0 abar0 = -abar0 a0: canonical component +1
  DenseGrassmann pa(lay), pab(lay);
  pa.coeff(1) = 1.0;   // a0
  pab.coeff(2) = 1.0;  // abar0
  auto q = dense_grassmann_multiply(pa, pab);
  CHECK(std::abs(q.coeff(3) - Complex(1.0)) < 1e-14);

  // (1 + abar0 a0)^2 = 1 + 2 abar0 a0
  DenseGrassmann u(lay);
  u.coeff(0) = 1.0;
  u.coeff(3) = -1.0;
  auto sq = dense_grassmann_multiply(u, u);
  CHECK(std::abs(sq.coeff(0) - Complex(1.0)) < 1e-14);
  CHECK(std::abs(sq.coeff(3) - Complex(-2.0)) < 1e-14);
}

TEST_CASE("grassmann_multiply matches the dense oracle") {
  std::mt19937 rng(42);
  for (auto [slices, flavors] : {std::pair<long, long>{3, 1}, {2, 2}, {1, 2}}) {
    auto lay = make_layout(slices, flavors);
    for (int rep = 0; rep < 6; ++rep) {
      DenseGrassmann da = random_even(rng, lay);
      DenseGrassmann db = random_even(rng, lay);
      GMPS ga = gmps_from_dense_grassmann(da, Parity::even);
      GMPS gb = gmps_from_dense_grassmann(db, Parity::even);
      GMPS gc = grassmann_multiply(ga, gb, 256, 1e-14);
      CHECK(gc.parity == Parity::even);
      DenseGrassmann dc = dense_grassmann_multiply(da, db);
      CHECK(max_diff(dense_from_gmps(gc), dc) < 1e-10);
    }
  }
}

TEST_CASE("product of disjoint-support bilinears keeps plus signs") {
  auto lay = make_layout(3, 1);
  std::mt19937 rng(1);
  std::normal_distribution<double> g;
  // exp(-c0 abar0 a0) and exp(-c1 abar2 a2): disjoint supports
  DenseGrassmann a(lay), b(lay);
  const Complex c0{g(rng), g(rng)}, c1{g(rng), g(rng)};
  a.coeff(0) = 1.0;
  a.coeff(3) = c0;  // canonical component of -c0 abar0 a0 is +c0
  b.coeff(0) = 1.0;
  b.coeff(3 << 4) = c1;
  auto prod = dense_grassmann_multiply(a, b);
  CHECK(std::abs(prod.coeff(3 + (3 << 4)) - c0 * c1) < 1e-13);
  CHECK(std::abs(prod.coeff(3) - c0) < 1e-13);
  CHECK(std::abs(prod.coeff(3 << 4) - c1) < 1e-13);
}

TEST_CASE("integrate with insertions matches the dense oracle") {
  std::mt19937 rng(77);
  for (auto [slices, flavors] : {std::pair<long, long>{3, 1}, {2, 2}}) {
    auto lay = make_layout(slices, flavors);
    const long S = lay->sites();
    std::vector<std::vector<Generator>> insertion_sets = {
        {},
        {{0, GenKind::plain}, {0, GenKind::conjugate}},
        {{S - 1, GenKind::plain}, {0, GenKind::conjugate}},
        {{0, GenKind::conjugate}, {S - 1, GenKind::plain}},
        {{S - 1, GenKind::conjugate}, {S - 2, GenKind::plain}},
        {{0, GenKind::plain},
         {1, GenKind::plain},
         {1, GenKind::conjugate},
         {0, GenKind::conjugate}},
    };
    for (int rep = 0; rep < 4; ++rep) {
      DenseGrassmann da = random_even(rng, lay);
      GMPS ga = gmps_from_dense_grassmann(da, Parity::even);
      for (const auto& ins : insertion_sets) {
        const Complex lhs = grassmann_integrate(ga, ins);
        const Complex rhs = dense_grassmann_integrate(da, ins);
        CHECK(std::abs(lhs - rhs) < 1e-10);
      }
    }
  }
}

TEST_CASE("insertion ordering flips the sign") {
  std::mt19937 rng(5);
  auto lay = make_layout(3, 1);
  DenseGrassmann da = random_even(rng, lay);
  GMPS ga = gmps_from_dense_grassmann(da, Parity::even);
  std::vector<Generator> fwd{{2, GenKind::plain}, {0, GenKind::conjugate}};
  std::vector<Generator> rev{{0, GenKind::conjugate}, {2, GenKind::plain}};
  const Complex a = grassmann_integrate(ga, fwd);
  const Complex b = grassmann_integrate(ga, rev);
  CHECK(std::abs(a + b) < 1e-12);
  CHECK(std::abs(a) > 1e-8);  // generically nonzero
}

TEST_CASE("odd insertion monomial into an even integrand vanishes") {
  std::mt19937 rng(9);
  auto lay = make_layout(2, 1);
  DenseGrassmann da = random_even(rng, lay);
  GMPS ga = gmps_from_dense_grassmann(da, Parity::even);
  CHECK(std::abs(grassmann_integrate(ga, {{1, GenKind::plain}})) < 1e-14);
  CHECK(std::abs(dense_grassmann_integrate(da, {{1, GenKind::plain}})) < 1e-14);
}

TEST_CASE("duplicate insertions are rejected") {
  auto lay = make_layout(2, 1);
  GMPS one = gmps_constant(lay);
  std::vector<Generator> dup{{0, GenKind::plain}, {0, GenKind::plain}};
  CHECK_THROWS_AS(grassmann_integrate(one, dup), std::invalid_argument);
}

TEST_CASE("row bilinear constructor matches the exponential expansion") {
  std::mt19937 rng(31);
  std::normal_distribution<double> g;
  for (long row : {0L, 1L, 2L}) {
    auto lay = make_layout(3, 1);
    Vector coeffs(3);
    for (long k = 0; k < 3; ++k) coeffs(k) = Complex(g(rng), g(rng));
    GMPS p = gmps_row_bilinear(lay, row, coeffs);
    REQUIRE(p.bond_parity.has_value());

    // oracle: 1 - sum_k c_k abar_row a_k built by dense multiplies
    DenseGrassmann expect(lay);
    expect.coeff(0) = 1.0;
    for (long k = 0; k < 3; ++k) {
      DenseGrassmann abar(lay), a(lay), term(lay);
      abar.coeff(2L << (2 * row)) = 1.0;
      a.coeff(1L << (2 * k)) = 1.0;
      term = dense_grassmann_multiply(abar, a);
      expect.coeff -= coeffs(k) * term.coeff;
    }
    CHECK(max_diff(dense_from_gmps(p), expect) < 1e-12);

    // labeled fast path agrees with the generic parity-bond path
    DenseGrassmann da = random_even(rng, lay);
    GMPS ga = gmps_from_dense_grassmann(da, Parity::even);
    GMPS labeled = grassmann_multiply(ga, p, 256, 1e-14);
    GMPS unlabeled_b = p;
    unlabeled_b.bond_parity.reset();
    GMPS generic = grassmann_multiply(ga, unlabeled_b, 256, 1e-14);
    CHECK(max_diff(dense_from_gmps(labeled), dense_from_gmps(generic)) < 1e-10);
    CHECK(max_diff(dense_from_gmps(labeled),
                   dense_grassmann_multiply(da, expect)) < 1e-10);
  }
}

TEST_CASE("density pair constructor") {
  auto lay = make_layout(3, 1);
  const Complex c{0.3, 0.9};
  GMPS p = gmps_density_pair(lay, 0, 2, c);
  DenseGrassmann d = dense_from_gmps(p);
  CHECK(std::abs(d.coeff(0) - Complex(1.0)) < 1e-13);
  CHECK(std::abs(d.coeff(3 + (3 << 4)) - (-c)) < 1e-13);
  // all other components vanish
  d.coeff(0) = 0;
  d.coeff(3 + (3 << 4)) = 0;
  CHECK(d.coeff.cwiseAbs().maxCoeff() < 1e-13);
}

TEST_CASE("reweighting ket occupations") {
  std::mt19937 rng(13);
  auto lay = make_layout(2, 1);
  DenseGrassmann da = random_even(rng, lay);
  GMPS ga = gmps_from_dense_grassmann(da, Parity::even);

  // all-ones weight leaves the element unchanged
  auto ones = tensor::mps_vacuum(2, {2, 2});
  CHECK(max_diff(dense_from_gmps(reweight_ket_occupations(ga, ones)), da) < 1e-12);

  // two reweightings compose as the element-wise product of weights
  std::normal_distribution<double> g;
  auto w1 = tensor::mps_vacuum(2, {2, 2});
  auto w2 = tensor::mps_vacuum(2, {2, 2});
  for (long s = 0; s < 2; ++s)
    for (long p = 0; p < 2; ++p) {
      w1.site(s).block(p)(0, 0) = Complex(g(rng), g(rng));
      w2.site(s).block(p)(0, 0) = Complex(g(rng), g(rng));
    }
  auto seq = reweight_ket_occupations(reweight_ket_occupations(ga, w1), w2);
  auto w12 = tensor::mps_elementwise_multiply(w1, w2, 8);
  auto once = reweight_ket_occupations(ga, w12);
  CHECK(max_diff(dense_from_gmps(seq), dense_from_gmps(once)) < 1e-12);

  // dense-path cross-check with an indicator weight n_1 * n_0
  auto wd = tensor::mps_vacuum(2, {2, 2});
  wd.site(0).block(0)(0, 0) = 0.0;
  wd.site(1).block(0)(0, 0) = 0.0;
  auto lhs = dense_from_gmps(reweight_ket_occupations(ga, wd));
  auto rhs = dense_reweight_ket(da, tensor::mps_to_dense(wd).data);
  CHECK(max_diff(lhs, rhs) < 1e-12);
}

TEST_CASE("dense oracle resource cap") {
  CHECK_THROWS_AS(DenseGrassmann(make_layout(7, 1)), ResourceLimitError);
}
