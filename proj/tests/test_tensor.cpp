#include "doctest.h"

#include "polaron/mps.hpp"

#include <random>

using namespace polaron;
using namespace polaron::tensor;

namespace {

// Independent dense oracle: apply a diagonal gate to a dense tensor by
// direct enumeration of all index tuples.
void dense_apply_gate(DenseTensor& t, const std::vector<long>& sites,
                      const Vector& w) {
  std::vector<long> idx(t.shape.size(), 0);
  for (long f = 0; f < t.size(); ++f) {
    long rem = f;
    for (long a = static_cast<long>(t.shape.size()) - 1; a >= 0; --a) {
      idx[a] = rem % t.shape[a];
      rem /= t.shape[a];
    }
    long joint = 0;
    for (long s : sites) joint = joint * t.shape[s] + idx[s];
    t.data(f) *= w(joint);
  }
}

MPS random_mps(std::mt19937& rng, const std::vector<long>& dims, long bond) {
  std::normal_distribution<double> g;
  std::vector<SiteTensor> sites;
  long dl = 1;
  for (size_t s = 0; s < dims.size(); ++s) {
    long dr = (s + 1 == dims.size()) ? 1 : bond;
    SiteTensor t(dl, dims[s], dr);
    for (long p = 0; p < dims[s]; ++p)
      for (long i = 0; i < dl; ++i)
        for (long j = 0; j < dr; ++j) t.block(p)(i, j) = Complex(g(rng), g(rng));
    sites.push_back(std::move(t));
    dl = dr;
  }
  return MPS(std::move(sites));
}

double rel_diff(const DenseTensor& a, const DenseTensor& b) {
  double scale = std::max(a.data.cwiseAbs().maxCoeff(), b.data.cwiseAbs().maxCoeff());
  if (scale == 0) return 0;
  return max_abs_diff(a, b) / scale;
}

}  // namespace

TEST_CASE("vacuum states are all ones") {
  auto d1 = mps_to_dense(mps_vacuum(1, {2}));
  CHECK(d1.size() == 2);
  CHECK(d1.data(0) == Complex(1));
  CHECK(d1.data(1) == Complex(1));

  auto d3 = mps_to_dense(mps_vacuum(3, {2, 2, 2}));
  CHECK(d3.size() == 8);
  for (long i = 0; i < 8; ++i) CHECK(d3.data(i) == Complex(1));

  auto dm = mps_to_dense(mps_vacuum(2, {4, 2}));
  CHECK(dm.shape == std::vector<long>{4, 2});
  for (long i = 0; i < 8; ++i) CHECK(dm.data(i) == Complex(1));

  CHECK_THROWS_AS(mps_vacuum(0, {}), std::invalid_argument);
  CHECK_THROWS_AS(mps_vacuum(1, {0}), std::invalid_argument);
}

TEST_CASE("one-body gate matches hand computation") {
  const double lam = 0.37;
  // Algorithm-1 index convention from the listing: weight on index 0.
  Vector w(2);
  w << std::exp(-lam), 1.0;
  MPS mps = mps_vacuum(3, {2, 2, 2});
  mps = apply_gate(std::move(mps), {1}, w, 16);
  auto dense = mps_to_dense(mps);
  for (long i = 0; i < 8; ++i) {
    const long n1 = (i >> 1) & 1;
    CHECK(std::abs(dense.data(i) - (n1 == 0 ? std::exp(-lam) : 1.0)) < 1e-12);
  }
}

TEST_CASE("gate sequences match dense enumeration") {
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int rep = 0; rep < 8; ++rep) {
    std::vector<long> dims{2, 2, 2, 2};
    MPS mps = mps_vacuum(4, dims);
    DenseTensor dense = mps_to_dense(mps);
    for (int g = 0; g < 6; ++g) {
      if (rep % 2 == 0 && g % 3 == 0) {
        long s = g % 4;
        Vector w(2);
        w << std::exp(Complex(u(rng), u(rng))), 1.0;
        apply_diagonal_gate(mps, {s}, w);
        dense_apply_gate(dense, {s}, w);
      } else {
        long s1 = g % 3, s2 = 3 - (g % 2);
        if (s1 >= s2) s1 = s2 - 1;
        Vector w = Vector::Ones(4);
        w(0) = std::exp(Complex(u(rng), u(rng)));
        apply_diagonal_gate(mps, {s1, s2}, w);
        dense_apply_gate(dense, {s1, s2}, w);
      }
    }
    CHECK(rel_diff(mps_to_dense(mps), dense) < 1e-10);
  }
}

TEST_CASE("two-body gate applied twice squares the selected entries") {
  const double lam = 0.5;
  Vector w = Vector::Ones(4);
  w(0) = std::exp(-lam);
  MPS mps = mps_vacuum(3, {2, 2, 2});
  apply_diagonal_gate(mps, {0, 2}, w);
  apply_diagonal_gate(mps, {0, 2}, w);
  auto dense = mps_to_dense(mps);
  for (long i = 0; i < 8; ++i) {
    const long n0 = (i >> 2) & 1, n2 = i & 1;
    const double expect = (n0 == 0 && n2 == 0) ? std::exp(-2 * lam) : 1.0;
    CHECK(std::abs(dense.data(i) - expect) < 1e-12);
  }
}

TEST_CASE("identity gate and all-ones gate leave the state unchanged") {
  std::mt19937 rng(3);
  MPS mps = random_mps(rng, {2, 3, 2}, 3);
  auto before = mps_to_dense(mps);
  apply_diagonal_gate(mps, {0, 2}, Vector::Ones(4));
  CHECK(rel_diff(mps_to_dense(mps), before) < 1e-12);
  CHECK_THROWS_AS(apply_diagonal_gate(mps, {5}, Vector::Ones(2)),
                  std::invalid_argument);
}

TEST_CASE("compression: product state, exact rank-2, chi=1 projection") {
  MPS vac = mps_vacuum(3, {2, 2, 2});
  auto before = mps_to_dense(vac);
  compress(vac, 1);
  CHECK(vac.max_bond() == 1);
  CHECK(rel_diff(mps_to_dense(vac), before) < 1e-12);

  // rank-2 superposition at M=4 compresses exactly at chi=2
  std::mt19937 rng(11);
  MPS a = random_mps(rng, {2, 2, 2, 2}, 1);
  MPS b = random_mps(rng, {2, 2, 2, 2}, 1);
  DenseTensor da = mps_to_dense(a), db = mps_to_dense(b);
  DenseTensor sum = da;
  sum.data += db.data;
  MPS s2 = mps_from_dense(sum, 8, 0.0);
  compress(s2, 2);
  CHECK(s2.max_bond() <= 2);
  CHECK(rel_diff(mps_to_dense(s2), sum) < 1e-12);

  // chi=1 best rank-1 approximation: overlap bounded below by the largest
  // normalized singular-value product of the dense truncation
  MPS ent = random_mps(rng, {2, 2, 2, 2}, 3);
  DenseTensor dent = mps_to_dense(ent);
  MPS trunc = mps_compress(ent, 1);
  CHECK(trunc.max_bond() == 1);
  const double norm_full = std::sqrt(std::abs(mps_overlap(ent, ent)));
  const double norm_tr = std::sqrt(std::abs(mps_overlap(trunc, trunc)));
  const double fidelity = std::abs(mps_overlap(trunc, ent)) / (norm_full * norm_tr);
  // dense oracle: product over bonds of the largest normalized singular value
  double bound = 1.0;
  for (long cut = 1; cut < 4; ++cut) {
    long rows = 1;
    for (long s = 0; s < cut; ++s) rows *= 2;
    Eigen::Map<const Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic,
                                   Eigen::RowMajor>>
        m(dent.data.data(), rows, dent.size() / rows);
    Eigen::BDCSVD<Matrix> svd(m);
    bound *= svd.singularValues()(0) / svd.singularValues().norm();
  }
  CHECK(fidelity >= bound - 1e-10);
}

TEST_CASE("compression is idempotent") {
  std::mt19937 rng(23);
  MPS a = random_mps(rng, {2, 2, 2, 2, 2}, 6);
  MPS once = mps_compress(a, 3);
  MPS twice = mps_compress(once, 3);
  CHECK(rel_diff(mps_to_dense(once), mps_to_dense(twice)) < 1e-10);
  CHECK(once.canonical() != CanonicalForm::none);
}

TEST_CASE("element-wise multiply: identity, commutativity, associativity, bonds") {
  std::mt19937 rng(5);
  MPS x = random_mps(rng, {2, 2, 2}, 2);
  MPS vac = mps_vacuum(3, {2, 2, 2});
  CHECK(rel_diff(mps_to_dense(mps_elementwise_multiply(vac, x, 64)),
                 mps_to_dense(x)) < 1e-10);

  MPS y = random_mps(rng, {2, 2, 2}, 3);
  MPS z = random_mps(rng, {2, 2, 2}, 2);
  auto xy = mps_to_dense(mps_elementwise_multiply(x, y, 64));
  auto yx = mps_to_dense(mps_elementwise_multiply(y, x, 64));
  CHECK(rel_diff(xy, yx) < 1e-10);
  auto xy_z = mps_to_dense(
      mps_elementwise_multiply(mps_elementwise_multiply(x, y, 64), z, 64));
  auto x_yz = mps_to_dense(
      mps_elementwise_multiply(x, mps_elementwise_multiply(y, z, 64), 64));
  CHECK(rel_diff(xy_z, x_yz) < 1e-10);

  MPS p2 = random_mps(rng, {2, 2, 2, 2}, 2);
  MPS p3 = random_mps(rng, {2, 2, 2, 2}, 3);
  MPS prod = elementwise_product_exact(p2, p3);
  CHECK(prod.bond_dim(1) == 6);
  CHECK(prod.bond_dim(2) == 6);

  MPS bad = random_mps(rng, {2, 2}, 2);
  CHECK_THROWS_AS(mps_elementwise_multiply(x, bad, 8), std::invalid_argument);
}

TEST_CASE("dense round-trip and size cap") {
  std::mt19937 rng(9);
  MPS a = random_mps(rng, {2, 3, 2, 2}, 4);
  auto dense = mps_to_dense(a);
  MPS back = mps_from_dense(dense);
  CHECK(rel_diff(mps_to_dense(back), dense) < 1e-12);

  MPS big = mps_vacuum(30, std::vector<long>(30, 2));
  CHECK_THROWS_AS(mps_to_dense(big, 1 << 20), ResourceLimitError);
}

TEST_CASE("identity MPO leaves states unchanged") {
  std::mt19937 rng(17);
  MPS a = random_mps(rng, {2, 2, 3}, 3);
  MPS b = apply_mpo(identity_mpo({2, 2, 3}), a, 64);
  CHECK(rel_diff(mps_to_dense(a), mps_to_dense(b)) < 1e-10);
}

TEST_CASE("log scale keeps huge entries representable") {
  MPS mps = mps_vacuum(4, {2, 2, 2, 2});
  Vector w(2);
  w << 1.0, std::exp(50.0);  // per-site factor e^50
  for (long s = 0; s < 4; ++s) apply_diagonal_gate(mps, {s}, w);
  compress(mps, 8);
  CHECK(mps.log_scale() > 100.0);  // magnitude lives in the scale factor
  // contract scaled state against the all-ones vector via overlap
  MPS vac = mps_vacuum(4, {2, 2, 2, 2});
  const Complex total = mps_overlap(vac, mps);
  // sum over n of exp(50 * popcount(n)) dominated by e^200
  const double expect_log = 200.0;
  CHECK(std::abs(std::log(std::abs(total)) - expect_log) < 1e-6);
}
