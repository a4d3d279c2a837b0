#include "polaron/grassmann.hpp"

#include <Eigen/Dense>
#include <unsupported/Eigen/KroneckerProduct>

#include <algorithm>
#include <bit>
#include <cmath>

namespace polaron::grassmann {

using tensor::MPS;
using tensor::SiteTensor;

namespace {

inline long popcount2(long occ) { return (occ & 1) + ((occ >> 1) & 1); }

void check_layouts(const GMPS& a, const GMPS& b) {
  require(a.layout && b.layout && *a.layout == *b.layout,
          "grassmann: layout mismatch");
}

// Sorts generators into canonical order (ascending canonical position),
// returning the permutation sign; duplicate generators are rejected.
double sort_canonical(const Layout& lay, std::vector<Generator>& gens) {
  double sign = 1.0;
  for (size_t i = 1; i < gens.size(); ++i)
    for (size_t j = i; j > 0; --j) {
      const long pj = canonical_pos(lay, gens[j]);
      const long pjm = canonical_pos(lay, gens[j - 1]);
      require(pj != pjm, "grassmann: duplicate insertion generator");
      if (pj < pjm) {
        std::swap(gens[j], gens[j - 1]);
        sign = -sign;
      }
    }
  return sign;
}

}  // namespace

GMPS gmps_constant(std::shared_ptr<const Layout> layout, Complex value) {
  require(layout && layout->sites() >= 1, "gmps_constant: empty layout");
  const long S = layout->sites();
  std::vector<SiteTensor> sites;
  sites.reserve(S);
  for (long s = 0; s < S; ++s) {
    SiteTensor t(1, 4, 1);
    t.block(0)(0, 0) = (s == 0) ? value : 1.0;
    sites.push_back(std::move(t));
  }
  GMPS g{MPS(std::move(sites)), std::move(layout), Parity::even, std::nullopt};
  g.bond_parity = std::vector<std::vector<std::uint8_t>>(
      S - 1, std::vector<std::uint8_t>{0});
  return g;
}

GMPS grassmann_multiply(const GMPS& a, const GMPS& b, long chi, double cutoff) {
  check_layouts(a, b);
  require(a.parity == Parity::even && b.parity == Parity::even,
          "grassmann_multiply: operands must be even");
  const long S = a.sites();
  const bool labeled = b.bond_parity.has_value();

  std::vector<SiteTensor> out;
  out.reserve(S);
  for (long s = 0; s < S; ++s) {
    const SiteTensor& A = a.mps.site(s);
    const SiteTensor& B = b.mps.site(s);
    const long al = A.left(), ar = A.right();
    const long bl = B.left(), br = B.right();
    // interior bonds carry the parity of B occupations to the left, either
    // as an explicit slot (x2) or via B's bond labels
    const long pl = (labeled || s == 0) ? 1 : 2;
    const long pr = (labeled || s == S - 1) ? 1 : 2;
    SiteTensor t(pl * al * bl, 4, pr * ar * br);
    for (long x = 0; x < 4; ++x)
      for (long y = 0; y < 4; ++y) {
        if ((x & y) != 0) continue;  // shared generator annihilates
        const long q = x | y;
        const long ny = popcount2(y), nx = popcount2(x);
        const double local = ((x >> 1) & 1) && (y & 1) ? -1.0 : 1.0;
        if (labeled) {
          // string sign depends on the right-bond label of B
          Matrix Bscaled = B.block(y);
          if (nx & 1) {
            if (s == S - 1) {
              // right boundary label is even
            } else {
              const auto& labels_r = (*b.bond_parity)[s];
              for (long c = 0; c < br; ++c)
                if (labels_r[c]) Bscaled.col(c) = -Bscaled.col(c);
            }
          }
          t.block(q) += local * Eigen::kroneckerProduct(A.block(x), Bscaled);
        } else {
          for (long pi = 0; pi < pl; ++pi) {
            const long po = (pi ^ (ny & 1));
            if (po >= pr) continue;  // even parity pinned at the ends
            const double str = ((nx & 1) && po) ? -1.0 : 1.0;
            t.block(q).block(pi * al * bl, po * ar * br, al * bl, ar * br) +=
                local * str * Eigen::kroneckerProduct(A.block(x), B.block(y));
          }
        }
      }
    out.push_back(std::move(t));
  }
  GMPS prod{MPS(std::move(out), a.mps.log_scale() + b.mps.log_scale()),
            a.layout, Parity::even, std::nullopt};
  tensor::compress(prod.mps, chi, cutoff);
  return prod;
}

IntegrationKernels integration_kernels(const Layout& lay,
                                       const std::vector<Generator>& ins) {
  const long S = lay.sites();
  for (const auto& g : ins)
    require(g.site >= 0 && g.site < S,
            "integration_kernels: insertion outside layout");
  std::vector<Generator> sorted = ins;
  IntegrationKernels out;
  out.presign = sort_canonical(lay, sorted);

  // per-site insertion pattern: bit 0 = plain a, bit 1 = conjugate
  std::vector<long> pattern(S, 0);
  for (const auto& g : sorted)
    pattern[g.site] |= (g.kind == GenKind::plain) ? 1 : 2;

  out.site.assign(S, {Complex(0), Complex(0), Complex(0), Complex(0)});
  long q = 0;  // parity of insertion generators at sites below
  for (long s = 0; s < S; ++s) {
    auto& k = out.site[s];
    const double str = (q & 1) ? -1.0 : 1.0;
    switch (pattern[s]) {
      case 0:  // measure pairs the site: both present or both absent
        k[0] = 1.0;
        k[3] = 1.0;
        break;
      case 1:  // inserted a joins the component's abar
        k[2] = str;
        break;
      case 2:  // inserted abar hops over the component's a
        k[1] = -str;
        break;
      case 3:
        k[0] = 1.0;
        break;
    }
    q ^= popcount2(pattern[s]) & 1;
  }
  return out;
}

Complex grassmann_integrate(const GMPS& a,
                            const std::vector<Generator>& insertions) {
  const auto kern = integration_kernels(*a.layout, insertions);
  Matrix env = Matrix::Ones(1, 1);
  for (long s = 0; s < a.sites(); ++s) {
    Matrix next = Matrix::Zero(env.rows(), a.mps.site(s).right());
    for (long idx = 0; idx < 4; ++idx)
      if (kern.site[s][idx] != Complex(0))
        next += kern.site[s][idx] * (env * a.mps.site(s).block(idx));
    env = std::move(next);
  }
  return kern.presign * env(0, 0) * std::exp(a.mps.log_scale());
}

GMPS reweight_ket_occupations(const GMPS& a, const tensor::MPS& w, long chi,
                              double cutoff) {
  require(w.num_sites() == a.sites(),
          "reweight_ket_occupations: weight layout mismatch");
  const long S = a.sites();
  std::vector<SiteTensor> out;
  out.reserve(S);
  for (long s = 0; s < S; ++s) {
    require(w.phys_dim(s) == 2,
            "reweight_ket_occupations: weights carry one ket index per site");
    const SiteTensor& A = a.mps.site(s);
    const SiteTensor& W = w.site(s);
    SiteTensor t(A.left() * W.left(), 4, A.right() * W.right());
    for (long idx = 0; idx < 4; ++idx)
      t.block(idx) = Eigen::kroneckerProduct(A.block(idx), W.block(idx & 1));
    out.push_back(std::move(t));
  }
  GMPS res{MPS(std::move(out), a.mps.log_scale() + w.log_scale()), a.layout,
           a.parity, std::nullopt};
  if (res.mps.max_bond() > chi) tensor::compress(res.mps, chi, cutoff);
  return res;
}

GMPS gmps_row_bilinear(std::shared_ptr<const Layout> layout, long row_site,
                       const Vector& coeffs) {
  const long S = layout->sites();
  require(row_site >= 0 && row_site < S, "gmps_row_bilinear: row site range");
  require(coeffs.size() == S, "gmps_row_bilinear: one coefficient per site");
  // Two bond states: 0 = even (nothing pending), 1 = odd (one generator of
  // the abar_row/a_k pair placed).  In canonical components the element is
  //   1 + sum_{k>row} c_k (a_k .. abar_row) - sum_{k<=row} c_k (abar_row .. a_k)
  // with the diagonal term +c_row at the joint (1,1) index.
  std::vector<SiteTensor> sites;
  sites.reserve(S);
  for (long s = 0; s < S; ++s) {
    const long dl = (s == 0) ? 1 : 2;
    const long dr = (s == S - 1) ? 1 : 2;
    SiteTensor t(dl, 4, dr);
    auto set = [&](long from, long idx, long to, Complex w) {
      if (from < dl && to < dr) t.block(idx)(from, to) = w;
    };
    set(0, 0, 0, 1.0);
    if (s < row_site) {
      set(1, 0, 1, 1.0);
      set(0, 1, 1, -coeffs(s));  // open with a_k, k < row
    } else if (s == row_site) {
      set(0, 2, 1, 1.0);          // open with abar_row, close at k > row
      set(1, 2, 0, 1.0);          // close a pair opened below
      set(0, 3, 0, coeffs(s));    // diagonal k = row
    } else {
      set(1, 0, 1, 1.0);
      set(1, 1, 0, coeffs(s));  // close with a_k, k > row
    }
    sites.push_back(std::move(t));
  }
  GMPS g{MPS(std::move(sites)), std::move(layout), Parity::even, std::nullopt};
  g.bond_parity = std::vector<std::vector<std::uint8_t>>(
      std::max<long>(S - 1, 0), std::vector<std::uint8_t>{0, 1});
  return g;
}

GMPS gmps_density_pair(std::shared_ptr<const Layout> layout, long j, long k,
                       Complex c) {
  const long S = layout->sites();
  require(0 <= j && j < k && k < S, "gmps_density_pair: need 0 <= j < k < S");
  std::vector<SiteTensor> sites;
  sites.reserve(S);
  for (long s = 0; s < S; ++s) {
    const long dl = (s > j && s <= k) ? 2 : 1;
    const long dr = (s >= j && s < k) ? 2 : 1;
    SiteTensor t(dl, 4, dr);
    auto set = [&](long from, long idx, long to, Complex w) {
      t.block(idx)(from, to) = w;
    };
    if (s == j) {
      set(0, 0, 0, 1.0);
      set(0, 3, 1, -c);
    } else if (s == k) {
      set(0, 0, 0, 1.0);
      set(1, 3, 0, 1.0);
    } else if (s > j && s < k) {
      set(0, 0, 0, 1.0);
      set(1, 0, 1, 1.0);
    } else {
      set(0, 0, 0, 1.0);
    }
    sites.push_back(std::move(t));
  }
  GMPS g{MPS(std::move(sites)), std::move(layout), Parity::even, std::nullopt};
  std::vector<std::vector<std::uint8_t>> labels;
  for (long s = 0; s + 1 < S; ++s)
    labels.push_back((s >= j && s < k) ? std::vector<std::uint8_t>{0, 0}
                                       : std::vector<std::uint8_t>{0});
  g.bond_parity = std::move(labels);
  return g;
}

GMPS gmps_density_row(std::shared_ptr<const Layout> layout, long row,
                      const Vector& coeffs) {
  const long S = layout->sites();
  require(row >= 0 && row < S, "gmps_density_row: row site range");
  require(coeffs.size() == S, "gmps_density_row: one coefficient per site");
  std::vector<SiteTensor> sites;
  sites.reserve(S);
  for (long s = 0; s < S; ++s) {
    const long dl = (s > row) ? 2 : 1;
    const long dr = (s >= row && s < S - 1) ? 2 : 1;
    SiteTensor t(dl, 4, dr);
    t.block(0)(0, 0) = 1.0;
    if (s == row) {
      if (dr > 1) t.block(3)(0, 1) = 1.0;  // open the density pair
    } else if (s > row) {
      t.block(3)(1, 0) = -coeffs(s);  // close it
      if (dr > 1) t.block(0)(1, 1) = 1.0;
    }
    sites.push_back(std::move(t));
  }
  GMPS g{MPS(std::move(sites)), std::move(layout), Parity::even, std::nullopt};
  std::vector<std::vector<std::uint8_t>> labels;
  for (long s = 0; s + 1 < S; ++s)
    labels.push_back((s >= row && s < S - 1)
                         ? std::vector<std::uint8_t>{0, 0}
                         : std::vector<std::uint8_t>{0});
  g.bond_parity = std::move(labels);
  return g;
}

// ---------------------------------------------------------------------
// Dense reference algebra.

DenseGrassmann::DenseGrassmann(std::shared_ptr<const Layout> lay)
    : layout(std::move(lay)) {
  require(layout != nullptr, "DenseGrassmann: null layout");
  if (2 * layout->sites() > kMaxGenerators)
    throw ResourceLimitError("DenseGrassmann: generator cap exceeded");
  coeff = Vector::Zero(1L << (2 * layout->sites()));
}

long DenseGrassmann::component_index(const std::vector<long>& per_site) const {
  long c = 0;
  for (long s = layout->sites() - 1; s >= 0; --s) c = 4 * c + per_site[s];
  return c;
}

namespace {

// position bitmask of a component index (site-0-fastest base-4 packing)
long posmask_of_component(const Layout& lay, long c) {
  const long S = lay.sites();
  long mask = 0;
  for (long s = 0; s < S; ++s) {
    const long idx = (c >> (2 * s)) & 3;
    if (idx & 1) mask |= 1L << canonical_pos(lay, {s, GenKind::plain});
    if (idx & 2) mask |= 1L << canonical_pos(lay, {s, GenKind::conjugate});
  }
  return mask;
}

long component_of_posmask(const Layout& lay, long mask) {
  const long S = lay.sites();
  long c = 0;
  for (long s = 0; s < S; ++s) {
    long idx = 0;
    if (mask & (1L << canonical_pos(lay, {s, GenKind::plain}))) idx |= 1;
    if (mask & (1L << canonical_pos(lay, {s, GenKind::conjugate}))) idx |= 2;
    c |= idx << (2 * s);
  }
  return c;
}

// sign of merging two canonical monomials: (-1)^(#pairs gx in x, gy in y
// with pos(gy) < pos(gx))
double merge_sign(long maskx, long masky) {
  long count = 0;
  for (long p = 0; maskx >> p; ++p)
    if ((maskx >> p) & 1)
      count += std::popcount(static_cast<unsigned long>(masky & ((1L << p) - 1)));
  return (count & 1) ? -1.0 : 1.0;
}

using MaskCoeffs = std::vector<std::pair<long, Complex>>;

MaskCoeffs mask_multiply(const MaskCoeffs& a, const MaskCoeffs& b, long ngen) {
  Vector acc = Vector::Zero(1L << ngen);
  for (const auto& [mx, cx] : a)
    for (const auto& [my, cy] : b) {
      if (mx & my) continue;
      acc(mx | my) += merge_sign(mx, my) * cx * cy;
    }
  MaskCoeffs out;
  for (long m = 0; m < acc.size(); ++m)
    if (acc(m) != 0.0) out.emplace_back(m, acc(m));
  return out;
}

// left Berezin derivative: move the generator at position p to the front
// of each monomial and strip it
MaskCoeffs left_derivative(const MaskCoeffs& a, long p) {
  MaskCoeffs out;
  for (const auto& [m, c] : a) {
    if (!((m >> p) & 1)) continue;
    const long below =
        std::popcount(static_cast<unsigned long>(m & ((1L << p) - 1)));
    out.emplace_back(m ^ (1L << p), (below & 1) ? -c : c);
  }
  return out;
}

MaskCoeffs to_masks(const DenseGrassmann& d) {
  MaskCoeffs out;
  for (long c = 0; c < d.coeff.size(); ++c)
    if (d.coeff(c) != 0.0)
      out.emplace_back(posmask_of_component(*d.layout, c), d.coeff(c));
  return out;
}

}  // namespace

DenseGrassmann dense_grassmann_multiply(const DenseGrassmann& a,
                                        const DenseGrassmann& b) {
  require(*a.layout == *b.layout, "dense_grassmann_multiply: layout mismatch");
  const long ngen = 2 * a.layout->sites();
  MaskCoeffs prod = mask_multiply(to_masks(a), to_masks(b), ngen);
  DenseGrassmann out(a.layout);
  for (const auto& [m, c] : prod)
    out.coeff(component_of_posmask(*a.layout, m)) += c;
  return out;
}

Complex dense_grassmann_integrate(const DenseGrassmann& a,
                                  const std::vector<Generator>& insertions) {
  const Layout& lay = *a.layout;
  const long S = lay.sites();
  const long ngen = 2 * S;
  for (const auto& g : insertions)
    require(g.site >= 0 && g.site < S,
            "dense_grassmann_integrate: insertion outside layout");

  MaskCoeffs X = to_masks(a);
  if (!insertions.empty()) {
    std::vector<Generator> sorted = insertions;
    const double presign = sort_canonical(lay, sorted);
    long mono = 0;
    for (const auto& g : sorted) mono |= 1L << canonical_pos(lay, g);
    X = mask_multiply({{mono, presign}}, X, ngen);
  }
  for (long s = 0; s < S; ++s) {
    const long pa = canonical_pos(lay, {s, GenKind::plain});
    const long pab = canonical_pos(lay, {s, GenKind::conjugate});
    // measure factor exp(-abar a) = 1 + a abar in canonical form
    MaskCoeffs measure{{0L, 1.0}, {(1L << pa) | (1L << pab), 1.0}};
    X = mask_multiply(measure, X, ngen);
    X = left_derivative(X, pa);
    X = left_derivative(X, pab);
  }
  Complex out = 0.0;
  for (const auto& [m, c] : X) {
    require(m == 0, "dense_grassmann_integrate: leftover generators");
    out += c;
  }
  return out;
}

DenseGrassmann dense_reweight_ket(const DenseGrassmann& a, const Vector& w_flat) {
  const long S = a.layout->sites();
  require(w_flat.size() == (1L << S), "dense_reweight_ket: weight table size");
  DenseGrassmann out(a.layout);
  for (long c = 0; c < a.coeff.size(); ++c) {
    if (a.coeff(c) == 0.0) continue;
    // ket bits in site-0-slowest (row-major) order to match mps_to_dense
    long ket = 0;
    for (long s = 0; s < S; ++s) ket = 2 * ket + ((c >> (2 * s)) & 1);
    out.coeff(c) = a.coeff(c) * w_flat(ket);
  }
  return out;
}

DenseGrassmann dense_from_gmps(const GMPS& g) {
  DenseGrassmann out(g.layout);
  auto dense = tensor::mps_to_dense(g.mps, out.coeff.size());
  const long S = g.sites();
  for (long f = 0; f < dense.size(); ++f) {
    // dense flat index is site-0-slowest; component index is site-0-fastest
    long c = 0, rem = f;
    for (long s = S - 1; s >= 0; --s) {
      c |= (rem % 4) << (2 * s);
      rem /= 4;
    }
    out.coeff(c) = dense.data(f);
  }
  return out;
}

GMPS gmps_from_dense_grassmann(const DenseGrassmann& d, Parity parity) {
  const long S = d.layout->sites();
  Vector flat(d.coeff.size());
  for (long f = 0; f < flat.size(); ++f) {
    long c = 0, rem = f;
    for (long s = S - 1; s >= 0; --s) {
      c |= (rem % 4) << (2 * s);
      rem /= 4;
    }
    flat(f) = d.coeff(c);
  }
  tensor::DenseTensor t(std::vector<long>(S, 4), std::move(flat));
  return GMPS{tensor::mps_from_dense(t), d.layout, parity, std::nullopt};
}

}  // namespace polaron::grassmann
