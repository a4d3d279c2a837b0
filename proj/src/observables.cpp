#include "polaron/observables.hpp"

#include <algorithm>
#include <cmath>

namespace polaron::obs {

using contour::Branch;
using contour::ContourGrid;
using contour::ContourKind;
using grassmann::GenKind;
using grassmann::Generator;
using grassmann::GMPS;
using influence::InfluenceFunctional;
using tensor::SiteTensor;

namespace {

inline long popcount2(long occ) { return (occ & 1) + ((occ >> 1) & 1); }

struct Scaled {
  Complex m = 0;
  double lg = 0;
};

Complex scaled_ratio(const Scaled& num, const Scaled& den) {
  if (num.m == Complex(0)) return 0;
  return num.m / den.m * std::exp(num.lg - den.lg);
}

using Kernel = std::array<Complex, 4>;
using KernelTable = std::vector<Kernel>;

constexpr Kernel kPlainKernel{Complex(1), Complex(0), Complex(0), Complex(1)};
constexpr Kernel kDensityKernel{Complex(0), Complex(0), Complex(0), Complex(1)};

// Environment of the zipup contraction: one slab per parity combination of
// the trailing factors, each (bond of factor 0) x (product of the rest).
struct Env {
  std::vector<Matrix> slab;
};

// Evaluates integrals of factor products A0 * A1 * ... against per-site
// kernels without forming the product; factors equal to the constant 1 are
// dropped up front.  Signs follow the canonical-ordering product rule: a
// local transposition sign per ordered factor pair and a parity string per
// trailing factor, tracked in the slab index.
class Zipper {
 public:
  explicit Zipper(const InfluenceFunctional& f, long chi_zip = 0)
      : lay_(*f.layout) {
    factors_.push_back(&f.kiph);
    std::vector<const GMPS*> el;
    for (const auto& e : f.electron_if)
      if (!is_constant_one(e)) el.push_back(&e);
    if (el.size() <= 1) {
      for (const auto* e : el) factors_.push_back(e);
    } else {
      // several electron factors: zip them into one truncated product so
      // the moving boundary stays two-sided
      long cap = chi_zip > 0 ? chi_zip : f.kiph.mps.max_bond();
      merged_ = grassmann::grassmann_multiply(*el[0], *el[1], cap);
      for (size_t i = 2; i < el.size(); ++i)
        merged_ = grassmann::grassmann_multiply(merged_, *el[i], cap);
      factors_.push_back(&merged_);
    }
    for (const auto* g : factors_) log_scale_ += g->mps.log_scale();
    nslab_ = 1L << (factors_.size() - 1);
  }

  long sites() const { return lay_.sites(); }
  double log_scale() const { return log_scale_; }

  Env boundary() const {
    Env e;
    e.slab.assign(nslab_, Matrix::Zero(1, 1));
    e.slab[0](0, 0) = 1.0;
    return e;
  }

  Env step_left(const Env& e, long s, const Kernel& kern) const {
    const long b0 = fac(0, s).right();
    const long b1 = nf() > 1 ? fac(1, s).right() : 1;
    Env out;
    out.slab.assign(nslab_, Matrix::Zero(b0, b1));
    visit_tuples(kern, [&](long q0, long q1, double local) {
      for (long pi = 0; pi < nslab_; ++pi) {
        const long pir = (pi ^ (popcount2(q1) & 1)) % nslab_;
        double sign = local;
        if ((popcount2(q0) & 1) && pir) sign = -sign;
        out.slab[pir] += (sign * kern[q0 | q1]) *
                         contract_left(e.slab[pi], s, q0, q1);
      }
    });
    return out;
  }

  Env step_right(const Env& e, long s, const Kernel& kern) const {
    const long b0 = fac(0, s).left();
    const long b1 = nf() > 1 ? fac(1, s).left() : 1;
    Env out;
    out.slab.assign(nslab_, Matrix::Zero(b0, b1));
    visit_tuples(kern, [&](long q0, long q1, double local) {
      for (long pil = 0; pil < nslab_; ++pil) {
        const long pir = (pil ^ (popcount2(q1) & 1)) % nslab_;
        double sign = local;
        if ((popcount2(q0) & 1) && pir) sign = -sign;
        out.slab[pil] += (sign * kern[q0 | q1]) *
                         contract_right(e.slab[pir], s, q0, q1);
      }
    });
    return out;
  }

  static Complex dot(const Env& l, const Env& r) {
    Complex acc = 0;
    for (size_t pi = 0; pi < l.slab.size(); ++pi)
      acc += (l.slab[pi].array() * r.slab[pi].array()).sum();
    return acc;
  }

  // full contraction against a kernel table
  Scaled contract(const KernelTable& kt, double presign) const {
    Env e = boundary();
    for (long s = 0; s < sites(); ++s) e = step_left(e, s, kt[s]);
    return {presign * e.slab[0](0, 0), log_scale_};
  }

  // right environments for every cut, built with plain kernels
  std::vector<Env> plain_right_envs() const {
    std::vector<Env> r(sites() + 1);
    r[sites()] = boundary();
    for (long s = sites() - 1; s >= 0; --s)
      r[s] = step_right(r[s + 1], s, kPlainKernel);
    return r;
  }

 private:
  long nf() const { return static_cast<long>(factors_.size()); }
  const SiteTensor& fac(long i, long s) const {
    return factors_[i]->mps.site(s);
  }

  static bool is_constant_one(const GMPS& g) {
    if (g.mps.log_scale() != 0.0) return false;
    for (long s = 0; s < g.mps.num_sites(); ++s) {
      const auto& t = g.mps.site(s);
      if (t.left() != 1 || t.right() != 1) return false;
      if (t.block(0)(0, 0) != Complex(1) || t.block(1)(0, 0) != Complex(0) ||
          t.block(2)(0, 0) != Complex(0) || t.block(3)(0, 0) != Complex(0))
        return false;
    }
    return true;
  }

  template <class F>
  void visit_tuples(const Kernel& kern, F&& fn) const {
    const long n = nf();
    for (long q0 = 0; q0 < 4; ++q0)
      for (long q1 = 0; q1 < (n > 1 ? 4 : 1); ++q1) {
        if (q0 & q1) continue;
        if (kern[q0 | q1] == Complex(0)) continue;
        // transposition sign of merging the two factors' site monomials
        const double local = (((q0 >> 1) & 1) && (q1 & 1)) ? -1.0 : 1.0;
        fn(q0, q1, local);
      }
  }

  Matrix contract_left(const Matrix& in, long s, long q0, long q1) const {
    Matrix x = fac(0, s).block(q0).transpose() * in;
    if (nf() == 1) return x;
    return x * fac(1, s).block(q1);
  }

  Matrix contract_right(const Matrix& in, long s, long q0, long q1) const {
    if (nf() == 1) return fac(0, s).block(q0) * in;
    return fac(0, s).block(q0) * (in * fac(1, s).block(q1).transpose());
  }

  const grassmann::Layout& lay_;
  std::vector<const GMPS*> factors_;
  GMPS merged_;
  double log_scale_ = 0;
  long nslab_ = 1;
};

struct KindTraits {
  bool density = false;
  GenKind moving = GenKind::plain;
  GenKind base = GenKind::conjugate;
  bool moving_carries_flavor_a = true;
  Complex prefactor{1, 0};
  Branch branch = Branch::imaginary;
};

KindTraits kind_traits(CorrelatorKind kind) {
  KindTraits t;
  switch (kind) {
    case CorrelatorKind::matsubara_g:
      t.prefactor = -1.0;
      t.branch = Branch::imaginary;
      break;
    case CorrelatorKind::neq_greater:
    case CorrelatorKind::eq_greater:
      t.prefactor = -kImag;
      t.branch = Branch::forward;
      break;
    case CorrelatorKind::neq_lesser:
    case CorrelatorKind::eq_lesser:
      t.moving = GenKind::conjugate;
      t.base = GenKind::plain;
      t.moving_carries_flavor_a = false;  // the dagger carries flavor q
      t.prefactor = kImag;
      t.branch = Branch::forward;
      break;
    case CorrelatorKind::x_imag:
      t.density = true;
      t.branch = Branch::imaginary;
      break;
    case CorrelatorKind::x_neq:
    case CorrelatorKind::x_eq:
      t.density = true;
      t.branch = Branch::forward;
      break;
  }
  return t;
}

void check_contour(CorrelatorKind kind, ContourKind ck) {
  const bool ok = [&] {
    switch (kind) {
      case CorrelatorKind::matsubara_g:
      case CorrelatorKind::x_imag:
        return ck == ContourKind::imaginary || ck == ContourKind::kadanoff;
      case CorrelatorKind::neq_greater:
      case CorrelatorKind::neq_lesser:
      case CorrelatorKind::x_neq:
        return ck == ContourKind::keldysh;
      case CorrelatorKind::eq_greater:
      case CorrelatorKind::eq_lesser:
      case CorrelatorKind::x_eq:
        return ck == ContourKind::kadanoff;
    }
    return false;
  }();
  require(ok, "correlator kind is not defined on this contour");
}

std::vector<long> default_slices(const ContourGrid& grid, Branch branch) {
  std::vector<long> out;
  for (long j = 0; j < grid.size(); ++j)
    if (grid.points[j].branch == branch) out.push_back(j);
  return out;
}

CorrelatorResult evaluate(const InfluenceFunctional& f,
                          const CorrelatorRequest& req, long chi_zip) {
  const ContourGrid& grid = *f.grid;
  const auto& lay = *f.layout;
  check_contour(req.kind, grid.kind);
  const KindTraits traits = kind_traits(req.kind);
  require(req.flavor_a >= 0 && req.flavor_a < lay.flavors &&
              req.flavor_b >= 0 && req.flavor_b < lay.flavors,
          "correlator: flavor out of range");

  const long base_slice =
      traits.branch == Branch::imaginary ? grid.first_imag_index() : 0;
  require(base_slice < grid.size() &&
              grid.points[base_slice].branch == traits.branch,
          "correlator: reference branch absent on this grid");

  std::vector<long> slices = req.slices;
  if (slices.empty()) slices = default_slices(grid, traits.branch);
  std::sort(slices.begin(), slices.end());
  for (long j : slices) {
    require(j >= 0 && j < grid.size(), "correlator: slice off the grid");
    require(grid.points[j].branch == traits.branch,
            "correlator: slice off the allowed branch");
  }

  const long moving_flavor =
      traits.moving_carries_flavor_a ? req.flavor_a : req.flavor_b;
  const long base_flavor =
      traits.moving_carries_flavor_a ? req.flavor_b : req.flavor_a;
  const long base_site = lay.site(base_slice, base_flavor);

  Zipper zip(f, chi_zip);
  const auto rights = zip.plain_right_envs();
  const Scaled z{Zipper::dot(zip.boundary(), rights[0]), zip.log_scale()};
  require(z.m != Complex(0), "correlator: vanishing partition function");

  CorrelatorResult out;
  out.kind = req.kind;
  out.contour = grid.kind;
  out.dtau = grid.dtau;
  out.dt = grid.dt;
  out.chi_zip = chi_zip;

  // left sweep with the base operator folded in; at each requested slice
  // the moving kernel is applied and closed with the plain right half
  KernelTable left_table(lay.sites(), kPlainKernel);
  if (traits.density) {
    left_table[base_site] = kDensityKernel;
  } else {
    left_table =
        grassmann::integration_kernels(lay, {{base_site, traits.base}}).site;
  }

  Env left = zip.boundary();
  long cursor = 0;
  for (long j : slices) {
    const long moving_site = lay.site(j, moving_flavor);
    Scaled num{0, zip.log_scale()};
    if (moving_site < base_site) {
      // moving operator precedes the fixed one on the chain (cross-flavor
      // equal-slice case): fall back to a dedicated sweep
      if (traits.density) {
        KernelTable kt(lay.sites(), kPlainKernel);
        kt[base_site] = kDensityKernel;
        kt[moving_site] = kDensityKernel;
        num = zip.contract(kt, 1.0);
      } else {
        auto kern = grassmann::integration_kernels(
            lay, {{moving_site, traits.moving}, {base_site, traits.base}});
        num = zip.contract(kern.site, kern.presign);
      }
    } else {
      while (cursor < moving_site) {
        left = zip.step_left(left, cursor, left_table[cursor]);
        ++cursor;
      }
      if (traits.density) {
        Env stepped = zip.step_left(left, moving_site, kDensityKernel);
        num.m = Zipper::dot(stepped, rights[moving_site + 1]);
      } else {
        std::vector<Generator> ins{{moving_site, traits.moving},
                                   {base_site, traits.base}};
        auto kern = grassmann::integration_kernels(lay, ins);
        Env stepped = zip.step_left(left, moving_site, kern.site[moving_site]);
        num.m = kern.presign * Zipper::dot(stepped, rights[moving_site + 1]);
      }
    }
    const double time = traits.branch == Branch::imaginary
                            ? (j - base_slice) * grid.dtau
                            : std::real(grid.points[j].z);
    out.times.push_back(time);
    out.values.push_back(traits.prefactor * scaled_ratio(num, z));
  }
  return out;
}

}  // namespace

Complex partition_function(const InfluenceFunctional& f, long chi_zip) {
  Zipper zip(f, chi_zip);
  KernelTable kt(zip.sites(), kPlainKernel);
  const Scaled s = zip.contract(kt, 1.0);
  return s.m * std::exp(s.lg);
}

Complex zipup_expectation(const InfluenceFunctional& f,
                          const std::vector<Generator>& insertions,
                          long chi_zip) {
  Zipper zip(f, chi_zip);
  auto kern = grassmann::integration_kernels(*f.layout, insertions);
  const Scaled s = zip.contract(kern.site, kern.presign);
  return s.m * std::exp(s.lg);
}

CorrelatorResult green(const InfluenceFunctional& f,
                       const CorrelatorRequest& req, long chi_zip) {
  require(!kind_traits(req.kind).density,
          "green: use density_density for occupation correlators");
  return evaluate(f, req, chi_zip);
}

CorrelatorResult density_density(const InfluenceFunctional& f,
                                 const CorrelatorRequest& req, long chi_zip) {
  require(kind_traits(req.kind).density,
          "density_density: request a density kind");
  return evaluate(f, req, chi_zip);
}

Complex occupation(const InfluenceFunctional& f, long flavor, long slice) {
  const auto& lay = *f.layout;
  require(slice >= 0 && slice < lay.slices, "occupation: slice off the grid");
  Zipper zip(f);
  KernelTable plain(zip.sites(), kPlainKernel);
  KernelTable dens = plain;
  dens[lay.site(slice, flavor)] = kDensityKernel;
  const Scaled num = zip.contract(dens, 1.0);
  const Scaled den = zip.contract(plain, 1.0);
  return scaled_ratio(num, den);
}

double mse(std::span<const Complex> x, std::span<const Complex> y) {
  require(x.size() == y.size() && !x.empty(), "mse: length mismatch");
  double acc = 0;
  for (size_t i = 0; i < x.size(); ++i) acc += std::norm(x[i] - y[i]);
  return acc / static_cast<double>(x.size());
}

double mse(const std::vector<Complex>& x, const std::vector<Complex>& y) {
  return mse(std::span<const Complex>(x), std::span<const Complex>(y));
}

}  // namespace polaron::obs
