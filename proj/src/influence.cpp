#include "polaron/influence.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <cstdlib>
#include <iostream>
#include <thread>

namespace polaron::influence {

using contour::ContourGrid;
using contour::KernelMatrix;
using grassmann::GMPS;
using grassmann::Layout;
using tensor::MPS;
using tensor::SiteTensor;

void ImpurityModel::validate() const {
  require(flavors == 1 || flavors == 2, "ImpurityModel: one or two flavors");
  const long dim = 1L << flavors;
  require(h_imp.rows() == dim && h_imp.cols() == dim,
          "ImpurityModel: Hamiltonian must act on the impurity Fock space");
  require((h_imp - h_imp.adjoint()).cwiseAbs().maxCoeff() <
              1e-12 * std::max(1.0, h_imp.cwiseAbs().maxCoeff()),
          "ImpurityModel: Hamiltonian must be Hermitian");
  if (rho_imp) {
    require(rho_imp->rows() == dim && rho_imp->cols() == dim,
            "ImpurityModel: rho_imp dimension mismatch");
    require((*rho_imp - rho_imp->adjoint()).cwiseAbs().maxCoeff() <
                1e-12 * std::max(1.0, rho_imp->cwiseAbs().maxCoeff()),
            "ImpurityModel: rho_imp must be Hermitian");
    Eigen::SelfAdjointEigenSolver<Matrix> es(*rho_imp);
    require(es.eigenvalues().minCoeff() > -1e-12 &&
                rho_imp->trace().real() > 0,
            "ImpurityModel: rho_imp must be positive with positive trace");
  }
}

ImpurityModel single_flavor_model(double eps_a) {
  ImpurityModel m;
  m.flavors = 1;
  m.h_imp = Matrix::Zero(2, 2);
  m.h_imp(1, 1) = eps_a;
  return m;
}

ImpurityModel two_flavor_model(double eps_a, double u, double j_tunnel) {
  ImpurityModel m;
  m.flavors = 2;
  m.h_imp = Matrix::Zero(4, 4);
  m.h_imp(1, 1) = eps_a;
  m.h_imp(2, 2) = eps_a;
  m.h_imp(3, 3) = 2 * eps_a + u;
  m.h_imp(1, 2) = j_tunnel;
  m.h_imp(2, 1) = j_tunnel;
  return m;
}

Matrix impurity_annihilator(long flavors, long p) {
  require(p >= 0 && p < flavors, "impurity_annihilator: flavor out of range");
  const long dim = 1L << flavors;
  Matrix a = Matrix::Zero(dim, dim);
  for (long i = 0; i < dim; ++i) {
    if (!((i >> p) & 1)) continue;
    // Jordan-Wigner string over lower flavors
    long sign = 1;
    for (long q = 0; q < p; ++q)
      if ((i >> q) & 1) sign = -sign;
    a(i ^ (1L << p), i) = sign;
  }
  return a;
}

tensor::MPS build_phonon_if(const KernelMatrix& lambda, long flavors, long chi,
                            double cutoff, GateAudit* audit) {
  const auto& grid = *lambda.grid;
  const long m = grid.size();
  const long sites = m * flavors;
  require(lambda.values.rows() == m, "build_phonon_if: kernel size mismatch");

  GateAudit local;
  MPS phi = tensor::mps_vacuum(sites, std::vector<long>(sites, 2));
  for (long j = 0; j < sites; ++j) {
    MPS part = tensor::mps_vacuum(sites, std::vector<long>(sites, 2));
    for (long k = 0; k < sites; ++k) {
      const Complex lam = lambda.values(j / flavors, k / flavors);
      if (j == k) {
        Vector w(2);
        w << 1.0, std::exp(-lam);
        tensor::apply_diagonal_gate(part, {j}, w);
        ++local.one_body;
      } else {
        Vector w = Vector::Ones(4);
        w(3) = std::exp(-lam);
        tensor::apply_diagonal_gate(part, {std::min(j, k), std::max(j, k)}, w);
        ++local.two_body;
      }
    }
    tensor::compress(part, chi, cutoff);
    phi = tensor::elementwise_product_exact(phi, part);
    tensor::compress(phi, chi, cutoff);
  }
  if (audit) *audit = local;
  return phi;
}

GMPS build_electron_if(const KernelMatrix& delta,
                       std::shared_ptr<const Layout> lay, long flavor,
                       long chi, double cutoff) {
  require(delta.kind == contour::KernelKind::hybridization,
          "build_electron_if: needs a hybridization kernel");
  const long m = lay->slices;
  require(delta.values.rows() == m, "build_electron_if: kernel size mismatch");
  GMPS acc = grassmann::gmps_constant(lay);
  for (long j = 0; j < m; ++j) {
    Vector coeffs = Vector::Zero(lay->sites());
    for (long k = 0; k < m; ++k)
      coeffs(lay->site(k, flavor)) = delta.values(j, k);
    GMPS part = grassmann::gmps_row_bilinear(lay, lay->site(j, flavor), coeffs);
    acc = grassmann::grassmann_multiply(acc, part, chi, cutoff);
  }
  return acc;
}

namespace {

Matrix propagator(const Matrix& h, Complex link_weight) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(h);
  const long d = h.rows();
  Matrix u = Matrix::Zero(d, d);
  for (long i = 0; i < d; ++i)
    u(i, i) = std::exp(-link_weight * es.eigenvalues()(i));
  return es.eigenvectors() * u * es.eigenvectors().adjoint();
}

}  // namespace

GMPS build_bare_kernel(const ImpurityModel& model, const ContourGrid& grid,
                       long n_fine, long chi, double cutoff) {
  model.validate();
  require(n_fine >= 1, "build_bare_kernel: n_fine must be >= 1");
  const long f = model.flavors;
  const long dim = 1L << f;
  const long m = grid.size();

  // link weight of cell k is i * dz: dtau on the imaginary branch and
  // +/- i dt on the real branches
  std::vector<Matrix> links(m);
  for (long k = 0; k < m; ++k) {
    const Complex w = kImag * grid.points[k].measure;
    Matrix u = propagator(model.h_imp, w / static_cast<double>(n_fine));
    Matrix acc = Matrix::Identity(dim, dim);
    for (long r = 0; r < n_fine; ++r) acc = acc * u;
    links[k] = std::move(acc);
  }
  if (grid.kind == contour::ContourKind::keldysh) {
    require(model.rho_imp.has_value(),
            "build_bare_kernel: Keldysh grids need an initial impurity state");
    links[m - 1] = *model.rho_imp * links[m - 1];
  }

  // Components factor into per-link weights; the chain is assembled slice
  // by slice with the bond carrying (previous ket, slice-0 bra) and each
  // slice slab split into per-flavor sites.
  auto lay = std::make_shared<Layout>(Layout{m, f});
  std::vector<SiteTensor> sites(lay->sites());
  const long bdim = dim * dim;  // (n_prev, nbar_0)
  for (long k = 0; k < m; ++k) {
    const long in_dim = (k == 0) ? 1 : bdim;
    const long out_dim = (k == m - 1) ? 1 : bdim;
    // slab over [in, joint phys (4^f), out]
    std::vector<Matrix> slab(1L << (2 * f), Matrix::Zero(in_dim, out_dim));
    for (long nbar = 0; nbar < dim; ++nbar)
      for (long n = 0; n < dim; ++n) {
        // joint physical index: site (k,p) carries 2*nbar_p + n_p
        long joint = 0;
        for (long p = f - 1; p >= 0; --p)
          joint = 4 * joint + 2 * ((nbar >> p) & 1) + ((n >> p) & 1);
        if (k == 0) {
          if (m == 1) {
            slab[joint](0, 0) = links[m - 1](nbar, n);
          } else {
            slab[joint](0, n * dim + nbar) = 1.0;
          }
        } else {
          for (long nprev = 0; nprev < dim; ++nprev)
            for (long nbar0 = 0; nbar0 < dim; ++nbar0) {
              const Complex w = links[k - 1](nbar, nprev);
              if (k == m - 1)
                slab[joint](nprev * dim + nbar0, 0) =
                    w * links[m - 1](nbar0, n);
              else
                slab[joint](nprev * dim + nbar0, n * dim + nbar0) = w;
            }
        }
      }
    if (f == 1) {
      SiteTensor t(in_dim, 4, out_dim);
      for (long q = 0; q < 4; ++q) t.block(q) = slab[q];
      sites[k] = std::move(t);
    } else {
      // split the two-flavor slab: rows (in, q0), cols (q1, out)
      Matrix wide(in_dim * 4, 4 * out_dim);
      for (long q0 = 0; q0 < 4; ++q0)
        for (long q1 = 0; q1 < 4; ++q1)
          for (long i = 0; i < in_dim; ++i)
            wide.block(i * 4 + q0, q1 * out_dim, 1, out_dim) =
                slab[q1 * 4 + q0].row(i);
      auto svd = linalg::svd_truncate(wide, {1L << 30, 1e-14});
      const long r = svd.sigma.size();
      SiteTensor t0(in_dim, 4, r), t1(r, 4, out_dim);
      for (long q0 = 0; q0 < 4; ++q0)
        for (long i = 0; i < in_dim; ++i)
          t0.block(q0).row(i) = svd.U.row(i * 4 + q0);
      Matrix rest = svd.sigma.asDiagonal() * svd.Vh;
      for (long q1 = 0; q1 < 4; ++q1)
        t1.block(q1) = rest.middleCols(q1 * out_dim, out_dim);
      sites[2 * k] = std::move(t0);
      sites[2 * k + 1] = std::move(t1);
    }
  }
  GMPS kern{MPS(std::move(sites)), lay, grassmann::Parity::even, std::nullopt};
  if (std::getenv("POLARON_DEBUG_NOCOMPRESS") == nullptr)
    tensor::compress(kern.mps, chi, cutoff);
  return kern;
}

GMPS build_KIph(const GMPS& kernel, const tensor::MPS& phonon_if, long chi,
                double cutoff) {
  require(phonon_if.num_sites() == kernel.sites(),
          "build_KIph: slice/flavor layout mismatch");
  GMPS k = kernel;
  tensor::compress(k.mps, chi, cutoff);
  GMPS out = grassmann::reweight_ket_occupations(k, phonon_if, chi, cutoff);
  tensor::compress(out.mps, chi, cutoff);
  return out;
}

GMPS build_phonon_if_grassmann_naive(const KernelMatrix& lambda,
                                     std::shared_ptr<const Layout> lay,
                                     long chi, double cutoff) {
  const long f = lay->flavors;
  const long sites = lay->sites();
  require(lambda.values.rows() == lay->slices,
          "build_phonon_if_grassmann_naive: kernel size mismatch");
  GMPS acc = grassmann::gmps_constant(lay);
  // diagonal terms vanish identically: (abar a)^2 = 0
  for (long s = 0; s + 1 < sites; ++s) {
    Vector coeffs = Vector::Zero(sites);
    for (long t = s + 1; t < sites; ++t)
      coeffs(t) = lambda.values(s / f, t / f) + lambda.values(t / f, s / f);
    acc = grassmann::grassmann_multiply(
        acc, grassmann::gmps_density_row(lay, s, coeffs), chi, cutoff);
  }
  return acc;
}

InfluenceFunctional build_influence(
    const ImpurityModel& model, const ContourGrid& grid,
    const std::optional<contour::BathSpectrum>& electron_bath,
    const std::optional<contour::BathSpectrum>& phonon_bath,
    const SolverOptions& opt) {
  model.validate();
  InfluenceFunctional out;
  out.layout = std::make_shared<Layout>(Layout{grid.size(), model.flavors});
  out.grid = std::make_shared<ContourGrid>(grid);

  ImpurityModel m = model;
  if (grid.kind == contour::ContourKind::keldysh && !m.rho_imp) {
    Matrix rho = propagator(m.h_imp, grid.beta);
    m.rho_imp = rho / rho.trace();
  }

  const bool any_coupled = [&] {
    for (long p = 0; p < model.flavors; ++p)
      if (model.el_coupled[p]) return true;
    return false;
  }();

  auto phonon_job = [&]() {
    if (!phonon_bath) return;
    auto lam = contour::cell_integrals(*phonon_bath, grid,
                                       contour::KernelKind::correlation);
    out.phonon_if =
        build_phonon_if(lam, model.flavors, opt.chi, opt.cutoff, &out.audit);
  };
  auto electron_job = [&]() {
    out.electron_if.clear();
    if (electron_bath && any_coupled) {
      auto del = contour::cell_integrals(*electron_bath, grid,
                                         contour::KernelKind::hybridization);
      for (long p = 0; p < model.flavors; ++p)
        out.electron_if.push_back(
            model.el_coupled[p]
                ? build_electron_if(del, out.layout, p, opt.chi, opt.cutoff)
                : grassmann::gmps_constant(out.layout));
    } else {
      for (long p = 0; p < model.flavors; ++p)
        out.electron_if.push_back(grassmann::gmps_constant(out.layout));
    }
  };

  if (opt.parallel_builds) {
    std::exception_ptr phonon_err;
    std::thread th([&] {
      try {
        phonon_job();
      } catch (...) {
        phonon_err = std::current_exception();
      }
    });
    try {
      electron_job();
    } catch (...) {
      th.join();
      throw;
    }
    th.join();
    if (phonon_err) std::rethrow_exception(phonon_err);
  } else {
    phonon_job();
    electron_job();
  }

  out.kernel = build_bare_kernel(m, grid, opt.n_fine, opt.chi, opt.cutoff);
  if (out.phonon_if) {
    out.kiph = build_KIph(out.kernel, *out.phonon_if, opt.chi, opt.cutoff);
  } else {
    out.kiph = out.kernel;
    tensor::compress(out.kiph.mps, opt.chi, opt.cutoff);
  }

  long max_el = 1;
  for (const auto& e : out.electron_if)
    max_el = std::max(max_el, e.mps.max_bond());
  if (max_el > out.kiph.mps.max_bond())
    std::cerr << "polaron: note: electron IF bond " << max_el
              << " exceeds kernel bond " << out.kiph.mps.max_bond() << "\n";
  return out;
}

}  // namespace polaron::influence
