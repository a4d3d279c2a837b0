#include "polaron/reference.hpp"

#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/KroneckerProduct>

#include <cmath>

namespace polaron::reference {

using obs::CorrelatorKind;
using obs::CorrelatorResult;

namespace {

// Dressing exponent with all exponentials kept decaying:
// (1+nbar)(1-e^{-tau w}) + nbar(1-e^{tau w})
//   = [expm1(-tau w) + e^{(tau-beta) w} - e^{-beta w}] / expm1(-beta w)
double dressing_term_imag(double tau, double beta, double w) {
  return (std::expm1(-tau * w) + std::exp((tau - beta) * w) -
          std::exp(-beta * w)) /
         std::expm1(-beta * w);
}

Complex dressing_term_real(double t, double beta, double w) {
  const double nbar = 1.0 / std::expm1(beta * w);
  const Complex one_m_em = -(std::exp(-kImag * w * t) - 1.0);
  const Complex one_m_ep = -(std::exp(kImag * w * t) - 1.0);
  return (1.0 + nbar) * one_m_em + nbar * one_m_ep;
}

}  // namespace

std::vector<Complex> ib_matsubara(const IBParams& p,
                                  const std::vector<double>& taus) {
  require(p.flavors == 1 || p.flavors == 2, "ib_matsubara: one or two flavors");
  const double et = p.eps_tilde();
  const double ut = p.u_tilde();
  const double beta = p.beta;
  std::vector<Complex> out;
  out.reserve(taus.size());
  for (double tau : taus) {
    require(tau >= 0 && tau <= beta, "ib_matsubara: tau outside [0, beta]");
    double expo = 0;
    for (const auto& n : p.j_spectrum.nodes)
      expo += n.w / (n.x * n.x) * dressing_term_imag(tau, beta, n.x);
    const double f = std::exp(-expo);
    double g0;
    if (p.flavors == 1) {
      g0 = -(1.0 - contour::fermi(beta, et)) * std::exp(-tau * et);
    } else {
      const double z = 1.0 + 2.0 * std::exp(-beta * et) +
                       std::exp(-beta * (2.0 * et + ut));
      g0 = -(std::exp(-tau * et) +
             std::exp(-beta * et) * std::exp(-tau * (et + ut))) /
           z;
    }
    out.push_back(g0 * f);
  }
  return out;
}

IBRealtime ib_realtime(const IBParams& p, const std::vector<double>& ts) {
  require(p.flavors == 1 || p.flavors == 2, "ib_realtime: one or two flavors");
  const double et = p.eps_tilde();
  const double ut = p.u_tilde();
  const double beta = p.beta;
  IBRealtime out;
  for (double t : ts) {
    require(t >= 0, "ib_realtime: t must be nonnegative");
    Complex expo = 0;
    for (const auto& n : p.j_spectrum.nodes)
      expo += n.w / (n.x * n.x) * dressing_term_real(t, beta, n.x);
    const Complex f = std::exp(-expo);
    // the lesser branch evolves the creation operator: the free phase is
    // conjugated while the phonon dressing stays F(t) (checked against
    // exact diagonalization of the single-mode model)
    if (p.flavors == 1) {
      const double fbar = contour::fermi(beta, et);
      out.greater.push_back(-kImag * std::exp(-kImag * et * t) * (1.0 - fbar) *
                            f);
      out.lesser.push_back(kImag * std::exp(kImag * et * t) * fbar * f);
    } else {
      const double z = 1.0 + 2.0 * std::exp(-beta * et) +
                       std::exp(-beta * (2.0 * et + ut));
      out.greater.push_back(
          -kImag *
          (std::exp(-kImag * et * t) +
           std::exp(-beta * et) * std::exp(-kImag * (et + ut) * t)) *
          f / z);
      out.lesser.push_back(
          kImag *
          (std::exp(-beta * et) * std::exp(kImag * et * t) +
           std::exp(-beta * (2.0 * et + ut)) *
               std::exp(kImag * (et + ut) * t)) *
          f / z);
    }
  }
  return out;
}

namespace {

// Full Hilbert space: fermion bit basis (impurity flavors first, then one
// bath mode per coupled flavor), tensored with a truncated boson mode.
struct EDSpace {
  long nferm = 0;       // number of fermionic modes
  long fdim = 1;        // 2^nferm
  long bdim = 1;        // n_max + 1 (1 when no phonon)
  long dim = 1;
  std::vector<long> bath_mode_of_flavor;  // -1 when uncoupled

  Matrix fermion_annihilator(long mode) const {
    Matrix a = Matrix::Zero(fdim, fdim);
    for (long bits = 0; bits < fdim; ++bits) {
      if (!((bits >> mode) & 1)) continue;
      long sign = 1;
      for (long q = 0; q < mode; ++q)
        if ((bits >> q) & 1) sign = -sign;
      a(bits ^ (1L << mode), bits) = sign;
    }
    return a;
  }

  Matrix lift_fermion(const Matrix& f) const {
    return Eigen::kroneckerProduct(f, Matrix::Identity(bdim, bdim));
  }
  Matrix lift_boson(const Matrix& b) const {
    return Eigen::kroneckerProduct(Matrix::Identity(fdim, fdim), b);
  }
};

EDSpace make_space(const EDModel& m) {
  EDSpace s;
  s.nferm = m.flavors;
  s.bath_mode_of_flavor.assign(m.flavors, -1);
  if (m.has_electron)
    for (long p = 0; p < m.flavors; ++p)
      if (m.el_coupled[p]) s.bath_mode_of_flavor[p] = s.nferm++;
  s.fdim = 1L << s.nferm;
  s.bdim = m.has_phonon ? m.n_max + 1 : 1;
  s.dim = s.fdim * s.bdim;
  if (s.dim > 10000)
    throw ResourceLimitError("ed_solve: Hilbert dimension cap exceeded");
  return s;
}

struct EDOperators {
  EDSpace space;
  Matrix h;       // full Hamiltonian
  Matrix h_bath;  // free bath part only
  std::vector<Matrix> a;  // impurity annihilators, lifted
  std::vector<Matrix> n;  // impurity densities, lifted
};

EDOperators build_operators(const EDModel& m) {
  EDOperators ops;
  ops.space = make_space(m);
  const EDSpace& s = ops.space;
  ops.h = Matrix::Zero(s.dim, s.dim);
  ops.h_bath = Matrix::Zero(s.dim, s.dim);

  for (long p = 0; p < m.flavors; ++p) {
    Matrix af = s.fermion_annihilator(p);
    ops.a.push_back(s.lift_fermion(af));
    ops.n.push_back(s.lift_fermion(af.adjoint() * af));
  }
  for (long p = 0; p < m.flavors; ++p) ops.h += m.eps_a * ops.n[p];
  if (m.flavors == 2) {
    ops.h += m.u * ops.n[0] * ops.n[1];
    ops.h += m.j_tunnel * (ops.a[0].adjoint() * ops.a[1] +
                           ops.a[1].adjoint() * ops.a[0]);
  }
  if (m.has_electron) {
    for (long p = 0; p < m.flavors; ++p) {
      const long mode = s.bath_mode_of_flavor[p];
      if (mode < 0) continue;
      Matrix c = s.lift_fermion(s.fermion_annihilator(mode));
      ops.h_bath += m.eps0 * (c.adjoint() * c);
      ops.h += m.lambda * (ops.a[p].adjoint() * c + c.adjoint() * ops.a[p]);
    }
  }
  if (m.has_phonon) {
    Matrix b = Matrix::Zero(s.bdim, s.bdim);
    for (long nn = 1; nn < s.bdim; ++nn) b(nn - 1, nn) = std::sqrt(double(nn));
    Matrix bl = s.lift_boson(b);
    ops.h_bath += m.omega0 * (bl.adjoint() * bl);
    Matrix x = bl + bl.adjoint();
    Matrix ntot = Matrix::Zero(s.dim, s.dim);
    for (long p = 0; p < m.flavors; ++p) ntot += ops.n[p];
    ops.h += m.g * ntot * x;
  }
  ops.h += ops.h_bath;
  return ops;
}

// thermal weights shifted by the ground-state energy
RealVector boltzmann(const RealVector& e, double beta) {
  RealVector w(e.size());
  const double e0 = e.minCoeff();
  for (long i = 0; i < e.size(); ++i) w(i) = std::exp(-beta * (e(i) - e0));
  return w;
}

Matrix keldysh_density(const EDModel& m, const EDOperators& ops, double beta) {
  const EDSpace& s = ops.space;
  require(m.rho_imp.has_value(), "ed_solve: Keldysh needs rho_imp");
  // rho_imp on impurity bits times the free thermal bath, which is diagonal
  // in the bath-bit/boson basis; all factors are parity even, so the
  // bit-basis product carries no string corrections
  const long imp_dim = 1L << m.flavors;
  auto bath_weight = [&](long i) {
    const long fb = i / s.bdim;
    const long bath_bits = fb >> m.flavors;
    double en = 0;
    if (m.has_electron)
      for (long q = 0; q < s.nferm - m.flavors; ++q)
        if ((bath_bits >> q) & 1) en += m.eps0;
    if (m.has_phonon) en += m.omega0 * (i % s.bdim);
    return std::exp(-beta * en);
  };
  Matrix rho = Matrix::Zero(s.dim, s.dim);
  for (long i = 0; i < s.dim; ++i) {
    const long bi = (i / s.bdim) & (imp_dim - 1);
    const long env_i = i - bi * s.bdim;  // bath bits and boson index
    for (long bj = 0; bj < imp_dim; ++bj) {
      const long j = env_i + bj * s.bdim;
      rho(i, j) = (*m.rho_imp)(bi, bj) * bath_weight(i);
    }
  }
  return rho;
}

}  // namespace

long EDModel::hilbert_dim() const { return make_space(*this).dim; }

obs::CorrelatorResult ed_solve(const EDModel& model, double beta,
                               CorrelatorKind kind,
                               const std::vector<double>& times, long flavor_a,
                               long flavor_b) {
  require(beta > 0, "ed_solve: beta must be positive");
  EDOperators ops = build_operators(model);
  Eigen::SelfAdjointEigenSolver<Matrix> es(ops.h);
  const RealVector& e = es.eigenvalues();
  const Matrix& v = es.eigenvectors();

  CorrelatorResult out;
  out.kind = kind;
  out.times = times;
  out.values.reserve(times.size());

  auto to_eig = [&](const Matrix& o) { return Matrix(v.adjoint() * o * v); };

  const bool greater_like = kind == CorrelatorKind::neq_greater ||
                            kind == CorrelatorKind::eq_greater;
  const bool lesser_like = kind == CorrelatorKind::neq_lesser ||
                           kind == CorrelatorKind::eq_lesser;
  const bool density_like = kind == CorrelatorKind::x_imag ||
                            kind == CorrelatorKind::x_neq ||
                            kind == CorrelatorKind::x_eq;

  if (kind == CorrelatorKind::matsubara_g || kind == CorrelatorKind::x_imag) {
    // imaginary time: spectral sums with ground-state-shifted weights
    const double e0 = e.minCoeff();
    Matrix am = density_like ? to_eig(ops.n[flavor_a]) : to_eig(ops.a[flavor_a]);
    Matrix bm = density_like
                    ? to_eig(ops.n[flavor_b])
                    : to_eig(Matrix(ops.a[flavor_b].adjoint().eval()));
    double z = 0;
    for (long i = 0; i < e.size(); ++i) z += std::exp(-beta * (e(i) - e0));
    for (double tau : times) {
      require(tau >= 0 && tau <= beta, "ed_solve: tau outside [0, beta]");
      Complex acc = 0;
      for (long mm = 0; mm < e.size(); ++mm)
        for (long nn = 0; nn < e.size(); ++nn) {
          const double w =
              std::exp(-(beta - tau) * (e(mm) - e0) - tau * (e(nn) - e0));
          if (w == 0.0) continue;
          acc += w * am(mm, nn) * bm(nn, mm);
        }
      out.values.push_back((density_like ? 1.0 : -1.0) * acc / z);
    }
    return out;
  }

  // real-time kinds: rho is the full thermal state (equilibrium) or the
  // separable impurity (x) bath state (non-equilibrium)
  Matrix rho;
  if (kind == CorrelatorKind::eq_greater || kind == CorrelatorKind::eq_lesser ||
      kind == CorrelatorKind::x_eq) {
    RealVector w = boltzmann(e, beta);
    rho = v * (w / w.sum()).asDiagonal() * v.adjoint();
  } else {
    EDModel m2 = model;
    if (!m2.rho_imp) {
      // default: local thermal state of the impurity
      Matrix hi = Matrix::Zero(1L << model.flavors, 1L << model.flavors);
      for (long i = 0; i < hi.rows(); ++i) {
        double en = 0;
        for (long p = 0; p < model.flavors; ++p)
          if ((i >> p) & 1) en += model.eps_a;
        if (model.flavors == 2 && (i & 3) == 3) en += model.u;
        hi(i, i) = en;
      }
      // j_tunnel enters through the off-diagonal part
      if (model.flavors == 2) {
        hi(1, 2) = model.j_tunnel;
        hi(2, 1) = model.j_tunnel;
      }
      Eigen::SelfAdjointEigenSolver<Matrix> ei(hi);
      RealVector wi = boltzmann(ei.eigenvalues(), beta);
      Matrix r = ei.eigenvectors() * wi.asDiagonal() *
                 ei.eigenvectors().adjoint();
      m2.rho_imp = r / r.trace();
    }
    rho = keldysh_density(m2, ops, beta);
    rho /= rho.trace();
  }

  Matrix moving, fixed;
  if (greater_like) {
    moving = ops.a[flavor_a];
    fixed = ops.a[flavor_b].adjoint();
  } else if (lesser_like) {
    moving = ops.a[flavor_b].adjoint();
    fixed = ops.a[flavor_a];
  } else {
    moving = ops.n[flavor_a];
    fixed = ops.n[flavor_b];
  }
  const Complex pref = greater_like ? -kImag : (lesser_like ? kImag : 1.0);

  Matrix mt = to_eig(moving);
  Matrix fr = to_eig(Matrix((fixed * rho).eval()));
  // <O_mov(t) O_fix(0)> = sum_{mn} e^{i(E_m - E_n) t} mt_{mn} (fr)_{nm}
  Matrix w(e.size(), e.size());
  for (long mm = 0; mm < e.size(); ++mm)
    for (long nn = 0; nn < e.size(); ++nn)
      w(mm, nn) = mt(mm, nn) * fr(nn, mm);
  for (double t : times) {
    require(t >= 0, "ed_solve: t must be nonnegative");
    Complex acc = 0;
    for (long mm = 0; mm < e.size(); ++mm)
      for (long nn = 0; nn < e.size(); ++nn)
        acc += w(mm, nn) * std::exp(kImag * (e(mm) - e(nn)) * t);
    out.values.push_back(pref * acc);
  }
  return out;
}

std::vector<double> ed_evolved_trace(const EDModel& model, double beta,
                                     const std::vector<double>& ts) {
  EDOperators ops = build_operators(model);
  Eigen::SelfAdjointEigenSolver<Matrix> es(ops.h);
  const Matrix& v = es.eigenvectors();
  EDModel m2 = model;
  if (!m2.rho_imp) {
    Matrix id = Matrix::Identity(1L << model.flavors, 1L << model.flavors);
    m2.rho_imp = id / id.trace();
  }
  Matrix rho = keldysh_density(m2, ops, beta);
  rho /= rho.trace();
  std::vector<double> out;
  for (double t : ts) {
    Vector phase(es.eigenvalues().size());
    for (long i = 0; i < phase.size(); ++i)
      phase(i) = std::exp(-kImag * es.eigenvalues()(i) * t);
    Matrix u = v * phase.asDiagonal() * v.adjoint();
    out.push_back(std::real((u * rho * u.adjoint()).trace()));
  }
  return out;
}

}  // namespace polaron::reference
