#include "polaron/contour.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace polaron::contour {

namespace {

long checked_steps(double span, double step, const char* what) {
  require(step > 0, std::string(what) + ": step must be positive");
  const double raw = span / step;
  const long n = std::lround(raw);
  require(n >= 1 && std::abs(raw - n) < 1e-9 * std::max(1.0, raw),
          std::string(what) + ": span must be an integer multiple of the step");
  return n;
}

}  // namespace

long ContourGrid::num_real() const {
  long n = 0;
  for (const auto& p : points)
    if (p.branch != Branch::imaginary) ++n;
  return n;
}

long ContourGrid::first_imag_index() const {
  for (long i = 0; i < size(); ++i)
    if (points[i].branch == Branch::imaginary) return i;
  return size();
}

ContourGrid make_imaginary_grid(double beta, double dtau) {
  require(beta > 0, "imaginary grid: beta must be positive");
  const long m = checked_steps(beta, dtau, "imaginary grid");
  ContourGrid g;
  g.kind = ContourKind::imaginary;
  g.beta = beta;
  g.dtau = dtau;
  g.points.reserve(m);
  for (long k = 0; k < m; ++k)
    g.points.push_back({Branch::imaginary, Complex(0, -k * dtau),
                        Complex(0, -dtau)});
  return g;
}

ContourGrid make_keldysh_grid(double beta, double t_max, double dt) {
  require(beta > 0, "keldysh grid: beta must be positive");
  const long n = checked_steps(t_max, dt, "keldysh grid");
  ContourGrid g;
  g.kind = ContourKind::keldysh;
  g.beta = beta;
  g.t_max = t_max;
  g.dt = dt;
  g.points.reserve(2 * n);
  for (long j = 0; j < n; ++j)
    g.points.push_back({Branch::forward, Complex(j * dt, 0), Complex(dt, 0)});
  for (long i = 0; i < n; ++i)
    g.points.push_back(
        {Branch::backward, Complex(t_max - i * dt, 0), Complex(-dt, 0)});
  return g;
}

ContourGrid make_kadanoff_grid(double beta, double t_max, double dt,
                               double dtau) {
  require(beta > 0, "kadanoff grid: beta must be positive");
  const long m = checked_steps(beta, dtau, "kadanoff grid (imaginary)");
  ContourGrid g;
  g.kind = ContourKind::kadanoff;
  g.beta = beta;
  g.t_max = t_max;
  g.dt = dt;
  g.dtau = dtau;
  long n = 0;
  if (t_max > 0) n = checked_steps(t_max, dt, "kadanoff grid (real)");
  g.points.reserve(2 * n + m);
  for (long j = 0; j < n; ++j)
    g.points.push_back({Branch::forward, Complex(j * dt, 0), Complex(dt, 0)});
  for (long i = 0; i < n; ++i)
    g.points.push_back(
        {Branch::backward, Complex(t_max - i * dt, 0), Complex(-dt, 0)});
  for (long k = 0; k < m; ++k)
    g.points.push_back({Branch::imaginary, Complex(0, -k * dtau),
                        Complex(0, -dtau)});
  return g;
}

ContourGrid make_grid(ContourKind kind, double beta, double t_max, double dt,
                      double dtau) {
  switch (kind) {
    case ContourKind::imaginary:
      return make_imaginary_grid(beta, dtau);
    case ContourKind::keldysh:
      return make_keldysh_grid(beta, t_max, dt);
    case ContourKind::kadanoff:
      return make_kadanoff_grid(beta, t_max, dt, dtau);
  }
  throw std::invalid_argument("make_grid: unknown contour kind");
}

double fermi(double beta, double eps) {
  require(beta > 0, "fermi: beta must be positive");
  const double x = beta * eps;
  if (x >= 0) {
    const double e = std::exp(-x);
    return e / (1.0 + e);
  }
  return 1.0 / (std::exp(x) + 1.0);
}

double bose(double beta, double omega) {
  require(beta > 0, "bose: beta must be positive");
  require(omega > 0, "bose: occupation diverges for omega <= 0");
  return 1.0 / std::expm1(beta * omega);
}

namespace {

void check_on_grid(long i, const ContourGrid& grid, const char* what) {
  require(i >= 0 && i < grid.size(), std::string(what) + ": point off grid");
}

}  // namespace

Complex d_el(double eps, long i1, long i2, const ContourGrid& grid) {
  check_on_grid(i1, grid, "d_el");
  check_on_grid(i2, grid, "d_el");
  const double fbar = fermi(grid.beta, eps);
  const Complex dz = grid.points[i1].z - grid.points[i2].z;
  return -((theta_c(i1, i2) ? 1.0 : 0.0) - fbar) * std::exp(-kImag * eps * dz);
}

Complex d_ph(double omega, long i1, long i2, const ContourGrid& grid) {
  check_on_grid(i1, grid, "d_ph");
  check_on_grid(i2, grid, "d_ph");
  const double nbar = bose(grid.beta, omega);
  const Complex dz = grid.points[i1].z - grid.points[i2].z;
  return -((theta_c(i1, i2) ? 1.0 : 0.0) + nbar) * std::exp(-kImag * omega * dz);
}

double BathSpectrum::moment(double power) const {
  double acc = 0;
  for (const auto& n : nodes) acc += n.w * std::pow(n.x, power);
  return acc;
}

BathSpectrum delta_spectrum(Statistics stat, double strength, double position) {
  require(stat == Statistics::fermionic || position > 0,
          "delta_spectrum: bosonic position must be positive");
  BathSpectrum s;
  s.statistics = stat;
  s.form = SpectrumForm::delta;
  s.strength = strength;
  s.position = position;
  s.nodes = {{position, strength * strength}};
  return s;
}

namespace {

// Gauss-Legendre nodes and weights on [-1, 1] by Newton iteration.
void gauss_legendre(long n, std::vector<double>& x, std::vector<double>& w) {
  x.assign(n, 0.0);
  w.assign(n, 0.0);
  const long m = (n + 1) / 2;
  for (long i = 0; i < m; ++i) {
    double z = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double pp = 0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = 0.0;
      for (long j = 0; j < n; ++j) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * j + 1.0) * z * p1 - j * p2) / (j + 1.0);
      }
      pp = n * (z * p0 - p1) / (z * z - 1.0);
      const double dz = p0 / pp;
      z -= dz;
      if (std::abs(dz) < 1e-15) break;
    }
    x[i] = -z;
    x[n - 1 - i] = z;
    w[i] = 2.0 / ((1.0 - z * z) * pp * pp);
    w[n - 1 - i] = w[i];
  }
}

}  // namespace

BathSpectrum ohmic_family_spectrum(double alpha, double omega_c, double d,
                                   long num_nodes) {
  require(omega_c > 0, "ohmic_family_spectrum: omega_c must be positive");
  require(d >= 1, "ohmic_family_spectrum: bath dimension must be >= 1");
  BathSpectrum s;
  s.statistics = Statistics::bosonic;
  s.form = SpectrumForm::ohmic_family;
  s.alpha = alpha;
  s.omega_c = omega_c;
  s.dim = d;
  s.low_freq_exponent = d;
  std::vector<double> x, w;
  gauss_legendre(num_nodes, x, w);
  const double hi = 40.0 * omega_c;  // exp(-40) tail is negligible
  s.nodes.reserve(num_nodes);
  for (long i = 0; i < num_nodes; ++i) {
    const double omega = 0.5 * hi * (x[i] + 1.0);
    const double weight = 0.5 * hi * w[i];
    const double dens = 0.5 * alpha * std::pow(omega, d) /
                        std::pow(omega_c, d - 1.0) * std::exp(-omega / omega_c);
    s.nodes.push_back({omega, weight * dens});
  }
  return s;
}

BathSpectrum semicircular_spectrum(long num_nodes) {
  // density (pi/2) sqrt(1 - eps^2) on [-1, 1]: Chebyshev (second kind)
  // nodes absorb the square-root weight exactly
  BathSpectrum s;
  s.statistics = Statistics::fermionic;
  s.form = SpectrumForm::semicircular;
  s.nodes.reserve(num_nodes);
  for (long j = 1; j <= num_nodes; ++j) {
    const double th = M_PI * j / (num_nodes + 1.0);
    const double x = std::cos(th);
    const double w = M_PI / (num_nodes + 1.0) * std::sin(th) * std::sin(th);
    s.nodes.push_back({x, 0.5 * M_PI * w});
  }
  return s;
}

BathSpectrum tabulated_spectrum(Statistics stat, const std::string& path,
                                long num_nodes) {
  std::ifstream in(path);
  require(in.good(), "tabulated_spectrum: cannot open " + path);
  double lo = 0, hi = 0, low_exp = 1;
  bool have_support = false;
  std::vector<std::pair<double, double>> table;
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string first;
    if (!(ls >> first)) continue;
    if (first[0] == '#') continue;
    if (first == "support") {
      require(static_cast<bool>(ls >> lo >> hi),
              "tabulated_spectrum: bad support line");
      std::string key;
      if (ls >> key) {
        require(key == "low_exponent", "tabulated_spectrum: bad header key");
        require(static_cast<bool>(ls >> low_exp),
                "tabulated_spectrum: bad low_exponent");
      }
      have_support = true;
      continue;
    }
    double dens;
    require(static_cast<bool>(ls >> dens), "tabulated_spectrum: bad table row");
    table.emplace_back(std::stod(first), dens);
  }
  require(have_support, "tabulated_spectrum: missing support header line");
  require(table.size() >= 2, "tabulated_spectrum: need at least two samples");
  std::sort(table.begin(), table.end());
  require(stat == Statistics::fermionic || (lo >= 0 && low_exp >= 1),
          "tabulated_spectrum: bosonic spectra must vanish at least linearly");

  auto interp = [&table](double omega) {
    if (omega <= table.front().first) return table.front().second;
    if (omega >= table.back().first) return table.back().second;
    auto it = std::lower_bound(table.begin(), table.end(),
                               std::make_pair(omega, -1e300));
    const auto [x1, y1] = *it;
    const auto [x0, y0] = *(it - 1);
    return y0 + (y1 - y0) * (omega - x0) / (x1 - x0);
  };

  BathSpectrum s;
  s.statistics = stat;
  s.form = SpectrumForm::tabulated;
  s.low_freq_exponent = low_exp;
  std::vector<double> x, w;
  gauss_legendre(num_nodes, x, w);
  for (long i = 0; i < num_nodes; ++i) {
    const double omega = 0.5 * (hi - lo) * x[i] + 0.5 * (hi + lo);
    s.nodes.push_back({omega, 0.5 * (hi - lo) * w[i] * interp(omega)});
  }
  return s;
}

Complex hybridization(const BathSpectrum& gamma, long i1, long i2,
                      const ContourGrid& grid) {
  require(gamma.statistics == Statistics::fermionic,
          "hybridization: needs a fermionic spectrum");
  Complex acc = 0;
  for (const auto& n : gamma.nodes) acc += n.w * d_el(n.x, i1, i2, grid);
  return acc;
}

Complex correlation(const BathSpectrum& j, long i1, long i2,
                    const ContourGrid& grid) {
  require(j.statistics == Statistics::bosonic,
          "correlation: needs a bosonic spectrum");
  Complex acc = 0;
  for (const auto& n : j.nodes) acc += n.w * d_ph(n.x, i1, i2, grid);
  return acc;
}

namespace {

// E(a, d) = int_0^d e^{a u} du and T(a, d) = int_0^d du' int_0^{u'} du''
// e^{a (u' - u'')}, with series branches controlling cancellation.
Complex cell_e(Complex a, double d) {
  const Complex x = a * d;
  if (std::abs(x) < 0.25) {
    Complex term = 1.0, sum = 1.0;
    for (int k = 1; k < 16; ++k) {
      term *= x / static_cast<double>(k + 1);
      sum += term;
    }
    return d * sum;
  }
  return (std::exp(x) - 1.0) / a;
}

Complex cell_t(Complex a, double d) {
  const Complex x = a * d;
  if (std::abs(x) < 0.25) {
    Complex term = 0.5, sum = 0.5;
    for (int k = 1; k < 16; ++k) {
      term *= x / static_cast<double>(k + 2);
      sum += term;
    }
    return d * d * sum;
  }
  return (std::exp(x) - 1.0 - x) / (a * a);
}

}  // namespace

KernelMatrix cell_integrals(const BathSpectrum& spec, const ContourGrid& grid,
                            KernelKind kind) {
  if (kind == KernelKind::hybridization)
    require(spec.statistics == Statistics::fermionic,
            "cell_integrals: hybridization needs a fermionic spectrum");
  else
    require(spec.statistics == Statistics::bosonic,
            "cell_integrals: correlation needs a bosonic spectrum");
  const long m = grid.size();
  std::vector<Complex> dir(m);
  std::vector<double> len(m);
  for (long j = 0; j < m; ++j) {
    const double l = std::abs(grid.points[j].measure);
    require(l > 0, "cell_integrals: degenerate cell");
    len[j] = l;
    dir[j] = grid.points[j].measure / l;
  }

  KernelMatrix out;
  out.kind = kind;
  out.grid = std::make_shared<const ContourGrid>(grid);
  out.values = Matrix::Zero(m, m);

  // log(1 + e^x) without overflow
  const auto softplus = [](double x) {
    return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
  };
  // The statistics factor and the separation phase are combined into one
  // exponential so that neither overflows for widely separated imaginary
  // cells: c+ e^E = s+ exp(E - l+), c- e^E = s- exp(E - l-), with real
  // parts of (E - l) bounded on every contour.
  const long nn = static_cast<long>(spec.nodes.size());
  std::vector<double> lplus(nn), lminus(nn);
  double splus = 1.0, sminus = 1.0;
  Matrix efwd(nn, m), ebwd(nn, m);
  for (long q = 0; q < nn; ++q) {
    const double x = spec.nodes[q].x;
    if (kind == KernelKind::hybridization) {
      lplus[q] = softplus(-grid.beta * x);   // 1 - fbar = e^{-l+}
      lminus[q] = softplus(grid.beta * x);   // fbar = e^{-l-}
      sminus = -1.0;
    } else {
      const double log1mq = std::log(-std::expm1(-grid.beta * x));
      lplus[q] = log1mq;                     // 1 + nbar = e^{-l+}
      lminus[q] = grid.beta * x + log1mq;    // nbar = e^{-l-}
    }
    for (long j = 0; j < m; ++j) {
      efwd(q, j) = cell_e(-kImag * x * dir[j], len[j]);
      ebwd(q, j) = cell_e(kImag * x * dir[j], len[j]);
    }
  }

#pragma omp parallel for schedule(static)
  for (long j = 0; j < m; ++j) {
    for (long k = 0; k < m; ++k) {
      Complex acc = 0;
      if (j == k) {
        for (long q = 0; q < nn; ++q) {
          const double x = spec.nodes[q].x;
          acc += spec.nodes[q].w * dir[j] * dir[j] *
                 (splus * std::exp(-lplus[q]) *
                      cell_t(-kImag * x * dir[j], len[j]) +
                  sminus * std::exp(-lminus[q]) *
                      cell_t(kImag * x * dir[j], len[j]));
        }
      } else {
        const Complex dz = grid.points[j].z - grid.points[k].z;
        for (long q = 0; q < nn; ++q) {
          const double x = spec.nodes[q].x;
          const Complex e = -kImag * x * dz - ((j > k) ? lplus[q] : lminus[q]);
          const double s = (j > k) ? splus : sminus;
          acc += spec.nodes[q].w * dir[j] * dir[k] * s * std::exp(e) *
                 efwd(q, j) * ebwd(q, k);
        }
      }
      out.values(j, k) = acc;
    }
  }
  require(out.values.allFinite(), "cell_integrals: non-finite entries");
  return out;
}

}  // namespace polaron::contour
