#include "polaron/runner.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <future>
#include <sstream>

namespace polaron::runner {

using contour::ContourGrid;
using contour::ContourKind;
using influence::InfluenceFunctional;
using obs::CorrelatorKind;
using obs::CorrelatorResult;

namespace {

constexpr const char* kVersion = "polaron 0.1.0";

// ---- configuration file parsing (INI-shaped sections of key = value) ----

struct RawConfig {
  // section -> key -> (value, line number)
  std::map<std::string, std::map<std::string, std::pair<std::string, long>>> k;
  std::string path;

  bool has(const std::string& sec, const std::string& key) const {
    auto s = k.find(sec);
    return s != k.end() && s->second.count(key) > 0;
  }
  std::string get(const std::string& sec, const std::string& key,
                  const std::string& fallback) const {
    auto s = k.find(sec);
    if (s == k.end()) return fallback;
    auto e = s->second.find(key);
    return e == s->second.end() ? fallback : e->second.first;
  }
  [[noreturn]] void fail(const std::string& sec, const std::string& key,
                         const std::string& why) const {
    long line = 0;
    if (auto s = k.find(sec); s != k.end())
      if (auto e = s->second.find(key); e != s->second.end())
        line = e->second.second;
    std::ostringstream msg;
    msg << path << ":" << line << ": [" << sec << "] " << key << ": " << why;
    throw ConfigError(msg.str());
  }
  double num(const std::string& sec, const std::string& key,
             double fallback) const {
    if (!has(sec, key)) return fallback;
    try {
      size_t used = 0;
      const std::string v = get(sec, key, "");
      double x = std::stod(v, &used);
      if (used != v.size()) throw std::invalid_argument(v);
      return x;
    } catch (const std::exception&) {
      fail(sec, key, "expected a number");
    }
  }
  bool flag(const std::string& sec, const std::string& key,
            bool fallback) const {
    if (!has(sec, key)) return fallback;
    const std::string v = get(sec, key, "");
    if (v == "on" || v == "true" || v == "1") return true;
    if (v == "off" || v == "false" || v == "0") return false;
    fail(sec, key, "expected on/off");
  }
};

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  const auto e = s.find_last_not_of(" \t\r");
  return b == std::string::npos ? "" : s.substr(b, e - b + 1);
}

RawConfig read_raw(const std::string& path) {
  std::ifstream in(path);
  if (!in.good()) throw ConfigError(path + ":0: cannot open config file");
  RawConfig raw;
  raw.path = path;
  std::string line, section;
  long lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ConfigError(path + ":" + std::to_string(lineno) +
                          ": malformed section header");
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos || section.empty())
      throw ConfigError(path + ":" + std::to_string(lineno) +
                        ": expected key = value inside a section");
    raw.k[section][trim(line.substr(0, eq))] = {trim(line.substr(eq + 1)),
                                                lineno};
  }
  return raw;
}

BathConfig parse_bath(const RawConfig& raw, const std::string& key) {
  BathConfig b;
  const std::string spec = raw.get("baths", key, "none");
  std::istringstream ss(spec);
  ss >> b.form;
  if (b.form == "none" || b.form.empty()) {
    b.form = "none";
  } else if (b.form == "delta") {
    if (!(ss >> b.strength >> b.position))
      raw.fail("baths", key, "delta needs: delta <strength> <position>");
  } else if (b.form == "ohmic") {
    if (!(ss >> b.alpha >> b.omega_c >> b.dim))
      raw.fail("baths", key, "ohmic needs: ohmic <alpha> <omega_c> <d>");
  } else if (b.form == "semicircular") {
    // no parameters
  } else if (b.form == "tabulated") {
    if (!(ss >> b.path)) raw.fail("baths", key, "tabulated needs a file path");
  } else {
    raw.fail("baths", key, "unknown bath form '" + b.form + "'");
  }
  return b;
}

std::optional<contour::BathSpectrum> make_spectrum(const BathConfig& b,
                                                   bool fermionic) {
  using namespace contour;
  const Statistics stat =
      fermionic ? Statistics::fermionic : Statistics::bosonic;
  if (b.form == "none") return std::nullopt;
  if (b.form == "delta") return delta_spectrum(stat, b.strength, b.position);
  if (b.form == "ohmic") {
    require(!fermionic, "ohmic bath form is bosonic");
    return ohmic_family_spectrum(b.alpha, b.omega_c, b.dim);
  }
  if (b.form == "semicircular") {
    require(fermionic, "semicircular bath form is fermionic");
    return semicircular_spectrum();
  }
  return tabulated_spectrum(stat, b.path);
}

std::string bath_echo(const BathConfig& b) {
  std::ostringstream ss;
  ss << b.form;
  if (b.form == "delta") ss << " " << b.strength << " " << b.position;
  if (b.form == "ohmic")
    ss << " " << b.alpha << " " << b.omega_c << " " << b.dim;
  if (b.form == "tabulated") ss << " " << b.path;
  return ss.str();
}

std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

ContourKind contour_kind_of(const std::string& name) {
  if (name == "imaginary") return ContourKind::imaginary;
  if (name == "keldysh") return ContourKind::keldysh;
  if (name == "kadanoff") return ContourKind::kadanoff;
  throw ConfigError("unknown contour kind '" + name + "'");
}

}  // namespace

std::map<std::string, std::string> RunConfig::resolved() const {
  std::map<std::string, std::string> m;
  m["model.flavors"] = std::to_string(flavors);
  m["model.eps_a"] = fmt(eps_a);
  m["model.u"] = fmt(u);
  m["model.j_tunnel"] = fmt(j_tunnel);
  m["model.el_coupled"] = std::string(el_coupled[0] ? "1" : "0") + " " +
                          (flavors > 1 ? (el_coupled[1] ? "1" : "0") : "1");
  m["baths.electron"] = bath_echo(electron);
  m["baths.phonon"] = bath_echo(phonon);
  m["contour.kind"] = contour;
  m["contour.beta"] = fmt(beta);
  m["contour.t_max"] = fmt(t_max);
  m["contour.dtau"] = fmt(dtau);
  m["contour.dt"] = fmt(dt);
  m["solver.chi"] = std::to_string(chi);
  m["solver.chi_zip"] = std::to_string(chi_zip);
  m["solver.cutoff"] = fmt(cutoff);
  m["solver.n_fine"] = std::to_string(n_fine);
  m["oracles.ed"] = ed_on ? "on" : "off";
  m["oracles.n_max"] = std::to_string(n_max);
  m["oracles.analytic"] = analytic_on ? "on" : "off";
  m["output.dir"] = out_dir;
  std::string obs_line;
  for (const auto& o : observables) obs_line += (obs_line.empty() ? "" : " ") + o;
  m["output.observables"] = obs_line;
  m["version"] = kVersion;
  return m;
}

void RunConfig::validate() const {
  const ContourKind kind = contour_kind_of(contour);
  if (flavors != 1 && flavors != 2)
    throw ConfigError("model.flavors must be 1 or 2");
  if (beta <= 0) throw ConfigError("contour.beta must be positive");
  const bool real_branches = kind != ContourKind::imaginary;
  if (kind != ContourKind::keldysh && dtau <= 0)
    throw ConfigError("contour.dtau is required on this contour");
  if (real_branches && dt <= 0)
    throw ConfigError("contour.dt is required when the contour has real "
                      "branches (missing key: contour.dt)");
  if (real_branches && t_max < 0) throw ConfigError("contour.t_max < 0");
  if (kind == ContourKind::keldysh && t_max <= 0)
    throw ConfigError("contour.t_max is required on the keldysh contour");
  if (chi < 1) throw ConfigError("solver.chi must be >= 1");
  if (cutoff < 0) throw ConfigError("solver.cutoff must be >= 0");
  if (n_fine < 1) throw ConfigError("solver.n_fine must be >= 1");
  if (observables.empty())
    throw ConfigError("output.observables must name at least one observable");
  for (const auto& o : observables) {
    const bool imag_obs = o == "G" || o == "X";
    const bool real_obs = o == "greater" || o == "lesser" || o == "X";
    if (kind == ContourKind::imaginary && !imag_obs)
      throw ConfigError("observable '" + o + "' needs real branches");
    if (kind == ContourKind::keldysh && !real_obs)
      throw ConfigError("observable '" + o +
                        "' is not defined on the keldysh contour");
    if (!imag_obs && !real_obs)
      throw ConfigError("unknown observable '" + o + "'");
  }
  if (analytic_on && electron.form != "none")
    throw ConfigError(
        "oracles.analytic covers the independent bosons model only "
        "(baths.electron must be none)");
  if (ed_on && electron.form != "none" && electron.form != "delta")
    throw ConfigError("oracles.ed needs delta or absent baths");
  if (ed_on && phonon.form != "none" && phonon.form != "delta")
    throw ConfigError("oracles.ed needs delta or absent baths");
}

RunConfig parse_run_config(const std::string& path) {
  RawConfig raw = read_raw(path);
  RunConfig cfg;
  cfg.flavors = static_cast<long>(raw.num("model", "flavors", 1));
  cfg.eps_a = raw.num("model", "eps_a", 0);
  cfg.u = raw.num("model", "u", 0);
  cfg.j_tunnel = raw.num("model", "j_tunnel", 0);
  {
    std::istringstream ss(raw.get("model", "el_coupled", "1 1"));
    int a = 1, b = 1;
    ss >> a >> b;
    cfg.el_coupled = {a != 0, b != 0};
  }
  cfg.electron = parse_bath(raw, "electron");
  cfg.phonon = parse_bath(raw, "phonon");
  cfg.contour = raw.get("contour", "kind", "imaginary");
  cfg.beta = raw.num("contour", "beta", 1);
  cfg.t_max = raw.num("contour", "t_max", 0);
  cfg.dtau = raw.num("contour", "dtau", 0);
  cfg.dt = raw.num("contour", "dt", 0);
  cfg.chi = static_cast<long>(raw.num("solver", "chi", 100));
  cfg.chi_zip = static_cast<long>(raw.num("solver", "chi_zip", 0));
  cfg.cutoff = raw.num("solver", "cutoff", 1e-12);
  cfg.n_fine = static_cast<long>(raw.num("solver", "n_fine", 1));
  cfg.ed_on = raw.flag("oracles", "ed", false);
  cfg.n_max = static_cast<long>(raw.num("oracles", "n_max", 50));
  cfg.analytic_on = raw.flag("oracles", "analytic", false);
  cfg.out_dir = raw.get("output", "dir", "out");
  {
    std::istringstream ss(raw.get("output", "observables", "G"));
    std::string o;
    while (ss >> o) cfg.observables.push_back(o);
  }
  cfg.validate();
  return cfg;
}

SweepConfig parse_sweep_config(const std::string& path) {
  RawConfig raw = read_raw(path);
  SweepConfig sw;
  sw.base = parse_run_config(path);
  sw.axis = raw.get("sweep", "axis", "chi");
  if (sw.axis != "chi" && sw.axis != "dtau" && sw.axis != "dt")
    throw ConfigError("sweep.axis must be chi, dtau, or dt");
  {
    std::istringstream ss(raw.get("sweep", "values", ""));
    double v;
    while (ss >> v) sw.values.push_back(v);
  }
  if (sw.values.size() < 2)
    throw ConfigError("sweep.values needs at least two points");
  for (size_t i = 1; i < sw.values.size(); ++i)
    if (sw.values[i] <= sw.values[i - 1])
      throw ConfigError("sweep.values must be strictly increasing");
  sw.baseline = raw.get("sweep", "baseline", "finest-self");
  if (sw.baseline != "analytic" && sw.baseline != "ed" &&
      sw.baseline != "finest-self")
    throw ConfigError("sweep.baseline must be analytic, ed, or finest-self");
  return sw;
}

std::vector<std::string> preset_names() {
  return {"ib-imag",     "ib-kadanoff", "toy-imag",  "toy-keldysh",
          "toy-kadanoff", "full-imag",   "full-keldysh"};
}

RunConfig preset_config(const std::string& name) {
  RunConfig c;
  c.observables = {"G", "X"};
  if (name == "ib-imag") {
    c.flavors = 1;
    c.eps_a = 1.0;
    c.phonon = {"ohmic", 0, 0, 0.2, 5.0, 1.0, ""};
    c.contour = "imaginary";
    c.beta = 10;
    c.dtau = 0.2;
    c.chi = 140;
    c.analytic_on = true;
    c.observables = {"G"};
  } else if (name == "ib-kadanoff") {
    c.flavors = 1;
    c.eps_a = 0.0;
    c.phonon = {"ohmic", 0, 0, 1.0, 5.0, 1.0, ""};
    c.contour = "kadanoff";
    c.beta = 5;
    c.dtau = 0.1;
    c.t_max = 5;
    c.dt = 0.05;
    c.chi = 140;
    c.analytic_on = true;
    c.observables = {"greater", "lesser"};
  } else if (name == "toy-imag") {
    c.flavors = 1;
    c.eps_a = 0.0;
    c.electron = {"delta", 1.0, 1.0, 0, 0, 0, ""};
    c.phonon = {"delta", 1.0 / std::sqrt(2.0), 1.0, 0, 0, 0, ""};
    c.contour = "imaginary";
    c.beta = 5;
    c.dtau = 0.025;
    c.chi = 100;
    c.ed_on = true;
  } else if (name == "toy-keldysh") {
    c.flavors = 1;
    c.eps_a = 0.0;
    c.electron = {"delta", 1.0, 1.0, 0, 0, 0, ""};
    c.phonon = {"delta", 1.0 / std::sqrt(2.0), 1.0, 0, 0, 0, ""};
    c.contour = "keldysh";
    c.beta = 5;
    c.t_max = 5;
    c.dt = 0.0125;
    c.chi = 300;
    c.ed_on = true;
    c.observables = {"greater", "lesser", "X"};
  } else if (name == "toy-kadanoff") {
    c.flavors = 1;
    c.eps_a = 0.0;
    c.electron = {"delta", 1.0, 1.0, 0, 0, 0, ""};
    c.phonon = {"delta", 1.0 / std::sqrt(2.0), 1.0, 0, 0, 0, ""};
    c.contour = "kadanoff";
    c.beta = 5;
    c.dtau = 0.05;
    c.t_max = 5;
    c.dt = 0.05;
    c.chi = 300;
    c.ed_on = true;
    c.observables = {"greater", "lesser", "X"};
  } else if (name == "full-imag") {
    c.flavors = 1;
    c.eps_a = 0.0;
    c.electron = {"semicircular", 0, 0, 0, 0, 0, ""};
    c.phonon = {"ohmic", 0, 0, 1.0, 5.0, 1.0, ""};
    c.contour = "imaginary";
    c.beta = 1;
    c.dtau = 0.025;
    c.chi = 100;
  } else if (name == "full-keldysh") {
    c.flavors = 1;
    c.eps_a = 0.0;
    c.electron = {"semicircular", 0, 0, 0, 0, 0, ""};
    c.phonon = {"ohmic", 0, 0, 1.0, 5.0, 1.0, ""};
    c.contour = "keldysh";
    c.beta = 10;
    c.t_max = 5;
    c.dt = 0.0125;
    c.chi = 200;
    c.observables = {"greater", "lesser", "X"};
  } else {
    throw ConfigError("unknown preset '" + name + "'");
  }
  c.validate();
  return c;
}

namespace {

void write_csv(const std::filesystem::path& file, const Series& s,
               const std::map<std::string, std::string>& header) {
  std::ofstream out(file);
  require(out.good(), "cannot write " + file.string());
  for (const auto& [k, v] : header) out << "# " << k << "=" << v << "\n";
  out << "index,time,re,im\n";
  for (size_t i = 0; i < s.values.size(); ++i) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.17g\n", i, s.times[i],
                  std::real(s.values[i]), std::imag(s.values[i]));
    out << buf;
  }
}

CorrelatorKind kind_for(const std::string& name, ContourKind ck) {
  if (name == "G") return CorrelatorKind::matsubara_g;
  if (name == "X")
    return ck == ContourKind::imaginary
               ? CorrelatorKind::x_imag
               : (ck == ContourKind::keldysh ? CorrelatorKind::x_neq
                                             : CorrelatorKind::x_eq);
  if (name == "greater")
    return ck == ContourKind::keldysh ? CorrelatorKind::neq_greater
                                      : CorrelatorKind::eq_greater;
  if (name == "lesser")
    return ck == ContourKind::keldysh ? CorrelatorKind::neq_lesser
                                      : CorrelatorKind::eq_lesser;
  throw ConfigError("unknown observable '" + name + "'");
}

}  // namespace

RunOutput run(const RunConfig& cfg, bool write_files) {
  cfg.validate();
  const ContourKind kind = contour_kind_of(cfg.contour);
  ContourGrid grid =
      contour::make_grid(kind, cfg.beta, cfg.t_max, cfg.dt, cfg.dtau);

  influence::ImpurityModel model =
      cfg.flavors == 1 ? influence::single_flavor_model(cfg.eps_a)
                       : influence::two_flavor_model(cfg.eps_a, cfg.u,
                                                     cfg.j_tunnel);
  model.el_coupled = cfg.el_coupled;

  auto electron = make_spectrum(cfg.electron, true);
  auto phonon = make_spectrum(cfg.phonon, false);

  influence::SolverOptions opt;
  opt.chi = cfg.chi;
  opt.chi_zip = cfg.chi_zip;
  opt.cutoff = cfg.cutoff;
  opt.n_fine = cfg.n_fine;

  InfluenceFunctional f =
      influence::build_influence(model, grid, electron, phonon, opt);

  RunOutput out;
  for (const auto& name : cfg.observables) {
    const CorrelatorKind ck = kind_for(name, kind);
    obs::CorrelatorRequest req;
    req.kind = ck;
    CorrelatorResult res =
        (ck == CorrelatorKind::x_imag || ck == CorrelatorKind::x_neq ||
         ck == CorrelatorKind::x_eq)
            ? obs::density_density(f, req, opt.zip_chi())
            : obs::green(f, req, opt.zip_chi());
    out.solver.push_back({"gtempo_" + name, res.times, res.values});
  }

  // oracles on the same time grids
  for (size_t i = 0; i < cfg.observables.size(); ++i) {
    const auto& name = cfg.observables[i];
    const auto& times = out.solver[i].times;
    if (cfg.analytic_on && cfg.electron.form == "none" &&
        cfg.phonon.form != "none") {
      reference::IBParams p;
      p.flavors = cfg.flavors;
      p.eps_a = cfg.eps_a;
      p.u = cfg.u;
      p.beta = cfg.beta;
      p.j_spectrum = *phonon;
      if (name == "G")
        out.oracle.push_back({"analytic_G", times, ib_matsubara(p, times)});
      else if (name == "greater")
        out.oracle.push_back(
            {"analytic_greater", times, ib_realtime(p, times).greater});
      else if (name == "lesser")
        out.oracle.push_back(
            {"analytic_lesser", times, ib_realtime(p, times).lesser});
    }
    if (cfg.ed_on) {
      reference::EDModel em;
      em.flavors = cfg.flavors;
      em.eps_a = cfg.eps_a;
      em.u = cfg.u;
      em.j_tunnel = cfg.j_tunnel;
      em.el_coupled = cfg.el_coupled;
      em.n_max = cfg.n_max;
      if (cfg.electron.form == "delta") {
        em.has_electron = true;
        em.lambda = cfg.electron.strength;
        em.eps0 = cfg.electron.position;
      }
      if (cfg.phonon.form == "delta") {
        em.has_phonon = true;
        em.g = cfg.phonon.strength;
        em.omega0 = cfg.phonon.position;
      }
      auto res = reference::ed_solve(em, cfg.beta, kind_for(name, kind), times);
      out.oracle.push_back({"ed_" + name, times, res.values});
    }
  }

  for (const auto& sol : out.solver) {
    for (const auto& ora : out.oracle) {
      const std::string target = sol.name.substr(7);  // strip gtempo_
      if (ora.name != "analytic_" + target && ora.name != "ed_" + target)
        continue;
      std::ostringstream line;
      line << "mse " << target << " vs " << ora.name << " = "
           << fmt(obs::mse(sol.values, ora.values));
      out.summary_lines.push_back(line.str());
    }
  }

  if (write_files) {
    namespace fs = std::filesystem;
    fs::create_directories(cfg.out_dir);
    const auto header = cfg.resolved();
    for (const auto& s : out.solver)
      write_csv(fs::path(cfg.out_dir) / (s.name + ".csv"), s, header);
    for (const auto& s : out.oracle)
      write_csv(fs::path(cfg.out_dir) / (s.name + ".csv"), s, header);
    std::ofstream summary(fs::path(cfg.out_dir) / "summary.txt");
    for (const auto& [k, v] : header) summary << "# " << k << "=" << v << "\n";
    for (const auto& l : out.summary_lines) summary << l << "\n";
  }
  return out;
}

SweepOutput sweep(const SweepConfig& cfg, bool write_files) {
  cfg.base.validate();
  std::vector<RunConfig> points;
  for (double v : cfg.values) {
    RunConfig p = cfg.base;
    if (cfg.axis == "chi")
      p.chi = static_cast<long>(std::lround(v));
    else if (cfg.axis == "dtau")
      p.dtau = v;
    else
      p.dt = v;
    p.out_dir = cfg.base.out_dir + "/point_" + fmt(v);
    points.push_back(std::move(p));
  }

  long workers = 1;
  if (const char* env = std::getenv("POLARON_WORKERS"))
    workers = std::max(1L, std::atol(env));

  std::vector<RunOutput> results(points.size());
  std::atomic<size_t> next{0};
  auto worker = [&]() {
    for (;;) {
      const size_t i = next.fetch_add(1);
      if (i >= points.size()) return;
      results[i] = run(points[i], write_files);
    }
  };
  std::vector<std::future<void>> pool;
  for (long w = 1; w < std::min<long>(workers, points.size()); ++w)
    pool.push_back(std::async(std::launch::async, worker));
  worker();
  for (auto& f : pool) f.get();

  // baseline per observable; the accuracy knob improves with larger chi
  // but smaller step sizes, so "finest" sits at opposite ends
  const bool larger_is_finer = cfg.axis == "chi";
  const size_t finest_idx = larger_is_finer ? points.size() - 1 : 0;
  SweepOutput out;
  const RunOutput& finest = results[finest_idx];
  for (size_t i = 0; i < points.size(); ++i) {
    SweepRow row;
    row.value = cfg.values[i];
    for (size_t oi = 0; oi < results[i].solver.size(); ++oi) {
      const auto& sol = results[i].solver[oi];
      const std::string target = sol.name.substr(7);
      std::vector<Complex> base_vals;
      if (cfg.baseline == "finest-self") {
        const auto& fin = finest.solver[oi];
        if (fin.values.size() == sol.values.size()) {
          base_vals = fin.values;
        } else {
          // align coarse times onto the finest grid
          for (size_t ti = 0; ti < sol.times.size(); ++ti) {
            const auto& ft = fin.times;
            size_t bi = 0;
            double best = 1e300;
            for (size_t k = 0; k < ft.size(); ++k)
              if (std::abs(ft[k] - sol.times[ti]) < best) {
                best = std::abs(ft[k] - sol.times[ti]);
                bi = k;
              }
            base_vals.push_back(fin.values[bi]);
          }
        }
      } else {
        const std::string want =
            (cfg.baseline == "analytic" ? "analytic_" : "ed_") + target;
        for (const auto& ora : results[i].oracle)
          if (ora.name == want) base_vals = ora.values;
        if (base_vals.empty())
          throw ConfigError("sweep baseline '" + cfg.baseline +
                            "' is not available for observable " + target);
      }
      row.mse_per_observable[target] = obs::mse(sol.values, base_vals);
    }
    out.rows.push_back(std::move(row));
  }

  for (const auto& [name, unused] : out.rows.front().mse_per_observable) {
    (void)unused;
    // expected: error shrinks toward the finer end of the axis
    bool mono = true;
    size_t lo = 0, hi = out.rows.size();
    if (cfg.baseline == "finest-self") {
      if (larger_is_finer)
        hi -= 1;
      else
        lo += 1;
    }
    for (size_t i = lo + 1; i < hi; ++i) {
      const double prev = out.rows[i - 1].mse_per_observable[name];
      const double cur = out.rows[i].mse_per_observable[name];
      const bool ok = larger_is_finer ? (cur <= prev * (1.0 + 1e-12))
                                      : (cur >= prev * (1.0 - 1e-12));
      if (!ok) mono = false;
    }
    out.monotone[name] = mono;
  }

  if (write_files) {
    namespace fs = std::filesystem;
    fs::create_directories(cfg.base.out_dir);
    for (const auto& [name, unused] : out.rows.front().mse_per_observable) {
      (void)unused;
      std::ofstream f(fs::path(cfg.base.out_dir) / ("sweep_" + name + ".csv"));
      const auto header = cfg.base.resolved();
      for (const auto& [k, v] : header) f << "# " << k << "=" << v << "\n";
      f << "# sweep.axis=" << cfg.axis << "\n";
      f << "# sweep.baseline=" << cfg.baseline << "\n";
      f << "value,mse,monotone\n";
      for (const auto& row : out.rows) {
        char buf[96];
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%d\n", row.value,
                      row.mse_per_observable.at(name),
                      out.monotone.at(name) ? 1 : 0);
        f << buf;
      }
    }
  }
  return out;
}

}  // namespace polaron::runner
