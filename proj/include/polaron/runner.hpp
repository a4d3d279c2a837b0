#ifndef POLARON_RUNNER_HPP
#define POLARON_RUNNER_HPP

#include "polaron/influence.hpp"
#include "polaron/observables.hpp"
#include "polaron/reference.hpp"

#include <map>
#include <string>
#include <vector>

namespace polaron::runner {

// Configuration-level failures exit with code 2 and a line-numbered message.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct BathConfig {
  std::string form = "none";  // none | delta | ohmic | semicircular | tabulated
  double strength = 0, position = 0;       // delta
  double alpha = 0, omega_c = 5, dim = 1;  // ohmic family
  std::string path;                        // tabulated
};

struct RunConfig {
  // model
  long flavors = 1;
  double eps_a = 0, u = 0, j_tunnel = 0;
  std::array<bool, 2> el_coupled{true, true};
  // baths
  BathConfig electron, phonon;
  // contour
  std::string contour = "imaginary";
  double beta = 1, t_max = 0, dtau = 0, dt = 0;
  // solver
  long chi = 100, chi_zip = 0, n_fine = 1;
  double cutoff = 1e-12;
  // oracles
  bool ed_on = false;
  long n_max = 50;
  bool analytic_on = false;
  // output
  std::string out_dir = "out";
  std::vector<std::string> observables;  // G, X, greater, lesser

  std::map<std::string, std::string> resolved() const;
  void validate() const;
};

struct SweepConfig {
  RunConfig base;
  std::string axis = "chi";  // chi | dtau | dt
  std::vector<double> values;
  std::string baseline = "finest-self";  // analytic | ed | finest-self
};

RunConfig parse_run_config(const std::string& path);
SweepConfig parse_sweep_config(const std::string& path);
RunConfig preset_config(const std::string& name);
std::vector<std::string> preset_names();

struct Series {
  std::string name;
  std::vector<double> times;
  std::vector<Complex> values;
};

struct RunOutput {
  std::vector<Series> solver;
  std::vector<Series> oracle;  // analytic_* / ed_* counterparts
  std::vector<std::string> summary_lines;
};

// Computes all requested observables (and oracles), writes one CSV per
// series plus a summary; deterministic for a given config.
RunOutput run(const RunConfig& cfg, bool write_files = true);

struct SweepRow {
  double value;
  std::map<std::string, double> mse_per_observable;
};

struct SweepOutput {
  std::vector<SweepRow> rows;
  std::map<std::string, bool> monotone;
};

SweepOutput sweep(const SweepConfig& cfg, bool write_files = true);

}  // namespace polaron::runner

#endif
