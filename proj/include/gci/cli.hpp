#pragma once

// Verification campaigns behind the gci-verify command line tool. Each command
// produces a Report of named checks; run() prints it as JSON or CSV and maps
// the outcome to an exit code (0 all checks pass, 2 a mathematical check
// failed, 1 usage or input error).

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"

#include "gci/errors.hpp"
#include "gci/estimators.hpp"
#include "gci/gamma_series.hpp"
#include "gci/gaussian_model.hpp"
#include "gci/instances.hpp"
#include "gci/interpolation.hpp"
#include "gci/io.hpp"
#include "gci/matrix_core.hpp"
#include "gci/parallel.hpp"

namespace gci::cli {

inline const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names = {"check-identities", "laplace", "density", "ajtau",
                                                 "sweep-tau",        "gci",     "decomposition"};
  return names;
}

struct RunConfig {
  std::string command;
  std::optional<std::string> matrix;  // path or inline JSON
  std::optional<std::size_t> n1;
  std::optional<std::vector<double>> t;
  std::optional<std::vector<double>> lambda;
  std::optional<std::vector<double>> x;
  std::size_t samples = 1000000;
  std::size_t grid = 11;
  std::uint64_t seed = 42;
  double tol = 1e-8;
  std::string format = "json";
  std::size_t trials = 100;
  std::size_t dim = 4;
  double tau = 0.5;
  unsigned threads = 0;  // 0 = default

  void validate() const {
    if (std::find(command_names().begin(), command_names().end(), command) == command_names().end())
      throw InputError("unknown command '" + command + "'");
    if (samples < 1000) throw InputError("--samples must be at least 1000");
    if (grid < 2) throw InputError("--grid must be at least 2");
    if (!(tol > 0.0)) throw InputError("--tol must be positive");
    if (format != "json" && format != "csv") throw InputError("--format must be json or csv");
    if (trials < 1) throw InputError("--trials must be at least 1");
    if (dim < 1) throw InputError("--dim must be at least 1");
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["command"] = command;
    j["matrix"] = matrix ? nlohmann::json(*matrix) : nlohmann::json(nullptr);
    j["n1"] = n1 ? nlohmann::json(*n1) : nlohmann::json(nullptr);
    j["t"] = t ? nlohmann::json(*t) : nlohmann::json(nullptr);
    j["lambda"] = lambda ? nlohmann::json(*lambda) : nlohmann::json(nullptr);
    j["x"] = x ? nlohmann::json(*x) : nlohmann::json(nullptr);
    j["samples"] = samples;
    j["grid"] = grid;
    j["seed"] = seed;
    j["tol"] = tol;
    j["format"] = format;
    j["trials"] = trials;
    j["dim"] = dim;
    j["tau"] = tau;
    return j;
  }
};

struct Check {
  std::string name;
  double value = 0.0;
  double stderr_or_bound = 0.0;
  double threshold = 0.0;
  bool pass = true;
};

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
};

struct Report {
  std::string command;
  nlohmann::json config;
  std::vector<Check> checks;
  std::optional<Table> table;
  double elapsed_seconds = 0.0;

  bool pass() const {
    return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass; });
  }

  void add(std::string name, double value, double err, double threshold, bool ok) {
    checks.push_back({std::move(name), value, err, threshold, ok});
  }

  // Informational record; always passes.
  void note(std::string name, double value, double err = 0.0) {
    checks.push_back({std::move(name), value, err, 0.0, true});
  }

  nlohmann::json to_json() const {
    nlohmann::json out;
    out["command"] = command;
    out["config"] = config;
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& c : checks)
      arr.push_back({{"name", c.name},
                     {"value", c.value},
                     {"stderr", c.stderr_or_bound},
                     {"threshold", c.threshold},
                     {"pass", c.pass}});
    out["checks"] = std::move(arr);
    if (table) out["table"] = {{"columns", table->columns}, {"rows", table->rows}};
    out["pass"] = pass();
    out["elapsed_seconds"] = elapsed_seconds;
    return out;
  }

  // Numbers are written with the JSON serializer so both formats carry the
  // same digits.
  std::string to_csv() const {
    auto num = [](double v) { return nlohmann::json(v).dump(); };
    std::string s = "name,value,stderr,threshold,pass\n";
    for (const auto& c : checks)
      s += c.name + "," + num(c.value) + "," + num(c.stderr_or_bound) + "," + num(c.threshold) + "," +
           (c.pass ? "true" : "false") + "\n";
    if (table) {
      s += "\n";
      for (std::size_t k = 0; k < table->columns.size(); ++k) s += (k ? "," : "") + table->columns[k];
      s += "\n";
      for (const auto& r : table->rows) {
        for (std::size_t k = 0; k < r.size(); ++k) s += (k ? "," : "") + num(r[k]);
        s += "\n";
      }
    }
    return s;
  }
};

namespace detail {

struct Summary {
  double min = 0.0, median = 0.0, max = 0.0;
};

inline Summary summarize(std::vector<double> v) {
  if (v.empty()) return {};
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  const double median = v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
  return {v.front(), median, v.back()};
}

// Worst case against the threshold plus min/median/max as informational records.
inline void add_distribution(Report& r, const std::string& name, const std::vector<double>& values,
                             double threshold) {
  const auto s = summarize(values);
  r.add(name + ".max", s.max, 0.0, threshold, s.max < threshold);
  r.note(name + ".median", s.median);
  r.note(name + ".min", s.min);
}

inline ProblemSpec require_problem(const RunConfig& cfg) {
  if (!cfg.matrix) throw InputError("--matrix is required for '" + cfg.command + "'");
  return load_problem(*cfg.matrix);
}

inline std::size_t require_n1(const RunConfig& cfg, const ProblemSpec& p) {
  const auto n1 = cfg.n1 ? cfg.n1 : p.n1;
  if (!n1) throw InputError("--n1 is required for '" + cfg.command + "'");
  if (*n1 < 1 || *n1 >= p.cov.n()) throw InputError("--n1 must satisfy 1 <= n1 < n");
  return *n1;
}

inline BoxSpec require_box(const RunConfig& cfg, const ProblemSpec& p) {
  const auto t = cfg.t ? cfg.t : p.t;
  if (!t) throw InputError("--t is required for '" + cfg.command + "'");
  if (t->size() != p.cov.n()) throw InputError("--t must have one threshold per coordinate");
  return BoxSpec(*t);
}

inline std::vector<double> vector_or(const std::optional<std::vector<double>>& v, std::size_t n, double fill,
                                     const char* flag) {
  if (!v) return std::vector<double>(n, fill);
  if (v->size() != n) throw InputError(std::string(flag) + " must have one entry per coordinate");
  return *v;
}

inline std::string mask_name(std::uint64_t mask) { return std::to_string(mask); }

inline void identity_checks_for(const CovMatrix& c, std::vector<double>& expansion, std::vector<double>& block,
                                std::vector<double>& eig_lo, std::vector<double>& eig_hi,
                                std::vector<double>& chol, std::vector<double>& isqrt) {
  const std::size_t n = c.n();
  expansion.push_back(det_expansion_check(c.entries()));
  chol.push_back(max_abs_diff(c.chol() * c.chol().transpose(), c.entries()) / c.entries().max_abs());
  const Matrix b = inv_sqrt(c.entries());
  isqrt.push_back(max_abs_diff(b * c.entries() * b, Matrix::identity(n)));
  for (std::size_t n1 = 1; n1 < n; ++n1) {
    block.push_back(block_det_check(c, n1));
    const auto mu = block_schur_eigs(c, IndexSet::range(0, n1), IndexSet::range(n1, n));
    eig_lo.push_back(mu.front());
    eig_hi.push_back(mu.back());
  }
}

inline void run_check_identities(const RunConfig& cfg, Report& r) {
  std::vector<double> expansion, block, eig_lo, eig_hi, chol, isqrt;
  if (cfg.matrix) {
    const auto p = load_problem(*cfg.matrix);
    identity_checks_for(p.cov, expansion, block, eig_lo, eig_hi, chol, isqrt);
  } else {
    for (std::size_t trial = 0; trial < cfg.trials; ++trial)
      identity_checks_for(random_spd(cfg.dim, mix_seed(cfg.seed, trial)), expansion, block, eig_lo, eig_hi,
                          chol, isqrt);
  }
  add_distribution(r, "det_expansion", expansion, cfg.tol);
  if (!block.empty()) {
    add_distribution(r, "block_det", block, cfg.tol);
    const double lo = *std::min_element(eig_lo.begin(), eig_lo.end());
    const double hi = *std::max_element(eig_hi.begin(), eig_hi.end());
    r.add("schur_eigs.min", lo, 0.0, -kSchurClampTolerance, lo >= -kSchurClampTolerance);
    r.add("schur_eigs.max", hi, 0.0, 1.0 + kSchurClampTolerance, hi <= 1.0 + kSchurClampTolerance);
  }
  add_distribution(r, "cholesky_reconstruction", chol, 1e-12);
  add_distribution(r, "inv_sqrt", isqrt, 1e-10);
}

inline void run_laplace(const RunConfig& cfg, Report& r) {
  const auto p = require_problem(cfg);
  const std::size_t n = p.cov.n();
  const auto lambda = vector_or(cfg.lambda, n, 1.0, "--lambda");
  const double closed = laplace_closed_form(p.cov, lambda);
  r.note("laplace.closed_form", closed);
  const Estimate mc = mc_laplace(p.cov, lambda, cfg.samples, cfg.seed);
  const double res = mc.value - closed;
  r.add("laplace.mc_residual", res, mc.std_error, 4.0 * mc.std_error, std::abs(res) <= 4.0 * mc.std_error);
  std::vector<double> doubled(lambda);
  for (double& l : doubled) l *= 2.0;
  const double gap = std::abs(laplace_halved(p.cov, doubled) - laplace_closed_form(p.cov, lambda));
  r.add("laplace.halved_identity", gap, 0.0, 0.0, gap == 0.0);
  const HDensity h(p.cov, 3);
  const Estimate hres = h_laplace_check(h, lambda, cfg.samples, cfg.seed);
  r.add("h_laplace.residual", hres.value, hres.std_error, 4.0 * hres.std_error,
        std::abs(hres.value) <= 4.0 * hres.std_error);
}

inline void run_density(const RunConfig& cfg, Report& r) {
  const auto p = require_problem(cfg);
  const std::size_t n = p.cov.n();
  if (cfg.x) {
    if (cfg.x->size() != n) throw InputError("--x must have one entry per coordinate");
    r.note("density.value", f_density(p.cov, *cfg.x));
  }
  if (n > 2) {
    if (!cfg.x) throw InputError("'density' checks normalization for n <= 2; pass --x for a point value");
    return;
  }
  const std::vector<double> lo(n, 0.0), hi(n, std::numeric_limits<double>::infinity());
  const double mass = f_density_mass(p.cov, lo, hi);
  r.add("density.normalization", mass, 0.0, 1e-6, std::abs(mass - 1.0) <= 1e-6);
  std::vector<Vector> edges;
  for (std::size_t i = 0; i < n; ++i) {
    Vector e;
    for (double v : {0.0, 0.02, 0.05, 0.1, 0.2, 0.35, 0.5, 0.75, 1.0, 1.5, 2.5}) e.push_back(v * p.cov(i, i));
    edges.push_back(std::move(e));
  }
  const auto hist = z_histogram_check(p.cov, edges, cfg.samples, cfg.seed);
  r.add("density.histogram_max_discrepancy", hist.max_discrepancy, 0.0, hist.threshold,
        hist.max_discrepancy < hist.threshold);
}

inline void run_ajtau(const RunConfig& cfg, Report& r) {
  const auto p = require_problem(cfg);
  const std::size_t n1 = require_n1(cfg, p);
  if (p.cov.n() > kMaxSubsetDim) throw InputError("'ajtau' supports n <= 12");
  const TauFamily f(p.cov, n1);
  const std::uint64_t count = std::uint64_t{1} << f.n();
  constexpr double h = 1e-5;
  double min_a = std::numeric_limits<double>::infinity(), fd_err = 0.0, direct_err = 0.0, rise = 0.0;
  Table table{{"mask", "tau", "minor", "a_J"}, {}};
  std::vector<CovMatrix> path;
  for (std::size_t g = 0; g < cfg.grid; ++g) path.push_back(f.c_of_tau(static_cast<double>(g) / (cfg.grid - 1)));
  for (std::uint64_t mask = 1; mask < count; ++mask) {
    const auto& ms = f.cached_spectrum(mask);
    const IndexSet j = IndexSet::from_mask(mask);
    double prev = std::numeric_limits<double>::infinity();
    for (std::size_t g = 0; g < cfg.grid; ++g) {
      const double tau = static_cast<double>(g) / (cfg.grid - 1);
      const double minor = ms.minor(tau), a = ms.a(tau);
      table.rows.push_back({static_cast<double>(mask), tau, minor, a});
      min_a = std::min(min_a, a);
      fd_err = std::max(fd_err, std::abs(a + (ms.minor(tau + h) - ms.minor(tau - h)) / (2.0 * h)));
      const double direct = principal_minor(path[g].entries(), j);
      direct_err = std::max(direct_err, std::abs(minor - direct) / std::abs(direct));
      rise = std::max(rise, minor - prev);
      prev = minor;
    }
  }
  r.add("a_J.min", min_a, 0.0, -1e-12, min_a >= -1e-12);
  r.add("a_J.finite_difference_max_error", fd_err, 0.0, 1e-6, fd_err <= 1e-6);
  r.add("minor.direct_max_rel_error", direct_err, 0.0, 1e-10, direct_err <= 1e-10);
  r.add("minor.max_increase", rise, 0.0, 1e-12, rise <= 1e-12);
  r.table = std::move(table);
}

inline void run_sweep(const RunConfig& cfg, Report& r) {
  const auto p = require_problem(cfg);
  const std::size_t n1 = require_n1(cfg, p);
  const BoxSpec box = require_box(cfg, p);
  const TauFamily f(p.cov, n1);
  const auto rep = tau_monotonicity_sweep(f, box, cfg.grid, cfg.samples, cfg.seed);
  Table table{{"tau", "estimate", "stderr"}, {}};
  for (std::size_t g = 0; g < rep.tau_grid.size(); ++g)
    table.rows.push_back({rep.tau_grid[g], rep.estimates[g].value, rep.estimates[g].std_error});
  for (std::size_t g = 0; g < rep.differences.size(); ++g) {
    const auto& d = rep.differences[g];
    const bool flagged = std::any_of(rep.violations.begin(), rep.violations.end(),
                                     [&](const SweepViolation& v) { return v.index == g; });
    r.add("sweep.difference[" + std::to_string(g) + "]", d.value, d.std_error,
          -kSweepFlagSigmas * d.std_error, !flagged);
  }
  r.add("sweep.violations", static_cast<double>(rep.violations.size()), 0.0, 0.0, rep.violations.empty());
  r.table = std::move(table);
}

inline void run_gci(const RunConfig& cfg, Report& r) {
  const auto p = require_problem(cfg);
  const std::size_t n1 = require_n1(cfg, p);
  const BoxSpec box = require_box(cfg, p);
  const auto rep = gci_check(p.cov, n1, box, cfg.samples, cfg.seed);
  r.note("gci.p_joint", rep.p_joint.value, rep.p_joint.std_error);
  r.note("gci.p_K", rep.p_k.value, rep.p_k.std_error);
  r.note("gci.p_L", rep.p_l.value, rep.p_l.std_error);
  r.add("gci.delta", rep.delta, rep.delta_stderr, -4.0 * rep.delta_stderr, rep.holds(4.0));
}

inline void run_decomposition(const RunConfig& cfg, Report& r) {
  const auto p = require_problem(cfg);
  const std::size_t n1 = require_n1(cfg, p);
  const BoxSpec box = require_box(cfg, p);
  const TauFamily f(p.cov, n1);
  const auto rep = decomposition_check(f, box, cfg.tau, cfg.samples, cfg.seed);
  r.note("decomposition.finite_difference", rep.finite_difference.value, rep.finite_difference.bound);
  r.note("decomposition.sum", rep.decomposition.value, rep.decomposition.std_error);
  r.add("decomposition.residual", rep.residual.value, rep.residual.std_error, rep.allowance(), rep.agrees());
  for (std::size_t k = 0; k < rep.boundary.size(); ++k) {
    const auto& b = rep.boundary[k];
    r.add("boundary_integral[" + mask_name(k + 1) + "]", b.value, b.std_error, -3.0 * b.std_error,
          b.value >= -3.0 * b.std_error);
    r.add("a_J[" + mask_name(k + 1) + "]", rep.a[k], 0.0, -1e-12, rep.a[k] >= -1e-12);
  }
}

}  // namespace detail

inline Report execute(const RunConfig& cfg) {
  cfg.validate();
  Report r;
  r.command = cfg.command;
  r.config = cfg.to_json();
  const auto start = std::chrono::steady_clock::now();
  if (cfg.command == "check-identities") detail::run_check_identities(cfg, r);
  else if (cfg.command == "laplace") detail::run_laplace(cfg, r);
  else if (cfg.command == "density") detail::run_density(cfg, r);
  else if (cfg.command == "ajtau") detail::run_ajtau(cfg, r);
  else if (cfg.command == "sweep-tau") detail::run_sweep(cfg, r);
  else if (cfg.command == "gci") detail::run_gci(cfg, r);
  else if (cfg.command == "decomposition") detail::run_decomposition(cfg, r);
  r.elapsed_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

// Prints the report to `out` and returns the exit code; errors go to `err` as one line.
inline int run(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  const unsigned previous = thread_count();
  if (cfg.threads != 0) set_thread_count(cfg.threads);
  int code = 0;
  try {
    const Report r = execute(cfg);
    if (cfg.format == "csv") out << r.to_csv();
    else out << r.to_json().dump(2) << "\n";
    code = r.pass() ? 0 : 2;
  } catch (const InputError& e) {
    err << "error: " << e.what() << "\n";
    code = 1;
  } catch (const DomainError& e) {
    err << "error: " << e.what() << "\n";
    code = 1;
  } catch (const ConsistencyError& e) {
    err << "error: " << e.what() << "\n";
    code = 1;
  }
  set_thread_count(previous);
  return code;
}

}  // namespace gci::cli
