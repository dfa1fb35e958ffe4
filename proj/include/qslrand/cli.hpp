#ifndef QSLRAND_CLI_HPP
#define QSLRAND_CLI_HPP

// Command-line front end. run_cli() is the whole program; the tool's main()
// forwards to it so tests can drive it in-process.

#include <chrono>
#include <cmath>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "qslrand/coherent.hpp"
#include "qslrand/core_sets.hpp"
#include "qslrand/dual_solver.hpp"
#include "qslrand/io.hpp"
#include "qslrand/primal_oracle.hpp"

namespace qslrand {

enum ExitCode : int { exit_ok = 0, exit_usage = 1, exit_infeasible = 2 };

namespace cli_detail {

/// Flag-level validation failure; maps to exit code 1.
class UsageError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

struct BudgetFlags {
  std::optional<double> energy;
  double dt = 1.0;
  std::optional<double> u;

  void add_to(CLI::App *cmd) {
    cmd->add_option("--energy", energy, "Energy uncertainty bound (hbar = 1)");
    cmd->add_option("--dt", dt, "Time delay between preparations")->capture_default_str();
    cmd->add_option("--u", u, "Energy-time product; overrides --energy/--dt");
  }

  struct Resolved {
    double energy;
    double dt;
    EnergyTimeBudget budget;
  };

  [[nodiscard]] Resolved resolve() const {
    if (!(dt > 0.0) || !std::isfinite(dt))
      throw UsageError("--dt must be positive");
    if (u) {
      if (!(*u >= 0.0) || !std::isfinite(*u))
        throw UsageError("--u must be finite and >= 0");
      return {*u / dt, dt, EnergyTimeBudget(*u)};
    }
    if (!energy)
      throw UsageError("one of --u or --energy is required");
    if (!(*energy >= 0.0) || !std::isfinite(*energy))
      throw UsageError("--energy must be finite and >= 0");
    return {*energy, dt, EnergyTimeBudget::from_energy_and_delay(*energy, dt)};
  }
};

struct GridFlags {
  DiscretizationParams params;
  void add_to(CLI::App *cmd, bool with_m = true) {
    cmd->add_option("-L", params.L, "Range of the t-grid")->capture_default_str();
    if (with_m)
      cmd->add_option("-M", params.M, "t-grid points per unit")->capture_default_str();
    cmd->add_option("-N", params.N, "Energy levels per unit of L")->capture_default_str();
    cmd->add_option("-S", params.S, "Samples per boundary curve")->capture_default_str();
  }
  [[nodiscard]] const DiscretizationParams &checked() const {
    try {
      params.validate();
    } catch (const std::exception &e) {
      throw UsageError(e.what());
    }
    return params;
  }
};

struct Common {
  std::string threads = "auto";
  std::string output;
  std::string format = "json";

  void add_to(CLI::App *cmd, bool with_format) {
    cmd->add_option("--threads", threads, "Worker threads, or 'auto'")->capture_default_str();
    cmd->add_option("-o,--output", output, "Write to this file instead of stdout");
    if (with_format)
      cmd->add_option("--format", format, "Output format")
          ->check(CLI::IsMember({"json", "csv"}))
          ->capture_default_str();
  }

  [[nodiscard]] unsigned thread_count() const {
    if (threads == "auto")
      return resolve_threads(0);
    try {
      std::size_t pos = 0;
      const long v = std::stol(threads, &pos);
      if (pos == threads.size() && v > 0)
        return static_cast<unsigned>(v);
    } catch (const std::exception &) {
    }
    throw UsageError("--threads must be a positive integer or 'auto'");
  }

  void emit(std::ostream &out, const std::string &text) const {
    if (output.empty())
      out << text;
    else
      write_atomic(output, text);
  }
};

inline void require_correlation(double c0, double c1) {
  if (!Correlation{c0, c1}.valid())
    throw UsageError("--c0 and --c1 must lie in [-1, 1]");
}

inline json bound_extras(const CertifiedBound &b) {
  return {{"canonical_input", {b.canonical_input.c0, b.canonical_input.c1}},
          {"symmetry_applied", to_string(b.symmetry_applied)}};
}

} // namespace cli_detail

inline int run_cli(const std::vector<std::string> &args, std::ostream &out, std::ostream &err) {
  using namespace cli_detail;
  using clock = std::chrono::steady_clock;

  CLI::App app{"Certified randomness bounds under an energy-time constraint", "qslrand"};
  app.require_subcommand(1);

  // certify
  auto *certify_cmd = app.add_subcommand("certify", "Certified lower bound on the entropy at one point");
  double c0 = 0.0, c1 = 0.0;
  BudgetFlags budget;
  GridFlags grid;
  Common common;
  certify_cmd->add_option("--c0", c0, "Bias for input 0")->required();
  certify_cmd->add_option("--c1", c1, "Bias for input 1")->required();
  budget.add_to(certify_cmd);
  grid.add_to(certify_cmd);
  common.add_to(certify_cmd, true);

  // sweep
  auto *sweep_cmd = app.add_subcommand("sweep", "Certified bounds over an odd grid of [-1,1]^2 (CSV)");
  int grid_n = 51;
  sweep_cmd->add_option("--grid", grid_n, "Grid points per axis (odd)")->capture_default_str();
  budget.add_to(sweep_cmd);
  grid.add_to(sweep_cmd);
  common.add_to(sweep_cmd, false);

  // sets
  auto *sets_cmd = app.add_subcommand("sets", "Quantum boundary curves and the classical wedge");
  int samples = 100;
  sets_cmd->add_option("--samples", samples, "Samples per quantum boundary curve")->capture_default_str();
  budget.add_to(sets_cmd);
  common.add_to(sets_cmd, true);

  // coherent
  auto *coherent_cmd = app.add_subcommand("coherent", "Coherent-state correlations and regions");
  double xi = 0.0, omega_dt = 0.0, e_dt = 0.0;
  bool with_certify = false;
  std::vector<int> region;
  coherent_cmd->add_option("--xi", xi, "Coherent amplitude |alpha|")->required();
  coherent_cmd->add_option("--omega-dt", omega_dt, "Phase omega*dt");
  coherent_cmd->add_option("--e-dt", e_dt, "Assumed energy bound times delay");
  coherent_cmd->add_flag("--certify", with_certify, "Also run the dual certifier");
  coherent_cmd->add_option("--region", region, "Emit the non-zero region mask on an n_omega x n_e grid (CSV)")
      ->expected(2);
  grid.add_to(coherent_cmd);
  common.add_to(coherent_cmd, false);

  // oracle
  auto *oracle_cmd = app.add_subcommand("oracle", "Primal upper bound from explicit ensembles");
  int per_curve = PrimalOptions{}.samples_per_curve;
  oracle_cmd->add_option("--c0", c0, "Bias for input 0")->required();
  oracle_cmd->add_option("--c1", c1, "Bias for input 1")->required();
  oracle_cmd->add_option("--samples-per-curve", per_curve, "Pool samples per curve and budget")
      ->capture_default_str();
  budget.add_to(oracle_cmd);
  common.add_to(oracle_cmd, false);

  // eval-t
  auto *eval_cmd = app.add_subcommand("eval-t", "Dual objective at one dual vector");
  DualVector t;
  eval_cmd->add_option("--t1", t.t1)->required();
  eval_cmd->add_option("--t2", t.t2)->required();
  eval_cmd->add_option("--t3", t.t3)->required();
  eval_cmd->add_option("--c0", c0, "Bias for input 0")->required();
  eval_cmd->add_option("--c1", c1, "Bias for input 1")->required();
  budget.add_to(eval_cmd);
  grid.add_to(eval_cmd, false);
  common.add_to(eval_cmd, false);

  std::vector<const char *> argv{"qslrand"};
  for (const auto &a : args)
    argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp &) {
    out << app.help();
    return exit_ok;
  } catch (const CLI::CallForAllHelp &) {
    out << app.help("", CLI::AppFormatMode::All);
    return exit_ok;
  } catch (const CLI::ParseError &e) {
    err << "error: " << e.what() << '\n';
    return exit_usage;
  }

  try {
    const auto start = clock::now();
    auto elapsed_ms = [&] {
      return static_cast<long long>(
          std::chrono::duration_cast<std::chrono::milliseconds>(clock::now() - start).count());
    };

    if (certify_cmd->parsed()) {
      require_correlation(c0, c1);
      const auto b = budget.resolve();
      const auto &params = grid.checked();
      SolverOptions opts;
      opts.threads = common.thread_count();
      if (b.budget.trivial())
        err << "warning: u >= pi/2, every correlation is classically reachable\n";
      const CertifiedBound bound = certify({c0, c1}, b.budget, params, opts);
      const auto record = CertificateRecord::from_bound(bound, b.energy, b.dt, elapsed_ms());
      record.validate();
      if (common.format == "csv") {
        common.emit(out, record.csv());
      } else {
        json j = record.to_json();
        j["diagnostics"] = bound_extras(bound);
        common.emit(out, j.dump(2) + '\n');
      }
      return exit_ok;
    }

    if (sweep_cmd->parsed()) {
      if (grid_n < 1 || grid_n % 2 == 0)
        throw UsageError("--grid must be a positive odd integer");
      const auto b = budget.resolve();
      const auto &params = grid.checked();
      SolverOptions opts;
      opts.threads = common.thread_count();
      if (b.budget.trivial())
        err << "warning: u >= pi/2, trivial regime: the certified entropy is 0 everywhere\n";
      common.emit(out, sweep_csv(diagonal_sweep(b.budget, grid_n, params, opts)));
      return exit_ok;
    }

    if (sets_cmd->parsed()) {
      if (samples < 2)
        throw UsageError("--samples must be at least 2");
      const auto b = budget.resolve();
      const auto rows = set_boundaries(b.budget, samples);
      common.emit(out, common.format == "csv" ? sets_csv(rows)
                                               : sets_json(b.budget, rows).dump(2) + '\n');
      return exit_ok;
    }

    if (coherent_cmd->parsed()) {
      if (!(xi >= 0.0) || !(omega_dt >= 0.0) || !(e_dt >= 0.0))
        throw UsageError("--xi, --omega-dt and --e-dt must be >= 0");
      if (!region.empty()) {
        if (region[0] < 2 || region[1] < 2)
          throw UsageError("--region needs at least 2 points per axis");
        common.emit(out, region_csv(region_mask(xi, region[0], region[1], common.thread_count())));
        return exit_ok;
      }
      const CoherentPoint p{xi, omega_dt, e_dt};
      const Correlation c = coherent_correlations(p);
      json j{{"xi", xi},
             {"omega_dt", omega_dt},
             {"e_dt", e_dt},
             {"correlation", {{"c0", c.c0}, {"c1", c.c1}}},
             {"physically_consistent", p.physically_consistent()},
             {"nonzero_randomness_condition", nonzero_randomness_condition(p)},
             {"strict_inequality", true}};
      if (with_certify) {
        SolverOptions opts;
        opts.threads = common.thread_count();
        const CertifiedBound bound = coherent_certify(p, grid.checked(), opts);
        const auto record = CertificateRecord::from_bound(bound, e_dt, 1.0, elapsed_ms());
        record.validate();
        j["certificate"] = record.to_json();
      }
      common.emit(out, j.dump(2) + '\n');
      return exit_ok;
    }

    if (oracle_cmd->parsed()) {
      require_correlation(c0, c1);
      if (per_curve < 1)
        throw UsageError("--samples-per-curve must be at least 1");
      const auto b = budget.resolve();
      PrimalOptions opts;
      opts.samples_per_curve = per_curve;
      opts.threads = common.thread_count();
      const PrimalResult r = primal_search({c0, c1}, b.budget, opts);
      json members = json::array();
      for (const auto &m : r.ensemble.components)
        members.push_back(
            {{"weight", m.weight}, {"c0", m.correlation.c0}, {"c1", m.correlation.c1}, {"budget", m.budget}});
      json j{{"input", {{"c0", c0}, {"c1", c1}, {"u", b.budget.value()}}},
             {"primal_upper_bound", r.found() ? json(r.value) : json(nullptr)},
             {"ensemble", members}};
      common.emit(out, j.dump(2) + '\n');
      return exit_ok;
    }

    if (eval_cmd->parsed()) {
      require_correlation(c0, c1);
      const auto b = budget.resolve();
      GridFlags checked_grid{grid.params};
      checked_grid.params.M = 1;
      const DiscretizationParams params = checked_grid.checked();
      const double inner = inner_min(t, params.L, params.N, params.S);
      const double value =
          detail::dual_objective(inner, t, {c0, c1}, b.budget.effective(), params.energy_levels());
      json j{{"t", {t.t1, t.t2, t.t3}},
             {"input", {{"c0", c0}, {"c1", c1}, {"u", b.budget.value()}}},
             {"params", {{"L", params.L}, {"N", params.N}, {"S", params.S}}},
             {"inner_min", inner},
             {"dual_value", value}};
      common.emit(out, j.dump(2) + '\n');
      return exit_ok;
    }
  } catch (const InfeasibleInput &e) {
    err << "error: " << e.what() << '\n';
    return exit_infeasible;
  } catch (const UsageError &e) {
    err << "error: " << e.what() << '\n';
    return exit_usage;
  } catch (const DomainError &e) {
    err << "error: " << e.what() << '\n';
    return exit_usage;
  } catch (const std::invalid_argument &e) {
    err << "error: " << e.what() << '\n';
    return exit_usage;
  } catch (const std::exception &e) {
    err << "error: " << e.what() << '\n';
    return exit_usage;
  }
  return exit_usage;
}

} // namespace qslrand

#endif // QSLRAND_CLI_HPP
