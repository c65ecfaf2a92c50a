#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "muskat/corner.hpp"
#include "muskat/diagnostics.hpp"
#include "muskat/io.hpp"
#include "muskat/stationary.hpp"
#include "muskat/validation.hpp"

using namespace muskat;

namespace {

enum Exit { ok = 0, invalid = 1, breakdown = 2 };

int cmd_stationary(const std::string& config, const std::string& csv, const std::string& summary) {
  SimConfig c = config.empty() ? parse_config(json::object()) : load_config(config);
  auto st = solve_stationary(c.params, c.vessel, c.Nx);
  write_stationary_csv(csv, st);
  std::ofstream(summary) << stationary_summary(st, c.params).dump(2) << '\n';
  std::printf("phi_s=%.12g omega=%.12g mass_residual=%.3e -> %s\n", st.phi_s, st.omega, st.mass_residual, csv.c_str());
  return ok;
}

int cmd_simulate(const std::string& config, const std::string& traj, const std::string& summary) {
  SimConfig c = load_config(config);
  if (!traj.empty()) c.output.trajectory = traj;
  if (!summary.empty()) c.output.summary = summary;
  json j;
  auto res = simulate(c, &j);
  if (res.mean_removed != 0) std::fprintf(stderr, "projected out initial mean %.3e\n", res.mean_removed);
  std::printf("%s: %ld steps, %zu records -> %s\n", res.status.c_str(), res.steps, res.records.size(),
              c.output.trajectory.c_str());
  if (res.status != "ok") {
    std::fprintf(stderr, "breakdown: %s\n", res.message.c_str());
    return breakdown;
  }
  return ok;
}

int cmd_diagnose(const std::string& traj, std::string out, std::string summary, const DiagOptions& d) {
  auto table = read_csv(traj);
  auto recs = records_from_csv(table);
  if (out.empty()) out = traj + ".diag.csv";
  std::ofstream os(out);
  auto cols = trajectory_columns();
  cols.insert(cols.end(), derived_columns().begin(), derived_columns().end());
  write_csv_header(os, cols);
  for (const auto& r : recs) {
    auto v = record_values(r);
    auto e = derived_values(r);
    v.insert(v.end(), e.begin(), e.end());
    write_csv_row(os, v);
  }
  auto s = summarize(recs, d);
  auto j = summary_json(s);
  if (summary.empty()) summary = traj + ".summary.json";
  std::ofstream(summary) << j.dump(2) << '\n';
  if (s.decay_ok) std::printf("lambda=%.6g r2=%.6f records=%zu -> %s\n", s.decay.lambda, s.decay.r_squared, recs.size(), out.c_str());
  else std::printf("decay fit unavailable (%s), records=%zu -> %s\n", s.decay_error.c_str(), recs.size(), out.c_str());
  return ok;
}

int cmd_validate_elliptic(const std::string& out, const std::string& corner_out) {
  auto st = elliptic_convergence({16, 32, 64, 128});
  std::ofstream os(out);
  write_csv_header(os, {"N", "L2_error", "order"});
  for (const auto& r : st.rows) write_csv_row(os, {double(r.N), r.error, r.order});
  const bool order_ok = std::abs(st.fitted_order - 2.0) <= 0.1;
  const bool green_ok = st.max_green_residual <= 1e-8;
  std::printf("fitted L2 order %.4f (%s), Green residual %.2e (%s) -> %s\n", st.fitted_order, order_ok ? "ok" : "FAIL",
              st.max_green_residual, green_ok ? "ok" : "FAIL", out.c_str());
  bool corner_ok = true;
  if (!corner_out.empty()) {
    std::ofstream cs(corner_out);
    write_csv_header(cs, {"omega", "expected", "exponent", "rel_error"});
    for (double f : {1.0 / 3, 0.5, 2.0 / 3, 0.9}) {
      CornerProblem cp{f * std::numbers::pi};
      auto r = solve_corner(cp, corner_mesh(cp, 64, 64), 0.05, 0.4);
      const double rel = std::abs(r.exponent / cp.alpha() - 1);
      corner_ok = corner_ok && rel <= 0.05;
      write_csv_row(cs, {cp.omega, cp.alpha(), r.exponent, rel});
    }
    std::printf("corner exponents %s -> %s\n", corner_ok ? "ok" : "FAIL", corner_out.c_str());
  }
  return order_ok && green_ok && corner_ok ? ok : invalid;
}

int cmd_scan_r(double lo, double hi, double step, const std::string& out) {
  auto rep = lemmaA2_scan(lo, hi, step);
  std::ofstream os(out);
  os << "ratio,sup,sup_refined,drift\n";
  for (int k = 0; k < 9; ++k)
    os << remainder_ratio_names()[k] << ',' << format_double(rep.sup[k]) << ',' << format_double(rep.sup_refined[k]) << ','
       << format_double(std::abs(rep.sup[k] - rep.sup_refined[k]) / rep.sup_refined[k]) << '\n';
  const bool good = rep.finite && rep.max_drift < 0.01;
  std::printf("finite=%d max_drift=%.3e -> %s\n", rep.finite, rep.max_drift, out.c_str());
  return good ? ok : invalid;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"One-phase Hele-Shaw flow with moving contact points"};
  app.require_subcommand(1);

  std::string config, csv = "stationary.csv", stat_summary = "stationary.json";
  auto* stat = app.add_subcommand("stationary", "Solve the stationary meniscus");
  stat->add_option("--config", config, "JSON config (defaults: flat benchmark)");
  stat->add_option("--csv", csv, "Profile CSV path");
  stat->add_option("--summary", stat_summary, "Summary JSON path");

  std::string sim_config, traj_override, summary_override;
  auto* sim = app.add_subcommand("simulate", "Run the evolution and stream diagnostics");
  sim->add_option("--config", sim_config, "JSON config")->required();
  sim->add_option("--trajectory", traj_override, "Override output.trajectory");
  sim->add_option("--summary", summary_override, "Override output.summary");

  std::string traj, diag_out, diag_summary;
  DiagOptions dopt;
  std::vector<double> window;
  auto* diag = app.add_subcommand("diagnose", "Recompute the summary of a trajectory CSV");
  diag->add_option("--traj", traj, "Trajectory CSV")->required();
  diag->add_option("--out", diag_out, "Output CSV with derived columns");
  diag->add_option("--summary", diag_summary, "Summary JSON path");
  diag->add_option("--residual-t-min", dopt.residual_t_min, "Ignore residuals before this time");
  diag->add_option("--fit-window", window, "Decay fit window t0 t1")->expected(2);

  std::string conv_out = "elliptic_convergence.csv", corner_out;
  auto* val = app.add_subcommand("validate", "Convergence studies");
  val->require_subcommand(1);
  auto* ell = val->add_subcommand("elliptic", "Manufactured-solution convergence of the mixed solver");
  ell->add_option("--out", conv_out, "Convergence CSV (N,L2_error,order)");
  ell->add_option("--corner", corner_out, "Also run the wedge benchmark and write its CSV");

  double lo = -5, hi = 5, step = 0.01;
  std::string scan_out = "scan_R.csv";
  auto* scan = app.add_subcommand("scan-R", "Sample the remainder ratios on a square");
  scan->add_option("--lo", lo);
  scan->add_option("--hi", hi);
  scan->add_option("--step", step);
  scan->add_option("--out", scan_out);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? ok : invalid;
  }

  try {
    if (*stat) return cmd_stationary(config, csv, stat_summary);
    if (*sim) return cmd_simulate(sim_config, traj_override, summary_override);
    if (*diag) {
      if (window.size() == 2) {
        dopt.fit_t0 = window[0];
        dopt.fit_t1 = window[1];
      }
      return cmd_diagnose(traj, diag_out, diag_summary, dopt);
    }
    if (*ell) return cmd_validate_elliptic(conv_out, corner_out);
    if (*scan) return cmd_scan_r(lo, hi, step, scan_out);
  } catch (const ConfigError& e) {
    std::cerr << e.what() << '\n';
    return invalid;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return invalid;
  } catch (const DiffeoBreakdown& e) {
    std::cerr << "breakdown: " << e.what() << '\n';
    return breakdown;
  } catch (const SolverError& e) {
    std::cerr << "breakdown: " << e.what() << '\n';
    return breakdown;
  } catch (const GeometryError& e) {
    std::cerr << "breakdown: " << e.what() << '\n';
    return breakdown;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return invalid;
  }
  return invalid;
}
