#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "diagnostics.hpp"
#include "dynamics.hpp"

namespace muskat {

using RecordSink = std::function<void(const DiagnosticsRecord&)>;
using SnapshotSink = std::function<void(const SimState&)>;

struct RunResult {
  std::vector<DiagnosticsRecord> records;
  std::string status = "ok";  // ok | breakdown
  std::string message;
  double mean_removed = 0;  // mean projected out of the initial data
  long steps = 0;
  SimState last;
};

inline long step_count(const StepperConfig& cfg) {
  if (!(cfg.t_end >= 0)) throw std::invalid_argument("run: t_end must be >= 0");
  const double n = cfg.t_end / cfg.dt;
  const long k = std::lround(n);
  if (std::abs(n - k) > 1e-9 * std::max(1.0, n))
    throw std::invalid_argument("run: t_end must be an integer multiple of dt");
  return k;
}

// Steps from eta0 (mean projected out unless project_mean is false) to t_end, streaming diagnostics records. A
// breakdown ends the run with a terminal record flagged terminal_breakdown.
inline RunResult run(const Setup& s, const StepperConfig& cfg, GridFn1D eta0, const DiagConfig& dcfg = {},
                     const RecordSink& on_record = {}, const SnapshotSink& on_snapshot = {},
                     bool project_mean = true) {
  RunResult res;
  const long nsteps = step_count(cfg);
  if (project_mean) res.mean_removed = project_zero_mean(eta0);
  Stepper stp(s, cfg);
  DiagnosticsAccumulator acc(s, dcfg);
  auto take = [&](std::vector<DiagnosticsRecord> rs) {
    for (auto& r : rs) {
      if (on_record) on_record(r);
      res.records.push_back(std::move(r));
    }
  };
  double t_fail = 0;
  try {
    SimState st = stp.prepare(eta0);
    if (on_snapshot && cfg.snapshot_stride > 0) on_snapshot(st);
    take(acc.push(st));
    for (long k = 1; k <= nsteps; ++k) {
      t_fail = k * cfg.dt;
      SimState nx = stp.step(st);
      nx.t = k * cfg.dt;
      st = std::move(nx);
      res.steps = k;
      if (on_snapshot && cfg.snapshot_stride > 0 && k % cfg.snapshot_stride == 0) on_snapshot(st);
      take(acc.push(st));
    }
    res.last = std::move(st);
  } catch (const DiffeoBreakdown& e) {
    res.status = "breakdown";
    res.message = e.what();
  } catch (const SolverError& e) {
    res.status = "breakdown";
    res.message = e.what();
  } catch (const GeometryError& e) {
    res.status = "breakdown";
    res.message = e.what();
  }
  take(acc.finish());
  if (res.status != "ok") {
    DiagnosticsRecord term;
    const double nan = std::numeric_limits<double>::quiet_NaN();
    auto vals = record_values(term);
    for (auto& v : vals) v = nan;
    vals.back() = terminal_breakdown;
    term = record_from_values(vals);
    term.t = t_fail;
    term.flags = terminal_breakdown;
    take({term});
  }
  return res;
}

}  // namespace muskat
