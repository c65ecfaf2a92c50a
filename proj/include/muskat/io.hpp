#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "diagnostics.hpp"
#include "dynamics.hpp"
#include "run.hpp"
#include "stationary.hpp"

namespace muskat {

using json = nlohmann::json;

struct ConfigError : std::runtime_error {
  std::vector<std::string> violations;
  explicit ConfigError(std::vector<std::string> v) : std::runtime_error(join(v)), violations(std::move(v)) {}

 private:
  static std::string join(const std::vector<std::string>& v) {
    std::string s = "invalid configuration:";
    for (const auto& e : v) s += "\n  - " + e;
    return s;
  }
};

struct InitialEta {
  std::string family = "cosine";  // zero | cosine | bulge
  double amplitude = 0.01;
  int mode = 1;
  bool zero_mean = true;  // project the mean out before the run
};

struct DiagOptions {
  double delta = 0.5;
  double fit_t0 = -1, fit_t1 = -1;  // negative: [t_end/2, t_end]
  double residual_t_min = 0.5;
};

struct OutputConfig {
  std::string trajectory = "trajectory.csv";
  std::string summary = "summary.json";
  std::string snapshot_dir;  // empty disables snapshots
  int snapshot_stride = 0;
};

struct SimConfig {
  PhysParams params;
  VesselGeometry vessel;
  int Nx = 64, Ny = 16;
  StepperConfig stepper;
  InitialEta initial;
  DiagOptions diag;
  OutputConfig output;
};

namespace detail {

inline const char* family_name(WallFamily f) {
  switch (f) {
    case WallFamily::flat: return "flat";
    case WallFamily::parabolic: return "parabolic";
    case WallFamily::cosine: return "cosine";
  }
  return "flat";
}

// Reads the keys of one config section, recording type errors and unknown keys.
class Section {
 public:
  Section(const json& root, const std::string& name, std::vector<std::string>& errs) : name_(name), errs_(&errs) {
    if (!root.contains(name)) return;
    const json& j = root.at(name);
    if (!j.is_object()) {
      errs.push_back(name + ": must be an object");
      return;
    }
    obj_ = &j;
  }

  template <class T>
  void get(const std::string& key, T& out) {
    known_.push_back(key);
    if (!obj_ || !obj_->contains(key)) return;
    const json& v = obj_->at(key);
    try {
      if constexpr (std::is_same_v<T, int>) {
        if (!v.is_number_integer()) throw std::invalid_argument("expected an integer");
      } else if constexpr (std::is_same_v<T, double>) {
        if (!v.is_number()) throw std::invalid_argument("expected a number");
      } else if constexpr (std::is_same_v<T, bool>) {
        if (!v.is_boolean()) throw std::invalid_argument("expected a boolean");
      } else {
        if (!v.is_string()) throw std::invalid_argument("expected a string");
      }
      out = v.get<T>();
    } catch (const std::exception& e) {
      errs_->push_back(name_ + "." + key + ": " + e.what());
    }
  }

  const json* raw(const std::string& key) {
    known_.push_back(key);
    if (!obj_ || !obj_->contains(key)) return nullptr;
    return &obj_->at(key);
  }

  void finish() {
    if (!obj_) return;
    for (auto it = obj_->begin(); it != obj_->end(); ++it)
      if (std::find(known_.begin(), known_.end(), it.key()) == known_.end())
        errs_->push_back(name_ + ": unknown key '" + it.key() + "'");
  }

 private:
  std::string name_;
  std::vector<std::string>* errs_;
  const json* obj_ = nullptr;
  std::vector<std::string> known_;
};

}  // namespace detail

// Parses and validates a config document; throws ConfigError listing every violation.
inline SimConfig parse_config(const json& root) {
  std::vector<std::string> errs;
  SimConfig c;
  if (!root.is_object()) throw ConfigError({"config must be a JSON object"});
  static const std::vector<std::string> sections = {"params",      "vessel",      "grid",  "stepper",
                                                    "tolerances", "initial_eta", "diagnostics", "output"};
  for (auto it = root.begin(); it != root.end(); ++it)
    if (std::find(sections.begin(), sections.end(), it.key()) == sections.end())
      errs.push_back("unknown section '" + it.key() + "'");

  detail::Section p(root, "params", errs);
  p.get("g", c.params.g);
  p.get("sigma", c.params.sigma);
  p.get("gamma_jump", c.params.gamma_jump);
  p.get("M", c.params.M);
  p.finish();
  for (auto& v : c.params.violations()) errs.push_back("params: " + v);

  detail::Section v(root, "vessel", errs);
  std::string fam = "flat";
  v.get("family", fam);
  v.get("c0", c.vessel.c0);
  v.get("c1", c.vessel.c1);
  v.finish();
  if (fam == "flat") c.vessel.family = WallFamily::flat;
  else if (fam == "parabolic") c.vessel.family = WallFamily::parabolic;
  else if (fam == "cosine") c.vessel.family = WallFamily::cosine;
  else errs.push_back("vessel.family: must be flat, parabolic or cosine");
  if (!std::isfinite(c.vessel.c0) || !std::isfinite(c.vessel.c1)) errs.push_back("vessel: coefficients must be finite");

  detail::Section g(root, "grid", errs);
  g.get("Nx", c.Nx);
  g.get("Ny", c.Ny);
  g.finish();
  if (c.Nx < 8 || c.Nx % 2 != 0) errs.push_back("grid.Nx: must be even and >= 8");
  if (c.Ny < 2) errs.push_back("grid.Ny: must be >= 2");

  detail::Section s(root, "stepper", errs);
  std::string scheme = "semi-implicit", refresh = "auto";
  s.get("dt", c.stepper.dt);
  s.get("t_end", c.stepper.t_end);
  s.get("scheme", scheme);
  s.get("dn_refresh", refresh);
  s.finish();
  if (scheme == "semi-implicit") c.stepper.scheme = Scheme::semi_implicit;
  else if (scheme == "explicit") c.stepper.scheme = Scheme::explicit_euler;
  else errs.push_back("stepper.scheme: must be explicit or semi-implicit");
  if (refresh == "auto") {
    c.stepper.dn_refresh = c.Nx <= 128 ? 1 : 5;
  } else if (refresh == "every-step") {
    c.stepper.dn_refresh = 1;
  } else {
    int k = 0;
    char tail = 0;
    if (std::sscanf(refresh.c_str(), "lagged(%d%c", &k, &tail) == 2 && tail == ')' &&
        refresh == "lagged(" + std::to_string(k) + ")" && k >= 1)
      c.stepper.dn_refresh = k;
    else
      errs.push_back("stepper.dn_refresh: must be auto, every-step or lagged(k) with k >= 1");
  }
  if (!(c.stepper.dt > 0)) errs.push_back("stepper.dt: must be positive");
  if (!(c.stepper.t_end >= 0)) errs.push_back("stepper.t_end: must be >= 0");
  if (c.stepper.dt > 0 && c.stepper.t_end >= 0) {
    try {
      step_count(c.stepper);
    } catch (const std::invalid_argument&) {
      errs.push_back("stepper.t_end: must be an integer multiple of dt");
    }
  }

  detail::Section t(root, "tolerances", errs);
  t.get("detJ_lo", c.stepper.detJ_lo);
  t.get("detJ_hi", c.stepper.detJ_hi);
  t.finish();
  if (!(c.stepper.detJ_lo > 0 && c.stepper.detJ_lo < 1 && c.stepper.detJ_hi > 1))
    errs.push_back("tolerances: need 0 < detJ_lo < 1 < detJ_hi");

  detail::Section e(root, "initial_eta", errs);
  e.get("family", c.initial.family);
  e.get("amplitude", c.initial.amplitude);
  e.get("mode", c.initial.mode);
  e.get("zero_mean", c.initial.zero_mean);
  e.finish();
  if (c.initial.family != "zero" && c.initial.family != "cosine" && c.initial.family != "bulge")
    errs.push_back("initial_eta.family: must be zero, cosine or bulge");
  if (!std::isfinite(c.initial.amplitude)) errs.push_back("initial_eta.amplitude: must be finite");
  if (c.initial.mode < 1) errs.push_back("initial_eta.mode: must be >= 1");

  detail::Section d(root, "diagnostics", errs);
  d.get("delta", c.diag.delta);
  d.get("residual_t_min", c.diag.residual_t_min);
  if (const json* w = d.raw("fit_window")) {
    if (w->is_array() && w->size() == 2 && (*w)[0].is_number() && (*w)[1].is_number()) {
      c.diag.fit_t0 = (*w)[0].get<double>();
      c.diag.fit_t1 = (*w)[1].get<double>();
      if (!(c.diag.fit_t0 >= 0 && c.diag.fit_t1 > c.diag.fit_t0))
        errs.push_back("diagnostics.fit_window: need 0 <= t0 < t1");
    } else if (!w->is_null()) {
      errs.push_back("diagnostics.fit_window: must be [t0, t1] or null");
    }
  }
  d.finish();
  if (!(c.diag.delta >= 0 && c.diag.delta < 1.5)) errs.push_back("diagnostics.delta: must lie in [0, 1.5)");
  if (!(c.diag.residual_t_min >= 0)) errs.push_back("diagnostics.residual_t_min: must be >= 0");

  detail::Section o(root, "output", errs);
  o.get("trajectory", c.output.trajectory);
  o.get("summary", c.output.summary);
  o.get("snapshot_dir", c.output.snapshot_dir);
  o.get("snapshot_stride", c.output.snapshot_stride);
  o.finish();
  if (c.output.snapshot_stride < 0) errs.push_back("output.snapshot_stride: must be >= 0");
  if (c.output.snapshot_stride > 0 && c.output.snapshot_dir.empty())
    errs.push_back("output.snapshot_dir: required when snapshot_stride > 0");
  c.stepper.snapshot_stride = c.output.snapshot_stride;

  if (!errs.empty()) throw ConfigError(errs);
  return c;
}

inline SimConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError({"cannot open config file '" + path + "'"});
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError({std::string("config is not a single JSON document: ") + e.what()});
  }
  return parse_config(j);
}

inline json config_to_json(const SimConfig& c) {
  const int k = c.stepper.dn_refresh;
  return {{"params", {{"g", c.params.g}, {"sigma", c.params.sigma}, {"gamma_jump", c.params.gamma_jump}, {"M", c.params.M}}},
          {"vessel", {{"family", detail::family_name(c.vessel.family)}, {"c0", c.vessel.c0}, {"c1", c.vessel.c1}}},
          {"grid", {{"Nx", c.Nx}, {"Ny", c.Ny}}},
          {"stepper",
           {{"dt", c.stepper.dt},
            {"t_end", c.stepper.t_end},
            {"scheme", c.stepper.scheme == Scheme::explicit_euler ? "explicit" : "semi-implicit"},
            {"dn_refresh", k == 1 ? std::string("every-step") : "lagged(" + std::to_string(k) + ")"}}},
          {"tolerances", {{"detJ_lo", c.stepper.detJ_lo}, {"detJ_hi", c.stepper.detJ_hi}}},
          {"initial_eta",
           {{"family", c.initial.family}, {"amplitude", c.initial.amplitude}, {"mode", c.initial.mode},
            {"zero_mean", c.initial.zero_mean}}},
          {"diagnostics",
           {{"delta", c.diag.delta},
            {"residual_t_min", c.diag.residual_t_min},
            {"fit_window", c.diag.fit_t0 >= 0 ? json::array({c.diag.fit_t0, c.diag.fit_t1}) : json(nullptr)}}},
          {"output",
           {{"trajectory", c.output.trajectory},
            {"summary", c.output.summary},
            {"snapshot_dir", c.output.snapshot_dir},
            {"snapshot_stride", c.output.snapshot_stride}}}};
}

inline GridFn1D initial_eta(const InitialEta& e, int N) {
  const double a = e.amplitude, k = e.mode * std::numbers::pi;
  if (e.family == "zero") return GridFn1D(N);
  if (e.family == "bulge") return GridFn1D::sample(N, [&](double x) { return a * (1 - x * x); });
  return GridFn1D::sample(N, [&](double x) { return a * std::cos(k * x); });
}

// ---- CSV ----

inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline void write_csv_row(std::ostream& os, const std::vector<double>& row) {
  for (std::size_t k = 0; k < row.size(); ++k) {
    if (k) os << ',';
    os << format_double(row[k]);
  }
  os << '\n';
}

inline void write_csv_header(std::ostream& os, const std::vector<std::string>& cols) {
  for (std::size_t k = 0; k < cols.size(); ++k) {
    if (k) os << ',';
    os << cols[k];
  }
  os << '\n';
}

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  int column(const std::string& name) const {
    for (std::size_t k = 0; k < header.size(); ++k)
      if (header[k] == name) return static_cast<int>(k);
    throw std::invalid_argument("csv: missing column '" + name + "'");
  }
};

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

inline CsvTable read_csv(std::istream& in, const std::string& what = "csv") {
  CsvTable t;
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument(what + ": empty file");
  t.header = split_csv_line(line);
  long lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto cells = split_csv_line(line);
    if (cells.size() != t.header.size())
      throw std::invalid_argument(what + ":" + std::to_string(lineno) + ": expected " +
                                  std::to_string(t.header.size()) + " fields, got " + std::to_string(cells.size()));
    std::vector<double> row(cells.size());
    for (std::size_t k = 0; k < cells.size(); ++k) {
      char* end = nullptr;
      row[k] = std::strtod(cells[k].c_str(), &end);
      if (cells[k].empty() || *end != '\0')
        throw std::invalid_argument(what + ":" + std::to_string(lineno) + ": bad number '" + cells[k] + "'");
    }
    t.rows.push_back(std::move(row));
  }
  return t;
}

inline CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open '" + path + "'");
  return read_csv(in, path);
}

// Streams trajectory rows as they are produced.
class TrajectoryWriter {
 public:
  explicit TrajectoryWriter(const std::string& path) : out_(path) {
    if (!out_) throw std::runtime_error("cannot write '" + path + "'");
    write_csv_header(out_, trajectory_columns());
  }
  void write(const DiagnosticsRecord& r) { write_csv_row(out_, record_values(r)); }

 private:
  std::ofstream out_;
};

inline std::vector<DiagnosticsRecord> records_from_csv(const CsvTable& t) {
  const auto& cols = trajectory_columns();
  if (t.header.size() < cols.size()) throw std::invalid_argument("trajectory: too few columns");
  for (std::size_t k = 0; k < cols.size(); ++k)
    if (t.header[k] != cols[k]) throw std::invalid_argument("trajectory: column " + std::to_string(k + 1) + " must be '" + cols[k] + "'");
  std::vector<DiagnosticsRecord> recs;
  for (const auto& row : t.rows) recs.push_back(record_from_values({row.begin(), row.begin() + cols.size()}));
  return recs;
}

// Ratios appended by `diagnose`: (frakE+frakF)/frakE, frakE/E_par, log E_par.
inline const std::vector<std::string>& derived_columns() {
  static const std::vector<std::string> c = {"sandwich_ratio", "comparison_ratio", "log_E_par"};
  return c;
}

inline std::vector<double> derived_values(const DiagnosticsRecord& r) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  return {r.frakE > 0 ? (r.frakE + r.frakF) / r.frakE : nan, r.E_par > 0 ? r.frakE / r.E_par : nan,
          r.E_par > 0 ? std::log(r.E_par) : nan};
}

// ---- stationary output ----

inline void write_stationary_csv(const std::string& path, const StationaryState& st) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  write_csv_header(out, {"x", "h_s", "hs_prime", "h_w"});
  for (int i = 0; i < st.h_s.size(); ++i) write_csv_row(out, {st.h_s.x(i), st.h_s[i], st.hs_prime[i], st.h_w[i]});
}

inline json stationary_summary(const StationaryState& st, const PhysParams& p) {
  return {{"N", st.h_s.N()},
          {"phi_s", st.phi_s},
          {"omega", st.omega},
          {"cos_omega", std::cos(st.omega)},
          {"young_target", p.gamma_jump / p.sigma},
          {"young_residual", std::abs(std::cos(st.omega) - p.gamma_jump / p.sigma)},
          {"mass_residual", st.mass_residual},
          {"h_s_min", *std::min_element(st.h_s.v.begin(), st.h_s.v.end())},
          {"h_s_max", *std::max_element(st.h_s.v.begin(), st.h_s.v.end())}};
}

// ---- snapshots: little-endian float64 blob plus JSON header ----

inline void write_f64_le(std::ostream& os, const std::vector<double>& v) {
  for (double d : v) {
    auto u = std::bit_cast<std::uint64_t>(d);
    if constexpr (std::endian::native == std::endian::big) u = __builtin_bswap64(u);
    os.write(reinterpret_cast<const char*>(&u), 8);
  }
}

inline std::vector<double> read_f64_le(std::istream& is, std::size_t n) {
  std::vector<double> v(n);
  for (auto& d : v) {
    std::uint64_t u = 0;
    if (!is.read(reinterpret_cast<char*>(&u), 8)) throw std::invalid_argument("snapshot: truncated data");
    if constexpr (std::endian::native == std::endian::big) u = __builtin_bswap64(u);
    d = std::bit_cast<double>(u);
  }
  return v;
}

struct Snapshot {
  int nx = 0, ny = 0;
  double t = 0;
  long step = 0;
  std::map<std::string, std::vector<double>> fields;
};

// Writes <dir>/snap_<step>.bin and .json; returns the header path.
inline std::string write_snapshot(const std::string& dir, const SimState& st, const Mesh& m) {
  std::filesystem::create_directories(dir);
  char name[32];
  std::snprintf(name, sizeof name, "snap_%06ld", st.step);
  const std::string base = (std::filesystem::path(dir) / name).string();
  const std::vector<std::pair<std::string, const std::vector<double>*>> fields = {
      {"eta", &st.eta.v}, {"u", &st.u.v}, {"Phi", &st.Phi.v}, {"X", &m.X}, {"Y", &m.Y}};
  std::ofstream bin(base + ".bin", std::ios::binary);
  json hdr = {{"nx", m.nx}, {"ny", m.ny}, {"t", st.t}, {"step", st.step}, {"dtype", "float64-le"},
              {"data", std::string(name) + ".bin"}};
  for (const auto& [n, v] : fields) {
    hdr["fields"].push_back(n);
    hdr["lengths"].push_back(v->size());
    write_f64_le(bin, *v);
  }
  std::ofstream(base + ".json") << hdr.dump(2) << '\n';
  return base + ".json";
}

inline Snapshot read_snapshot(const std::string& header_path) {
  std::ifstream in(header_path);
  if (!in) throw std::invalid_argument("cannot open '" + header_path + "'");
  json h = json::parse(in);
  Snapshot s;
  s.nx = h.at("nx");
  s.ny = h.at("ny");
  s.t = h.at("t");
  s.step = h.at("step");
  auto bin_path = std::filesystem::path(header_path).parent_path() / h.at("data").get<std::string>();
  std::ifstream bin(bin_path, std::ios::binary);
  if (!bin) throw std::invalid_argument("cannot open '" + bin_path.string() + "'");
  for (std::size_t k = 0; k < h.at("fields").size(); ++k)
    s.fields[h["fields"][k]] = read_f64_le(bin, h.at("lengths")[k].get<std::size_t>());
  return s;
}

// ---- summaries ----

inline json to_json_number(double v) { return std::isfinite(v) ? json(v) : json(format_double(v)); }

inline json summary_json(const TrajectorySummary& s) {
  json j = {{"E_phys_monotone", s.E_phys_monotone},
            {"sandwich_min", to_json_number(s.sandwich_min)},
            {"sandwich_max", to_json_number(s.sandwich_max)},
            {"comparison_min", to_json_number(s.comparison_min)},
            {"comparison_max", to_json_number(s.comparison_max)},
            {"max_residual_energy", to_json_number(s.max_residual_energy)},
            {"max_residual_higher_1", to_json_number(s.max_residual_higher_1)},
            {"max_residual_higher_2", to_json_number(s.max_residual_higher_2)},
            {"max_mean_trace", to_json_number(s.max_mean_trace)},
            {"max_phi_ratio", to_json_number(s.max_phi_ratio)},
            {"mass_drift", to_json_number(s.mass_drift)},
            {"breakdown", s.breakdown}};
  if (s.decay_ok)
    j["decay"] = {{"lambda", s.decay.lambda}, {"r_squared", s.decay.r_squared}, {"t0", s.decay.t0},
                  {"t1", s.decay.t1}, {"points", s.decay.points}};
  else
    j["decay"] = {{"error", s.decay_error}};
  return j;
}

inline TrajectorySummary summarize(const std::vector<DiagnosticsRecord>& recs, const DiagOptions& d) {
  return summarize(recs, d.residual_t_min, d.fit_t0, d.fit_t1);
}

// Runs a validated config end to end, writing trajectory, snapshots and summary.
inline RunResult simulate(const SimConfig& c, json* summary_out = nullptr) {
  Setup s(c.params, c.vessel, c.Nx, c.Ny);
  TrajectoryWriter tw(c.output.trajectory);
  SnapshotSink snap;
  if (c.output.snapshot_stride > 0)
    snap = [&](const SimState& st) { write_snapshot(c.output.snapshot_dir, st, s.mesh); };
  DiagConfig dc;
  dc.delta = c.diag.delta;
  auto res = run(s, c.stepper, initial_eta(c.initial, c.Nx), dc, [&](const DiagnosticsRecord& r) { tw.write(r); },
                 snap, c.initial.zero_mean);
  json j = summary_json(summarize(res.records, c.diag));
  j["status"] = res.status;
  if (!res.message.empty()) j["message"] = res.message;
  j["mean_removed"] = res.mean_removed;
  j["steps"] = res.steps;
  j["records"] = res.records.size();
  j["config"] = config_to_json(c);
  if (!c.output.summary.empty()) std::ofstream(c.output.summary) << j.dump(2) << '\n';
  if (summary_out) *summary_out = j;
  return res;
}

}  // namespace muskat
