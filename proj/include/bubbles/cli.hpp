#pragma once

#include "bubbles/asymptotics.hpp"
#include "bubbles/bubble_geometry.hpp"
#include "bubbles/locator.hpp"
#include "bubbles/metric_chart.hpp"
#include "bubbles/oracle.hpp"

#include <charconv>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace bubbles::cli {

struct ConfigError : ParameterError {
  using ParameterError::ParameterError;
};

enum ExitCode { kSuccess = 0, kVerificationFailed = 1, kConfigError = 2, kNumericalError = 3 };

// Flat key = value configuration.  '#' starts a comment; lists are comma separated and
// list-of-vectors use ';' between entries.
struct RunConfig {
  ChartSpec chart;
  BubbleParams bubble{2, 1.0, 3.0, 2.0};
  Vec point = Vec::Zero(3);
  Vec axis = Vec::Unit(3, 2);
  std::vector<double> rho{0.2, 0.14, 0.1, 0.07, 0.05};
  OracleOptions oracle;
  std::vector<std::string> quantities{"area", "V1", "V2", "H", "conormal", "phi"};
  bool perturbed = false;
  std::uint64_t seed = 12345;
  double exact_floor = 1e-11;
  double field_amplitude = 0.0;
  std::vector<Vec> curvature_points;
  std::vector<Vec> seeds;
  double predict_rho = 0.05;
  double tol = 1e-8;
  int max_iter = 60;
  std::optional<double> delta0, delta1;
};

inline const std::set<std::string>& known_keys() {
  static const std::set<std::string> k{
      "chart.family",    "chart.dim",         "chart.radius",      "chart.bumps",        "chart.factors",
      "chart.half_width", "chart.finite_difference", "chart.fd_step", "bubble.m",          "bubble.H",
      "point",           "axis",              "rho",               "grid.polar",         "grid.sphere",
      "geodesic.steps",  "verify.quantities", "verify.perturbed",  "verify.seed",        "verify.exact_floor",
      "verify.field_amplitude", "curvature.points", "predict.seeds", "predict.rho",     "locator.tol",
      "locator.max_iter", "locator.delta0",   "locator.delta1"};
  return k;
}

namespace detail {

inline std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  return s.substr(a, s.find_last_not_of(" \t\r") - a + 1);
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, sep)) out.push_back(trim(cur));
  return out;
}

inline double to_double(const std::string& key, const std::string& s) {
  double v = 0.0;
  const auto t = trim(s);
  const auto r = std::from_chars(t.data(), t.data() + t.size(), v);
  if (r.ec != std::errc() || r.ptr != t.data() + t.size() || !std::isfinite(v))
    throw ConfigError(key + ": not a finite number: '" + s + "'");
  return v;
}

inline long to_int(const std::string& key, const std::string& s, long lo, long hi) {
  long v = 0;
  const auto t = trim(s);
  const auto r = std::from_chars(t.data(), t.data() + t.size(), v);
  if (r.ec != std::errc() || r.ptr != t.data() + t.size()) throw ConfigError(key + ": not an integer: '" + s + "'");
  if (v < lo || v > hi) throw ConfigError(key + ": out of range [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
  return v;
}

inline bool to_bool(const std::string& key, const std::string& s) {
  const auto t = trim(s);
  if (t == "true" || t == "1") return true;
  if (t == "false" || t == "0") return false;
  throw ConfigError(key + ": expected true or false");
}

inline std::vector<double> to_list(const std::string& key, const std::string& s) {
  std::vector<double> v;
  for (const auto& p : split(s, ',')) v.push_back(to_double(key, p));
  if (v.empty()) throw ConfigError(key + ": empty list");
  return v;
}

inline Vec to_vec(const std::string& key, const std::string& s) {
  const auto v = to_list(key, s);
  if (v.size() > static_cast<std::size_t>(kMaxDim)) throw ConfigError(key + ": too many components");
  Vec x(static_cast<int>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) x[i] = v[i];
  return x;
}

inline std::vector<Vec> to_vecs(const std::string& key, const std::string& s) {
  std::vector<Vec> out;
  for (const auto& p : split(s, ';'))
    if (!p.empty()) out.push_back(to_vec(key, p));
  if (out.empty()) throw ConfigError(key + ": empty list");
  return out;
}

}  // namespace detail

inline RunConfig parse_config(std::istream& is) {
  using namespace detail;
  std::map<std::string, std::string> kv;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    const auto key = trim(line.substr(0, eq)), val = trim(line.substr(eq + 1));
    if (!known_keys().count(key)) throw ConfigError("line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    if (kv.count(key)) throw ConfigError("duplicate key '" + key + "'");
    kv[key] = val;
  }
  RunConfig c;
  auto has = [&](const char* k) { return kv.count(k) > 0; };
  if (has("chart.family")) c.chart.family = kv["chart.family"];
  if (has("chart.dim")) c.chart.dim = static_cast<int>(to_int("chart.dim", kv["chart.dim"], 1, kMaxDim));
  if (has("chart.radius")) c.chart.radius = to_double("chart.radius", kv["chart.radius"]);
  if (has("chart.half_width")) c.chart.half_width = to_double("chart.half_width", kv["chart.half_width"]);
  if (has("chart.finite_difference"))
    c.chart.finite_difference = to_bool("chart.finite_difference", kv["chart.finite_difference"]);
  if (has("chart.fd_step")) {
    c.chart.fd_step = to_double("chart.fd_step", kv["chart.fd_step"]);
    if (!(c.chart.fd_step > 0.0 && c.chart.fd_step < 0.1)) throw ConfigError("chart.fd_step: out of range (0, 0.1)");
  }
  if (has("chart.bumps")) {
    // eps, width, center...
    const int dim = has("chart.dim") ? c.chart.dim
                    : has("bubble.m")  ? static_cast<int>(to_int("bubble.m", kv["bubble.m"], 1, kMaxDim - 1)) + 1
                                       : c.chart.dim;
    for (const auto& e : split(kv["chart.bumps"], ';')) {
      if (e.empty()) continue;
      const auto v = to_list("chart.bumps", e);
      if (v.size() != static_cast<std::size_t>(dim) + 2)
        throw ConfigError("chart.bumps: each entry is eps, width, then the center coordinates");
      Vec center(dim);
      for (int i = 0; i < dim; ++i) center[i] = v[2 + i];
      c.chart.bumps.push_back({v[0], center, v[1]});
    }
  }
  if (has("chart.factors")) {
    for (const auto& f : split(kv["chart.factors"], ',')) {
      const auto parts = split(f, ':');
      if (parts.size() < 2 || parts.size() > 3) throw ConfigError("chart.factors: entries are kind:dim[:radius]");
      ProductFactorSpec p;
      p.kind = parts[0];
      p.dim = static_cast<int>(to_int("chart.factors", parts[1], 1, kMaxDim));
      if (parts.size() == 3) p.radius = to_double("chart.factors", parts[2]);
      c.chart.factors.push_back(p);
    }
  }
  if (has("bubble.m")) c.bubble.m = static_cast<int>(to_int("bubble.m", kv["bubble.m"], 1, kMaxDim - 1));
  if (has("bubble.H")) {
    const auto h = to_list("bubble.H", kv["bubble.H"]);
    if (h.size() != 3) throw ConfigError("bubble.H: expected H0, H1, H2");
    c.bubble.H0 = h[0];
    c.bubble.H1 = h[1];
    c.bubble.H2 = h[2];
  }
  try {
    c.bubble.validate();
  } catch (const ParameterError& e) {
    throw ConfigError(std::string("bubble: ") + e.what());
  }
  const int n = c.bubble.m + 1;
  if (!has("chart.dim")) c.chart.dim = n;
  c.point = has("point") ? to_vec("point", kv["point"]) : Vec(Vec::Zero(n));
  c.axis = has("axis") ? to_vec("axis", kv["axis"]) : Vec(Vec::Unit(n, n - 1));
  if (has("rho")) c.rho = to_list("rho", kv["rho"]);
  for (std::size_t i = 0; i < c.rho.size(); ++i) {
    if (!(c.rho[i] > 0.0 && c.rho[i] <= 1.0)) throw ConfigError("rho: entries must lie in (0, 1]");
    if (i && !(c.rho[i] < c.rho[i - 1])) throw ConfigError("rho: entries must decrease strictly");
  }
  if (has("grid.polar")) c.oracle.n_polar = static_cast<int>(to_int("grid.polar", kv["grid.polar"], 4, 256));
  if (has("grid.sphere")) c.oracle.n_sphere = static_cast<int>(to_int("grid.sphere", kv["grid.sphere"], 4, 512));
  if (c.oracle.n_sphere % 2) throw ConfigError("grid.sphere: must be even");
  if (has("geodesic.steps")) c.oracle.steps = static_cast<int>(to_int("geodesic.steps", kv["geodesic.steps"], 1, 10000));
  if (has("verify.quantities")) {
    c.quantities = split(kv["verify.quantities"], ',');
    for (const auto& q : c.quantities)
      if (std::find(verify_quantities().begin(), verify_quantities().end(), q) == verify_quantities().end())
        throw ConfigError("verify.quantities: unknown quantity '" + q + "'");
  }
  if (has("verify.perturbed")) c.perturbed = to_bool("verify.perturbed", kv["verify.perturbed"]);
  if (has("verify.seed"))
    c.seed = static_cast<std::uint64_t>(to_int("verify.seed", kv["verify.seed"], 0, std::numeric_limits<long>::max()));
  if (has("verify.exact_floor")) c.exact_floor = to_double("verify.exact_floor", kv["verify.exact_floor"]);
  if (has("verify.field_amplitude")) c.field_amplitude = to_double("verify.field_amplitude", kv["verify.field_amplitude"]);
  c.curvature_points = has("curvature.points") ? to_vecs("curvature.points", kv["curvature.points"])
                                               : std::vector<Vec>{c.point};
  c.seeds = has("predict.seeds") ? to_vecs("predict.seeds", kv["predict.seeds"]) : std::vector<Vec>{c.point};
  if (has("predict.rho")) {
    c.predict_rho = to_double("predict.rho", kv["predict.rho"]);
    if (!(c.predict_rho > 0.0)) throw ConfigError("predict.rho: must be positive");
  }
  if (has("locator.tol")) c.tol = to_double("locator.tol", kv["locator.tol"]);
  if (has("locator.max_iter")) c.max_iter = static_cast<int>(to_int("locator.max_iter", kv["locator.max_iter"], 1, 10000));
  if (has("locator.delta0")) c.delta0 = to_double("locator.delta0", kv["locator.delta0"]);
  if (has("locator.delta1")) c.delta1 = to_double("locator.delta1", kv["locator.delta1"]);
  if (c.delta0.has_value() != c.delta1.has_value()) throw ConfigError("locator.delta0 and locator.delta1 go together");
  return c;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config file '" + path + "'");
  return parse_config(f);
}

// ---------------------------------------------------------------------------
// Commands.  Each returns named report files; the driver writes them to --out or stdout.

struct CommandResult {
  int exit_code = kSuccess;
  std::vector<std::pair<std::string, std::string>> files;
};

namespace detail {

inline MetricChart chart_for(const RunConfig& c) {
  try {
    auto chart = builtin_chart(c.chart);
    if (chart.dim() != c.bubble.m + 1) throw ConfigError("chart.dim must equal bubble.m + 1");
    return chart;
  } catch (const ConfigError&) {
    throw;
  } catch (const ParameterError& e) {
    throw ConfigError(std::string("chart: ") + e.what());
  }
}

inline void require_dim(const Vec& v, int n, const char* what) {
  if (v.size() != n) throw ConfigError(std::string(what) + ": expected " + std::to_string(n) + " components");
}

inline std::string vec_csv(const Vec& v) {
  std::string s;
  for (int i = 0; i < v.size(); ++i) s += (i ? "," : "") + format_double(v[i]);
  return s;
}

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char ch : s) q += ch == '"' ? std::string("\"\"") : std::string(1, ch);
  return q + "\"";
}

inline std::string vec_json(const Vec& v) { return "[" + vec_csv(v) + "]"; }

}  // namespace detail

inline CommandResult cmd_geometry(const RunConfig& c) {
  using detail::vec_csv;
  const auto b = solve_standard_bubble(c.bubble);
  std::ostringstream os;
  auto row = [&](const std::string& k, double v) { os << k << ',' << format_double(v) << '\n'; };
  os << "key,value\n";
  row("m", b.m());
  for (int s = 0; s < 3; ++s) {
    const auto i = std::to_string(s);
    row("R" + i, b.R[s]);
    row("phi" + i, b.phi[s]);
    row("center" + i, b.c[s]);
    row("P" + i, b.P[s]);
    row("area" + i, b.area[s]);
  }
  row("neck_radius", b.r);
  row("V1", b.V1);
  row("V2", b.V2);
  const auto nu = conormals_at_neck(b);
  row("conormal_residual", (nu[0] + nu[1] + nu[2]).norm());
  return {kSuccess, {{"geometry.csv", os.str()}}};
}

inline CommandResult cmd_constants(const RunConfig& c) {
  const auto b = solve_standard_bubble(c.bubble);
  const auto rc = reduced_constants(b);
  const auto ref1 = reference_constants(b);
  const auto ref2 = reference_constants_with(b, [](int k, double x) { return sine_power_integral_quadrature(k, x); });
  std::ostringstream os;
  auto row = [&](const std::string& k, double v) { os << k << ',' << format_double(v) << '\n'; };
  os << "key,value\n";
  row("symmetric", b.symmetric() ? 1 : 0);
  row("A", rc.A);
  row("B", rc.B);
  for (int s = 0; s < 3; ++s) {
    row("A_sheet" + std::to_string(s), rc.per_sheet[s][0]);
    row("B_sheet" + std::to_string(s), rc.per_sheet[s][1]);
  }
  row("reference_A_recursion", ref1.A);
  row("reference_B_recursion", ref1.B);
  row("reference_A_quadrature", ref2.A);
  row("reference_B_quadrature", ref2.B);
  return {kSuccess, {{"constants.csv", os.str()}}};
}

inline CommandResult cmd_curvature(const RunConfig& c) {
  const auto chart = detail::chart_for(c);
  const int n = chart.dim();
  std::ostringstream os;
  for (int i = 0; i < n; ++i) os << 'x' << i << ',';
  os << "sc";
  for (int i = 0; i < n; ++i) os << ",ric_eig" << i;
  os << ",pair_symmetry_residual,bianchi_residual\n";
  for (const auto& p : c.curvature_points) {
    detail::require_dim(p, n, "curvature.points");
    const auto curv = curvature_at(chart, p, Vec::Unit(n, n - 1), false);
    const Vec eig = Eigen::SelfAdjointEigenSolver<Mat>(curv.ricci).eigenvalues();
    double sym = 0.0, bianchi = 0.0;
    const auto& R = curv.riemann;
    for (int a = 0; a < n; ++a)
      for (int bb = 0; bb < n; ++bb)
        for (int cc = 0; cc < n; ++cc)
          for (int d = 0; d < n; ++d) {
            sym = std::max({sym, std::abs(R(a, bb, cc, d) + R(bb, a, cc, d)), std::abs(R(a, bb, cc, d) - R(cc, d, a, bb))});
            bianchi = std::max(bianchi, std::abs(R(a, bb, cc, d) + R(bb, cc, a, d) + R(cc, a, bb, d)));
          }
    os << detail::vec_csv(p) << ',' << format_double(curv.scalar);
    for (int i = 0; i < n; ++i) os << ',' << format_double(eig[i]);
    os << ',' << format_double(sym) << ',' << format_double(bianchi) << '\n';
  }
  return {kSuccess, {{"curvature.csv", os.str()}}};
}

inline CommandResult cmd_verify(const RunConfig& c, int jobs = 1) {
  const auto chart = detail::chart_for(c);
  const int n = chart.dim();
  detail::require_dim(c.point, n, "point");
  detail::require_dim(c.axis, n, "axis");
  if (c.rho.size() < 3) throw ConfigError("rho: verify needs at least three scales");
  const auto b = solve_standard_bubble(c.bubble);
  const auto curv = curvature_at(chart, c.point, c.axis);
  VerifyOptions opt;
  opt.oracle = c.oracle;
  opt.oracle.jobs = jobs;
  opt.exact_floor = c.exact_floor;
  opt.seed = c.seed;
  opt.field_amplitude = c.field_amplitude;
  auto qs = c.quantities;
  if (c.perturbed)
    for (const char* q : {"area_linear", "volume_linear"})
      if (std::find(qs.begin(), qs.end(), q) == qs.end()) qs.push_back(q);
  std::ostringstream rows, summary;
  write_csv_header(rows);
  summary << "quantity,formula,normalization,claimed_order,threshold,slope,r_squared,pass\n";
  CommandResult res;
  for (const auto& r : verify_expansions(chart, curv, b, qs, c.rho, opt)) {
    const auto& q = r.quantity;
    write_csv(rows, r);
    summary << q << ',' << detail::csv_field(r.formula) << ',' << detail::csv_field(r.normalization) << ',' << r.claimed_order << ','
            << format_double(r.threshold) << ',' << (r.fit.exact ? std::string("inf") : format_double(r.fit.slope))
            << ',' << format_double(r.fit.r_squared) << ',' << (r.pass ? "pass" : "fail") << '\n';
    if (!r.pass) res.exit_code = kVerificationFailed;
  }
  res.files = {{"verify.csv", rows.str()}, {"verify_summary.csv", summary.str()}};
  return res;
}

inline std::string prediction_json(const BubblePrediction& p) {
  using detail::vec_json;
  std::ostringstream os;
  os << "{\"point\":" << vec_json(p.point.coords) << ",\"sc\":" << format_double(p.point.sc)
     << ",\"hessian_eigs\":" << vec_json(p.point.hessian_eigs) << ",\"mu\":" << format_double(p.mu)
     << ",\"multiplicity\":" << p.multiplicity << ",\"axis\":" << vec_json(p.axis_chart)
     << ",\"rho\":" << format_double(p.rho) << ",\"curvatures\":[" << format_double(p.curvatures[0]) << ','
     << format_double(p.curvatures[1]) << ',' << format_double(p.curvatures[2])
     << "],\"phi_leading\":" << format_double(p.phi_leading) << ",\"count\":" << p.count << '}';
  return os.str();
}

inline CommandResult cmd_predict(const RunConfig& c) {
  const auto chart = detail::chart_for(c);
  for (const auto& s : c.seeds) detail::require_dim(s, chart.dim(), "predict.seeds");
  PredictOptions opt;
  opt.tol = c.tol;
  opt.max_iter = c.max_iter;
  if (c.delta0) opt.gap = std::pair{*c.delta0, *c.delta1};
  const auto r = predict(chart, c.seeds, c.predict_rho, c.bubble, opt);
  std::ostringstream os, diag;
  for (const auto& p : r.predictions) os << prediction_json(p) << '\n';
  for (const auto& d : r.diagnostics) diag << d << '\n';
  return {kSuccess, {{"predict.jsonl", os.str()}, {"predict_diagnostics.txt", diag.str()}}};
}

inline const std::vector<std::string>& commands() {
  static const std::vector<std::string> c{"geometry", "constants", "curvature", "verify", "predict"};
  return c;
}

// Runs one command and maps failures to exit codes.  Reports go to out_dir, or to `out` when empty.
inline int run(const std::string& command, const std::string& config_path, const std::string& out_dir, int jobs,
               std::ostream& out, std::ostream& err) {
  try {
    const RunConfig cfg = config_path.empty() ? RunConfig{} : load_config(config_path);
    CommandResult res;
    if (command == "geometry")
      res = cmd_geometry(cfg);
    else if (command == "constants")
      res = cmd_constants(cfg);
    else if (command == "curvature")
      res = cmd_curvature(cfg);
    else if (command == "verify")
      res = cmd_verify(cfg, jobs);
    else if (command == "predict")
      res = cmd_predict(cfg);
    else
      throw ConfigError("unknown command '" + command + "'");
    if (out_dir.empty()) {
      for (const auto& [name, text] : res.files)
        if (!text.empty()) out << "# " << name << '\n' << text;
    } else {
      std::filesystem::create_directories(out_dir);
      for (const auto& [name, text] : res.files) {
        std::ofstream f(std::filesystem::path(out_dir) / name, std::ios::binary);
        if (!f) throw ConfigError("cannot write to '" + out_dir + "'");
        f << text;
      }
    }
    return res.exit_code;
  } catch (const DomainError& e) {
    err << "configuration error: " << e.what() << '\n';
    return kConfigError;
  } catch (const ParameterError& e) {
    err << "configuration error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kNumericalError;
  }
}

}  // namespace bubbles::cli
