#pragma once

#include "bubbles/asymptotics.hpp"
#include "bubbles/bubble_geometry.hpp"
#include "bubbles/metric_chart.hpp"
#include "bubbles/perturbation.hpp"

#include <cstdio>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

namespace bubbles {

// Runs fn(i) for i in [0, n) on up to `jobs` threads.  Each index writes its own slot.
template <class F>
void parallel_for(int n, int jobs, F&& fn) {
  jobs = std::max(1, std::min(jobs, n));
  if (jobs == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(jobs);
  for (int j = 0; j < jobs; ++j)
    pool.emplace_back([&, j] {
      try {
        for (int i = j; i < n; i += jobs) fn(i);
      } catch (...) {
        errors[j] = std::current_exception();
      }
    });
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

struct OracleOptions {
  int n_polar = 24;
  int n_sphere = 48;
  int steps = 40;  // geodesic RK4 steps
  int jobs = 1;
};

struct EmbeddedSample {
  SheetParam param;
  double param_weight = 0.0;
  Vec X;       // unit-scale point in frame components
  Mat Xz;      // d X / d z
  Vec F;       // chart point
  Mat dF;      // chart tangents
  Mat gram;
  double psi = 0.0;  // radial moment of the volume density
  double orient = 1.0;
};

class EmbeddedBubble {
 public:
  EmbeddedBubble(MetricChart chart, OrthoFrame frame, StandardBubble bubble, double rho,
                 std::optional<PerturbationField> pert, OracleOptions opt)
      : chart_(std::move(chart)),
        frame_(std::move(frame)),
        bubble_(std::move(bubble)),
        rho_(rho),
        pert_(std::move(pert)),
        opt_(opt) {}

  const MetricChart& chart() const { return chart_; }
  const OrthoFrame& frame() const { return frame_; }
  const StandardBubble& bubble() const { return bubble_; }
  double rho() const { return rho_; }
  const PerturbationField* perturbation() const { return pert_ ? &*pert_ : nullptr; }
  const OracleOptions& options() const { return opt_; }
  const std::vector<EmbeddedSample>& samples(int sigma) const { return samples_[sigma]; }

  // Geodesic shot of the unit-scale frame point X.
  GeodesicShot shoot_point(const Vec& X) const {
    return shoot(chart_, frame_.base, Vec(rho_ * frame_.E * X), opt_.steps);
  }

  Mat push_tangents(const GeodesicShot& s, const Mat& Xz) const { return s.jacobian * frame_.E * (rho_ * Xz); }

  std::array<std::vector<EmbeddedSample>, 3> samples_;

 private:
  MetricChart chart_;
  OrthoFrame frame_;
  StandardBubble bubble_;
  double rho_;
  std::optional<PerturbationField> pert_;
  OracleOptions opt_;
};

inline EmbeddedBubble embed(const MetricChart& chart, const OrthoFrame& frame, const StandardBubble& bubble, double rho,
                            const PerturbationField* pert = nullptr, OracleOptions opt = {}) {
  if (!(rho > 0.0)) throw ParameterError("rho must be positive");
  if (chart.dim() != bubble.m() + 1) throw ParameterError("chart dimension must be m + 1");
  EmbeddedBubble eb(chart, frame, bubble, rho, pert ? std::optional<PerturbationField>(*pert) : std::nullopt, opt);
  const PerturbationField* f = eb.perturbation();
  for (int s = 0; s < 3; ++s) {
    const auto base = sample_sheet(bubble, s, opt.n_polar, opt.n_sphere);
    auto& out = eb.samples_[s];
    out.resize(base.size());
    parallel_for(static_cast<int>(base.size()), opt.jobs, [&](int k) {
      const auto& smp = base[k];
      EmbeddedSample e;
      e.param = smp.param;
      e.param_weight = smp.param_weight;
      e.X = displaced_point(bubble, s, f, smp.param);
      e.Xz = detail::displaced_tangents(bubble, s, f, smp.param);
      Mat M0(bubble.m() + 1, bubble.m() + 1);
      M0.col(0) = smp.normal;
      M0.rightCols(bubble.m()) = sheet_tangents(bubble, s, smp.param);
      e.orient = M0.determinant() > 0 ? 1.0 : -1.0;
      const auto shot = eb.shoot_point(e.X);
      e.F = shot.end;
      e.dF = eb.push_tangents(shot, e.Xz);
      e.gram = e.dF.transpose() * chart.metric(e.F) * e.dF;
      if (e.gram.determinant() <= 0.0) throw NumericalError("degenerate pullback metric");
      e.psi = shot.radial_moment;
      out[k] = std::move(e);
    });
  }
  return eb;
}

inline EmbeddedBubble embed(const MetricChart& chart, const Vec& p, const Vec& axis, const StandardBubble& bubble,
                            double rho, const PerturbationField* pert = nullptr, OracleOptions opt = {}) {
  return embed(chart, orthonormal_frame(chart, p, axis), bubble, rho, pert, opt);
}

inline std::array<double, 3> measure_area(const EmbeddedBubble& eb) {
  std::array<double, 3> a{};
  for (int s = 0; s < 3; ++s)
    for (const auto& e : eb.samples(s)) a[s] += e.param_weight * std::sqrt(e.gram.determinant());
  return a;
}

// Enclosed volumes from the radial flux of x psi(x), whose divergence is the volume density.
inline std::pair<double, double> measure_volumes(const EmbeddedBubble& eb) {
  const int n = eb.bubble().m() + 1;
  std::array<double, 3> flux{};  // int psi <x, N^sigma> dS in normal coordinates
  for (int s = 0; s < 3; ++s)
    for (const auto& e : eb.samples(s)) {
      Mat D(n, n);
      D.col(0) = e.X;
      D.rightCols(n - 1) = e.Xz;
      flux[s] += e.param_weight * e.orient * e.psi * D.determinant();
    }
  const double scale = std::pow(eb.rho(), n);
  return {-scale * (flux[1] + flux[0]), -scale * (flux[2] - flux[0])};
}

struct MeasuredForms {
  Mat first;   // pullback metric in the sheet coordinates
  Mat second;  // second fundamental form with respect to the image of N^sigma
  double mean_curvature() const { return (first.inverse().cwiseProduct(second)).sum(); }
};

// First and second fundamental forms of the embedded sheet at an interior parameter.
inline MeasuredForms measure_forms(const EmbeddedBubble& eb, int sigma, const SheetParam& z) {
  const auto& b = eb.bubble();
  const int m = b.m(), n = m + 1;
  const double h = detail::kParamStep;
  if (z.t > sheet_extent(b, sigma) - 2 * h) throw ParameterError("mean curvature sample too close to the neck");
  const PerturbationField* f = eb.perturbation();
  auto tangents = [&](const SheetParam& q) {
    const Vec X = displaced_point(b, sigma, f, q);
    return eb.push_tangents(eb.shoot_point(X), detail::displaced_tangents(b, sigma, f, q));
  };
  const Vec X = displaced_point(b, sigma, f, z);
  const auto shot = eb.shoot_point(X);
  const Mat dF = eb.push_tangents(shot, detail::displaced_tangents(b, sigma, f, z));
  std::vector<Mat> dF2(m);  // dF2[j].col(i) = d^2 F / dz_i dz_j
  for (int j = 0; j < m; ++j) dF2[j] = detail::param_d1<Mat>(tangents, z, j, h);
  const Mat G = eb.chart().metric(shot.end);
  const Tensor3 gam = christoffel(eb.chart(), shot.end);
  // G-unit normal oriented along the image of N^sigma
  Eigen::MatrixXd At = dF.transpose();
  Eigen::VectorXd k = Eigen::FullPivLU<Eigen::MatrixXd>(At).kernel().col(0);
  Vec nu = G.inverse() * Vec(k);
  nu /= std::sqrt(nu.dot(G * nu));
  const Vec ref = shot.jacobian * eb.frame().E * sheet_normal(b, sigma, sheet_point(b, sigma, z));
  if (nu.dot(G * ref) < 0) nu = -nu;
  Mat hh(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) {
      Vec a = 0.5 * (dF2[j].col(i) + dF2[i].col(j));
      for (int c = 0; c < n; ++c)
        for (int p = 0; p < n; ++p)
          for (int q = 0; q < n; ++q) a[c] += gam(c, p, q) * dF(p, i) * dF(q, j);
      hh(i, j) = a.dot(G * nu);
    }
  return {dF.transpose() * G * dF, hh};
}

// Mean curvature (trace, normal N^sigma).
inline double measure_mean_curvature(const EmbeddedBubble& eb, int sigma, const SheetParam& z) {
  return measure_forms(eb, sigma, z).mean_curvature();
}

// sup over neck samples of |nu^0 + nu^1 + nu^2|_G.
inline double measure_conormal_defect(const EmbeddedBubble& eb) {
  const auto& b = eb.bubble();
  const int m = b.m();
  const PerturbationField* f = eb.perturbation();
  double worst = 0.0;
  for (const auto& a : neck_params(m, eb.options().n_sphere)) {
    Vec sum;
    Mat G;
    for (int s = 0; s < 3; ++s) {
      SheetParam z = a;
      z.t = sheet_extent(b, s);
      const Vec X = displaced_point(b, s, f, z);
      const auto shot = eb.shoot_point(X);
      const Mat dF = eb.push_tangents(shot, detail::displaced_tangents(b, s, f, z));
      if (s == 0) {
        G = eb.chart().metric(shot.end);
        sum = Vec::Zero(m + 1);
      }
      Vec c = dF.col(0);
      if (m > 1) {
        const Mat Tg = dF.rightCols(m - 1);
        const Mat Gg = Tg.transpose() * G * Tg;
        c -= Tg * Gg.ldlt().solve(Tg.transpose() * G * c);
      }
      sum -= c / std::sqrt(c.dot(G * c));
    }
    worst = std::max(worst, std::sqrt(sum.dot(G * sum)));
  }
  return worst;
}

inline double energy_from(const std::array<double, 3>& area, std::pair<double, double> V, const BubbleParams& p,
                          double rho) {
  return area[0] + area[1] + area[2] - p.H1 / rho * V.first - p.H2 / rho * V.second;
}

inline double measure_energy(const EmbeddedBubble& eb, const BubbleParams& p) {
  return energy_from(measure_area(eb), measure_volumes(eb), p, eb.rho());
}

struct MeanCurvatureSample {
  int sheet;
  SheetParam param;
  double H;
};

struct MeasureReport {
  std::array<double, 3> area{};
  double V1 = 0.0, V2 = 0.0;
  std::vector<MeanCurvatureSample> mean_curvature;
  double conormal_defect = 0.0;
  double energy = 0.0;
  double rho = 0.0;
  BubbleParams params;
};

// Interior parameters used for mean-curvature sampling.
inline std::vector<SheetParam> interior_params(const StandardBubble& b, int sigma) {
  std::vector<SheetParam> out;
  const double ext = sheet_extent(b, sigma);
  for (double frac : {0.3, 0.7})
    for (double a : {0.4, 2.5}) {
      SheetParam z;
      z.t = frac * ext;
      z.a1 = a;
      z.a2 = 0.5 * a;
      z.sign = a < 1.0 ? 1 : -1;
      out.push_back(z);
    }
  return out;
}

inline MeasureReport measure(const EmbeddedBubble& eb, bool with_mean_curvature = true) {
  MeasureReport r;
  r.area = measure_area(eb);
  std::tie(r.V1, r.V2) = measure_volumes(eb);
  r.conormal_defect = measure_conormal_defect(eb);
  r.params = eb.bubble().params;
  r.rho = eb.rho();
  r.energy = energy_from(r.area, {r.V1, r.V2}, r.params, r.rho);
  if (with_mean_curvature)
    for (int s = 0; s < 3; ++s)
      for (const auto& z : interior_params(eb.bubble(), s))
        r.mean_curvature.push_back({s, z, measure_mean_curvature(eb, s, z)});
  return r;
}

inline double phi_from_energy(const MeasureReport& m, const StandardBubble& b, double rho) {
  if (m.rho != rho || m.params.H0 != b.params.H0 || m.params.H1 != b.params.H1 || m.params.H2 != b.params.H2)
    throw ParameterError("measurement was taken for a different bubble or scale");
  return phi_from_energy(m.energy, b, rho);
}

// ---------------------------------------------------------------------------
// Convergence fits.

struct ConvergenceFit {
  std::vector<double> rhos, errors;
  double slope = 0.0;
  double r_squared = 0.0;
  bool exact = false;  // every error vanished: slope reported as +inf
};

inline ConvergenceFit fit_order(const std::vector<double>& rhos, const std::vector<double>& errors) {
  if (rhos.size() != errors.size()) throw ParameterError("fit_order: length mismatch");
  if (rhos.size() < 3) throw ParameterError("fit_order: need at least three points");
  for (std::size_t i = 1; i < rhos.size(); ++i)
    if (!(rhos[i] < rhos[i - 1])) throw ParameterError("fit_order: rho values must decrease strictly");
  ConvergenceFit fit{rhos, errors};
  for (double e : errors)
    if (!(e > 0.0)) {
      fit.exact = true;
      fit.slope = std::numeric_limits<double>::infinity();
      fit.r_squared = 1.0;
      return fit;
    }
  const std::size_t n = rhos.size();
  double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = std::log(rhos[i]), y = std::log(errors[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    syy += y * y;
  }
  const double cov = sxy - sx * sy / n, vx = sxx - sx * sx / n, vy = syy - sy * sy / n;
  fit.slope = cov / vx;
  fit.r_squared = vy > 0 ? std::clamp(cov * cov / (vx * vy), 0.0, 1.0) : 1.0;
  return fit;
}

// ---------------------------------------------------------------------------
// Expansion verification harness.

struct VerifyRow {
  double rho, oracle, expansion, error;
};

struct VerifyReport {
  std::string quantity;
  std::string formula;
  std::string normalization;
  std::vector<VerifyRow> rows;
  ConvergenceFit fit;
  int claimed_order = 3;
  double threshold = 2.7;
  bool pass = false;
};

struct VerifyOptions {
  OracleOptions oracle;
  double exact_floor = 1e-11;   // errors below this everywhere count as exact
  std::uint64_t seed = 12345;   // perturbed quantities
  double field_amplitude = 0.0; // 0 picks the admissibility bound
};

inline const std::vector<std::string>& verify_quantities() {
  static const std::vector<std::string> q{"area",     "V1",       "V2",       "H",    "H_sheet0",    "H_sheet1",
                                          "H_sheet2", "conormal", "phi",      "area_linear", "volume_linear"};
  return q;
}

namespace detail {

inline bool has_vanishing_gradient_terms(const CurvatureAtPoint& c) {
  if (!c.has_nabla) return false;
  double big = 0.0, nab = 0.0;
  const int n = c.dim();
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int d = 0; d < n; ++d)
        for (int e = 0; e < n; ++e) {
          big = std::max(big, std::abs(c.riemann(a, b, d, e)));
          for (int q = 0; q < n; ++q) nab = std::max(nab, std::abs(c.nabla_riemann(q, a, b, d, e)));
        }
  return nab <= 1e-7 * (1.0 + big);
}

inline bool is_linear_quantity(const std::string& q) { return q == "area_linear" || q == "volume_linear"; }

// Report metadata: formula label, normalization and claimed remainder order.
inline VerifyReport describe(const std::string& q, const StandardBubble& b, const CurvatureAtPoint& curv) {
  VerifyReport r;
  r.quantity = q;
  const bool sym = b.symmetric();
  if (q == "area") {
    r.formula = "geodesic area expansion (all sheets)";
    r.normalization = "rho^-m";
    r.claimed_order = sym ? 4 : 3;
  } else if (q == "V1" || q == "V2") {
    r.formula = "geodesic volume expansion";
    r.normalization = "rho^-(m+1)";
    // odd-order terms need a nonzero curvature gradient at p
    r.claimed_order = sym && has_vanishing_gradient_terms(curv) ? 4 : 3;
  } else if (q == "H" || q.rfind("H_sheet", 0) == 0) {
    if (q != "H" && (q.size() != 8 || q[7] < '0' || q[7] > '2')) throw ParameterError("unknown verify quantity: " + q);
    r.formula = q == "H" ? "mean curvature of unperturbed sheets (worst sample)" : "mean curvature of one sheet (worst sample)";
    r.normalization = "rho R H (caps); rho H (disk)";
    r.claimed_order = 3;
  } else if (q == "conormal") {
    r.formula = "equiangularity defect";
    r.normalization = "none";
    r.claimed_order = 2;
  } else if (q == "phi") {
    r.formula = "reduced functional Sc A - Ric(s s) B";
    r.normalization = "6 / (omega_m rho^2)";
    r.claimed_order = sym ? 2 : 1;
  } else if (is_linear_quantity(q)) {
    r.formula = q == "area_linear" ? "first-order area change" : "first-order volume change";
    r.normalization = q == "area_linear" ? "rho^-m" : "rho^-(m+1)";
    r.claimed_order = 2;
  } else {
    throw ParameterError("unknown verify quantity: " + q);
  }
  r.threshold = r.claimed_order - 0.3;
  return r;
}

// Oracle and formula values of an unperturbed quantity from one embedding.
inline std::pair<double, double> verify_cell(const std::string& q, const EmbeddedBubble& eb,
                                             const CurvatureAtPoint& curv) {
  const auto& b = eb.bubble();
  const double rho = eb.rho();
  const int m = b.m(), n = m + 1;
  const double sc = curv.scalar, ric = curv.ricci(n - 1, n - 1);
  if (q == "area") {
    const auto A = measure_area(eb);
    return {(A[0] + A[1] + A[2]) / std::pow(rho, m), geodesic_area_expansion(b).total.value(rho, sc, ric)};
  }
  if (q == "V1" || q == "V2") {
    const auto V = measure_volumes(eb);
    const auto ex = geodesic_volumes_expansion(b);
    const double s = std::pow(rho, m + 1);
    return q == "V1" ? std::pair{V.first / s, ex.V1.value(rho, sc, ric)} : std::pair{V.second / s, ex.V2.value(rho, sc, ric)};
  }
  if (q == "H" || q.rfind("H_sheet", 0) == 0) {
    const int only = q == "H" ? -1 : q[7] - '0';
    double worst = -1.0;
    std::pair<double, double> out;
    for (int s = 0; s < 3; ++s) {
      if (only >= 0 && s != only) continue;
      const double scale = b.is_disk(s) ? rho : rho * b.R[s];
      for (const auto& z : interior_params(b, s)) {
        const double o = scale * measure_mean_curvature(eb, s, z);
        const double f = perturbed_mean_curvature(b, s, nullptr, curv, rho, z);
        if (std::abs(o - f) > worst) {
          worst = std::abs(o - f);
          out = {o, f};
        }
      }
    }
    return out;
  }
  if (q == "conormal") return {measure_conormal_defect(eb), 0.0};
  if (q == "phi") {
    const double psi = measure_energy(eb, b.params);
    return {phi_from_energy(psi, b, rho), reduced_functional_leading(curv, Vec::Unit(n, n - 1), reduced_constants(b))};
  }
  throw ParameterError("unknown verify quantity: " + q);
}

// First-order terms: Richardson-extrapolated central difference of the oracle in the field scale
// against the linear terms of the perturbed expansions.
inline std::pair<double, double> verify_linear_cell(const std::string& q, const MetricChart& chart,
                                                    const CurvatureAtPoint& curv, const StandardBubble& b, double rho,
                                                    const VerifyOptions& opt) {
  const int m = b.m();
  const double amp = opt.field_amplitude > 0 ? opt.field_amplitude : default_admissibility_bound(b);
  const auto field = random_admissible_field(b, opt.seed, amp);
  auto measure_at = [&](double eps) {
    const auto f = field.scaled(eps);
    const auto eb = embed(chart, curv.frame, b, rho, &f, opt.oracle);
    const auto A = measure_area(eb);
    const auto V = measure_volumes(eb);
    return std::array<double, 3>{A[0] + A[1] + A[2], V.first, V.second};
  };
  const double e = 1e-2;
  const auto p1 = measure_at(e), m1 = measure_at(-e), p2 = measure_at(0.5 * e), m2 = measure_at(-0.5 * e);
  std::array<double, 3> d{};
  for (int k = 0; k < 3; ++k) {
    const double c1 = (p1[k] - m1[k]) / (2 * e), c2 = (p2[k] - m2[k]) / e;
    d[k] = (4.0 * c2 - c1) / 3.0;
  }
  const int np = opt.oracle.n_polar, ns = opt.oracle.n_sphere;
  if (q == "area_linear") {
    const auto A1 = perturbed_area_expansion(b, field, curv, rho, np, ns);
    const auto A0 = perturbed_area_expansion(b, field.scaled(0.0), curv, rho, np, ns);
    const double lin = (A1[0] + A1[1] + A1[2]) - (A0[0] + A0[1] + A0[2]);
    const double s = std::pow(rho, m);
    return {d[0] / s, lin / s};
  }
  const auto dV = perturbed_volume_expansion(b, field, rho, np, ns);
  const double s = std::pow(rho, m + 1);
  // V1 and V2 are both checked; the worse of the two is reported
  const double e1 = d[1] / s - dV.first / s, e2 = d[2] / s - dV.second / s;
  return std::abs(e1) >= std::abs(e2) ? std::pair{d[1] / s, dV.first / s} : std::pair{d[2] / s, dV.second / s};
}

inline void finish_report(VerifyReport& r, const std::vector<double>& rhos, const VerifyOptions& opt) {
  std::vector<double> errs;
  for (const auto& row : r.rows) errs.push_back(row.error);
  const bool floor = std::all_of(errs.begin(), errs.end(), [&](double e) { return e < opt.exact_floor; });
  if (floor) std::fill(errs.begin(), errs.end(), 0.0);
  r.fit = fit_order(rhos, errs);
  r.pass = r.fit.exact || r.fit.slope >= r.threshold;
}

}  // namespace detail

// Verifies several quantities over one rho sweep; unperturbed quantities share one embedding per scale.
inline std::vector<VerifyReport> verify_expansions(const MetricChart& chart, const CurvatureAtPoint& curv,
                                                   const StandardBubble& b, const std::vector<std::string>& quantities,
                                                   const std::vector<double>& rhos, const VerifyOptions& opt = {}) {
  std::vector<VerifyReport> reports;
  for (const auto& q : quantities) reports.push_back(detail::describe(q, b, curv));
  if (rhos.size() < 3) throw ParameterError("verification needs at least three scales");
  for (std::size_t i = 1; i < rhos.size(); ++i)
    if (!(rhos[i] < rhos[i - 1])) throw ParameterError("rho values must decrease strictly");
  const bool any_plain = std::any_of(quantities.begin(), quantities.end(),
                                     [](const std::string& q) { return !detail::is_linear_quantity(q); });
  for (double rho : rhos) {
    std::optional<EmbeddedBubble> eb;
    if (any_plain) eb.emplace(embed(chart, curv.frame, b, rho, nullptr, opt.oracle));
    for (auto& r : reports) {
      const auto [o, f] = detail::is_linear_quantity(r.quantity)
                              ? detail::verify_linear_cell(r.quantity, chart, curv, b, rho, opt)
                              : detail::verify_cell(r.quantity, *eb, curv);
      r.rows.push_back({rho, o, f, std::abs(o - f)});
    }
  }
  for (auto& r : reports) detail::finish_report(r, rhos, opt);
  return reports;
}

inline VerifyReport verify_expansion(const MetricChart& chart, const CurvatureAtPoint& curv, const StandardBubble& b,
                                     const std::string& q, const std::vector<double>& rhos,
                                     const VerifyOptions& opt = {}) {
  return verify_expansions(chart, curv, b, {q}, rhos, opt).front();
}

inline std::string format_double(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline void write_csv_header(std::ostream& os) { os << "quantity,rho,oracle,expansion,error,slope_so_far\n"; }

inline void write_csv(std::ostream& os, const VerifyReport& r) {
  for (std::size_t k = 0; k < r.rows.size(); ++k) {
    const auto& row = r.rows[k];
    std::string slope = "nan";
    if (k >= 1) {
      std::vector<double> rh, er;
      bool ok = true;
      for (std::size_t j = 0; j <= k; ++j) {
        rh.push_back(r.rows[j].rho);
        er.push_back(r.rows[j].error);
        ok = ok && r.rows[j].error > 0;
      }
      if (!ok || r.fit.exact) {
        slope = "inf";
      } else {
        const double s = (std::log(er.back()) - std::log(er.front())) / (std::log(rh.back()) - std::log(rh.front()));
        slope = k >= 2 ? format_double(fit_order(rh, er).slope) : format_double(s);
      }
    }
    os << r.quantity << ',' << format_double(row.rho) << ',' << format_double(row.oracle) << ','
       << format_double(row.expansion) << ',' << format_double(row.error) << ',' << slope << '\n';
  }
}

}  // namespace bubbles
