#pragma once

#include "bubbles/bubble_geometry.hpp"
#include "bubbles/metric_chart.hpp"

#include <array>

namespace bubbles {

// value = leading + rho^2 (sc_coeff Sc(p) + ric_coeff Ric(s, s)) in the normalization of the quantity.
struct ExpansionTerms {
  double leading = 0.0;
  double sc_coeff = 0.0;
  double ric_coeff = 0.0;
  int remainder_order = 3;

  double value(double rho, double sc, double ric_ss) const {
    return leading + rho * rho * (sc_coeff * sc + ric_coeff * ric_ss);
  }
  ExpansionTerms& operator+=(const ExpansionTerms& o) {
    leading += o.leading;
    sc_coeff += o.sc_coeff;
    ric_coeff += o.ric_coeff;
    remainder_order = std::min(remainder_order, o.remainder_order);
    return *this;
  }
  ExpansionTerms operator-() const { return {-leading, -sc_coeff, -ric_coeff, remainder_order}; }
};

inline ExpansionTerms operator+(ExpansionTerms a, const ExpansionTerms& b) { return a += b; }
inline ExpansionTerms operator-(ExpansionTerms a, const ExpansionTerms& b) { return a += -b; }

// I_k(x) by Gauss-Legendre quadrature; used as a second, recursion-free evaluation.
inline double sine_power_integral_quadrature(int k, double x) {
  if (k < 0 || !(x >= 0.0) || x > kPi + 1e-15) throw ParameterError("sine_power_integral: domain");
  const auto r = quad::gauss_legendre(48, 0.0, x);
  double s = 0.0;
  for (std::size_t i = 0; i < r.nodes.size(); ++i) s += r.weights[i] * std::pow(std::sin(r.nodes[i]), k);
  return s;
}

// Volume of the region between cap sigma and the neck disk, per rho^{m+1}.
inline ExpansionTerms cap_volume_expansion(const StandardBubble& b, int sigma) {
  if (b.is_disk(sigma)) throw ParameterError("cap_volume_expansion: flat sheet has no cap region");
  const int m = b.m();
  const double om = unit_ball_volume(m), R = b.R[sigma], f = b.phi[sigma];
  const double s = std::sin(f), c = std::cos(f);
  const double I1 = sine_power_integral(m + 1, f), I3 = sine_power_integral(m + 3, f);
  const double pre = -om / 6.0 * std::pow(R, m + 3);
  ExpansionTerms t;
  t.leading = b.P[sigma];
  t.sc_coeff = pre * I3 / (m + 2);
  t.ric_coeff = pre * ((m + 3.0) / (m + 2.0) * I3 - I1 * s * s);
  t.remainder_order = 3;
  (void)c;
  return t;
}

struct VolumeExpansions {
  ExpansionTerms V1, V2;
};

inline VolumeExpansions geodesic_volumes_expansion(const StandardBubble& b) {
  VolumeExpansions v;
  v.V1 = cap_volume_expansion(b, 1);
  v.V2 = cap_volume_expansion(b, 2);
  if (!b.symmetric()) {
    const auto p0 = cap_volume_expansion(b, 0);
    v.V1 += p0;
    v.V2 = v.V2 - p0;
  }
  return v;
}

// The closed form for the symmetric case with the per-sheet factor 3/4 (= sin^2 of 2pi/3).
inline ExpansionTerms symmetric_volume_expansion(int m, double R) {
  const double om = unit_ball_volume(m), x = 2.0 * kPi / 3.0;
  const double I1 = sine_power_integral(m + 1, x), I3 = sine_power_integral(m + 3, x);
  ExpansionTerms t;
  t.leading = om * std::pow(R, m + 1) * I1;
  t.sc_coeff = -om / 6.0 * std::pow(R, m + 3) * I3 / (m + 2);
  t.ric_coeff = -om / 6.0 * std::pow(R, m + 3) * ((m + 3.0) / (m + 2.0) * I3 - 0.75 * I1);
  t.remainder_order = 3;
  return t;
}

// Area of sheet sigma per rho^m.  The curvature correction integrates the tangential trace
// Ric(x, x) - Rm(x, N, N, x) of the ambient curvature.
inline ExpansionTerms sheet_area_expansion(const StandardBubble& b, int sigma) {
  const int m = b.m();
  const double om = unit_ball_volume(m);
  ExpansionTerms t;
  t.leading = b.area[sigma];
  t.remainder_order = 3;
  if (b.is_disk(sigma)) {
    const double k = -om / (6.0 * (m + 2)) * std::pow(b.r, m + 2);
    t.sc_coeff = k;
    t.ric_coeff = -2.0 * k;
    return t;
  }
  const double R = b.R[sigma], f = b.phi[sigma];
  const double s = std::sin(f), c = std::cos(f);
  const double Im = sine_power_integral(m - 1, f), Ip = sine_power_integral(m + 1, f);
  const double pre = -om / 6.0 * std::pow(R, m + 2);
  t.sc_coeff = pre * Ip;
  t.ric_coeff = pre * (m * c * c * Im - std::pow(s, m) * c - c * c * Ip);
  return t;
}

struct AreaExpansions {
  std::array<ExpansionTerms, 3> sheet;
  ExpansionTerms total;
};

inline AreaExpansions geodesic_area_expansion(const StandardBubble& b) {
  AreaExpansions a;
  a.total = ExpansionTerms{0.0, 0.0, 0.0, b.symmetric() ? 4 : 3};
  for (int s = 0; s < 3; ++s) {
    a.sheet[s] = sheet_area_expansion(b, s);
    a.total.leading += a.sheet[s].leading;
    a.total.sc_coeff += a.sheet[s].sc_coeff;
    a.total.ric_coeff += a.sheet[s].ric_coeff;
  }
  return a;
}

// ---------------------------------------------------------------------------
// Reduced functional Phi ~ Sc A - Ric(s, s) B.

struct ReducedConstants {
  double A = 0.0;
  double B = 0.0;
  std::array<std::array<double, 2>, 3> per_sheet{};  // contributions to (A, B); they sum to (A, B)
  bool symmetric = false;
};

inline ReducedConstants reduced_constants(const StandardBubble& b) {
  const int m = b.m();
  const double om = unit_ball_volume(m);
  ReducedConstants rc;
  rc.symmetric = b.symmetric();
  // Phi = (6 / om) sum_sigma [area coefficient - (m / R_sigma) volume coefficient]
  for (int s = 0; s < 3; ++s) {
    const auto a = sheet_area_expansion(b, s);
    double sc = a.sc_coeff, ric = a.ric_coeff;
    if (!b.is_disk(s)) {
      const auto v = cap_volume_expansion(b, s);
      sc -= m / b.R[s] * v.sc_coeff;
      ric -= m / b.R[s] * v.ric_coeff;
    }
    rc.per_sheet[s] = {6.0 / om * sc, -6.0 / om * ric};
    rc.A += rc.per_sheet[s][0];
    rc.B += rc.per_sheet[s][1];
  }
  return rc;
}

// Per-sheet Ricci contribution in closed form: -2/(m+2) r^{m+2} cos(phi).
inline double reduced_ricci_sheet_closed_form(const StandardBubble& b, int sigma) {
  const int m = b.m();
  const double c = b.is_disk(sigma) ? 1.0 : std::cos(b.phi[sigma]);
  return -2.0 / (m + 2) * std::pow(b.r, m + 2) * c;
}

// Constants exactly as displayed in the reference derivation (kept for comparison only).
// Asymmetric: A = sum R^{m+2}(I_{m+1} + m I_{m+3}/(m+2)), B = sum R^{m+2}((2m+1) I_{m+1} - (2m+2)/(m+2) sin^{m+2} cos).
// Symmetric: unit-R coefficients A^sym(m), B^sym(m).
struct ReferenceConstants {
  double A = 0.0, B = 0.0;
};

template <class SinePower>
ReferenceConstants reference_constants_with(const StandardBubble& b, SinePower I) {
  const int m = b.m();
  ReferenceConstants rc;
  if (b.symmetric()) {
    const double x = 2.0 * kPi / 3.0, h = kSqrt3 / 2.0;
    rc.A = std::pow(h, m + 2) / (m + 2) + 2.0 * I(m + 1, x) + m * I(m + 3, x) / (m + 2);
    rc.B = 0.5 * m * I(m - 1, x) + (2.0 * m + 1) / (2.0 * m + 4) * std::pow(h, m) - 1.5 * m * I(m + 1, x) +
           m * (m + 3.0) / (m + 2.0) * I(m + 3, x);
    return rc;
  }
  for (int s = 0; s < 3; ++s) {
    const double R = std::pow(b.R[s], m + 2), f = b.phi[s];
    rc.A += R * (I(m + 1, f) + m * I(m + 3, f) / (m + 2));
    rc.B += R * ((2.0 * m + 1) * I(m + 1, f) - (2.0 * m + 2) / (m + 2) * std::pow(std::sin(f), m + 2) * std::cos(f));
  }
  return rc;
}

inline ReferenceConstants reference_constants(const StandardBubble& b) {
  return reference_constants_with(b, [](int k, double x) { return sine_power_integral(k, x); });
}

inline double reduced_functional_leading(const CurvatureAtPoint& curv, const Vec& axis, const ReducedConstants& rc) {
  if (std::abs(axis.norm() - 1.0) > 1e-10) throw ParameterError("axis must be a unit frame vector");
  return curv.scalar * rc.A - curv.ric(axis, axis) * rc.B;
}

// Flat reference sum_sigma (|Sigma^sigma| - (m / R_sigma) |P^sigma|).
inline double flat_energy(const StandardBubble& b) {
  double e = 0.0;
  for (int s = 0; s < 3; ++s) {
    e += b.area[s];
    if (!b.is_disk(s)) e -= b.m() / b.R[s] * b.P[s];
  }
  return e;
}

// Phi_rho from a measured energy Psi_rho (areas minus H_i / rho times volumes).
inline double phi_from_energy(double psi, const StandardBubble& b, double rho) {
  if (!(rho > 0.0)) throw ParameterError("rho must be positive");
  const int m = b.m();
  return 6.0 / (unit_ball_volume(m) * rho * rho) * (psi / std::pow(rho, m) - flat_energy(b));
}

}  // namespace bubbles
