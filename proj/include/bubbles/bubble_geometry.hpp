#pragma once

#include "bubbles/quadrature.hpp"
#include "bubbles/types.hpp"

#include <array>
#include <limits>
#include <vector>

namespace bubbles {

struct BubbleParams {
  int m = 2;
  double H0 = 0.0, H1 = 1.0, H2 = 1.0;

  bool symmetric() const { return H0 == 0.0; }

  void validate() const {
    if (m < 1) throw ParameterError("sheet dimension m must be >= 1");
    if (!(H1 > 0.0) || !(H2 > 0.0)) throw ParameterError("H1 and H2 must be positive");
    if (H0 < 0.0) throw ParameterError("H0 must be non-negative");
    const double scale = std::max({std::abs(H0), std::abs(H1), std::abs(H2)});
    if (std::abs(H1 - H0 - H2) > 1e-12 * scale) throw ParameterError("balance H1 = H0 + H2 violated");
  }
};

struct StandardBubble {
  BubbleParams params;
  std::array<double, 3> R{};      // R[0] = +inf when symmetric
  std::array<double, 3> phi{};    // phi[0] = 0 when symmetric
  std::array<double, 3> c{};      // axial centers; c[0] unused when symmetric
  std::array<double, 3> P{};      // |P^sigma|, P[0] = 0 when symmetric
  std::array<double, 3> area{};
  double r = 0.0;                 // neck radius
  double V1 = 0.0, V2 = 0.0;

  int m() const { return params.m; }
  bool symmetric() const { return params.symmetric(); }
  bool is_disk(int sigma) const { return sigma == 0 && symmetric(); }
  // +1 for sheet 1 (pole on the +axis side), -1 for sheets 0 and 2
  static int orientation(int sigma) { return sigma == 1 ? 1 : -1; }
  double H(int sigma) const {
    return sigma == 0 ? params.H0 : (sigma == 1 ? params.H1 : params.H2);
  }
};

inline double unit_ball_volume(int m) {
  if (m < 0) throw ParameterError("unit_ball_volume: m must be >= 0");
  return std::pow(kPi, 0.5 * m) / std::tgamma(0.5 * m + 1.0);
}

// I_k(x) = int_0^x sin^k t dt by upward recursion.
inline double sine_power_integral(int k, double x) {
  if (k < 0 || !(x >= 0.0) || x > kPi + 1e-15) throw ParameterError("sine_power_integral: domain");
  const double s = std::sin(x), c = std::cos(x);
  double a = x, b = 1.0 - c;  // I_0, I_1
  if (k == 0) return a;
  if (k == 1) return b;
  double sp = s;  // sin^{j-1}
  for (int j = 2; j <= k; ++j) {
    const double next = (-sp * c + (j - 1) * a) / j;
    a = b;
    b = next;
    sp *= s;
  }
  return b;
}

inline double sheet_area(const StandardBubble& b, int sigma) {
  const int m = b.m();
  const double om = unit_ball_volume(m);
  if (b.is_disk(sigma)) return om * std::pow(b.r, m);
  return m * om * std::pow(b.R[sigma], m) * sine_power_integral(m - 1, b.phi[sigma]);
}

inline std::pair<double, double> enclosed_volumes(const StandardBubble& b) { return {b.V1, b.V2}; }

inline StandardBubble solve_standard_bubble(const BubbleParams& p) {
  p.validate();
  StandardBubble b;
  b.params = p;
  const int m = p.m;
  const double om = unit_ball_volume(m);
  b.R[1] = m / p.H1;
  b.R[2] = m / p.H2;
  if (p.symmetric()) {
    b.R[0] = std::numeric_limits<double>::infinity();
    b.phi = {0.0, 2.0 * kPi / 3.0, 2.0 * kPi / 3.0};
    b.r = 0.5 * kSqrt3 * b.R[1];
  } else {
    b.R[0] = m / p.H0;
    const double R1 = b.R[1], R2 = b.R[2];
    double phi1 = std::atan2(kSqrt3 * R2, R2 - 2.0 * R1);
    // polish on the sine-law residual between sheets 1 and 2
    for (int it = 0; it < 8; ++it) {
      const double f = R1 * std::sin(phi1) - R2 * std::sin(4.0 * kPi / 3.0 - phi1);
      const double df = R1 * std::cos(phi1) + R2 * std::cos(4.0 * kPi / 3.0 - phi1);
      if (df == 0.0) break;
      const double step = f / df;
      phi1 -= step;
      if (std::abs(step) < 1e-17) break;
    }
    b.phi = {2.0 * kPi / 3.0 - phi1, phi1, 4.0 * kPi / 3.0 - phi1};
    b.r = R1 * std::sin(phi1);
  }
  for (int s = 0; s < 3; ++s) {
    if (b.is_disk(s)) continue;
    b.c[s] = -StandardBubble::orientation(s) * b.R[s] * std::cos(b.phi[s]);
    b.P[s] = om * std::pow(b.R[s], m + 1) * sine_power_integral(m + 1, b.phi[s]);
  }
  for (int s = 0; s < 3; ++s) b.area[s] = sheet_area(b, s);
  b.V1 = b.P[1] + b.P[0];
  b.V2 = b.P[2] - b.P[0];
  return b;
}

// Inward conormals at the neck as (radial, axial) pairs.
inline std::array<Eigen::Vector2d, 3> conormals_at_neck(const StandardBubble& b) {
  const auto& f = b.phi;
  return {Eigen::Vector2d(-std::cos(f[0]), -std::sin(f[0])), Eigen::Vector2d(-std::cos(f[1]), std::sin(f[1])),
          Eigen::Vector2d(-std::cos(f[2]), -std::sin(f[2]))};
}

// ---------------------------------------------------------------------------
// Parametrization of the sheets.  Coordinates z = (t, a1, a2): t is the polar
// angle on caps or the radius on the disk; a1, a2 are angles on S^{m-1}.
// For m = 1 the sphere S^0 = {+1, -1} is selected by `sign`.

struct SheetParam {
  double t = 0.0;
  double a1 = 0.0;
  double a2 = 0.0;
  int sign = 1;

  double coord(int i) const { return i == 0 ? t : (i == 1 ? a1 : a2); }
  SheetParam shifted(int i, double h) const {
    SheetParam q = *this;
    (i == 0 ? q.t : (i == 1 ? q.a1 : q.a2)) += h;
    return q;
  }
};

// Unit vector on S^{m-1} inside R^m.
inline Vec sphere_point(int m, const SheetParam& z) {
  Vec th(m);
  switch (m) {
    case 1:
      th[0] = z.sign;
      break;
    case 2:
      th << std::cos(z.a1), std::sin(z.a1);
      break;
    case 3:
      th << std::sin(z.a1) * std::cos(z.a2), std::sin(z.a1) * std::sin(z.a2), std::cos(z.a1);
      break;
    default:
      throw ParameterError("sphere parametrization supports m <= 3");
  }
  return th;
}

// Point Theta of sheet sigma in R^{m+1}; the axis is the last coordinate.
inline Vec sheet_point(const StandardBubble& b, int sigma, const SheetParam& z) {
  const int m = b.m();
  const Vec th = sphere_point(m, z);
  Vec x(m + 1);
  if (b.is_disk(sigma)) {
    x.head(m) = z.t * th;
    x[m] = 0.0;
  } else {
    const double R = b.R[sigma];
    x.head(m) = R * std::sin(z.t) * th;
    x[m] = b.c[sigma] + StandardBubble::orientation(sigma) * R * std::cos(z.t);
  }
  return x;
}

// d theta / d a_k on S^{m-1}, as columns (m x (m-1)).
inline Mat sphere_tangents(int m, const SheetParam& z) {
  Mat T = Mat::Zero(m, std::max(m - 1, 1));
  if (m == 2) {
    T(0, 0) = -std::sin(z.a1);
    T(1, 0) = std::cos(z.a1);
  } else if (m == 3) {
    T.col(0) << std::cos(z.a1) * std::cos(z.a2), std::cos(z.a1) * std::sin(z.a2), -std::sin(z.a1);
    T.col(1) << -std::sin(z.a1) * std::sin(z.a2), std::sin(z.a1) * std::cos(z.a2), 0.0;
  } else if (m != 1) {
    throw ParameterError("sphere parametrization supports m <= 3");
  }
  return T;
}

// Coordinate tangents d x / d z_i of sheet sigma, columns (t, a1, a2) truncated to m.
inline Mat sheet_tangents(const StandardBubble& b, int sigma, const SheetParam& z) {
  const int m = b.m();
  const Vec th = sphere_point(m, z);
  const Mat Ta = sphere_tangents(m, z);
  Mat T = Mat::Zero(m + 1, m);
  if (b.is_disk(sigma)) {
    T.col(0).head(m) = th;
    for (int k = 1; k < m; ++k) T.col(k).head(m) = z.t * Ta.col(k - 1);
    return T;
  }
  const double R = b.R[sigma];
  const int o = StandardBubble::orientation(sigma);
  T.col(0).head(m) = R * std::cos(z.t) * th;
  T(m, 0) = -o * R * std::sin(z.t);
  for (int k = 1; k < m; ++k) T.col(k).head(m) = R * std::sin(z.t) * Ta.col(k - 1);
  return T;
}

inline Vec sheet_center(const StandardBubble& b, int sigma) {
  Vec C = Vec::Zero(b.m() + 1);
  if (!b.is_disk(sigma)) C[b.m()] = b.c[sigma];
  return C;
}

// Unit normal with the orientation N^1 = N^0 + N^2 at the neck (into B1 for sheets 0, 1).
inline Vec sheet_normal(const StandardBubble& b, int sigma, const Vec& x) {
  const int m = b.m();
  if (b.is_disk(sigma)) {
    Vec n = Vec::Zero(m + 1);
    n[m] = 1.0;
    return n;
  }
  return (sheet_center(b, sigma) - x) / b.R[sigma];
}

inline double sheet_extent(const StandardBubble& b, int sigma) {
  return b.is_disk(sigma) ? b.r : b.phi[sigma];
}

struct SurfaceSample {
  int sheet = 0;
  SheetParam param;
  Vec position;
  Vec normal;
  double weight = 0.0;        // m-area element times quadrature weight
  double param_weight = 0.0;  // quadrature weight in the coordinates (t, a1, a2)
};

struct SphereNode {
  SheetParam angles;
  double weight;        // weight of the S^{m-1} measure
  double param_weight;  // weight in the angle coordinates
};

// Product rule on S^{m-1}: trapezoid in azimuth, Gauss-Legendre in the polar angle for m = 3.
inline std::vector<SphereNode> sphere_rule(int m, int n_sphere) {
  std::vector<SphereNode> out;
  if (m == 1) {
    for (int s : {1, -1}) {
      SheetParam z;
      z.sign = s;
      out.push_back({z, 1.0, 1.0});
    }
  } else if (m == 2) {
    const auto tr = quad::trapezoid_periodic(n_sphere);
    for (int i = 0; i < n_sphere; ++i) {
      SheetParam z;
      z.a1 = tr.nodes[i];
      out.push_back({z, tr.weights[i], tr.weights[i]});
    }
  } else if (m == 3) {
    const int nb = std::max(4, n_sphere / 2);
    const auto gl = quad::gauss_legendre(nb, 0.0, kPi);
    const auto tr = quad::trapezoid_periodic(n_sphere);
    for (int i = 0; i < nb; ++i)
      for (int j = 0; j < n_sphere; ++j) {
        SheetParam z;
        z.a1 = gl.nodes[i];
        z.a2 = tr.nodes[j];
        const double pw = gl.weights[i] * tr.weights[j];
        out.push_back({z, pw * std::sin(z.a1), pw});
      }
  } else {
    throw ParameterError("sphere rule supports m <= 3");
  }
  return out;
}

inline std::vector<SurfaceSample> sample_sheet(const StandardBubble& b, int sigma, int n_polar, int n_sphere) {
  if (n_polar < 4 || n_sphere < 4) throw ParameterError("sample_sheet: grid sizes must be >= 4");
  if (sigma < 0 || sigma > 2) throw ParameterError("sample_sheet: sheet index");
  const int m = b.m();
  const auto sph = sphere_rule(m, n_sphere);
  const auto gl = quad::gauss_legendre(n_polar, 0.0, sheet_extent(b, sigma));
  std::vector<SurfaceSample> out;
  out.reserve(gl.nodes.size() * sph.size());
  for (std::size_t i = 0; i < gl.nodes.size(); ++i) {
    const double t = gl.nodes[i];
    const double jac = b.is_disk(sigma) ? std::pow(t, m - 1)
                                        : std::pow(b.R[sigma], m) * std::pow(std::sin(t), m - 1);
    for (const auto& node : sph) {
      SurfaceSample s;
      s.sheet = sigma;
      s.param = node.angles;
      s.param.t = t;
      s.position = sheet_point(b, sigma, s.param);
      s.normal = sheet_normal(b, sigma, s.position);
      s.weight = gl.weights[i] * node.weight * jac;
      s.param_weight = gl.weights[i] * node.param_weight;
      out.push_back(std::move(s));
    }
  }
  return out;
}

// Points on the neck, one per sphere node.
inline std::vector<SheetParam> neck_params(int m, int n_sphere) {
  std::vector<SheetParam> out;
  for (const auto& node : sphere_rule(m, n_sphere)) out.push_back(node.angles);
  return out;
}

}  // namespace bubbles
