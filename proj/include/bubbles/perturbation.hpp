#pragma once

#include "bubbles/asymptotics.hpp"
#include "bubbles/bubble_geometry.hpp"
#include "bubbles/metric_chart.hpp"
#include "bubbles/quadrature.hpp"

#include <algorithm>
#include <functional>
#include <random>
#include <utility>
#include <vector>

namespace bubbles {

// ---------------------------------------------------------------------------
// Fields on the sheets.  Coordinates are those of the unit-scale bubble in T_pM
// (frame components); the perturbed sheet is Theta + w N + Y.

using ScalarField = std::function<double(const SheetParam&)>;
using VectorField = std::function<Vec(const SheetParam&)>;

struct SheetField {
  ScalarField w;  // normal amplitude along N^sigma
  VectorField Y;  // tangential part, ambient components
};

struct PerturbationField {
  std::array<SheetField, 3> sheet;

  double w(int s, const SheetParam& z) const { return sheet[s].w ? sheet[s].w(z) : 0.0; }
  Vec Y(int s, const SheetParam& z, int n) const { return sheet[s].Y ? sheet[s].Y(z) : Vec(Vec::Zero(n)); }

  PerturbationField scaled(double eps) const {
    PerturbationField f;
    for (int s = 0; s < 3; ++s) {
      if (sheet[s].w) f.sheet[s].w = [g = sheet[s].w, eps](const SheetParam& z) { return eps * g(z); };
      if (sheet[s].Y) f.sheet[s].Y = [g = sheet[s].Y, eps](const SheetParam& z) { return Vec(eps * g(z)); };
    }
    return f;
  }
};

inline Vec displaced_point(const StandardBubble& b, int sigma, const PerturbationField* f, const SheetParam& z) {
  Vec x = sheet_point(b, sigma, z);
  if (!f) return x;
  const Vec N = sheet_normal(b, sigma, x);
  return x + f->w(sigma, z) * N + f->Y(sigma, z, b.m() + 1);
}

namespace detail {

inline constexpr double kParamStep = 1e-3;

template <class T, class F>
T param_d1(const F& f, const SheetParam& z, int i, double h = kParamStep) {
  return T((f(z.shifted(i, -2 * h)) - 8.0 * f(z.shifted(i, -h)) + 8.0 * f(z.shifted(i, h)) - f(z.shifted(i, 2 * h))) /
           (12.0 * h));
}

template <class T, class F>
T param_d2(const F& f, const SheetParam& z, int i, int j, double h = kParamStep) {
  if (i == j)
    return T((-f(z.shifted(i, 2 * h)) + 16.0 * f(z.shifted(i, h)) - 30.0 * f(z) + 16.0 * f(z.shifted(i, -h)) -
              f(z.shifted(i, -2 * h))) /
             (12.0 * h * h));
  auto inner = [&](const SheetParam& q) { return param_d1<T>(f, q, j, h); };
  return param_d1<T>(inner, z, i, h);
}

// Columns d X / d z_i of the displaced sheet.
inline Mat displaced_tangents(const StandardBubble& b, int sigma, const PerturbationField* f, const SheetParam& z) {
  if (!f) return sheet_tangents(b, sigma, z);
  const int m = b.m();
  Mat T(m + 1, m);
  auto X = [&](const SheetParam& q) { return displaced_point(b, sigma, f, q); };
  for (int i = 0; i < m; ++i) T.col(i) = param_d1<Vec>(X, z, i);
  return T;
}

inline Vec tangential_part(const Vec& v, const Vec& N) { return v - v.dot(N) * N; }

}  // namespace detail

// Field generated by an ambient displacement D(x): w = <D, N>, Y = D - <D, N> N.
// Such fields are admissible because all three sheets see the same D on the neck.
inline PerturbationField field_from_displacement(const StandardBubble& b, std::function<Vec(const Vec&)> D) {
  PerturbationField f;
  for (int s = 0; s < 3; ++s) {
    f.sheet[s].w = [b, s, D](const SheetParam& z) {
      const Vec x = sheet_point(b, s, z);
      return D(x).dot(sheet_normal(b, s, x));
    };
    f.sheet[s].Y = [b, s, D](const SheetParam& z) {
      const Vec x = sheet_point(b, s, z);
      return Vec(detail::tangential_part(D(x), sheet_normal(b, s, x)));
    };
  }
  return f;
}

// ---------------------------------------------------------------------------
// Couplings and boundary data.

struct CouplingData {
  double q0 = 0.0, q1 = 0.0, q2 = 0.0;
  // Coefficients actually entering the linearized condition: the curvatures enter as 1/R = H/m.
  std::array<double, 3> per_length(int m) const { return {q0 / m, q1 / m, q2 / m}; }
};

inline CouplingData coupling_constants(const BubbleParams& p) {
  p.validate();
  return {(p.H1 + p.H2) / kSqrt3, (p.H0 - p.H2) / kSqrt3, -(p.H1 + p.H0) / kSqrt3};
}

struct BoundaryData {
  std::vector<double> w0, w1, w2;
  std::array<std::vector<double>, 3> u;
  std::vector<Vec> gamma;  // common Gamma-tangential part
};

inline BoundaryData admissible_closure(const std::vector<double>& w0, const std::vector<double>& w2,
                                       const std::vector<Vec>& gamma) {
  if (w0.size() != w2.size() || (!gamma.empty() && gamma.size() != w0.size()))
    throw ParameterError("admissible_closure: trace grids differ");
  BoundaryData d;
  d.w0 = w0;
  d.w2 = w2;
  d.gamma = gamma;
  const std::size_t n = w0.size();
  d.w1.resize(n);
  for (auto& u : d.u) u.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    d.w1[k] = w0[k] + w2[k];
    d.u[0][k] = (w0[k] + 2.0 * w2[k]) / kSqrt3;
    d.u[1][k] = (w0[k] - w2[k]) / kSqrt3;
    d.u[2][k] = -(2.0 * w0[k] + w2[k]) / kSqrt3;
  }
  return d;
}

// Inward conormal of sheet sigma at the neck point above sphere direction z.
inline Vec neck_conormal(const StandardBubble& b, int sigma, const SheetParam& z) {
  const int m = b.m();
  const auto nu = conormals_at_neck(b)[sigma];
  Vec v(m + 1);
  v.head(m) = nu[0] * sphere_point(m, z);
  v[m] = nu[1];
  return v;
}

inline Vec neck_point(const StandardBubble& b, const SheetParam& z) {
  const int m = b.m();
  Vec x = Vec::Zero(m + 1);
  x.head(m) = b.r * sphere_point(m, z);
  return x;
}

// Largest disagreement among the reconstructed displacements w N + u nu + Y^Gamma.
inline double boundary_junction_residual(const StandardBubble& b, const std::vector<SheetParam>& neck,
                                         const BoundaryData& d) {
  if (neck.size() != d.w0.size()) throw ParameterError("junction residual: grid mismatch");
  double worst = 0.0;
  for (std::size_t k = 0; k < neck.size(); ++k) {
    const Vec x = neck_point(b, neck[k]);
    const std::array<double, 3> w{d.w0[k], d.w1[k], d.w2[k]};
    std::array<Vec, 3> D;
    for (int s = 0; s < 3; ++s) {
      D[s] = w[s] * sheet_normal(b, s, x) + d.u[s][k] * neck_conormal(b, s, neck[k]);
      if (!d.gamma.empty()) D[s] += d.gamma[k];
    }
    worst = std::max({worst, (D[1] - D[0]).norm(), (D[2] - D[0]).norm()});
  }
  return worst;
}

// Same check on a field: the three displaced sheets must share the neck.
inline double junction_residual(const StandardBubble& b, const PerturbationField& f, int n_sphere = 64) {
  double worst = 0.0;
  for (const auto& a : neck_params(b.m(), n_sphere)) {
    std::array<Vec, 3> x;
    for (int s = 0; s < 3; ++s) {
      SheetParam z = a;
      z.t = sheet_extent(b, s);
      x[s] = displaced_point(b, s, &f, z);
    }
    worst = std::max({worst, (x[1] - x[0]).norm(), (x[2] - x[0]).norm()});
  }
  return worst;
}

inline double default_admissibility_bound(const StandardBubble& b) {
  double r = std::min(b.R[1], b.R[2]);
  if (!b.symmetric()) r = std::min(r, b.R[0]);
  return 0.1 * r;
}

// Sup of |w| and |Y| over a sample grid; throws when above delta.
inline double field_sup(const StandardBubble& b, const PerturbationField& f, int n_polar = 12, int n_sphere = 16) {
  double s = 0.0;
  for (int sigma = 0; sigma < 3; ++sigma)
    for (const auto& smp : sample_sheet(b, sigma, n_polar, n_sphere)) {
      s = std::max(s, std::abs(f.w(sigma, smp.param)));
      s = std::max(s, f.Y(sigma, smp.param, b.m() + 1).norm());
    }
  return s;
}

inline void check_admissible(const StandardBubble& b, const PerturbationField& f, double delta) {
  if (field_sup(b, f) > delta) throw ParameterError("perturbation exceeds the admissibility bound");
}

// Random smooth admissible field.  A random affine displacement fixes the neck data; each sheet
// then gets extra normal and tangential parts vanishing on the neck.
inline PerturbationField random_admissible_field(const StandardBubble& b, std::uint64_t seed, double amplitude) {
  const int m = b.m(), n = m + 1;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  auto rvec = [&] {
    Vec v(n);
    for (int i = 0; i < n; ++i) v[i] = gauss(rng);
    return v;
  };
  auto rmat = [&] {
    Mat A(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) A(i, j) = gauss(rng);
    return A;
  };
  const Vec d = rvec();
  const Mat A = rmat();
  std::array<Vec, 3> pw, ew;
  std::array<double, 3> pc{};
  std::array<Mat, 3> EA;
  for (int s = 0; s < 3; ++s) {
    pc[s] = gauss(rng);
    pw[s] = rvec();
    ew[s] = rvec();
    EA[s] = rmat();
  }
  // vanishes exactly on the neck, positive inside the sheet
  auto lambda = [b](int s, const Vec& x) {
    if (b.is_disk(s)) return 1.0 - x.head(b.m()).squaredNorm() / (b.r * b.r);
    const double ct = StandardBubble::orientation(s) * (x[b.m()] - b.c[s]) / b.R[s];
    return ct - std::cos(b.phi[s]);
  };
  PerturbationField f;
  for (int s = 0; s < 3; ++s) {
    f.sheet[s].w = [=](const SheetParam& z) {
      const Vec x = sheet_point(b, s, z);
      const Vec N = sheet_normal(b, s, x);
      return (d + A * x).dot(N) + lambda(s, x) * (pc[s] + pw[s].dot(x));
    };
    f.sheet[s].Y = [=](const SheetParam& z) {
      const Vec x = sheet_point(b, s, z);
      const Vec N = sheet_normal(b, s, x);
      const Vec D = d + A * x + lambda(s, x) * (ew[s] + EA[s] * x);
      return Vec(detail::tangential_part(D, N));
    };
  }
  const double sup = field_sup(b, f);
  return f.scaled(amplitude / sup);
}

// ---------------------------------------------------------------------------
// Killing fields.

struct KillingGenerator {
  bool rotation = false;
  Vec translation;  // used when !rotation
  int i = 0, j = 0;  // rotation in the (e_i, e_j) plane
};

inline std::vector<KillingGenerator> killing_generators(int m) {
  std::vector<KillingGenerator> g;
  for (int k = 0; k <= m; ++k) g.push_back({false, Vec::Unit(m + 1, k), 0, 0});
  for (int k = 0; k < m; ++k) g.push_back({true, Vec(), k, m});
  return g;
}

inline bool is_trivial(const KillingGenerator& g, int m) { return g.rotation && g.i < m && g.j < m; }

inline PerturbationField killing_kernel_field(const StandardBubble& b, const KillingGenerator& g) {
  const int n = b.m() + 1;
  if (g.rotation) {
    if (g.i == g.j || g.i < 0 || g.j < 0 || g.i >= n || g.j >= n) throw ParameterError("bad rotation plane");
    const int i = g.i, j = g.j;
    return field_from_displacement(b, [i, j, n](const Vec& x) {
      Vec v = Vec::Zero(n);
      v[i] = x[j];
      v[j] = -x[i];
      return v;
    });
  }
  if (g.translation.size() != n) throw ParameterError("translation dimension mismatch");
  const Vec e = g.translation;
  return field_from_displacement(b, [e](const Vec&) { return e; });
}

// ---------------------------------------------------------------------------
// Spectral grids.  The polar direction uses Gauss-Legendre nodes on [-ext, ext] with the
// parity extension w(-t, a) = w(t, a + pi), which keeps the pole free of node clustering;
// the grid rows are the positive half.  The azimuth is Fourier (m = 2).

class SheetGrid {
 public:
  SheetGrid(const StandardBubble& b, int sigma, int n_polar, int n_sphere)
      : b_(&b),
        sigma_(sigma),
        polar_(quad::gauss_legendre(2 * n_polar, -sheet_extent(b, sigma), sheet_extent(b, sigma)).nodes) {
    if (b.m() > 2) throw ParameterError("spectral sheet grids support m <= 2");
    if (n_polar < 4 || n_sphere < 4 || n_sphere % 2) throw ParameterError("sheet grid sizes");
    n_ = n_polar;
    std::vector<double> full = polar_.nodes();
    std::sort(full.begin(), full.end());
    polar_ = quad::Barycentric(full);
    t_.assign(full.begin() + n_, full.end());
    D_ = polar_.differentiation_matrix();
    if (b.m() == 2) {
      a_ = quad::trapezoid_periodic(n_sphere).nodes;
      Daa_ = quad::fourier_second_derivative(n_sphere);
    } else {
      a_ = {1.0, -1.0};  // S^0 encoded by sign
      Daa_ = Eigen::MatrixXd::Zero(2, 2);
    }
  }

  int sheet() const { return sigma_; }
  int rows() const { return n_; }
  int cols() const { return static_cast<int>(a_.size()); }
  const std::vector<double>& t() const { return t_; }
  SheetParam param(int i, int k) const { return column_param(k, t_[i]); }
  SheetParam column_param(int k, double t) const {
    SheetParam z;
    z.t = t;
    if (b_->m() == 2)
      z.a1 = a_[k];
    else
      z.sign = a_[k] > 0 ? 1 : -1;
    return z;
  }

  Eigen::MatrixXd sample(const ScalarField& f) const {
    Eigen::MatrixXd W(rows(), cols());
    for (int i = 0; i < rows(); ++i)
      for (int k = 0; k < cols(); ++k) W(i, k) = f(param(i, k));
    return W;
  }

  // Laplace-Beltrami of the unit-scale sheet.
  Eigen::MatrixXd laplacian(const Eigen::MatrixXd& W) const {
    const int m = b_->m();
    const Eigen::MatrixXd We = extend(W);
    const Eigen::MatrixXd Dw = D_ * We;
    const Eigen::MatrixXd Wt = Dw.bottomRows(n_), Wtt = (D_ * Dw).bottomRows(n_);
    const Eigen::MatrixXd Waa = W * Daa_.transpose();
    Eigen::MatrixXd L(rows(), cols());
    const bool disk = b_->is_disk(sigma_);
    const double R = disk ? 1.0 : b_->R[sigma_];
    for (int i = 0; i < rows(); ++i) {
      const double t = t_[i];
      const double s = disk ? t : std::sin(t), c = disk ? 1.0 : std::cos(t);
      for (int k = 0; k < cols(); ++k)
        L(i, k) = (Wtt(i, k) + (m - 1) * c / s * Wt(i, k) + Waa(i, k) / (s * s)) / (R * R);
    }
    return L;
  }

  // Values and inward-conormal derivatives on the neck, one per column.
  Eigen::VectorXd neck_trace(const Eigen::MatrixXd& W) const {
    return (polar_.interpolation_row(sheet_extent(*b_, sigma_)) * extend(W)).transpose();
  }
  Eigen::VectorXd neck_conormal_derivative(const Eigen::MatrixXd& W) const {
    const double scale = b_->is_disk(sigma_) ? 1.0 : b_->R[sigma_];
    return -(polar_.derivative_row(sheet_extent(*b_, sigma_)) * extend(W)).transpose() / scale;
  }

 private:
  // Rows for the nodes -t_{n-1}, ..., -t_0, t_0, ..., t_{n-1}.
  Eigen::MatrixXd extend(const Eigen::MatrixXd& W) const {
    const int c = cols();
    Eigen::MatrixXd E(2 * n_, c);
    E.bottomRows(n_) = W;
    for (int i = 0; i < n_; ++i)
      for (int k = 0; k < c; ++k) E(n_ - 1 - i, k) = W(i, b_->m() == 2 ? (k + c / 2) % c : 1 - k);
    return E;
  }

  const StandardBubble* b_;
  int sigma_;
  int n_ = 0;
  quad::Barycentric polar_;
  std::vector<double> t_, a_;
  Eigen::MatrixXd D_, Daa_;
};

// R Laplacian + m/R on caps, Laplacian on the flat disk.
inline Eigen::MatrixXd jacobi_apply(const StandardBubble& b, const SheetGrid& grid, const Eigen::MatrixXd& W) {
  const int s = grid.sheet();
  const Eigen::MatrixXd L = grid.laplacian(W);
  if (b.is_disk(s)) return L;
  return b.R[s] * L + (b.m() / b.R[s]) * W;
}

struct EquiangularityResidual {
  Eigen::VectorXd first;   // sheets 0 and 1
  Eigen::VectorXd second;  // sheets 1 and 2
  double sup() const { return std::max(first.cwiseAbs().maxCoeff(), second.cwiseAbs().maxCoeff()); }
};

inline EquiangularityResidual linearized_equiangularity_residual(const StandardBubble& b,
                                                                 const std::array<SheetGrid, 3>& grids,
                                                                 const std::array<Eigen::MatrixXd, 3>& W,
                                                                 const CouplingData& q) {
  const auto k = q.per_length(b.m());
  std::array<Eigen::VectorXd, 3> a;
  for (int s = 0; s < 3; ++s) a[s] = grids[s].neck_conormal_derivative(W[s]) + k[s] * grids[s].neck_trace(W[s]);
  return {a[0] + a[1], a[1] + a[2]};
}

inline std::array<SheetGrid, 3> make_grids(const StandardBubble& b, int n_polar, int n_sphere) {
  return {SheetGrid(b, 0, n_polar, n_sphere), SheetGrid(b, 1, n_polar, n_sphere), SheetGrid(b, 2, n_polar, n_sphere)};
}

// ---------------------------------------------------------------------------
// Pointwise expansions of the perturbed sheets.

namespace detail {

struct LocalSheet {
  Vec theta;  // Theta
  Vec N;
  Mat T;      // Theta_i
  Mat g;      // <Theta_i, Theta_j>
  Mat ginv;
};

inline LocalSheet local_sheet(const StandardBubble& b, int sigma, const SheetParam& z) {
  LocalSheet L;
  L.theta = sheet_point(b, sigma, z);
  L.N = sheet_normal(b, sigma, L.theta);
  L.T = sheet_tangents(b, sigma, z);
  L.g = L.T.transpose() * L.T;
  L.ginv = L.g.inverse();
  return L;
}

// Covariant Hessian of w on the unit-scale sheet.
inline Mat sheet_hessian(const StandardBubble& b, int sigma, const ScalarField& w, const SheetParam& z,
                         const LocalSheet& L) {
  const int m = b.m();
  Mat H(m, m);
  if (!w) return Mat::Zero(m, m);
  Vec dw(m);
  for (int i = 0; i < m; ++i) dw[i] = param_d1<double>(w, z, i);
  auto Ti = [&](int i) {
    return [&b, sigma, i](const SheetParam& q) { return Vec(sheet_tangents(b, sigma, q).col(i)); };
  };
  for (int i = 0; i < m; ++i)
    for (int j = 0; j <= i; ++j) {
      const Vec Tij = param_d1<Vec>(Ti(i), z, j);
      const Vec gam = L.ginv * (L.T.transpose() * Tij);
      H(i, j) = param_d2<double>(w, z, i, j) - gam.dot(dw);
      H(j, i) = H(i, j);
    }
  return H;
}

}  // namespace detail

// Pullback of the normal-coordinate metric to the perturbed sheet at scale rho.
inline Mat perturbed_first_form(const StandardBubble& b, int sigma, const PerturbationField* f,
                                const CurvatureAtPoint& curv, double rho, const SheetParam& z) {
  const Vec X = displaced_point(b, sigma, f, z);
  const Mat T = detail::displaced_tangents(b, sigma, f, z);
  return rho * rho * T.transpose() * normal_metric_expansion(curv, rho * X) * T;
}

// Second fundamental form with respect to N^sigma, linear in (w, Y), through relative order rho^2.
inline Mat perturbed_second_form(const StandardBubble& b, int sigma, const PerturbationField* f,
                                 const CurvatureAtPoint& curv, double rho, const SheetParam& z) {
  const int m = b.m();
  const auto L = detail::local_sheet(b, sigma, z);
  Mat h = Mat::Zero(m, m);
  const double invR = b.is_disk(sigma) ? 0.0 : 1.0 / b.R[sigma];
  const double w = f ? f->w(sigma, z) : 0.0;
  h += invR * (1.0 - w * invR) * L.g;
  if (f) {
    h += detail::sheet_hessian(b, sigma, f->sheet[sigma].w, z, L);
    if (f->sheet[sigma].Y) {
      auto Y = [&](const SheetParam& q) { return f->Y(sigma, q, m + 1); };
      Mat dY(m + 1, m);
      for (int i = 0; i < m; ++i) dY.col(i) = detail::param_d1<Vec>(Y, z, i);
      const Mat lie = dY.transpose() * L.T;
      h += invR * (lie + lie.transpose());
    }
  }
  const double r2 = rho * rho;
  h += invR * r2 / 6.0 * curv.rm(L.theta, L.N, L.theta, L.N) * L.g;
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j)
      h(i, j) += r2 / 3.0 *
                 (curv.rm(L.T.col(i), L.N, L.theta, L.T.col(j)) + curv.rm(L.T.col(j), L.N, L.theta, L.T.col(i)));
  return rho * h;
}

// Returns rho R H for caps and rho H for the disk.
inline double perturbed_mean_curvature(const StandardBubble& b, int sigma, const PerturbationField* f,
                                       const CurvatureAtPoint& curv, double rho, const SheetParam& z) {
  const int m = b.m();
  const auto L = detail::local_sheet(b, sigma, z);
  double lap = 0.0, w = 0.0;
  if (f && f->sheet[sigma].w) {
    w = f->w(sigma, z);
    lap = (L.ginv.cwiseProduct(detail::sheet_hessian(b, sigma, f->sheet[sigma].w, z, L))).sum();
  }
  const double r2 = rho * rho;
  if (b.is_disk(sigma)) return lap + 2.0 * r2 / 3.0 * curv.ric(L.theta, L.N);
  const double R = b.R[sigma];
  const Vec C = sheet_center(b, sigma);
  return m + (R * lap + m / R * w) +
         r2 / 3.0 *
             (-curv.ric(L.theta, L.theta) + 2.0 * curv.ric(L.theta, C) -
              (m + 2.0) / (2.0 * R * R) * curv.rm(C, L.theta, L.theta, C));
}

// Integrals of w and div Y over the unit-scale sheet.
struct SheetIntegrals {
  double w = 0.0;
  double divY = 0.0;
};

inline SheetIntegrals sheet_integrals(const StandardBubble& b, int sigma, const PerturbationField& f, int n_polar,
                                      int n_sphere) {
  const int m = b.m();
  SheetIntegrals out;
  // sqrt(g) Y^i in the coordinates; its coordinate divergence is sqrt(g) div Y.
  // For m = 2 the area factor is continued as an odd function of t so stencils may cross the pole.
  auto flux = [&](int i) {
    return [&b, &f, sigma, m, i](const SheetParam& q) {
      const Mat T = sheet_tangents(b, sigma, q);
      const Mat g = T.transpose() * T;
      const Vec Yc = g.ldlt().solve(T.transpose() * f.Y(sigma, q, m + 1));
      const double sign = (m == 2 && q.t < 0.0) ? -1.0 : 1.0;
      return sign * std::sqrt(g.determinant()) * Yc[i];
    };
  };
  for (const auto& s : sample_sheet(b, sigma, n_polar, n_sphere)) {
    out.w += s.weight * f.w(sigma, s.param);
    if (f.sheet[sigma].Y) {
      double d = 0.0;
      for (int i = 0; i < m; ++i) d += detail::param_d1<double>(flux(i), s.param, i);
      out.divY += s.param_weight * d;
    }
  }
  return out;
}

// Areas rho^m [expansion] - rho^m int (m w / R - div Y) per sheet.
inline std::array<double, 3> perturbed_area_expansion(const StandardBubble& b, const PerturbationField& f,
                                                      const CurvatureAtPoint& curv, double rho, int n_polar = 32,
                                                      int n_sphere = 64) {
  const int m = b.m(), n = m + 1;
  const auto ex = geodesic_area_expansion(b);
  const double sc = curv.scalar, ric = curv.ricci(n - 1, n - 1);
  std::array<double, 3> a{};
  for (int s = 0; s < 3; ++s) {
    const auto I = sheet_integrals(b, s, f, n_polar, n_sphere);
    const double lin = b.is_disk(s) ? I.divY : I.divY - m / b.R[s] * I.w;
    a[s] = std::pow(rho, m) * (ex.sheet[s].value(rho, sc, ric) + lin);
  }
  return a;
}

// First-order volume changes.  Tangential motion moves no volume: only the normal
// amplitudes contribute, with the opposite signs of the interface between V1 and V2.
inline std::pair<double, double> perturbed_volume_expansion(const StandardBubble& b, const PerturbationField& f,
                                                            double rho, int n_polar = 32, int n_sphere = 64) {
  const double s = std::pow(rho, b.m() + 1);
  const double w0 = sheet_integrals(b, 0, f, n_polar, n_sphere).w;
  const double w1 = sheet_integrals(b, 1, f, n_polar, n_sphere).w;
  const double w2 = sheet_integrals(b, 2, f, n_polar, n_sphere).w;
  return {-s * (w1 + w0), -s * (w2 - w0)};
}

}  // namespace bubbles
