#pragma once

#include "bubbles/types.hpp"

#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace bubbles {

// Storage conventions:
//   Christoffel  Gam(k, i, j)         = Gamma^k_{ij}
//   derivative   dGam(l, k, i, j)     = d_l Gamma^k_{ij}
//   second       d2Gam(l, p, k, i, j) = d_l d_p Gamma^k_{ij}
//   Riemann      Rm(a, b, c, d)       = <R(e_a, e_b) e_c, e_d>,  R(X,Y) = [nabla_X, nabla_Y] - nabla_[X,Y]
// so Rm(X, Y, Y, X) is the sectional curvature of an orthonormal pair.

class ChartModel {
 public:
  virtual ~ChartModel() = default;
  virtual int dim() const = 0;
  virtual Mat metric(const Vec& x) const = 0;
  virtual void christoffel(const Vec& x, Tensor3& g) const = 0;
  virtual void christoffel_derivative(const Vec& x, Tensor4& dg) const = 0;
  virtual void christoffel_second_derivative(const Vec& x, Tensor5& d2g) const = 0;
  virtual bool analytic() const = 0;
};

struct Box {
  Vec lo, hi;
  bool contains(const Vec& x, double clearance = 0.0) const {
    for (int i = 0; i < x.size(); ++i)
      if (!(x[i] >= lo[i] + clearance && x[i] <= hi[i] - clearance)) return false;
    return true;
  }
};

class MetricChart {
 public:
  MetricChart() = default;
  MetricChart(std::shared_ptr<const ChartModel> model, Box domain, std::string name, double fd_step = 1e-3)
      : model_(std::move(model)), domain_(std::move(domain)), name_(std::move(name)), fd_step_(fd_step) {}

  int dim() const { return model_->dim(); }
  const std::string& name() const { return name_; }
  const Box& domain() const { return domain_; }
  double fd_step() const { return fd_step_; }
  bool analytic() const { return model_->analytic(); }
  const ChartModel& model() const { return *model_; }

  Mat metric(const Vec& x) const { return model_->metric(x); }

  void require_inside(const Vec& x, double clearance = 0.0) const {
    if (!domain_.contains(x, clearance)) throw DomainError("point outside chart domain of " + name_);
  }

 private:
  std::shared_ptr<const ChartModel> model_;
  Box domain_;
  std::string name_;
  double fd_step_ = 1e-3;
};

// ---------------------------------------------------------------------------
// Finite-difference model: only G is known.  Derivatives use the 4th-order
// central stencil, nested for higher orders.

namespace detail {

inline Tensor3 combine(const Tensor3& a, const Tensor3& b, const Tensor3& c, const Tensor3& d, double h) {
  const int n = a.dim();
  Tensor3 r(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        r(i, j, k) = (-a(i, j, k) + 8 * b(i, j, k) - 8 * c(i, j, k) + d(i, j, k)) / (12 * h);
  return r;
}

inline Tensor4 combine(const Tensor4& a, const Tensor4& b, const Tensor4& c, const Tensor4& d, double h) {
  const int n = a.dim();
  Tensor4 r(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l)
          r(i, j, k, l) = (-a(i, j, k, l) + 8 * b(i, j, k, l) - 8 * c(i, j, k, l) + d(i, j, k, l)) / (12 * h);
  return r;
}

inline Mat combine(const Mat& a, const Mat& b, const Mat& c, const Mat& d, double h) {
  return (-a + 8 * b - 8 * c + d) / (12 * h);
}

inline void christoffel_from_metric_derivative(const Mat& G, const Tensor3& dG /* (l,i,j) */, Tensor3& gam) {
  const int n = G.rows();
  const Mat Gi = G.inverse();
  gam = Tensor3(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      Vec low(n);
      for (int l = 0; l < n; ++l) low[l] = 0.5 * (dG(i, l, j) + dG(j, l, i) - dG(l, i, j));
      const Vec up = Gi * low;
      for (int k = 0; k < n; ++k) gam(k, i, j) = up[k];
    }
}

}  // namespace detail

class FiniteDifferenceModel final : public ChartModel {
 public:
  FiniteDifferenceModel(int n, std::function<Mat(const Vec&)> g, double h) : n_(n), g_(std::move(g)), h_(h) {}

  int dim() const override { return n_; }
  Mat metric(const Vec& x) const override { return g_(x); }
  bool analytic() const override { return false; }

  void christoffel(const Vec& x, Tensor3& gam) const override {
    Tensor3 dG(n_);
    Vec xp = x;
    for (int l = 0; l < n_; ++l) {
      Mat v[4];
      const double off[4] = {2 * h_, h_, -h_, -2 * h_};
      for (int s = 0; s < 4; ++s) {
        xp[l] = x[l] + off[s];
        v[s] = g_(xp);
      }
      xp[l] = x[l];
      const Mat d = detail::combine(v[0], v[1], v[2], v[3], h_);
      for (int i = 0; i < n_; ++i)
        for (int j = 0; j < n_; ++j) dG(l, i, j) = d(i, j);
    }
    detail::christoffel_from_metric_derivative(g_(x), dG, gam);
  }

  void christoffel_derivative(const Vec& x, Tensor4& dg) const override {
    dg = Tensor4(n_);
    Vec xp = x;
    for (int l = 0; l < n_; ++l) {
      Tensor3 v[4];
      const double off[4] = {2 * h_, h_, -h_, -2 * h_};
      for (int s = 0; s < 4; ++s) {
        xp[l] = x[l] + off[s];
        christoffel(xp, v[s]);
      }
      xp[l] = x[l];
      const Tensor3 d = detail::combine(v[0], v[1], v[2], v[3], h_);
      for (int k = 0; k < n_; ++k)
        for (int i = 0; i < n_; ++i)
          for (int j = 0; j < n_; ++j) dg(l, k, i, j) = d(k, i, j);
    }
  }

  void christoffel_second_derivative(const Vec& x, Tensor5& d2g) const override {
    d2g = Tensor5(n_);
    Vec xp = x;
    for (int l = 0; l < n_; ++l) {
      Tensor4 v[4];
      const double off[4] = {2 * h_, h_, -h_, -2 * h_};
      for (int s = 0; s < 4; ++s) {
        xp[l] = x[l] + off[s];
        christoffel_derivative(xp, v[s]);
      }
      xp[l] = x[l];
      const Tensor4 d = detail::combine(v[0], v[1], v[2], v[3], h_);
      for (int p = 0; p < n_; ++p)
        for (int k = 0; k < n_; ++k)
          for (int i = 0; i < n_; ++i)
            for (int j = 0; j < n_; ++j) d2g(l, p, k, i, j) = d(p, k, i, j);
    }
  }

 private:
  int n_;
  std::function<Mat(const Vec&)> g_;
  double h_;
};

// ---------------------------------------------------------------------------
// Block-conformal model: coordinates split into blocks, each carrying
// g = e^{2 f_b(y_b)} delta.  Covers euclidean space, stereographic spheres,
// Gaussian conformal bumps and products of those.

struct ConformalJet {
  double f = 0.0;
  Vec d1;
  Mat d2;
  Tensor3 d3;
};

class ConformalFactor {
 public:
  virtual ~ConformalFactor() = default;
  virtual ConformalJet jet(const Vec& y, int order) const = 0;
};

class FlatFactor final : public ConformalFactor {
 public:
  ConformalJet jet(const Vec& y, int) const override {
    const int k = y.size();
    return {0.0, Vec::Zero(k), Mat::Zero(k, k), Tensor3(k)};
  }
};

// f = log(2a^2 / (a^2 + |y|^2)): round sphere of radius a in stereographic coordinates.
class StereographicFactor final : public ConformalFactor {
 public:
  explicit StereographicFactor(double a) : a_(a) {}
  ConformalJet jet(const Vec& y, int order) const override {
    const int k = y.size();
    const double u = a_ * a_ + y.squaredNorm();
    ConformalJet j{std::log(2 * a_ * a_ / u), -2.0 * y / u, Mat::Zero(k, k), Tensor3(k)};
    if (order >= 2) j.d2 = -2.0 / u * Mat::Identity(k, k) + 4.0 / (u * u) * y * y.transpose();
    if (order >= 3)
      for (int a = 0; a < k; ++a)
        for (int b = 0; b < k; ++b)
          for (int c = 0; c < k; ++c)
            j.d3(a, b, c) = 4.0 / (u * u) * ((a == b) * y[c] + (a == c) * y[b] + (b == c) * y[a]) -
                            16.0 / (u * u * u) * y[a] * y[b] * y[c];
    return j;
  }

 private:
  double a_;
};

struct GaussianBump {
  double eps = 0.0;
  Vec center;
  double width = 0.5;
};

// f = sum eps_b exp(-|y - x_b|^2 / s_b^2)
class BumpFactor final : public ConformalFactor {
 public:
  explicit BumpFactor(std::vector<GaussianBump> bumps) : bumps_(std::move(bumps)) {}
  ConformalJet jet(const Vec& y, int order) const override {
    const int k = y.size();
    ConformalJet j{0.0, Vec::Zero(k), Mat::Zero(k, k), Tensor3(k)};
    for (const auto& b : bumps_) {
      const Vec d = y - b.center;
      const double s2 = b.width * b.width;
      const double g = b.eps * std::exp(-d.squaredNorm() / s2);
      j.f += g;
      j.d1 += -2.0 / s2 * g * d;
      if (order >= 2) j.d2 += g * (4.0 / (s2 * s2) * d * d.transpose() - 2.0 / s2 * Mat::Identity(k, k));
      if (order >= 3)
        for (int a = 0; a < k; ++a)
          for (int bb = 0; bb < k; ++bb)
            for (int c = 0; c < k; ++c)
              j.d3(a, bb, c) += g * (-8.0 / (s2 * s2 * s2) * d[a] * d[bb] * d[c] +
                                     4.0 / (s2 * s2) * ((a == bb) * d[c] + (a == c) * d[bb] + (bb == c) * d[a]));
    }
    return j;
  }

 private:
  std::vector<GaussianBump> bumps_;
};

class BlockConformalModel final : public ChartModel {
 public:
  struct Block {
    int offset;
    int size;
    std::shared_ptr<const ConformalFactor> factor;
  };

  explicit BlockConformalModel(std::vector<Block> blocks) : blocks_(std::move(blocks)) {
    n_ = 0;
    for (const auto& b : blocks_) n_ += b.size;
  }

  int dim() const override { return n_; }
  bool analytic() const override { return true; }

  Mat metric(const Vec& x) const override {
    Mat G = Mat::Zero(n_, n_);
    for (const auto& b : blocks_) {
      const double e = std::exp(2.0 * b.factor->jet(x.segment(b.offset, b.size), 1).f);
      for (int i = 0; i < b.size; ++i) G(b.offset + i, b.offset + i) = e;
    }
    return G;
  }

  void christoffel(const Vec& x, Tensor3& g) const override {
    g = Tensor3(n_);
    for (const auto& b : blocks_) {
      const auto j = b.factor->jet(x.segment(b.offset, b.size), 1);
      const int o = b.offset;
      for (int k = 0; k < b.size; ++k)
        for (int i = 0; i < b.size; ++i)
          for (int jj = 0; jj < b.size; ++jj)
            g(o + k, o + i, o + jj) = (i == k) * j.d1[jj] + (jj == k) * j.d1[i] - (i == jj) * j.d1[k];
    }
  }

  void christoffel_derivative(const Vec& x, Tensor4& dg) const override {
    dg = Tensor4(n_);
    for (const auto& b : blocks_) {
      const auto j = b.factor->jet(x.segment(b.offset, b.size), 2);
      const int o = b.offset;
      for (int l = 0; l < b.size; ++l)
        for (int k = 0; k < b.size; ++k)
          for (int i = 0; i < b.size; ++i)
            for (int jj = 0; jj < b.size; ++jj)
              dg(o + l, o + k, o + i, o + jj) =
                  (i == k) * j.d2(jj, l) + (jj == k) * j.d2(i, l) - (i == jj) * j.d2(k, l);
    }
  }

  void christoffel_second_derivative(const Vec& x, Tensor5& d2g) const override {
    d2g = Tensor5(n_);
    for (const auto& b : blocks_) {
      const auto j = b.factor->jet(x.segment(b.offset, b.size), 3);
      const int o = b.offset;
      for (int l = 0; l < b.size; ++l)
        for (int p = 0; p < b.size; ++p)
          for (int k = 0; k < b.size; ++k)
            for (int i = 0; i < b.size; ++i)
              for (int jj = 0; jj < b.size; ++jj)
                d2g(o + l, o + p, o + k, o + i, o + jj) =
                    (i == k) * j.d3(jj, l, p) + (jj == k) * j.d3(i, l, p) - (i == jj) * j.d3(k, l, p);
    }
  }

 private:
  std::vector<Block> blocks_;
  int n_ = 0;
};

// ---------------------------------------------------------------------------
// Builtin families.

struct ProductFactorSpec {
  std::string kind = "sphere";  // sphere | flat
  int dim = 2;
  double radius = 1.0;
};

struct ChartSpec {
  std::string family = "euclidean";  // euclidean | round_sphere | conformal_bump | product
  int dim = 3;
  double radius = 1.0;
  std::vector<GaussianBump> bumps;  // conformal_bump
  std::vector<ProductFactorSpec> factors;
  double half_width = 0.0;  // domain box [-w, w]^n; 0 picks a family default
  bool finite_difference = false;
  double fd_step = 1e-3;
};

inline Box centered_box(int n, double w) {
  return {Vec::Constant(n, -w), Vec::Constant(n, w)};
}

inline MetricChart builtin_chart(const ChartSpec& spec) {
  using Block = BlockConformalModel::Block;
  std::vector<Block> blocks;
  int n = spec.dim;
  double w = spec.half_width;
  std::string name = spec.family;
  if (spec.family == "euclidean") {
    if (n < 1 || n > kMaxDim) throw ParameterError("chart dimension out of range");
    blocks.push_back({0, n, std::make_shared<FlatFactor>()});
    if (w == 0.0) w = 4.0;
  } else if (spec.family == "round_sphere") {
    if (n < 1 || n > kMaxDim) throw ParameterError("chart dimension out of range");
    if (!(spec.radius > 0.0)) throw ParameterError("round_sphere radius must be positive");
    blocks.push_back({0, n, std::make_shared<StereographicFactor>(spec.radius)});
    if (w == 0.0) w = 4.0 * spec.radius;
  } else if (spec.family == "conformal_bump") {
    if (n < 1 || n > kMaxDim) throw ParameterError("chart dimension out of range");
    for (const auto& b : spec.bumps) {
      if (!(b.width > 0.0)) throw ParameterError("bump width must be positive");
      if (b.center.size() != n) throw ParameterError("bump center dimension mismatch");
    }
    blocks.push_back({0, n, std::make_shared<BumpFactor>(spec.bumps)});
    if (w == 0.0) w = 2.0;
  } else if (spec.family == "product") {
    if (spec.factors.empty()) throw ParameterError("product chart needs factors");
    int off = 0;
    double wmax = 0.0;
    for (const auto& f : spec.factors) {
      if (f.dim < 1) throw ParameterError("factor dimension must be positive");
      if (f.kind == "sphere") {
        if (!(f.radius > 0.0)) throw ParameterError("sphere factor radius must be positive");
        blocks.push_back({off, f.dim, std::make_shared<StereographicFactor>(f.radius)});
        wmax = std::max(wmax, 4.0 * f.radius);
      } else if (f.kind == "flat") {
        blocks.push_back({off, f.dim, std::make_shared<FlatFactor>()});
        wmax = std::max(wmax, 4.0);
      } else {
        throw ParameterError("unknown product factor kind: " + f.kind);
      }
      off += f.dim;
    }
    n = off;
    if (n > kMaxDim) throw ParameterError("chart dimension out of range");
    if (w == 0.0) w = wmax;
  } else {
    throw ParameterError("unknown chart family: " + spec.family);
  }
  auto model = std::make_shared<BlockConformalModel>(std::move(blocks));
  if (spec.finite_difference) {
    auto fd = std::make_shared<FiniteDifferenceModel>(
        n, [model](const Vec& x) { return model->metric(x); }, spec.fd_step);
    return MetricChart(fd, centered_box(n, w), name + "(fd)", spec.fd_step);
  }
  return MetricChart(model, centered_box(n, w), name, spec.fd_step);
}

// Chart from a user metric; all derivatives by finite differences.
inline MetricChart make_chart(int n, std::function<Mat(const Vec&)> g, Box domain, std::string name,
                              double fd_step = 1e-3) {
  return MetricChart(std::make_shared<FiniteDifferenceModel>(n, std::move(g), fd_step), std::move(domain),
                     std::move(name), fd_step);
}

// ---------------------------------------------------------------------------
// Curvature.

inline Tensor3 christoffel(const MetricChart& chart, const Vec& x) {
  chart.require_inside(x);
  Tensor3 g;
  chart.model().christoffel(x, g);
  return g;
}

namespace detail {

// R^r_{s m n} = d_m Gam^r_{n s} - d_n Gam^r_{m s} + Gam^r_{m l} Gam^l_{n s} - Gam^r_{n l} Gam^l_{m s}
inline Tensor4 riemann_up(const Tensor3& g, const Tensor4& dg, int n) {
  Tensor4 R(n);
  for (int r = 0; r < n; ++r)
    for (int s = 0; s < n; ++s)
      for (int m = 0; m < n; ++m)
        for (int nn = 0; nn < n; ++nn) {
          double v = dg(m, r, nn, s) - dg(nn, r, m, s);
          for (int l = 0; l < n; ++l) v += g(r, m, l) * g(l, nn, s) - g(r, nn, l) * g(l, m, s);
          R(r, s, m, nn) = v;
        }
  return R;
}

inline Tensor4 lower_riemann(const Tensor4& Rup, const Mat& G, int n) {
  Tensor4 Rm(n);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int c = 0; c < n; ++c)
        for (int d = 0; d < n; ++d) {
          double v = 0.0;
          for (int r = 0; r < n; ++r) v += G(d, r) * Rup(r, c, a, b);
          Rm(a, b, c, d) = v;
        }
  return Rm;
}

}  // namespace detail

// Coordinate components Rm(a, b, c, d).
inline Tensor4 riemann(const MetricChart& chart, const Vec& x) {
  chart.require_inside(x);
  const int n = chart.dim();
  Tensor3 g;
  Tensor4 dg;
  chart.model().christoffel(x, g);
  chart.model().christoffel_derivative(x, dg);
  return detail::lower_riemann(detail::riemann_up(g, dg, n), chart.metric(x), n);
}

inline double scalar_curvature(const MetricChart& chart, const Vec& x) {
  const int n = chart.dim();
  const Tensor4 Rm = riemann(chart, x);
  const Mat Gi = chart.metric(x).inverse();
  double sc = 0.0;
  // Ric(b, c) = g^{ad} Rm(a, b, c, d)
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int c = 0; c < n; ++c)
        for (int d = 0; d < n; ++d) sc += Gi(b, c) * Gi(a, d) * Rm(a, b, c, d);
  return sc;
}

struct OrthoFrame {
  Vec base;
  Mat E;  // columns are G(base)-orthonormal; last column is the seed axis
};

inline OrthoFrame orthonormal_frame(const MetricChart& chart, const Vec& p, const Vec& seed_axis) {
  chart.require_inside(p);
  const int n = chart.dim();
  if (seed_axis.size() != n) throw ParameterError("seed axis dimension mismatch");
  if (seed_axis.norm() < 1e-10) throw ParameterError("degenerate seed axis");
  const Mat G = chart.metric(p);
  auto ip = [&](const Vec& u, const Vec& v) { return u.dot(G * v); };
  std::vector<Vec> basis;
  auto push = [&](Vec v) {
    for (const auto& b : basis) v -= ip(b, v) * b;
    for (const auto& b : basis) v -= ip(b, v) * b;
    const double nv = std::sqrt(ip(v, v));
    if (nv > 1e-8 * std::sqrt(G.trace())) basis.push_back(v / nv);
  };
  push(seed_axis);
  for (int i = 0; i < n && static_cast<int>(basis.size()) < n; ++i) push(Vec::Unit(n, i));
  OrthoFrame F{p, Mat(n, n)};
  for (int i = 1; i < n; ++i) F.E.col(i - 1) = basis[i];
  F.E.col(n - 1) = basis[0];
  return F;
}

struct CurvatureAtPoint {
  OrthoFrame frame;
  Tensor4 riemann;  // frame components
  Mat ricci;
  double scalar = 0.0;
  Tensor5 nabla_riemann;  // (e, a, b, c, d) = (nabla_{E_e} Rm)(E_a, E_b, E_c, E_d)
  bool has_nabla = false;

  int dim() const { return ricci.rows(); }

  // Rm(X, Y, Z, W) for frame-component vectors
  double rm(const Vec& X, const Vec& Y, const Vec& Z, const Vec& W) const {
    const int n = dim();
    double v = 0.0;
    for (int a = 0; a < n; ++a) {
      if (X[a] == 0.0) continue;
      for (int b = 0; b < n; ++b) {
        if (Y[b] == 0.0) continue;
        for (int c = 0; c < n; ++c) {
          if (Z[c] == 0.0) continue;
          for (int d = 0; d < n; ++d) v += X[a] * Y[b] * Z[c] * W[d] * riemann(a, b, c, d);
        }
      }
    }
    return v;
  }

  double nabla_rm(const Vec& V, const Vec& X, const Vec& Y, const Vec& Z, const Vec& W) const {
    if (!has_nabla) return 0.0;
    const int n = dim();
    double v = 0.0;
    for (int e = 0; e < n; ++e) {
      if (V[e] == 0.0) continue;
      for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b)
          for (int c = 0; c < n; ++c)
            for (int d = 0; d < n; ++d) v += V[e] * X[a] * Y[b] * Z[c] * W[d] * nabla_riemann(e, a, b, c, d);
    }
    return v;
  }

  double ric(const Vec& X, const Vec& Y) const { return X.dot(ricci * Y); }
};

namespace detail {

template <int Rank>
Tensor<Rank> transform_slot(const Tensor<Rank>& T, const Mat& E, int slot) {
  const int n = T.dim();
  Tensor<Rank> out(n);
  std::array<int, Rank> idx{};
  const std::size_t total = [&] {
    std::size_t t = 1;
    for (int i = 0; i < Rank; ++i) t *= n;
    return t;
  }();
  for (std::size_t lin = 0; lin < total; ++lin) {
    std::size_t q = lin;
    for (int i = Rank - 1; i >= 0; --i) {
      idx[i] = static_cast<int>(q % n);
      q /= n;
    }
    double v = 0.0;
    auto src = idx;
    for (int a = 0; a < n; ++a) {
      src[slot] = a;
      double t;
      if constexpr (Rank == 4) t = T(src[0], src[1], src[2], src[3]);
      else t = T(src[0], src[1], src[2], src[3], src[4]);
      v += E(a, idx[slot]) * t;
    }
    if constexpr (Rank == 4) out(idx[0], idx[1], idx[2], idx[3]) = v;
    else out(idx[0], idx[1], idx[2], idx[3], idx[4]) = v;
  }
  return out;
}

}  // namespace detail

// Coordinate covariant derivative (nabla_e Rm)(a, b, c, d).
inline Tensor5 nabla_riemann_coordinates(const MetricChart& chart, const Vec& x) {
  const int n = chart.dim();
  const Mat G = chart.metric(x);
  Tensor3 g;
  Tensor4 dg;
  Tensor5 d2g;
  chart.model().christoffel(x, g);
  chart.model().christoffel_derivative(x, dg);
  chart.model().christoffel_second_derivative(x, d2g);
  const Tensor4 Rup = detail::riemann_up(g, dg, n);
  const Tensor4 Rm = detail::lower_riemann(Rup, G, n);
  Tensor5 out(n);
  for (int e = 0; e < n; ++e) {
    // d_e R^r_{s m nn}
    Tensor4 dR(n);
    for (int r = 0; r < n; ++r)
      for (int s = 0; s < n; ++s)
        for (int m = 0; m < n; ++m)
          for (int nn = 0; nn < n; ++nn) {
            double v = d2g(e, m, r, nn, s) - d2g(e, nn, r, m, s);
            for (int l = 0; l < n; ++l)
              v += dg(e, r, m, l) * g(l, nn, s) + g(r, m, l) * dg(e, l, nn, s) - dg(e, r, nn, l) * g(l, m, s) -
                   g(r, nn, l) * dg(e, l, m, s);
            dR(r, s, m, nn) = v;
          }
    // d_e g_{dr}
    Mat dG(n, n);
    for (int d = 0; d < n; ++d)
      for (int r = 0; r < n; ++r) {
        double v = 0.0;
        for (int l = 0; l < n; ++l) v += G(d, l) * g(l, e, r) + G(r, l) * g(l, e, d);
        dG(d, r) = v;
      }
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b)
        for (int c = 0; c < n; ++c)
          for (int d = 0; d < n; ++d) {
            double v = 0.0;
            for (int r = 0; r < n; ++r) v += dG(d, r) * Rup(r, c, a, b) + G(d, r) * dR(r, c, a, b);
            for (int l = 0; l < n; ++l)
              v -= g(l, e, a) * Rm(l, b, c, d) + g(l, e, b) * Rm(a, l, c, d) + g(l, e, c) * Rm(a, b, l, d) +
                   g(l, e, d) * Rm(a, b, c, l);
            out(e, a, b, c, d) = v;
          }
  }
  return out;
}

inline CurvatureAtPoint curvature_at(const MetricChart& chart, const Vec& p, const Vec& seed_axis,
                                     bool with_nabla = true) {
  const int n = chart.dim();
  CurvatureAtPoint c;
  c.frame = orthonormal_frame(chart, p, seed_axis);
  const Mat& E = c.frame.E;
  Tensor4 R = riemann(chart, p);
  for (int s = 0; s < 4; ++s) R = detail::transform_slot<4>(R, E, s);
  c.riemann = R;
  c.ricci = Mat::Zero(n, n);
  for (int b = 0; b < n; ++b)
    for (int cc = 0; cc < n; ++cc)
      for (int a = 0; a < n; ++a) c.ricci(b, cc) += R(a, b, cc, a);
  c.ricci = 0.5 * (c.ricci + c.ricci.transpose()).eval();
  c.scalar = c.ricci.trace();
  if (with_nabla) {
    Tensor5 D = nabla_riemann_coordinates(chart, p);
    for (int s = 0; s < 5; ++s) D = detail::transform_slot<5>(D, E, s);
    c.nabla_riemann = D;
    c.has_nabla = true;
  } else {
    c.nabla_riemann = Tensor5(n);
  }
  return c;
}

// Normal-coordinate metric to third order at frame vector Xi.
inline Mat normal_metric_expansion(const CurvatureAtPoint& c, const Vec& Xi) {
  const int n = c.dim();
  Mat G = Mat::Identity(n, n);
  for (int mu = 0; mu < n; ++mu)
    for (int nu = 0; nu < n; ++nu) {
      const Vec Em = Vec::Unit(n, mu), En = Vec::Unit(n, nu);
      G(mu, nu) += c.rm(Xi, Em, Xi, En) / 3.0 + c.nabla_rm(Xi, Xi, Em, Xi, En) / 6.0;
    }
  return G;
}

// Sc gradient and Hessian by 4th-order central differences of the scalar curvature.
inline Vec scalar_gradient(const MetricChart& chart, const Vec& p) {
  const int n = chart.dim();
  const double h = chart.fd_step();
  chart.require_inside(p, 2 * h);
  Vec g(n);
  for (int i = 0; i < n; ++i) {
    const Vec e = Vec::Unit(n, i) * h;
    g[i] = (-scalar_curvature(chart, p + 2 * e) + 8 * scalar_curvature(chart, p + e) -
            8 * scalar_curvature(chart, p - e) + scalar_curvature(chart, p - 2 * e)) /
           (12 * h);
  }
  return g;
}

inline Mat scalar_hessian(const MetricChart& chart, const Vec& p) {
  const int n = chart.dim();
  const double h = chart.fd_step() * 10.0;
  chart.require_inside(p, 2 * h);
  Mat H(n, n);
  const double s0 = scalar_curvature(chart, p);
  for (int i = 0; i < n; ++i) {
    const Vec ei = Vec::Unit(n, i) * h;
    H(i, i) = (-scalar_curvature(chart, p + 2 * ei) + 16 * scalar_curvature(chart, p + ei) - 30 * s0 +
               16 * scalar_curvature(chart, p - ei) - scalar_curvature(chart, p - 2 * ei)) /
              (12 * h * h);
    for (int j = 0; j < i; ++j) {
      const Vec ej = Vec::Unit(n, j) * h;
      H(i, j) = (scalar_curvature(chart, p + ei + ej) - scalar_curvature(chart, p + ei - ej) -
                 scalar_curvature(chart, p - ei + ej) + scalar_curvature(chart, p - ei - ej)) /
                (4 * h * h);
      H(j, i) = H(i, j);
    }
  }
  return H;
}

// ---------------------------------------------------------------------------
// Geodesics.

// Fixed-step RK4 for x'' = -Gamma(x)(x', x') on tau in [0, 1].
inline Vec exp_map(const MetricChart& chart, const Vec& p, const Vec& v, int steps = 200) {
  if (steps < 1) throw ParameterError("exp_map: steps must be positive");
  const int n = chart.dim();
  const double dt = 1.0 / steps;
  Tensor3 g;
  auto acc = [&](const Vec& x, const Vec& u, int step) {
    if (!chart.domain().contains(x))
      throw DomainError("geodesic left the chart domain at fraction " + std::to_string(double(step) / steps));
    chart.model().christoffel(x, g);
    Vec a = Vec::Zero(n);
    for (int k = 0; k < n; ++k)
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) a[k] -= g(k, i, j) * u[i] * u[j];
    return a;
  };
  Vec x = p, u = v;
  for (int s = 0; s < steps; ++s) {
    const Vec k1x = u, k1u = acc(x, u, s);
    const Vec k2x = u + 0.5 * dt * k1u, k2u = acc(x + 0.5 * dt * k1x, k2x, s);
    const Vec k3x = u + 0.5 * dt * k2u, k3u = acc(x + 0.5 * dt * k2x, k3x, s);
    const Vec k4x = u + dt * k3u, k4u = acc(x + dt * k3x, k4x, s);
    x += dt / 6.0 * (k1x + 2 * k2x + 2 * k3x + k4x);
    u += dt / 6.0 * (k1u + 2 * k2u + 2 * k3u + k4u);
  }
  if (!chart.domain().contains(x)) throw DomainError("geodesic endpoint outside chart domain");
  return x;
}

struct GeodesicShot {
  Vec end;
  Mat jacobian;        // d end / d v
  double radial_moment = 0.0;  // int_0^1 J(tau v) tau^m dtau, J the normal-coordinate volume density
};

// Geodesic together with its variation in the initial velocity.  The radial moment
// integrates sqrt(det G(gamma)/det G(p)) |det M(tau)| / tau, which equals the
// normal-coordinate density at tau v times tau^m.
inline GeodesicShot shoot(const MetricChart& chart, const Vec& p, const Vec& v, int steps = 200) {
  if (steps < 1) throw ParameterError("shoot: steps must be positive");
  const int n = chart.dim();
  const double dt = 1.0 / steps;
  const double detp = chart.metric(p).determinant();
  struct State {
    Vec x, u;
    Mat M, P;
    double q;
  };
  Tensor3 g;
  Tensor4 dg;
  auto rhs = [&](const State& s, double tau, int step) {
    if (!chart.domain().contains(s.x))
      throw DomainError("geodesic left the chart domain at fraction " + std::to_string(double(step) / steps));
    chart.model().christoffel(s.x, g);
    chart.model().christoffel_derivative(s.x, dg);
    State d;
    d.x = s.u;
    d.u = Vec::Zero(n);
    Mat S = Mat::Zero(n, n);  // S(k, j) = Gamma^k_{ij} u^i
    Mat T = Mat::Zero(n, n);  // T(k, l) = d_l Gamma^k_{ij} u^i u^j
    for (int k = 0; k < n; ++k)
      for (int i = 0; i < n; ++i) {
        if (s.u[i] == 0.0) continue;
        for (int j = 0; j < n; ++j) {
          S(k, j) += g(k, i, j) * s.u[i];
          for (int l = 0; l < n; ++l) T(k, l) += dg(l, k, i, j) * s.u[i] * s.u[j];
        }
      }
    d.u = -S * s.u;
    d.M = s.P;
    d.P = -T * s.M - 2.0 * S * s.P;
    if (tau == 0.0) {
      d.q = 0.0;
    } else {
      const double detg = chart.metric(s.x).determinant();
      d.q = std::sqrt(detg / detp) * std::abs(s.M.determinant()) / tau;
    }
    return d;
  };
  auto axpy = [](const State& s, double h, const State& d) {
    return State{s.x + h * d.x, s.u + h * d.u, s.M + h * d.M, s.P + h * d.P, s.q + h * d.q};
  };
  State s{p, v, Mat::Zero(n, n), Mat::Identity(n, n), 0.0};
  for (int k = 0; k < steps; ++k) {
    const double t0 = k * dt;
    const State k1 = rhs(s, t0, k);
    const State k2 = rhs(axpy(s, 0.5 * dt, k1), t0 + 0.5 * dt, k);
    const State k3 = rhs(axpy(s, 0.5 * dt, k2), t0 + 0.5 * dt, k);
    const State k4 = rhs(axpy(s, dt, k3), t0 + dt, k);
    s.x += dt / 6.0 * (k1.x + 2 * k2.x + 2 * k3.x + k4.x);
    s.u += dt / 6.0 * (k1.u + 2 * k2.u + 2 * k3.u + k4.u);
    s.M += dt / 6.0 * (k1.M + 2 * k2.M + 2 * k3.M + k4.M);
    s.P += dt / 6.0 * (k1.P + 2 * k2.P + 2 * k3.P + k4.P);
    s.q += dt / 6.0 * (k1.q + 2 * k2.q + 2 * k3.q + k4.q);
  }
  if (!chart.domain().contains(s.x)) throw DomainError("geodesic endpoint outside chart domain");
  return {s.x, s.M, s.q};
}

}  // namespace bubbles
