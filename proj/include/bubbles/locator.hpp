#pragma once

#include "bubbles/asymptotics.hpp"
#include "bubbles/bubble_geometry.hpp"
#include "bubbles/metric_chart.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cstdio>
#include <optional>
#include <string>
#include <vector>

namespace bubbles {

struct CriticalPoint {
  Vec coords;
  double sc = 0.0;
  double grad_norm = 0.0;
  Vec hessian_eigs;
  bool nondegenerate = false;
  int iterations = 0;
};

// Hessian eigenvalues count as non-degenerate when min |eig| > 1e-4 max |eig| (and max |eig| is not noise).
inline bool classify_nondegenerate(const Vec& eigs) {
  const double big = eigs.cwiseAbs().maxCoeff(), small = eigs.cwiseAbs().minCoeff();
  return big > 1e-8 && small > 1e-4 * big;
}

inline CriticalPoint find_critical_scalar(const MetricChart& chart, const Vec& x0, double tol = 1e-8,
                                          int max_iter = 60) {
  if (x0.size() != chart.dim()) throw ParameterError("start point dimension mismatch");
  chart.require_inside(x0);
  const int n = chart.dim();
  Vec x = x0;
  Vec g = scalar_gradient(chart, x);
  CriticalPoint cp;
  int it = 0;
  for (; it < max_iter && g.norm() > tol; ++it) {
    const Mat H = scalar_hessian(chart, x);
    Eigen::SelfAdjointEigenSolver<Mat> es(H);
    const double big = es.eigenvalues().cwiseAbs().maxCoeff();
    // Newton on the gradient; near-singular directions are regularized
    Vec step = Vec::Zero(n);
    for (int k = 0; k < n; ++k) {
      const double lam = es.eigenvalues()[k];
      const double reg = std::abs(lam) > 1e-6 * big ? lam : (lam >= 0 ? 1.0 : -1.0) * std::max(1e-6 * big, 1e-12);
      step -= es.eigenvectors().col(k) * (es.eigenvectors().col(k).dot(g) / reg);
    }
    if (big == 0.0) step = -g;
    double alpha = 1.0;
    bool moved = false;
    for (int ls = 0; ls < 30; ++ls, alpha *= 0.5) {
      const Vec y = x + alpha * step;
      if (!chart.domain().contains(y, 2 * chart.fd_step() * 10)) continue;
      const Vec gy = scalar_gradient(chart, y);
      if (gy.norm() < g.norm()) {
        x = y;
        g = gy;
        moved = true;
        break;
      }
    }
    if (!moved) break;
  }
  cp.coords = x;
  cp.grad_norm = g.norm();
  cp.iterations = it;
  if (cp.grad_norm > tol) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "critical point search did not converge (|grad Sc| = %.3e after %d steps)",
                  cp.grad_norm, it);
    throw NumericalError(buf);
  }
  cp.sc = scalar_curvature(chart, x);
  Eigen::SelfAdjointEigenSolver<Mat> es(scalar_hessian(chart, x));
  cp.hessian_eigs = es.eigenvalues();
  cp.nondegenerate = classify_nondegenerate(cp.hessian_eigs);
  return cp;
}

struct RicciEigen {
  Vec eigenvalues;  // ascending
  Mat eigenvectors;  // frame components, orthonormal columns
  Mat chart_vectors;  // the same directions as chart vectors
  std::vector<std::vector<int>> groups;
  bool ambiguous = false;  // some gap fell between delta0 and delta1
  double max_residual = 0.0;
};

inline RicciEigen ricci_eigendecomposition(const MetricChart& chart, const Vec& p,
                                           std::optional<std::pair<double, double>> gap = std::nullopt) {
  const int n = chart.dim();
  const auto curv = curvature_at(chart, p, Vec::Unit(n, n - 1), false);
  Eigen::SelfAdjointEigenSolver<Mat> es(curv.ricci);
  RicciEigen r;
  r.eigenvalues = es.eigenvalues();
  r.eigenvectors = es.eigenvectors();
  // deterministic sign: largest component positive
  for (int k = 0; k < n; ++k) {
    Eigen::Index i;
    r.eigenvectors.col(k).cwiseAbs().maxCoeff(&i);
    if (r.eigenvectors(i, k) < 0) r.eigenvectors.col(k) *= -1.0;
  }
  r.chart_vectors = curv.frame.E * r.eigenvectors;
  for (int k = 0; k < n; ++k)
    r.max_residual = std::max(r.max_residual, (curv.ricci * r.eigenvectors.col(k) -
                                               r.eigenvalues[k] * r.eigenvectors.col(k)).norm());
  const double scale = std::max(r.eigenvalues.cwiseAbs().maxCoeff(), 1e-300);
  const auto [d0, d1] = gap.value_or(std::pair{1e-6 * scale, 1e-3 * scale});
  if (!(d0 < d1)) throw ParameterError("gap thresholds need delta0 < delta1");
  r.groups.push_back({0});
  for (int k = 1; k < n; ++k) {
    const double d = r.eigenvalues[k] - r.eigenvalues[k - 1];
    if (d < d0) {
      r.groups.back().push_back(k);
    } else {
      if (d <= d1) r.ambiguous = true;
      r.groups.push_back({k});
    }
  }
  return r;
}

struct BubblePrediction {
  CriticalPoint point;
  Vec axis;        // frame components
  Vec axis_chart;  // chart vector, G-unit
  double mu = 0.0;
  int multiplicity = 1;
  double rho = 0.0;
  std::array<double, 3> curvatures{};
  double phi_leading = 0.0;
  int count = 1;
};

struct PredictionResult {
  std::vector<BubblePrediction> predictions;
  std::vector<CriticalPoint> critical_points;  // deduplicated, including degenerate ones
  std::vector<std::string> diagnostics;
};

struct PredictOptions {
  double tol = 1e-8;
  int max_iter = 60;
  double merge_distance = 1e-6;
  std::optional<std::pair<double, double>> gap;
};

inline double bubble_extent(const StandardBubble& b) {
  double e = b.r;
  for (int s = 0; s < 3; ++s)
    if (!b.is_disk(s)) e = std::max(e, std::abs(b.c[s]) + b.R[s]);
  return e;
}

inline PredictionResult predict(const MetricChart& chart, const std::vector<Vec>& seeds, double rho,
                                const BubbleParams& params, const PredictOptions& opt = {}) {
  if (seeds.empty()) throw ParameterError("predict needs at least one seed");
  if (!(rho > 0.0)) throw ParameterError("rho must be positive");
  const auto b = solve_standard_bubble(params);
  if (chart.dim() != b.m() + 1) throw ParameterError("chart dimension must be m + 1");
  const auto rc = reduced_constants(b);
  PredictionResult out;
  std::vector<CriticalPoint> found;
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    try {
      found.push_back(find_critical_scalar(chart, seeds[i], opt.tol, opt.max_iter));
    } catch (const std::exception& e) {
      out.diagnostics.push_back("seed " + std::to_string(i) + ": " + e.what());
    }
  }
  if (found.empty()) throw NumericalError("no seed converged to a critical point");
  std::sort(found.begin(), found.end(), [](const CriticalPoint& a, const CriticalPoint& c) {
    return std::lexicographical_compare(a.coords.begin(), a.coords.end(), c.coords.begin(), c.coords.end());
  });
  for (const auto& cp : found) {
    const bool dup = std::any_of(out.critical_points.begin(), out.critical_points.end(), [&](const CriticalPoint& q) {
      return (q.coords - cp.coords).norm() <= opt.merge_distance;
    });
    if (!dup) out.critical_points.push_back(cp);
  }
  for (const auto& cp : out.critical_points) {
    if (!cp.nondegenerate) {
      out.diagnostics.push_back("degenerate critical point skipped (min |Hessian eig| below threshold)");
      continue;
    }
    const double g_min = Eigen::SelfAdjointEigenSolver<Mat>(chart.metric(cp.coords)).eigenvalues().minCoeff();
    const double clearance = 1.5 * rho * bubble_extent(b) / std::sqrt(g_min);
    if (!chart.domain().contains(cp.coords, clearance)) {
      out.diagnostics.push_back("bubble at this scale leaves the chart domain");
      continue;
    }
    const auto re = ricci_eigendecomposition(chart, cp.coords, opt.gap);
    for (const auto& grp : re.groups) {
      BubblePrediction bp;
      bp.point = cp;
      bp.axis = re.eigenvectors.col(grp.front());
      bp.axis_chart = re.chart_vectors.col(grp.front());
      bp.mu = re.eigenvalues[grp.front()];
      bp.multiplicity = static_cast<int>(grp.size());
      bp.rho = rho;
      bp.curvatures = {params.H0 / rho, params.H1 / rho, params.H2 / rho};
      bp.phi_leading = cp.sc * rc.A - bp.mu * rc.B;
      bp.count = params.symmetric() ? 1 : 2;
      out.predictions.push_back(std::move(bp));
    }
  }
  std::stable_sort(out.predictions.begin(), out.predictions.end(),
                   [](const BubblePrediction& a, const BubblePrediction& c) { return a.phi_leading < c.phi_leading; });
  return out;
}

}  // namespace bubbles
