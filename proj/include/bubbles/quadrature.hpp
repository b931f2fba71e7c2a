#pragma once

#include "bubbles/types.hpp"

#include <vector>

namespace bubbles::quad {

struct Rule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

// Gauss-Legendre nodes on [a, b] by Newton iteration on P_n.
inline Rule gauss_legendre(int n, double a, double b) {
  if (n < 1) throw ParameterError("gauss_legendre: n must be positive");
  Rule r;
  r.nodes.resize(n);
  r.weights.resize(n);
  const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(kPi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
    }
    double w = 2.0 / ((1.0 - x * x) * dp * dp);
    r.nodes[i] = mid - half * x;
    r.nodes[n - 1 - i] = mid + half * x;
    r.weights[i] = r.weights[n - 1 - i] = half * w;
  }
  return r;
}

// Equal-weight rule on a period [0, 2pi).
inline Rule trapezoid_periodic(int n) {
  Rule r;
  r.nodes.resize(n);
  r.weights.assign(n, 2.0 * kPi / n);
  for (int i = 0; i < n; ++i) r.nodes[i] = 2.0 * kPi * i / n;
  return r;
}

// Polynomial interpolation on arbitrary distinct nodes (barycentric form).
class Barycentric {
 public:
  explicit Barycentric(std::vector<double> nodes) : x_(std::move(nodes)), w_(x_.size(), 1.0) {
    const std::size_t n = x_.size();
    double scale = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (i != j) scale = std::max(scale, std::abs(x_[i] - x_[j]));
    // common rescaling keeps the products inside double range
    const double c = 4.0 / scale;
    for (std::size_t j = 0; j < n; ++j) {
      for (std::size_t k = 0; k < n; ++k)
        if (k != j) w_[j] *= (x_[j] - x_[k]) * c;
      w_[j] = 1.0 / w_[j];
    }
  }

  const std::vector<double>& nodes() const { return x_; }

  // Row vector c with p(t) = sum c_j f_j.
  Eigen::RowVectorXd interpolation_row(double t) const {
    const std::size_t n = x_.size();
    Eigen::RowVectorXd c(n);
    for (std::size_t j = 0; j < n; ++j) {
      if (t == x_[j]) {
        c.setZero();
        c[j] = 1.0;
        return c;
      }
    }
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      c[j] = w_[j] / (t - x_[j]);
      s += c[j];
    }
    return c / s;
  }

  // Row vector d with p'(t) = sum d_j f_j, valid for t off the nodes.
  Eigen::RowVectorXd derivative_row(double t) const {
    const std::size_t n = x_.size();
    Eigen::RowVectorXd l = interpolation_row(t);
    for (std::size_t j = 0; j < n; ++j)
      if (t == x_[j]) return differentiation_matrix().row(j);
    // p'(t) = -sum_j a_j (f_j - p(t)) / (t - x_j) / sum_k a_k,  a_j = w_j / (t - x_j)
    Eigen::RowVectorXd a(n);
    double sa = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      a[j] = w_[j] / (t - x_[j]);
      sa += a[j];
    }
    Eigen::RowVectorXd d = Eigen::RowVectorXd::Zero(n);
    for (std::size_t j = 0; j < n; ++j) {
      const double cj = -a[j] / (t - x_[j]) / sa;
      d[j] += cj;
      d -= cj * l;
    }
    return d;
  }

  Eigen::MatrixXd differentiation_matrix() const {
    const std::size_t n = x_.size();
    Eigen::MatrixXd D = Eigen::MatrixXd::Zero(n, n);
    for (std::size_t i = 0; i < n; ++i) {
      double diag = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        if (i == j) continue;
        D(i, j) = w_[j] / w_[i] / (x_[i] - x_[j]);
        diag -= D(i, j);
      }
      D(i, i) = diag;
    }
    return D;
  }

 private:
  std::vector<double> x_;
  std::vector<double> w_;
};

// Spectral differentiation on n equispaced points of a period (n even).
inline Eigen::MatrixXd fourier_differentiation(int n) {
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(n, n);
  const double h = 2.0 * kPi / n;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      const int k = i - j;
      const double sign = (k % 2 == 0) ? 1.0 : -1.0;
      D(i, j) = 0.5 * sign / std::tan(0.5 * k * h);
    }
  return D;
}

// Second-derivative Fourier matrix (exact on trigonometric polynomials of degree < n/2).
inline Eigen::MatrixXd fourier_second_derivative(int n) {
  Eigen::MatrixXd D2 = Eigen::MatrixXd::Zero(n, n);
  const double h = 2.0 * kPi / n;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const int k = i - j;
      if (k == 0) {
        D2(i, j) = -kPi * kPi / (3.0 * h * h) - 1.0 / 6.0;
      } else {
        const double sign = (k % 2 == 0) ? 1.0 : -1.0;
        const double s = std::sin(0.5 * k * h);
        D2(i, j) = -0.5 * sign / (s * s);
      }
    }
  return D2;
}

}  // namespace bubbles::quad
