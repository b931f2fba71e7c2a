#include "bubbles/oracle.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <gtest/gtest.h>

#include <sstream>

using namespace bubbles;

namespace {

StandardBubble asym() { return solve_standard_bubble({2, 1.0, 3.0, 2.0}); }
StandardBubble sym() { return solve_standard_bubble({2, 0.0, 3.0, 3.0}); }

MetricChart flat() { return builtin_chart({"euclidean", 3}); }
MetricChart sphere() { return builtin_chart({"round_sphere", 3}); }

const Vec kOrigin = Vec::Zero(3);
const Vec kAxis = Vec::Unit(3, 2);

OracleOptions coarse() { return {16, 32, 30, 1}; }

double sinc(double r) { return r < 1e-8 ? 1.0 - r * r / 6.0 : std::sin(r) / r; }

// Normal-coordinate metric of the unit round sphere.
Mat sphere_normal_metric(const Vec& x) {
  const double r = x.norm();
  if (r == 0.0) return Mat::Identity(3, 3);
  const Vec u = x / r;
  const Mat P = u * u.transpose();
  return P + sinc(r) * sinc(r) * (Mat::Identity(3, 3) - P);
}

double exact_sphere_area(const StandardBubble& b, int s, double rho) {
  double a = 0.0;
  for (const auto& smp : sample_sheet(b, s, 48, 96)) {
    const Mat T = rho * sheet_tangents(b, s, smp.param);
    a += smp.param_weight * std::sqrt((T.transpose() * sphere_normal_metric(rho * smp.position) * T).determinant());
  }
  return a;
}

// V1 and V2 by axial slices: density sinc^2(|x|) in normal coordinates.
std::pair<double, double> exact_sphere_volumes(const StandardBubble& b, double rho) {
  using boost::math::quadrature::gauss_kronrod;
  auto q = [](auto f, double a, double c) { return gauss_kronrod<double, 61>::integrate(f, a, c, 12, 1e-13); };
  auto slab = [&](int s, double z0, double z1) {
    return q(
        [&](double z) {
          const double r2 = b.R[s] * b.R[s] - (z - b.c[s]) * (z - b.c[s]);
          if (r2 <= 0) return 0.0;
          return q([&](double r) { return 2 * kPi * r * std::pow(sinc(rho * std::hypot(r, z)), 2); }, 0.0, std::sqrt(r2));
        },
        z0, z1);
  };
  const double p1 = slab(1, 0.0, b.c[1] + b.R[1]), p2 = slab(2, b.c[2] - b.R[2], 0.0);
  const double p0 = b.symmetric() ? 0.0 : slab(0, b.c[0] - b.R[0], 0.0);
  const double s = std::pow(rho, 3);
  return {s * (p1 + p0), s * (p2 - p0)};
}

}  // namespace

TEST(Oracle, FlatIsExact) {
  for (const auto& b : {asym(), sym()}) {
    const double rho = 0.3;
    const auto eb = embed(flat(), kOrigin, kAxis, b, rho, nullptr, coarse());
    const auto A = measure_area(eb);
    for (int s = 0; s < 3; ++s) EXPECT_NEAR(A[s] / (rho * rho), b.area[s], 1e-11);
    const auto V = measure_volumes(eb);
    EXPECT_NEAR(V.first / std::pow(rho, 3), b.V1, 1e-11);
    EXPECT_NEAR(V.second / std::pow(rho, 3), b.V2, 1e-11);
    EXPECT_LE(measure_conormal_defect(eb), 1e-10);
    for (int s = 0; s < 3; ++s)
      for (const auto& z : interior_params(b, s)) {
        const double H = measure_mean_curvature(eb, s, z);
        if (b.is_disk(s))
          EXPECT_NEAR(H, 0.0, 1e-8);
        else
          EXPECT_NEAR(rho * b.R[s] * H, 2.0, 1e-8);
      }
  }
}

TEST(Oracle, SphereMatchesExactNormalMetric) {
  const auto b = asym();
  const double rho = 0.3;
  const auto eb = embed(sphere(), kOrigin, kAxis, b, rho, nullptr, {24, 48, 60, 1});
  const auto A = measure_area(eb);
  for (int s = 0; s < 3; ++s) EXPECT_NEAR(A[s] / exact_sphere_area(b, s, rho), 1.0, 1e-8) << s;
  const auto V = measure_volumes(eb);
  const auto Ve = exact_sphere_volumes(b, rho);
  EXPECT_NEAR(V.first / Ve.first, 1.0, 1e-8);
  EXPECT_NEAR(V.second / Ve.second, 1.0, 1e-8);
}

TEST(Oracle, KillingInvariance) {
  // rotating the frame seed is an isometry of both charts at the origin
  const auto b = asym();
  for (const auto& chart : {flat(), sphere()}) {
    const double e0 = measure_energy(embed(chart, kOrigin, kAxis, b, 0.2, nullptr, coarse()), b.params);
    const double e1 = measure_energy(embed(chart, kOrigin, Vec(Eigen::Vector3d(1, -2, 0.5)), b, 0.2, nullptr, coarse()), b.params);
    EXPECT_NEAR(e0, e1, 1e-10);
  }
}

TEST(Oracle, ThreadCountDoesNotChangeResults) {
  const auto b = asym();
  auto opt = coarse();
  const auto a1 = measure_area(embed(sphere(), kOrigin, kAxis, b, 0.2, nullptr, opt));
  opt.jobs = 4;
  const auto a4 = measure_area(embed(sphere(), kOrigin, kAxis, b, 0.2, nullptr, opt));
  for (int s = 0; s < 3; ++s) EXPECT_EQ(a1[s], a4[s]);
}

TEST(Oracle, Errors) {
  const auto b = asym();
  EXPECT_THROW(embed(flat(), kOrigin, kAxis, b, 0.0), ParameterError);
  EXPECT_THROW(embed(builtin_chart({"euclidean", 2}), Vec(Vec::Zero(2)), Vec(Vec::Unit(2, 1)), b, 0.1), ParameterError);
  const auto eb = embed(flat(), kOrigin, kAxis, b, 0.2, nullptr, coarse());
  SheetParam z;
  z.t = sheet_extent(b, 1);
  EXPECT_THROW(measure_forms(eb, 1, z), ParameterError);
  const auto rep = measure(eb, false);
  EXPECT_THROW(phi_from_energy(rep, b, 0.3), ParameterError);
  EXPECT_NO_THROW(phi_from_energy(rep, b, 0.2));
}

TEST(Oracle, SecondFormMatchesExpansionOnSphere) {
  const auto b = asym();
  const auto c = curvature_at(sphere(), kOrigin, kAxis);
  std::vector<double> rhos{0.2, 0.1, 0.05}, errs;
  const SheetParam z{0.5 * sheet_extent(b, 2), 1.0};
  for (double rho : rhos) {
    const auto eb = embed(sphere(), kOrigin, kAxis, b, rho, nullptr, coarse());
    const auto mf = measure_forms(eb, 2, z);
    const Mat h = perturbed_second_form(b, 2, nullptr, c, rho, z);
    const Mat g = perturbed_first_form(b, 2, nullptr, c, rho, z);
    errs.push_back(std::max((mf.second - h).norm() / rho, (mf.first - g).norm() / (rho * rho)));
  }
  EXPECT_GE(fit_order(rhos, errs).slope, 2.7);
}

TEST(Verify, SphereSweep) {
  const auto b = asym();
  const auto chart = sphere();
  const auto c = curvature_at(chart, kOrigin, kAxis);
  VerifyOptions opt;
  opt.oracle = coarse();
  for (const std::string q : {"area", "V1", "V2", "H", "conormal", "phi"}) {
    const auto r = verify_expansion(chart, c, b, q, {0.2, 0.14, 0.1, 0.07}, opt);
    EXPECT_TRUE(r.pass) << q << " slope " << r.fit.slope;
    EXPECT_GT(r.fit.r_squared, 0.99) << q;
  }
}

TEST(Verify, FlatLinearTermsAreExact) {
  for (const auto& b : {asym(), sym()}) {
    const auto chart = flat();
    const auto c = curvature_at(chart, kOrigin, kAxis);
    VerifyOptions opt;
    opt.oracle = coarse();
    for (const std::string q : {"area_linear", "volume_linear"}) {
      const auto r = verify_expansion(chart, c, b, q, {0.2, 0.1, 0.05}, opt);
      for (const auto& row : r.rows) EXPECT_LE(row.error, 1e-6) << q;
    }
  }
}

TEST(Verify, UnknownQuantity) {
  EXPECT_THROW(verify_expansion(flat(), curvature_at(flat(), kOrigin, kAxis), asym(), "volume", {0.2, 0.1, 0.05}),
               ParameterError);
}

TEST(FitOrder, PowerLaw) {
  const std::vector<double> r{0.4, 0.2, 0.1, 0.05};
  std::vector<double> e;
  for (double x : r) e.push_back(3.0 * std::pow(x, 2.5));
  const auto f = fit_order(r, e);
  EXPECT_NEAR(f.slope, 2.5, 1e-12);
  EXPECT_NEAR(f.r_squared, 1.0, 1e-12);
  EXPECT_FALSE(f.exact);
}

TEST(FitOrder, ExactSentinelAndErrors) {
  const auto f = fit_order({0.3, 0.2, 0.1}, {1e-3, 0.0, 1e-5});
  EXPECT_TRUE(f.exact);
  EXPECT_TRUE(std::isinf(f.slope));
  EXPECT_THROW(fit_order({0.3, 0.2}, {1.0, 1.0}), ParameterError);
  EXPECT_THROW(fit_order({0.1, 0.2, 0.3}, {1.0, 1.0, 1.0}), ParameterError);
  EXPECT_THROW(fit_order({0.3, 0.2, 0.1}, {1.0, 1.0}), ParameterError);
}

TEST(Csv, FormatAndDeterminism) {
  EXPECT_EQ(format_double(0.1), "0.10000000000000001");
  const auto b = asym();
  const auto chart = sphere();
  const auto c = curvature_at(chart, kOrigin, kAxis);
  VerifyOptions opt;
  opt.oracle = {8, 16, 10, 1};
  std::string out[2];
  for (auto& s : out) {
    std::ostringstream os;
    write_csv_header(os);
    write_csv(os, verify_expansion(chart, c, b, "area", {0.2, 0.1, 0.05}, opt));
    s = os.str();
  }
  EXPECT_EQ(out[0], out[1]);
  EXPECT_EQ(std::count(out[0].begin(), out[0].end(), '\n'), 4);
}
