#include "bubbles/asymptotics.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <gtest/gtest.h>

using namespace bubbles;

namespace {

double integrate(const std::function<double(double)>& f, double a, double b) {
  using boost::math::quadrature::gauss_kronrod;
  return gauss_kronrod<double, 61>::integrate(f, a, b, 15, 1e-14);
}

// Slab [z_lo, z_hi] of a ball (axial center c, radius R) in R^3: volume and second moments
// M_par = int z^2, M_perp = int x_1^2.
struct Moments {
  double vol, par, perp;
};

Moments ball_slab(double c, double R, double z_lo, double z_hi) {
  auto r2 = [&](double z) { return std::max(0.0, R * R - (z - c) * (z - c)); };
  return {integrate([&](double z) { return kPi * r2(z); }, z_lo, z_hi),
          integrate([&](double z) { return z * z * kPi * r2(z); }, z_lo, z_hi),
          integrate([&](double z) { return kPi * r2(z) * r2(z) / 4.0; }, z_lo, z_hi)};
}

// Region between cap sigma and the neck plane.
Moments cap_region(const StandardBubble& b, int s) {
  if (StandardBubble::orientation(s) > 0) return ball_slab(b.c[s], b.R[s], 0.0, b.c[s] + b.R[s]);
  return ball_slab(b.c[s], b.R[s], b.c[s] - b.R[s], 0.0);
}

// With sqrt(det g) = 1 - Ric(x, x) / 6 + ..., the rho^2 coefficient of the volume is
// -(1/6) [(Sc - Ric_ss) M_perp + Ric_ss M_par].
void expect_volume_coefficients(const ExpansionTerms& e, const Moments& M, double tol) {
  EXPECT_NEAR(e.leading, M.vol, tol);
  EXPECT_NEAR(e.sc_coeff, -M.perp / 6.0, tol);
  EXPECT_NEAR(e.ric_coeff, -(M.par - M.perp) / 6.0, tol);
}

// rho^2 coefficient of the area of one sheet for a given curvature tensor: the area element of
// delta + (1/3) Rm(x, ., x, .) is 1 + (1/6) tr_T Rm(x, ., x, .).
double area_second_order(const StandardBubble& b, int s, const CurvatureAtPoint& c) {
  double sum = 0.0;
  for (const auto& smp : sample_sheet(b, s, 64, 64)) {
    Mat T = sheet_tangents(b, s, smp.param);
    const Mat G = T.transpose() * T;
    Mat Q(T.cols(), T.cols());
    for (int i = 0; i < T.cols(); ++i)
      for (int j = 0; j < T.cols(); ++j) Q(i, j) = c.rm(smp.position, T.col(i), smp.position, T.col(j));
    sum += smp.weight * (G.inverse() * Q).trace() / 6.0;
  }
  return sum;
}

std::vector<CurvatureAtPoint> model_curvatures() {
  ChartSpec sphere{"round_sphere", 3};
  ChartSpec product{"product", 3};
  product.factors = {{"sphere", 2, 1.0}, {"flat", 1, 1.0}};
  const auto cs = builtin_chart(sphere), cp = builtin_chart(product);
  const Vec o = Vec::Zero(3);
  return {curvature_at(cs, o, Vec::Unit(3, 2), false), curvature_at(cp, o, Vec::Unit(3, 2), false),
          curvature_at(cp, o, Vec::Unit(3, 0), false), curvature_at(cp, o, Vec(Vec::Ones(3)), false)};
}

StandardBubble asym() { return solve_standard_bubble({2, 1.0, 3.0, 2.0}); }
StandardBubble sym() { return solve_standard_bubble({2, 0.0, 3.0, 3.0}); }

}  // namespace

TEST(SinePowerQuadrature, AgreesWithRecursion) {
  for (int k = 0; k <= 7; ++k)
    for (double x : {0.2, 1.1, 2.0 * kPi / 3.0, 3.0}) EXPECT_NEAR(sine_power_integral_quadrature(k, x), sine_power_integral(k, x), 1e-13);
}

TEST(VolumeExpansion, CapCoefficientsMatchMoments) {
  for (const auto& b : {asym(), sym(), solve_standard_bubble({2, 0.4, 1.0, 0.6})})
    for (int s = 0; s < 3; ++s) {
      if (b.is_disk(s)) continue;
      SCOPED_TRACE(s);
      expect_volume_coefficients(cap_volume_expansion(b, s), cap_region(b, s), 1e-10);
    }
}

TEST(VolumeExpansion, ChambersCombineCaps) {
  const auto b = asym();
  const auto v = geodesic_volumes_expansion(b);
  EXPECT_NEAR(v.V1.leading, b.V1, 1e-12);
  EXPECT_NEAR(v.V2.leading, b.V2, 1e-12);
  const auto M1 = cap_region(b, 1), M0 = cap_region(b, 0), M2 = cap_region(b, 2);
  expect_volume_coefficients(v.V1, {M1.vol + M0.vol, M1.par + M0.par, M1.perp + M0.perp}, 1e-10);
  expect_volume_coefficients(v.V2, {M2.vol - M0.vol, M2.par - M0.par, M2.perp - M0.perp}, 1e-10);
  EXPECT_EQ(v.V1.remainder_order, 3);
}

TEST(VolumeExpansion, SymmetricHalves) {
  const auto b = sym();
  const auto e = symmetric_volume_expansion(2, b.R[1]);
  const auto M = cap_region(b, 1);
  expect_volume_coefficients(e, M, 1e-10);
  const auto v = geodesic_volumes_expansion(b);
  EXPECT_NEAR(v.V1.sc_coeff, v.V2.sc_coeff, 1e-14);
  EXPECT_NEAR(v.V1.ric_coeff, v.V2.ric_coeff, 1e-14);
}

TEST(AreaExpansion, SheetCoefficientsMatchQuadrature) {
  const auto curvs = model_curvatures();
  for (const auto& b : {asym(), sym()})
    for (int s = 0; s < 3; ++s) {
      const auto e = sheet_area_expansion(b, s);
      EXPECT_NEAR(e.leading, b.area[s], 1e-11);
      for (const auto& c : curvs) {
        const double ric = c.ricci(2, 2);
        EXPECT_NEAR(e.sc_coeff * c.scalar + e.ric_coeff * ric, area_second_order(b, s, c), 1e-9)
            << "sheet " << s << " sc " << c.scalar << " ric " << ric;
      }
    }
}

TEST(AreaExpansion, TotalAndOrders) {
  const auto a = geodesic_area_expansion(asym());
  const auto total = a.sheet[0] + a.sheet[1] + a.sheet[2];
  EXPECT_NEAR(a.total.sc_coeff, total.sc_coeff, 1e-15);
  EXPECT_EQ(a.total.remainder_order, 3);
  EXPECT_EQ(geodesic_area_expansion(sym()).total.remainder_order, 4);
}

TEST(ReducedConstants, SumOfSheets) {
  for (const auto& b : {asym(), sym()}) {
    const auto rc = reduced_constants(b);
    EXPECT_NEAR(rc.per_sheet[0][0] + rc.per_sheet[1][0] + rc.per_sheet[2][0], rc.A, 1e-14);
    EXPECT_EQ(rc.symmetric, b.symmetric());
  }
}

TEST(ReducedConstants, RicciPartCancels) {
  for (const auto& b : {asym(), sym(), solve_standard_bubble({2, 2.0, 2.5, 0.5}), solve_standard_bubble({1, 1.0, 3.0, 2.0}),
                        solve_standard_bubble({3, 1.0, 3.0, 2.0})}) {
    const auto rc = reduced_constants(b);
    EXPECT_NEAR(rc.B, 0.0, 1e-13);
    for (int s = 0; s < 3; ++s) EXPECT_NEAR(rc.per_sheet[s][1], reduced_ricci_sheet_closed_form(b, s), 1e-13);
  }
}

TEST(ReducedConstants, FlatEnergyLimit) {
  // Phi from the expansion-level energy reproduces Sc A - Ric B with no remainder at rho^2.
  const auto b = asym();
  const auto c = model_curvatures()[1];
  const auto rc = reduced_constants(b);
  const double rho = 1e-2;
  const auto a = geodesic_area_expansion(b);
  const auto v = geodesic_volumes_expansion(b);
  const double sc = c.scalar, ric = c.ricci(2, 2);
  const double psi = std::pow(rho, 2) * a.total.value(rho, sc, ric) -
                     std::pow(rho, 3) * (b.params.H1 / rho * v.V1.value(rho, sc, ric) + b.params.H2 / rho * v.V2.value(rho, sc, ric));
  EXPECT_NEAR(phi_from_energy(psi, b, rho), reduced_functional_leading(c, Vec::Unit(3, 2), rc), 1e-7);
}

TEST(ReferenceConstants, SymmetricValues) {
  const auto b = sym();
  const auto r1 = reference_constants(b);
  const auto r2 = reference_constants_with(b, [](int k, double x) { return sine_power_integral_quadrature(k, x); });
  EXPECT_NEAR(r1.A, 2.86875, 1e-10);
  EXPECT_NEAR(r1.B, 0.984375, 1e-10);
  EXPECT_NEAR(r2.A, 2.86875, 1e-10);
  EXPECT_NEAR(r2.B, 0.984375, 1e-10);
}

TEST(ReducedFunctional, Errors) {
  const auto c = model_curvatures()[0];
  EXPECT_THROW(reduced_functional_leading(c, Vec::Ones(3), reduced_constants(asym())), ParameterError);
  EXPECT_THROW(phi_from_energy(1.0, asym(), 0.0), ParameterError);
}
