#include "bubbles/perturbation.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace bubbles;

namespace {

StandardBubble asym() { return solve_standard_bubble({2, 1.0, 3.0, 2.0}); }
StandardBubble sym() { return solve_standard_bubble({2, 0.0, 3.0, 3.0}); }

CurvatureAtPoint flat_curvature() {
  return curvature_at(builtin_chart({"euclidean", 3}), Vec::Zero(3), Vec::Unit(3, 2), false);
}

struct Residuals {
  double jacobi = 0.0, equiangular = 0.0, junction = 0.0;
};

Residuals residuals(const StandardBubble& b, const PerturbationField& f, int n_polar, int n_sphere) {
  const auto grids = make_grids(b, n_polar, n_sphere);
  std::array<Eigen::MatrixXd, 3> W;
  Residuals r;
  for (int s = 0; s < 3; ++s) {
    W[s] = grids[s].sample([&](const SheetParam& z) { return f.w(s, z); });
    r.jacobi = std::max(r.jacobi, jacobi_apply(b, grids[s], W[s]).cwiseAbs().maxCoeff());
  }
  r.equiangular = linearized_equiangularity_residual(b, grids, W, coupling_constants(b.params)).sup();
  r.junction = junction_residual(b, f, n_sphere);
  return r;
}

}  // namespace

TEST(Couplings, Values) {
  const auto q = coupling_constants({2, 1.0, 3.0, 2.0});
  EXPECT_NEAR(q.q0, 5.0 / kSqrt3, 1e-15);
  EXPECT_NEAR(q.q1, -1.0 / kSqrt3, 1e-15);
  EXPECT_NEAR(q.q2, -4.0 / kSqrt3, 1e-15);
  EXPECT_NEAR(q.per_length(2)[0], 2.5 / kSqrt3, 1e-15);
  EXPECT_THROW(coupling_constants({2, 1.0, 1.0, 1.0}), ParameterError);
}

TEST(AdmissibleClosure, SharedNeck) {
  const auto b = asym();
  const auto neck = neck_params(2, 32);
  std::mt19937_64 rng(7);
  std::normal_distribution<double> g;
  std::vector<double> w0, w2;
  std::vector<Vec> gamma;
  for (const auto& z : neck) {
    w0.push_back(g(rng));
    w2.push_back(g(rng));
    // tangent to the neck circle
    const Vec e = sphere_point(2, z);
    gamma.push_back(Vec(Eigen::Vector3d(-e[1], e[0], 0.0) * g(rng)));
  }
  const auto d = admissible_closure(w0, w2, gamma);
  EXPECT_LE(boundary_junction_residual(b, neck, d), 1e-13);
  for (std::size_t k = 0; k < neck.size(); ++k) EXPECT_DOUBLE_EQ(d.w1[k], w0[k] + w2[k]);
  // breaking w1 = w0 + w2 breaks the junction
  auto bad = d;
  bad.w1[3] += 0.1;
  EXPECT_GT(boundary_junction_residual(b, neck, bad), 1e-2);
  EXPECT_THROW(admissible_closure(w0, {1.0}, {}), ParameterError);
}

TEST(RandomField, AdmissibleAndNormalized) {
  for (const auto& b : {asym(), sym()})
    for (std::uint64_t seed : {1u, 2u, 3u}) {
      const double amp = 0.05;
      const auto f = random_admissible_field(b, seed, amp);
      EXPECT_LE(junction_residual(b, f), 1e-13);
      EXPECT_NEAR(field_sup(b, f), amp, 1e-13);
      EXPECT_NO_THROW(check_admissible(b, f, default_admissibility_bound(b)));
      EXPECT_THROW(check_admissible(b, f.scaled(100.0), default_admissibility_bound(b)), ParameterError);
    }
}

TEST(RandomField, Deterministic) {
  const auto b = asym();
  const auto f = random_admissible_field(b, 42, 0.1), g = random_admissible_field(b, 42, 0.1);
  const SheetParam z{0.3, 1.1};
  for (int s = 0; s < 3; ++s) {
    EXPECT_EQ(f.w(s, z), g.w(s, z));
    EXPECT_EQ(f.Y(s, z, 3), g.Y(s, z, 3));
  }
}

TEST(Killing, GeneratorCount) {
  const auto g = killing_generators(2);
  EXPECT_EQ(g.size(), 5u);
  for (const auto& k : g) EXPECT_FALSE(is_trivial(k, 2));
  EXPECT_TRUE(is_trivial({true, Vec(), 0, 1}, 2));
  EXPECT_THROW(killing_kernel_field(asym(), {true, Vec(), 1, 1}), ParameterError);
}

TEST(Killing, KernelResiduals) {
  for (const auto& b : {asym(), sym()})
    for (const auto& g : killing_generators(2)) {
      const auto r = residuals(b, killing_kernel_field(b, g), 24, 48);
      EXPECT_LE(r.jacobi, 1e-6);
      EXPECT_LE(r.equiangular, 1e-6);
      EXPECT_LE(r.junction, 1e-12);
    }
}

TEST(Killing, RandomFieldsAreNotKernel) {
  const auto b = asym();
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto r = residuals(b, random_admissible_field(b, seed, 1.0), 24, 48);
    EXPECT_GE(std::max(r.jacobi, r.equiangular), 1e-2) << seed;
    EXPECT_LE(r.junction, 1e-12);
  }
}

TEST(SheetGrid, SphericalHarmonicEigenvalue) {
  // 3 cos^2 t - 1 on a round sheet: Laplacian eigenvalue -6 / R^2
  const auto b = asym();
  for (int s = 1; s < 3; ++s) {
    const SheetGrid grid(b, s, 24, 32);
    const auto W = grid.sample([](const SheetParam& z) { return 3.0 * std::cos(z.t) * std::cos(z.t) - 1.0; });
    const Eigen::MatrixXd L = grid.laplacian(W);
    EXPECT_LE((L + 6.0 / (b.R[s] * b.R[s]) * W).cwiseAbs().maxCoeff(), 1e-9);
  }
  // disk: Laplacian of |x|^2 + x_1 is 4
  const auto bs = sym();
  const SheetGrid disk(bs, 0, 24, 32);
  const auto W = disk.sample([](const SheetParam& z) { return z.t * z.t + z.t * std::cos(z.a1); });
  EXPECT_LE((disk.laplacian(W).array() - 4.0).abs().maxCoeff(), 1e-9);
}

TEST(SheetGrid, NeckTraceAndDerivative) {
  const auto b = asym();
  const SheetGrid grid(b, 2, 20, 16);
  const double ext = sheet_extent(b, 2);
  const auto W = grid.sample([](const SheetParam& z) { return std::cos(z.t) + 0.2 * std::sin(z.t) * std::sin(z.a1); });
  const auto tr = grid.neck_trace(W), dn = grid.neck_conormal_derivative(W);
  for (int k = 0; k < grid.cols(); ++k) {
    const double a = grid.column_param(k, 0.0).a1;
    EXPECT_NEAR(tr[k], std::cos(ext) + 0.2 * std::sin(ext) * std::sin(a), 1e-11);
    EXPECT_NEAR(dn[k], -(-std::sin(ext) + 0.2 * std::cos(ext) * std::sin(a)) / b.R[2], 1e-10);
  }
  EXPECT_THROW(SheetGrid(solve_standard_bubble({3, 1.0, 3.0, 2.0}), 1, 8, 8), ParameterError);
  EXPECT_THROW(SheetGrid(b, 1, 8, 7), ParameterError);
}

TEST(PointwiseForms, UnperturbedFlat) {
  const auto b = asym();
  const auto c = flat_curvature();
  const double rho = 0.3;
  for (int s = 0; s < 3; ++s) {
    const SheetParam z{0.5 * sheet_extent(b, s), 0.8};
    const Mat T = sheet_tangents(b, s, z);
    const Mat g = T.transpose() * T;
    EXPECT_LE((perturbed_first_form(b, s, nullptr, c, rho, z) - rho * rho * g).norm(), 1e-14);
    EXPECT_LE((perturbed_second_form(b, s, nullptr, c, rho, z) - rho / b.R[s] * g).norm(), 1e-14);
    EXPECT_NEAR(perturbed_mean_curvature(b, s, nullptr, c, rho, z), 2.0, 1e-14);
  }
}

TEST(PointwiseForms, RigidMotionsLeaveShapeUnchanged) {
  // a Killing field moves the sheet rigidly, so the linear terms of h and H vanish
  const auto b = asym();
  const auto c = flat_curvature();
  for (const auto& g : killing_generators(2)) {
    const auto f = killing_kernel_field(b, g);
    for (int s = 0; s < 3; ++s) {
      const SheetParam z{0.6 * sheet_extent(b, s), 2.1};
      const Mat h0 = perturbed_second_form(b, s, nullptr, c, 1.0, z);
      EXPECT_LE((perturbed_second_form(b, s, &f, c, 1.0, z) - h0).norm(), 1e-6);
      EXPECT_NEAR(perturbed_mean_curvature(b, s, &f, c, 1.0, z), 2.0, 1e-6);
    }
  }
}

TEST(PointwiseForms, FirstFormTracksDisplacedTangents) {
  // the pulled back metric of the displaced sheet agrees with differences of displaced points
  const auto b = asym();
  const auto c = flat_curvature();
  const auto f = random_admissible_field(b, 5, 0.05);
  const SheetParam z{0.4, 1.3};
  for (int s = 0; s < 3; ++s) {
    const double h = 1e-5;
    Mat T(3, 2);
    for (int i = 0; i < 2; ++i)
      T.col(i) = (displaced_point(b, s, &f, z.shifted(i, h)) - displaced_point(b, s, &f, z.shifted(i, -h))) / (2 * h);
    EXPECT_LE((perturbed_first_form(b, s, &f, c, 1.0, z) - T.transpose() * T).norm(), 1e-8);
  }
}

TEST(SheetIntegrals, DivergenceTheorem) {
  // int div Y = -int_Gamma <Y, nu> with nu the inward conormal
  for (const auto& b : {asym(), sym()}) {
    const auto f = random_admissible_field(b, 11, 0.1);
    const int n = 256;
    for (int s = 0; s < 3; ++s) {
      double flux = 0.0;
      for (const auto& a : neck_params(2, n)) {
        SheetParam z = a;
        z.t = sheet_extent(b, s);
        flux -= f.Y(s, z, 3).dot(neck_conormal(b, s, a)) * 2.0 * kPi * b.r / n;
      }
      EXPECT_NEAR(sheet_integrals(b, s, f, 48, 64).divY, flux, 1e-8) << s;
    }
  }
}

TEST(LinearTerms, RigidMotionsChangeNothing) {
  const auto b = asym();
  const auto c = flat_curvature();
  const auto zero = random_admissible_field(b, 1, 1.0).scaled(0.0);
  const auto A0 = perturbed_area_expansion(b, zero, c, 1.0);
  for (const auto& g : killing_generators(2)) {
    const auto f = killing_kernel_field(b, g);
    const auto A = perturbed_area_expansion(b, f, c, 1.0);
    EXPECT_NEAR(A[0] + A[1] + A[2], A0[0] + A0[1] + A0[2], 1e-8);
    const auto V = perturbed_volume_expansion(b, f, 1.0);
    EXPECT_NEAR(V.first, 0.0, 1e-10);
    EXPECT_NEAR(V.second, 0.0, 1e-10);
  }
}

TEST(LinearTerms, UniformNormalGrowthOfCap) {
  // w = 1 on sheet 1 only (not admissible, but the volume formula is pointwise linear): dV1 = -|Sigma^1|
  const auto b = asym();
  PerturbationField f;
  f.sheet[1].w = [](const SheetParam&) { return 1.0; };
  const auto V = perturbed_volume_expansion(b, f, 1.0);
  EXPECT_NEAR(V.first, -b.area[1], 1e-10);
  EXPECT_NEAR(V.second, 0.0, 1e-15);
}
