#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include <Eigen/Dense>

#include "chemo/grid.hpp"

using namespace chemo;

namespace {

Eigen::ArrayXd random_field(const Grid& g, std::uint64_t seed, double lo = 0.0, double hi = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(lo, hi);
  Eigen::ArrayXd f(g.size());
  for (Eigen::Index k = 0; k < f.size(); ++k) f(k) = dist(rng);
  return f;
}

}  // namespace

TEST(Grid, SpacingMeasureAndIndexing) {
  Grid g(8, 4, 2.0, 1.0);
  EXPECT_EQ(g.dim(), 2);
  EXPECT_DOUBLE_EQ(g.spacing(0), 0.25);
  EXPECT_DOUBLE_EQ(g.spacing(1), 0.25);
  EXPECT_EQ(g.size(), 32);
  EXPECT_DOUBLE_EQ(g.measure(), 2.0);
  EXPECT_DOUBLE_EQ(g.cell_volume(), 0.0625);
  EXPECT_DOUBLE_EQ(g.diameter(), std::sqrt(5.0));
  EXPECT_EQ(g.index(3, 2), 3 + 8 * 2);
  EXPECT_DOUBLE_EQ(g.center(0, 0), 0.125);

  Grid line(10, 3.0);
  EXPECT_EQ(line.dim(), 1);
  EXPECT_EQ(line.size(), 10);
  EXPECT_DOUBLE_EQ(line.measure(), 3.0);
  EXPECT_DOUBLE_EQ(line.cell_volume(), 0.3);
}

TEST(Grid, RejectsDegenerateShapes) {
  EXPECT_THROW(Grid(0, 1.0), std::invalid_argument);
  EXPECT_THROW(Grid(4, 0.0), std::invalid_argument);
  EXPECT_THROW(Grid(4, 4, 1.0, -1.0), std::invalid_argument);
  EXPECT_THROW(Grid(6, 1.0).coarsened(4), std::invalid_argument);
}

TEST(Grid, CoarsenAndRefineRoundTrip) {
  Grid g(16, 8, 1.0, 0.5);
  EXPECT_EQ(g.coarsened(2).cells(0), 8);
  EXPECT_EQ(g.coarsened(2).cells(1), 4);
  EXPECT_TRUE(g.coarsened(4).refined(4) == g);
}

TEST(Integrate, ConstantTimesMeasure) {
  Grid g(5, 4, 2.0, 1.0);
  EXPECT_DOUBLE_EQ(integrate(Field(g, 3.0)), 6.0);
  EXPECT_EQ(integrate(Field(g, 0.0)), 0.0);
}

TEST(Integrate, MidpointExactForLinear) {
  Grid g(64, 1.0);
  const Field f = Field::sample(g, [](double x, double) { return x; });
  EXPECT_NEAR(integrate(f), 0.5, 1e-15);
}

TEST(Integrate, NonFiniteRejectedWithCellIndex) {
  Grid g(6, 1.0);
  Eigen::ArrayXd v = Eigen::ArrayXd::Ones(6);
  v(4) = std::numeric_limits<double>::quiet_NaN();
  try {
    integrate(g, v);
    FAIL() << "expected NonFiniteValue";
  } catch (const NonFiniteValue& e) {
    EXPECT_EQ(e.cell(), 4);
  }
}

TEST(Integrate, Linearity) {
  Grid g(12, 7, 1.0, 1.3);
  const Eigen::ArrayXd f = random_field(g, 1), h = random_field(g, 2);
  const double a = 0.7, b = -2.5;
  EXPECT_NEAR(integrate(g, a * f + b * h), a * integrate(g, f) + b * integrate(g, h), 1e-14);
}

TEST(LpNorm, ClosedForms) {
  Grid g(10, 10, 1.0, 1.0);
  EXPECT_NEAR(lp_norm(Field(g, 2.0), 3.0), 2.0, 1e-14);
  EXPECT_EQ(lp_norm(Field(g, 0.0), 2.5), 0.0);
  const Field half = Field::sample(g, [](double x, double) { return x < 0.5 ? 1.0 : 0.0; });
  EXPECT_NEAR(lp_norm(half, 2.0), std::sqrt(0.5), 1e-14);
  EXPECT_THROW(lp_norm(half, 0.5), std::invalid_argument);
}

TEST(LpNorm, OneNormIsIntegralOfAbs) {
  Grid g(9, 1.0);
  const Eigen::ArrayXd f = random_field(g, 3, -1.0, 1.0);
  EXPECT_NEAR(lp_norm(g, f, 1.0), integrate(g, f.abs()), 1e-15);
  EXPECT_LE(lp_norm(g, 0.5 * f, 2.0), lp_norm(g, f, 2.0));
}

TEST(Gradient, ConstantIsExactlyZero) {
  Grid g(7, 5, 1.0, 2.0);
  const Eigen::ArrayXXd d = gradient(Field(g, 4.2));
  EXPECT_EQ(d.rows(), g.size());
  EXPECT_EQ(d.cols(), 2);
  EXPECT_EQ(d.abs().maxCoeff(), 0.0);
}

TEST(Gradient, LinearIsOneAwayFromBoundary) {
  Grid g(32, 1.0);
  const Field f = Field::sample(g, [](double x, double) { return x; });
  const Eigen::ArrayXXd d = gradient(f);
  for (int i = 1; i < 31; ++i) EXPECT_NEAR(d(i, 0), 1.0, 1e-12);
  // Mirrored ghost: centered difference over one spacing of data.
  EXPECT_NEAR(d(0, 0), 0.5, 1e-12);
}

TEST(Gradient, SymmetricBumpGivesAntisymmetricGradient) {
  Grid g(20, 1.0);
  const Field f = Field::sample(g, [](double x, double) { return std::exp(-40 * (x - 0.5) * (x - 0.5)); });
  const Eigen::ArrayXXd d = gradient(f);
  for (int i = 0; i < 20; ++i) EXPECT_NEAR(d(i, 0), -d(19 - i, 0), 1e-13);
}

TEST(Gradient, SingleCellAxisIsZero) {
  Grid g(6, 1, 1.0, 1.0);
  const Eigen::ArrayXXd d = gradient(Field::sample(g, [](double x, double) { return x * x; }));
  EXPECT_EQ(d.col(1).abs().maxCoeff(), 0.0);
}

TEST(FaceGradient, LinearInteriorAndZeroBoundaryFaces) {
  Grid g(8, 4, 1.0, 1.0);
  const Field f = Field::sample(g, [](double x, double y) { return 2 * x + 3 * y; });
  const Eigen::ArrayXXd d = face_gradient(g, f.values());
  for (int j = 0; j < 4; ++j)
    for (int i = 0; i < 8; ++i) {
      EXPECT_NEAR(d(g.index(i, j), 0), i < 7 ? 2.0 : 0.0, 1e-12);
      EXPECT_NEAR(d(g.index(i, j), 1), j < 3 ? 3.0 : 0.0, 1e-12);
    }
}

TEST(Laplacian, ConstantQuadraticAndDivergence) {
  Grid g(16, 12, 1.0, 0.75);
  EXPECT_EQ(laplacian(Field(g, 1.5)).values().abs().maxCoeff(), 0.0);

  Grid line(40, 1.0);
  const Eigen::ArrayXd q = laplacian(Field::sample(line, [](double x, double) { return x * x; })).values();
  for (int i = 1; i < 39; ++i) EXPECT_NEAR(q(i), 2.0, 1e-9);

  const Eigen::ArrayXd f = random_field(g, 4);
  EXPECT_NEAR(integrate(g, laplacian(g, f)), 0.0, 1e-12 * f.matrix().norm());
}

TEST(Laplacian, NeumannCosineModeIsDiscreteEigenvector) {
  // cos(pi x / L) at cell centers is an eigenvector of the mirrored stencil
  // with eigenvalue -(4 / h^2) sin^2(pi h / (2L)).
  const int n = 24;
  const double L = 1.5, h = L / n;
  Grid g(n, L);
  const Field f = Field::sample(g, [&](double x, double) { return std::cos(std::numbers::pi * x / L); });
  const double s = std::sin(std::numbers::pi * h / (2 * L));
  const double lambda = -4.0 / (h * h) * s * s;
  const Eigen::ArrayXd lf = laplacian(f).values();
  EXPECT_LT((lf - lambda * f.values()).abs().maxCoeff(), 1e-10);
}

TEST(Laplacian, MatrixMatchesOperatorAndIsSymmetric) {
  Grid g(6, 5, 1.0, 1.0);
  const Eigen::SparseMatrix<double> A = laplacian_matrix(g);
  const Eigen::ArrayXd f = random_field(g, 5);
  const Eigen::VectorXd Af = A * f.matrix();
  EXPECT_LT((Af.array() - laplacian(g, f)).abs().maxCoeff(), 1e-12);
  const Eigen::MatrixXd dense = Eigen::MatrixXd(A);
  EXPECT_LT((dense - dense.transpose()).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT((dense.rowwise().sum()).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(DirichletEnergy, MatchesFaceSum) {
  Grid g(10, 1.0);
  const Field f = Field::sample(g, [](double x, double) { return 3 * x; });
  // Nine interior faces, each contributing (3)^2 * h.
  EXPECT_NEAR(dirichlet_energy(g, f.values()), 9 * 9 * 0.1, 1e-12);
  EXPECT_EQ(dirichlet_energy(g, Eigen::ArrayXd::Constant(10, 2.0)), 0.0);
}

TEST(RestrictTo, AveragesAndPreservesIntegral) {
  Grid fine(16, 8, 1.0, 1.0);
  Grid coarse = fine.coarsened(2);
  const Eigen::ArrayXd f = random_field(fine, 6);
  const Eigen::ArrayXd r = restrict_to(coarse, fine, f);
  EXPECT_NEAR(integrate(coarse, r), integrate(fine, f), 1e-14);
  const double avg = 0.25 * (f(fine.index(0, 0)) + f(fine.index(1, 0)) + f(fine.index(0, 1)) +
                             f(fine.index(1, 1)));
  EXPECT_NEAR(r(coarse.index(0, 0)), avg, 1e-15);
  EXPECT_THROW(restrict_to(Grid(5, 1.0), Grid(16, 1.0), Eigen::ArrayXd::Zero(16)),
               std::invalid_argument);
}

TEST(ImplicitDiffusion, MatchesDenseLuOracle) {
  Grid g(7, 6, 1.0, 1.0);
  ImplicitDiffusion solver(g, 1e-13, 500);
  const Eigen::ArrayXd b = random_field(g, 7);
  const double tau = 0.03;
  const Eigen::ArrayXd x = solver.solve(b, tau);
  const Eigen::MatrixXd A =
      Eigen::MatrixXd::Identity(g.size(), g.size()) - tau * Eigen::MatrixXd(laplacian_matrix(g));
  const Eigen::VectorXd oracle = A.partialPivLu().solve(b.matrix());
  EXPECT_LT((x.matrix() - oracle).cwiseAbs().maxCoeff(), 1e-11);
}

TEST(ImplicitDiffusion, PreservesMassPositivityAndConstants) {
  Grid g(20, 20, 1.0, 1.0);
  ImplicitDiffusion solver(g, 1e-13, 1000);
  Eigen::ArrayXd b = Eigen::ArrayXd::Zero(g.size());
  b(g.index(10, 10)) = 100.0;
  const Eigen::ArrayXd x = solver.solve(b, 0.5);
  EXPECT_NEAR(integrate(g, x), integrate(g, b), 1e-10);
  EXPECT_GE(x.minCoeff(), -1e-13);
  const Eigen::ArrayXd c = solver.solve(Eigen::ArrayXd::Constant(g.size(), 0.3), 0.5);
  EXPECT_LT((c - 0.3).abs().maxCoeff(), 1e-12);
  const Eigen::ArrayXd same = solver.solve(b, 0.0);
  EXPECT_EQ((same - b).abs().maxCoeff(), 0.0);
  EXPECT_THROW(solver.solve(b, -1.0), std::invalid_argument);
}

TEST(ImplicitDiffusion, ReportsNonConvergence) {
  Grid g(30, 30, 1.0, 1.0);
  ImplicitDiffusion solver(g, 1e-15, 1);
  const Eigen::ArrayXd b = random_field(g, 8);
  EXPECT_THROW(solver.solve(b, 10.0), LinearSolverFailure);
}
