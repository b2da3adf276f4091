#include <cmath>
#include <numbers>

#include "doctest.h"
#include "lefschetz/heat.hpp"

using namespace lef;

namespace {

// trapezoid on [-L, L], enough for Gaussians of width ~ sqrt(t)
template <class F>
double trap(F f, double L = 12.0, int n = 24000) {
  const double h = 2 * L / n;
  double s = 0.5 * (f(-L) + f(L));
  for (int i = 1; i < n; ++i) s += f(-L + i * h);
  return s * h;
}

}  // namespace

TEST_CASE("Gaussian kernel: mass and semigroup") {
  const double t = 0.3, s = 0.45;
  double y = 0.4;
  double mass = trap([&](double x) { return gaussian_heat_kernel(&x, &y, t, 1); });
  CHECK(mass == doctest::Approx(1.0).epsilon(1e-12));
  double x = -0.7;
  double conv = trap([&](double z) { return gaussian_heat_kernel(&x, &z, s, 1) * gaussian_heat_kernel(&z, &y, t, 1); });
  CHECK(conv == doctest::Approx(gaussian_heat_kernel(&x, &y, s + t, 1)).epsilon(1e-12));
  // gradient against central differences
  double p[2] = {0.3, -0.2}, q[2] = {-0.1, 0.5}, g[2];
  gaussian_heat_gradient(p, q, t, 2, g);
  for (int i = 0; i < 2; ++i) {
    const double h = 1e-5;
    double a[2] = {p[0], p[1]}, b[2] = {p[0], p[1]};
    a[i] += h;
    b[i] -= h;
    double fd = (gaussian_heat_kernel(a, q, t, 2) - gaussian_heat_kernel(b, q, t, 2)) / (2 * h);
    CHECK(std::abs(fd - g[i]) < 1e-8);
  }
}

TEST_CASE("Mehler kernel") {
  std::vector<double> x{0.2, -0.1}, y{-0.3, 0.25};
  const double t = 0.4;
  Eigen::MatrixXd zero = Eigen::MatrixXd::Zero(2, 2);
  CHECK(mehler_kernel(zero, x, y, t) == doctest::Approx(gaussian_heat_kernel(x, y, t)).epsilon(1e-14));
  Eigen::MatrixXd R(2, 2);
  R << 0.0, 1.3, -1.3, 0.0;
  CHECK(mehler_pde_residual(R, x, y, t) < 1e-6);
  CHECK(mehler_pde_residual(zero, x, y, t) < 1e-6);
  CMatrix Rc = R.cast<std::complex<double>>();
  CHECK(std::abs(mehler_kernel(Rc, x, y, t) - mehler_kernel(R, x, y, t)) < 1e-14);
}

TEST_CASE("normal fibre integral against the closed form") {
  Eigen::MatrixXd minus = -Eigen::MatrixXd::Identity(2, 2);
  Eigen::MatrixXd zero = Eigen::MatrixXd::Zero(2, 2);
  // flat: ∫ G(v, -v, u) dv = 1/det(1 - gamma_N) = 1/4
  CHECK(normal_fiber_integral(zero, minus, 0.3) == doctest::Approx(0.25).epsilon(1e-10));
  CHECK(model_fixed_point_numeric(zero, minus, 0.3) == doctest::Approx(0.25).epsilon(1e-12));
  Eigen::MatrixXd R(2, 2);
  R << 0.0, 0.8, -0.8, 0.0;
  Eigen::MatrixXd rot(2, 2);
  rot << 0.0, -1.0, 1.0, 0.0;
  for (double u : {0.1, 0.5}) {
    CHECK(std::abs(normal_fiber_integral(R, rot, u) - model_fixed_point_numeric(R, rot, u)) < 1e-7);
    CHECK(std::abs(normal_fiber_integral(R, minus, u) - model_fixed_point_numeric(R, minus, u)) < 1e-7);
  }
}

TEST_CASE("h identity") {
  for (double x : {0.0, 0.3, 2.0, 15.0})
    for (double t : {0.05, 1.0}) {
      auto h = cm_h_identity(x, t);
      CHECK(std::abs(h.lhs - h.rhs) < 1e-12);
    }
}

TEST_CASE("Connes-Moscovici entries on p2") {
  auto G = make_group("p2");
  FlatDiracModel model(G, 1, 1, 2.0);
  const double t = 0.1;
  auto ks = cm_entry_kernels(model, t);
  REQUIRE(ks.size() == 3);
  // first entry: e^{-tD^2} eps is the Gaussian times the grading
  double x[2] = {0.1, 0.2}, y[2] = {-0.05, 0.3};
  CMatrix k0 = ks[0](x, y);
  CMatrix want = gaussian_heat_kernel(x, y, t, 2) * model.grading();
  CHECK((k0 - want).norm() < 1e-14);
  CHECK((model.grading() * model.grading() - CMatrix::Identity(2, 2)).norm() < 1e-14);
  // sigma(r) for the half turn: diag(-i, i), supertrace -2i
  auto r = G->named("r");
  CHECK(std::abs(model.rotation_angle(r) - std::numbers::pi) < 1e-14);
  CMatrix sr = model.sigma(r);
  CHECK(std::abs((model.grading() * sr).trace() - std::complex<double>(0, -2)) < 1e-14);

  std::vector<std::vector<double>> xs, ys;
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 6; ++j) {
      xs.push_back({0.1 * i - 0.2, 0.07 * j});
      ys.push_back({-0.3 + 0.11 * j, 0.5 - 0.13 * i});
    }
  for (const auto& K : ks) {
    CHECK(certificate_margin(K, xs, ys) >= 1.0);
    CHECK(equivariance_defect(K, model, xs, ys) < 1e-12);
  }
  auto M = cm_matrix_kernel(model, t);
  CHECK(M.size == 4);
  CHECK(certificate_margin(M, xs, ys) >= 1.0);
}

TEST_CASE("decay certificate of a Gaussian profile") {
  auto prof = [](double rho) { return std::exp(-rho * rho / 4) / (4 * std::numbers::pi); };
  auto c = certify(prof, 1.0, 2.0);
  CHECK(c.eta == 2.0);
  for (double rho = 0; rho < 20; rho += 0.05) CHECK(prof(rho) <= c.alpha * std::exp(-2.0 * rho));
  // sup of e^{-rho^2/4 + 2 rho} is e^4 at rho = 4
  CHECK(c.alpha == doctest::Approx(1.02 * std::exp(4.0) / (4 * std::numbers::pi)).epsilon(1e-3));
}

TEST_CASE("constants") {
  // alpha_q = q!/(2q+1)!
  CHECK(alpha_exact(0) == Rational(1));
  CHECK(alpha_exact(1) == Rational(1, 6));
  CHECK(alpha_exact(2) == Rational(2, 120));
  for (int q = 0; q <= 3; ++q) {
    auto c = constants(q, 2);
    CHECK(std::abs(c.alpha_numeric - boost::rational_cast<double>(c.alpha)) < 1e-12);
    CHECK(std::abs(c.delta - c.delta_direct) < 1e-10);
  }
  // q = 1 by hand: beta = log(3/2), alpha = 1/6, delta = log(3/2) - 1/4
  auto c1 = constants(1, 2);
  CHECK(c1.beta == doctest::Approx(std::log(1.5)).epsilon(1e-13));
  CHECK(c1.delta == doctest::Approx(std::log(1.5) - 0.25).epsilon(1e-12));
  CHECK(std::abs(c_constant(0).value() - std::complex<double>(2, 0)) < 1e-15);
  // 2 (-1) 1! / (2 pi i 2!) = i / (2 pi)
  CHECK(std::abs(c_constant(1).value() - std::complex<double>(0, 0.5 / std::numbers::pi)) < 1e-15);
}
