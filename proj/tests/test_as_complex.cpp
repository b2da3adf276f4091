#include <cmath>
#include <numbers>

#include "doctest.h"
#include "lefschetz/as_complex.hpp"

using namespace lef;

namespace {

struct Dinf {
  std::shared_ptr<CrystallographicGroup> G = make_group("Dinf");
  std::shared_ptr<ConjugacyContext> ctx = std::make_shared<ConjugacyContext>(G, G->named("r"));
  std::shared_ptr<BumpCutoff> chi = std::make_shared<BumpCutoff>(G, 0.35);
};

double gauss1(double x, double s) { return std::exp(-x * x / (4 * s)) / std::sqrt(4 * std::numbers::pi * s); }

}  // namespace

TEST_CASE("test kernels compose exactly") {
  GaussianTestKernel a{1, 0.04, 2.0, {}, {0.1}}, b{1, 0.06, 0.5, {}, {-0.3}};
  auto ab = a.compose(b);
  CHECK(ab.s == doctest::Approx(0.1));
  auto Ka = a.kernel(), Kb = b.kernel(), Kab = ab.kernel();
  double x = 0.2, y = -0.15;
  // trapezoid convolution as the oracle
  const int n = 40000;
  const double L = 6.0, h = 2 * L / n;
  std::complex<double> s = 0.0;
  for (int i = 0; i <= n; ++i) {
    double z = -L + i * h;
    s += (i == 0 || i == n ? 0.5 : 1.0) * Ka(&x, &z)(0, 0) * Kb(&z, &y)(0, 0);
  }
  s *= h;
  CHECK(std::abs(s - Kab(&x, &y)(0, 0)) < 1e-10);
  CHECK(std::abs(Ka(&x, &y)(0, 0) - 2.0 * gauss1(x - y - 0.1, 0.04)) < 1e-14);
}

TEST_CASE("degree-0 delocalized pairing against direct quadrature") {
  Dinf d;
  GaussianTestKernel g{1, 0.05, 1.0, {}, {}};
  auto A = test_kernels({g});
  PairingOptions opt;
  opt.trunc_radius = 6;
  auto v = rho_inv(psi_inv(constant_cochain(1.0), d.chi), *d.ctx, *d.chi, A, opt);
  // oracle: ∫ chi(x) sum over conjugates eta of r of K(x, eta x), by the trapezoid rule
  const auto cls = d.ctx->conjugacy_class(6);
  CHECK(cls.size() > 1);
  const int n = 20000;
  const double L = 3.0, h = 2 * L / n;
  double s = 0.0;
  for (int i = 0; i <= n; ++i) {
    double x = -L + i * h, ex, k = 0.0;
    for (const auto& eta : cls) {
      d.G->act(eta, &x, &ex);
      k += gauss1(x - ex, 0.05);
    }
    s += (i == 0 || i == n ? 0.5 : 1.0) * d.chi->value(&x) * k;
  }
  s *= h;
  CHECK(std::abs(v.value - s) < 1e-8);
  CHECK(v.error < 1e-8);
}

TEST_CASE("extended and invariant routes agree with the cyclic cochain") {
  Dinf d;
  PairingOptions opt;
  opt.trunc_radius = 10;
  for (int deg : {0, 2}) {
    GroupCochain c = deg == 0 ? constant_cochain(1.0) : dinf_degree2_cocycle(d.ctx);
    std::vector<GaussianTestKernel> gk;
    for (int i = 0; i <= deg; ++i) gk.push_back({1, 0.05 + 0.01 * i, 1.0, {}, {}});
    auto A = test_kernels(gk);
    auto ph = phi_pairing(lott_to_cyclic(c, d.ctx), *d.ctx, *d.chi, A, opt);
    auto tu = rho_psi_tuples(c, *d.ctx, *d.chi, A, opt);
    auto ex = rho_ext(psi_ext(c, d.chi), *d.ctx, A, opt);
    const double scale = std::max(std::abs(tu.value), 1e-12);
    CHECK(std::abs(ph.value - tu.value) / scale < 1e-5);
    CHECK(std::abs(ex.value - tu.value) / scale < 1e-5);
  }
}

TEST_CASE("b annihilates the pairing of a cyclic cocycle") {
  auto G = make_group("Z");
  auto ctx = std::make_shared<ConjugacyContext>(G, G->identity());
  BumpCutoff chi(G, 0.7);
  PairingOptions opt;
  opt.trunc_radius = 8;
  auto phi = lott_to_cyclic(homomorphism_cochain(ctx, {1.0}), ctx);
  auto rho = [&](const std::vector<GaussianTestKernel>& gk) {
    return phi_pairing(phi, *ctx, chi, test_kernels(gk), opt).value;
  };
  CMatrix m0(2, 2), m1(2, 2), m2(2, 2);
  m0 << 1.0, 0.5, 0.0, 2.0;
  m1 << 0.3, 0.0, 1.0, -1.0;
  m2 << 0.0, 1.0, 1.0, 0.5;
  std::vector<GaussianTestKernel> A{{1, 0.03, 1.0, m0, {0.4}}, {1, 0.04, 1.0, m1, {-0.2}}, {1, 0.05, 1.0, m2, {0.5}}};
  // the face terms are not small, so the cancellation exercises exact composition
  const double face = std::abs(rho({A[0].compose(A[1]), A[2]}));
  CHECK(face > 1e-2);
  CHECK(std::abs(hochschild_b_kernels(rho, A)) < 1e-7 * face);
}

TEST_CASE("tail bounds") {
  auto G = make_group("p2");
  auto ctx = std::make_shared<ConjugacyContext>(G, G->named("r"));
  BumpCutoff chi(G, 0.8);
  FlatDiracModel model(G, 1, 1, 2.0);
  auto e = cm_entry_kernels(model, 0.1)[0];
  auto tc = tail_constants(*ctx, chi, {e}, 1.0, 0.0);
  CHECK(tc.tau > 0);
  CHECK(tc.C >= 1);
  double prev = INFINITY;
  for (int N = 2; N <= 14; N += 2) {
    double b = tail_bound(tc, N);
    CHECK(std::isfinite(b));
    CHECK(b < prev);
    prev = b;
  }
  // a cochain growing faster than the kernels decay has no certified tail
  auto wild = tail_constants(*ctx, chi, {e}, 1.0, 1e3);
  CHECK_FALSE(std::isfinite(tail_bound(wild, 10)));
}

TEST_CASE("localized form matches the cochain form on Z^2") {
  auto G = make_group("Z2");
  auto ctx = std::make_shared<ConjugacyContext>(G, G->identity());
  auto chi = std::make_shared<BumpCutoff>(G, 0.8);
  auto c = area_cocycle(ctx);
  auto fps = fixed_point_components(*G, G->identity());
  REQUIRE(fps.components.size() == 1);
  const auto& comp = fps.components[0];
  CHECK(comp.a == 2);
  auto f = psi_inv(c, chi);
  for (std::vector<double> x : {std::vector<double>{0.1, 0.2}, std::vector<double>{0.45, -0.3}}) {
    auto lam = lambda_fixed(f, comp, x);
    auto psi = psi_gamma(c, *chi, comp, x);
    CHECK(max_abs_diff(lam, psi) < 1e-6);
  }
}

TEST_CASE("quasi-Monte Carlo pairings are reproducible") {
  Dinf d;
  PairingOptions opt;
  opt.trunc_radius = 6;
  opt.max_tensor_dim = 1;
  opt.qmc_samples = 512;
  opt.qmc_replicates = 4;
  auto c = dinf_degree2_cocycle(d.ctx);
  auto A = test_kernels({{1, 0.05, 1.0, {}, {}}, {1, 0.06, 1.0, {}, {}}, {1, 0.07, 1.0, {}, {}}});
  auto a = rho_psi_tuples(c, *d.ctx, *d.chi, A, opt);
  auto b = rho_psi_tuples(c, *d.ctx, *d.chi, A, opt);
  CHECK(a.value == b.value);
  CHECK(a.error == b.error);
  opt.seed = 999;
  auto e = rho_psi_tuples(c, *d.ctx, *d.chi, A, opt);
  CHECK(std::abs(e.value - a.value) < 6 * std::max(a.error, 1e-12) + 6 * e.error);
}
