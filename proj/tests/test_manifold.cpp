#include <cmath>

#include "doctest.h"
#include "lefschetz/manifold.hpp"

using namespace lef;

TEST_CASE("cutoff is a partition of unity") {
  auto Z = make_group("Z");
  BumpCutoff chi(Z, 0.6, BumpProfile::Poly, {0.0});
  double x = 0.37, s = 0;
  for (int n = -2; n <= 2; ++n) {
    double y = x - n;
    s += chi.value(&y);
  }
  CHECK(s == doctest::Approx(1.0).epsilon(1e-14));
  double far = 0.7;
  CHECK(chi.value(&far) == 0.0);
  for (const char* name : {"Dinf", "p2", "p4", "Z2", "pm"}) {
    auto G = make_group(name);
    for (auto prof : {BumpProfile::Poly, BumpProfile::Smooth}) {
      BumpCutoff c(G, G->dim() == 1 ? 0.45 : 0.8, prof);
      CHECK(c.covering_margin(9) > 0);
      std::vector<double> p(G->dim());
      for (int k = 0; k < 20; ++k) {
        for (int i = 0; i < G->dim(); ++i) p[i] = std::sin(1.3 * k + 0.7 * i) * 1.7;
        CHECK(c.partition_residual(p.data()) < 1e-13);
      }
    }
  }
}

TEST_CASE("cutoff gradient matches central differences") {
  auto G = make_group("p2");
  BumpCutoff chi(G, 0.8);
  const double h = 1e-5;
  for (int k = 0; k < 25; ++k) {
    double x[2] = {chi.center()[0] + 0.5 * std::sin(2.1 * k), chi.center()[1] + 0.5 * std::cos(1.7 * k)};
    double g[2];
    chi.gradient(x, g);
    for (int i = 0; i < 2; ++i) {
      double xp[2] = {x[0], x[1]}, xm[2] = {x[0], x[1]};
      xp[i] += h;
      xm[i] -= h;
      double fd = (chi.value(xp) - chi.value(xm)) / (2 * h);
      CHECK(std::abs(fd - g[i]) < 1e-7);
    }
  }
}

TEST_CASE("fixed point sets") {
  auto Z2 = make_group("Z2");
  auto id = fixed_point_components(*Z2, Z2->identity());
  REQUIRE(id.components.size() == 1);
  CHECK(id.components[0].a == 2);
  CHECK(id.components[0].normal_action.empty());

  auto D = make_group("Dinf");
  auto fr = fixed_point_components(*D, D->named("r"));
  REQUIRE(fr.components.size() == 1);
  CHECK(fr.components[0].a == 0);
  CHECK(fr.components[0].point[0] == doctest::Approx(0.0));
  CHECK(fr.components[0].normal_action[0] == doctest::Approx(-1.0));

  auto P4 = make_group("p4");
  auto rho = P4->named("rho");
  auto fp = fixed_point_components(*P4, rho);
  REQUIRE(fp.components.size() == 1);
  CHECK(fp.components[0].a == 0);
  REQUIRE(fp.components[0].angles.size() == 1);
  CHECK(std::abs(fp.components[0].angles[0]) == doctest::Approx(M_PI / 2));
  auto img = P4->act(rho, fp.components[0].point);
  CHECK(std::hypot(img[0] - fp.components[0].point[0], img[1] - fp.components[0].point[1]) < 1e-14);

  auto T = make_group("Z");
  CHECK_THROWS(fixed_point_components(*T, T->named("t1")));
}

TEST_CASE("fixed-set cutoff") {
  auto D = make_group("Dinf");
  auto r = D->named("r");
  ConjugacyContext ctx(D, r);
  BumpCutoff chi(D, 0.35);
  auto fps = fixed_point_components(*D, r);
  FixedSetCutoff f(fps, ctx, chi);
  // Z_r = {e, r} fixes 0, so the two translates share the value
  CHECK(f.value(fps.components[0].point.data()) == doctest::Approx(0.5).epsilon(1e-14));

  auto P4 = make_group("p4");
  auto rho = P4->named("rho");
  ConjugacyContext c4(P4, rho);
  BumpCutoff chi4(P4, 0.8);
  auto fp4 = fixed_point_components(*P4, rho);
  FixedSetCutoff f4(fp4, c4, chi4);
  const auto& x = fp4.components[0].point;
  double s = 0;
  for (const auto& z : c4.centralizer_in_ball(8)) {
    auto y = P4->act(inverse(z), x);
    s += f4.value(y.data());
  }
  CHECK(s == doctest::Approx(1.0).epsilon(1e-13));

  auto Z2 = make_group("pm");
  auto m = Z2->named("m");
  ConjugacyContext cm(Z2, m);
  BumpCutoff chim(Z2, 0.8);
  auto fpm = fixed_point_components(*Z2, m);
  FixedSetCutoff fm(fpm, cm, chim);
  REQUIRE(fpm.components[0].a == 1);
  const auto& w = fm.support_windows()[0];
  CHECK(w.hi[0] > w.lo[0]);
}

TEST_CASE("quadrature") {
  auto Z = make_group("Z");
  BumpCutoff chi(Z, 0.6);
  double c = chi.center()[0];
  auto rule = composite_gauss_legendre(c - 0.6, c + 0.6, {}, 64, 10);
  double s = 0;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) s += rule.weights[i] * chi.value(&rule.nodes[i]);
  CHECK(s == doctest::Approx(Z->covolume()).epsilon(1e-9));

  QuadratureGrid g;
  g.box = Box{{-3.0, -3.0}, {3.0, 3.0}};
  g.resolution = 12;
  g.order = 10;
  auto gauss = [](std::span<const double> x) {
    const double t = 0.1;
    return std::exp(-(x[0] * x[0] + x[1] * x[1]) / (4 * t)) / (4 * M_PI * t);
  };
  auto res = integrate(gauss, g);
  CHECK(res.value == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(integrate([](std::span<const double>) { return 0.0; }, g).value == 0.0);

  auto q1 = integrate_qmc(gauss, g.box, 1024, 4, 99);
  auto q2 = integrate_qmc(gauss, g.box, 1024, 4, 99);
  CHECK(q1.value == q2.value);
  CHECK(std::abs(q1.value - 1.0) < 10 * q1.error + 1e-3);
}
