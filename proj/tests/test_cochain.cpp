#include <cmath>
#include <random>
#include <set>

#include "doctest.h"
#include "lefschetz/cochain.hpp"

using namespace lef;

namespace {

std::shared_ptr<ConjugacyContext> dinf_ctx() {
  auto G = make_group("Dinf");
  return std::make_shared<ConjugacyContext>(G, G->named("r"));
}

// (bφ)(a_0..a_{k+1}), written out from the definition
Complex b_direct(const CyclicCochain& phi, const std::vector<GroupElement>& a) {
  const int k = static_cast<int>(a.size()) - 2;
  Complex s = 0.0;
  for (int i = 0; i <= k; ++i) {
    std::vector<GroupElement> t;
    for (int j = 0; j < i; ++j) t.push_back(a[j]);
    t.push_back(compose(a[i], a[i + 1]));
    for (int j = i + 2; j <= k + 1; ++j) t.push_back(a[j]);
    s += (i % 2 ? -1.0 : 1.0) * phi(t);
  }
  std::vector<GroupElement> t{compose(a[k + 1], a[0])};
  for (int j = 1; j <= k; ++j) t.push_back(a[j]);
  s += ((k + 1) % 2 ? -1.0 : 1.0) * phi(t);
  return s;
}

}  // namespace

TEST_CASE("group coboundary") {
  auto ctx = dinf_ctx();
  const auto& G = ctx->group();
  auto dc = lott_delta(constant_cochain(1.0));
  CHECK(dc.degree == 1);
  for (const auto& t : random_tuples(G, 2, 4, 50, 3)) CHECK(dc(t) == 0.0);
  for (const auto& c : {conj_length_cochain(ctx, 0), conj_length_cochain(ctx, 1), dinf_shift_cochain(ctx)}) {
    auto dd = lott_delta(lott_delta(c));
    for (const auto& t : random_tuples(G, c.degree + 3, 4, 50, 5)) CHECK(dd(t) == 0.0);
  }
  // telescoping: s(g1) - s(g0) is a cocycle
  auto ds = lott_delta(dinf_shift_cochain(ctx));
  for (const auto& t : random_tuples(G, 3, 4, 50, 9)) CHECK(std::abs(ds(t)) == 0.0);
}

TEST_CASE("Lott invariances") {
  auto ctx = dinf_ctx();
  CHECK(lott_check(zero_cochain(1), *ctx, 3).pass);
  CHECK(lott_check(constant_cochain(1.0), *ctx, 3).pass);
  CHECK(lott_check(dinf_shift_cochain(ctx), *ctx, 3).pass);
  CHECK(lott_check(dinf_degree2_cocycle(ctx), *ctx, 2).pass);
  auto bad = lott_check(broken_cochain(1), *ctx, 3);
  CHECK_FALSE(bad.pass);
  CHECK_FALSE(bad.witness.empty());
}

TEST_CASE("delocalized trace from the constant cochain") {
  auto ctx = dinf_ctx();
  const auto& G = ctx->group();
  auto tau = lott_to_cyclic(constant_cochain(1.0), ctx);
  std::set<std::pair<int, long long>> cls;
  for (const auto& p : ctx->conjugacy_class(9)) cls.insert({p.A[0], p.t[0]});
  for (const auto& g : G.enumerate_ball(6)) {
    std::vector<GroupElement> t{g};
    double expect = cls.count({g.A[0], g.t[0]}) ? 1.0 : 0.0;
    CHECK(tau(t) == expect);
  }
  auto trace = delocalized_trace(ctx);
  for (const auto& g : G.enumerate_ball(6)) {
    std::vector<GroupElement> t{g};
    CHECK(trace(t) == tau(t));
  }
  auto c1 = dinf_shift_cochain(ctx);
  auto tau1 = lott_to_cyclic(c1, ctx);
  std::vector<GroupElement> off{G.named("t1"), G.identity()};
  CHECK(tau1(off) == 0.0);
}

TEST_CASE("b tau_c = tau_{delta c} and b^2 = 0") {
  auto ctx = dinf_ctx();
  const auto& G = ctx->group();
  for (const auto& c : {constant_cochain(1.0), conj_length_cochain(ctx, 0), dinf_shift_cochain(ctx),
                        conj_length_cochain(ctx, 1), dinf_degree2_cocycle(ctx)}) {
    auto tau = lott_to_cyclic(c, ctx);
    auto td = lott_to_cyclic(lott_delta(c), ctx);
    auto bt = hochschild_b(tau);
    auto bb = hochschild_b(bt);
    // tuples whose product lies in the class, so the check is not vacuous
    std::mt19937_64 rng(21);
    auto cls = ctx->conjugacy_class(7);

    for (int s = 0; s < 30; ++s) {
      std::vector<GroupElement> a;
      auto ball = G.enumerate_ball(3);
      GroupElement prod = G.identity();
      for (int i = 0; i < c.degree + 1; ++i) {
        a.push_back(ball[rng() % ball.size()]);
        prod = compose(prod, a.back());
      }
      a.push_back(compose(inverse(prod), cls[rng() % cls.size()]));
      Complex lhs = b_direct(tau, a);
      CHECK(std::abs(lhs - td(a)) == 0.0);
      CHECK(std::abs(bt(a) - lhs) == 0.0);
    }
    for (const auto& t : random_tuples(G, c.degree + 3, 3, 50, 4)) CHECK(bb(t) == 0.0);
  }
  // trace property
  auto phi = delocalized_trace(ctx);
  auto bphi = hochschild_b(phi);
  for (const auto& g : G.enumerate_ball(4)) {
    std::vector<GroupElement> t{g, inverse(g)};
    CHECK(bphi(t) == 0.0);
  }
}

TEST_CASE("cyclic cocycles are cyclic") {
  auto ctx = dinf_ctx();
  auto tuples = random_tuples(ctx->group(), 3, 3, 200, 13);
  CHECK(cyclicity_check(lott_to_cyclic(dinf_degree2_cocycle(ctx), ctx), tuples).pass);
  CHECK(tau_well_defined(dinf_degree2_cocycle(ctx), *ctx, tuples).pass);
}

TEST_CASE("exponential growth certificates") {
  auto ctx = dinf_ctx();
  CHECK(eg_verify(constant_cochain(1.0), *ctx, 1.0, 0.5, 4).pass);
  auto z = eg_verify(zero_cochain(1), *ctx, 1.0, 0.5, 4);
  CHECK(z.pass);
  CHECK(z.max_ratio == 0.0);
  auto e = eg_verify(exp_conj_length_cochain(ctx, 2.0), *ctx, 1.0, 1.0, 4);
  CHECK_FALSE(e.pass);
  CHECK_FALSE(e.witness.empty());
  CHECK(eg_verify(exp_conj_length_cochain(ctx, 2.0), *ctx, 1.0, 2.0, 4).pass);
}

TEST_CASE("area cocycle and table cochains on Z^2") {
  auto G = make_group("Z2");
  auto ctx = std::make_shared<ConjugacyContext>(G, G->identity());
  auto area = area_cocycle(ctx);
  std::vector<GroupElement> tri{G->identity(), G->named("t1"), G->word("t1 t2")};
  CHECK(area(tri) == 1.0);
  auto da = lott_delta(area);
  for (const auto& t : random_tuples(*G, 4, 3, 100, 8)) CHECK(da(t) == 0.0);
  CHECK(lott_check(area, *ctx, 2).pass);
  auto tab = table_cochain(ctx, 1, {{{G->identity(), G->named("t1")}, 2.0}});
  std::vector<GroupElement> rev{G->named("t1"), G->identity()};
  CHECK(tab(rev) == -2.0);
  std::vector<GroupElement> shifted{G->named("t2"), G->word("t1 t2")};
  CHECK(tab(shifted) == 2.0);
  CHECK_THROWS_AS(library_cochain("nope", ctx), CochainError);
}
