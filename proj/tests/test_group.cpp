#include <cmath>
#include <deque>
#include <unordered_map>

#include "doctest.h"
#include "lefschetz/group.hpp"

using namespace lef;

namespace {

// breadth-first word lengths over the symmetric generating set, radius r
std::unordered_map<GroupElement, int, GroupElementHash> bfs(const CrystallographicGroup& G, int r) {
  std::vector<GroupElement> S;
  for (const auto& g : G.generators()) {
    S.push_back(g);
    S.push_back(inverse(g));
  }
  std::unordered_map<GroupElement, int, GroupElementHash> len{{G.identity(), 0}};
  std::deque<GroupElement> q{G.identity()};
  while (!q.empty()) {
    auto g = q.front();
    q.pop_front();
    int l = len[g];
    if (l == r) continue;
    for (const auto& s : S) {
      auto h = compose(g, s);
      if (len.emplace(h, l + 1).second) q.push_back(h);
    }
  }
  return len;
}

}  // namespace

TEST_CASE("composition and action on D-infinity") {
  auto G = make_group("Dinf");
  auto r = G->named("r"), t1 = G->named("t1"), e = G->identity();
  CHECK(compose(t1, e) == t1);
  CHECK(is_identity(compose(r, r)));
  double x = 0.3, y = 0;
  G->act(compose(t1, r), &x, &y);
  CHECK(y == doctest::Approx(0.7).epsilon(1e-15));
  x = 0.4;
  G->act(r, &x, &y);
  CHECK(y == doctest::Approx(-0.4));
  G->act(e, &x, &y);
  CHECK(y == 0.4);
  CHECK(element_order(r) == 2);
  CHECK(element_order(t1) == 0);
}

TEST_CASE("p4 rotation acts by a quarter turn") {
  auto G = make_group("p4");
  auto v = G->act(G->named("rho"), std::vector<double>{1.0, 0.0});
  CHECK(v[0] == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(v[1] == doctest::Approx(1.0));
  CHECK(element_order(G->named("rho")) == 4);
}

TEST_CASE("word lengths agree with a breadth-first oracle") {
  auto G = make_group("Dinf");
  auto oracle = bfs(*G, 4);
  CHECK(G->word_length(G->identity()) == 0);
  auto t3 = G->word("t1 t1 t1");
  auto t2r = compose(G->word("t1 t1"), G->named("r"));
  CHECK(oracle.at(t3) == 3);
  CHECK(G->word_length(t3) == 3);
  CHECK(oracle.at(t2r) == 3);
  CHECK(G->word_length(t2r) == 3);
  for (const auto& [g, l] : oracle) CHECK(G->word_length(g) == l);
}

TEST_CASE("balls and growth") {
  auto Z = make_group("Z");
  CHECK(Z->enumerate_ball(0).size() == 1);
  CHECK(Z->enumerate_ball(2).size() == 5);
  for (const char* name : {"Dinf", "p2", "p4", "Z2"}) {
    auto G = make_group(name, 12);
    auto gf = fit_growth(*G);
    for (int k = 0; k <= 12; ++k) {
      auto oracle = bfs(*G, k);
      REQUIRE(G->enumerate_ball(k).size() == oracle.size());
      CHECK(static_cast<double>(oracle.size()) <= gf.C * std::exp(gf.K * k) * (1 + 1e-12));
    }
  }
}

TEST_CASE("Milnor-Svarc constants") {
  auto Z = make_group("Z");
  Box F{{0.0}, {1.0}};
  CHECK(milnor_svarc_holds(*Z, F, 0.5, 2.0, 20, 0.1));
  CHECK(milnor_svarc_holds(*Z, F, 1.0, 1.5, 0, 0.1));
  auto D = make_group("Dinf");
  Box FD{{-0.6}, {0.6}};
  auto ms = milnor_svarc_constants(*D, FD, 15, 0.1);
  // exhaustive check over ball(15) and the grid, written out independently
  std::vector<double> grid;
  for (double x = -0.6; x <= 0.6 + 1e-12; x += 0.1) grid.push_back(x);
  for (const auto& [g, l] : bfs(*D, 15)) {
    for (double x : grid)
      for (double y : grid) {
        double gy;
        D->act(g, &y, &gy);
        double d = std::abs(x - gy);
        CHECK(d >= ms.tau * l - ms.kappa - 1e-12);
        CHECK(d <= l / ms.tau + ms.kappa + 1e-12);
      }
  }
  std::string w;
  CHECK_FALSE(milnor_svarc_holds(*D, FD, 3.0, 0.01, 6, 0.1, &w));
  CHECK_FALSE(w.empty());
}

TEST_CASE("group cutoff selects one element per coset") {
  auto G = make_group("p2");
  auto r = G->named("r");
  ConjugacyContext ctx(G, r);
  auto Z = ctx.centralizer_in_ball(6);
  REQUIRE(Z.size() >= 2);
  for (const auto& g : G->enumerate_ball(5)) {
    const auto& rep = ctx.coset_rep(g);
    CHECK(ctx.group_cutoff(rep) == 1.0);
    double s = 0;
    for (const auto& z : Z) s += ctx.group_cutoff(compose(inverse(z), g));
    CHECK(s == 1.0);
    for (const auto& z : Z)
      if (!is_identity(z)) CHECK(ctx.group_cutoff(compose(z, rep)) == 0.0);
  }
}

TEST_CASE("conjugators and tuple lengths") {
  auto G = make_group("p2");
  auto r = G->named("r");
  ConjugacyContext ctx(G, r);
  for (const auto& p : ctx.conjugacy_class(7)) {
    GroupElement eta;
    REQUIRE(ctx.find_conjugator(p, &eta));
    CHECK(compose(inverse(eta), compose(r, eta)) == p);
  }
  GroupElement eta;
  CHECK_FALSE(ctx.find_conjugator(G->named("t1"), &eta));
  std::vector<GroupElement> I{G->identity(), G->named("t1")};
  CHECK(ctx.tuple_length(I) == G->word_length(G->named("t1")) + G->word_length(compose(inverse(G->named("t1")), r)));
}

TEST_CASE("exact rationals") {
  CHECK(parse_rational("-3/6") == Rational(-1, 2));
  CHECK(to_string(Rational(4, 6)) == "2/3");
  CHECK_THROWS_AS(make_group("nope"), GroupError);
  auto G = make_group("p2");
  CHECK_THROWS(G->named("q"));
}
