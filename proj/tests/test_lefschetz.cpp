#include <cmath>

#include "doctest.h"
#include "lefschetz/lefschetz.hpp"

using namespace lef;

namespace {

const char* kBase = R"([group]
name = p2
[gamma]
word = r
[cochain]
name = constant
degree = 0
[cutoff]
radius = 0.8
[schedule]
t = 0.2, 0.1
radius = 6
[output]
tolerance = 1e-3
)";

PairingConfig with(const std::string& from, const std::string& to) {
  std::string text = kBase;
  text.replace(text.find(from), from.size(), to);
  return parse_config(text);
}

}  // namespace

TEST_CASE("config parsing") {
  auto cfg = parse_config(kBase);
  CHECK(cfg.group == "p2");
  CHECK(cfg.gamma == "r");
  CHECK(cfg.t == std::vector<double>{0.2, 0.1});
  CHECK(cfg.radius == 6);
  CHECK(cfg.profile == "poly");

  CHECK_THROWS_AS(parse_config("[bogus]\nx = 1\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[group]\ncolour = red\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[schedule]\nradius = six\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[schedule]\nt = 0.1, 0.2\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[schedule]\nt = 0.1, x\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[cochain]\ndegree = 1\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[gamma]\nspin_sign = 2\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[cutoff]\nprofile = square\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[quadrature]\nantisymmetrize = maybe\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[group\n"), ConfigError);
  CHECK_THROWS_AS(load_config("/nonexistent/config.ini"), ConfigError);

  CHECK_THROWS_AS(make_setup(with("word = r", "word = q")), ConfigError);
  CHECK_THROWS_AS(make_setup(parse_config("[group]\nname = hexagon\n")), ConfigError);
  CHECK_THROWS_AS(make_setup(parse_config("[cochain]\nname = nope\n")), ConfigError);

  // the echo parses back to the same echo
  auto echo = config_text(cfg);
  CHECK(config_text(parse_config(echo)) == echo);
}

TEST_CASE("reports are deterministic") {
  auto cfg = parse_config(kBase);
  auto render = [&] {
    Report r;
    report_config(r, cfg);
    report_rhs(r, rhs_evaluate(cfg));
    report_truncated(r, pairing_truncated(cfg));
    r.set_timing("total", 0.123);
    return r;
  };
  auto a = render(), b = render();
  CHECK(a.render(false) == b.render(false));
  CHECK(a.render(false).find("[timing]") == std::string::npos);
  CHECK(a.render(true).find("[timing]") != std::string::npos);
  CHECK(format_number(0.1) == "0.10000000000000001");
  REQUIRE(a.find("rhs", "value.im") != nullptr);
  CHECK(*a.find("rhs", "value.im") == format_number(rhs_evaluate(cfg).value.imag()));
}

TEST_CASE("fixed-point side on p2") {
  auto cfg = parse_config(kBase);
  // c(0,2) (-i) det(2 I)^{-1/2} per fixed point, and chi_gamma sums to 1/2 over the fixed points: -i/2
  auto rhs = rhs_evaluate(cfg);
  CHECK(std::abs(rhs.value - Complex(0.0, -0.5)) < 1e-12);
  CHECK(rhs.components.size() == 1);
  auto fine = cfg;
  fine.rhs_panels = 48;
  fine.rhs_order = 12;
  CHECK(std::abs(rhs_evaluate(fine).value - rhs.value) < 1e-12);
  auto smooth = cfg;
  smooth.profile = "smooth";
  CHECK(std::abs(rhs_evaluate(smooth).value - rhs.value) < 1e-12);
  auto flip = cfg;
  flip.spin_sign = -1;
  CHECK(std::abs(rhs_evaluate(flip).value + rhs.value) < 1e-12);
  auto aux = cfg;
  aux.aux = 3;
  CHECK(std::abs(rhs_evaluate(aux).value - 3.0 * rhs.value) < 1e-12);

  auto zero = cfg;
  zero.cochain = "zero";
  CHECK(std::abs(rhs_evaluate(zero).value) == 0.0);
  // gamma = e: the whole plane is fixed and a degree-0 cochain has no top-degree part
  auto ident = with("word = r", "word = e");
  auto r = rhs_evaluate(ident);
  CHECK(std::abs(r.value) < 1e-14);
}

TEST_CASE("degree-0 heat side") {
  auto cfg = parse_config(kBase);
  auto d = lhs_degree0(cfg);
  REQUIRE(d.points.size() == 2);
  for (const auto& p : d.points) {
    CHECK(std::abs(p.pairing.value - 2.0 * p.supertrace.value) < 1e-6);
    CHECK(std::abs(p.supertrace_next.value - p.supertrace.value) <= p.tail_bound);
  }
  CHECK(std::abs(d.mean - Complex(0.0, -0.5)) < 1e-4);
  CHECK(d.spread < 1e-4);
  // the tuple route with the matrix kernel gives the same degree-0 pairing
  auto tr = pairing_truncated(cfg);
  REQUIRE(tr.points.size() == 2);
  for (std::size_t i = 0; i < 2; ++i) CHECK(std::abs(tr.points[i].value.value - d.points[i].pairing.value) < 1e-3);
  CHECK(tr.complete);
}

TEST_CASE("tail-driven radius choice") {
  TailConstants tc;
  tc.kernel_factor = 10.0;
  tc.rate = 3.0;
  tc.tau = 0.5;
  tc.C = 2.0;
  tc.K = 0.5;
  int N = radius_for_tail(tc, 1e-3, 100);
  REQUIRE(N >= 0);
  CHECK(tail_bound(tc, N) <= 1e-3);
  if (N > 0) CHECK(tail_bound(tc, N - 1) > 1e-3);
  CHECK(radius_for_tail(tc, 1e-300, 3) == -1);
}

TEST_CASE("verify selectors") {
  PairingConfig cfg;
  auto s = verify_suite("getzler,constants", cfg);
  CHECK(s.all_pass());
  CHECK(s.passed() == s.items.size());
  for (const auto& i : s.items) CHECK((i.group == "getzler" || i.group == "constants"));
  auto a = verify_suite("algebra", cfg);
  CHECK(a.all_pass());
  CHECK(a.items.size() == 8);
  CHECK_THROWS_AS(verify_suite("algebra,nonsense", cfg), ConfigError);
  CHECK_THROWS_AS(verify_suite("", cfg), ConfigError);
  CHECK(getzler_table().size() == 8);
}
