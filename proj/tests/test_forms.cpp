#include <cmath>

#include "doctest.h"
#include "lefschetz/forms.hpp"

using namespace lef;

TEST_CASE("wedge products") {
  auto w = ExteriorElement::monomial(3, {1, 2}, 2.0);
  auto one = ExteriorElement::scalar(3, 1.0);
  CHECK(max_abs_diff(wedge(w, one), w) == 0.0);
  auto sum = ExteriorElement::monomial(3, {1, 2}) + ExteriorElement::monomial(3, {2, 1});
  CHECK(sum.is_zero());
  CHECK(wedge(ExteriorElement::monomial(3, {1, 2}), ExteriorElement::monomial(3, {1})).is_zero());
  auto a = ExteriorElement::monomial(3, {1});
  auto b = ExteriorElement::monomial(3, {3});
  CHECK(max_abs_diff(wedge(a, b), wedge(b, a) * -1.0) == 0.0);
  CHECK(wedge(a, b).scalar_coefficient(0b101) == 1.0);
  CHECK(wedge_sign(0b10, 0b01) == -1);
  CHECK(mask_text(0b101) == "dx1^dx3");
}

TEST_CASE("nilpotent series") {
  // exp(N) log(1 + N) and inverse on an even nilpotent element
  auto N = ExteriorElement::monomial(4, {1, 2}, 0.7) + ExteriorElement::monomial(4, {3, 4}, -0.4);
  auto one = ExteriorElement::scalar(4, 1.0);
  auto e = form_exp(N);
  CHECK(max_abs_diff(form_log1p(e - one), N) < 1e-14);
  CHECK(max_abs_diff(wedge(e, form_inverse(e)), one) < 1e-14);
  // exp(N) = 1 + N + N^2/2 exactly, N^2 = 2 (0.7)(-0.4) dx1234
  CHECK(e.scalar_coefficient(0b1111).real() == doctest::Approx(0.7 * -0.4));
}

TEST_CASE("determinant factors") {
  CHECK(max_abs_diff(sqrt_det_x_over_sinh(ExteriorElement(2, 2)), ExteriorElement::identity(2, 1)) < 1e-15);
  for (double th : {M_PI, M_PI / 2, 2.0}) {
    Eigen::MatrixXd Q(2, 2);
    Q << std::cos(th), -std::sin(th), std::sin(th), std::cos(th);
    auto v = inv_sqrt_det_one_minus(Q, ExteriorElement(0, 2));
    CHECK(std::abs(v.scalar_coefficient(0) - 1.0 / (2 * std::sin(th / 2))) < 1e-14);
  }
  // X = θ J ⊗ ω, ω = dx12 + dx34: det^{1/2}(X/sinh X) = θω/sin(θω) = 1 + θ²ω²/6, ω² = 2 dx1234
  const double th = 0.8;
  ExteriorElement X(4, 2);
  CMatrix J(2, 2);
  J << 0.0, th, -th, 0.0;
  X.add_term(0b0011, J);
  X.add_term(0b1100, J);
  auto A = sqrt_det_x_over_sinh(X);
  CHECK(A.scalar_coefficient(0).real() == doctest::Approx(1.0));
  CHECK(std::abs(A.scalar_coefficient(0b0011)) < 1e-15);
  CHECK(A.scalar_coefficient(0b1111).real() == doctest::Approx(th * th / 3).epsilon(1e-13));
  // in cap 2 the square vanishes
  ExteriorElement X2(2, 2);
  X2.add_term(0b11, J);
  CHECK(max_abs_diff(sqrt_det_x_over_sinh(X2), ExteriorElement::identity(2, 1)) < 1e-15);
}

TEST_CASE("AS_gamma on flat models") {
  Eigen::MatrixXd minus = -Eigen::MatrixXd::Identity(2, 2);
  auto v = as_gamma_form(CurvatureData::flat(0, minus, CMatrix::Identity(1, 1)));
  CHECK(std::abs(v.scalar_coefficient(0) - 0.5) < 1e-15);  // det(2 I)^{-1/2}
  auto e = as_gamma_form(CurvatureData::flat(2, Eigen::MatrixXd(0, 0), CMatrix::Identity(1, 1)));
  CHECK(max_abs_diff(e, ExteriorElement::scalar(2, 1.0)) < 1e-15);
  Eigen::MatrixXd q(2, 2);
  q << 0.0, -1.0, 1.0, 0.0;
  auto r = as_gamma_form(CurvatureData::flat(0, q, CMatrix::Identity(3, 3)));
  CHECK(std::abs(r.scalar_coefficient(0) - 3.0 / std::sqrt(2.0)) < 1e-14);  // det(1 - q) = 2
  CHECK_THROWS_AS(as_gamma_form(CurvatureData::flat(0, Eigen::MatrixXd::Identity(2, 2), CMatrix::Identity(1, 1))),
                  FormError);
}

TEST_CASE("Getzler orders") {
  CHECK(getzler_order("H f") == -2);
  CHECK(getzler_order("[H, f]") == -3);
  CHECK(getzler_order("Q f") == -4);
  CHECK(getzler_order("[Q, f]") == -5);
  CHECK(getzler_order("H cdf") == -1);
  CHECK(getzler_order("[H, cdf]") == -2);
  CHECK(getzler_order("Q cdf") == -3);
  CHECK(getzler_order("[Q, cdf]") == -4);
  CHECK(getzler_order("[D2, f]") == 1);
  CHECK(getzler_order("[D2, cdf]") == 2);
  CHECK(getzler_vanishes({-3, -4}, 3));
  CHECK_FALSE(getzler_vanishes({-3, -3}, 3));
  CHECK_FALSE(getzler_vanishes({-2, -2}, 2));
  CHECK_THROWS_AS(getzler_order("H ??"), FormError);
}
