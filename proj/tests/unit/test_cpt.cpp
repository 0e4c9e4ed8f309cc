#include <doctest.h>

#include <cmath>

#include "goesched/cpt.hpp"
#include "goesched/errors.hpp"

using namespace goesched;

TEST_CASE("value function examples") {
  const CptParams p;
  CHECK(value(0.2, 0.2, p) == 0.0);
  CHECK(value(0.7, 0.2, p) == doctest::Approx(0.70711).epsilon(1e-5));
  CHECK(value(0.0, 0.2, p) == doctest::Approx(-0.89443).epsilon(1e-5));
  CHECK(value(2.0, 0.2, p) == doctest::Approx(std::sqrt(1.8)));
}

TEST_CASE("gain-only value") {
  const CptParams p;
  CHECK(value_gain_only(0.5, 0.0, p) == doctest::Approx(std::sqrt(0.5)));
  CHECK(value_gain_only(-0.1, 0.0, p) == 0.0);
  CHECK(value_gain_only(0.0, 0.0, p) == 0.0);
}

TEST_CASE("probability weighting") {
  CptParams id;
  CptParams inv;
  inv.weighting = Weighting::kInverseS;
  inv.weighting_gamma = 0.65;
  for (const CptParams* p : {&id, &inv}) {
    CHECK(weight(0.0, *p) == 0.0);
    CHECK(weight(1.0, *p) == 1.0);
    CHECK_THROWS_AS(weight(-0.01, *p), DomainError);
    CHECK_THROWS_AS(weight(1.01, *p), DomainError);
  }
  CHECK(weight(0.37, id) == 0.37);
  // 0.5^g / (2 * 0.5^g)^(1/g) evaluated directly.
  const double g = 0.65;
  const double expected = std::pow(0.5, g) / std::pow(2.0 * std::pow(0.5, g), 1.0 / g);
  CHECK(weight(0.5, inv) == doctest::Approx(expected).epsilon(1e-12));
  CHECK(expected == doctest::Approx(0.43879).epsilon(1e-4));
}

TEST_CASE("value is continuous at the reference and loss averse") {
  const CptParams p;
  CHECK(value(0.2 + 1e-12, 0.2, p) == doctest::Approx(0.0).epsilon(1e-5));
  CHECK(value(0.2 - 1e-12, 0.2, p) == doctest::Approx(0.0).epsilon(1e-5));
  for (int k = 1; k <= 100; ++k) {
    const double d = k / 100.0;
    const double loss = std::abs(value(0.2 - d, 0.2, p));
    const double gain = value(0.2 + d, 0.2, p);
    CHECK(loss == doctest::Approx(p.lambda_loss * gain).epsilon(1e-12));
  }
}

TEST_CASE("value and weight are monotone") {
  const CptParams p;
  CptParams inv;
  inv.weighting = Weighting::kInverseS;
  for (int i = 0; i < 400; ++i) {
    const double x = -1.0 + i * 0.01;
    CHECK(value(x, 0.2, p) <= value(x + 0.01, 0.2, p));
  }
  for (double g : {0.3, 0.5, 0.65, 0.8, 1.0}) {
    inv.weighting_gamma = g;
    double prev = 0.0;
    for (int i = 1; i <= 1000; ++i) {
      const double w = weight(i / 1000.0, inv);
      CHECK(w >= prev - 1e-15);
      prev = w;
    }
  }
}

TEST_CASE("parameter validation") {
  CptParams p;
  p.alpha_gain = 0.0;
  CHECK_THROWS_AS(validate(p), ValidationError);
  p = {};
  p.lambda_loss = 0.9;
  CHECK_THROWS_AS(validate(p), ValidationError);
  p = {};
  p.weighting = Weighting::kInverseS;
  p.weighting_gamma = 0.28;
  CHECK_THROWS_AS(validate(p), ValidationError);
  p.weighting_gamma = 0.29;
  CHECK_NOTHROW(validate(p));
}
