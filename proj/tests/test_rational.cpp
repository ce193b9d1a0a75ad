#include <doctest.h>

#include "mlsim/rational.hpp"
#include "test_helpers.hpp"

using mlsim::Rational;

TEST_CASE("rational normalization and arithmetic") {
    CHECK(Rational(2, 4) == Rational(1, 2));
    CHECK(Rational(-2, -4) == Rational(1, 2));
    CHECK(Rational(2, -4) == Rational(-1, 2));
    CHECK(Rational(1, 60) + Rational(1, 60) == Rational(1, 30));
    CHECK(Rational(1) / Rational(60) == Rational(1, 60));
    CHECK(Rational(3, 2) * Rational(2, 3) == Rational(1));
    CHECK(Rational(1, 3) < Rational(1, 2));
    CHECK(Rational(7, 3).floor() == 2);
    CHECK(Rational(-7, 3).floor() == -3);
    CHECK(Rational(7, 3).ceil() == 3);
    CHECK(Rational(6, 3).ceil() == 2);
    CHECK(Rational(1, 2).str() == "1/2");
    CHECK(Rational(4, 2).str() == "2");
}

TEST_CASE("rational parse forms") {
    CHECK(Rational::parse("60") == Rational(60));
    CHECK(Rational::parse("1/3") == Rational(1, 3));
    CHECK(Rational::parse("0.25") == Rational(1, 4));
    CHECK(Rational::parse("-0.5") == Rational(-1, 2));
    CHECK(Rational::parse("2.5") == Rational(5, 2));
    CHECK_THROWS_AS(Rational::parse("abc"), mlsim::Error);
    CHECK_THROWS_AS((void)Rational(1, 0), mlsim::Error);
}

TEST_CASE("rational add/sub round trip property") {
    mlsim::test::Rng rng(42);
    for (int i = 0; i < 200; ++i) {
        Rational a(static_cast<std::int64_t>(rng.below(2000)) - 1000,
                   static_cast<std::int64_t>(rng.below(99)) + 1);
        Rational b(static_cast<std::int64_t>(rng.below(2000)) - 1000,
                   static_cast<std::int64_t>(rng.below(99)) + 1);
        CHECK((a + b) - b == a);
        if (b != Rational(0)) CHECK((a / b) * b == a);
    }
}
