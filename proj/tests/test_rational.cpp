#include <doctest.h>

#include "msmilp/rational.hpp"

using namespace msmilp;

TEST_CASE("rational canonical form and arithmetic") {
    Rational a(6, 4);
    CHECK(a.str() == "3/2");
    CHECK(a.num() == Rational(3));
    CHECK(a.den() == Rational(2));
    CHECK((a + Rational(1, 2)) == Rational(2));
    CHECK((a * Rational(2, 3)) == Rational(1));
    CHECK((Rational(1) / Rational(3)).str() == "1/3");
    CHECK((-a).str() == "-3/2");
    CHECK(Rational(-6, -4) == Rational(3, 2));
    CHECK(Rational(6, -4) == Rational(-3, 2));
    CHECK(Rational(0).sign() == 0);
    CHECK(Rational(-1, 7).sign() == -1);
    CHECK_THROWS_AS(Rational(1, 0), ParseError);
    CHECK_THROWS_AS(Rational(1) / Rational(0), ParseError);
}

TEST_CASE("rational parsing round trip") {
    CHECK(Rational::parse("3/4") == Rational(3, 4));
    CHECK(Rational::parse("-3/4") == Rational(-3, 4));
    CHECK(Rational::parse("12") == Rational(12));
    CHECK(Rational::parse(" -12 ") == Rational(-12));
    CHECK(Rational::parse("9.5") == Rational(19, 2));
    CHECK(Rational::parse("-0.25") == Rational(-1, 4));
    CHECK(Rational::parse("0.5") == Rational(1, 2));
    CHECK_THROWS_AS(Rational::parse(""), ParseError);
    CHECK_THROWS_AS(Rational::parse("1/0"), ParseError);
    CHECK_THROWS_AS(Rational::parse("x"), ParseError);
    CHECK_THROWS_AS(Rational::parse("1/2/3"), ParseError);
    CHECK_THROWS_AS(Rational::parse("1.2.3"), ParseError);
    for (const char* s : {"3/2", "-7", "0", "1/3", "-22/7"})
        CHECK(Rational::parse(Rational::parse(s).str()) == Rational::parse(s));
}

TEST_CASE("floor ceil and integrality") {
    CHECK(Rational(7, 2).floor() == Rational(3));
    CHECK(Rational(7, 2).ceil() == Rational(4));
    CHECK(Rational(-7, 2).floor() == Rational(-4));
    CHECK(Rational(-7, 2).ceil() == Rational(-3));
    CHECK(Rational(4).floor() == Rational(4));
    CHECK(Rational(4).is_integer());
    CHECK(!Rational(1, 2).is_integer());
    CHECK(Rational(19, 2).to_double() == doctest::Approx(9.5));
}

TEST_CASE("magnitude guard") {
    std::size_t old = Rational::bit_limit();
    Rational::set_bit_limit(16);
    Rational big(1);
    for (int i = 0; i < 5; ++i) big *= Rational(1000000);
    CHECK_THROWS_AS(big.check_magnitude(), NumericOverflow);
    Rational::set_bit_limit(old);
    CHECK_NOTHROW(big.check_magnitude());
}

TEST_CASE("extended rationals") {
    ExtRat f(Rational(3, 2));
    CHECK(f.finite());
    CHECK(f.value() == Rational(3, 2));
    CHECK(ExtRat::inf().is_inf());
    CHECK(ExtRat::ninf().is_ninf());
    CHECK(ExtRat::inf() > f);
    CHECK(ExtRat::ninf() < f);
    CHECK((f + ExtRat(Rational(1, 2))) == ExtRat(Rational(2)));
    CHECK((f + ExtRat::inf()).is_inf());
    CHECK((Rational(1, 2) * ExtRat::inf()).is_inf());
    CHECK((Rational(1, 2) * ExtRat(Rational(3))) == ExtRat(Rational(3, 2)));
    CHECK((-ExtRat::inf()).is_ninf());
    CHECK(ExtRat::inf() == ExtRat::inf());
    CHECK(ExtRat::inf().str() == "inf");
    CHECK_THROWS_AS(ExtRat::inf().value(), Error);
    CHECK_THROWS_AS(ExtRat::inf() + ExtRat::ninf(), Error);
}

TEST_CASE("vector helpers") {
    Vec a = {Rational(1), Rational(2)};
    Vec b = {Rational(3), Rational(-1)};
    CHECK(dot(a, b) == Rational(1));
    Mat m = {{Rational(1), Rational(0)}, {Rational(2), Rational(5)}};
    Vec mv = mat_vec(m, a);
    CHECK(mv[0] == Rational(1));
    CHECK(mv[1] == Rational(12));
    CHECK(vec_str(a) == "1 2");
}
