#pragma once

#include <gmpxx.h>

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

#include "msmilp/errors.hpp"

namespace msmilp {

// Exact rational number. Thin value wrapper over GMP's mpq_class that keeps
// the canonical-form invariant (den > 0, gcd(num, den) = 1) and adds a
// configurable magnitude guard so runaway encodings surface as
// NumericOverflow instead of eating the machine.
class Rational {
  public:
    Rational() : q_(0) {}
    Rational(long n) : q_(n) {}                          // NOLINT(google-explicit-constructor)
    Rational(int n) : q_(n) {}                           // NOLINT(google-explicit-constructor)
    Rational(long num, long den);
    explicit Rational(const mpq_class& q) : q_(q) { q_.canonicalize(); }

    // Accepts "p/q", integer literals, and plain decimals ("-3", "9.5", "1/3").
    static Rational parse(const std::string& text);

    std::string str() const;             // "p/q", or "p" when den == 1
    double to_double() const { return q_.get_d(); }

    Rational num() const { return Rational(mpq_class(q_.get_num())); }
    Rational den() const { return Rational(mpq_class(q_.get_den())); }
    bool is_integer() const { return q_.get_den() == 1; }
    Rational floor() const;
    Rational ceil() const;
    Rational abs() const { return Rational(mpq_class(::abs(q_))); }
    int sign() const { return sgn(q_); }
    long to_long() const;                // requires an integer that fits

    // Total bits across numerator and denominator; the overflow guard metric.
    std::size_t bit_size() const;

    // Global magnitude cap in bits (numerator + denominator). 0 disables.
    static void set_bit_limit(std::size_t bits);
    static std::size_t bit_limit();
    // Throws NumericOverflow when this value exceeds the cap.
    void check_magnitude() const;

    Rational& operator+=(const Rational& o) { q_ += o.q_; return *this; }
    Rational& operator-=(const Rational& o) { q_ -= o.q_; return *this; }
    Rational& operator*=(const Rational& o) { q_ *= o.q_; return *this; }
    Rational& operator/=(const Rational& o);

    friend Rational operator+(Rational a, const Rational& b) { return a += b; }
    friend Rational operator-(Rational a, const Rational& b) { return a -= b; }
    friend Rational operator*(Rational a, const Rational& b) { return a *= b; }
    friend Rational operator/(Rational a, const Rational& b) { return a /= b; }
    friend Rational operator-(const Rational& a) { return Rational(mpq_class(-a.q_)); }

    friend bool operator==(const Rational& a, const Rational& b) { return a.q_ == b.q_; }
    friend bool operator!=(const Rational& a, const Rational& b) { return a.q_ != b.q_; }
    friend bool operator<(const Rational& a, const Rational& b) { return a.q_ < b.q_; }
    friend bool operator<=(const Rational& a, const Rational& b) { return a.q_ <= b.q_; }
    friend bool operator>(const Rational& a, const Rational& b) { return a.q_ > b.q_; }
    friend bool operator>=(const Rational& a, const Rational& b) { return a.q_ >= b.q_; }

    friend std::ostream& operator<<(std::ostream& os, const Rational& r);

  private:
    mpq_class q_;
};

using Vec = std::vector<Rational>;
using Mat = std::vector<Vec>;

Rational dot(const Vec& a, const Vec& b);
Vec mat_vec(const Mat& m, const Vec& x);
std::string vec_str(const Vec& v, const char* sep = " ");

// Extended rational: a finite value or one of the two infinities. Used for
// value-function and recourse values where infeasibility maps to +inf.
class ExtRat {
  public:
    ExtRat() : kind_(Kind::Finite), value_() {}
    ExtRat(Rational r) : kind_(Kind::Finite), value_(std::move(r)) {}  // NOLINT
    ExtRat(long n) : kind_(Kind::Finite), value_(n) {}                 // NOLINT

    static ExtRat inf() { return ExtRat(Kind::PlusInf); }
    static ExtRat ninf() { return ExtRat(Kind::MinusInf); }

    bool finite() const { return kind_ == Kind::Finite; }
    bool is_inf() const { return kind_ == Kind::PlusInf; }
    bool is_ninf() const { return kind_ == Kind::MinusInf; }
    // Value of a finite ExtRat; throws on infinities.
    const Rational& value() const;

    std::string str() const;
    double to_double() const;

    ExtRat operator-() const;
    friend ExtRat operator+(const ExtRat& a, const ExtRat& b);
    friend ExtRat operator-(const ExtRat& a, const ExtRat& b) { return a + (-b); }
    // Scaling by a positive finite rational (probabilities).
    friend ExtRat operator*(const Rational& p, const ExtRat& a);

    friend bool operator==(const ExtRat& a, const ExtRat& b);
    friend bool operator!=(const ExtRat& a, const ExtRat& b) { return !(a == b); }
    friend bool operator<(const ExtRat& a, const ExtRat& b);
    friend bool operator<=(const ExtRat& a, const ExtRat& b) { return a < b || a == b; }
    friend bool operator>(const ExtRat& a, const ExtRat& b) { return b < a; }
    friend bool operator>=(const ExtRat& a, const ExtRat& b) { return b <= a; }

  private:
    enum class Kind { Finite, PlusInf, MinusInf };
    explicit ExtRat(Kind k) : kind_(k), value_() {}
    Kind kind_;
    Rational value_;
};

} // namespace msmilp
