#include "msmilp/rational.hpp"

#include <atomic>
#include <cctype>
#include <ostream>
#include <sstream>

namespace msmilp {

namespace {
std::atomic<std::size_t> g_bit_limit{1u << 16};
} // namespace

Rational::Rational(long num, long den) {
    if (den == 0) throw ParseError("rational with zero denominator");
    q_ = mpq_class(num, den);
    q_.canonicalize();
}

Rational& Rational::operator/=(const Rational& o) {
    if (o.q_ == 0) throw ParseError("rational division by zero");
    q_ /= o.q_;
    return *this;
}

Rational Rational::parse(const std::string& text) {
    std::string s;
    for (char c : text)
        if (!std::isspace(static_cast<unsigned char>(c))) s.push_back(c);
    if (s.empty()) throw ParseError("empty rational literal");

    auto slash = s.find('/');
    if (slash != std::string::npos) {
        std::string num = s.substr(0, slash), den = s.substr(slash + 1);
        if (num.empty() || den.empty() || den.find('/') != std::string::npos)
            throw ParseError("bad rational literal '" + text + "'");
        mpq_class q;
        if (q.set_str(num + "/" + den, 10) != 0)
            throw ParseError("bad rational literal '" + text + "'");
        if (q.get_den() == 0) throw ParseError("rational with zero denominator: '" + text + "'");
        q.canonicalize();
        return Rational(q);
    }

    auto dot = s.find('.');
    if (dot != std::string::npos) {
        std::string head = s.substr(0, dot), tail = s.substr(dot + 1);
        if (tail.empty() || tail.find_first_not_of("0123456789") != std::string::npos)
            throw ParseError("bad decimal literal '" + text + "'");
        bool neg = !head.empty() && head[0] == '-';
        if (!head.empty() && (head[0] == '+' || head[0] == '-')) head = head.substr(1);
        if (head.empty()) head = "0";
        mpz_class ip, fp, scale;
        if (ip.set_str(head, 10) != 0 || fp.set_str(tail, 10) != 0)
            throw ParseError("bad decimal literal '" + text + "'");
        mpz_ui_pow_ui(scale.get_mpz_t(), 10, tail.size());
        mpq_class q(ip * scale + fp, scale);
        q.canonicalize();
        if (neg) q = -q;
        return Rational(q);
    }

    mpq_class q;
    if (q.set_str(s, 10) != 0) throw ParseError("bad integer literal '" + text + "'");
    return Rational(q);
}

std::string Rational::str() const {
    return q_.get_str();
}

Rational Rational::floor() const {
    mpz_class z;
    mpz_fdiv_q(z.get_mpz_t(), q_.get_num_mpz_t(), q_.get_den_mpz_t());
    return Rational(mpq_class(z));
}

Rational Rational::ceil() const {
    mpz_class z;
    mpz_cdiv_q(z.get_mpz_t(), q_.get_num_mpz_t(), q_.get_den_mpz_t());
    return Rational(mpq_class(z));
}

long Rational::to_long() const {
    if (!is_integer() || !q_.get_num().fits_slong_p())
        throw Error("rational " + str() + " does not fit a machine integer");
    return q_.get_num().get_si();
}

std::size_t Rational::bit_size() const {
    return mpz_sizeinbase(q_.get_num_mpz_t(), 2) + mpz_sizeinbase(q_.get_den_mpz_t(), 2);
}

void Rational::set_bit_limit(std::size_t bits) { g_bit_limit.store(bits); }
std::size_t Rational::bit_limit() { return g_bit_limit.load(); }

void Rational::check_magnitude() const {
    std::size_t cap = g_bit_limit.load();
    if (cap != 0 && bit_size() > cap)
        throw NumericOverflow("rational magnitude exceeds " + std::to_string(cap) +
                              " bits; instance is beyond the configured scale");
}

std::ostream& operator<<(std::ostream& os, const Rational& r) { return os << r.str(); }

Rational dot(const Vec& a, const Vec& b) {
    if (a.size() != b.size()) throw DimensionError("dot: length mismatch");
    Rational s;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

Vec mat_vec(const Mat& m, const Vec& x) {
    Vec out;
    out.reserve(m.size());
    for (const Vec& row : m) out.push_back(dot(row, x));
    return out;
}

std::string vec_str(const Vec& v, const char* sep) {
    std::ostringstream os;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) os << sep;
        os << v[i].str();
    }
    return os.str();
}

const Rational& ExtRat::value() const {
    if (kind_ != Kind::Finite) throw Error("infinite value where a finite rational is required");
    return value_;
}

std::string ExtRat::str() const {
    switch (kind_) {
        case Kind::PlusInf: return "inf";
        case Kind::MinusInf: return "-inf";
        default: return value_.str();
    }
}

double ExtRat::to_double() const {
    switch (kind_) {
        case Kind::PlusInf: return std::numeric_limits<double>::infinity();
        case Kind::MinusInf: return -std::numeric_limits<double>::infinity();
        default: return value_.to_double();
    }
}

ExtRat ExtRat::operator-() const {
    if (kind_ == Kind::PlusInf) return ninf();
    if (kind_ == Kind::MinusInf) return inf();
    return ExtRat(-value_);
}

ExtRat operator+(const ExtRat& a, const ExtRat& b) {
    if (a.finite() && b.finite()) return ExtRat(a.value_ + b.value_);
    if (a.is_inf() && b.is_ninf()) throw Error("inf + -inf is undefined");
    if (a.is_ninf() && b.is_inf()) throw Error("inf + -inf is undefined");
    if (a.is_inf() || b.is_inf()) return ExtRat::inf();
    return ExtRat::ninf();
}

ExtRat operator*(const Rational& p, const ExtRat& a) {
    if (p.sign() <= 0) throw Error("ExtRat scaling requires a positive factor");
    if (!a.finite()) return a;
    return ExtRat(p * a.value_);
}

bool operator==(const ExtRat& a, const ExtRat& b) {
    if (a.kind_ != b.kind_) return false;
    if (a.kind_ != ExtRat::Kind::Finite) return true;
    return a.value_ == b.value_;
}

bool operator<(const ExtRat& a, const ExtRat& b) {
    if (a.is_ninf()) return !b.is_ninf();
    if (a.is_inf()) return false;
    if (b.is_inf()) return true;
    if (b.is_ninf()) return false;
    return a.value_ < b.value_;
}

} // namespace msmilp
