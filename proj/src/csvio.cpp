#include "msmilp/csvio.hpp"

namespace msmilp {

void csv_pair(std::ostream& os, const Rational& r) {
    os << r.str() << ',' << r.to_double();
}

void csv_pair(std::ostream& os, const ExtRat& r) {
    if (r.finite()) {
        csv_pair(os, r.value());
    } else {
        const char* s = r.is_inf() ? "inf" : "-inf";
        os << s << ',' << s;
    }
}

std::string csv_vec(const Vec& v) {
    std::string out;
    for (size_t i = 0; i < v.size(); ++i) {
        if (i) out += ';';
        out += v[i].str();
    }
    return out;
}

} // namespace msmilp
