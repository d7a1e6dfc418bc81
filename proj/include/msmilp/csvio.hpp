#pragma once

#include <ostream>
#include <string>

#include "msmilp/rational.hpp"

namespace msmilp {

// Every exported rational occupies two adjacent CSV cells: the exact "p/q"
// form and a decimal reading. Streaming uses default ostream precision, so
// files are byte-stable run to run.
void csv_pair(std::ostream& os, const Rational& r);
void csv_pair(std::ostream& os, const ExtRat& r);  // "inf" / "-inf" in both cells

// A whole vector in one cell, entries in exact form joined by ';'.
std::string csv_vec(const Vec& v);

} // namespace msmilp
