#pragma once

#include <string>
#include <vector>

#include "msmilp/model.hpp"
#include "msmilp/rational.hpp"

namespace msmilp {

// LP in the solver's native form: min d*y s.t. G*y >= beta, lower <= y <= upper.
// Infinite bounds are allowed on both sides of any variable.
struct LpProblem {
    Vec d;
    Mat G;
    Vec beta;
    Bounds lower, upper;
};

enum class CertKind { OptimalBasis, InfeasibilityRay, InfeasibilityExtended };

// Dual evidence. For OptimalBasis / InfeasibilityExtended the multipliers
// satisfy v*G + v_lo - v_hi = d with v, v_lo, v_hi >= 0, so
// value(beta) = v*beta + v_lo*lower - v_hi*upper is an affine lower bound on
// the LP value at any rhs. For InfeasibilityRay they satisfy the homogeneous
// version (d replaced by 0) and value(beta) > 0 witnesses infeasibility.
struct DualCertificate {
    CertKind kind = CertKind::OptimalBasis;
    Vec v;
    Vec v_lo;
    Vec v_hi;
};

// v*beta + v_lo*lower - v_hi*upper; terms with infinite bounds require a zero
// multiplier and contribute nothing.
Rational certificate_value(const DualCertificate& cert, const Vec& beta,
                           const Bounds& lower, const Bounds& upper);

struct CertCheck {
    bool ok = false;
    Rational value;
    std::string why;
};

// Independent algebraic re-check of a certificate against the problem data;
// does not trust anything the pivoting code produced.
CertCheck verify_certificate(const LpProblem& p, const DualCertificate& cert);

enum class LpStatus { Optimal, Infeasible, Unbounded };

struct LpResult {
    LpStatus status = LpStatus::Infeasible;
    Vec y;                  // Optimal: the vertex found
    Rational value;         // Optimal: d*y
    DualCertificate cert;   // Optimal: OptimalBasis; Infeasible: InfeasibilityRay
    Vec ray;                // Unbounded: improving feasible direction
    long pivots = 0;
};

struct LpLimits {
    long max_pivots = 1000000;
};

// Two-phase bounded-variable primal simplex with Bland's smallest-index rule
// throughout. Exact rational arithmetic; every returned certificate is
// re-verified before the result leaves this function.
LpResult solve_lp(const LpProblem& p, const LpLimits& lim = {});

// Turns an infeasibility ray into a dual-feasible affine certificate whose
// value at p.beta strictly exceeds target: a dual-feasible base point is
// found (bound patching, with an auxiliary solve as fallback) and the ray is
// added with the exact integer multiple that clears the target.
DualCertificate extend_infeasible_dual(const LpProblem& p, const DualCertificate& ray,
                                       const Rational& target);

// Mapping between rows with senses and the pure >= system the simplex sees:
// Ge rows pass through, Eq rows become a +/- pair. Duals fold back as the
// pair difference, giving one sign-free multiplier per Eq row.
struct RowExpansion {
    int orig_m = 0;
    std::vector<int> orig;  // per expanded row
    std::vector<int> sgn;   // +1 or -1

    static RowExpansion make(const std::vector<RowSense>& sense);
    Mat expand_rows(const Mat& G) const;
    Vec expand_rhs(const Vec& beta) const;
    Vec fold(const Vec& v_expanded) const;
};

} // namespace msmilp
