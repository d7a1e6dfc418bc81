#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "msmilp/bnb.hpp"

namespace msmilp {

// Exact optimum of the parametric MILP at one right-hand side; +inf when
// infeasible there.
ExtRat eval_phi(const SubMilp& sub, const Vec& beta, const BnbLimits& lim = {});

// Value of the continuous restriction: integer columns dropped, continuous
// columns keep their declared bounds. Throws UnboundedError when the
// restriction is unbounded below (the full problem would be too).
ExtRat eval_phi_C(const SubMilp& sub, const Vec& beta, const LpLimits& lim = {});

// Value of the integer restriction: continuous columns dropped.
ExtRat eval_phi_I(const SubMilp& sub, const Vec& beta, const BnbLimits& lim = {});

// Upper-bounding function obtained by freezing the integer part at one
// feasible point: value(beta) = offset + phi_C(beta - shift). Tight at any
// rhs where the frozen part is optimal.
struct IfvfCone {
    Vec y_I;
    Rational offset;  // integer-part cost
    Vec shift;        // integer-part row contribution
};

// y_hat may be a full-length point or just the integer prefix.
IfvfCone make_ifvf(const SubMilp& sub, const Vec& y_hat);
ExtRat eval_ifvf(const SubMilp& sub, const IfvfCone& cone, const Vec& beta,
                 const LpLimits& lim = {});

// Two-sided envelope bookkeeping: dual functions bound from below, frozen
// integer cones from above, and the points where both are known tight.
struct ValueFunctionApprox {
    std::vector<DualFunction> lower;
    std::vector<IfvfCone> upper;
    std::vector<StrongPoint> strong_points;
};

struct SandwichBounds {
    ExtRat lo;  // max over lower functions; -inf when none
    ExtRat hi;  // min over cones; +inf when none
};

SandwichBounds sandwich_eval(const SubMilp& sub, const ValueFunctionApprox& approx,
                             const Vec& beta, const LpLimits& lim = {});

// Exact value function for single-row problems. The continuous restriction
// of a one-row problem is a cone with one slope per side of the origin;
// the full function is the minimum of that cone translated to each
// undominated integer point.
struct Vf1DCone {
    Vec y_I;
    Rational offset;
    Rational shift;
};

// One affine segment of the finite part of the envelope; [from, to] may be
// unbounded on either side.
struct Vf1DSegment {
    ExtRat from, to;
    Rational slope, intercept;
};

struct PiecewiseVf1D {
    // Slopes of the one-row continuous restriction on each side of zero;
    // absent means that side is infeasible.
    std::optional<Rational> pos_slope, neg_slope;
    std::vector<Vf1DCone> cones;          // dominance-pruned generating set
    std::vector<Rational> breakpoints;    // kinks of the finite envelope
    std::vector<Vf1DSegment> segments;

    // Minimum over the generating cones; +inf outside the finite domain.
    ExtRat eval(const Rational& beta) const;
};

PiecewiseVf1D construct_vf_1row(const SubMilp& sub, long lattice_cap = 1000000);

} // namespace msmilp
