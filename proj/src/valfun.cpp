#include "msmilp/valfun.hpp"

#include <algorithm>
#include <map>

namespace msmilp {

namespace {

// LP over the continuous columns only, at the given (unexpanded) rhs.
LpProblem continuous_restriction(const SubMilp& sub, const Vec& beta) {
    RowExpansion ex = RowExpansion::make(sub.sense);
    LpProblem p;
    p.beta = ex.expand_rhs(beta);
    Mat gc;
    for (const Vec& row : sub.G) gc.push_back(Vec(row.begin() + sub.r, row.end()));
    p.G = ex.expand_rows(gc);
    p.d = Vec(sub.d.begin() + sub.r, sub.d.end());
    p.lower = Bounds(sub.lb.begin() + sub.r, sub.lb.end());
    p.upper = Bounds(sub.ub.begin() + sub.r, sub.ub.end());
    return p;
}

SubMilp integer_restriction(const SubMilp& sub) {
    SubMilp out;
    out.d = Vec(sub.d.begin(), sub.d.begin() + sub.r);
    for (const Vec& row : sub.G) out.G.push_back(Vec(row.begin(), row.begin() + sub.r));
    out.sense = sub.sense;
    out.r = sub.r;
    out.lb = Bounds(sub.lb.begin(), sub.lb.begin() + sub.r);
    out.ub = Bounds(sub.ub.begin(), sub.ub.begin() + sub.r);
    return out;
}

} // namespace

ExtRat eval_phi(const SubMilp& sub, const Vec& beta, const BnbLimits& lim) {
    MilpResult r = solve_milp(sub, beta, lim);
    if (r.status != SolveStatus::Optimal) return ExtRat::inf();
    return ExtRat(r.value);
}

ExtRat eval_phi_C(const SubMilp& sub, const Vec& beta, const LpLimits& lim) {
    LpResult r = solve_lp(continuous_restriction(sub, beta), lim);
    switch (r.status) {
        case LpStatus::Optimal: return ExtRat(r.value);
        case LpStatus::Infeasible: return ExtRat::inf();
        case LpStatus::Unbounded: break;
    }
    throw UnboundedError("continuous restriction is unbounded below");
}

ExtRat eval_phi_I(const SubMilp& sub, const Vec& beta, const BnbLimits& lim) {
    return eval_phi(integer_restriction(sub), beta, lim);
}

IfvfCone make_ifvf(const SubMilp& sub, const Vec& y_hat) {
    if (static_cast<int>(y_hat.size()) != sub.r && static_cast<int>(y_hat.size()) != sub.n())
        throw DimensionError("frozen point must cover the integer prefix");
    IfvfCone cone;
    cone.y_I = Vec(y_hat.begin(), y_hat.begin() + sub.r);
    for (int j = 0; j < sub.r; ++j) {
        if (!cone.y_I[j].is_integer())
            throw AssumptionError("frozen integer coordinate " + std::to_string(j) +
                                  " is fractional");
        if (cone.y_I[j] < *sub.lb[j] || cone.y_I[j] > *sub.ub[j])
            throw AssumptionError("frozen integer coordinate " + std::to_string(j) +
                                  " is out of bounds");
    }
    cone.offset = Rational(0);
    for (int j = 0; j < sub.r; ++j) cone.offset += sub.d[j] * cone.y_I[j];
    cone.shift.assign(sub.m(), Rational(0));
    for (int i = 0; i < sub.m(); ++i)
        for (int j = 0; j < sub.r; ++j) cone.shift[i] += sub.G[i][j] * cone.y_I[j];
    return cone;
}

ExtRat eval_ifvf(const SubMilp& sub, const IfvfCone& cone, const Vec& beta,
                 const LpLimits& lim) {
    Vec shifted = beta;
    for (int i = 0; i < sub.m(); ++i) shifted[i] -= cone.shift[i];
    ExtRat tail = eval_phi_C(sub, shifted, lim);
    if (tail.is_inf()) return tail;
    return ExtRat(cone.offset + tail.value());
}

SandwichBounds sandwich_eval(const SubMilp& sub, const ValueFunctionApprox& approx,
                             const Vec& beta, const LpLimits& lim) {
    SandwichBounds out{ExtRat::ninf(), ExtRat::inf()};
    for (const DualFunction& fn : approx.lower) {
        ExtRat v = eval_dual_function(fn, beta);
        if (v > out.lo) out.lo = v;
    }
    for (const IfvfCone& cone : approx.upper) {
        ExtRat v = eval_ifvf(sub, cone, beta, lim);
        if (v < out.hi) out.hi = v;
    }
    return out;
}

namespace {

// phi_C of a one-row problem with conic continuous bounds, from the two
// cached probe slopes.
ExtRat cone_tail(const PiecewiseVf1D& vf, const Rational& t) {
    if (t == Rational(0)) return ExtRat(Rational(0));
    if (t > Rational(0)) {
        if (!vf.pos_slope) return ExtRat::inf();
        return ExtRat(*vf.pos_slope * t);
    }
    if (!vf.neg_slope) return ExtRat::inf();
    return ExtRat(*vf.neg_slope * t);
}

} // namespace

ExtRat PiecewiseVf1D::eval(const Rational& beta) const {
    ExtRat best = ExtRat::inf();
    for (const Vf1DCone& c : cones) {
        ExtRat tail = cone_tail(*this, beta - c.shift);
        if (tail.is_inf()) continue;
        ExtRat v(c.offset + tail.value());
        if (v < best) best = v;
    }
    return best;
}

PiecewiseVf1D construct_vf_1row(const SubMilp& sub, long lattice_cap) {
    if (sub.m() != 1) throw AssumptionError("exact construction needs exactly one row");
    for (int j = sub.r; j < sub.n(); ++j) {
        bool conic = sub.lb[j] && *sub.lb[j] == Rational(0) && !sub.ub[j];
        if (!conic)
            throw AssumptionError("continuous column " + std::to_string(j) +
                                  " must be nonnegative and unbounded for the cone construction");
    }
    for (int j = 0; j < sub.r; ++j)
        if (!sub.lb[j] || !sub.ub[j])
            throw AssumptionError("integer column " + std::to_string(j) + " must be bounded");

    PiecewiseVf1D vf;

    // Probe the continuous restriction once per side; positive homogeneity
    // turns the two values into the whole cone.
    ExtRat right = eval_phi_C(sub, {Rational(1)});
    if (right.finite()) vf.pos_slope = right.value();
    ExtRat left = eval_phi_C(sub, {Rational(-1)});
    if (left.finite()) vf.neg_slope = -left.value();

    // Enumerate the integer box.
    std::vector<Rational> lo(sub.r), hi(sub.r);
    long count = 1;
    for (int j = 0; j < sub.r; ++j) {
        lo[j] = sub.lb[j]->ceil();
        hi[j] = sub.ub[j]->floor();
        Rational width = hi[j] - lo[j] + Rational(1);
        if (width.sign() <= 0) return vf;  // empty box: no cones anywhere
        if (width > Rational(lattice_cap))
            throw CapExceeded("integer lattice exceeds the cap of " +
                              std::to_string(lattice_cap) + " points");
        count *= width.to_long();
        if (count > lattice_cap)
            throw CapExceeded("integer lattice exceeds the cap of " +
                              std::to_string(lattice_cap) + " points");
    }

    auto dominates = [&](const Vf1DCone& a, const Vf1DCone& b) {
        // Sublinearity of the tail gives a one-point test: if cone a already
        // undercuts cone b at b's apex, it undercuts it everywhere.
        ExtRat at_apex = cone_tail(vf, b.shift - a.shift);
        if (at_apex.is_inf()) return false;
        return a.offset + at_apex.value() <= b.offset;
    };

    std::vector<Vf1DCone> kept;
    Vec point(sub.r);
    for (int j = 0; j < sub.r; ++j) point[j] = lo[j];
    for (long step = 0; step < count; ++step) {
        Vf1DCone cone;
        cone.y_I = point;
        cone.offset = Rational(0);
        cone.shift = Rational(0);
        for (int j = 0; j < sub.r; ++j) {
            cone.offset += sub.d[j] * point[j];
            cone.shift += sub.G[0][j] * point[j];
        }
        bool dominated = false;
        for (const Vf1DCone& k : kept) {
            if (dominates(k, cone)) {
                dominated = true;
                break;
            }
        }
        if (!dominated) {
            kept.erase(std::remove_if(kept.begin(), kept.end(),
                                      [&](const Vf1DCone& k) { return dominates(cone, k); }),
                       kept.end());
            kept.push_back(std::move(cone));
        }
        // Odometer: last coordinate fastest.
        for (int j = sub.r - 1; j >= 0; --j) {
            point[j] += Rational(1);
            if (point[j] <= hi[j]) break;
            point[j] = lo[j];
        }
    }
    std::sort(kept.begin(), kept.end(), [](const Vf1DCone& a, const Vf1DCone& b) {
        if (a.shift != b.shift) return a.shift < b.shift;
        return a.offset < b.offset;
    });
    vf.cones = std::move(kept);
    if (vf.cones.empty()) return vf;

    // Assemble the finite envelope. Each cone contributes one line per
    // feasible side; the envelope is their minimum over the finite domain.
    struct Line {
        Rational slope, intercept;
        ExtRat from, to;  // validity window
    };
    std::vector<Line> lines;
    for (const Vf1DCone& c : vf.cones) {
        if (vf.pos_slope)
            lines.push_back({*vf.pos_slope, c.offset - *vf.pos_slope * c.shift, ExtRat(c.shift),
                             ExtRat::inf()});
        if (vf.neg_slope)
            lines.push_back({*vf.neg_slope, c.offset - *vf.neg_slope * c.shift, ExtRat::ninf(),
                             ExtRat(c.shift)});
    }

    ExtRat dom_lo = vf.neg_slope ? ExtRat::ninf() : ExtRat(vf.cones.front().shift);
    ExtRat dom_hi = vf.pos_slope ? ExtRat::inf() : ExtRat(vf.cones.back().shift);

    if (lines.empty() || dom_lo == dom_hi) {
        // Degenerate: only the apexes are finite (both sides infeasible) or a
        // single-point domain; emit zero-length segments at each apex.
        for (const Vf1DCone& c : vf.cones)
            vf.segments.push_back({ExtRat(c.shift), ExtRat(c.shift), Rational(0), c.offset});
        return vf;
    }

    // Candidate kinks: apexes plus pairwise crossings, clipped to the domain.
    std::vector<Rational> cands;
    for (const Vf1DCone& c : vf.cones) cands.push_back(c.shift);
    for (std::size_t a = 0; a < lines.size(); ++a) {
        for (std::size_t b = a + 1; b < lines.size(); ++b) {
            if (lines[a].slope == lines[b].slope) continue;
            Rational x =
                (lines[b].intercept - lines[a].intercept) / (lines[a].slope - lines[b].slope);
            cands.push_back(x);
        }
    }
    std::sort(cands.begin(), cands.end());
    cands.erase(std::unique(cands.begin(), cands.end()), cands.end());
    auto in_domain = [&](const Rational& x) {
        return ExtRat(x) >= dom_lo && ExtRat(x) <= dom_hi;
    };
    cands.erase(std::remove_if(cands.begin(), cands.end(),
                               [&](const Rational& x) { return !in_domain(x); }),
                cands.end());

    // The active line on each open interval between candidates.
    auto active_at = [&](const Rational& x) -> const Line* {
        const Line* best = nullptr;
        Rational best_val;
        for (const Line& ln : lines) {
            if (ExtRat(x) < ln.from || ExtRat(x) > ln.to) continue;
            Rational v = ln.slope * x + ln.intercept;
            if (!best || v < best_val) {
                best = &ln;
                best_val = v;
            }
        }
        return best;
    };

    struct Seg {
        ExtRat from, to;
        Rational slope, intercept;
    };
    std::vector<Seg> segs;
    auto push_seg = [&](const ExtRat& from, const ExtRat& to, const Line* ln) {
        if (!ln) return;
        if (!segs.empty() && segs.back().slope == ln->slope &&
            segs.back().intercept == ln->intercept) {
            segs.back().to = to;
            return;
        }
        segs.push_back({from, to, ln->slope, ln->intercept});
    };
    if (dom_lo.is_ninf()) {
        // Sample one unit left of the first candidate for the unbounded tail.
        Rational probe = cands.front() - Rational(1);
        push_seg(ExtRat::ninf(), ExtRat(cands.front()), active_at(probe));
    }
    for (std::size_t k = 0; k + 1 < cands.size(); ++k) {
        Rational mid = (cands[k] + cands[k + 1]) / Rational(2);
        push_seg(ExtRat(cands[k]), ExtRat(cands[k + 1]), active_at(mid));
    }
    if (dom_hi.is_inf()) {
        Rational probe = cands.back() + Rational(1);
        push_seg(ExtRat(cands.back()), ExtRat::inf(), active_at(probe));
    }
    for (const Seg& s : segs) vf.segments.push_back({s.from, s.to, s.slope, s.intercept});
    for (std::size_t k = 0; k + 1 < segs.size(); ++k)
        vf.breakpoints.push_back(segs[k].to.value());
    return vf;
}

} // namespace msmilp
