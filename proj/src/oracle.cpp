#include "msmilp/oracle.hpp"

#include <algorithm>
#include <exception>
#include <map>
#include <random>
#include <sstream>
#include <utility>

#include <omp.h>

#include "msmilp/csvio.hpp"
#include "msmilp/errors.hpp"
#include "msmilp/threads.hpp"
#include "msmilp/valfun.hpp"

namespace msmilp {

namespace {

// Integer box [first, last) of a column range, indexable in lexicographic
// order so parallel sweeps can address points by plain loop index.
struct Lattice {
    std::vector<Rational> lo, hi;  // per enumerated column
    long count = 1;                // 0 when some column range is empty

    Vec point(long i) const {
        Vec p(lo.size());
        for (int k = static_cast<int>(lo.size()) - 1; k >= 0; --k) {
            long width = (hi[k] - lo[k]).to_long() + 1;
            p[k] = lo[k] + Rational(i % width);
            i /= width;
        }
        return p;
    }
};

Lattice make_lattice(const Bounds& lb, const Bounds& ub, int first, int last,
                     long cap, const char* what) {
    Lattice lat;
    for (int j = first; j < last; ++j) {
        if (!lb[j] || !ub[j])
            throw AssumptionError(std::string(what) + ": integer column " +
                                  std::to_string(j) + " needs finite bounds to enumerate");
        Rational lo = lb[j]->ceil();
        Rational hi = ub[j]->floor();
        lat.lo.push_back(lo);
        lat.hi.push_back(hi);
        Rational width = hi - lo + Rational(1);
        if (width.sign() <= 0) {
            lat.count = 0;
            return lat;
        }
        if (width > Rational(cap))
            throw CapExceeded(std::string(what) + ": lattice larger than the cap");
        lat.count *= width.to_long();
        if (lat.count > cap)
            throw CapExceeded(std::string(what) + ": lattice larger than the cap");
    }
    return lat;
}

// beta - G_I * y_I over the original rows.
Vec residual_rhs(const SubMilp& sub, const Vec& beta, const Vec& y_int) {
    Vec res = beta;
    for (int i = 0; i < sub.m(); ++i)
        for (int j = 0; j < sub.r; ++j)
            res[i] -= sub.G[i][j] * y_int[j];
    return res;
}

Rational dot_prefix(const Vec& d, const Vec& y_int, int r) {
    Rational s;
    for (int j = 0; j < r; ++j) s += d[j] * y_int[j];
    return s;
}

// Leader objective over the continuous argmin face of one integer candidate:
// optimize d1_C over { y_C : G_C y_C (>=|=) residual, bounds, d2_C y_C = tail }.
ExtRat leader_face_value(const SubMilp& sub, const Vec& d1, const Vec& residual,
                         const Rational& tail, RiskMode mode, Vec* y_cont) {
    const int nc = sub.n() - sub.r;
    LpProblem lp;
    lp.d.resize(nc);
    for (int j = 0; j < nc; ++j) {
        lp.d[j] = d1[sub.r + j];
        if (mode == RiskMode::Pessimistic) lp.d[j] = -lp.d[j];
    }
    Mat rows(sub.m(), Vec(nc));
    for (int i = 0; i < sub.m(); ++i)
        for (int j = 0; j < nc; ++j) rows[i][j] = sub.G[i][sub.r + j];
    Vec pin(nc);
    for (int j = 0; j < nc; ++j) pin[j] = sub.d[sub.r + j];
    rows.push_back(pin);

    std::vector<RowSense> sense = sub.sense;
    sense.push_back(RowSense::Eq);
    Vec rhs = residual;
    rhs.push_back(tail);

    RowExpansion ex = RowExpansion::make(sense);
    lp.G = ex.expand_rows(rows);
    lp.beta = ex.expand_rhs(rhs);
    lp.lower.assign(sub.lb.begin() + sub.r, sub.lb.end());
    lp.upper.assign(sub.ub.begin() + sub.r, sub.ub.end());

    LpResult res = solve_lp(lp);
    if (res.status == LpStatus::Unbounded)
        throw UnboundedError("reaction tie-break is unbounded on the optimal face");
    if (res.status != LpStatus::Optimal)
        throw Error("optimal face lost the point that generated it");
    if (y_cont) *y_cont = res.y;
    Rational v = mode == RiskMode::Pessimistic ? -res.value : res.value;
    return ExtRat(v);
}

} // namespace

ExtRat oracle_phi(const SubMilp& sub, const Vec& beta, long lattice_cap) {
    if (static_cast<int>(beta.size()) != sub.m())
        throw DimensionError("oracle: rhs length does not match the row count");
    Lattice lat = make_lattice(sub.lb, sub.ub, 0, sub.r, lattice_cap, "oracle");
    ExtRat best = ExtRat::inf();
    for (long i = 0; i < lat.count; ++i) {
        Vec y_int = lat.point(i);
        ExtRat tail = eval_phi_C(sub, residual_rhs(sub, beta, y_int));
        if (!tail.finite()) continue;
        ExtRat total(dot_prefix(sub.d, y_int, sub.r) + tail.value());
        if (total < best) best = total;
    }
    return best;
}

RiskValue oracle_rho(const TwoStageInstance& inst, const Vec& beta, RiskMode mode,
                     long lattice_cap) {
    SubMilp sub = SubMilp::second_stage(inst);
    if (static_cast<int>(beta.size()) != sub.m())
        throw DimensionError("oracle: rhs length does not match the row count");
    Lattice lat = make_lattice(sub.lb, sub.ub, 0, sub.r, lattice_cap, "oracle");

    struct Candidate {
        Vec y_int;
        Vec residual;
        Rational tail;
    };
    ExtRat phi = ExtRat::inf();
    std::vector<Candidate> ties;
    for (long i = 0; i < lat.count; ++i) {
        Vec y_int = lat.point(i);
        Vec residual = residual_rhs(sub, beta, y_int);
        ExtRat tail = eval_phi_C(sub, residual);
        if (!tail.finite()) continue;
        ExtRat total(dot_prefix(sub.d, y_int, sub.r) + tail.value());
        if (total < phi) {
            phi = total;
            ties.clear();
        }
        if (total == phi)
            ties.push_back({std::move(y_int), std::move(residual), tail.value()});
    }

    RiskValue out;
    if (!phi.finite()) return out;
    out.phi = phi;

    for (const Candidate& cand : ties) {
        Vec y_cont;
        ExtRat face = leader_face_value(sub, inst.d1, cand.residual, cand.tail,
                                        mode, &y_cont);
        Rational leader = dot_prefix(inst.d1, cand.y_int, sub.r) + face.value();
        bool better = out.y.empty() ||
                      (mode == RiskMode::Optimistic ? ExtRat(leader) < out.value
                                                    : ExtRat(leader) > out.value);
        if (better) {
            out.value = ExtRat(leader);
            out.y = cand.y_int;
            out.y.insert(out.y.end(), y_cont.begin(), y_cont.end());
        }
    }
    return out;
}

OracleReport oracle_solve(const TwoStageInstance& inst, RiskMode mode,
                          const OracleOptions& opt) {
    if (inst.r1 != inst.n1)
        throw AssumptionError("oracle: first stage must be all integer to enumerate");
    const int S = static_cast<int>(inst.scenarios.size());
    Lattice xlat = make_lattice(inst.x_lb, inst.x_ub, 0, inst.n1, opt.lattice_cap, "oracle");
    Lattice ylat = make_lattice(inst.y_lb, inst.y_ub, 0, inst.r2, opt.lattice_cap, "oracle");
    long per_x = S * std::max<long>(1, ylat.count);
    if (xlat.count > 0 && per_x > opt.lattice_cap / xlat.count)
        throw CapExceeded("oracle: combined lattice larger than the cap");

    OracleReport rep;
    rep.xi_table.resize(xlat.count);
    std::vector<char> stage1_ok(xlat.count, 1);
    std::vector<std::exception_ptr> errors(xlat.count);

    auto work = [&](long i) {
        try {
            OracleRow& row = rep.xi_table[i];
            row.x = xlat.point(i);
            for (int t = 0; t < inst.m1; ++t) {
                Rational lhs;
                for (int j = 0; j < inst.n1; ++j) lhs += inst.A1[t][j] * row.x[j];
                if (lhs < inst.b1[t]) stage1_ok[i] = 0;
            }
            Rational expect;
            bool all_finite = true;
            row.reactions.assign(S, Vec{});
            row.phi_by_scenario.assign(S, ExtRat::inf());
            for (int w = 0; w < S; ++w) {
                RiskValue rv = oracle_rho(inst, inst.beta(w, row.x), mode, opt.lattice_cap);
                row.phi_by_scenario[w] = rv.phi;
                if (!rv.value.finite()) {
                    all_finite = false;
                    continue;
                }
                expect += inst.scenarios[w].p * rv.value.value();
                row.reactions[w] = rv.y;
            }
            if (all_finite) row.xi = ExtRat(expect);
        } catch (...) {
            errors[i] = std::current_exception();
        }
    };

    if (opt.parallel) {
#pragma omp parallel for schedule(dynamic) num_threads(worker_count())
        for (long i = 0; i < xlat.count; ++i) work(i);
    } else {
        for (long i = 0; i < xlat.count; ++i) work(i);
    }
    for (const std::exception_ptr& e : errors)
        if (e) std::rethrow_exception(e);

    // Serial merge keeps the tables in lattice order whatever the schedule did.
    std::map<std::pair<int, std::string>, size_t> seen;
    for (long i = 0; i < xlat.count; ++i) {
        const OracleRow& row = rep.xi_table[i];
        if (row.xi.finite()) rep.feasible_x.push_back(row.x);
        for (int w = 0; w < S; ++w) {
            Vec beta = inst.beta(w, row.x);
            auto key = std::make_pair(w, csv_vec(beta));
            if (seen.count(key)) continue;
            seen[key] = rep.phi_table.size();
            rep.phi_table.push_back({w, beta, row.phi_by_scenario[w]});
        }
        if (!stage1_ok[i] || !row.xi.finite()) continue;
        ExtRat total(dot(inst.c, row.x) + row.xi.value());
        if (total < rep.value) {
            rep.status = SolveStatus::Optimal;
            rep.value = total;
            rep.x = row.x;
            rep.reactions = row.reactions;
        }
    }
    return rep;
}

std::string OracleReport::xi_csv(const std::string& prefix) const {
    std::ostringstream os;
    size_t n = xi_table.empty() ? 0 : xi_table[0].x.size();
    for (size_t j = 0; j < n; ++j)
        os << prefix << "_" << j << "," << prefix << "_" << j << "_decimal,";
    os << "xi,xi_decimal\n";
    for (const OracleRow& row : xi_table) {
        for (const Rational& xj : row.x) {
            csv_pair(os, xj);
            os << ",";
        }
        csv_pair(os, row.xi);
        os << "\n";
    }
    return os.str();
}

std::string OracleReport::phi_csv() const {
    std::ostringstream os;
    size_t m = phi_table.empty() ? 0 : phi_table[0].beta.size();
    os << "scenario,";
    for (size_t i = 0; i < m; ++i)
        os << "beta_" << i << ",beta_" << i << "_decimal,";
    os << "phi,phi_decimal\n";
    for (const PhiRow& row : phi_table) {
        os << row.scenario << ",";
        for (const Rational& bi : row.beta) {
            csv_pair(os, bi);
            os << ",";
        }
        csv_pair(os, row.phi);
        os << "\n";
    }
    return os.str();
}

namespace {

struct Rng {
    std::mt19937_64 g;
    explicit Rng(unsigned long seed) : g(seed) {}
    long pick(long lo, long hi) {
        return lo + static_cast<long>(g() % static_cast<unsigned long>(hi - lo + 1));
    }
    bool chance(int pct) { return pick(1, 100) <= pct; }
    long nonzero(long lo, long hi) {
        long v = 0;
        while (v == 0) v = pick(lo, hi);
        return v;
    }
};

} // namespace

TwoStageInstance random_instance(unsigned long seed, const RandomDims& dims,
                                 int density_pct) {
    Rng rng(seed);
    TwoStageInstance inst;
    inst.n1 = std::clamp(dims.n1, 1, 4);
    inst.r1 = inst.n1;  // every linking column integer, by construction
    inst.n2 = std::clamp(dims.n2, 1, 4);
    const int S = std::clamp(dims.scenarios, 1, 3);

    for (int j = 0; j < inst.n1; ++j) {
        inst.c.push_back(Rational(rng.pick(-9, 9)));
        inst.x_lb.push_back(Rational(0));
        inst.x_ub.push_back(Rational(dims.zero_sum ? 1 : rng.pick(1, 3)));
    }
    // An occasional first-stage row, satisfied at the origin so the stage
    // never starts empty.
    inst.m1 = rng.chance(25) ? 1 : 0;
    for (int t = 0; t < inst.m1; ++t) {
        Vec row(inst.n1);
        for (int j = 0; j < inst.n1; ++j)
            if (rng.chance(density_pct)) row[j] = Rational(rng.nonzero(-9, 9));
        inst.A1.push_back(row);
        inst.b1.push_back(Rational(rng.pick(-6, 0)));
    }

    inst.r2 = static_cast<int>(rng.pick(0, inst.n2));
    for (int j = 0; j < inst.n2; ++j) {
        inst.y_lb.push_back(Rational(0));
        inst.y_ub.push_back(Rational(j < inst.r2 ? rng.pick(1, 2) : rng.pick(2, 4)));
    }
    inst.m2 = static_cast<int>(rng.pick(1, 2));
    for (int i = 0; i < inst.m2; ++i) {
        Vec row(inst.n2);
        for (int j = 0; j < inst.n2; ++j)
            if (rng.chance(density_pct)) row[j] = Rational(rng.nonzero(-9, 9));
        bool empty = std::all_of(row.begin(), row.end(),
                                 [](const Rational& v) { return v.sign() == 0; });
        if (empty) row[rng.pick(0, inst.n2 - 1)] = Rational(rng.nonzero(-9, 9));
        inst.G2.push_back(row);
        inst.sense2.push_back(rng.chance(20) ? RowSense::Eq : RowSense::Ge);
    }
    for (int j = 0; j < inst.n2; ++j)
        inst.d2.push_back(Rational(rng.pick(-9, 9)));
    inst.d1 = inst.d2;
    if (dims.zero_sum) {
        for (Rational& v : inst.d1) v = -v;
    } else if (!dims.equal_objectives) {
        for (Rational& v : inst.d1) v = Rational(rng.pick(-9, 9));
    }

    std::vector<long> weights;
    long total = 0;
    for (int w = 0; w < S; ++w) {
        weights.push_back(rng.pick(1, 9));
        total += weights.back();
    }
    for (int w = 0; w < S; ++w) {
        Scenario sc;
        sc.p = Rational(weights[w], total);
        sc.A2.assign(inst.m2, Vec(inst.n1));
        for (int i = 0; i < inst.m2; ++i)
            for (int j = 0; j < inst.n1; ++j)
                if (rng.chance(density_pct)) sc.A2[i][j] = Rational(rng.nonzero(-9, 9));
        for (int i = 0; i < inst.m2; ++i) sc.b2.push_back(Rational(rng.pick(-9, 9)));
        inst.scenarios.push_back(std::move(sc));
    }

    validate_instance(inst);
    return inst;
}

} // namespace msmilp
