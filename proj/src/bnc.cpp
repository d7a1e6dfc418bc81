#include "msmilp/bnc.hpp"

#include <algorithm>
#include <chrono>
#include <exception>
#include <sstream>

#include <omp.h>

#include "msmilp/csvio.hpp"
#include "msmilp/errors.hpp"
#include "msmilp/ratlp.hpp"
#include "msmilp/threads.hpp"

namespace msmilp {

namespace {

Rational int_gcd(Rational a, Rational b) {
    a = a.abs();
    b = b.abs();
    while (b.sign() != 0) {
        Rational r = a - (a / b).floor() * b;
        a = b;
        b = r;
    }
    return a;
}

Rational int_lcm(const Rational& a, const Rational& b) {
    if (a.sign() == 0 || b.sign() == 0) return Rational(0);
    return (a * b).abs() / int_gcd(a, b);
}

// Scales a rational vector by the positive factor that makes it a primitive
// integer vector (coprime entries). Zero vectors pass through.
void make_primitive(Vec& v) {
    Rational scale(1);
    for (const Rational& r : v) scale = int_lcm(scale, r.den());
    Rational g;
    for (Rational& r : v) {
        r *= scale;
        g = int_gcd(g, r);
    }
    if (g.sign() == 0) return;
    for (Rational& r : v) r /= g;
}

// Scales every row to integer coefficients. Second-stage rows share G2
// across scenarios, so each row's factor is the lcm over all scenarios'
// entries. Bounds tighten to integers, which loses nothing on integer
// variables.
TwoStageInstance clear_denominators(const TwoStageInstance& inst) {
    TwoStageInstance out = inst;
    for (int i = 0; i < out.m1; ++i) {
        Rational scale = out.b1[i].den();
        for (const Rational& r : out.A1[i]) scale = int_lcm(scale, r.den());
        for (Rational& r : out.A1[i]) r *= scale;
        out.b1[i] *= scale;
    }
    for (int i = 0; i < out.m2; ++i) {
        Rational scale(1);
        for (const Rational& r : out.G2[i]) scale = int_lcm(scale, r.den());
        for (const Scenario& sc : out.scenarios) {
            scale = int_lcm(scale, sc.b2[i].den());
            for (const Rational& r : sc.A2[i]) scale = int_lcm(scale, r.den());
        }
        for (Rational& r : out.G2[i]) r *= scale;
        for (Scenario& sc : out.scenarios) {
            sc.b2[i] *= scale;
            for (Rational& r : sc.A2[i]) r *= scale;
        }
    }
    auto tighten = [](Bounds& lo, Bounds& hi) {
        for (OptBound& b : lo)
            if (b) b = b->ceil();
        for (OptBound& b : hi)
            if (b) b = b->floor();
    };
    tighten(out.x_lb, out.x_ub);
    tighten(out.y_lb, out.y_ub);
    return out;
}

struct JointShape {
    int n1 = 0, n2 = 0, S = 0;
    int ncols() const { return n1 + S * n2; }
    int ycol(int w, int j) const { return n1 + w * n2 + j; }
};

JointShape shape_of(const TwoStageInstance& inst) {
    return {inst.n1, inst.n2, static_cast<int>(inst.scenarios.size())};
}

// Static part of the joint relaxation: objective, expanded rows, bounds.
struct JointRelaxation {
    Vec d;
    RowExpansion ex;
    Mat exG;
    Vec exBeta;
    Bounds lb, ub;
};

JointRelaxation build_joint(const TwoStageInstance& inst) {
    JointShape sh = shape_of(inst);
    JointRelaxation jr;
    jr.d.assign(sh.ncols(), Rational(0));
    for (int j = 0; j < sh.n1; ++j) jr.d[j] = inst.c[j];
    for (int w = 0; w < sh.S; ++w)
        for (int j = 0; j < sh.n2; ++j)
            jr.d[sh.ycol(w, j)] = inst.scenarios[w].p * inst.d1[j];

    std::vector<RowSense> sense(inst.m1, RowSense::Ge);
    Mat rows;
    Vec rhs;
    for (int i = 0; i < inst.m1; ++i) {
        Vec row(sh.ncols());
        for (int j = 0; j < sh.n1; ++j) row[j] = inst.A1[i][j];
        rows.push_back(row);
        rhs.push_back(inst.b1[i]);
    }
    for (int w = 0; w < sh.S; ++w) {
        const Scenario& sc = inst.scenarios[w];
        for (int i = 0; i < inst.m2; ++i) {
            Vec row(sh.ncols());
            for (int j = 0; j < sh.n1; ++j) row[j] = sc.A2[i][j];
            for (int j = 0; j < sh.n2; ++j) row[sh.ycol(w, j)] = inst.G2[i][j];
            rows.push_back(row);
            rhs.push_back(sc.b2[i]);
            sense.push_back(inst.sense2[i]);
        }
    }
    jr.ex = RowExpansion::make(sense);
    jr.exG = jr.ex.expand_rows(rows);
    jr.exBeta = jr.ex.expand_rhs(rhs);

    jr.lb = inst.x_lb;
    jr.ub = inst.x_ub;
    for (int w = 0; w < sh.S; ++w) {
        jr.lb.insert(jr.lb.end(), inst.y_lb.begin(), inst.y_lb.end());
        jr.ub.insert(jr.ub.end(), inst.y_ub.begin(), inst.y_ub.end());
    }
    return jr;
}

LpResult solve_node_lp(const JointRelaxation& jr, const BncNode& node,
                       const LpLimits& lim) {
    LpProblem lp;
    lp.d = jr.d;
    lp.G = jr.exG;
    lp.beta = jr.exBeta;
    for (const BncCut& cut : node.cuts) {
        Vec row;
        row.reserve(cut.coef.size());
        for (const Rational& r : cut.coef) row.push_back(-r);
        lp.G.push_back(row);
        lp.beta.push_back(-cut.rhs);
    }
    lp.lower = node.lb;
    lp.upper = node.ub;
    return solve_lp(lp, lim);
}

} // namespace

BilevelCheck check_bilevel_feasible(const TwoStageInstance& inst, const Vec& x,
                                    const Mat& ys, const BnbLimits& lim) {
    const int S = static_cast<int>(inst.scenarios.size());
    SubMilp stage = SubMilp::second_stage(inst);
    std::vector<ExtRat> phi(S, ExtRat::inf());
    std::vector<std::exception_ptr> errs(S);
#pragma omp parallel for schedule(dynamic) num_threads(worker_count())
    for (int w = 0; w < S; ++w) {
        try {
            MilpResult r = solve_milp(stage, inst.beta(w, x), lim);
            if (r.status == SolveStatus::Optimal) phi[w] = r.value;
        } catch (...) {
            errs[w] = std::current_exception();
        }
    }
    for (const std::exception_ptr& e : errs)
        if (e) std::rethrow_exception(e);

    BilevelCheck chk;
    for (int w = 0; w < S; ++w) {
        if (ExtRat(dot(inst.d2, ys[w])) > phi[w]) {
            chk.violating = w;
            return chk;
        }
    }
    chk.feasible = true;
    chk.xi = eval_xi(inst, x, RiskMode::Optimistic, lim).value;
    return chk;
}

BncCut generate_nogood_cut(const TwoStageInstance& inst, const BncNode& node,
                           const Vec& x, const Mat& ys, int w) {
    JointShape sh = shape_of(inst);

    // Joint coordinates of the derivation space and the vertex there.
    std::vector<int> cols;
    for (int j = 0; j < sh.n1; ++j) cols.push_back(j);
    for (int s = 0; s < sh.S; ++s)
        if (w < 0 || w == s)
            for (int j = 0; j < sh.n2; ++j) cols.push_back(sh.ycol(s, j));
    std::vector<int> place(sh.ncols(), -1);
    for (size_t k = 0; k < cols.size(); ++k) place[cols[k]] = static_cast<int>(k);
    Vec vertex(sh.ncols());
    for (int j = 0; j < sh.n1; ++j) vertex[j] = x[j];
    for (int s = 0; s < sh.S; ++s)
        for (int j = 0; j < sh.n2; ++j) vertex[sh.ycol(s, j)] = ys[s][j];

    // Active constraints in <=-form over the derivation columns. Equality
    // rows contribute one orientation; bounds contribute their unit normals.
    Mat active;       // normals over cols
    Vec active_rhs;   // matching right-hand sides
    auto consider = [&](const Vec& joint_normal, const Rational& rhs) {
        Vec local(cols.size());
        Rational lhs;
        for (size_t k = 0; k < cols.size(); ++k) {
            local[k] = joint_normal[cols[k]];
            lhs += local[k] * vertex[cols[k]];
        }
        if (lhs == rhs) {
            active.push_back(local);
            active_rhs.push_back(rhs);
        }
    };

    for (int i = 0; i < inst.m1; ++i) {
        Vec normal(sh.ncols());
        for (int j = 0; j < sh.n1; ++j) normal[j] = -inst.A1[i][j];
        consider(normal, -inst.b1[i]);
    }
    for (int s = 0; s < sh.S; ++s) {
        if (w >= 0 && w != s) continue;
        const Scenario& sc = inst.scenarios[s];
        for (int i = 0; i < inst.m2; ++i) {
            Vec normal(sh.ncols());
            Rational rhs = sc.b2[i];
            for (int j = 0; j < sh.n1; ++j) normal[j] = sc.A2[i][j];
            for (int j = 0; j < sh.n2; ++j) normal[sh.ycol(s, j)] = inst.G2[i][j];
            if (inst.sense2[i] == RowSense::Ge) {
                for (Rational& r : normal) r = -r;
                rhs = -rhs;
            }
            consider(normal, rhs);
        }
    }
    for (const BncCut& cut : node.cuts) {
        bool supported = true;
        for (int j = 0; j < sh.ncols(); ++j)
            if (place[j] < 0 && cut.coef[j].sign() != 0) supported = false;
        if (supported) consider(cut.coef, cut.rhs);
    }
    for (int col : cols) {
        Vec normal(sh.ncols());
        if (node.ub[col] && vertex[col] == *node.ub[col]) {
            normal[col] = Rational(1);
            consider(normal, *node.ub[col]);
        }
        if (node.lb[col] && vertex[col] == *node.lb[col]) {
            normal[col] = Rational(-1);
            consider(normal, -*node.lb[col]);
        }
    }

    // The summed normal supports exactly the face on which every active
    // constraint stays tight; that face is the vertex alone only when the
    // active normals span the derivation space.
    Mat elim = active;
    size_t rank = 0;
    for (size_t col = 0; col < cols.size() && rank < elim.size(); ++col) {
        size_t pivot = rank;
        while (pivot < elim.size() && elim[pivot][col].sign() == 0) ++pivot;
        if (pivot == elim.size()) continue;
        std::swap(elim[rank], elim[pivot]);
        for (size_t r = rank + 1; r < elim.size(); ++r) {
            if (elim[r][col].sign() == 0) continue;
            Rational factor = elim[r][col] / elim[rank][col];
            for (size_t c2 = col; c2 < cols.size(); ++c2)
                elim[r][c2] -= factor * elim[rank][c2];
        }
        ++rank;
    }
    if (rank < cols.size())
        throw DegenerateVertexError(
            "active constraints leave a face of positive dimension at the vertex");

    Vec sum(cols.size());
    for (const Vec& row : active)
        for (size_t k = 0; k < cols.size(); ++k) sum[k] += row[k];
    make_primitive(sum);

    BncCut cut;
    cut.coef.assign(sh.ncols(), Rational(0));
    Rational gamma;
    for (size_t k = 0; k < cols.size(); ++k) {
        cut.coef[cols[k]] = sum[k];
        gamma += sum[k] * vertex[cols[k]];
    }
    cut.rhs = gamma - Rational(1);
    cut.scenario = w;
    return cut;
}

SolveResult solve_bilevel_bnc(const TwoStageInstance& inst, const BncConfig& cfg) {
    if (inst.r1 != inst.n1 || inst.r2 != inst.n2)
        throw AssumptionError("branch and cut needs a pure-integer instance");
    for (const OptBound& b : inst.x_lb)
        if (!b) throw AssumptionError("branch and cut needs finite variable boxes");
    for (const OptBound& b : inst.x_ub)
        if (!b) throw AssumptionError("branch and cut needs finite variable boxes");
    for (const OptBound& b : inst.y_lb)
        if (!b) throw AssumptionError("branch and cut needs finite variable boxes");
    for (const OptBound& b : inst.y_ub)
        if (!b) throw AssumptionError("branch and cut needs finite variable boxes");

    auto t0 = std::chrono::steady_clock::now();
    TwoStageInstance work = clear_denominators(inst);
    JointShape sh = shape_of(work);
    JointRelaxation jr = build_joint(work);

    SolveResult result;
    result.algorithm = "bnc";

    std::vector<BncNode> nodes;
    nodes.push_back({0, -1, 0, jr.lb, jr.ub, {}, ExtRat::ninf(), BncNodeState::Open});
    std::vector<int> frontier{0};

    ExtRat incumbent = ExtRat::inf();
    Vec incumbent_x;
    long lp_solves = 0;

    while (!frontier.empty()) {
        size_t best = 0;
        for (size_t i = 1; i < frontier.size(); ++i) {
            const ExtRat& a = nodes[frontier[i]].lp_value;
            const ExtRat& b = nodes[frontier[best]].lp_value;
            if (a < b || (a == b && frontier[i] < frontier[best])) best = i;
        }
        int id = frontier[best];
        frontier.erase(frontier.begin() + best);
        BncNode& node = nodes[id];

        if (node.lp_value.finite()) {
            Rational lbound = node.lp_value.value();
            if (result.bound_trace.empty() || result.bound_trace.back() < lbound)
                result.bound_trace.push_back(lbound);
        }
        if (node.lp_value >= incumbent) {
            node.state = BncNodeState::PrunedByBound;
            continue;
        }

        while (true) {
            if (++lp_solves > cfg.max_lp_solves)
                throw IterationLimit("relaxation solve budget exhausted");
            LpResult res = solve_node_lp(jr, node, cfg.lp);
            if (res.status == LpStatus::Unbounded)
                throw UnboundedError("joint relaxation unbounded despite finite boxes");
            if (res.status == LpStatus::Infeasible) {
                node.state = BncNodeState::PrunedInfeasible;
                break;
            }
            node.lp_value = res.value;
            if (node.lp_value >= incumbent) {
                node.state = BncNodeState::PrunedByBound;
                break;
            }

            int frac = -1;
            for (int j = 0; j < sh.ncols(); ++j)
                if (!res.y[j].is_integer()) {
                    frac = j;
                    break;
                }
            if (frac >= 0) {
                if (static_cast<long>(nodes.size()) + 2 > cfg.max_nodes)
                    throw NodeLimit("node limit of " + std::to_string(cfg.max_nodes) +
                                    " reached");
                node.state = BncNodeState::Branched;
                // Copy before pushing: growing the vector invalidates `node`.
                int down = static_cast<int>(nodes.size());
                BncNode lo{down, id, node.depth + 1, node.lb, node.ub, node.cuts,
                           node.lp_value, BncNodeState::Open};
                BncNode hi = lo;
                hi.id = down + 1;
                lo.ub[frac] = res.y[frac].floor();
                hi.lb[frac] = res.y[frac].floor() + Rational(1);
                nodes.push_back(std::move(lo));
                nodes.push_back(std::move(hi));
                frontier.push_back(down);
                frontier.push_back(down + 1);
                break;
            }

            Vec x(res.y.begin(), res.y.begin() + sh.n1);
            Mat ys;
            for (int s = 0; s < sh.S; ++s)
                ys.emplace_back(res.y.begin() + sh.ycol(s, 0),
                                res.y.begin() + sh.ycol(s, 0) + sh.n2);

            BilevelCheck chk = check_bilevel_feasible(work, x, ys, cfg.bnb);
            if (chk.feasible) {
                ExtRat total = chk.xi.finite()
                                   ? ExtRat(dot(work.c, x) + chk.xi.value())
                                   : ExtRat::inf();
                if (total < incumbent) {
                    incumbent = total;
                    incumbent_x = x;
                }
                // Everything else in this node costs at least the relaxation
                // value, which the incumbent now covers.
                node.state = BncNodeState::Exhausted;
                break;
            }

            BncCut cut;
            try {
                cut = generate_nogood_cut(work, node, x, ys, chk.violating);
            } catch (const DegenerateVertexError&) {
                cut = generate_nogood_cut(work, node, x, ys, -1);
            }
            node.cuts.push_back(cut);

            CutLogEntry log;
            log.node = id;
            log.scenario = cut.scenario;
            log.f.assign(cut.coef.begin(), cut.coef.begin() + sh.n1);
            if (cut.scenario >= 0) {
                log.g.assign(cut.coef.begin() + sh.ycol(cut.scenario, 0),
                             cut.coef.begin() + sh.ycol(cut.scenario, 0) + sh.n2);
                log.vertex_y = ys[cut.scenario];
            } else {
                log.g.assign(cut.coef.begin() + sh.n1, cut.coef.end());
                for (const Vec& y : ys)
                    log.vertex_y.insert(log.vertex_y.end(), y.begin(), y.end());
            }
            log.rhs = cut.rhs;
            log.vertex_x = x;
            result.cut_log.push_back(log);
        }
    }

    result.iterations = lp_solves;
    result.nodes = static_cast<long>(nodes.size());
    result.objective = incumbent;
    if (incumbent.finite()) {
        result.status = SolveStatus::Optimal;
        result.x = incumbent_x;
        XiValue xi = eval_xi(work, incumbent_x, RiskMode::Optimistic, cfg.bnb);
        for (const RiskValue& part : xi.parts) {
            result.reactions.push_back(part.y);
            result.final_sub.push_back(part.value.finite() ? part.value.value()
                                                           : Rational(0));
        }
    } else {
        result.status = SolveStatus::Infeasible;
    }
    if (!result.x.empty() && work.binarization)
        result.x = work.binarization->restore(result.x);
    result.objective_reported =
        work.sense_tag.stage1_max ? -result.objective : result.objective;
    result.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return result;
}

std::string cut_log_csv(const std::vector<CutLogEntry>& log) {
    std::ostringstream os;
    os << "node,scenario,f,g,rhs,rhs_decimal,vertex_x,vertex_y\n";
    for (const CutLogEntry& e : log) {
        os << e.node << "," << e.scenario << "," << csv_vec(e.f) << ","
           << csv_vec(e.g) << ",";
        csv_pair(os, e.rhs);
        os << "," << csv_vec(e.vertex_x) << "," << csv_vec(e.vertex_y) << "\n";
    }
    return os.str();
}

} // namespace msmilp
