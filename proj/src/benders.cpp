#include "msmilp/benders.hpp"

#include <algorithm>
#include <chrono>
#include <exception>
#include <optional>
#include <sstream>

#include <omp.h>

#include "msmilp/csvio.hpp"
#include "msmilp/errors.hpp"
#include "msmilp/threads.hpp"

namespace msmilp {

namespace {

// Certificate of the second-stage LP folded into an affine function of the
// original right-hand side (bound terms contribute the constant).
AffinePiece fold_cert(const DualCertificate& cert, const RowExpansion& ex,
                      const Bounds& lb, const Bounds& ub) {
    AffinePiece p;
    p.slope = ex.fold(cert.v);
    for (size_t j = 0; j < cert.v_lo.size(); ++j) {
        if (cert.v_lo[j].sign() != 0) p.constant += cert.v_lo[j] * *lb[j];
        if (cert.v_hi[j].sign() != 0) p.constant -= cert.v_hi[j] * *ub[j];
    }
    return p;
}

// min d1*y over the LP relaxation of one scenario, jointly over (x, y).
// nullopt when even the relaxation is empty.
std::optional<Rational> scenario_lower_bound(const TwoStageInstance& inst, int w) {
    const Scenario& sc = inst.scenarios[w];
    const int n = inst.n1 + inst.n2;
    std::vector<RowSense> sense(inst.m1, RowSense::Ge);
    sense.insert(sense.end(), inst.sense2.begin(), inst.sense2.end());

    Mat rows;
    Vec rhs;
    for (int i = 0; i < inst.m1; ++i) {
        Vec row(n);
        for (int j = 0; j < inst.n1; ++j) row[j] = inst.A1[i][j];
        rows.push_back(row);
        rhs.push_back(inst.b1[i]);
    }
    for (int i = 0; i < inst.m2; ++i) {
        Vec row(n);
        for (int j = 0; j < inst.n1; ++j) row[j] = sc.A2[i][j];
        for (int j = 0; j < inst.n2; ++j) row[inst.n1 + j] = inst.G2[i][j];
        rows.push_back(row);
        rhs.push_back(sc.b2[i]);
    }

    RowExpansion ex = RowExpansion::make(sense);
    LpProblem lp;
    lp.d.assign(n, Rational(0));
    for (int j = 0; j < inst.n2; ++j) lp.d[inst.n1 + j] = inst.d1[j];
    lp.G = ex.expand_rows(rows);
    lp.beta = ex.expand_rhs(rhs);
    lp.lower = inst.x_lb;
    lp.lower.insert(lp.lower.end(), inst.y_lb.begin(), inst.y_lb.end());
    lp.upper = inst.x_ub;
    lp.upper.insert(lp.upper.end(), inst.y_ub.begin(), inst.y_ub.end());

    LpResult res = solve_lp(lp);
    if (res.status == LpStatus::Infeasible) return std::nullopt;
    if (res.status == LpStatus::Unbounded)
        throw UnboundedError("scenario relaxation is unbounded below; no finite recourse bound exists");
    return res.value;
}

// max over the first-stage box of piece(b2 - A2 x), by interval arithmetic.
Rational piece_box_max(const AffinePiece& piece, const TwoStageInstance& inst, int w) {
    const Scenario& sc = inst.scenarios[w];
    Rational base = piece.constant;
    for (int i = 0; i < inst.m2; ++i) base += piece.slope[i] * sc.b2[i];
    for (int j = 0; j < inst.n1; ++j) {
        Rational q;  // coefficient of x_j in piece(beta(x)) is -q
        for (int i = 0; i < inst.m2; ++i) q += piece.slope[i] * sc.A2[i][j];
        if (q.sign() == 0) continue;
        const OptBound& need = q.sign() > 0 ? inst.x_lb[j] : inst.x_ub[j];
        if (!need)
            throw UnboundedBoxError("cut linearization needs a finite box on every linking column");
        base -= q * *need;
    }
    return base;
}

struct MasterSolve {
    SolveStatus status = SolveStatus::Infeasible;
    Rational value;
    Vec x;
    Vec z;
    long nodes = 0;
};

MasterSolve run_master(const MasterState& state, const TwoStageInstance& inst,
                       const BendersConfig& cfg) {
    MasterMilp m = linearize_master(state, inst);
    BnbLimits lim;
    lim.max_nodes = cfg.master_max_nodes;
    lim.lp = cfg.bnb.lp;
    MilpResult r = solve_milp(m.sub, m.rhs, lim);
    MasterSolve out;
    out.nodes = static_cast<long>(r.tree.nodes().size());
    if (r.status != SolveStatus::Optimal) return out;
    out.status = SolveStatus::Optimal;
    out.value = r.value;
    for (int col : m.x_cols) out.x.push_back(r.y[col]);
    for (int col : m.z_cols) out.z.push_back(r.y[col]);
    return out;
}

// Iteration bookkeeping shared by both drivers.
struct RunClock {
    std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
};

void finish_result(SolveResult& r, const TwoStageInstance& inst, const RunClock& clock,
                   const MasterState& state) {
    r.bound_trace = state.bound_trace;
    r.wall_seconds = clock.seconds();
    if (!r.x.empty() && inst.binarization) r.x = inst.binarization->restore(r.x);
    r.objective_reported =
        inst.sense_tag.stage1_max ? -r.objective : r.objective;
}

} // namespace

Rational IntegerLShapedCut::bound_at(const Vec& x_int) const {
    Rational walk;  // sum over reference ones minus sum over reference zeros
    long ones = 0;
    for (size_t i = 0; i < x_ref.size(); ++i) {
        if (x_ref[i].sign() > 0) {
            walk += x_int[i];
            ++ones;
        } else {
            walk -= x_int[i];
        }
    }
    return z_lb + (height - z_lb) * (walk - Rational(ones) + Rational(1));
}

IntegerLShapedCut make_integer_lshaped_cut(const Vec& x_ref, const Rational& xi_value,
                                           const Rational& z_lb) {
    for (const Rational& v : x_ref)
        if (v != Rational(0) && v != Rational(1))
            throw AssumptionError("integer L-shaped cut needs a binary reference point");
    if (xi_value < z_lb)
        throw Error("integer L-shaped cut height below the global lower bound");
    return {x_ref, xi_value, z_lb};
}

MasterMilp linearize_master(const MasterState& state, const TwoStageInstance& inst) {
    const int S = static_cast<int>(inst.scenarios.size());
    const int nc1 = inst.n1 - inst.r1;  // continuous first-stage columns

    // One selection binary per group of each multi-group dual function cut.
    int total_w = 0;
    for (const auto& cuts : state.pool)
        for (const ScenarioCut& cut : cuts)
            if (const DualFnCut* dfc = std::get_if<DualFnCut>(&cut))
                if (dfc->fn.groups.size() > 1)
                    total_w += static_cast<int>(dfc->fn.groups.size());

    MasterMilp m;
    m.sub.r = inst.r1 + total_w;
    const int ncols = inst.n1 + total_w + S;
    m.sub.d.assign(ncols, Rational(0));
    m.sub.lb.assign(ncols, OptBound{});
    m.sub.ub.assign(ncols, OptBound{});

    for (int j = 0; j < inst.n1; ++j) {
        int col = j < inst.r1 ? j : inst.r1 + total_w + (j - inst.r1);
        m.x_cols.push_back(col);
        m.sub.d[col] = inst.c[j];
        m.sub.lb[col] = inst.x_lb[j];
        m.sub.ub[col] = inst.x_ub[j];
    }
    for (int t = 0; t < total_w; ++t) {
        m.sub.lb[inst.r1 + t] = Rational(0);
        m.sub.ub[inst.r1 + t] = Rational(1);
    }
    for (int w = 0; w < S; ++w) {
        int col = inst.r1 + total_w + nc1 + w;
        m.z_cols.push_back(col);
        m.sub.d[col] = inst.scenarios[w].p;
        m.sub.lb[col] = state.z_lb[w];
    }

    auto add_row = [&](const Vec& row, RowSense sense, const Rational& rhs) {
        m.sub.G.push_back(row);
        m.sub.sense.push_back(sense);
        m.rhs.push_back(rhs);
    };

    for (int i = 0; i < inst.m1; ++i) {
        Vec row(ncols);
        for (int j = 0; j < inst.n1; ++j) row[m.x_cols[j]] = inst.A1[i][j];
        add_row(row, RowSense::Ge, inst.b1[i]);
    }

    // No-good exclusions: some linking coordinate must move off the pattern.
    for (const Vec& ref : state.exclusions) {
        Vec row(ncols);
        long ones = 0;
        for (size_t k = 0; k < state.link_cols.size(); ++k) {
            int col = m.x_cols[state.link_cols[k]];
            if (ref[k].sign() > 0) {
                row[col] = Rational(-1);
                ++ones;
            } else {
                row[col] = Rational(1);
            }
        }
        add_row(row, RowSense::Ge, Rational(1 - ones));
    }

    int w_next = inst.r1;  // next free selection-binary column
    for (int w = 0; w < S; ++w) {
        const Scenario& sc = inst.scenarios[w];
        // piece(beta(x)) as a row over x: slope*b2 + const - (slope*A2)*x.
        auto piece_row = [&](const AffinePiece& piece, Vec& row, Rational& rhs) {
            rhs = piece.constant;
            for (int i = 0; i < inst.m2; ++i) rhs += piece.slope[i] * sc.b2[i];
            for (int j = 0; j < inst.n1; ++j) {
                Rational q;
                for (int i = 0; i < inst.m2; ++i) q += piece.slope[i] * sc.A2[i][j];
                row[m.x_cols[j]] += q;
            }
        };

        for (const AffinePiece& piece : state.feas[w]) {
            // piece(beta(x)) <= 0, i.e. (slope*A2)x >= slope*b2 + const.
            Vec row(ncols);
            Rational rhs;
            piece_row(piece, row, rhs);
            add_row(row, RowSense::Ge, rhs);
        }

        for (const ScenarioCut& cut : state.pool[w]) {
            if (const LinearCut* lin = std::get_if<LinearCut>(&cut)) {
                Vec row(ncols);
                Rational rhs;
                piece_row(lin->piece, row, rhs);
                row[m.z_cols[w]] = Rational(1);
                add_row(row, RowSense::Ge, rhs);
            } else if (const IntegerLShapedCut* il = std::get_if<IntegerLShapedCut>(&cut)) {
                Vec row(ncols);
                Rational step = il->height - il->z_lb;
                long ones = 0;
                for (size_t k = 0; k < state.link_cols.size(); ++k) {
                    int col = m.x_cols[state.link_cols[k]];
                    if (il->x_ref[k].sign() > 0) {
                        row[col] = -step;
                        ++ones;
                    } else {
                        row[col] = step;
                    }
                }
                row[m.z_cols[w]] = Rational(1);
                add_row(row, RowSense::Ge,
                        il->z_lb + step * Rational(1 - ones));
            } else {
                const DualFnCut& dfc = std::get<DualFnCut>(cut);
                const auto& groups = dfc.fn.groups;
                if (groups.size() == 1) {
                    // Max of affine pieces: plain rows, nothing to select.
                    for (const AffinePiece& piece : groups[0]) {
                        Vec row(ncols);
                        Rational rhs;
                        piece_row(piece, row, rhs);
                        row[m.z_cols[w]] = Rational(1);
                        add_row(row, RowSense::Ge, rhs);
                    }
                    continue;
                }
                int w0 = w_next;
                w_next += static_cast<int>(groups.size());
                Vec pick(ncols);
                for (size_t g = 0; g < groups.size(); ++g) pick[w0 + g] = Rational(1);
                add_row(pick, RowSense::Eq, Rational(1));
                for (size_t g = 0; g < groups.size(); ++g) {
                    for (const AffinePiece& piece : groups[g]) {
                        Vec row(ncols);
                        Rational rhs;
                        piece_row(piece, row, rhs);
                        Rational big = piece_box_max(piece, inst, w) - state.z_lb[w];
                        if (big.sign() < 0) big = Rational(0);
                        row[m.z_cols[w]] = Rational(1);
                        row[w0 + g] = -big;
                        add_row(row, RowSense::Ge, rhs - big);
                    }
                }
            }
        }
    }
    return m;
}

std::string iteration_log_csv(const std::vector<IterLogEntry>& log) {
    std::ostringstream os;
    os << "iter,master_value,master_value_decimal,sum_z,sum_z_decimal,"
          "xi,xi_decimal,gap,gap_decimal\n";
    for (const IterLogEntry& e : log) {
        os << e.iter << ",";
        csv_pair(os, e.master_value);
        os << ",";
        csv_pair(os, e.sum_z);
        os << ",";
        csv_pair(os, e.xi);
        os << ",";
        csv_pair(os, e.gap);
        os << "\n";
    }
    return os.str();
}

std::string cut_pool_dump(const MasterState& state) {
    std::ostringstream os;
    os << "iteration " << state.iteration << "\n";
    for (size_t w = 0; w < state.pool.size(); ++w) {
        os << "scenario " << w << " (z_lb " << state.z_lb[w].str() << ")\n";
        for (const AffinePiece& piece : state.feas[w])
            os << "  farkas slope=[" << csv_vec(piece.slope) << "] const="
               << piece.constant.str() << "\n";
        for (const ScenarioCut& cut : state.pool[w]) {
            if (const LinearCut* lin = std::get_if<LinearCut>(&cut)) {
                os << "  linear slope=[" << csv_vec(lin->piece.slope) << "] const="
                   << lin->piece.constant.str() << "\n";
            } else if (const IntegerLShapedCut* il = std::get_if<IntegerLShapedCut>(&cut)) {
                os << "  ilshaped ref=[" << csv_vec(il->x_ref) << "] height="
                   << il->height.str() << " zlb=" << il->z_lb.str() << "\n";
            } else {
                const DualFnCut& dfc = std::get<DualFnCut>(cut);
                size_t pieces = 0;
                for (const auto& g : dfc.fn.groups) pieces += g.size();
                os << "  dualfn groups=" << dfc.fn.groups.size()
                   << " pieces=" << pieces << "\n";
            }
        }
    }
    for (const Vec& x : state.exclusions)
        os << "excluded x=[" << csv_vec(x) << "]\n";
    return os.str();
}

SolveResult solve_lshaped_continuous(const TwoStageInstance& inst,
                                     const BendersConfig& cfg) {
    if (inst.r2 != 0)
        throw AssumptionError("continuous method needs a purely continuous second stage");
    if (inst.d1 != inst.d2)
        throw AssumptionError("continuous method needs matching stage objectives");

    RunClock clock;
    const int S = static_cast<int>(inst.scenarios.size());
    SolveResult result;
    result.algorithm = "lshaped";

    MasterState state;
    state.pool.resize(S);
    state.feas.resize(S);
    for (int w = 0; w < S; ++w) {
        std::optional<Rational> lb = scenario_lower_bound(inst, w);
        if (!lb) {
            result.status = SolveStatus::Infeasible;
            result.objective = ExtRat::inf();
            finish_result(result, inst, clock, state);
            return result;
        }
        state.z_lb.push_back(*lb);
    }

    SubMilp stage = SubMilp::second_stage(inst);
    RowExpansion ex = RowExpansion::make(stage.sense);
    Mat exG = ex.expand_rows(stage.G);

    for (int it = 1; it <= cfg.max_iterations; ++it) {
        state.iteration = it;
        MasterSolve ms = run_master(state, inst, cfg);
        result.nodes += ms.nodes;
        result.iterations = it;
        if (ms.status != SolveStatus::Optimal) {
            result.status = SolveStatus::Infeasible;
            result.objective = ExtRat::inf();
            finish_result(result, inst, clock, state);
            return result;
        }
        if (!state.bound_trace.empty() && ms.value < state.bound_trace.back())
            throw Error("master bound decreased; a pooled cut is invalid");
        state.bound_trace.push_back(ms.value);

        std::vector<LpResult> subs(S);
        std::vector<std::exception_ptr> errs(S);
#pragma omp parallel for schedule(dynamic) num_threads(worker_count())
        for (int w = 0; w < S; ++w) {
            try {
                LpProblem lp;
                lp.d = stage.d;
                lp.G = exG;
                lp.beta = ex.expand_rhs(inst.beta(w, ms.x));
                lp.lower = stage.lb;
                lp.upper = stage.ub;
                subs[w] = solve_lp(lp, cfg.bnb.lp);
            } catch (...) {
                errs[w] = std::current_exception();
            }
        }
        for (const std::exception_ptr& e : errs)
            if (e) std::rethrow_exception(e);

        bool all_feasible = true;
        bool converged = true;
        Rational xi_total;
        Rational sum_z;
        for (int w = 0; w < S; ++w) sum_z += inst.scenarios[w].p * ms.z[w];
        for (int w = 0; w < S; ++w) {
            switch (subs[w].status) {
            case LpStatus::Optimal: {
                xi_total += inst.scenarios[w].p * subs[w].value;
                if (ms.z[w] != subs[w].value) {
                    converged = false;
                    state.pool[w].push_back(
                        LinearCut{fold_cert(subs[w].cert, ex, stage.lb, stage.ub)});
                }
                break;
            }
            case LpStatus::Infeasible: {
                all_feasible = false;
                converged = false;
                state.feas[w].push_back(fold_cert(subs[w].cert, ex, stage.lb, stage.ub));
                break;
            }
            case LpStatus::Unbounded:
                throw UnboundedError("second stage unbounded below at an iterate");
            }
        }

        IterLogEntry entry;
        entry.iter = it;
        entry.master_value = ms.value;
        entry.sum_z = sum_z;
        entry.xi = all_feasible ? ExtRat(xi_total) : ExtRat::inf();
        if (all_feasible) {
            ExtRat total(dot(inst.c, ms.x) + xi_total);
            if (total < state.incumbent) {
                state.incumbent = total;
                state.incumbent_x = ms.x;
            }
        }
        entry.gap = state.incumbent.finite()
                        ? ExtRat(state.incumbent.value() - ms.value)
                        : ExtRat::inf();
        result.iter_log.push_back(entry);

        if (converged) {
            result.status = SolveStatus::Optimal;
            result.objective = ExtRat(ms.value);
            result.x = ms.x;
            result.final_z = ms.z;
            for (int w = 0; w < S; ++w) {
                result.reactions.push_back(subs[w].y);
                result.final_sub.push_back(subs[w].value);
            }
            finish_result(result, inst, clock, state);
            return result;
        }
    }

    result.status = SolveStatus::IterLimit;
    result.objective = state.incumbent;
    result.x = state.incumbent_x;
    finish_result(result, inst, clock, state);
    return result;
}

SolveResult solve_generalized_benders(const TwoStageInstance& inst,
                                      const BendersConfig& cfg) {
    const bool equal = inst.d1 == inst.d2;

    // With matching objectives the linking columns are expanded to binaries
    // here, so that an infeasible iterate can always be excluded exactly.
    // With differing objectives the integer L-shaped cuts need the expansion
    // anyway, and the caller chooses it.
    TwoStageInstance work = equal ? binarize_linking(inst) : inst;
    const int S = static_cast<int>(work.scenarios.size());

    RunClock clock;
    SolveResult result;
    result.algorithm = "benders";

    MasterState state;
    state.pool.resize(S);
    state.feas.resize(S);
    state.link_cols = work.linking_columns();
    for (int j : state.link_cols)
        if (!(work.x_lb[j] && work.x_ub[j] && *work.x_lb[j] == Rational(0) &&
              *work.x_ub[j] == Rational(1)))
            throw AssumptionError(
                "differing stage objectives need binary linking columns; expand "
                "integer columns first");
    for (int w = 0; w < S; ++w) {
        std::optional<Rational> lb = scenario_lower_bound(work, w);
        if (!lb) {
            result.status = SolveStatus::Infeasible;
            result.objective = ExtRat::inf();
            finish_result(result, work, clock, state);
            return result;
        }
        state.z_lb.push_back(*lb);
    }

    std::vector<BnbTree> trees;
    if (equal) {
        SubMilp stage = SubMilp::second_stage(work);
        for (int w = 0; w < S; ++w) trees.emplace_back(stage);
    }

    for (int it = 1; it <= cfg.max_iterations; ++it) {
        state.iteration = it;
        MasterSolve ms = run_master(state, work, cfg);
        result.nodes += ms.nodes;
        result.iterations = it;
        if (ms.status != SolveStatus::Optimal) {
            result.status = SolveStatus::Infeasible;
            result.objective = ExtRat::inf();
            finish_result(result, work, clock, state);
            return result;
        }
        if (!state.bound_trace.empty() && ms.value < state.bound_trace.back())
            throw Error("master bound decreased; a pooled cut is invalid");
        state.bound_trace.push_back(ms.value);

        std::vector<ExtRat> val(S, ExtRat::inf());
        Mat ys(S);
        std::vector<std::exception_ptr> errs(S);
#pragma omp parallel for schedule(dynamic) num_threads(worker_count())
        for (int w = 0; w < S; ++w) {
            try {
                if (equal) {
                    RefineResult rr = trees[w].refine(work.beta(w, ms.x), cfg.bnb);
                    if (rr.status == SolveStatus::Optimal) {
                        val[w] = rr.value;
                        ys[w] = rr.y;
                    }
                } else {
                    RiskValue rv =
                        eval_xi_omega(work, w, ms.x, RiskMode::Optimistic, cfg.bnb);
                    if (rv.value.finite()) {
                        val[w] = rv.value;
                        ys[w] = rv.y;
                    }
                }
            } catch (...) {
                errs[w] = std::current_exception();
            }
        }
        for (const std::exception_ptr& e : errs)
            if (e) std::rethrow_exception(e);

        bool all_finite = true;
        bool converged = true;
        Rational xi_total;
        Rational sum_z;
        for (int w = 0; w < S; ++w) {
            sum_z += work.scenarios[w].p * ms.z[w];
            if (!val[w].finite()) {
                all_finite = false;
                converged = false;
            } else {
                xi_total += work.scenarios[w].p * val[w].value();
                if (ms.z[w] != val[w].value()) converged = false;
            }
        }

        if (all_finite) {
            ExtRat total(dot(work.c, ms.x) + xi_total);
            if (total < state.incumbent) {
                state.incumbent = total;
                state.incumbent_x = ms.x;
            }
        }

        IterLogEntry entry;
        entry.iter = it;
        entry.master_value = ms.value;
        entry.sum_z = sum_z;
        entry.xi = all_finite ? ExtRat(xi_total) : ExtRat::inf();
        entry.gap = state.incumbent.finite()
                        ? ExtRat(state.incumbent.value() - ms.value)
                        : ExtRat::inf();
        result.iter_log.push_back(entry);

        if (converged) {
            result.status = SolveStatus::Optimal;
            result.objective = ExtRat(ms.value);
            result.x = ms.x;
            result.final_z = ms.z;
            for (int w = 0; w < S; ++w) {
                result.reactions.push_back(ys[w]);
                result.final_sub.push_back(val[w].value());
            }
            finish_result(result, work, clock, state);
            return result;
        }

        for (int w = 0; w < S; ++w) {
            if (equal) {
                state.pool[w] = {DualFnCut{
                    extract_dual_function(trees[w], DualFnMode::PathStrengthenedMin)}};
            } else if (val[w].finite() && ms.z[w] != val[w].value()) {
                Vec ref;
                for (int j : state.link_cols) ref.push_back(ms.x[j]);
                state.pool[w].push_back(ScenarioCut{
                    make_integer_lshaped_cut(ref, val[w].value(), state.z_lb[w])});
            }
        }
        if (!all_finite) {
            Vec ref;
            for (int j : state.link_cols) ref.push_back(ms.x[j]);
            if (std::find(state.exclusions.begin(), state.exclusions.end(), ref) ==
                state.exclusions.end())
                state.exclusions.push_back(ref);
        }
    }

    result.status = SolveStatus::IterLimit;
    result.objective = state.incumbent;
    result.x = state.incumbent_x;
    finish_result(result, work, clock, state);
    return result;
}

} // namespace msmilp
