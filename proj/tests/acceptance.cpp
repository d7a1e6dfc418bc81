// Acceptance gate: one line per criterion, exact rational comparisons
// throughout, wall-clock budget enforced per criterion. Exit code is the
// number of failed criteria.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>

#include "msmilp/benders.hpp"
#include "msmilp/bnc.hpp"
#include "msmilp/errors.hpp"
#include "msmilp/oracle.hpp"
#include "msmilp/ratlp.hpp"
#include "msmilp/valfun.hpp"

using namespace msmilp;

namespace {

std::string data_path(const char* name) {
    return std::string(MSMILP_DATA_DIR) + "/" + name;
}

struct Criterion {
    std::string name;
    double limit_seconds;
    bool ok = true;
    std::string detail;

    void expect(bool cond, const std::string& what) {
        if (!cond && detail.empty()) detail = what;
        ok = ok && cond;
    }
};

int run_cli(const std::string& args, std::string& output) {
    std::string capture = "/tmp/msmilp_acceptance_capture.txt";
    std::string cmd =
        std::string(MSMILP_CLI_PATH) + " " + args + " > " + capture + " 2>&1";
    int raw = std::system(cmd.c_str());
    std::ifstream is(capture, std::ios::binary);
    std::ostringstream os;
    os << is.rdbuf();
    output = os.str();
    return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
}

std::vector<std::vector<std::string>> parse_csv(const std::string& path) {
    std::vector<std::vector<std::string>> rows;
    std::ifstream is(path);
    std::string line;
    while (std::getline(is, line)) {
        std::vector<std::string> cells;
        std::istringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) cells.push_back(cell);
        rows.push_back(cells);
    }
    return rows;
}

// Canonical second-stage LP of an instance at one right-hand side, with the
// dual certificate folded back onto the original rows.
Vec lp_row_duals(const TwoStageInstance& inst, const Vec& beta, Rational& value) {
    RowExpansion ex = RowExpansion::make(inst.sense2);
    LpProblem lp;
    lp.d = inst.d2;
    lp.G = ex.expand_rows(inst.G2);
    lp.beta = ex.expand_rhs(beta);
    lp.lower = inst.y_lb;
    lp.upper = inst.y_ub;
    LpResult res = solve_lp(lp);
    if (res.status != LpStatus::Optimal) throw Error("second-stage LP not optimal");
    value = res.value;
    return ex.fold(res.cert.v);
}

// ---- criterion bodies -----------------------------------------------------

void criterion_lp_value_function(Criterion& c) {
    TwoStageInstance inst = load_instance(data_path("ex1_recourse_lp.json"));

    Rational v2, v7;
    Vec dual2 = lp_row_duals(inst, {Rational(2)}, v2);
    c.expect(dual2 == Vec{Rational(3)}, "dual at rhs 2 is " + vec_str(dual2));
    c.expect(v2 == Rational(6), "value at rhs 2 is " + v2.str());
    Vec dual7 = lp_row_duals(inst, {Rational(-7)}, v7);
    c.expect(dual7 == Vec{Rational(-1)}, "dual at rhs -7 is " + vec_str(dual7));
    c.expect(v7 == Rational(7), "value at rhs -7 is " + v7.str());

    std::string out;
    int code = run_cli("vf sample " + data_path("ex1_recourse_lp.json") +
                           " --from -10 --to 10 --step 1 --out /tmp/acc_vf1",
                       out);
    c.expect(code == 0, "vf sample exited " + std::to_string(code));
    auto rows = parse_csv("/tmp/acc_vf1_vf.csv");
    c.expect(rows.size() == 22, "expected 21 sampled rows plus header");
    for (size_t i = 1; i < rows.size(); ++i) {
        Rational beta = Rational::parse(rows[i][0]);
        Rational expected = std::max(beta * Rational(3), -beta);
        c.expect(rows[i][2] == expected.str(),
                 "phi(" + beta.str() + ") sampled as " + rows[i][2]);
        c.expect(rows[i][4] == expected.str(),
                 "phi_C(" + beta.str() + ") sampled as " + rows[i][4]);
    }
}

void criterion_milp_value_function(Criterion& c) {
    TwoStageInstance inst = load_instance(data_path("ex2_mixed_recourse.json"));
    SubMilp sub = SubMilp::second_stage(inst);
    c.expect(eval_phi(sub, {Rational(5)}) == ExtRat(Rational(4)), "phi(5) != 4");
    c.expect(eval_phi(sub, {Rational(19, 2)}) == ExtRat(Rational(17, 2)),
             "phi(19/2) != 17/2");
    c.expect(oracle_phi(sub, {Rational(5)}) == ExtRat(Rational(4)),
             "reference phi(5) != 4");
    c.expect(oracle_phi(sub, {Rational(19, 2)}) == ExtRat(Rational(17, 2)),
             "reference phi(19/2) != 17/2");
}

void criterion_tree_dual_functions(Criterion& c) {
    TwoStageInstance inst = load_instance(data_path("ex2_mixed_recourse.json"));
    BnbTree tree(SubMilp::second_stage(inst));
    RefineResult first = tree.refine({Rational(7, 2)});
    c.expect(first.status == SolveStatus::Optimal, "first solve not optimal");

    DualFunction fn = extract_dual_function(tree, DualFnMode::LeafMin);
    std::vector<AffinePiece> pieces;
    for (const auto& group : fn.groups)
        pieces.insert(pieces.end(), group.begin(), group.end());
    std::vector<AffinePiece> expected = {
        {{Rational(1)}, Rational(0)}, {{Rational(-3, 2)}, Rational(23, 2)}};
    c.expect(pieces == expected, "first tree pieces differ");
    c.expect(eval_dual_function(fn, {Rational(19, 2)}) == ExtRat(Rational(-11, 4)),
             "first tree value at 19/2 != -11/4");

    RefineResult second = tree.refine({Rational(19, 2)});
    c.expect(second.value == ExtRat(Rational(17, 2)), "refined value != 17/2");
    DualFunction path = extract_dual_function(tree, DualFnMode::PathStrengthenedMin);
    c.expect(eval_dual_function(path, {Rational(19, 2)}) == ExtRat(Rational(17, 2)),
             "refined function not exact at 19/2");
    c.expect(eval_dual_function(path, {Rational(7, 2)}) == ExtRat(Rational(7, 2)),
             "refined function lost exactness at 7/2");
}

void criterion_bilevel_bnc(Criterion& c) {
    TwoStageInstance inst = load_instance(data_path("ex4_maxmin_interdiction.json"));
    const Vec vertex = {Rational(1), Rational(3)};

    // The paper-walk vertex attains the relaxation optimum.
    RowExpansion ex = RowExpansion::make(inst.sense2);
    LpProblem lp;
    lp.d = {inst.c[0], inst.scenarios[0].p * inst.d1[0]};
    Mat joint;
    for (int i = 0; i < inst.m2; ++i)
        joint.push_back({inst.scenarios[0].A2[i][0], inst.G2[i][0]});
    lp.G = ex.expand_rows(joint);
    lp.beta = ex.expand_rhs(inst.scenarios[0].b2);
    lp.lower = {inst.x_lb[0], inst.y_lb[0]};
    lp.upper = {inst.x_ub[0], inst.y_ub[0]};
    LpResult res = solve_lp(lp);
    c.expect(res.status == LpStatus::Optimal, "joint relaxation not optimal");
    c.expect(res.value == dot(lp.d, vertex), "vertex (1,3) misses the LP optimum");
    for (size_t i = 0; i < lp.G.size(); ++i)
        c.expect(dot(lp.G[i], vertex) >= lp.beta[i], "vertex (1,3) violates a row");

    BilevelCheck chk = check_bilevel_feasible(inst, {vertex[0]}, {{vertex[1]}});
    c.expect(!chk.feasible, "vertex (1,3) not flagged infeasible");

    BncNode root;
    root.lb = {inst.x_lb[0], inst.y_lb[0]};
    root.ub = {inst.x_ub[0], inst.y_ub[0]};
    BncCut cut = generate_nogood_cut(inst, root, {vertex[0]}, {{vertex[1]}}, 0);
    c.expect(dot(cut.coef, vertex) == cut.rhs + Rational(1),
             "cut does not separate (1,3) by one unit");
    Mat keep = {{Rational(0), Rational(2)},
                {Rational(1), Rational(0)},
                {Rational(2), Rational(3)}};
    for (const Vec& p : keep)
        c.expect(dot(cut.coef, p) <= cut.rhs, "cut removes " + vec_str(p));

    SolveResult r = solve_bilevel_bnc(inst);
    c.expect(r.status == SolveStatus::Optimal, "search did not finish optimal");
    c.expect(r.x == Vec{Rational(2)}, "optimum x != 2");
    c.expect(r.reactions == Mat{{Rational(3)}}, "optimum reaction != 3");
    c.expect(r.objective_reported == ExtRat(Rational(3)), "reported value != 3");
}

void criterion_generalized_benders(Criterion& c) {
    TwoStageInstance inst = load_instance(data_path("ex2_mixed_recourse.json"));
    SolveResult r = solve_generalized_benders(inst);
    c.expect(r.status == SolveStatus::Optimal, "decomposition did not terminate");
    c.expect(!r.final_z.empty() && r.final_z == r.final_sub,
             "termination lacks per-scenario equality");
    for (size_t i = 1; i < r.bound_trace.size(); ++i)
        c.expect(r.bound_trace[i - 1] <= r.bound_trace[i], "bound trace decreased");
    OracleReport ref = oracle_solve(inst, RiskMode::Optimistic);
    c.expect(ref.status == SolveStatus::Optimal, "reference sweep failed");
    c.expect(r.objective == ExtRat(ref.value),
             "objective " + r.objective.str() + " != reference " + ref.value.str());
}

void criterion_property_suites(Criterion& c) {
    // Weak duality of extracted dual functions against the reference value.
    {
        RandomDims dims;
        for (unsigned long seed = 1; seed <= 50; ++seed) {
            TwoStageInstance inst = random_instance(seed, dims);
            SubMilp sub = SubMilp::second_stage(inst);
            BnbTree tree(sub);
            tree.refine(inst.scenarios[0].b2);
            for (DualFnMode mode :
                 {DualFnMode::LeafMin, DualFnMode::PathStrengthenedMin}) {
                DualFunction fn = extract_dual_function(tree, mode);
                for (int t = -12; t <= 12; ++t) {
                    Vec beta = inst.scenarios[0].b2;
                    for (Rational& b : beta) b += Rational(t, 2);
                    c.expect(eval_dual_function(fn, beta) <= oracle_phi(sub, beta),
                             "dual function above phi, seed " + std::to_string(seed));
                }
            }
        }
    }

    // Sandwich: lower envelope <= phi <= upper envelope, tight where anchored.
    {
        TwoStageInstance inst = load_instance(data_path("ex2_mixed_recourse.json"));
        SubMilp sub = SubMilp::second_stage(inst);
        ValueFunctionApprox approx;
        BnbTree tree(sub);
        for (const Rational& b : {Rational(7, 2), Rational(19, 2)}) {
            RefineResult r = tree.refine({b});
            approx.upper.push_back(make_ifvf(sub, r.y));
            approx.strong_points.push_back({{b}, r.value.value()});
        }
        approx.lower.push_back(
            extract_dual_function(tree, DualFnMode::PathStrengthenedMin));
        for (const StrongPoint& sp : approx.strong_points) {
            SandwichBounds sb = sandwich_eval(sub, approx, sp.beta);
            c.expect(sb.lo == ExtRat(sp.value) && sb.hi == ExtRat(sp.value),
                     "sandwich not tight at a strong point");
        }
        for (long q = -8; q <= 48; ++q) {
            Vec beta = {Rational(q, 4)};
            SandwichBounds sb = sandwich_eval(sub, approx, beta);
            ExtRat truth = eval_phi(sub, beta);
            c.expect(sb.lo <= truth && truth <= sb.hi, "sandwich bracket broken");
        }
    }

    // Subadditivity and monotonicity on inequality-form instances, both for
    // the full value (pairs where all three values are finite) and for the
    // continuous restriction, which is sublinear outright.
    {
        TwoStageInstance inst = load_instance(data_path("ex2_mixed_recourse.json"));
        SubMilp sub = SubMilp::second_stage(inst);
        sub.sense[0] = RowSense::Ge;
        std::vector<Rational> grid;
        for (long b = -4; b <= 10; b += 2) grid.push_back(Rational(b));
        for (const Rational& a : grid) {
            ExtRat fa = eval_phi_C(sub, {a});
            c.expect(fa.finite(), "continuous restriction infeasible on grid");
            if (!fa.finite()) continue;
            c.expect(eval_phi_C(sub, {a * Rational(3)}) ==
                         ExtRat(fa.value() * Rational(3)),
                     "positive homogeneity broken");
            for (const Rational& b : grid) {
                ExtRat fb = eval_phi_C(sub, {b});
                ExtRat fab = eval_phi_C(sub, {a + b});
                if (fb.finite())
                    c.expect(fab <= ExtRat(fa.value() + fb.value()),
                             "subadditivity of the restriction broken");
                ExtRat pa = eval_phi(sub, {a});
                ExtRat pb = eval_phi(sub, {b});
                ExtRat pab = eval_phi(sub, {a + b});
                if (pa.finite() && pb.finite() && pab.finite())
                    c.expect(pab <= ExtRat(pa.value() + pb.value()),
                             "subadditivity of the value broken");
                if (a <= b)
                    c.expect(pa <= pb, "monotonicity broken");
            }
        }

        // Random inequality-form instances. The continuous columns are made
        // conic (zero lower bound, open top, nonnegative cost) so their
        // restriction is genuinely sublinear; the full value stays monotone
        // regardless of the integer boxes.
        RandomDims dims;
        for (unsigned long seed = 1; seed <= 10; ++seed) {
            TwoStageInstance rnd = random_instance(seed, dims);
            for (RowSense& s : rnd.sense2) s = RowSense::Ge;
            for (int j = rnd.r2; j < rnd.n2; ++j) {
                rnd.y_lb[j] = Rational(0);
                rnd.y_ub[j] = std::nullopt;
                if (rnd.d2[j] < Rational(0)) rnd.d2[j] = -rnd.d2[j];
            }
            SubMilp rsub = SubMilp::second_stage(rnd);
            std::vector<Vec> betas;
            for (int t = -2; t <= 2; ++t) {
                Vec beta = rnd.scenarios[0].b2;
                for (Rational& v : beta) v += Rational(t);
                betas.push_back(beta);
            }
            for (size_t i = 0; i < betas.size(); ++i) {
                ExtRat fa = eval_phi_C(rsub, betas[i]);
                Vec tripled = betas[i];
                for (Rational& v : tripled) v *= Rational(3);
                ExtRat fa3 = eval_phi_C(rsub, tripled);
                if (fa.finite())
                    c.expect(fa3 == ExtRat(fa.value() * Rational(3)),
                             "random homogeneity broken, seed " +
                                 std::to_string(seed));
                else
                    c.expect(!fa3.finite(), "random homogeneity broken, seed " +
                                                std::to_string(seed));
                for (size_t k = 0; k < betas.size(); ++k) {
                    ExtRat fb = eval_phi_C(rsub, betas[k]);
                    Vec sum = betas[i];
                    for (size_t q = 0; q < sum.size(); ++q) sum[q] += betas[k][q];
                    if (fa.finite() && fb.finite())
                        c.expect(eval_phi_C(rsub, sum) <=
                                     ExtRat(fa.value() + fb.value()),
                                 "random subadditivity broken, seed " +
                                     std::to_string(seed));
                    if (i <= k)
                        c.expect(eval_phi(rsub, betas[i]) <=
                                     eval_phi(rsub, betas[k]),
                                 "random monotonicity broken, seed " +
                                     std::to_string(seed));
                }
            }
        }
    }

    // Cross-method agreement on the pure-integer zero-sum subset.
    {
        RandomDims dims;
        dims.zero_sum = true;
        for (unsigned long seed = 1; seed <= 100; ++seed) {
            TwoStageInstance inst = random_instance(seed, dims);
            inst.r2 = inst.n2;
            OracleReport ref = oracle_solve(inst, RiskMode::Optimistic);
            SolveResult cut = solve_bilevel_bnc(inst);
            SolveResult dec = solve_generalized_benders(inst);
            c.expect(cut.status == ref.status && dec.status == ref.status,
                     "status mismatch at seed " + std::to_string(seed));
            if (ref.status == SolveStatus::Optimal) {
                c.expect(cut.objective == ExtRat(ref.value) &&
                             dec.objective == ExtRat(ref.value),
                         "optimum mismatch at seed " + std::to_string(seed));
            }
        }
    }

    // Cut audits: branch-and-cut separations keep every follower-optimal
    // lattice point; integer no-good optimality cuts stay below the true
    // per-scenario recourse everywhere.
    {
        RandomDims dims;
        dims.n1 = 1;
        dims.n2 = 1;
        dims.scenarios = 1;
        dims.zero_sum = true;
        for (unsigned long seed = 1; seed <= 50; ++seed) {
            TwoStageInstance inst = random_instance(seed, dims);
            inst.r2 = inst.n2;
            SubMilp stage = SubMilp::second_stage(inst);
            BncNode root;
            root.lb = {inst.x_lb[0], inst.y_lb[0]};
            root.ub = {inst.x_ub[0], inst.y_ub[0]};
            Mat optimal;
            Mat cuts;
            for (Rational x = *inst.x_lb[0]; x <= *inst.x_ub[0]; x += 1) {
                ExtRat phi = ExtRat::inf();
                MilpResult m = solve_milp(stage, inst.beta(0, {x}));
                if (m.status == SolveStatus::Optimal) phi = m.value;
                for (Rational y = *inst.y_lb[0]; y <= *inst.y_ub[0]; y += 1) {
                    bool inside = true;
                    for (int i = 0; i < inst.m2; ++i) {
                        Rational lhs = inst.scenarios[0].A2[i][0] * x +
                                       inst.G2[i][0] * y;
                        if (inst.sense2[i] == RowSense::Ge ? lhs < inst.scenarios[0].b2[i]
                                                           : lhs != inst.scenarios[0].b2[i])
                            inside = false;
                    }
                    for (int i = 0; i < inst.m1; ++i)
                        if (inst.A1[i][0] * x < inst.b1[i]) inside = false;
                    if (!inside) continue;
                    if (ExtRat(inst.d2[0] * y) == phi) {
                        optimal.push_back({x, y});
                    } else {
                        try {
                            BncCut cut = generate_nogood_cut(inst, root, {x}, {{y}}, 0);
                            cuts.push_back({cut.coef[0], cut.coef[1], cut.rhs});
                        } catch (const DegenerateVertexError&) {
                        }
                    }
                }
            }
            for (const Vec& f : cuts)
                for (const Vec& p : optimal)
                    c.expect(f[0] * p[0] + f[1] * p[1] <= f[2],
                             "bnc cut removes a point, seed " + std::to_string(seed));
        }

        RandomDims bdims;
        bdims.zero_sum = true;
        for (unsigned long seed = 1; seed <= 20; ++seed) {
            TwoStageInstance inst = random_instance(seed, bdims);
            const int S = static_cast<int>(inst.scenarios.size());
            const long points = 1L << inst.n1;
            for (int w = 0; w < S; ++w) {
                std::vector<ExtRat> xi(points);
                ExtRat lb = ExtRat::inf();
                for (long mask = 0; mask < points; ++mask) {
                    Vec x(inst.n1);
                    for (int j = 0; j < inst.n1; ++j)
                        x[j] = Rational((mask >> j) & 1);
                    xi[mask] = eval_xi_omega(inst, w, x, RiskMode::Optimistic).value;
                    if (xi[mask] < lb) lb = xi[mask];
                }
                if (!lb.finite()) continue;
                for (long mask = 0; mask < points; ++mask) {
                    if (!xi[mask].finite()) continue;
                    Vec ref(inst.n1);
                    for (int j = 0; j < inst.n1; ++j)
                        ref[j] = Rational((mask >> j) & 1);
                    IntegerLShapedCut ils = make_integer_lshaped_cut(
                        ref, xi[mask].value(), lb.value());
                    for (long other = 0; other < points; ++other) {
                        if (!xi[other].finite()) continue;
                        Vec p(inst.n1);
                        for (int j = 0; j < inst.n1; ++j)
                            p[j] = Rational((other >> j) & 1);
                        c.expect(ExtRat(ils.bound_at(p)) <= xi[other],
                                 "optimality cut above recourse, seed " +
                                     std::to_string(seed));
                    }
                }
            }
        }
    }
}

} // namespace

int main() {
    struct Entry {
        std::string name;
        double limit;
        void (*body)(Criterion&);
    };
    const std::vector<Entry> entries = {
        {"1 two-slope LP duals and sampled value function", 1.0,
         criterion_lp_value_function},
        {"2 mixed-integer value function at known points", 5.0,
         criterion_milp_value_function},
        {"3 tree dual functions: pieces, dip, refinement", 5.0,
         criterion_tree_dual_functions},
        {"4 bilevel branch-and-cut walk and optimum", 5.0, criterion_bilevel_bnc},
        {"5 generalized decomposition matches the reference", 60.0,
         criterion_generalized_benders},
        {"6 property suites: duality, sandwich, agreement, audits", 600.0,
         criterion_property_suites},
    };

    int failures = 0;
    for (const Entry& e : entries) {
        Criterion c{e.name, e.limit};
        auto t0 = std::chrono::steady_clock::now();
        try {
            e.body(c);
        } catch (const std::exception& ex) {
            c.expect(false, std::string("exception: ") + ex.what());
        }
        double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
                .count();
        bool in_time = secs < e.limit;
        bool pass = c.ok && in_time;
        std::printf("[%s] %s (%.2fs, limit %.0fs)\n", pass ? "PASS" : "FAIL",
                    e.name.c_str(), secs, e.limit);
        if (!c.ok) std::printf("       first failure: %s\n", c.detail.c_str());
        if (c.ok && !in_time) std::printf("       over time budget\n");
        failures += !pass;
    }
    std::printf("%d of %zu criteria passed\n",
                static_cast<int>(entries.size()) - failures, entries.size());
    return failures;
}
