#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "msmilp/benders.hpp"
#include "msmilp/bnc.hpp"
#include "msmilp/csvio.hpp"
#include "msmilp/errors.hpp"
#include "msmilp/oracle.hpp"
#include "msmilp/valfun.hpp"

using namespace msmilp;

namespace {

struct RunConfig {
    std::string instance;
    std::string algorithm = "benders";
    std::string mode = "optimistic";
    long max_iter = 200;
    long node_limit = 20000;
    long lattice_cap = 1000000;
    std::string out = "msmilp";  // output file prefix
    unsigned long seed = 1;
    long seeds = 100;
    std::string from, to, step, beta;
    std::string dual_mode = "path";
};

void write_file(const std::string& path, const std::string& text) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw Error("cannot write " + path);
    os << text;
}

RiskMode parse_mode(const RunConfig& cfg) {
    if (cfg.mode == "optimistic") return RiskMode::Optimistic;
    if (cfg.mode == "pessimistic") return RiskMode::Pessimistic;
    throw ParseError("unknown mode '" + cfg.mode + "'");
}

void print_result(const SolveResult& r) {
    switch (r.status) {
        case SolveStatus::Optimal: {
            std::cout << "status optimal\n";
            const ExtRat& v = r.objective_reported;
            std::cout << "objective " << v.str();
            if (v.finite()) std::cout << " (" << v.to_double() << ")";
            std::cout << "\n";
            std::cout << "x = " << vec_str(r.x) << "\n";
            break;
        }
        case SolveStatus::Infeasible:
            std::cout << "status infeasible\n";
            break;
        case SolveStatus::IterLimit:
            std::cout << "status iteration-limit\n";
            break;
        case SolveStatus::NodeLimitHit:
            std::cout << "status node-limit\n";
            break;
    }
}

int exit_for(SolveStatus status) {
    switch (status) {
        case SolveStatus::Optimal: return 0;
        case SolveStatus::Infeasible: return 2;
        default: return 5;
    }
}

int cmd_solve(const RunConfig& cfg) {
    if (cfg.mode == "pessimistic" && cfg.algorithm != "enumerate")
        throw ParseError("pessimistic mode is only available with --algorithm enumerate");
    RiskMode mode = parse_mode(cfg);
    TwoStageInstance inst = load_instance(cfg.instance);

    SolveResult r;
    if (cfg.algorithm == "lshaped" || cfg.algorithm == "benders") {
        BendersConfig bc;
        bc.max_iterations = cfg.max_iter;
        bc.bnb.max_nodes = cfg.node_limit;
        r = cfg.algorithm == "lshaped" ? solve_lshaped_continuous(inst, bc)
                                       : solve_generalized_benders(inst, bc);
    } else if (cfg.algorithm == "bnc") {
        BncConfig bcfg;
        bcfg.max_nodes = cfg.node_limit;
        bcfg.bnb.max_nodes = cfg.node_limit;
        r = solve_bilevel_bnc(inst, bcfg);
    } else if (cfg.algorithm == "enumerate") {
        OracleOptions opt;
        opt.lattice_cap = cfg.lattice_cap;
        OracleReport rep = oracle_solve(inst, mode, opt);
        r.algorithm = "enumerate";
        r.status = rep.status;
        r.objective = rep.value;
        r.objective_reported = inst.sense_tag.stage1_max ? -rep.value : rep.value;
        r.x = rep.x;
        r.reactions = rep.reactions;
    } else {
        throw ParseError("unknown algorithm '" + cfg.algorithm + "'");
    }

    write_file(cfg.out + "_result.json", serialize_result(r));
    if (!r.iter_log.empty())
        write_file(cfg.out + "_iterations.csv", iteration_log_csv(r.iter_log));
    if (!r.cut_log.empty())
        write_file(cfg.out + "_cuts.csv", cut_log_csv(r.cut_log));
    print_result(r);
    return exit_for(r.status);
}

int cmd_vf_sample(const RunConfig& cfg) {
    Rational from = Rational::parse(cfg.from);
    Rational to = Rational::parse(cfg.to);
    Rational step = Rational::parse(cfg.step);
    if (step.sign() <= 0) throw ParseError("--step must be positive");
    if (to < from) throw ParseError("--to must not precede --from");

    TwoStageInstance inst = load_instance(cfg.instance);
    if (inst.m2 != 1)
        throw AssumptionError("value function sampling needs a single second-stage row");
    SubMilp sub = SubMilp::second_stage(inst);

    // One tree and one frozen integer cone, anchored at the first feasible
    // grid point, bracket the sampled function from below and above.
    ValueFunctionApprox approx;
    for (Rational b = from; b <= to; b += step) {
        MilpResult m = solve_milp(sub, {b}, {cfg.node_limit});
        if (m.status != SolveStatus::Optimal) continue;
        approx.lower.push_back(
            extract_dual_function(m.tree, DualFnMode::PathStrengthenedMin));
        approx.upper.push_back(make_ifvf(sub, m.y));
        break;
    }

    std::ostringstream os;
    os << "beta,beta_decimal,phi,phi_decimal,phi_C,phi_C_decimal,"
          "phi_I,phi_I_decimal,lower,lower_decimal,upper,upper_decimal\n";
    for (Rational b = from; b <= to; b += step) {
        Vec rhs{b};
        csv_pair(os, b);
        os << ",";
        csv_pair(os, eval_phi(sub, rhs, {cfg.node_limit}));
        os << ",";
        csv_pair(os, eval_phi_C(sub, rhs));
        os << ",";
        csv_pair(os, eval_phi_I(sub, rhs, {cfg.node_limit}));
        SandwichBounds sw = sandwich_eval(sub, approx, rhs);
        os << ",";
        csv_pair(os, sw.lo);
        os << ",";
        csv_pair(os, sw.hi);
        os << "\n";
    }
    write_file(cfg.out + "_vf.csv", os.str());
    std::cout << "wrote " << cfg.out << "_vf.csv\n";
    return 0;
}

int cmd_vf_construct1d(const RunConfig& cfg) {
    TwoStageInstance inst = load_instance(cfg.instance);
    if (inst.m2 != 1)
        throw AssumptionError("closed-form construction needs a single second-stage row");
    PiecewiseVf1D vf = construct_vf_1row(SubMilp::second_stage(inst), cfg.lattice_cap);

    std::ostringstream bp;
    bp << "breakpoint,breakpoint_decimal\n";
    for (const Rational& b : vf.breakpoints) {
        csv_pair(bp, b);
        bp << "\n";
    }
    write_file(cfg.out + "_breakpoints.csv", bp.str());

    std::ostringstream seg;
    seg << "from,from_decimal,to,to_decimal,slope,slope_decimal,"
           "intercept,intercept_decimal\n";
    for (const Vf1DSegment& s : vf.segments) {
        csv_pair(seg, s.from);
        seg << ",";
        csv_pair(seg, s.to);
        seg << ",";
        csv_pair(seg, s.slope);
        seg << ",";
        csv_pair(seg, s.intercept);
        seg << "\n";
    }
    write_file(cfg.out + "_segments.csv", seg.str());
    std::cout << "wrote " << cfg.out << "_breakpoints.csv and " << cfg.out
              << "_segments.csv\n";
    return 0;
}

int cmd_vf_dualfn(const RunConfig& cfg) {
    DualFnMode mode;
    if (cfg.dual_mode == "leafmin") {
        mode = DualFnMode::LeafMin;
    } else if (cfg.dual_mode == "path") {
        mode = DualFnMode::PathStrengthenedMin;
    } else {
        throw ParseError("unknown dual function mode '" + cfg.dual_mode + "'");
    }
    Rational beta = Rational::parse(cfg.beta);
    TwoStageInstance inst = load_instance(cfg.instance);
    if (inst.m2 != 1)
        throw AssumptionError("dual function export needs a single second-stage row");
    SubMilp sub = SubMilp::second_stage(inst);
    MilpResult m = solve_milp(sub, {beta}, {cfg.node_limit});
    DualFunction fn = extract_dual_function(m.tree, mode);
    write_file(cfg.out + "_dualfn.csv", dual_function_csv(fn));

    ExtRat at = eval_dual_function(fn, {beta});
    std::cout << "value at " << beta.str() << " = " << at.str() << "\n";
    std::cout << "wrote " << cfg.out << "_dualfn.csv\n";
    return 0;
}

int cmd_oracle(const RunConfig& cfg) {
    TwoStageInstance inst = load_instance(cfg.instance);
    OracleOptions opt;
    opt.lattice_cap = cfg.lattice_cap;
    OracleReport rep = oracle_solve(inst, parse_mode(cfg), opt);
    write_file(cfg.out + "_xi.csv", rep.xi_csv());
    write_file(cfg.out + "_phi.csv", rep.phi_csv());
    if (rep.status == SolveStatus::Optimal) {
        ExtRat reported = inst.sense_tag.stage1_max ? -rep.value : rep.value;
        std::cout << "status optimal\n";
        std::cout << "objective " << reported.str() << "\n";
        std::cout << "x = " << vec_str(rep.x) << "\n";
    } else {
        std::cout << "status infeasible\n";
    }
    std::cout << "wrote " << cfg.out << "_xi.csv and " << cfg.out << "_phi.csv\n";
    return exit_for(rep.status);
}

// Deterministic agreement sweep: every solver must report the same status
// and, when solvable, the same exact optimum as the exhaustive reference.
int cmd_crosscheck(const RunConfig& cfg) {
    RandomDims dims;
    dims.zero_sum = true;
    long agree = 0;
    std::ostringstream os;
    os << "seed,status,value,value_decimal,agree\n";
    for (long k = 0; k < cfg.seeds; ++k) {
        unsigned long seed = cfg.seed + static_cast<unsigned long>(k);
        TwoStageInstance inst = random_instance(seed, dims);
        inst.r2 = inst.n2;  // the integer-only subset all three methods accept
        OracleReport ref = oracle_solve(inst, RiskMode::Optimistic);
        SolveResult cut = solve_bilevel_bnc(inst);
        SolveResult dec = solve_generalized_benders(inst);
        bool ok = cut.status == ref.status && dec.status == ref.status;
        if (ok && ref.status == SolveStatus::Optimal)
            ok = cut.objective == ExtRat(ref.value) && dec.objective == ExtRat(ref.value);
        agree += ok;
        os << seed << ","
           << (ref.status == SolveStatus::Optimal ? "optimal" : "infeasible") << ",";
        csv_pair(os, ref.value);
        os << "," << (ok ? 1 : 0) << "\n";
    }
    write_file(cfg.out + "_crosscheck.csv", os.str());
    std::cout << "agreements " << agree << "/" << cfg.seeds << "\n";
    return agree == cfg.seeds ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
    RunConfig cfg;
    CLI::App app{
        "Exact two-stage mixed integer solvers over rational arithmetic.\n"
        "MSMILP_THREADS bounds the worker count of parallel sections."};
    app.require_subcommand(1);

    CLI::App* solve = app.add_subcommand("solve", "run a solver on an instance file");
    solve->add_option("instance", cfg.instance, "instance JSON file")->required();
    solve->add_option("--algorithm", cfg.algorithm,
                      "benders | bnc | enumerate | lshaped (default benders)");
    solve->add_option("--mode", cfg.mode,
                      "optimistic | pessimistic, the latter only with enumerate");
    solve->add_option("--max-iter", cfg.max_iter, "decomposition iteration budget");
    solve->add_option("--node-limit", cfg.node_limit, "tree node budget");
    solve->add_option("--lattice-cap", cfg.lattice_cap, "enumeration size budget");
    solve->add_option("--out", cfg.out, "output file prefix (default msmilp)");

    CLI::App* vf = app.add_subcommand("vf", "value function exports");
    vf->require_subcommand(1);
    CLI::App* sample = vf->add_subcommand("sample", "tabulate the value function on a grid");
    sample->add_option("instance", cfg.instance, "instance JSON file")->required();
    sample->add_option("--from", cfg.from, "grid start (rational)")->required();
    sample->add_option("--to", cfg.to, "grid end (rational)")->required();
    sample->add_option("--step", cfg.step, "grid step (positive rational)")->required();
    sample->add_option("--node-limit", cfg.node_limit, "tree node budget");
    sample->add_option("--out", cfg.out, "output file prefix");
    CLI::App* construct = vf->add_subcommand("construct1d",
                                             "closed-form single-row value function");
    construct->add_option("instance", cfg.instance, "instance JSON file")->required();
    construct->add_option("--lattice-cap", cfg.lattice_cap, "enumeration size budget");
    construct->add_option("--out", cfg.out, "output file prefix");
    CLI::App* dualfn = vf->add_subcommand("dualfn", "dual function of one solver tree");
    dualfn->add_option("instance", cfg.instance, "instance JSON file")->required();
    dualfn->add_option("--beta", cfg.beta, "right-hand side to solve at")->required();
    dualfn->add_option("--mode", cfg.dual_mode, "leafmin | path (default path)");
    dualfn->add_option("--node-limit", cfg.node_limit, "tree node budget");
    dualfn->add_option("--out", cfg.out, "output file prefix");

    CLI::App* oracle = app.add_subcommand("oracle", "exhaustive reference sweep");
    oracle->add_option("instance", cfg.instance, "instance JSON file")->required();
    oracle->add_option("--mode", cfg.mode, "optimistic | pessimistic");
    oracle->add_option("--lattice-cap", cfg.lattice_cap, "enumeration size budget");
    oracle->add_option("--out", cfg.out, "output file prefix");

    CLI::App* cross = app.add_subcommand("crosscheck",
                                         "solver agreement sweep on random instances");
    cross->add_option("--seeds", cfg.seeds, "number of seeds (default 100)");
    cross->add_option("--seed", cfg.seed, "first seed (default 1)");
    cross->add_option("--out", cfg.out, "output file prefix");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 4;
    }

    try {
        if (solve->parsed()) return cmd_solve(cfg);
        if (sample->parsed()) return cmd_vf_sample(cfg);
        if (construct->parsed()) return cmd_vf_construct1d(cfg);
        if (dualfn->parsed()) return cmd_vf_dualfn(cfg);
        if (oracle->parsed()) return cmd_oracle(cfg);
        if (cross->parsed()) return cmd_crosscheck(cfg);
    } catch (const ParseError& e) {
        std::cerr << "parse error: " << e.what() << "\n";
        return 4;
    } catch (const AssumptionError& e) {
        std::cerr << "assumption violated: " << e.what() << "\n";
        return 3;
    } catch (const LimitError& e) {
        std::cerr << "limit hit: " << e.what() << "\n";
        return 5;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 4;
}
