#include <doctest.h>

#include "msmilp/oracle.hpp"
#include "msmilp/valfun.hpp"

using namespace msmilp;

namespace {

std::string data_path(const char* name) {
    return std::string(MSMILP_DATA_DIR) + "/" + name;
}

TwoStageInstance tie_instance() {
    TwoStageInstance inst;
    inst.n1 = 1; inst.r1 = 1; inst.m1 = 0;
    inst.c = {Rational(0)};
    inst.x_lb = {Rational(0)};
    inst.x_ub = {Rational(1)};
    inst.n2 = 2; inst.r2 = 0; inst.m2 = 1;
    inst.d1 = {Rational(1), Rational(2)};
    inst.d2 = {Rational(1), Rational(1)};
    inst.G2 = {{Rational(1), Rational(1)}};
    inst.sense2 = {RowSense::Ge};
    inst.y_lb = {Rational(0), Rational(0)};
    inst.y_ub = {Rational(3), Rational(3)};
    inst.scenarios.push_back({Rational(1), {{Rational(0)}}, {Rational(3)}});
    validate_instance(inst);
    return inst;
}

} // namespace

TEST_CASE("lattice sweep value matches the tree solver") {
    SubMilp sub = SubMilp::second_stage(load_instance(data_path("ex2_mixed_recourse.json")));

    CHECK(oracle_phi(sub, {Rational(5)}) == ExtRat(Rational(4)));
    CHECK(oracle_phi(sub, {Rational(19, 2)}) == ExtRat(Rational(17, 2)));

    for (long h = -12; h <= 26; ++h) {
        Vec beta = {Rational(h, 2)};
        CHECK(oracle_phi(sub, beta) == eval_phi(sub, beta));
    }
}

TEST_CASE("sweep reports infeasible right-hand sides as infinite") {
    SubMilp stair;
    stair.d = {Rational(1)};
    stair.G = {{Rational(1)}};
    stair.sense = {RowSense::Ge};
    stair.r = 1;
    stair.lb = {Rational(0)};
    stair.ub = {Rational(5)};

    CHECK(oracle_phi(stair, {Rational(6)}) == ExtRat::inf());
    CHECK(oracle_phi(stair, {Rational(4)}) == ExtRat(Rational(4)));
    CHECK_THROWS_AS(oracle_phi(stair, {Rational(1)}, 3), CapExceeded);
}

TEST_CASE("reference reaction agrees with the level-set solver") {
    TwoStageInstance ties = tie_instance();
    RiskValue opt = oracle_rho(ties, {Rational(3)}, RiskMode::Optimistic);
    CHECK(opt.phi == ExtRat(Rational(3)));
    CHECK(opt.value == ExtRat(Rational(3)));
    CHECK(opt.y == Vec{Rational(3), Rational(0)});
    RiskValue pes = oracle_rho(ties, {Rational(3)}, RiskMode::Pessimistic);
    CHECK(pes.value == ExtRat(Rational(6)));
    CHECK(pes.y == Vec{Rational(0), Rational(3)});

    for (unsigned long seed = 1; seed <= 25; ++seed) {
        TwoStageInstance inst = random_instance(seed);
        for (long b = -3; b <= 3; b += 3) {
            Vec beta(inst.m2, Rational(b));
            for (RiskMode mode : {RiskMode::Optimistic, RiskMode::Pessimistic}) {
                RiskValue ref = oracle_rho(inst, beta, mode);
                RiskValue got = eval_rho(inst, beta, mode);
                CHECK(ref.phi == got.phi);
                CHECK(ref.value == got.value);
                if (ref.phi.finite()) {
                    // Any reported reaction must sit on the follower's level set.
                    CHECK(dot(inst.d2, got.y) == ref.phi.value());
                    CHECK(dot(inst.d1, got.y) == ref.value.value());
                }
            }
        }
    }
}

TEST_CASE("exhaustive solve reproduces the interdiction game") {
    TwoStageInstance inst = load_instance(data_path("ex4_maxmin_interdiction.json"));
    OracleReport rep = oracle_solve(inst, RiskMode::Optimistic);

    REQUIRE(rep.status == SolveStatus::Optimal);
    CHECK(rep.x == Vec{Rational(2)});
    CHECK(rep.value == ExtRat(Rational(-3)));  // leader maximizes, canonical form minimizes
    REQUIRE(rep.reactions.size() == 1);
    CHECK(rep.reactions[0] == Vec{Rational(3)});

    // The recourse-feasible first-stage points, with their reactions.
    REQUIRE(rep.feasible_x.size() == 3);
    CHECK(rep.feasible_x[0] == Vec{Rational(0)});
    CHECK(rep.feasible_x[1] == Vec{Rational(1)});
    CHECK(rep.feasible_x[2] == Vec{Rational(2)});
    REQUIRE(rep.xi_table.size() == 4);
    CHECK(rep.xi_table[0].reactions[0] == Vec{Rational(2)});
    CHECK(rep.xi_table[1].reactions[0] == Vec{Rational(0)});
    CHECK(rep.xi_table[3].xi == ExtRat::inf());

    // Follower optima along the sweep.
    REQUIRE(rep.phi_table.size() == 4);
    CHECK(rep.phi_table[0].phi == ExtRat(Rational(2)));
    CHECK(rep.phi_table[1].phi == ExtRat(Rational(0)));
    CHECK(rep.phi_table[2].phi == ExtRat(Rational(3)));
    CHECK(rep.phi_table[3].phi == ExtRat::inf());
}

TEST_CASE("parallel and serial sweeps produce identical reports") {
    TwoStageInstance inst = load_instance(data_path("ex2_mixed_recourse.json"));
    OracleOptions par, ser;
    ser.parallel = false;
    OracleReport a = oracle_solve(inst, RiskMode::Optimistic, par);
    OracleReport b = oracle_solve(inst, RiskMode::Optimistic, ser);

    CHECK(a.status == b.status);
    CHECK(a.value == b.value);
    CHECK(a.x == b.x);
    CHECK(a.xi_csv() == b.xi_csv());
    CHECK(a.phi_csv() == b.phi_csv());

    // Self-consistency: the optimum is the best finite row of its own table.
    ExtRat best = ExtRat::inf();
    for (const OracleRow& row : a.xi_table) {
        if (!row.xi.finite()) continue;
        ExtRat total(dot(inst.c, row.x) + row.xi.value());
        if (total < best) best = total;
    }
    CHECK(best == a.value);

    // And the optimum agrees with the independent reaction evaluator.
    XiValue xi = eval_xi(inst, a.x, RiskMode::Optimistic);
    REQUIRE(xi.value.finite());
    CHECK(ExtRat(dot(inst.c, a.x) + xi.value.value()) == a.value);
}

TEST_CASE("first-stage rows restrict the optimum but not recourse feasibility") {
    TwoStageInstance inst = tie_instance();
    inst.m1 = 1;
    inst.A1 = {{Rational(1)}};
    inst.b1 = {Rational(1)};  // x >= 1
    validate_instance(inst);

    OracleReport rep = oracle_solve(inst, RiskMode::Optimistic);
    REQUIRE(rep.status == SolveStatus::Optimal);
    CHECK(rep.x == Vec{Rational(1)});
    // x = 0 is recourse-feasible, so it stays in the projection set.
    CHECK(rep.feasible_x.size() == 2);
    CHECK(rep.xi_table[0].xi == ExtRat(Rational(3)));
}

TEST_CASE("empty first-stage box yields an infeasible report") {
    TwoStageInstance inst = tie_instance();
    inst.x_ub[0] = Rational(-1);  // crossed box, bypassing validation on purpose

    OracleReport rep = oracle_solve(inst, RiskMode::Optimistic);
    CHECK(rep.status == SolveStatus::Infeasible);
    CHECK(rep.xi_table.empty());
    CHECK(rep.feasible_x.empty());

    TwoStageInstance cont = tie_instance();
    cont.r1 = 0;  // continuous first stage is beyond enumeration
    CHECK_THROWS_AS(oracle_solve(cont, RiskMode::Optimistic), AssumptionError);

    OracleOptions tight;
    tight.lattice_cap = 5;
    TwoStageInstance mixed = load_instance(data_path("ex2_mixed_recourse.json"));
    CHECK_THROWS_AS(oracle_solve(mixed, RiskMode::Optimistic, tight), CapExceeded);
}

TEST_CASE("generated instances are deterministic and valid") {
    for (unsigned long seed = 1; seed <= 50; ++seed) {
        TwoStageInstance a = random_instance(seed);
        TwoStageInstance b = random_instance(seed);
        CHECK(a == b);
        CHECK(a.n1 <= 4);
        CHECK(a.n2 <= 4);
        CHECK(a.scenarios.size() <= 3);
        CHECK(a.r1 == a.n1);
    }
    TwoStageInstance z = random_instance(7, {.zero_sum = true});
    for (int j = 0; j < z.n2; ++j) CHECK(z.d1[j] == -z.d2[j]);
    for (int j = 0; j < z.n1; ++j) CHECK(*z.x_ub[j] == Rational(1));
    TwoStageInstance e = random_instance(7, {.equal_objectives = true});
    CHECK(e.d1 == e.d2);
    CHECK(random_instance(7) == random_instance(7));
    // Different seeds should not collide (coefficients make this overwhelming).
    CHECK(!(random_instance(7) == random_instance(8)));
}

TEST_CASE("csv tables carry exact and decimal columns") {
    TwoStageInstance inst = tie_instance();
    OracleReport rep = oracle_solve(inst, RiskMode::Optimistic);
    std::string xi = rep.xi_csv();
    CHECK(xi.substr(0, xi.find('\n')) == "x_0,x_0_decimal,xi,xi_decimal");
    CHECK(xi.find("0,0,3,3\n") != std::string::npos);
    std::string phi = rep.phi_csv();
    CHECK(phi.substr(0, phi.find('\n')) == "scenario,beta_0,beta_0_decimal,phi,phi_decimal");
    CHECK(phi.find("0,3,3,3,3\n") != std::string::npos);
}
