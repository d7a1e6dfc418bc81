#include <doctest.h>

#include <fstream>
#include <sstream>

#include "msmilp/model.hpp"

using namespace msmilp;

namespace {
std::string data_path(const char* name) {
    return std::string(MSMILP_DATA_DIR) + "/" + name;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    REQUIRE(in.good());
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}
} // namespace

TEST_CASE("parse a minimal instance and normalize senses") {
    // max-max file with one <= row per stage; canonical form flips everything.
    std::string text = R"({
      "n1": 1, "r1": 1, "m1": 1,
      "c": [2], "A1": [[1]], "b1": [3], "row_sense_stage1": ["<="],
      "x_lb": [0], "x_ub": [3],
      "objective_sense_stage1": "max",
      "n2": 2, "r2": 1, "m2": 1,
      "d1": [1, 1], "d2": [1, "1/2"],
      "G2": [[1, 1]], "row_sense_stage2": ["<="],
      "y_lb": [0, 0], "y_ub": [4, null],
      "objective_sense_stage2": "max",
      "scenarios": [{"p": 1, "A2": [[2]], "b2": [5]}]
    })";
    TwoStageInstance inst = parse_instance(text);
    CHECK(inst.sense_tag.stage1_max);
    CHECK(inst.sense_tag.stage2_max);
    CHECK(inst.c[0] == Rational(-2));
    CHECK(inst.d1[0] == Rational(-1));
    CHECK(inst.d2[1] == Rational(-1, 2));
    // <= rows negated into >= form.
    CHECK(inst.A1[0][0] == Rational(-1));
    CHECK(inst.b1[0] == Rational(-3));
    CHECK(inst.G2[0][0] == Rational(-1));
    CHECK(inst.scenarios[0].A2[0][0] == Rational(-2));
    CHECK(inst.scenarios[0].b2[0] == Rational(-5));
    CHECK(inst.sense2[0] == RowSense::Ge);
    CHECK(!inst.y_ub[1].has_value());
    Vec beta = inst.beta(0, {Rational(1)});
    CHECK(beta[0] == Rational(-3));
    CHECK(inst.linking_columns() == std::vector<int>{0});
}

TEST_CASE("stage-1 equality rows expand to >= pairs; stage-2 keeps an Eq mark") {
    std::string text = R"({
      "n1": 1, "r1": 1, "m1": 1,
      "c": [0], "A1": [[2]], "b1": [4], "row_sense_stage1": ["="],
      "x_lb": [0], "x_ub": [9],
      "n2": 1, "r2": 0, "m2": 1,
      "d1": [1], "d2": [1],
      "G2": [[1]], "row_sense_stage2": ["="],
      "y_lb": [0], "y_ub": [null],
      "scenarios": [{"p": 1, "A2": [[0]], "b2": [1]}]
    })";
    TwoStageInstance inst = parse_instance(text);
    CHECK(inst.m1 == 2);
    CHECK(inst.A1[0][0] == Rational(2));
    CHECK(inst.A1[1][0] == Rational(-2));
    CHECK(inst.b1[1] == Rational(-4));
    CHECK(inst.m2 == 1);
    CHECK(inst.sense2[0] == RowSense::Eq);
}

TEST_CASE("serialize then parse is the identity on canonical instances") {
    std::string text = R"({
      "n1": 2, "r1": 2, "m1": 1,
      "c": [-3, -4], "A1": [[1, "1/2"]], "b1": ["-7/2"], "row_sense_stage1": ["<="],
      "x_lb": [0, 0], "x_ub": [5, 5],
      "n2": 2, "r2": 1, "m2": 2,
      "d1": [6, 4], "d2": [6, 4],
      "G2": [[2, 5], [1, 0]], "row_sense_stage2": ["=", ">="],
      "y_lb": [0, 0], "y_ub": [6, null],
      "scenarios": [
        {"p": "1/2", "A2": [[2, "1/2"], [0, 0]], "b2": [6, 0]},
        {"p": "1/2", "A2": [[2, "1/2"], [0, 0]], "b2": [12, 0]}
      ]
    })";
    TwoStageInstance inst = parse_instance(text);
    TwoStageInstance again = parse_instance(serialize_instance(inst));
    CHECK(inst == again);
    TwoStageInstance thrice = parse_instance(serialize_instance(again));
    CHECK(again == thrice);
}

TEST_CASE("validation rejects bad instances") {
    // Continuous linking variable.
    std::string cont_link = R"({
      "n1": 1, "r1": 0, "m1": 0, "c": [1], "x_lb": [0], "x_ub": [1],
      "n2": 1, "r2": 0, "m2": 1, "d1": [1], "d2": [1], "G2": [[1]],
      "y_lb": [0], "y_ub": [null],
      "scenarios": [{"p": 1, "A2": [[1]], "b2": [0]}]
    })";
    CHECK_THROWS_AS(parse_instance(cont_link), AssumptionError);

    // Probabilities off by a nonzero amount.
    std::string bad_p = R"({
      "n1": 1, "r1": 1, "m1": 0, "c": [1], "x_lb": [0], "x_ub": [1],
      "n2": 1, "r2": 0, "m2": 1, "d1": [1], "d2": [1], "G2": [[1]],
      "y_lb": [0], "y_ub": [null],
      "scenarios": [{"p": "1/3", "A2": [[1]], "b2": [0]},
                    {"p": "1/3", "A2": [[1]], "b2": [1]}]
    })";
    CHECK_THROWS_AS(parse_instance(bad_p), AssumptionError);

    // Integer variable without finite bounds.
    std::string unb_int = R"({
      "n1": 1, "r1": 1, "m1": 0, "c": [1], "x_lb": [0], "x_ub": [null],
      "n2": 1, "r2": 0, "m2": 1, "d1": [1], "d2": [1], "G2": [[1]],
      "y_lb": [0], "y_ub": [null],
      "scenarios": [{"p": 1, "A2": [[1]], "b2": [0]}]
    })";
    CHECK_THROWS_AS(parse_instance(unb_int), AssumptionError);

    // Dimension mismatch.
    std::string bad_dim = R"({
      "n1": 2, "r1": 2, "m1": 0, "c": [1], "x_lb": [0, 0], "x_ub": [1, 1],
      "n2": 1, "r2": 0, "m2": 1, "d1": [1], "d2": [1], "G2": [[1]],
      "y_lb": [0], "y_ub": [null],
      "scenarios": [{"p": 1, "A2": [[1, 0]], "b2": [0]}]
    })";
    CHECK_THROWS_AS(parse_instance(bad_dim), DimensionError);

    // Floating literals are rejected.
    std::string floaty = R"({
      "n1": 1, "r1": 1, "m1": 0, "c": [0.5], "x_lb": [0], "x_ub": [1],
      "n2": 1, "r2": 0, "m2": 1, "d1": [1], "d2": [1], "G2": [[1]],
      "y_lb": [0], "y_ub": [null],
      "scenarios": [{"p": 1, "A2": [[1]], "b2": [0]}]
    })";
    CHECK_THROWS_AS(parse_instance(floaty), ParseError);

    // Unknown fields are typos.
    CHECK_THROWS_AS(parse_instance(R"({"n1": 1, "banana": 2})"), ParseError);
    CHECK_THROWS_AS(parse_instance("not json"), ParseError);

    // Probabilities that do sum to one are accepted.
    std::string good_p = R"({
      "n1": 1, "r1": 1, "m1": 0, "c": [1], "x_lb": [0], "x_ub": [1],
      "n2": 1, "r2": 0, "m2": 1, "d1": [1], "d2": [1], "G2": [[1]],
      "y_lb": [0], "y_ub": [null],
      "scenarios": [{"p": "1/2", "A2": [[1]], "b2": [0]},
                    {"p": "1/2", "A2": [[1]], "b2": [1]}]
    })";
    CHECK_NOTHROW(parse_instance(good_p));
}

TEST_CASE("interdiction mapping builds the coupled instance") {
    Mat G2 = {{Rational(1), Rational(1)}};
    Vec b2 = {Rational(1)};
    Vec d2 = {Rational(1), Rational(1)};
    Vec u = {Rational(1), Rational(1)};
    TwoStageInstance inst = interdiction_to_2smilp(2, G2, b2, d2, u);
    CHECK(inst.n1 == 2);
    CHECK(inst.r1 == 2);
    CHECK(inst.n2 == 2);
    CHECK(inst.m2 == 3);
    CHECK(inst.d1[0] == Rational(-1));
    CHECK(inst.d2[0] == Rational(1));
    CHECK(inst.sense_tag.stage1_max);
    // Coupling rows: -y_i - u_i x_i >= -u_i.
    CHECK(inst.G2[1][0] == Rational(-1));
    CHECK(inst.scenarios[0].A2[1][0] == Rational(-1));
    CHECK(inst.scenarios[0].b2[1] == Rational(-1));
    CHECK(inst.scenarios[0].A2[0][0] == Rational(0));
    CHECK_NOTHROW(validate_instance(inst));
}

TEST_CASE("binarize_linking expands integer linking variables") {
    std::string text = R"({
      "n1": 2, "r1": 2, "m1": 0,
      "c": [-3, -4],
      "x_lb": [0, 0], "x_ub": [5, 5],
      "n2": 1, "r2": 0, "m2": 1, "d1": [1], "d2": [1],
      "G2": [[1]], "y_lb": [0], "y_ub": [null],
      "scenarios": [{"p": 1, "A2": [[2, "1/2"]], "b2": [6]}]
    })";
    TwoStageInstance inst = parse_instance(text);
    TwoStageInstance bin = binarize_linking(inst);
    REQUIRE(bin.binarization.has_value());
    // Each x in {0..5} becomes 3 binaries with weights 1,2,4 plus a cap row.
    CHECK(bin.n1 == 6);
    CHECK(bin.r1 == 6);
    CHECK(bin.m1 == 2);
    for (int j = 0; j < bin.n1; ++j) {
        CHECK(*bin.x_lb[j] == Rational(0));
        CHECK(*bin.x_ub[j] == Rational(1));
    }
    // Cap row: -(b0 + 2 b1 + 4 b2) >= -5.
    CHECK(bin.b1[0] == Rational(-5));
    CHECK(bin.A1[0][0] == Rational(-1));
    CHECK(bin.A1[0][1] == Rational(-2));
    CHECK(bin.A1[0][2] == Rational(-4));
    // Objective weights follow the expansion.
    CHECK(bin.c[0] == Rational(-3));
    CHECK(bin.c[1] == Rational(-6));
    CHECK(bin.c[2] == Rational(-12));
    // Scenario map follows too.
    CHECK(bin.scenarios[0].A2[0][0] == Rational(2));
    CHECK(bin.scenarios[0].A2[0][1] == Rational(4));
    CHECK(bin.scenarios[0].A2[0][3] == Rational(1, 2));
    // Back-map restores original coordinates.
    Vec xbin = {Rational(1), Rational(0), Rational(1), Rational(1), Rational(1), Rational(0)};
    Vec orig = bin.binarization->restore(xbin);
    CHECK(orig[0] == Rational(5));
    CHECK(orig[1] == Rational(3));

    // Already-binary linking variables pass through unchanged.
    TwoStageInstance binary_inst = interdiction_to_2smilp(
        2, {{Rational(1), Rational(1)}}, {Rational(1)}, {Rational(1), Rational(1)},
        {Rational(1), Rational(1)});
    TwoStageInstance same = binarize_linking(binary_inst);
    CHECK(same == binary_inst);
    CHECK(!same.binarization.has_value());
}

TEST_CASE("binarize_linking keeps a nonzero lower bound via a fixed column") {
    std::string text = R"({
      "n1": 1, "r1": 1, "m1": 0,
      "c": [1],
      "x_lb": [2], "x_ub": [4],
      "n2": 1, "r2": 0, "m2": 1, "d1": [1], "d2": [1],
      "G2": [[1]], "y_lb": [0], "y_ub": [null],
      "scenarios": [{"p": 1, "A2": [[1]], "b2": [6]}]
    })";
    TwoStageInstance inst = parse_instance(text);
    TwoStageInstance bin = binarize_linking(inst);
    REQUIRE(bin.binarization.has_value());
    // Offset column fixed at 1 with weight 2, then binaries for width 2.
    CHECK(*bin.x_lb[0] == Rational(1));
    CHECK(*bin.x_ub[0] == Rational(1));
    const auto& col = bin.binarization->cols[0];
    Vec xbin(bin.n1, Rational(0));
    xbin[0] = Rational(1);
    xbin[col.cols[1]] = Rational(0);
    xbin[col.cols[2]] = Rational(1);
    Vec orig = bin.binarization->restore(xbin);
    CHECK(orig[0] == Rational(4));
    CHECK_NOTHROW(validate_instance(bin));
}

TEST_CASE("bundled instance files parse") {
    for (const char* name :
         {"ex1_recourse_lp.json", "ex2_mixed_recourse.json", "ex4_maxmin_interdiction.json"}) {
        TwoStageInstance inst = parse_instance(slurp(data_path(name)));
        CHECK_NOTHROW(validate_instance(inst));
        CHECK(parse_instance(serialize_instance(inst)) == inst);
    }
}
