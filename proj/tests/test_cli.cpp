#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include <sys/wait.h>

namespace {

std::string data_path(const char* name) {
    return std::string(MSMILP_DATA_DIR) + "/" + name;
}

std::string slurp(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    std::ostringstream os;
    os << is.rdbuf();
    return os.str();
}

struct CmdResult {
    int code = -1;
    std::string output;  // stdout and stderr combined
};

CmdResult run_cli(const std::string& args) {
    std::string capture = "/tmp/msmilp_cli_capture.txt";
    std::string cmd =
        std::string(MSMILP_CLI_PATH) + " " + args + " > " + capture + " 2>&1";
    int raw = std::system(cmd.c_str());
    CmdResult r;
    r.code = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
    r.output = slurp(capture);
    return r;
}

bool contains(const std::string& hay, const std::string& needle) {
    return hay.find(needle) != std::string::npos;
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream os(path, std::ios::binary);
    os << text;
}

} // namespace

TEST_CASE("solve runs every algorithm with matching optima") {
    CmdResult bnc = run_cli("solve " + data_path("ex4_maxmin_interdiction.json") +
                            " --algorithm bnc --out /tmp/cli_bnc");
    CHECK(bnc.code == 0);
    CHECK(contains(bnc.output, "status optimal"));
    CHECK(contains(bnc.output, "objective 3"));
    CHECK(contains(bnc.output, "x = 2"));

    std::string json = slurp("/tmp/cli_bnc_result.json");
    CHECK(contains(json, "\"algorithm\": \"bnc\""));
    CHECK(contains(json, "\"objective_reported\": \"3\""));
    CHECK(contains(json, "\"status\": \"optimal\""));

    CmdResult dec = run_cli("solve " + data_path("ex2_mixed_recourse.json") +
                            " --algorithm benders --max-iter 50 --out /tmp/cli_ben");
    CHECK(dec.code == 0);
    CHECK(contains(dec.output, "objective -59/2"));
    CmdResult ref = run_cli("solve " + data_path("ex2_mixed_recourse.json") +
                            " --algorithm enumerate --out /tmp/cli_enum");
    CHECK(ref.code == 0);
    CHECK(contains(ref.output, "objective -59/2"));

    // The decomposition run leaves its iteration history behind.
    std::string iters = slurp("/tmp/cli_ben_iterations.csv");
    CHECK(contains(iters,
                   "iter,master_value,master_value_decimal,sum_z,sum_z_decimal,"
                   "xi,xi_decimal,gap,gap_decimal"));

    CmdResult lsh = run_cli("solve " + data_path("ex1_recourse_lp.json") +
                            " --algorithm lshaped --out /tmp/cli_lsh");
    CHECK(lsh.code == 0);
    CHECK(contains(lsh.output, "objective 0"));
}

TEST_CASE("usage and parse failures exit with code 4") {
    CHECK(run_cli("solve " + data_path("ex4_maxmin_interdiction.json") +
                  " --algorithm bnc --mode pessimistic")
              .code == 4);
    CHECK(run_cli("solve " + data_path("ex4_maxmin_interdiction.json") +
                  " --algorithm simplex")
              .code == 4);
    CHECK(run_cli("vf sample " + data_path("ex1_recourse_lp.json") +
                  " --from 0 --to 1 --step 0")
              .code == 4);
    CHECK(run_cli("vf sample " + data_path("ex1_recourse_lp.json")).code == 4);
    CHECK(run_cli("frobnicate").code == 4);

    write_file("/tmp/cli_broken.json", "{broken");
    CmdResult bad = run_cli("solve /tmp/cli_broken.json");
    CHECK(bad.code == 4);
    CHECK(contains(bad.output, "line 1"));
}

TEST_CASE("infeasible, assumption, and limit exits are distinct") {
    // No y can reach 5 under a box capped at 2, for any x.
    write_file("/tmp/cli_uncoverable.json", R"({
        "n1": 1, "r1": 1, "m1": 0, "c": [0], "A1": [], "b1": [],
        "x_lb": [0], "x_ub": [1],
        "n2": 1, "r2": 1, "m2": 1, "d1": [1], "d2": [1],
        "G2": [[1]], "row_sense_stage2": [">="], "y_lb": [0], "y_ub": [2],
        "scenarios": [{"p": 1, "A2": [[0]], "b2": [5]}]
    })");
    CmdResult inf = run_cli("solve /tmp/cli_uncoverable.json --algorithm enumerate"
                            " --out /tmp/cli_inf");
    CHECK(inf.code == 2);
    CHECK(contains(inf.output, "status infeasible"));
    CHECK(run_cli("solve /tmp/cli_uncoverable.json --algorithm bnc --out /tmp/cli_inf2")
              .code == 2);

    // Continuous second stage is outside the branch-and-cut contract.
    CmdResult mixed = run_cli("solve " + data_path("ex1_recourse_lp.json") +
                              " --algorithm bnc");
    CHECK(mixed.code == 3);
    CHECK(contains(mixed.output, "assumption violated"));

    CmdResult capped = run_cli("solve " + data_path("ex2_mixed_recourse.json") +
                               " --algorithm enumerate --lattice-cap 1");
    CHECK(capped.code == 5);
    CHECK(contains(capped.output, "limit hit"));

    CmdResult starved = run_cli("solve " + data_path("ex2_mixed_recourse.json") +
                                " --algorithm benders --max-iter 1 --out /tmp/cli_st");
    CHECK(starved.code == 5);
}

TEST_CASE("value function sampling is byte stable") {
    std::string args = "vf sample " + data_path("ex1_recourse_lp.json") +
                       " --from -10 --to 10 --step 5 --out /tmp/cli_vf";
    CHECK(run_cli(args).code == 0);
    std::string first = slurp("/tmp/cli_vf_vf.csv");
    CHECK(first ==
          "beta,beta_decimal,phi,phi_decimal,phi_C,phi_C_decimal,"
          "phi_I,phi_I_decimal,lower,lower_decimal,upper,upper_decimal\n"
          "-10,-10,10,10,10,10,inf,inf,10,10,10,10\n"
          "-5,-5,5,5,5,5,inf,inf,5,5,5,5\n"
          "0,0,0,0,0,0,0,0,0,0,0,0\n"
          "5,5,15,15,15,15,inf,inf,-5,-5,15,15\n"
          "10,10,30,30,30,30,inf,inf,-10,-10,30,30\n");
    CHECK(run_cli(args).code == 0);
    CHECK(slurp("/tmp/cli_vf_vf.csv") == first);
}

TEST_CASE("sampled grid hits the known mixed-recourse values") {
    CHECK(run_cli("vf sample " + data_path("ex2_mixed_recourse.json") +
                  " --from 0 --to 13 --step 1/2 --out /tmp/cli_vf2")
              .code == 0);
    std::string csv = slurp("/tmp/cli_vf2_vf.csv");
    CHECK(contains(csv, "\n5,5,4,4,"));
    CHECK(contains(csv, "\n19/2,9.5,17/2,8.5,"));
}

TEST_CASE("dual function export freezes the first tree") {
    CHECK(run_cli("vf dualfn " + data_path("ex2_mixed_recourse.json") +
                  " --beta 7/2 --mode leafmin --out /tmp/cli_df")
              .code == 0);
    CHECK(slurp("/tmp/cli_df_dualfn.csv") ==
          "mode,group,piece,slope_0,slope_0_decimal,constant,constant_decimal\n"
          "leafmin,0,0,1,1,0,0\n"
          "leafmin,1,0,-3/2,-1.5,23/2,11.5\n");
}

TEST_CASE("single-row construction exports breakpoints and segments") {
    CHECK(run_cli("vf construct1d " + data_path("ex2_mixed_recourse.json") +
                  " --out /tmp/cli_c1")
              .code == 0);
    std::string segs = slurp("/tmp/cli_c1_segments.csv");
    CHECK(contains(segs, "from,from_decimal,to,to_decimal,slope,slope_decimal,"
                         "intercept,intercept_decimal"));
    CHECK(contains(segs, "-inf,-inf,-12,-12,-2,-2,-6,-6"));
    CHECK(!slurp("/tmp/cli_c1_breakpoints.csv").empty());
}

TEST_CASE("oracle export tabulates the interdiction instance exactly") {
    CmdResult r = run_cli("oracle " + data_path("ex4_maxmin_interdiction.json") +
                          " --out /tmp/cli_or");
    CHECK(r.code == 0);
    CHECK(contains(r.output, "objective 3"));
    CHECK(slurp("/tmp/cli_or_xi.csv") ==
          "x_0,x_0_decimal,xi,xi_decimal\n"
          "0,0,-2,-2\n"
          "1,1,0,0\n"
          "2,2,-3,-3\n"
          "3,3,inf,inf\n");
}

TEST_CASE("crosscheck sweep agrees and reports per seed") {
    CmdResult r = run_cli("crosscheck --seeds 3 --out /tmp/cli_cc");
    CHECK(r.code == 0);
    CHECK(contains(r.output, "agreements 3/3"));
    CHECK(slurp("/tmp/cli_cc_crosscheck.csv") ==
          "seed,status,value,value_decimal,agree\n"
          "1,infeasible,inf,inf,1\n"
          "2,optimal,-8,-8,1\n"
          "3,infeasible,inf,inf,1\n");
}
