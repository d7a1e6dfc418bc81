#pragma once

#include <string>
#include <vector>

#include "msmilp/risk.hpp"

namespace msmilp {

// One first-stage lattice point and what the recourse costs there.
struct OracleRow {
    Vec x;
    ExtRat xi = ExtRat::inf();
    Mat reactions;  // one y per scenario, empty rows when that scenario is infeasible
    std::vector<ExtRat> phi_by_scenario;
};

// One evaluated second-stage right-hand side.
struct PhiRow {
    int scenario = 0;
    Vec beta;
    ExtRat phi = ExtRat::inf();
};

// Everything the exhaustive sweep saw. The tables are in lattice order
// (lexicographic over the first-stage box), so two runs produce identical
// bytes regardless of how the work was scheduled.
struct OracleReport {
    SolveStatus status = SolveStatus::Infeasible;
    Vec x;                          // optimum, present when Optimal
    ExtRat value = ExtRat::inf();   // c*x + Xi(x)
    Mat reactions;                  // scenario reactions at the optimum
    std::vector<OracleRow> xi_table;
    std::vector<Vec> feasible_x;    // exactly the rows with finite xi
    std::vector<PhiRow> phi_table;  // unique (scenario, rhs) pairs, first-seen order

    std::string xi_csv(const std::string& prefix = "x") const;
    std::string phi_csv() const;
};

struct OracleOptions {
    long lattice_cap = 1000000;  // combined first-stage x second-stage x scenario budget
    bool parallel = true;        // false runs the plain reference loop
};

// Exact optimum of the two-stage problem by exhaustion: every integer
// first-stage point against every scenario, with reactions resolved by the
// tie rule. Requires a fully integer first stage. Ties between first-stage
// points go to the lexicographically smallest.
OracleReport oracle_solve(const TwoStageInstance& inst, RiskMode mode,
                          const OracleOptions& opt = {});

// Reference second-stage value at one right-hand side: sweep the integer
// sublattice and finish each point with an LP over the continuous columns.
// Shares no code with the tree solver, which is the point.
ExtRat oracle_phi(const SubMilp& sub, const Vec& beta, long lattice_cap = 1000000);

// Reference reaction with exact tie-breaking: the integer candidates that
// attain phi are compared by a leader-objective LP over the continuous
// argmin face of each.
RiskValue oracle_rho(const TwoStageInstance& inst, const Vec& beta, RiskMode mode,
                     long lattice_cap = 1000000);

// Shape of a generated instance. Dimensions are clamped to the desk scale
// the oracle can exhaust (n1, n2 <= 4, at most 3 scenarios).
struct RandomDims {
    int n1 = 2;
    int n2 = 2;
    int scenarios = 2;
    bool zero_sum = false;          // d1 = -d2 and a binary first stage
    bool equal_objectives = false;  // d1 = d2
};

// Deterministic instance from a seed: coefficients in [-9, 9], finite boxes
// everywhere, every linking column integer. Always passes validate_instance.
// density_pct is the chance (percent) that a matrix entry is nonzero.
TwoStageInstance random_instance(unsigned long seed, const RandomDims& dims = {},
                                 int density_pct = 70);

} // namespace msmilp
