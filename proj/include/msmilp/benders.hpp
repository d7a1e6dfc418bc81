#pragma once

#include <string>
#include <variant>
#include <vector>

#include "msmilp/bnb.hpp"
#include "msmilp/risk.hpp"

namespace msmilp {

// Affine under-estimator of one scenario's recourse in rhs space:
// z >= piece(beta(x)). Produced by LP duals in the continuous method.
struct LinearCut {
    AffinePiece piece;
};

// Branch-and-bound dual function as a cut: z >= fn(beta(x)). Strong at every
// right-hand side the producing tree was refined at.
struct DualFnCut {
    DualFunction fn;
};

// No-good style bound over the binary linking coordinates: equal to height
// at x_ref and relaxing to at most z_lb as soon as any reference coordinate
// flips. Valid because the recourse depends on x only through the linking
// columns.
struct IntegerLShapedCut {
    Vec x_ref;        // linking-coordinate pattern, all 0/1
    Rational height;  // scenario recourse at x_ref
    Rational z_lb;    // valid global lower bound the cut falls back to

    // The lower bound the cut imposes at a binary point of the same
    // coordinate universe as x_ref.
    Rational bound_at(const Vec& x_int) const;
};

IntegerLShapedCut make_integer_lshaped_cut(const Vec& x_ref, const Rational& xi_value,
                                           const Rational& z_lb);

using ScenarioCut = std::variant<LinearCut, DualFnCut, IntegerLShapedCut>;

// Everything the master problem knows between iterations. Exclusion entries
// and integer L-shaped references are 0/1 patterns over link_cols, the
// columns the scenario right-hand sides actually read.
struct MasterState {
    std::vector<std::vector<ScenarioCut>> pool;   // optimality cuts, per scenario
    std::vector<std::vector<AffinePiece>> feas;   // Farkas cuts: piece(beta(x)) <= 0
    std::vector<Vec> exclusions;                  // linking patterns cut off entirely
    std::vector<int> link_cols;                   // first-stage columns behind beta
    Vec z_lb;                                     // per-scenario recourse lower bound
    int iteration = 0;
    Vec incumbent_x;
    ExtRat incumbent = ExtRat::inf();
    std::vector<Rational> bound_trace;
};

// The master as a single-stage MILP: x columns first (integer prefix, then the
// cut-selection binaries, then continuous x), one z column per scenario.
struct MasterMilp {
    SubMilp sub;
    Vec rhs;
    std::vector<int> x_cols;  // master column of each original x column
    std::vector<int> z_cols;  // master column of each scenario estimate
};

// Encodes the pool into rows. Min-of-affine dual functions get one selection
// binary per leaf group (none when there is a single group) and exact
// interval-arithmetic big-M values over the first-stage box.
MasterMilp linearize_master(const MasterState& state, const TwoStageInstance& inst);

struct BendersConfig {
    int max_iterations = 200;
    BnbLimits bnb;              // subproblem tree limits
    long master_max_nodes = 200000;
};

// Classical cutting-plane method for purely continuous recourse with matching
// objectives: LP duals give optimality cuts, Farkas rays give feasibility
// cuts, and the loop stops when every estimate equals its subproblem value.
SolveResult solve_lshaped_continuous(const TwoStageInstance& inst,
                                     const BendersConfig& cfg = {});

// Decomposition for integer recourse. With matching objectives each scenario
// keeps one branch-and-bound tree across iterations; its path-strengthened
// dual function is the (replaced) cut, so the bound is tight at every visited
// iterate, and linking columns are expanded to binaries internally so that an
// iterate with infeasible recourse gets an exact exclusion. With differing
// objectives the linking columns must already be binary (expand integer
// columns first) and the cuts are integer L-shaped bounds plus exclusions.
// Every iterate is either optimal or cut tight, so the iteration count never
// exceeds the number of linking patterns plus one.
SolveResult solve_generalized_benders(const TwoStageInstance& inst,
                                      const BendersConfig& cfg = {});

// CSV with exact and decimal columns per entry.
std::string iteration_log_csv(const std::vector<IterLogEntry>& log);

// Human-readable dump of the pool for post-mortems.
std::string cut_pool_dump(const MasterState& state);

} // namespace msmilp
