#pragma once

#include <string>
#include <vector>

#include "msmilp/bnb.hpp"
#include "msmilp/risk.hpp"

namespace msmilp {

// One lattice-exclusion cut over the joint (x, y^0, ..., y^{S-1}) columns:
// coef * point <= rhs. Cuts are node-local: the derivation uses the node box,
// so a cut binds only the node it was separated at and that node's subtree.
struct BncCut {
    Vec coef;
    Rational rhs;
    int scenario = -1;  // subspace the cut was derived in, -1 for the joint space
};

enum class BncNodeState { Open, Branched, PrunedInfeasible, PrunedByBound, Exhausted };

struct BncNode {
    int id = 0;
    int parent = -1;
    int depth = 0;
    Bounds lb, ub;              // joint box after the branching path
    std::vector<BncCut> cuts;   // inherited from the parent plus own separations
    ExtRat lp_value;            // bound from the last relaxation solve
    BncNodeState state = BncNodeState::Open;
};

// Verdict on one integral vertex of the joint relaxation: feasible means
// every scenario's reaction is follower-optimal (d2 y = recourse value at the
// vertex's right-hand side), in which case xi carries the exact expected
// recourse at x for the incumbent update.
struct BilevelCheck {
    bool feasible = false;
    int violating = -1;  // first scenario whose reaction overshoots, else -1
    ExtRat xi = ExtRat::inf();
};

BilevelCheck check_bilevel_feasible(const TwoStageInstance& inst, const Vec& x,
                                    const Mat& ys, const BnbLimits& lim = {});

// Separates an integral vertex that failed the follower-optimality test.
// The hyperplane is the gcd-normalized sum of the <=-form normals of every
// constraint active at the vertex (model rows, node cuts, node bounds),
// derived over scenario w's (x, y^w) subspace, or over the joint space when
// w is -1. Integral points other than the vertex satisfy the returned cut,
// and the vertex violates it by exactly one.
// Throws DegenerateVertexError when the active normals leave a face of
// positive dimension, which a joint-space derivation then resolves.
BncCut generate_nogood_cut(const TwoStageInstance& inst, const BncNode& node,
                           const Vec& x, const Mat& ys, int w);

struct BncConfig {
    long max_nodes = 10000;
    long max_lp_solves = 200000;
    BnbLimits bnb;  // limits for recourse evaluations
    LpLimits lp;    // limits for node relaxations
};

// Branch and cut over the joint relaxation for pure-integer instances:
// integral vertices are tested for follower optimality, failing vertices are
// cut away, and candidates are re-valued with the exact optimistic recourse
// before they become incumbents. Requires every variable integer with finite
// bounds; rows and bounds are scaled to integer data on entry.
SolveResult solve_bilevel_bnc(const TwoStageInstance& inst, const BncConfig& cfg = {});

// CSV rows: node, scenario, x coefficients, y coefficients, rhs, vertex.
std::string cut_log_csv(const std::vector<CutLogEntry>& log);

} // namespace msmilp
