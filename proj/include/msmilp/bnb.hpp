#pragma once

#include <optional>
#include <string>
#include <vector>

#include "msmilp/model.hpp"
#include "msmilp/ratlp.hpp"

namespace msmilp {

// MILP template whose right-hand side varies between solves:
// min d*y s.t. G*y (>=|=) beta, lb <= y <= ub, first r variables integer.
struct SubMilp {
    Vec d;
    Mat G;
    std::vector<RowSense> sense;
    int r = 0;
    Bounds lb, ub;

    int n() const { return static_cast<int>(d.size()); }
    int m() const { return static_cast<int>(G.size()); }

    // The second stage of an instance as a right-hand-side-parametric MILP.
    static SubMilp second_stage(const TwoStageInstance& inst);
};

// Affine lower bound on a value function, in original row space:
// value at beta = slope*beta + constant.
struct AffinePiece {
    Vec slope;
    Rational constant;

    Rational eval(const Vec& beta) const { return dot(slope, beta) + constant; }
};

bool operator==(const AffinePiece& a, const AffinePiece& b);

// What happened to a node the last time the search touched it. Statuses are
// per-solve snapshots: a leaf marked IntegralLeaf for one right-hand side may
// be re-solved with a different outcome on a later refinement.
enum class NodeStatus { OpenLeaf, Branched, IntegralLeaf, InfeasibleLeaf, PrunedByBound };

struct BnbNode {
    int id = 0;
    int parent = -1;
    int depth = 0;
    std::vector<int> children;

    // The branching step that created this node (unset for the root):
    // side -1 means var <= bound, side +1 means var >= bound.
    int branch_var = -1;
    int branch_side = 0;
    Rational branch_bound;

    Bounds lb, ub;  // node box: root bounds tightened by the branching path
    NodeStatus status = NodeStatus::OpenLeaf;

    // Lower-bound evidence accumulated across refinements, oldest first.
    // pieces[k] is the folded affine form of certs[k] against this node's box.
    std::vector<AffinePiece> pieces;
    std::vector<DualCertificate> certs;

    ExtRat last_value;  // LP value at the most recent solve; +inf if infeasible
};

struct StrongPoint {
    Vec beta;
    Rational value;
};

struct BnbLimits {
    long max_nodes = 20000;
    LpLimits lp;
};

// Outcome of anchoring a tree at one right-hand side.
struct RefineResult {
    SolveStatus status = SolveStatus::Infeasible;  // Optimal or Infeasible
    ExtRat value;       // +inf when infeasible
    Vec y;              // incumbent when Optimal
    int incumbent_leaf = -1;
    long lp_solves = 0;
};

// Branch-and-bound search tree that persists across solves. Each refinement
// re-anchors the tree at a new right-hand side, branching only where the
// existing leaf bounds are too weak, and leaves every leaf holding a
// certificate whose folded affine form is a valid lower bound on that leaf's
// subproblem value function at every right-hand side.
class BnbTree {
public:
    explicit BnbTree(SubMilp sub);

    const SubMilp& sub() const { return sub_; }
    const std::vector<BnbNode>& nodes() const { return nodes_; }
    const BnbNode& node(int id) const { return nodes_.at(id); }
    const std::vector<StrongPoint>& strong_points() const { return strong_points_; }
    std::vector<int> leaf_ids() const;

    // Solve min d*y over the node-partitioned box at this right-hand side,
    // reusing stored certificates as warm bounds. When the subproblem is
    // infeasible at beta, every leaf that turned out infeasible gets an
    // extended certificate clearing infeas_target (or the final incumbent,
    // or zero, whichever is largest), keeping the dual function valid.
    RefineResult refine(const Vec& beta, const BnbLimits& lim = {},
                        const std::optional<Rational>& infeas_target = std::nullopt);

    // Versioned JSON snapshot with bounds and certificates; round-trips.
    std::string serialize() const;
    static BnbTree deserialize(const std::string& text);

private:
    friend bool operator==(const BnbTree& a, const BnbTree& b);

    SubMilp sub_;
    RowExpansion ex_;
    Mat exG_;  // expanded rows, cached
    std::vector<BnbNode> nodes_;
    std::vector<StrongPoint> strong_points_;

    LpProblem node_lp(const BnbNode& nd, const Vec& beta_expanded) const;
    AffinePiece fold_piece(const DualCertificate& cert, const BnbNode& nd) const;
    void record_cert(BnbNode& nd, const DualCertificate& cert);
};

bool operator==(const BnbTree& a, const BnbTree& b);

struct MilpResult {
    SolveStatus status = SolveStatus::Infeasible;
    Rational value;  // meaningful when Optimal
    Vec y;
    BnbTree tree;
};

// One-shot solve: fresh tree, one refinement.
MilpResult solve_milp(const SubMilp& sub, const Vec& beta, const BnbLimits& lim = {});

enum class DualFnMode { LeafMin, PathStrengthenedMin };

// Min-of-groups, max-within-group affine lower bound on a value function.
// LeafMin keeps one piece per leaf (the latest); PathStrengthenedMin gives
// each leaf every piece collected along its root path, which preserves
// exactness at previously solved right-hand sides.
struct DualFunction {
    DualFnMode mode = DualFnMode::LeafMin;
    std::vector<std::vector<AffinePiece>> groups;
};

DualFunction extract_dual_function(const BnbTree& tree, DualFnMode mode);
ExtRat eval_dual_function(const DualFunction& fn, const Vec& beta);

// CSV rows: group, piece, slope per row coordinate (exact and decimal),
// constant (exact and decimal), mode.
std::string dual_function_csv(const DualFunction& fn);

} // namespace msmilp
