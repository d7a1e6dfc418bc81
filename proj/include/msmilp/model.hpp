#pragma once

#include <optional>
#include <string>
#include <vector>

#include "msmilp/rational.hpp"

namespace msmilp {

enum class RowSense { Ge, Eq };

// Bound that may be infinite on one side. nullopt means unbounded
// (-inf for lower bounds, +inf for upper bounds, by position).
using OptBound = std::optional<Rational>;
using Bounds = std::vector<OptBound>;

// One realization of the second-stage data. Probabilities are exact and
// positive; A2 maps the first-stage decision into the second-stage rhs.
struct Scenario {
    Rational p;
    Mat A2;   // m2 x n1
    Vec b2;   // m2
};

// Record of sign flips applied while normalizing a parsed file, so results
// can be reported in the file's original orientation.
struct SenseTag {
    bool stage1_max = false;
    bool stage2_max = false;
    std::vector<int> flipped_rows1;  // file row indices negated into >= form
    std::vector<int> flipped_rows2;
};

// Back-map of binarize_linking: each expanded original column is recovered
// as offset + sum(weights[k] * x[cols[k]]).
struct Binarization {
    struct Col {
        int orig = 0;
        Rational offset;
        std::vector<Rational> weights;
        std::vector<int> cols;
    };
    int orig_n1 = 0;
    std::vector<Col> cols;   // one per original column, identity when trivial
    Vec restore(const Vec& x) const;
};

// Two-stage instance in canonical form: both objectives minimize, every row
// is ">=" except rows explicitly marked Eq, integer variables come first in
// each stage and carry finite bounds.
struct TwoStageInstance {
    int n1 = 0, r1 = 0, m1 = 0;
    Vec c;
    Mat A1;                       // m1 x n1, all rows >=
    Vec b1;
    Bounds x_lb, x_ub;

    int n2 = 0, r2 = 0, m2 = 0;
    Vec d1, d2;
    Mat G2;                       // m2 x n2
    std::vector<RowSense> sense2; // per second-stage row
    Bounds y_lb, y_ub;

    std::vector<Scenario> scenarios;

    SenseTag sense_tag;
    std::optional<Binarization> binarization;

    // Second-stage rhs seen by scenario omega at first-stage decision x.
    Vec beta(int omega, const Vec& x) const;
    // Columns of x with a nonzero coefficient in scenario omega's A2.
    std::vector<int> linking_columns(int omega) const;
    // Union over scenarios.
    std::vector<int> linking_columns() const;
};

// Parses the instance JSON text. Throws ParseError/DimensionError on malformed
// input and AssumptionError on modeling violations (continuous linking
// variable, unbounded integer variable, probabilities not summing to one).
TwoStageInstance parse_instance(const std::string& json_text);
TwoStageInstance load_instance(const std::string& path);

// Canonical JSON for the instance; parse(serialize(inst)) == inst.
std::string serialize_instance(const TwoStageInstance& inst);

// Validation used by parse_instance and by generators; throws on violation.
void validate_instance(const TwoStageInstance& inst);

// Zero-sum interdiction game as a two-stage instance: binary interdiction
// x, follower min d2*y over G2*y >= b2 with 0 <= y <= u integer, and
// variable-upper-bound rows -y_i - u_i x_i >= -u_i coupling the stages.
// The leader maximizes the follower's optimal cost (d1 = -d2 after
// normalization, sense_tag records the flip).
TwoStageInstance interdiction_to_2smilp(int n, const Mat& G2, const Vec& b2,
                                        const Vec& d2, const Vec& u);

// Replaces every integer linking variable by its binary expansion
// (weights 1, 2, 4, ... plus a cap row when the width is not a power of two).
// Instances whose linking variables are already binary are returned
// unchanged. The back-map is stored on the result.
TwoStageInstance binarize_linking(const TwoStageInstance& inst);

enum class SolveStatus { Optimal, Infeasible, IterLimit, NodeLimitHit };

// One separation event in the bilevel branch-and-cut log.
struct CutLogEntry {
    long node = 0;
    int scenario = 0;
    Vec f;          // coefficients on x
    Vec g;          // coefficients on the scenario's y block
    Rational rhs;   // cut is f*x + g*y <= rhs
    Vec vertex_x;   // separated vertex
    Vec vertex_y;
};

// One outer iteration of a decomposition run. gap is the distance from the
// master bound to the best complete solution seen so far; it stays +inf
// until the first incumbent exists and reaches zero at termination.
struct IterLogEntry {
    int iter = 0;
    Rational master_value;
    Rational sum_z;  // probability-weighted recourse estimate at the master optimum
    ExtRat xi;       // true expected recourse at this iterate, +inf when infeasible
    ExtRat gap;
};

// Uniform result record for the solvers. Values are in the canonical
// minimization orientation; `objective_reported` undoes the sense flip
// recorded at ingestion and `x` is in original coordinates (binarization
// undone when present).
struct SolveResult {
    SolveStatus status = SolveStatus::Optimal;
    ExtRat objective = ExtRat::inf();
    ExtRat objective_reported = ExtRat::inf();
    Vec x;
    Mat reactions;                 // one y per scenario
    std::vector<Rational> bound_trace;
    long iterations = 0;
    long nodes = 0;
    double wall_seconds = 0.0;
    std::vector<CutLogEntry> cut_log;
    std::vector<IterLogEntry> iter_log;
    Vec final_z;                   // per-scenario master estimates at termination
    Vec final_sub;                 // per-scenario d1*y at termination
    std::string algorithm;
};

std::string serialize_result(const SolveResult& r);

// Mathematical-content equality (ingestion bookkeeping excluded).
bool operator==(const Scenario& a, const Scenario& b);
bool operator==(const TwoStageInstance& a, const TwoStageInstance& b);

} // namespace msmilp
