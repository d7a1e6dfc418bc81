#pragma once

#include "msmilp/bnb.hpp"

namespace msmilp {

// Which reaction the follower picks when its optimum is not unique:
// Optimistic takes the one cheapest for the leader, Pessimistic the dearest.
enum class RiskMode { Optimistic, Pessimistic };

// Outcome of one reaction solve. phi is the follower's optimal value,
// value is the leader's cost d1*y under the chosen tie rule, and y attains
// both. Infeasible second stage leaves both values at +inf and y empty.
struct RiskValue {
    ExtRat phi = ExtRat::inf();
    ExtRat value = ExtRat::inf();
    Vec y;
};

// Two-phase lexicographic solve at right-hand side beta. Phase one minimizes
// the follower objective d2 over the second stage; phase two optimizes the
// leader objective d1 over the exact optimal-level set, pinning d2*y to the
// phase-one value with an equality row (expanded internally into a paired
// inequality, so no tolerance enters). When d1 = d2 phase two is redundant
// and skipped.
RiskValue eval_rho(const TwoStageInstance& inst, const Vec& beta, RiskMode mode,
                   const BnbLimits& lim = {});

// Reaction under scenario omega at first-stage decision x.
RiskValue eval_xi_omega(const TwoStageInstance& inst, int omega, const Vec& x,
                        RiskMode mode, const BnbLimits& lim = {});

// Expected second-stage cost and the per-scenario reactions behind it.
struct XiValue {
    ExtRat value = ExtRat::inf();       // +inf as soon as any scenario is infeasible
    std::vector<RiskValue> parts;       // one entry per scenario
};

// Xi(x) = sum over scenarios of p_omega * Xi_omega(x). Scenario solves are
// independent and fan out across worker threads; the reduction is exact.
XiValue eval_xi(const TwoStageInstance& inst, const Vec& x, RiskMode mode,
                const BnbLimits& lim = {});

} // namespace msmilp
