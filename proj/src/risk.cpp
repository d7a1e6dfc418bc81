#include "msmilp/risk.hpp"

#include <exception>

#include <omp.h>

#include "msmilp/errors.hpp"
#include "msmilp/threads.hpp"

namespace msmilp {

RiskValue eval_rho(const TwoStageInstance& inst, const Vec& beta, RiskMode mode,
                   const BnbLimits& lim) {
    SubMilp stage = SubMilp::second_stage(inst);
    if (static_cast<int>(beta.size()) != stage.m())
        throw DimensionError("rho: rhs length does not match the second stage");

    MilpResult phase1 = solve_milp(stage, beta, lim);
    RiskValue out;
    if (phase1.status != SolveStatus::Optimal)
        return out;
    out.phi = ExtRat(phase1.value);

    if (inst.d1 == inst.d2) {
        out.value = out.phi;
        out.y = phase1.y;
        return out;
    }

    // Optimize the leader objective over the follower's optimal-level set.
    SubMilp level = stage;
    level.d = inst.d1;
    if (mode == RiskMode::Pessimistic)
        for (Rational& di : level.d) di = -di;
    level.G.push_back(inst.d2);
    level.sense.push_back(RowSense::Eq);

    Vec level_rhs = beta;
    level_rhs.push_back(phase1.value);
    MilpResult phase2 = solve_milp(level, level_rhs, lim);
    if (phase2.status != SolveStatus::Optimal)
        throw Error("rho: level set lost the phase-one point");  // unreachable

    out.y = phase2.y;
    out.value = ExtRat(mode == RiskMode::Pessimistic ? -phase2.value : phase2.value);
    return out;
}

RiskValue eval_xi_omega(const TwoStageInstance& inst, int omega, const Vec& x,
                        RiskMode mode, const BnbLimits& lim) {
    if (omega < 0 || omega >= static_cast<int>(inst.scenarios.size()))
        throw DimensionError("xi: scenario index out of range");
    return eval_rho(inst, inst.beta(omega, x), mode, lim);
}

XiValue eval_xi(const TwoStageInstance& inst, const Vec& x, RiskMode mode,
                const BnbLimits& lim) {
    const int S = static_cast<int>(inst.scenarios.size());
    XiValue out;
    out.parts.resize(S);
    std::vector<std::exception_ptr> errors(S);

#pragma omp parallel for schedule(dynamic) num_threads(worker_count())
    for (int w = 0; w < S; ++w) {
        try {
            out.parts[w] = eval_xi_omega(inst, w, x, mode, lim);
        } catch (...) {
            errors[w] = std::current_exception();
        }
    }
    for (const std::exception_ptr& e : errors)
        if (e) std::rethrow_exception(e);

    Rational total;
    for (int w = 0; w < S; ++w) {
        if (!out.parts[w].value.finite())
            return out;  // value stays +inf
        total += inst.scenarios[w].p * out.parts[w].value.value();
    }
    out.value = ExtRat(total);
    return out;
}

} // namespace msmilp
