#include "msmilp/ratlp.hpp"

#include <algorithm>
#include <cassert>

namespace msmilp {

namespace {

enum class VarStat { Basic, AtLower, AtUpper, FreeZero };

// Bounded-variable primal simplex over the expanded system
//   [G | -I | E] (y, s, a) = beta,  l <= y <= u,  s >= 0,  a in [0, ...]
// where s are row surpluses and a are phase-1 artificials (one per row whose
// surplus would start negative). The dense tableau T = B^{-1} [G | -I | E] is
// carried through pivots; B^{-1} itself is recovered from the surplus block
// (T[:, surplus] = -B^{-1}) whenever row prices are needed.
class Simplex {
  public:
    Simplex(const LpProblem& p, const LpLimits& lim) : p_(p), lim_(lim) {
        n_ = static_cast<int>(p.d.size());
        m_ = static_cast<int>(p.G.size());
    }

    LpResult run() {
        init();
        if (have_artificials_) {
            Phase r = loop(/*phase1=*/true);
            if (r == Phase::PivotLimit) throw LimitError("simplex pivot limit exceeded");
            Rational infeas = artificial_sum();
            if (infeas.sign() > 0) return infeasible_result();
        }
        for (int j = art0_; j < ncols_; ++j) {
            lb_[j] = Rational(0);   // freeze artificials for phase 2
            ub_[j] = Rational(0);
        }
        phase1_ = false;
        Phase r = loop(/*phase1=*/false);
        if (r == Phase::PivotLimit) throw LimitError("simplex pivot limit exceeded");
        if (r == Phase::Unbounded) return unbounded_result();
        return optimal_result();
    }

  private:
    enum class Phase { Done, Unbounded, PivotLimit };

    const LpProblem& p_;
    const LpLimits& lim_;
    int n_ = 0, m_ = 0;
    int art0_ = 0, ncols_ = 0;
    bool have_artificials_ = false;
    bool phase1_ = true;
    long pivots_ = 0;

    Mat T_;                       // m x ncols
    std::vector<int> basis_;      // per row
    std::vector<VarStat> stat_;   // per column
    Vec val_;                     // per column
    std::vector<OptBound> lb_, ub_;
    Vec unbounded_ray_;

    Rational cost(int j) const {
        if (phase1_) return j >= art0_ ? Rational(1) : Rational(0);
        return j < n_ ? p_.d[j] : Rational(0);
    }

    // Original constraint-matrix column j restricted to row i.
    Rational acol(int i, int j) const {
        if (j < n_) return p_.G[i][j];
        if (j < n_ + m_) return j - n_ == i ? Rational(-1) : Rational(0);
        return art_row_[j - art0_] == i ? Rational(1) : Rational(0);
    }

    std::vector<int> art_row_;    // row of each artificial

    void init() {
        stat_.assign(n_ + m_, VarStat::AtLower);
        val_.assign(n_ + m_, Rational(0));
        lb_.resize(n_ + m_);
        ub_.resize(n_ + m_);
        for (int j = 0; j < n_; ++j) {
            lb_[j] = p_.lower[j];
            ub_[j] = p_.upper[j];
            if (lb_[j]) {
                stat_[j] = VarStat::AtLower;
                val_[j] = *lb_[j];
            } else if (ub_[j]) {
                stat_[j] = VarStat::AtUpper;
                val_[j] = *ub_[j];
            } else {
                stat_[j] = VarStat::FreeZero;
                val_[j] = Rational(0);
            }
            if (lb_[j] && ub_[j] && *lb_[j] > *ub_[j])
                throw AssumptionError("LP variable with crossing bounds");
        }
        for (int j = n_; j < n_ + m_; ++j) {
            lb_[j] = Rational(0);
            ub_[j] = std::nullopt;
        }

        basis_.assign(m_, -1);
        T_.assign(m_, Vec());
        std::vector<int> needs_art;
        Vec activity(m_);
        for (int i = 0; i < m_; ++i) {
            Rational a;
            for (int j = 0; j < n_; ++j)
                if (p_.G[i][j] != Rational(0)) a += p_.G[i][j] * val_[j];
            activity[i] = a;
            Rational t = a - p_.beta[i];
            if (t >= Rational(0)) {
                basis_[i] = n_ + i;
                val_[n_ + i] = t;
                stat_[n_ + i] = VarStat::Basic;
            } else {
                needs_art.push_back(i);
            }
        }
        art0_ = n_ + m_;
        ncols_ = art0_ + static_cast<int>(needs_art.size());
        have_artificials_ = !needs_art.empty();
        for (std::size_t k = 0; k < needs_art.size(); ++k) {
            int i = needs_art[k];
            int col = art0_ + static_cast<int>(k);
            art_row_.push_back(i);
            basis_[i] = col;
            stat_.push_back(VarStat::Basic);
            val_.push_back(p_.beta[i] - activity[i]);
            lb_.push_back(Rational(0));
            ub_.push_back(std::nullopt);
        }

        // Tableau rows normalized so the basic column has coefficient +1:
        // surplus-basic rows are negated, artificial-basic rows pass through.
        for (int i = 0; i < m_; ++i) {
            Vec row(ncols_);
            bool art = basis_[i] >= art0_;
            Rational s = art ? Rational(1) : Rational(-1);
            for (int j = 0; j < n_; ++j) row[j] = s * p_.G[i][j];
            row[n_ + i] = -s;
            if (art) row[basis_[i]] = Rational(1);
            T_[i] = std::move(row);
        }
    }

    Vec row_prices() const {
        Vec w(m_);
        for (int i = 0; i < m_; ++i) {
            Rational acc;
            for (int k = 0; k < m_; ++k) {
                const Rational& c = cost(basis_[k]);
                if (c != Rational(0) && T_[k][n_ + i] != Rational(0)) acc -= c * T_[k][n_ + i];
            }
            w[i] = acc;
        }
        return w;
    }

    Rational reduced_cost(const Vec& w, int j) const {
        Rational rc = cost(j);
        if (j < n_) {
            for (int i = 0; i < m_; ++i)
                if (p_.G[i][j] != Rational(0) && w[i] != Rational(0)) rc -= w[i] * p_.G[i][j];
        } else if (j < art0_) {
            rc += w[j - n_];
        } else {
            rc -= w[art_row_[j - art0_]];
        }
        return rc;
    }

    Rational artificial_sum() const {
        Rational s;
        for (int j = art0_; j < ncols_; ++j) s += val_[j];
        return s;
    }

    Phase loop(bool phase1) {
        while (true) {
            if (phase1 && artificial_sum().sign() == 0) return Phase::Done;
            if (pivots_ >= lim_.max_pivots) return Phase::PivotLimit;

            Vec w = row_prices();
            int enter = -1, dir = 0;
            for (int j = 0; j < ncols_; ++j) {
                if (stat_[j] == VarStat::Basic) continue;
                if (lb_[j] && ub_[j] && *lb_[j] == *ub_[j]) continue;  // fixed
                Rational rc = reduced_cost(w, j);
                if (stat_[j] == VarStat::AtLower && rc.sign() < 0) {
                    enter = j; dir = 1; break;
                }
                if (stat_[j] == VarStat::AtUpper && rc.sign() > 0) {
                    enter = j; dir = -1; break;
                }
                if (stat_[j] == VarStat::FreeZero && rc.sign() != 0) {
                    enter = j; dir = rc.sign() < 0 ? 1 : -1; break;
                }
            }
            if (enter < 0) return Phase::Done;

            // Tableau column of the entering variable.
            Vec tcol(m_);
            for (int i = 0; i < m_; ++i) tcol[i] = T_[i][enter];

            // Ratio test: smallest step, ties broken by smallest variable index.
            bool blocked = false;
            Rational best_step;
            int block_row = -1, block_var = -1;
            bool block_to_upper = false;
            for (int i = 0; i < m_; ++i) {
                Rational move = Rational(-dir) * tcol[i];  // d val[basis_i] / d step
                if (move.sign() == 0) continue;
                int bv = basis_[i];
                if (move.sign() > 0) {
                    if (!ub_[bv]) continue;
                    Rational step = (*ub_[bv] - val_[bv]) / move;
                    consider(step, bv, i, true, blocked, best_step, block_row, block_var,
                             block_to_upper);
                } else {
                    if (!lb_[bv]) continue;
                    Rational step = (val_[bv] - *lb_[bv]) / (-move);
                    consider(step, bv, i, false, blocked, best_step, block_row, block_var,
                             block_to_upper);
                }
            }
            if (lb_[enter] && ub_[enter]) {
                Rational range = *ub_[enter] - *lb_[enter];
                consider(range, enter, -1, dir > 0, blocked, best_step, block_row, block_var,
                         block_to_upper);
            }
            if (!blocked) {
                if (phase1) throw Error("internal: phase-1 objective unbounded");
                unbounded_ray_.assign(n_, Rational(0));
                if (enter < n_) unbounded_ray_[enter] = Rational(dir);
                for (int i = 0; i < m_; ++i)
                    if (basis_[i] < n_) unbounded_ray_[basis_[i]] = Rational(-dir) * tcol[i];
                return Phase::Unbounded;
            }

            // Apply the step.
            Rational step = best_step;
            if (step.sign() != 0) {
                for (int i = 0; i < m_; ++i)
                    if (tcol[i] != Rational(0))
                        val_[basis_[i]] -= Rational(dir) * tcol[i] * step;
                val_[enter] += Rational(dir) * step;
            }
            ++pivots_;

            if (block_var == enter && block_row < 0) {
                stat_[enter] = dir > 0 ? VarStat::AtUpper : VarStat::AtLower;
                continue;
            }
            int leave = basis_[block_row];
            stat_[leave] = block_to_upper ? VarStat::AtUpper : VarStat::AtLower;
            val_[leave] = block_to_upper ? *ub_[leave] : *lb_[leave];
            basis_[block_row] = enter;
            stat_[enter] = VarStat::Basic;
            pivot(block_row, enter);
        }
    }

    static void consider(const Rational& step, int var, int row, bool to_upper, bool& blocked,
                         Rational& best_step, int& block_row, int& block_var,
                         bool& block_to_upper) {
        if (step.sign() < 0) {
            // Degenerate beyond-bound basic value cannot occur; guard anyway.
            throw Error("internal: negative ratio step");
        }
        if (!blocked || step < best_step || (step == best_step && var < block_var)) {
            blocked = true;
            best_step = step;
            block_row = row;
            block_var = var;
            block_to_upper = to_upper;
        }
    }

    void pivot(int r, int c) {
        Rational piv = T_[r][c];
        if (piv.sign() == 0) throw Error("internal: zero pivot");
        piv.check_magnitude();
        if (piv != Rational(1)) {
            Rational inv = Rational(1) / piv;
            for (int j = 0; j < ncols_; ++j)
                if (T_[r][j] != Rational(0)) T_[r][j] *= inv;
        }
        for (int i = 0; i < m_; ++i) {
            if (i == r) continue;
            Rational f = T_[i][c];
            if (f.sign() == 0) continue;
            for (int j = 0; j < ncols_; ++j)
                if (T_[r][j] != Rational(0)) T_[i][j] -= f * T_[r][j];
        }
        if ((pivots_ & 15) == 0) {
            for (int i = 0; i < m_; ++i) val_[basis_[i]].check_magnitude();
        }
    }

    LpResult optimal_result() {
        LpResult res;
        res.status = LpStatus::Optimal;
        res.pivots = pivots_;
        res.y.assign(val_.begin(), val_.begin() + n_);
        res.value = dot(p_.d, res.y);

        Vec w = row_prices();
        DualCertificate cert;
        cert.kind = CertKind::OptimalBasis;
        cert.v = w;
        cert.v_lo.assign(n_, Rational(0));
        cert.v_hi.assign(n_, Rational(0));
        for (int j = 0; j < n_; ++j) {
            if (stat_[j] == VarStat::Basic) continue;
            Rational rc = reduced_cost(w, j);
            if (rc.sign() > 0) {
                cert.v_lo[j] = rc;
            } else if (rc.sign() < 0) {
                cert.v_hi[j] = -rc;
            }
        }
        res.cert = std::move(cert);

        CertCheck chk = verify_certificate(p_, res.cert);
        if (!chk.ok) throw Error("internal: optimal certificate failed verification: " + chk.why);
        if (chk.value != res.value)
            throw Error("internal: duality gap " + chk.value.str() + " vs " + res.value.str());
        for (int i = 0; i < m_; ++i) {
            Rational act;
            for (int j = 0; j < n_; ++j)
                if (p_.G[i][j] != Rational(0)) act += p_.G[i][j] * res.y[j];
            if (act < p_.beta[i]) throw Error("internal: primal infeasible at optimum");
        }
        return res;
    }

    LpResult infeasible_result() {
        LpResult res;
        res.status = LpStatus::Infeasible;
        res.pivots = pivots_;
        Vec w = row_prices();  // phase-1 prices
        DualCertificate ray;
        ray.kind = CertKind::InfeasibilityRay;
        ray.v = w;
        ray.v_lo.assign(n_, Rational(0));
        ray.v_hi.assign(n_, Rational(0));
        for (int j = 0; j < n_; ++j) {
            if (stat_[j] == VarStat::Basic) continue;
            Rational rc = reduced_cost(w, j);  // phase-1 cost of structural is 0
            if (rc.sign() > 0) {
                ray.v_lo[j] = rc;
            } else if (rc.sign() < 0) {
                ray.v_hi[j] = -rc;
            }
        }
        res.cert = std::move(ray);
        CertCheck chk = verify_certificate(p_, res.cert);
        if (!chk.ok) throw Error("internal: infeasibility ray failed verification: " + chk.why);
        return res;
    }

    LpResult unbounded_result() {
        LpResult res;
        res.status = LpStatus::Unbounded;
        res.pivots = pivots_;
        res.ray = unbounded_ray_;
        Rational drift = dot(p_.d, res.ray);
        if (drift.sign() >= 0) throw Error("internal: unbounded ray does not improve");
        return res;
    }
};

} // namespace

Rational certificate_value(const DualCertificate& cert, const Vec& beta, const Bounds& lower,
                           const Bounds& upper) {
    Rational value = dot(cert.v, beta);
    for (std::size_t j = 0; j < cert.v_lo.size(); ++j) {
        if (cert.v_lo[j].sign() != 0) {
            if (!lower[j]) throw Error("certificate uses an infinite lower bound");
            value += cert.v_lo[j] * *lower[j];
        }
        if (cert.v_hi[j].sign() != 0) {
            if (!upper[j]) throw Error("certificate uses an infinite upper bound");
            value -= cert.v_hi[j] * *upper[j];
        }
    }
    return value;
}

CertCheck verify_certificate(const LpProblem& p, const DualCertificate& cert) {
    CertCheck out;
    int n = static_cast<int>(p.d.size());
    int m = static_cast<int>(p.G.size());
    if (static_cast<int>(cert.v.size()) != m || static_cast<int>(cert.v_lo.size()) != n ||
        static_cast<int>(cert.v_hi.size()) != n) {
        out.why = "certificate size mismatch";
        return out;
    }
    for (int i = 0; i < m; ++i)
        if (cert.v[i].sign() < 0) {
            out.why = "negative row multiplier";
            return out;
        }
    for (int j = 0; j < n; ++j) {
        if (cert.v_lo[j].sign() < 0 || cert.v_hi[j].sign() < 0) {
            out.why = "negative bound multiplier";
            return out;
        }
        if (cert.v_lo[j].sign() > 0 && !p.lower[j]) {
            out.why = "lower-bound multiplier on an unbounded side";
            return out;
        }
        if (cert.v_hi[j].sign() > 0 && !p.upper[j]) {
            out.why = "upper-bound multiplier on an unbounded side";
            return out;
        }
    }
    bool homogeneous = cert.kind == CertKind::InfeasibilityRay;
    for (int j = 0; j < n; ++j) {
        Rational resid = homogeneous ? Rational(0) : p.d[j];
        for (int i = 0; i < m; ++i)
            if (p.G[i][j] != Rational(0)) resid -= cert.v[i] * p.G[i][j];
        resid -= cert.v_lo[j];
        resid += cert.v_hi[j];
        if (resid.sign() != 0) {
            out.why = "dual residual nonzero at column " + std::to_string(j);
            return out;
        }
    }
    out.value = certificate_value(cert, p.beta, p.lower, p.upper);
    if (homogeneous && out.value.sign() <= 0) {
        out.why = "infeasibility ray value not positive";
        return out;
    }
    out.ok = true;
    return out;
}

LpResult solve_lp(const LpProblem& p, const LpLimits& lim) {
    int n = static_cast<int>(p.d.size());
    if (static_cast<int>(p.lower.size()) != n || static_cast<int>(p.upper.size()) != n)
        throw DimensionError("solve_lp: bound length mismatch");
    if (p.G.size() != p.beta.size()) throw DimensionError("solve_lp: rhs length mismatch");
    for (const Vec& row : p.G)
        if (static_cast<int>(row.size()) != n) throw DimensionError("solve_lp: row length mismatch");
    Simplex s(p, lim);
    return s.run();
}

DualCertificate extend_infeasible_dual(const LpProblem& p, const DualCertificate& ray,
                                       const Rational& target) {
    if (ray.kind != CertKind::InfeasibilityRay)
        throw Error("extend_infeasible_dual needs an infeasibility ray");
    CertCheck rchk = verify_certificate(p, ray);
    if (!rchk.ok) throw Error("extend_infeasible_dual: bad ray: " + rchk.why);

    int n = static_cast<int>(p.d.size());
    int m = static_cast<int>(p.G.size());

    // Dual-feasible base point. First try v = 0 with bound patching; if some
    // objective coefficient has no finite bound to lean on, solve a
    // feasibility-shifted copy of the problem and use its optimal certificate.
    DualCertificate base;
    base.kind = CertKind::OptimalBasis;
    base.v.assign(m, Rational(0));
    base.v_lo.assign(n, Rational(0));
    base.v_hi.assign(n, Rational(0));
    bool patched = true;
    for (int j = 0; j < n; ++j) {
        if (p.d[j].sign() > 0) {
            if (!p.lower[j]) {
                patched = false;
                break;
            }
            base.v_lo[j] = p.d[j];
        } else if (p.d[j].sign() < 0) {
            if (!p.upper[j]) {
                patched = false;
                break;
            }
            base.v_hi[j] = -p.d[j];
        }
    }
    if (!patched) {
        LpProblem shifted = p;
        Vec y0(n, Rational(0));
        for (int j = 0; j < n; ++j) {
            if (p.lower[j]) {
                y0[j] = *p.lower[j];
            } else if (p.upper[j]) {
                y0[j] = *p.upper[j];
            }
        }
        shifted.beta = mat_vec(p.G, y0);
        for (Rational& b : shifted.beta) b -= Rational(1);
        LpResult aux = solve_lp(shifted);
        if (aux.status == LpStatus::Unbounded)
            throw UnboundedError("value function unbounded below; no dual-feasible point exists");
        if (aux.status != LpStatus::Optimal)
            throw Error("internal: feasibility-shifted LP did not solve");
        base = aux.cert;
    }

    Rational base_val = certificate_value(base, p.beta, p.lower, p.upper);
    Rational ray_val = rchk.value;
    Rational t(0);
    if (base_val <= target) {
        t = ((target - base_val) / ray_val).floor() + Rational(1);
        if (t.sign() < 0) t = Rational(0);
    }
    DualCertificate out;
    out.kind = CertKind::InfeasibilityExtended;
    out.v.resize(m);
    out.v_lo.resize(n);
    out.v_hi.resize(n);
    for (int i = 0; i < m; ++i) out.v[i] = base.v[i] + t * ray.v[i];
    for (int j = 0; j < n; ++j) {
        out.v_lo[j] = base.v_lo[j] + t * ray.v_lo[j];
        out.v_hi[j] = base.v_hi[j] + t * ray.v_hi[j];
    }
    CertCheck chk = verify_certificate(p, out);
    if (!chk.ok) throw Error("internal: extended certificate failed verification: " + chk.why);
    if (chk.value <= target)
        throw Error("internal: extended certificate does not clear the target");
    return out;
}

RowExpansion RowExpansion::make(const std::vector<RowSense>& sense) {
    RowExpansion e;
    e.orig_m = static_cast<int>(sense.size());
    for (int i = 0; i < e.orig_m; ++i) {
        e.orig.push_back(i);
        e.sgn.push_back(1);
        if (sense[i] == RowSense::Eq) {
            e.orig.push_back(i);
            e.sgn.push_back(-1);
        }
    }
    return e;
}

Mat RowExpansion::expand_rows(const Mat& G) const {
    Mat out;
    out.reserve(orig.size());
    for (std::size_t k = 0; k < orig.size(); ++k) {
        Vec row = G.at(orig[k]);
        if (sgn[k] < 0)
            for (Rational& v : row) v = -v;
        out.push_back(std::move(row));
    }
    return out;
}

Vec RowExpansion::expand_rhs(const Vec& beta) const {
    Vec out;
    out.reserve(orig.size());
    for (std::size_t k = 0; k < orig.size(); ++k)
        out.push_back(sgn[k] < 0 ? -beta.at(orig[k]) : beta.at(orig[k]));
    return out;
}

Vec RowExpansion::fold(const Vec& v_expanded) const {
    if (v_expanded.size() != orig.size()) throw DimensionError("fold: multiplier length mismatch");
    Vec out(orig_m, Rational(0));
    for (std::size_t k = 0; k < orig.size(); ++k)
        out[orig[k]] += Rational(sgn[k]) * v_expanded[k];
    return out;
}

} // namespace msmilp
