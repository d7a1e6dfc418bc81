#include "msmilp/bnb.hpp"

#include <json.hpp>

#include <algorithm>
#include <queue>
#include <sstream>
#include <unordered_map>

namespace msmilp {

using nlohmann::json;

SubMilp SubMilp::second_stage(const TwoStageInstance& inst) {
    SubMilp sub;
    sub.d = inst.d2;
    sub.G = inst.G2;
    sub.sense = inst.sense2;
    sub.r = inst.r2;
    sub.lb = inst.y_lb;
    sub.ub = inst.y_ub;
    return sub;
}

bool operator==(const AffinePiece& a, const AffinePiece& b) {
    return a.slope == b.slope && a.constant == b.constant;
}

BnbTree::BnbTree(SubMilp sub) : sub_(std::move(sub)) {
    if (static_cast<int>(sub_.sense.size()) != sub_.m())
        throw DimensionError("tree: sense count != row count");
    if (static_cast<int>(sub_.lb.size()) != sub_.n() ||
        static_cast<int>(sub_.ub.size()) != sub_.n())
        throw DimensionError("tree: bound length != column count");
    if (sub_.r < 0 || sub_.r > sub_.n()) throw DimensionError("tree: integer count out of range");
    for (int j = 0; j < sub_.r; ++j) {
        if (!sub_.lb[j] || !sub_.ub[j])
            throw AssumptionError("integer variable " + std::to_string(j) +
                                  " must carry finite bounds for branching to terminate");
        sub_.lb[j] = sub_.lb[j]->ceil();
        sub_.ub[j] = sub_.ub[j]->floor();
    }
    ex_ = RowExpansion::make(sub_.sense);
    exG_ = ex_.expand_rows(sub_.G);

    BnbNode root;
    root.id = 0;
    root.lb = sub_.lb;
    root.ub = sub_.ub;
    nodes_.push_back(std::move(root));
}

std::vector<int> BnbTree::leaf_ids() const {
    std::vector<int> out;
    for (const BnbNode& nd : nodes_)
        if (nd.children.empty()) out.push_back(nd.id);
    return out;
}

LpProblem BnbTree::node_lp(const BnbNode& nd, const Vec& beta_expanded) const {
    LpProblem p;
    p.d = sub_.d;
    p.G = exG_;
    p.beta = beta_expanded;
    p.lower = nd.lb;
    p.upper = nd.ub;
    return p;
}

AffinePiece BnbTree::fold_piece(const DualCertificate& cert, const BnbNode& nd) const {
    AffinePiece piece;
    piece.slope = ex_.fold(cert.v);
    piece.constant = Rational(0);
    for (int j = 0; j < sub_.n(); ++j) {
        if (cert.v_lo[j] != Rational(0)) piece.constant += cert.v_lo[j] * *nd.lb[j];
        if (cert.v_hi[j] != Rational(0)) piece.constant -= cert.v_hi[j] * *nd.ub[j];
    }
    return piece;
}

void BnbTree::record_cert(BnbNode& nd, const DualCertificate& cert) {
    AffinePiece piece = fold_piece(cert, nd);
    if (!nd.pieces.empty() && nd.pieces.back() == piece) return;  // same evidence twice
    nd.pieces.push_back(std::move(piece));
    nd.certs.push_back(cert);
}

RefineResult BnbTree::refine(const Vec& beta, const BnbLimits& lim,
                             const std::optional<Rational>& infeas_target) {
    if (static_cast<int>(beta.size()) != sub_.m())
        throw DimensionError("refine: beta length != row count");
    Vec exb = ex_.expand_rhs(beta);

    struct QEntry {
        ExtRat key;
        int id;
        bool stale;
    };
    auto later = [](const QEntry& a, const QEntry& b) {
        if (a.key != b.key) return a.key > b.key;
        return a.id > b.id;
    };
    std::priority_queue<QEntry, std::vector<QEntry>, decltype(later)> queue(later);

    ExtRat best = ExtRat::inf();
    Vec best_y;
    int best_leaf = -1;
    long lp_solves = 0;
    std::vector<int> infeasible_now;
    std::unordered_map<int, DualCertificate> rays;
    std::unordered_map<int, Vec> fractional_y;

    // Solve one node's LP at this rhs, update the incumbent, and queue the
    // node again only when branching it could still pay off.
    auto solve_node = [&](int id) {
        BnbNode& nd = nodes_[id];
        LpResult res = solve_lp(node_lp(nd, exb), lim.lp);
        ++lp_solves;
        if (res.status == LpStatus::Unbounded)
            throw UnboundedError("value function is unbounded below at the queried rhs");
        if (res.status == LpStatus::Infeasible) {
            nd.status = NodeStatus::InfeasibleLeaf;
            nd.last_value = ExtRat::inf();
            infeasible_now.push_back(id);
            rays[id] = res.cert;
            return;
        }
        nd.last_value = res.value;
        record_cert(nd, res.cert);
        bool integral = true;
        for (int j = 0; j < sub_.r; ++j) {
            if (!res.y[j].is_integer()) {
                integral = false;
                break;
            }
        }
        if (integral) {
            nd.status = NodeStatus::IntegralLeaf;
            if (ExtRat(res.value) < best) {
                best = res.value;
                best_y = res.y;
                best_leaf = id;
            }
            return;  // value equals bound here; nothing to branch
        }
        if (ExtRat(res.value) >= best) {
            nd.status = NodeStatus::PrunedByBound;  // the incumbent only improves from here
            return;
        }
        nd.status = NodeStatus::OpenLeaf;
        fractional_y[id] = res.y;
        queue.push({ExtRat(res.value), id, false});
    };

    auto make_child = [&](int parent, int var, int side, const Rational& bound) {
        if (static_cast<long>(nodes_.size()) >= lim.max_nodes)
            throw NodeLimit("node limit of " + std::to_string(lim.max_nodes) + " reached");
        BnbNode child;
        child.id = static_cast<int>(nodes_.size());
        child.parent = parent;
        child.depth = nodes_[parent].depth + 1;
        child.branch_var = var;
        child.branch_side = side;
        child.branch_bound = bound;
        child.lb = nodes_[parent].lb;
        child.ub = nodes_[parent].ub;
        if (side < 0)
            child.ub[var] = bound;
        else
            child.lb[var] = bound;
        int id = child.id;
        nodes_[parent].children.push_back(id);
        nodes_.push_back(std::move(child));
        return id;
    };

    // Every current leaf enters the queue under its newest stored bound,
    // re-read at the new rhs. Leaves never solved before rank lowest.
    for (const BnbNode& nd : nodes_) {
        if (!nd.children.empty()) continue;
        ExtRat key = nd.pieces.empty() ? ExtRat::ninf() : ExtRat(nd.pieces.back().eval(beta));
        queue.push({key, nd.id, true});
    }

    while (!queue.empty()) {
        QEntry top = queue.top();
        if (top.key >= best) break;  // best-first: everything left is already bounded out
        queue.pop();
        if (top.stale) {
            solve_node(top.id);  // stored bound may be loose at this rhs; re-anchor it
            continue;
        }
        // Freshly solved fractional node strictly below the incumbent:
        // split on the most fractional integer variable, lowest index wins.
        const Vec& y = fractional_y[top.id];
        int var = -1;
        Rational best_dist(-1);
        for (int j = 0; j < sub_.r; ++j) {
            Rational frac = y[j] - y[j].floor();
            if (frac == Rational(0)) continue;
            Rational dist = frac <= Rational(1) - frac ? frac : Rational(1) - frac;
            if (dist > best_dist) {
                best_dist = dist;
                var = j;
            }
        }
        if (var < 0) throw Error("internal: fractional queue entry with integral point");
        Rational pi0 = y[var].floor();
        int down = make_child(top.id, var, -1, pi0);
        int up = make_child(top.id, var, +1, pi0 + 1);
        nodes_[top.id].status = NodeStatus::Branched;
        solve_node(down);
        solve_node(up);
    }

    // Nodes still queued fresh were solved this round but bounded out before
    // branching; record that.
    while (!queue.empty()) {
        QEntry e = queue.top();
        queue.pop();
        if (!e.stale && nodes_[e.id].children.empty() &&
            nodes_[e.id].status == NodeStatus::OpenLeaf)
            nodes_[e.id].status = NodeStatus::PrunedByBound;
    }

    // Leaves infeasible at this rhs get their ray folded into an affine
    // certificate that clears the final incumbent (or the caller's target),
    // so the leaf-min function stays valid and tight here.
    if (!infeasible_now.empty()) {
        Rational target(0);
        if (best.finite() && best.value() > target) target = best.value();
        if (infeas_target && *infeas_target > target) target = *infeas_target;
        for (int id : infeasible_now) {
            BnbNode& nd = nodes_[id];
            DualCertificate ext = extend_infeasible_dual(node_lp(nd, exb), rays[id], target);
            record_cert(nd, ext);
        }
    }

    RefineResult out;
    out.lp_solves = lp_solves;
    if (!best.finite()) {
        out.status = SolveStatus::Infeasible;
        out.value = ExtRat::inf();
        return out;
    }
    out.status = SolveStatus::Optimal;
    out.value = best;
    out.y = best_y;
    out.incumbent_leaf = best_leaf;
    strong_points_.push_back({beta, best.value()});

    // Termination audit: the minimum of the leaf bounds at this rhs must
    // equal the incumbent value exactly.
    ExtRat min_bound = ExtRat::inf();
    for (int id : leaf_ids()) {
        const BnbNode& nd = nodes_[id];
        if (nd.pieces.empty()) throw Error("internal: refined tree kept an unsolved leaf");
        ExtRat v(nd.pieces.back().eval(beta));
        if (v < min_bound) min_bound = v;
    }
    if (min_bound != best) throw Error("internal: leaf bound minimum != incumbent value");
    return out;
}

MilpResult solve_milp(const SubMilp& sub, const Vec& beta, const BnbLimits& lim) {
    BnbTree tree(sub);
    RefineResult r = tree.refine(beta, lim);
    MilpResult out{r.status, Rational(0), {}, std::move(tree)};
    if (r.status == SolveStatus::Optimal) {
        out.value = r.value.value();
        out.y = r.y;
    }
    return out;
}

DualFunction extract_dual_function(const BnbTree& tree, DualFnMode mode) {
    DualFunction fn;
    fn.mode = mode;
    for (int id : tree.leaf_ids()) {
        const BnbNode& leaf = tree.node(id);
        if (leaf.pieces.empty())
            throw TreeIncompleteError("leaf " + std::to_string(id) +
                                      " has no certificate; refine the tree first");
        std::vector<AffinePiece> group;
        if (mode == DualFnMode::LeafMin) {
            group.push_back(leaf.pieces.back());
        } else {
            for (int cur = id; cur >= 0; cur = tree.node(cur).parent) {
                const BnbNode& nd = tree.node(cur);
                group.insert(group.end(), nd.pieces.begin(), nd.pieces.end());
            }
        }
        fn.groups.push_back(std::move(group));
    }
    return fn;
}

ExtRat eval_dual_function(const DualFunction& fn, const Vec& beta) {
    ExtRat result = ExtRat::inf();
    for (const auto& group : fn.groups) {
        ExtRat group_max = ExtRat::ninf();
        for (const AffinePiece& piece : group) {
            ExtRat v(piece.eval(beta));
            if (v > group_max) group_max = v;
        }
        if (group_max < result) result = group_max;
    }
    return result;
}

std::string dual_function_csv(const DualFunction& fn) {
    std::ostringstream os;
    std::size_t width = 0;
    for (const auto& g : fn.groups)
        for (const AffinePiece& p : g) width = std::max(width, p.slope.size());
    os << "mode,group,piece";
    for (std::size_t k = 0; k < width; ++k)
        os << ",slope_" << k << ",slope_" << k << "_decimal";
    os << ",constant,constant_decimal\n";
    const char* mode = fn.mode == DualFnMode::LeafMin ? "leafmin" : "path";
    for (std::size_t g = 0; g < fn.groups.size(); ++g) {
        for (std::size_t k = 0; k < fn.groups[g].size(); ++k) {
            const AffinePiece& p = fn.groups[g][k];
            os << mode << "," << g << "," << k;
            for (std::size_t i = 0; i < width; ++i) {
                Rational s = i < p.slope.size() ? p.slope[i] : Rational(0);
                os << "," << s.str() << "," << s.to_double();
            }
            os << "," << p.constant.str() << "," << p.constant.to_double() << "\n";
        }
    }
    return os.str();
}

namespace {

json rat_str(const Rational& r) { return json(r.str()); }

json vec_json(const Vec& v) {
    json a = json::array();
    for (const Rational& r : v) a.push_back(rat_str(r));
    return a;
}

json bounds_json(const Bounds& b) {
    json a = json::array();
    for (const OptBound& o : b) a.push_back(o ? json(o->str()) : json(nullptr));
    return a;
}

Vec vec_parse(const json& j) {
    Vec v;
    for (const auto& e : j) v.push_back(Rational::parse(e.get<std::string>()));
    return v;
}

Bounds bounds_parse(const json& j) {
    Bounds b;
    for (const auto& e : j)
        b.push_back(e.is_null() ? OptBound{} : OptBound{Rational::parse(e.get<std::string>())});
    return b;
}

const char* status_name(NodeStatus s) {
    switch (s) {
        case NodeStatus::OpenLeaf: return "open";
        case NodeStatus::Branched: return "branched";
        case NodeStatus::IntegralLeaf: return "integral";
        case NodeStatus::InfeasibleLeaf: return "infeasible";
        case NodeStatus::PrunedByBound: return "pruned";
    }
    return "open";
}

NodeStatus status_parse(const std::string& s) {
    if (s == "open") return NodeStatus::OpenLeaf;
    if (s == "branched") return NodeStatus::Branched;
    if (s == "integral") return NodeStatus::IntegralLeaf;
    if (s == "infeasible") return NodeStatus::InfeasibleLeaf;
    if (s == "pruned") return NodeStatus::PrunedByBound;
    throw ParseError("unknown node status '" + s + "'");
}

const char* cert_kind_name(CertKind k) {
    switch (k) {
        case CertKind::OptimalBasis: return "optimal";
        case CertKind::InfeasibilityRay: return "ray";
        case CertKind::InfeasibilityExtended: return "extended";
    }
    return "optimal";
}

CertKind cert_kind_parse(const std::string& s) {
    if (s == "optimal") return CertKind::OptimalBasis;
    if (s == "ray") return CertKind::InfeasibilityRay;
    if (s == "extended") return CertKind::InfeasibilityExtended;
    throw ParseError("unknown certificate kind '" + s + "'");
}

} // namespace

std::string BnbTree::serialize() const {
    json j;
    j["format"] = "msmilp-bnb-tree";
    j["version"] = 1;
    json sub;
    sub["d"] = vec_json(sub_.d);
    json rows = json::array();
    for (const Vec& row : sub_.G) rows.push_back(vec_json(row));
    sub["G"] = rows;
    json sense = json::array();
    for (RowSense s : sub_.sense) sense.push_back(s == RowSense::Eq ? "=" : ">=");
    sub["sense"] = sense;
    sub["r"] = sub_.r;
    sub["lb"] = bounds_json(sub_.lb);
    sub["ub"] = bounds_json(sub_.ub);
    j["sub"] = sub;

    json nodes = json::array();
    for (const BnbNode& nd : nodes_) {
        json n;
        n["id"] = nd.id;
        n["parent"] = nd.parent;
        n["depth"] = nd.depth;
        n["children"] = nd.children;
        n["branch_var"] = nd.branch_var;
        n["branch_side"] = nd.branch_side;
        n["branch_bound"] = nd.branch_bound.str();
        n["lb"] = bounds_json(nd.lb);
        n["ub"] = bounds_json(nd.ub);
        n["status"] = status_name(nd.status);
        json pieces = json::array();
        for (const AffinePiece& p : nd.pieces) {
            json pj;
            pj["slope"] = vec_json(p.slope);
            pj["constant"] = p.constant.str();
            pieces.push_back(pj);
        }
        n["pieces"] = pieces;
        json certs = json::array();
        for (const DualCertificate& c : nd.certs) {
            json cj;
            cj["kind"] = cert_kind_name(c.kind);
            cj["v"] = vec_json(c.v);
            cj["v_lo"] = vec_json(c.v_lo);
            cj["v_hi"] = vec_json(c.v_hi);
            certs.push_back(cj);
        }
        n["certs"] = certs;
        n["last_value"] = nd.last_value.str();
        nodes.push_back(n);
    }
    j["nodes"] = nodes;

    json sp = json::array();
    for (const StrongPoint& s : strong_points_) {
        json e;
        e["beta"] = vec_json(s.beta);
        e["value"] = s.value.str();
        sp.push_back(e);
    }
    j["strong_points"] = sp;
    return j.dump(2) + "\n";
}

BnbTree BnbTree::deserialize(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ParseError(std::string("invalid tree snapshot: ") + e.what());
    }
    if (!j.is_object() || j.value("format", "") != "msmilp-bnb-tree")
        throw ParseError("not a tree snapshot file");
    if (j.value("version", 0) != 1) throw ParseError("unsupported tree snapshot version");

    const json& sj = j.at("sub");
    SubMilp sub;
    sub.d = vec_parse(sj.at("d"));
    for (const auto& row : sj.at("G")) sub.G.push_back(vec_parse(row));
    for (const auto& s : sj.at("sense"))
        sub.sense.push_back(s.get<std::string>() == "=" ? RowSense::Eq : RowSense::Ge);
    sub.r = sj.at("r").get<int>();
    sub.lb = bounds_parse(sj.at("lb"));
    sub.ub = bounds_parse(sj.at("ub"));

    BnbTree tree(sub);
    tree.nodes_.clear();
    for (const auto& nj : j.at("nodes")) {
        BnbNode nd;
        nd.id = nj.at("id").get<int>();
        nd.parent = nj.at("parent").get<int>();
        nd.depth = nj.at("depth").get<int>();
        nd.children = nj.at("children").get<std::vector<int>>();
        nd.branch_var = nj.at("branch_var").get<int>();
        nd.branch_side = nj.at("branch_side").get<int>();
        nd.branch_bound = Rational::parse(nj.at("branch_bound").get<std::string>());
        nd.lb = bounds_parse(nj.at("lb"));
        nd.ub = bounds_parse(nj.at("ub"));
        nd.status = status_parse(nj.at("status").get<std::string>());
        for (const auto& pj : nj.at("pieces")) {
            AffinePiece p;
            p.slope = vec_parse(pj.at("slope"));
            p.constant = Rational::parse(pj.at("constant").get<std::string>());
            nd.pieces.push_back(std::move(p));
        }
        for (const auto& cj : nj.at("certs")) {
            DualCertificate c;
            c.kind = cert_kind_parse(cj.at("kind").get<std::string>());
            c.v = vec_parse(cj.at("v"));
            c.v_lo = vec_parse(cj.at("v_lo"));
            c.v_hi = vec_parse(cj.at("v_hi"));
            nd.certs.push_back(std::move(c));
        }
        std::string lv = nj.at("last_value").get<std::string>();
        if (lv == "inf")
            nd.last_value = ExtRat::inf();
        else if (lv == "-inf")
            nd.last_value = ExtRat::ninf();
        else
            nd.last_value = ExtRat(Rational::parse(lv));
        tree.nodes_.push_back(std::move(nd));
    }
    for (const auto& ej : j.at("strong_points")) {
        StrongPoint s;
        s.beta = vec_parse(ej.at("beta"));
        s.value = Rational::parse(ej.at("value").get<std::string>());
        tree.strong_points_.push_back(std::move(s));
    }
    if (tree.nodes_.empty()) throw ParseError("tree snapshot has no nodes");
    return tree;
}

bool operator==(const BnbTree& a, const BnbTree& b) {
    auto node_eq = [](const BnbNode& x, const BnbNode& y) {
        auto cert_eq = [](const DualCertificate& p, const DualCertificate& q) {
            return p.kind == q.kind && p.v == q.v && p.v_lo == q.v_lo && p.v_hi == q.v_hi;
        };
        if (!(x.id == y.id && x.parent == y.parent && x.depth == y.depth &&
              x.children == y.children && x.branch_var == y.branch_var &&
              x.branch_side == y.branch_side && x.branch_bound == y.branch_bound &&
              x.lb == y.lb && x.ub == y.ub && x.status == y.status && x.pieces == y.pieces &&
              x.last_value == y.last_value && x.certs.size() == y.certs.size()))
            return false;
        for (std::size_t k = 0; k < x.certs.size(); ++k)
            if (!cert_eq(x.certs[k], y.certs[k])) return false;
        return true;
    };
    if (!(a.sub_.d == b.sub_.d && a.sub_.G == b.sub_.G && a.sub_.sense == b.sub_.sense &&
          a.sub_.r == b.sub_.r && a.sub_.lb == b.sub_.lb && a.sub_.ub == b.sub_.ub))
        return false;
    if (a.nodes_.size() != b.nodes_.size()) return false;
    for (std::size_t k = 0; k < a.nodes_.size(); ++k)
        if (!node_eq(a.nodes_[k], b.nodes_[k])) return false;
    if (a.strong_points_.size() != b.strong_points_.size()) return false;
    for (std::size_t k = 0; k < a.strong_points_.size(); ++k)
        if (a.strong_points_[k].beta != b.strong_points_[k].beta ||
            a.strong_points_[k].value != b.strong_points_[k].value)
            return false;
    return true;
}

} // namespace msmilp
