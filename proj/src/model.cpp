#include "msmilp/model.hpp"

#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

namespace msmilp {

using nlohmann::json;

namespace {

Rational num_from_json(const json& j, const std::string& where) {
    if (j.is_string()) return Rational::parse(j.get<std::string>());
    if (j.is_number_integer()) return Rational(j.get<long>());
    if (j.is_number_unsigned()) return Rational(static_cast<long>(j.get<unsigned long>()));
    if (j.is_number_float())
        throw ParseError(where + ": floating point literals are not exact; use \"p/q\" strings");
    throw ParseError(where + ": expected a number or \"p/q\" string");
}

OptBound bound_from_json(const json& j, const std::string& where) {
    if (j.is_null()) return std::nullopt;
    if (j.is_string()) {
        std::string s = j.get<std::string>();
        if (s == "inf" || s == "-inf") return std::nullopt;
    }
    return num_from_json(j, where);
}

Vec vec_from_json(const json& j, std::size_t len, const std::string& where) {
    if (!j.is_array()) throw ParseError(where + ": expected an array");
    if (j.size() != len)
        throw DimensionError(where + ": expected " + std::to_string(len) + " entries, got " +
                             std::to_string(j.size()));
    Vec v;
    v.reserve(len);
    for (std::size_t i = 0; i < j.size(); ++i)
        v.push_back(num_from_json(j[i], where + "[" + std::to_string(i) + "]"));
    return v;
}

Mat mat_from_json(const json& j, std::size_t rows, std::size_t cols, const std::string& where) {
    if (!j.is_array()) throw ParseError(where + ": expected an array of rows");
    if (j.size() != rows)
        throw DimensionError(where + ": expected " + std::to_string(rows) + " rows, got " +
                             std::to_string(j.size()));
    Mat m;
    m.reserve(rows);
    for (std::size_t i = 0; i < j.size(); ++i)
        m.push_back(vec_from_json(j[i], cols, where + "[" + std::to_string(i) + "]"));
    return m;
}

Bounds bounds_from_json(const json& j, std::size_t len, const std::string& where) {
    if (!j.is_array()) throw ParseError(where + ": expected an array");
    if (j.size() != len)
        throw DimensionError(where + ": expected " + std::to_string(len) + " entries, got " +
                             std::to_string(j.size()));
    Bounds b;
    b.reserve(len);
    for (std::size_t i = 0; i < j.size(); ++i)
        b.push_back(bound_from_json(j[i], where + "[" + std::to_string(i) + "]"));
    return b;
}

json rat_to_json(const Rational& r) {
    // Small integers stay plain JSON numbers; everything else is a string.
    if (r.is_integer() && r.abs() <= Rational(1000000000L)) return json(r.to_long());
    return json(r.str());
}

json vec_to_json(const Vec& v) {
    json a = json::array();
    for (const Rational& r : v) a.push_back(rat_to_json(r));
    return a;
}

json mat_to_json(const Mat& m) {
    json a = json::array();
    for (const Vec& row : m) a.push_back(vec_to_json(row));
    return a;
}

json bounds_to_json(const Bounds& b) {
    json a = json::array();
    for (const OptBound& o : b) a.push_back(o ? rat_to_json(*o) : json(nullptr));
    return a;
}

int int_field(const json& j, const char* key) {
    if (!j.contains(key)) throw ParseError(std::string("missing field '") + key + "'");
    if (!j[key].is_number_integer() && !j[key].is_number_unsigned())
        throw ParseError(std::string("field '") + key + "' must be an integer");
    long v = j[key].get<long>();
    if (v < 0) throw ParseError(std::string("field '") + key + "' must be nonnegative");
    return static_cast<int>(v);
}

std::vector<std::string> senses_from_json(const json& j, std::size_t rows, const std::string& where) {
    if (!j.is_array()) throw ParseError(where + ": expected an array of senses");
    if (j.size() != rows)
        throw DimensionError(where + ": expected " + std::to_string(rows) + " senses");
    std::vector<std::string> out;
    for (const auto& e : j) {
        if (!e.is_string()) throw ParseError(where + ": senses must be strings");
        std::string s = e.get<std::string>();
        if (s != ">=" && s != "<=" && s != "=")
            throw ParseError(where + ": sense must be \">=\", \"<=\" or \"=\"");
        out.push_back(s);
    }
    return out;
}

} // namespace

Vec Binarization::restore(const Vec& x) const {
    Vec out(orig_n1);
    for (const Col& col : cols) {
        Rational v = col.offset;
        for (std::size_t k = 0; k < col.cols.size(); ++k)
            v += col.weights[k] * x.at(col.cols[k]);
        out.at(col.orig) = v;
    }
    return out;
}

Vec TwoStageInstance::beta(int omega, const Vec& x) const {
    const Scenario& sc = scenarios.at(omega);
    Vec b = sc.b2;
    Vec ax = mat_vec(sc.A2, x);
    for (int i = 0; i < m2; ++i) b[i] -= ax[i];
    return b;
}

std::vector<int> TwoStageInstance::linking_columns(int omega) const {
    std::vector<int> cols;
    const Scenario& sc = scenarios.at(omega);
    for (int jcol = 0; jcol < n1; ++jcol) {
        for (int i = 0; i < m2; ++i) {
            if (sc.A2[i][jcol] != Rational(0)) {
                cols.push_back(jcol);
                break;
            }
        }
    }
    return cols;
}

std::vector<int> TwoStageInstance::linking_columns() const {
    std::set<int> cols;
    for (std::size_t w = 0; w < scenarios.size(); ++w) {
        auto c = linking_columns(static_cast<int>(w));
        cols.insert(c.begin(), c.end());
    }
    return {cols.begin(), cols.end()};
}

void validate_instance(const TwoStageInstance& inst) {
    if (inst.n1 < 1) throw AssumptionError("instance needs at least one first-stage variable");
    if (inst.r1 < 0 || inst.r1 > inst.n1 || inst.r2 < 0 || inst.r2 > inst.n2)
        throw DimensionError("integrality split out of range");
    if (static_cast<int>(inst.c.size()) != inst.n1) throw DimensionError("c length != n1");
    if (static_cast<int>(inst.A1.size()) != inst.m1) throw DimensionError("A1 rows != m1");
    for (const Vec& row : inst.A1)
        if (static_cast<int>(row.size()) != inst.n1) throw DimensionError("A1 row length != n1");
    if (static_cast<int>(inst.b1.size()) != inst.m1) throw DimensionError("b1 length != m1");
    if (static_cast<int>(inst.x_lb.size()) != inst.n1 ||
        static_cast<int>(inst.x_ub.size()) != inst.n1)
        throw DimensionError("x bound length != n1");
    if (static_cast<int>(inst.d1.size()) != inst.n2 ||
        static_cast<int>(inst.d2.size()) != inst.n2)
        throw DimensionError("objective length != n2");
    if (static_cast<int>(inst.G2.size()) != inst.m2) throw DimensionError("G2 rows != m2");
    for (const Vec& row : inst.G2)
        if (static_cast<int>(row.size()) != inst.n2) throw DimensionError("G2 row length != n2");
    if (static_cast<int>(inst.sense2.size()) != inst.m2)
        throw DimensionError("second-stage sense count != m2");
    if (static_cast<int>(inst.y_lb.size()) != inst.n2 ||
        static_cast<int>(inst.y_ub.size()) != inst.n2)
        throw DimensionError("y bound length != n2");
    if (inst.scenarios.empty()) throw AssumptionError("instance needs at least one scenario");

    Rational psum;
    for (std::size_t w = 0; w < inst.scenarios.size(); ++w) {
        const Scenario& sc = inst.scenarios[w];
        if (sc.p.sign() <= 0) throw AssumptionError("scenario probabilities must be positive");
        psum += sc.p;
        if (static_cast<int>(sc.A2.size()) != inst.m2)
            throw DimensionError("scenario A2 rows != m2");
        for (const Vec& row : sc.A2)
            if (static_cast<int>(row.size()) != inst.n1)
                throw DimensionError("scenario A2 row length != n1");
        if (static_cast<int>(sc.b2.size()) != inst.m2)
            throw DimensionError("scenario b2 length != m2");
    }
    if (psum != Rational(1)) throw AssumptionError("scenario probabilities must sum to 1");

    for (int jcol = 0; jcol < inst.n1; ++jcol) {
        bool integer = jcol < inst.r1;
        const OptBound& lb = inst.x_lb[jcol];
        const OptBound& ub = inst.x_ub[jcol];
        if (integer) {
            if (!lb || !ub)
                throw AssumptionError("integer first-stage variable " + std::to_string(jcol) +
                                      " must carry finite bounds");
            if (!lb->is_integer() || !ub->is_integer())
                throw AssumptionError("integer first-stage variable " + std::to_string(jcol) +
                                      " has non-integral bounds");
        }
        if (lb && ub && *lb > *ub)
            throw AssumptionError("first-stage variable " + std::to_string(jcol) +
                                  " has crossing bounds");
    }
    for (int jcol = 0; jcol < inst.n2; ++jcol) {
        bool integer = jcol < inst.r2;
        const OptBound& lb = inst.y_lb[jcol];
        const OptBound& ub = inst.y_ub[jcol];
        if (integer) {
            if (!lb || !ub)
                throw AssumptionError("integer second-stage variable " + std::to_string(jcol) +
                                      " must carry finite bounds");
            if (!lb->is_integer() || !ub->is_integer())
                throw AssumptionError("integer second-stage variable " + std::to_string(jcol) +
                                      " has non-integral bounds");
        }
        if (lb && ub && *lb > *ub)
            throw AssumptionError("second-stage variable " + std::to_string(jcol) +
                                  " has crossing bounds");
    }

    for (int jcol : inst.linking_columns())
        if (jcol >= inst.r1)
            throw AssumptionError("first-stage variable " + std::to_string(jcol) +
                                  " is continuous but appears in A2; linking variables must be integer");
}

TwoStageInstance parse_instance(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& e) {
        throw ParseError(std::string("invalid JSON: ") + e.what());
    }
    if (!j.is_object()) throw ParseError("instance file must be a JSON object");

    static const std::set<std::string> known = {
        "n1", "r1", "m1", "c", "A1", "b1", "x_lb", "x_ub",
        "n2", "r2", "m2", "d1", "d2", "G2", "y_lb", "y_ub",
        "scenarios", "objective_sense_stage1", "objective_sense_stage2",
        "row_sense_stage1", "row_sense_stage2", "name"};
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!known.count(it.key())) throw ParseError("unknown field '" + it.key() + "'");

    TwoStageInstance inst;
    inst.n1 = int_field(j, "n1");
    inst.r1 = int_field(j, "r1");
    int m1_file = int_field(j, "m1");
    inst.n2 = int_field(j, "n2");
    inst.r2 = int_field(j, "r2");
    inst.m2 = int_field(j, "m2");

    inst.c = vec_from_json(j.contains("c") ? j["c"] : json::array(), inst.n1, "c");
    Mat A1 = mat_from_json(j.contains("A1") ? j["A1"] : json::array(), m1_file, inst.n1, "A1");
    Vec b1 = vec_from_json(j.contains("b1") ? j["b1"] : json::array(), m1_file, "b1");
    inst.x_lb = bounds_from_json(j.contains("x_lb") ? j["x_lb"] : json::array(), inst.n1, "x_lb");
    inst.x_ub = bounds_from_json(j.contains("x_ub") ? j["x_ub"] : json::array(), inst.n1, "x_ub");

    inst.d1 = vec_from_json(j.contains("d1") ? j["d1"] : json::array(), inst.n2, "d1");
    inst.d2 = vec_from_json(j.contains("d2") ? j["d2"] : json::array(), inst.n2, "d2");
    inst.G2 = mat_from_json(j.contains("G2") ? j["G2"] : json::array(), inst.m2, inst.n2, "G2");
    inst.y_lb = bounds_from_json(j.contains("y_lb") ? j["y_lb"] : json::array(), inst.n2, "y_lb");
    inst.y_ub = bounds_from_json(j.contains("y_ub") ? j["y_ub"] : json::array(), inst.n2, "y_ub");

    if (!j.contains("scenarios") || !j["scenarios"].is_array() || j["scenarios"].empty())
        throw ParseError("field 'scenarios' must be a nonempty array");
    for (std::size_t w = 0; w < j["scenarios"].size(); ++w) {
        const json& js = j["scenarios"][w];
        std::string where = "scenarios[" + std::to_string(w) + "]";
        if (!js.is_object()) throw ParseError(where + ": expected an object");
        for (auto it = js.begin(); it != js.end(); ++it)
            if (it.key() != "p" && it.key() != "A2" && it.key() != "b2")
                throw ParseError(where + ": unknown field '" + it.key() + "'");
        Scenario sc;
        if (!js.contains("p")) throw ParseError(where + ": missing probability 'p'");
        sc.p = num_from_json(js["p"], where + ".p");
        sc.A2 = mat_from_json(js.contains("A2") ? js["A2"] : json::array(), inst.m2, inst.n1,
                              where + ".A2");
        sc.b2 = vec_from_json(js.contains("b2") ? js["b2"] : json::array(), inst.m2, where + ".b2");
        inst.scenarios.push_back(std::move(sc));
    }

    auto obj_sense = [&](const char* key) -> std::string {
        if (!j.contains(key)) return "min";
        if (!j[key].is_string()) throw ParseError(std::string(key) + " must be \"min\" or \"max\"");
        std::string s = j[key].get<std::string>();
        if (s != "min" && s != "max")
            throw ParseError(std::string(key) + " must be \"min\" or \"max\"");
        return s;
    };
    if (obj_sense("objective_sense_stage1") == "max") {
        inst.sense_tag.stage1_max = true;
        for (Rational& v : inst.c) v = -v;
        for (Rational& v : inst.d1) v = -v;
    }
    if (obj_sense("objective_sense_stage2") == "max") {
        inst.sense_tag.stage2_max = true;
        for (Rational& v : inst.d2) v = -v;
    }

    std::vector<std::string> s1(m1_file, ">=");
    if (j.contains("row_sense_stage1"))
        s1 = senses_from_json(j["row_sense_stage1"], m1_file, "row_sense_stage1");
    std::vector<std::string> s2(inst.m2, ">=");
    if (j.contains("row_sense_stage2"))
        s2 = senses_from_json(j["row_sense_stage2"], inst.m2, "row_sense_stage2");

    // Stage 1: flip <= rows, expand = rows into >= pairs.
    for (int i = 0; i < m1_file; ++i) {
        if (s1[i] == "<=") {
            inst.sense_tag.flipped_rows1.push_back(i);
            Vec row = A1[i];
            for (Rational& v : row) v = -v;
            inst.A1.push_back(row);
            inst.b1.push_back(-b1[i]);
        } else {
            inst.A1.push_back(A1[i]);
            inst.b1.push_back(b1[i]);
            if (s1[i] == "=") {
                Vec row = A1[i];
                for (Rational& v : row) v = -v;
                inst.A1.push_back(row);
                inst.b1.push_back(-b1[i]);
            }
        }
    }
    inst.m1 = static_cast<int>(inst.A1.size());

    // Stage 2: flip <= rows (G2, every scenario's A2 row and b2 entry);
    // equality rows stay single and are marked Eq.
    inst.sense2.assign(inst.m2, RowSense::Ge);
    for (int i = 0; i < inst.m2; ++i) {
        if (s2[i] == "=") {
            inst.sense2[i] = RowSense::Eq;
        } else if (s2[i] == "<=") {
            inst.sense_tag.flipped_rows2.push_back(i);
            for (Rational& v : inst.G2[i]) v = -v;
            for (Scenario& sc : inst.scenarios) {
                for (Rational& v : sc.A2[i]) v = -v;
                sc.b2[i] = -sc.b2[i];
            }
        }
    }

    // Tighten integer bounds to integers.
    for (int jcol = 0; jcol < inst.r1; ++jcol) {
        if (inst.x_lb[jcol]) inst.x_lb[jcol] = inst.x_lb[jcol]->ceil();
        if (inst.x_ub[jcol]) inst.x_ub[jcol] = inst.x_ub[jcol]->floor();
    }
    for (int jcol = 0; jcol < inst.r2; ++jcol) {
        if (inst.y_lb[jcol]) inst.y_lb[jcol] = inst.y_lb[jcol]->ceil();
        if (inst.y_ub[jcol]) inst.y_ub[jcol] = inst.y_ub[jcol]->floor();
    }

    validate_instance(inst);
    return inst;
}

TwoStageInstance load_instance(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open instance file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_instance(buf.str());
}

std::string serialize_instance(const TwoStageInstance& inst) {
    json j;
    j["n1"] = inst.n1;
    j["r1"] = inst.r1;
    j["m1"] = inst.m1;
    j["c"] = vec_to_json(inst.c);
    j["A1"] = mat_to_json(inst.A1);
    j["b1"] = vec_to_json(inst.b1);
    j["x_lb"] = bounds_to_json(inst.x_lb);
    j["x_ub"] = bounds_to_json(inst.x_ub);
    j["n2"] = inst.n2;
    j["r2"] = inst.r2;
    j["m2"] = inst.m2;
    j["d1"] = vec_to_json(inst.d1);
    j["d2"] = vec_to_json(inst.d2);
    j["G2"] = mat_to_json(inst.G2);
    j["y_lb"] = bounds_to_json(inst.y_lb);
    j["y_ub"] = bounds_to_json(inst.y_ub);
    j["objective_sense_stage1"] = "min";
    j["objective_sense_stage2"] = "min";
    json s1 = json::array();
    for (int i = 0; i < inst.m1; ++i) s1.push_back(">=");
    j["row_sense_stage1"] = s1;
    json s2 = json::array();
    for (int i = 0; i < inst.m2; ++i) s2.push_back(inst.sense2[i] == RowSense::Eq ? "=" : ">=");
    j["row_sense_stage2"] = s2;
    json scen = json::array();
    for (const Scenario& sc : inst.scenarios) {
        json e;
        e["p"] = rat_to_json(sc.p);
        e["A2"] = mat_to_json(sc.A2);
        e["b2"] = vec_to_json(sc.b2);
        scen.push_back(e);
    }
    j["scenarios"] = scen;
    return j.dump(2) + "\n";
}

TwoStageInstance interdiction_to_2smilp(int n, const Mat& G2, const Vec& b2,
                                        const Vec& d2, const Vec& u) {
    if (n < 1) throw DimensionError("interdiction needs at least one variable");
    if (static_cast<int>(d2.size()) != n || static_cast<int>(u.size()) != n)
        throw DimensionError("interdiction d2/u length != n");
    if (static_cast<int>(b2.size()) != G2.size()) throw DimensionError("interdiction b2 rows != G2 rows");
    for (const Vec& row : G2)
        if (static_cast<int>(row.size()) != n) throw DimensionError("interdiction G2 row length != n");
    for (const Rational& ui : u)
        if (!ui.is_integer() || ui.sign() < 0)
            throw AssumptionError("interdiction bounds u must be nonnegative integers");

    int m_base = static_cast<int>(G2.size());
    TwoStageInstance inst;
    inst.n1 = inst.r1 = n;
    inst.m1 = 0;
    inst.c.assign(n, Rational(0));
    inst.x_lb.assign(n, Rational(0));
    inst.x_ub.assign(n, Rational(1));

    inst.n2 = inst.r2 = n;
    inst.m2 = m_base + n;
    inst.d2 = d2;
    inst.d1.reserve(n);
    for (const Rational& v : d2) inst.d1.push_back(-v);
    inst.G2 = G2;
    for (int i = 0; i < n; ++i) {
        Vec row(n, Rational(0));
        row[i] = Rational(-1);
        inst.G2.push_back(row);
    }
    inst.sense2.assign(inst.m2, RowSense::Ge);
    inst.y_lb.assign(n, Rational(0));
    inst.y_ub.assign(n, Rational(0));
    for (int i = 0; i < n; ++i) inst.y_ub[i] = u[i];

    Scenario sc;
    sc.p = Rational(1);
    sc.b2 = b2;
    sc.A2.assign(m_base, Vec(n, Rational(0)));
    for (int i = 0; i < n; ++i) {
        Vec row(n, Rational(0));
        row[i] = -u[i];
        sc.A2.push_back(row);
        sc.b2.push_back(-u[i]);
    }
    inst.scenarios.push_back(std::move(sc));
    inst.sense_tag.stage1_max = true;

    validate_instance(inst);
    return inst;
}

TwoStageInstance binarize_linking(const TwoStageInstance& inst) {
    std::vector<int> linking = inst.linking_columns();
    std::set<int> link_set(linking.begin(), linking.end());

    bool already_binary = true;
    for (int jcol : linking) {
        if (!(*inst.x_lb[jcol] == Rational(0) && *inst.x_ub[jcol] == Rational(1))) {
            already_binary = false;
            break;
        }
    }
    if (already_binary) return inst;

    TwoStageInstance out;
    Binarization bmap;
    bmap.orig_n1 = inst.n1;

    // Column plan: each linking column expands into an optional fixed offset
    // column (bounds [1,1], weight = its lower bound) plus binary columns
    // with weights 1, 2, 4, ...; every other column maps to itself.
    struct NewCol {
        Rational coeff_weight;  // multiplier on the original column's data
        int orig;
        OptBound lb, ub;
    };
    std::vector<NewCol> plan;
    struct CapRow {
        std::vector<int> cols;
        Vec weights;
        Rational width;
    };
    std::vector<CapRow> caps;

    for (int jcol = 0; jcol < inst.n1; ++jcol) {
        Binarization::Col bc;
        bc.orig = jcol;
        bc.offset = Rational(0);
        if (!link_set.count(jcol)) {
            plan.push_back({Rational(1), jcol, inst.x_lb[jcol], inst.x_ub[jcol]});
            bc.weights.push_back(Rational(1));
            bc.cols.push_back(static_cast<int>(plan.size()) - 1);
            bmap.cols.push_back(bc);
            continue;
        }
        Rational lo = *inst.x_lb[jcol];
        Rational hi = *inst.x_ub[jcol];
        Rational width = hi - lo;
        if (lo != Rational(0)) {
            plan.push_back({lo, jcol, Rational(1), Rational(1)});
            bc.weights.push_back(lo);
            bc.cols.push_back(static_cast<int>(plan.size()) - 1);
        }
        int bits = 1;
        Rational span(1);  // 2^bits - 1
        while (span < width) {
            ++bits;
            span = span * Rational(2) + Rational(1);
        }
        CapRow cap;
        Rational w(1);
        for (int k = 0; k < bits; ++k) {
            plan.push_back({w, jcol, Rational(0), Rational(1)});
            bc.weights.push_back(w);
            bc.cols.push_back(static_cast<int>(plan.size()) - 1);
            cap.cols.push_back(static_cast<int>(plan.size()) - 1);
            cap.weights.push_back(w);
            w *= Rational(2);
        }
        if (span > width) {
            cap.width = width;
            caps.push_back(cap);
        }
        bmap.cols.push_back(bc);
    }

    int n1_new = static_cast<int>(plan.size());
    out.n1 = n1_new;
    out.r1 = 0;
    for (const NewCol& nc : plan)
        if (nc.orig < inst.r1) ++out.r1;
    out.c.assign(n1_new, Rational(0));
    out.x_lb.resize(n1_new);
    out.x_ub.resize(n1_new);
    for (int k = 0; k < n1_new; ++k) {
        out.c[k] = plan[k].coeff_weight * inst.c[plan[k].orig];
        out.x_lb[k] = plan[k].lb;
        out.x_ub[k] = plan[k].ub;
    }
    for (int i = 0; i < inst.m1; ++i) {
        Vec row(n1_new, Rational(0));
        for (int k = 0; k < n1_new; ++k)
            row[k] = plan[k].coeff_weight * inst.A1[i][plan[k].orig];
        out.A1.push_back(std::move(row));
        out.b1.push_back(inst.b1[i]);
    }
    for (const CapRow& cap : caps) {
        Vec row(n1_new, Rational(0));
        for (std::size_t k = 0; k < cap.cols.size(); ++k) row[cap.cols[k]] = -cap.weights[k];
        out.A1.push_back(std::move(row));
        out.b1.push_back(-cap.width);
    }
    out.m1 = static_cast<int>(out.A1.size());

    out.n2 = inst.n2;
    out.r2 = inst.r2;
    out.m2 = inst.m2;
    out.d1 = inst.d1;
    out.d2 = inst.d2;
    out.G2 = inst.G2;
    out.sense2 = inst.sense2;
    out.y_lb = inst.y_lb;
    out.y_ub = inst.y_ub;
    for (const Scenario& sc : inst.scenarios) {
        Scenario nsc;
        nsc.p = sc.p;
        nsc.b2 = sc.b2;
        for (int i = 0; i < inst.m2; ++i) {
            Vec row(n1_new, Rational(0));
            for (int k = 0; k < n1_new; ++k)
                row[k] = plan[k].coeff_weight * sc.A2[i][plan[k].orig];
            nsc.A2.push_back(std::move(row));
        }
        out.scenarios.push_back(std::move(nsc));
    }
    out.sense_tag = inst.sense_tag;
    out.binarization = std::move(bmap);

    validate_instance(out);
    return out;
}

std::string serialize_result(const SolveResult& r) {
    json j;
    switch (r.status) {
        case SolveStatus::Optimal: j["status"] = "optimal"; break;
        case SolveStatus::Infeasible: j["status"] = "infeasible"; break;
        case SolveStatus::IterLimit: j["status"] = "iteration_limit"; break;
        case SolveStatus::NodeLimitHit: j["status"] = "node_limit"; break;
    }
    j["algorithm"] = r.algorithm;
    j["objective"] = r.objective.str();
    j["objective_decimal"] = r.objective.to_double();
    j["objective_reported"] = r.objective_reported.str();
    j["objective_reported_decimal"] = r.objective_reported.to_double();
    json xs = json::array(), xd = json::array();
    for (const Rational& v : r.x) {
        xs.push_back(v.str());
        xd.push_back(v.to_double());
    }
    j["x"] = xs;
    j["x_decimal"] = xd;
    json re = json::array();
    for (const Vec& y : r.reactions) {
        json ys = json::array();
        for (const Rational& v : y) ys.push_back(v.str());
        re.push_back(ys);
    }
    j["reactions"] = re;
    json bt = json::array(), btd = json::array();
    for (const Rational& v : r.bound_trace) {
        bt.push_back(v.str());
        btd.push_back(v.to_double());
    }
    j["bound_trace"] = bt;
    j["bound_trace_decimal"] = btd;
    j["iterations"] = r.iterations;
    j["nodes"] = r.nodes;
    j["wall_seconds"] = r.wall_seconds;
    json zs = json::array(), ss = json::array();
    for (const Rational& v : r.final_z) zs.push_back(v.str());
    for (const Rational& v : r.final_sub) ss.push_back(v.str());
    j["final_z"] = zs;
    j["final_sub"] = ss;
    j["cuts"] = static_cast<long>(r.cut_log.size());
    return j.dump(2) + "\n";
}

bool operator==(const Scenario& a, const Scenario& b) {
    return a.p == b.p && a.A2 == b.A2 && a.b2 == b.b2;
}

// Mathematical-content equality; ingestion bookkeeping (sense_tag,
// binarization back-map) deliberately excluded.
bool operator==(const TwoStageInstance& a, const TwoStageInstance& b) {
    return a.n1 == b.n1 && a.r1 == b.r1 && a.m1 == b.m1 && a.c == b.c && a.A1 == b.A1 &&
           a.b1 == b.b1 && a.x_lb == b.x_lb && a.x_ub == b.x_ub && a.n2 == b.n2 &&
           a.r2 == b.r2 && a.m2 == b.m2 && a.d1 == b.d1 && a.d2 == b.d2 && a.G2 == b.G2 &&
           a.sense2 == b.sense2 && a.y_lb == b.y_lb && a.y_ub == b.y_ub &&
           a.scenarios == b.scenarios;
}

} // namespace msmilp
