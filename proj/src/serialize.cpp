#include "serialize.hpp"

#include <cmath>

#include "error.hpp"

namespace tcsdp {

using nlohmann::json;

namespace {

json expr_json(const LinExpr& e) {
    json t = json::array();
    for (const auto& [i, v] : e.terms) t.push_back({i, v});
    return {{"terms", t}, {"constant", e.constant}};
}

LinExpr expr_from(const json& j) {
    LinExpr e;
    for (const auto& t : j.at("terms")) e.terms.emplace_back(t.at(0).get<int>(), t.at(1).get<double>());
    e.constant = j.value("constant", 0.0);
    return e;
}

json bound(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }
double bound_from(const json& j, double inf) { return j.is_null() ? inf : j.get<double>(); }

json mat_json(const Eigen::MatrixXd& m) {
    json a = json::array();
    for (int i = 0; i < m.rows(); ++i) {
        json r = json::array();
        for (int k = 0; k < m.cols(); ++k) r.push_back(m(i, k));
        a.push_back(r);
    }
    return a;
}

Eigen::MatrixXd mat_from(const json& j, int rows = -1, int cols = -1) {
    const int r = static_cast<int>(j.size());
    const int c = r > 0 ? static_cast<int>(j.at(0).size()) : 0;
    if ((rows >= 0 && r != rows) || (cols >= 0 && c != cols))
        throw Error(ErrorCode::InvalidInput, "matrix has wrong shape");
    Eigen::MatrixXd m(r, c);
    for (int i = 0; i < r; ++i) {
        if (static_cast<int>(j.at(i).size()) != c) throw Error(ErrorCode::InvalidInput, "ragged matrix");
        for (int k = 0; k < c; ++k) m(i, k) = j.at(i).at(k).get<double>();
    }
    return m;
}

json vec_json(const Eigen::VectorXd& v) { return json(std::vector<double>(v.data(), v.data() + v.size())); }

template <int N>
Eigen::Matrix<double, N, 1> vecn_from(const json& j) {
    if (j.size() != N) throw Error(ErrorCode::InvalidInput, "vector has wrong length");
    Eigen::Matrix<double, N, 1> v;
    for (int i = 0; i < N; ++i) v(i) = j.at(i).get<double>();
    return v;
}

json tf_list(const std::vector<Mat4>& ts) {
    json a = json::array();
    for (const auto& t : ts) a.push_back(mat_json(t));
    return a;
}

std::vector<Mat4> tf_list_from(const json& j) {
    std::vector<Mat4> out;
    for (const auto& t : j) out.push_back(mat_from(t, 4, 4));
    return out;
}

void check_header(const json& j, const std::string& schema) {
    if (j.value("schema", "") != schema) throw Error(ErrorCode::InvalidInput, "expected schema " + schema);
    if (j.value("version", 0) != kSchemaVersion) throw Error(ErrorCode::InvalidInput, "unsupported schema version");
}

template <class F>
auto guarded(F f) {
    try {
        return f();
    } catch (const json::exception& e) {
        throw Error(ErrorCode::InvalidInput, std::string("malformed json: ") + e.what());
    }
}

}  // namespace

json problem_to_json(const TcsdpProblem& p) {
    json blocks = json::array(), groups = json::array(), L = json::array(), rows = json::array(), Q = json::array();
    for (const auto& b : p.blocks) blocks.push_back({{"id", b.id}, {"dim", b.dim}, {"group", b.group}, {"label", b.label}});
    for (const auto& g : p.groups) groups.push_back({{"trace", g.trace}, {"blocks", g.blocks}});
    for (const auto& l : p.L) L.push_back(expr_json(l));
    for (const auto& r : p.rows) rows.push_back({{"a", expr_json(r.a)}, {"lo", bound(r.lo)}, {"hi", bound(r.hi)}});
    const Eigen::SparseMatrix<double> q = p.Q_matrix();
    for (int k = 0; k < q.outerSize(); ++k)
        for (Eigen::SparseMatrix<double>::InnerIterator it(q, k); it; ++it)
            if (it.row() <= it.col()) Q.push_back({it.row(), it.col(), it.value()});
    return {{"schema", "tcsdp.problem"},
            {"version", kSchemaVersion},
            {"blocks", blocks},
            {"groups", groups},
            {"n_free", p.n_free},
            {"free_labels", p.free_labels},
            {"objective", {{"L", L}, {"Q", Q}, {"c", expr_json(p.c)}}},
            {"rows", rows}};
}

TcsdpProblem problem_from_json(const json& j) {
    return guarded([&] {
        check_header(j, "tcsdp.problem");
        TcsdpProblem p;
        for (const auto& b : j.at("blocks"))
            p.blocks.push_back({b.at("id").get<int>(), b.at("dim").get<int>(), b.at("group").get<int>(),
                                b.value("label", "")});
        for (const auto& g : j.at("groups")) p.groups.push_back({g.at("trace").get<double>(), g.at("blocks").get<std::vector<int>>()});
        p.n_free = j.value("n_free", 0);
        p.free_labels = j.value("free_labels", std::vector<std::string>{});
        for (const auto& r : j.at("rows"))
            p.rows.push_back({expr_from(r.at("a")), bound_from(r.at("lo"), -INFINITY), bound_from(r.at("hi"), INFINITY)});
        const json& obj = j.at("objective");
        if (obj.contains("c")) p.c = expr_from(obj.at("c"));
        if (obj.contains("L")) {
            for (const auto& l : obj.at("L")) p.L.push_back(expr_from(l));
            p.finalize();
            return p;
        }
        // Q-only documents go through the factoring path.
        p.finalize();
        Eigen::MatrixXd Q = Eigen::MatrixXd::Zero(p.n_vars(), p.n_vars());
        for (const auto& t : obj.at("Q")) {
            const int a = t.at(0).get<int>(), b = t.at(1).get<int>();
            if (a < 0 || b < 0 || a >= p.n_vars() || b >= p.n_vars()) throw Error(ErrorCode::InvalidInput, "Q index out of range");
            Q(a, b) = Q(b, a) = t.at(2).get<double>();
        }
        Eigen::VectorXd c = Eigen::VectorXd::Zero(p.n_vars());
        for (const auto& [i, v] : p.c.terms) c(i) += v;
        return assemble_problem(p.blocks, Q, c, p.rows, p.groups, p.n_free);
    });
}

json point_to_json(const Point& pt) {
    json blocks = json::array();
    for (const auto& Y : pt.Y) blocks.push_back(mat_json(Y));
    return {{"blocks", blocks}, {"free", vec_json(pt.free)}};
}

Point point_from_json(const TcsdpProblem& p, const json& j) {
    return guarded([&] {
        Point pt;
        const auto& b = j.at("blocks");
        if (b.size() != p.blocks.size()) throw Error(ErrorCode::InvalidInput, "wrong number of blocks");
        for (size_t k = 0; k < b.size(); ++k) pt.Y.push_back(mat_from(b[k], p.blocks[k].dim, p.blocks[k].dim));
        const auto f = j.value("free", std::vector<double>{});
        if (static_cast<int>(f.size()) != p.n_free) throw Error(ErrorCode::InvalidInput, "wrong number of free values");
        pt.free = Eigen::Map<const Eigen::VectorXd>(f.data(), static_cast<Eigen::Index>(f.size()));
        return pt;
    });
}

json certificate_to_json(const DualCertificate& d, const CertificateReport* r) {
    json S = json::array();
    for (const auto& s : d.S) S.push_back(mat_json(s));
    json out = {{"schema", "tcsdp.certificate"}, {"version", kSchemaVersion}, {"rho", vec_json(d.rho)},
                {"S", S}, {"Z", mat_json(d.Z)}, {"dual_value", d.d}};
    if (r) {
        out["residuals"] = {{"primal_feasibility", r->primal_feasibility}, {"primal_cone", r->primal_cone},
                            {"lmi_violation", r->lmi_violation}, {"dual_cone", r->dual_cone},
                            {"stationarity", r->stationarity}, {"complementarity", r->complementarity},
                            {"primal_value", r->primal_value}, {"dual_value", r->dual_value},
                            {"gap", r->gap}, {"certified", r->certified}, {"reason", r->reason}};
    }
    return out;
}

json scenario_to_json(const PnpScenario& s) {
    json pts = json::array(), px = json::array();
    for (const auto& q : s.points) pts.push_back({q(0), q(1), q(2)});
    for (const auto& p : s.pixels) px.push_back({p(0), p(1)});
    json j = {{"schema", "tcsdp.scenario"}, {"version", kSchemaVersion}, {"kind", "pnp"},
              {"f_cam", s.f_cam}, {"points", pts}, {"pixels", px}};
    if (s.has_truth) j["truth"] = {{"R", mat_json(s.R_true)}, {"t", {s.t_true(0), s.t_true(1), s.t_true(2)}}};
    return j;
}

json scenario_to_json(const HandEyeScenario& s) {
    json feats = json::array(), px = json::array();
    for (const auto& f : s.features) feats.push_back({f(0), f(1), f(2)});
    for (const auto& row : s.pixels) {
        json r = json::array();
        for (const auto& p : row) r.push_back({p(0), p(1)});
        px.push_back(r);
    }
    json j = {{"schema", "tcsdp.scenario"}, {"version", kSchemaVersion}, {"kind", "handeye"}, {"m", s.m}, {"n", s.n},
              {"f_cam", s.f_cam}, {"T_e", tf_list(s.T_e)}, {"features", feats}, {"pixels", px}};
    if (s.has_truth) j["truth"] = {{"X", mat_json(s.X)}, {"T_f", mat_json(s.T_f)}};
    return j;
}

json scenario_to_json(const DualCalScenario& s) {
    json j = {{"schema", "tcsdp.scenario"}, {"version", kSchemaVersion}, {"kind", "dualcal"}, {"m", s.m},
              {"A", tf_list(s.A)}, {"B", tf_list(s.B)}, {"C", tf_list(s.C)}};
    if (s.has_truth) j["truth"] = {{"X", mat_json(s.X)}, {"Y", mat_json(s.Y)}, {"Z", mat_json(s.Z)}};
    return j;
}

PnpScenario pnp_scenario_from_json(const json& j) {
    return guarded([&] {
        check_header(j, "tcsdp.scenario");
        if (j.at("kind") != "pnp") throw Error(ErrorCode::InvalidInput, "not a pnp scenario");
        PnpScenario s;
        s.f_cam = j.value("f_cam", 500.0);
        for (const auto& q : j.at("points")) s.points.push_back(vecn_from<3>(q));
        for (const auto& p : j.at("pixels")) s.pixels.push_back(vecn_from<2>(p));
        if (s.points.size() != s.pixels.size()) throw Error(ErrorCode::InvalidInput, "points and pixels differ in count");
        if (j.contains("truth")) {
            s.has_truth = true;
            s.R_true = mat_from(j["truth"].at("R"), 3, 3);
            s.t_true = vecn_from<3>(j["truth"].at("t"));
        }
        return s;
    });
}

HandEyeScenario handeye_scenario_from_json(const json& j) {
    return guarded([&] {
        check_header(j, "tcsdp.scenario");
        if (j.at("kind") != "handeye") throw Error(ErrorCode::InvalidInput, "not a handeye scenario");
        HandEyeScenario s;
        s.m = j.at("m").get<int>();
        s.n = j.at("n").get<int>();
        s.f_cam = j.value("f_cam", 500.0);
        s.T_e = tf_list_from(j.at("T_e"));
        for (const auto& f : j.at("features")) s.features.push_back(vecn_from<3>(f));
        for (const auto& row : j.at("pixels")) {
            std::vector<Vec2> r;
            for (const auto& p : row) r.push_back(vecn_from<2>(p));
            if (static_cast<int>(r.size()) != s.n) throw Error(ErrorCode::InvalidInput, "pixel row has wrong length");
            s.pixels.push_back(r);
        }
        if (static_cast<int>(s.T_e.size()) != s.m || static_cast<int>(s.pixels.size()) != s.m ||
            static_cast<int>(s.features.size()) != s.n)
            throw Error(ErrorCode::InvalidInput, "handeye scenario sizes do not match m, n");
        if (j.contains("truth")) {
            s.has_truth = true;
            s.X = mat_from(j["truth"].at("X"), 4, 4);
            s.T_f = mat_from(j["truth"].at("T_f"), 4, 4);
        }
        return s;
    });
}

DualCalScenario dualcal_scenario_from_json(const json& j) {
    return guarded([&] {
        check_header(j, "tcsdp.scenario");
        if (j.at("kind") != "dualcal") throw Error(ErrorCode::InvalidInput, "not a dualcal scenario");
        DualCalScenario s;
        s.m = j.at("m").get<int>();
        s.A = tf_list_from(j.at("A"));
        s.B = tf_list_from(j.at("B"));
        s.C = tf_list_from(j.at("C"));
        if (static_cast<int>(s.A.size()) != s.m || s.B.size() != s.A.size() || s.C.size() != s.A.size())
            throw Error(ErrorCode::InvalidInput, "dualcal scenario sizes do not match m");
        if (j.contains("truth")) {
            s.has_truth = true;
            s.X = mat_from(j["truth"].at("X"), 4, 4);
            s.Y = mat_from(j["truth"].at("Y"), 4, 4);
            s.Z = mat_from(j["truth"].at("Z"), 4, 4);
        }
        return s;
    });
}

}  // namespace tcsdp
