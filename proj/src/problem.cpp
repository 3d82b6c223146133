#include "problem.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "error.hpp"
#include "symeig.hpp"

namespace tcsdp {

namespace {
constexpr double kInvSqrt2 = 0.7071067811865476;
bool finite_bound(double v) { return std::isfinite(v); }
}  // namespace

// ---- LinExpr ---------------------------------------------------------------

LinExpr LinExpr::var(int index, double coef) {
    LinExpr e;
    e.terms.emplace_back(index, coef);
    return e;
}

LinExpr& LinExpr::operator+=(const LinExpr& o) {
    terms.insert(terms.end(), o.terms.begin(), o.terms.end());
    constant += o.constant;
    return *this;
}

LinExpr& LinExpr::operator-=(const LinExpr& o) {
    for (const auto& t : o.terms) terms.emplace_back(t.first, -t.second);
    constant -= o.constant;
    return *this;
}

LinExpr& LinExpr::operator*=(double k) {
    for (auto& t : terms) t.second *= k;
    constant *= k;
    return *this;
}

void LinExpr::compact() {
    std::sort(terms.begin(), terms.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    std::vector<std::pair<int, double>> out;
    for (const auto& t : terms) {
        if (!out.empty() && out.back().first == t.first) {
            out.back().second += t.second;
        } else {
            out.push_back(t);
        }
    }
    out.erase(std::remove_if(out.begin(), out.end(), [](const auto& t) { return t.second == 0.0; }), out.end());
    terms = std::move(out);
}

double LinExpr::eval(const Eigen::VectorXd& x) const {
    double v = constant;
    for (const auto& t : terms) v += t.second * x(t.first);
    return v;
}

LinExpr operator+(LinExpr a, const LinExpr& b) { return a += b; }
LinExpr operator-(LinExpr a, const LinExpr& b) { return a -= b; }
LinExpr operator*(double k, LinExpr a) { return a *= k; }
LinExpr operator*(LinExpr a, double k) { return a *= k; }

// ---- TcsdpProblem ----------------------------------------------------------

int TcsdpProblem::entry(int b, int i, int j) const {
    const int d = blocks[b].dim;
    if (i > j) std::swap(i, j);
    return offset_[b] + i * d + j;
}

void TcsdpProblem::decode(int index, int& b, int& i, int& j) const {
    if (index >= n_block_entries_) {
        b = -1;
        i = j = index - n_block_entries_;
        return;
    }
    auto it = std::upper_bound(offset_.begin(), offset_.end(), index);
    b = static_cast<int>(it - offset_.begin()) - 1;
    const int d = blocks[b].dim;
    const int r = index - offset_[b];
    i = r / d;
    j = r % d;
    if (i > j) std::swap(i, j);
}

void TcsdpProblem::finalize() {
    offset_.assign(blocks.size(), 0);
    int o = 0;
    for (size_t b = 0; b < blocks.size(); ++b) {
        if (blocks[b].dim < 1) throw Error(ErrorCode::InvalidInput, "block dimension must be >= 1");
        if (blocks[b].group < 0 || blocks[b].group >= static_cast<int>(groups.size()))
            throw Error(ErrorCode::InvalidInput, "block references an unknown trace group");
        offset_[b] = o;
        o += blocks[b].dim * blocks[b].dim;
    }
    n_block_entries_ = o;
    if (n_free < 0) throw Error(ErrorCode::InvalidInput, "negative free-variable count");
    std::vector<int> seen(blocks.size(), 0);
    for (size_t g = 0; g < groups.size(); ++g) {
        if (!(groups[g].trace > 0)) throw Error(ErrorCode::InvalidInput, "group trace must be positive");
        if (groups[g].blocks.empty()) throw Error(ErrorCode::InvalidInput, "empty trace group");
        for (int b : groups[g].blocks) {
            if (b < 0 || b >= static_cast<int>(blocks.size()) || blocks[b].group != static_cast<int>(g))
                throw Error(ErrorCode::InvalidInput, "trace group membership inconsistent");
            ++seen[b];
        }
    }
    for (int s : seen)
        if (s != 1) throw Error(ErrorCode::InvalidInput, "every block must belong to exactly one group");
    const int n = n_vars();
    auto canon = [&](LinExpr& e, bool allow_const) {
        for (auto& t : e.terms) {
            if (t.first < 0 || t.first >= n) throw Error(ErrorCode::InvalidInput, "coefficient index out of range");
            if (!std::isfinite(t.second)) throw Error(ErrorCode::InvalidInput, "non-finite coefficient");
            if (t.first < n_block_entries_) {
                int b, i, j;
                decode(t.first, b, i, j);
                t.first = offset_[b] + i * blocks[b].dim + j;
            }
        }
        if (!allow_const && e.constant != 0.0) throw Error(ErrorCode::InvalidInput, "constant term in linear form");
        e.compact();
    };
    for (auto& l : L) canon(l, false);
    canon(c, false);
    for (auto& r : rows) {
        canon(r.a, false);
        if (std::isnan(r.lo) || std::isnan(r.hi) || r.lo > r.hi)
            throw Error(ErrorCode::InvalidInput, "constraint bounds inconsistent");
        if (!finite_bound(r.lo) && !finite_bound(r.hi)) throw Error(ErrorCode::InvalidInput, "row without bounds");
    }
    if (static_cast<int>(free_labels.size()) != n_free) free_labels.resize(n_free);
}

double TcsdpProblem::lambda_bar_s() const {
    double s = 0;
    for (const auto& g : groups) s += g.trace;
    return s;
}

std::vector<ConstraintRow> TcsdpProblem::trace_rows() const {
    std::vector<ConstraintRow> out;
    for (const auto& g : groups) {
        ConstraintRow r;
        for (int b : g.blocks)
            for (int i = 0; i < blocks[b].dim; ++i) r.a.terms.emplace_back(entry(b, i, i), 1.0);
        r.lo = r.hi = g.trace;
        out.push_back(std::move(r));
    }
    return out;
}

std::vector<ConstraintRow> TcsdpProblem::all_rows() const {
    std::vector<ConstraintRow> out = rows;
    auto t = trace_rows();
    out.insert(out.end(), t.begin(), t.end());
    return out;
}

std::vector<ConstraintSide> TcsdpProblem::sides() const {
    std::vector<ConstraintSide> out;
    auto all = all_rows();
    for (size_t k = 0; k < all.size(); ++k) {
        const auto& r = all[k];
        if (r.is_equality()) {
            out.push_back({static_cast<int>(k), r.lo, Sense::Eq});
            continue;
        }
        if (finite_bound(r.lo)) out.push_back({static_cast<int>(k), r.lo, Sense::Ge});
        if (finite_bound(r.hi)) out.push_back({static_cast<int>(k), r.hi, Sense::Le});
    }
    return out;
}

Eigen::SparseMatrix<double> TcsdpProblem::L_matrix() const {
    std::vector<Eigen::Triplet<double>> t;
    for (size_t r = 0; r < L.size(); ++r)
        for (const auto& e : L[r].terms) t.emplace_back(static_cast<int>(r), e.first, e.second);
    Eigen::SparseMatrix<double> m(static_cast<int>(L.size()), n_vars());
    m.setFromTriplets(t.begin(), t.end());
    return m;
}

Eigen::SparseMatrix<double> TcsdpProblem::Q_matrix() const {
    Eigen::SparseMatrix<double> l = L_matrix();
    Eigen::SparseMatrix<double> q = l.transpose() * l;
    return q;
}

Eigen::VectorXd TcsdpProblem::c_vector() const {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(n_vars());
    for (const auto& t : c.terms) v(t.first) += t.second;
    return v;
}

Eigen::VectorXd flatten(const TcsdpProblem& p, const Point& pt) {
    if (pt.Y.size() != p.blocks.size()) throw Error(ErrorCode::InvalidInput, "point has wrong block count");
    Eigen::VectorXd x = Eigen::VectorXd::Zero(p.n_vars());
    for (size_t b = 0; b < p.blocks.size(); ++b) {
        const int d = p.blocks[b].dim;
        if (pt.Y[b].rows() != d || pt.Y[b].cols() != d) throw Error(ErrorCode::InvalidInput, "block size mismatch");
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) x(p.block_offset(b) + i * d + j) = pt.Y[b](i, j);
    }
    if (p.n_free > 0) {
        if (pt.free.size() != p.n_free) throw Error(ErrorCode::InvalidInput, "free vector length mismatch");
        x.tail(p.n_free) = pt.free;
    }
    return x;
}

Point unflatten(const TcsdpProblem& p, const Eigen::VectorXd& x) {
    Point pt;
    for (size_t b = 0; b < p.blocks.size(); ++b) {
        const int d = p.blocks[b].dim;
        Eigen::MatrixXd Y(d, d);
        for (int i = 0; i < d; ++i)
            for (int j = i; j < d; ++j) Y(i, j) = Y(j, i) = x(p.block_offset(b) + i * d + j);
        pt.Y.push_back(Y);
    }
    pt.free = x.tail(p.n_free);
    return pt;
}

double objective_value(const TcsdpProblem& p, const Point& pt) {
    Eigen::VectorXd x = flatten(p, pt);
    double f = p.c.eval(x);
    for (const auto& l : p.L) {
        double v = l.eval(x);
        f += v * v;
    }
    return f;
}

double max_row_violation(const TcsdpProblem& p, const Point& pt) {
    Eigen::VectorXd x = flatten(p, pt);
    double worst = 0;
    for (const auto& r : p.all_rows()) {
        double v = r.a.eval(x);
        worst = std::max({worst, r.lo - v, v - r.hi});
    }
    return worst;
}

// ---- assembly ----------------------------------------------------------------

Eigen::MatrixXd factor_objective(const Eigen::MatrixXd& Q) {
    if (Q.rows() != Q.cols()) throw Error(ErrorCode::InvalidInput, "Q must be square");
    if (Q.size() == 0) return Eigen::MatrixXd(0, 0);
    if (!Q.allFinite()) throw Error(ErrorCode::InvalidInput, "non-finite Q");
    const double scale = Q.cwiseAbs().maxCoeff();
    if ((Q - Q.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, scale))
        throw Error(ErrorCode::InvalidObjective, "Q is not symmetric");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (Q + Q.transpose()));
    const Eigen::VectorXd& ev = es.eigenvalues();
    if (ev.size() && ev(0) < -1e-9 * std::max(scale, 1e-300))
        throw Error(ErrorCode::InvalidObjective, "Q is indefinite");
    const double cut = 1e-13 * std::max(1.0, ev.size() ? ev(ev.size() - 1) : 0.0);
    std::vector<int> keep;
    for (int k = static_cast<int>(ev.size()) - 1; k >= 0; --k)
        if (ev(k) > cut) keep.push_back(k);
    Eigen::MatrixXd L(static_cast<int>(keep.size()), Q.cols());
    for (size_t r = 0; r < keep.size(); ++r)
        L.row(static_cast<int>(r)) = std::sqrt(ev(keep[r])) * es.eigenvectors().col(keep[r]).transpose();
    return L;
}

TcsdpProblem assemble_problem(const std::vector<PsdBlockSpec>& blocks, const Eigen::MatrixXd& Q,
                              const Eigen::VectorXd& c, const std::vector<ConstraintRow>& rows,
                              const std::vector<TraceGroup>& groups, int n_free) {
    TcsdpProblem p;
    p.blocks = blocks;
    p.groups = groups;
    p.n_free = n_free;
    p.rows = rows;
    p.finalize();
    const int n = p.n_vars();
    if (Q.rows() != n || Q.cols() != n) throw Error(ErrorCode::InvalidInput, "Q dimension mismatch");
    if (c.size() != n) throw Error(ErrorCode::InvalidInput, "c dimension mismatch");
    Eigen::MatrixXd L = factor_objective(Q);
    for (int r = 0; r < L.rows(); ++r) {
        LinExpr e;
        for (int k = 0; k < n; ++k)
            if (L(r, k) != 0.0) e.terms.emplace_back(k, L(r, k));
        p.L.push_back(std::move(e));
    }
    for (int k = 0; k < n; ++k)
        if (c(k) != 0.0) p.c.terms.emplace_back(k, c(k));
    p.finalize();
    return p;
}

// ---- standard form -----------------------------------------------------------

Eigen::MatrixXd StandardFormSdp::lmi(double t, const Eigen::VectorXd& x) const {
    const int rr = r();
    Eigen::VectorXd z = L * x;
    Eigen::MatrixXd M = Eigen::MatrixXd::Identity(rr + 1, rr + 1);
    M(0, 0) = t;
    M.block(1, 0, rr, 1) = z;
    M.block(0, 1, 1, rr) = z.transpose();
    return M;
}

StandardFormSdp to_standard_form(const TcsdpProblem& p) {
    StandardFormSdp s;
    s.problem = &p;
    s.L = p.L_matrix();
    return s;
}

// ---- lowering ----------------------------------------------------------------

std::vector<std::pair<int, double>> Lowered::map(const LinExpr& e) const {
    std::vector<std::pair<int, double>> out;
    out.reserve(e.terms.size());
    for (const auto& t : e.terms) {
        int b, i, j;
        problem->decode(t.first, b, i, j);
        if (b < 0) {
            out.emplace_back(free_offset + i, t.second);
        } else {
            out.emplace_back(conic_block_offset(b) + svec_index(i, j), i == j ? t.second : t.second * kInvSqrt2);
        }
    }
    return out;
}

void Lowered::add_row(const std::vector<std::pair<int, double>>& coefs, double rhs) {
    const int r = prog.n_rows++;
    for (const auto& c : coefs) prog.A.emplace_back(r, c.first, c.second);
    prog.b.conservativeResize(prog.n_rows);
    prog.b(r) = rhs;
}

Point Lowered::point(const TcsdpProblem& p, const Eigen::VectorXd& x) const {
    Point pt;
    for (size_t b = 0; b < p.blocks.size(); ++b) {
        const int d = p.blocks[b].dim;
        pt.Y.push_back(smat(x.segment(conic_block_offset(static_cast<int>(b)), svec_dim(d)), d));
    }
    pt.free = x.segment(free_offset, p.n_free);
    return pt;
}

Lowered lower_problem(const TcsdpProblem& p, int n_extra_scalars) {
    Lowered low;
    low.problem = &p;
    low.all_rows = p.all_rows();
    low.sides = p.sides();
    ConicProgram& prog = low.prog;
    for (size_t b = 0; b < p.blocks.size(); ++b) {
        low.block_cone.push_back(static_cast<int>(prog.cone_dims.size()));
        prog.cone_dims.push_back(p.blocks[b].dim);
    }
    for (int k = 0; k < n_extra_scalars; ++k) {
        low.extra_cone.push_back(static_cast<int>(prog.cone_dims.size()));
        prog.cone_dims.push_back(1);
    }
    std::vector<int> slack_cone(low.sides.size(), -1);
    for (size_t k = 0; k < low.sides.size(); ++k) {
        if (low.sides[k].sense == Sense::Eq) continue;
        slack_cone[k] = static_cast<int>(prog.cone_dims.size());
        prog.cone_dims.push_back(1);
    }
    for (size_t k = 0, o = 0; k < prog.cone_dims.size(); ++k) {
        low.cone_off.push_back(static_cast<int>(o));
        o += svec_dim(prog.cone_dims[k]);
    }
    const int r = static_cast<int>(p.L.size());
    const int nc = prog.n_cone_vars();
    low.free_offset = nc;
    low.w_offset = nc + p.n_free;
    prog.n_free = p.n_free + r;
    prog.c = Eigen::VectorXd::Zero(prog.n_vars());
    for (const auto& t : low.map(p.c)) prog.c(t.first) += t.second;
    prog.n_rows = 0;
    prog.b.resize(0);
    for (size_t k = 0; k < low.sides.size(); ++k) {
        auto coefs = low.map(low.all_rows[low.sides[k].row].a);
        if (slack_cone[k] >= 0)
            coefs.emplace_back(low.cone_off[slack_cone[k]], low.sides[k].sense == Sense::Ge ? -1.0 : 1.0);
        low.add_row(coefs, low.sides[k].rhs);
    }
    low.n_side_rows = prog.n_rows;
    for (int k = 0; k < r; ++k) {
        auto coefs = low.map(p.L[k]);
        for (auto& c : coefs) c.second = -c.second;
        coefs.emplace_back(low.w_offset + k, 1.0);
        low.add_row(coefs, 0.0);
        prog.P.emplace_back(low.w_offset + k, low.w_offset + k, 2.0);
    }
    return low;
}

// ---- duality -------------------------------------------------------------------

double dual_objective_value(const Eigen::VectorXd& rho, const Eigen::MatrixXd& Z, const Eigen::VectorXd& b) {
    if (Z.rows() != Z.cols() || Z.rows() < 1) throw Error(ErrorCode::InvalidCertificate, "Z must be square");
    if (std::abs(Z(0, 0) - 1.0) > 1e-8) throw Error(ErrorCode::InvalidCertificate, "Z(1,1) must equal 1");
    if (rho.size() != b.size()) throw Error(ErrorCode::InvalidCertificate, "rho and b lengths differ");
    return rho.dot(b) - Z.trace() + 1.0;
}

double duality_gap(double f_value, double d_value) { return f_value - d_value; }

double CertificateReport::max_residual() const {
    return std::max({primal_feasibility, primal_cone, lmi_violation, dual_cone, stationarity, complementarity});
}

Eigen::VectorXd side_rhs(const Lowered& low) {
    Eigen::VectorXd b(low.sides.size());
    for (size_t k = 0; k < low.sides.size(); ++k) b(k) = low.sides[k].rhs;
    return b;
}

DualCertificate certificate_from_solution(const Lowered& low, const ConicResult& r) {
    const TcsdpProblem& p = *low.problem;
    DualCertificate dc;
    dc.rho = r.y.head(static_cast<int>(low.sides.size()));
    for (size_t b = 0; b < p.blocks.size(); ++b) {
        const int d = p.blocks[b].dim;
        dc.S.push_back(smat(r.s.segment(low.conic_block_offset(static_cast<int>(b)), svec_dim(d)), d));
    }
    Point pt = low.point(p, r.x);
    Eigen::VectorXd x = flatten(p, pt);
    Eigen::VectorXd z = -(p.L_matrix() * x);
    const int rr = static_cast<int>(z.size());
    dc.Z.resize(rr + 1, rr + 1);
    dc.Z(0, 0) = 1.0;
    dc.Z.block(1, 0, rr, 1) = z;
    dc.Z.block(0, 1, 1, rr) = z.transpose();
    dc.Z.block(1, 1, rr, rr) = z * z.transpose();
    dc.d = dual_objective_value(dc.rho, dc.Z, side_rhs(low));
    return dc;
}

CertificateReport kkt_certify(const TcsdpProblem& p, const Point& primal, double t, const DualCertificate& dual,
                              double tol) {
    CertificateReport rep;
    const auto all = p.all_rows();
    const auto sides = p.sides();
    const int r = static_cast<int>(p.L.size());
    if (dual.rho.size() != static_cast<int>(sides.size()))
        throw Error(ErrorCode::InvalidCertificate, "rho length differs from constraint count");
    if (dual.S.size() != p.blocks.size()) throw Error(ErrorCode::InvalidCertificate, "one S block per primal block");
    for (size_t b = 0; b < p.blocks.size(); ++b)
        if (dual.S[b].rows() != p.blocks[b].dim || dual.S[b].cols() != p.blocks[b].dim)
            throw Error(ErrorCode::InvalidCertificate, "S block dimension mismatch");
    if (dual.Z.rows() != r + 1 || dual.Z.cols() != r + 1)
        throw Error(ErrorCode::InvalidCertificate, "Z dimension mismatch");
    if (std::abs(dual.Z(0, 0) - 1.0) > 1e-8) throw Error(ErrorCode::InvalidCertificate, "Z(1,1) must equal 1");

    const Eigen::VectorXd x = flatten(p, primal);
    rep.primal_feasibility = max_row_violation(p, primal);
    for (const auto& Y : primal.Y) rep.primal_cone = std::max(rep.primal_cone, -lambda_min(Y));
    StandardFormSdp sf = to_standard_form(p);
    Eigen::MatrixXd M = sf.lmi(t, x);
    rep.lmi_violation = std::max(0.0, -lambda_min(M));

    for (const auto& S : dual.S) rep.dual_cone = std::max(rep.dual_cone, -lambda_min(S));
    rep.dual_cone = std::max(rep.dual_cone, -lambda_min(dual.Z));
    for (size_t k = 0; k < sides.size(); ++k) {
        if (sides[k].sense == Sense::Ge) rep.dual_cone = std::max(rep.dual_cone, -dual.rho(k));
        if (sides[k].sense == Sense::Le) rep.dual_cone = std::max(rep.dual_cone, dual.rho(k));
    }

    // g = c - 2 L^T z - A^T rho, in canonical coefficient space
    Eigen::VectorXd g = p.c_vector();
    Eigen::VectorXd z = dual.Z.block(1, 0, r, 1);
    for (int k = 0; k < r; ++k)
        for (const auto& e : p.L[k].terms) g(e.first) -= 2.0 * z(k) * e.second;
    for (size_t k = 0; k < sides.size(); ++k)
        for (const auto& e : all[sides[k].row].a.terms) g(e.first) -= dual.rho(k) * e.second;
    double stat = 0;
    for (size_t b = 0; b < p.blocks.size(); ++b) {
        const int d = p.blocks[b].dim;
        for (int i = 0; i < d; ++i)
            for (int j = i; j < d; ++j) {
                double gij = g(p.block_offset(static_cast<int>(b)) + i * d + j);
                double sij = i == j ? dual.S[b](i, i) : 2.0 * dual.S[b](i, j);
                stat = std::max(stat, std::abs(gij - sij));
            }
    }
    for (int k = 0; k < p.n_free; ++k) stat = std::max(stat, std::abs(g(p.free_index(k))));
    rep.stationarity = stat;

    double comp = 0;
    for (size_t b = 0; b < p.blocks.size(); ++b) comp += std::abs((dual.S[b].cwiseProduct(primal.Y[b])).sum());
    comp += std::abs((dual.Z.cwiseProduct(M)).sum());
    for (size_t k = 0; k < sides.size(); ++k) {
        if (sides[k].sense == Sense::Eq) continue;
        comp += std::abs(dual.rho(k) * (all[sides[k].row].a.eval(x) - sides[k].rhs));
    }
    rep.complementarity = comp;

    rep.primal_value = objective_value(p, primal);
    Eigen::VectorXd b(sides.size());
    for (size_t k = 0; k < sides.size(); ++k) b(k) = sides[k].rhs;
    rep.dual_value = dual_objective_value(dual.rho, dual.Z, b);
    rep.gap = duality_gap(rep.primal_value, rep.dual_value);

    const double gap_tol = tol * (1.0 + std::abs(rep.primal_value));
    if (rep.primal_feasibility > tol || rep.primal_cone > tol || rep.lmi_violation > tol) {
        rep.reason = "primal_infeasible";
    } else if (rep.dual_cone > tol) {
        rep.reason = "dual_infeasible";
    } else if (rep.stationarity > tol) {
        rep.reason = "stationarity";
    } else if (rep.complementarity > tol) {
        rep.reason = "complementarity";
    } else if (std::abs(rep.gap) > gap_tol) {
        rep.reason = "duality_gap";
    } else {
        rep.certified = true;
        rep.reason = "certified";
    }
    return rep;
}

RelaxResult solve_relaxation(const TcsdpProblem& p, const SolverSettings& s) {
    Lowered low = lower_problem(p);
    ConicResult r = solve_conic(low.prog, s);
    RelaxResult out;
    out.status = r.status;
    out.iterations = r.iterations;
    out.point = low.point(p, r.x);
    out.dual = certificate_from_solution(low, r);
    out.f = objective_value(p, out.point);
    return out;
}

}  // namespace tcsdp
