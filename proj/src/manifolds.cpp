#include "manifolds.hpp"

#include <cmath>

#include "error.hpp"
#include "symeig.hpp"

namespace tcsdp {

namespace {

LinExpr at(int offset, int d, int i, int j, double coef = 1.0) {
    if (i > j) std::swap(i, j);
    return LinExpr::var(offset + i * d + j, coef);
}

ConstraintRow eq_row(LinExpr a, double rhs) {
    ConstraintRow r;
    rhs -= a.constant;
    a.constant = 0.0;
    r.a = std::move(a);
    r.lo = r.hi = rhs;
    return r;
}

ConstraintRow range_row(LinExpr a, double lo, double hi) {
    ConstraintRow r;
    lo -= a.constant;
    hi -= a.constant;
    a.constant = 0.0;
    r.a = std::move(a);
    r.lo = lo;
    r.hi = hi;
    return r;
}

double eval_dense(const ConstraintRow& r, const std::vector<const Eigen::MatrixXd*>& mats, int d) {
    double v = 0;
    for (const auto& t : r.a.terms) {
        const int b = t.first / (d * d);
        const int k = t.first % (d * d);
        v += t.second * (*mats[b])(k / d, k % d);
    }
    return v;
}

double row_violation(const ConstraintRow& r, double v) { return std::max({0.0, r.lo - v, v - r.hi}); }

void check_rotation(const Mat3& R) {
    if (!R.allFinite() || (R.transpose() * R - Mat3::Identity()).cwiseAbs().maxCoeff() > 1e-9 || R.determinant() <= 0)
        throw Error(ErrorCode::InvalidInput, "matrix is not a rotation");
}

}  // namespace

// ---- lifts -------------------------------------------------------------------------

Eigen::MatrixXd lift_rotation(const Mat3& R) {
    check_rotation(R);
    Eigen::VectorXd x(7);
    x << R.col(0), R.col(1), 1.0;
    return x * x.transpose();
}

Eigen::MatrixXd lift_pair(const Vec3& a, const Vec3& b) {
    Eigen::VectorXd x(7);
    x << a, b, 1.0;
    return x * x.transpose();
}

double rotation_row_residual(const Eigen::MatrixXd& Y) {
    if (Y.rows() != 7 || Y.cols() != 7) throw Error(ErrorCode::InvalidBlock, "rotation block must be 7x7");
    std::vector<const Eigen::MatrixXd*> mats{&Y};
    double worst = 0;
    for (const auto& r : rotation_constraint_rows(0)) worst = std::max(worst, row_violation(r, eval_dense(r, mats, 7)));
    worst = std::max(worst, std::abs(Y.trace() - kRotationTrace));
    return worst;
}

Mat3 recover_rotation(const Eigen::MatrixXd& Y, double tol) {
    if (rotation_row_residual(Y) > tol) throw Error(ErrorCode::InvalidBlock, "rotation block violates its rows");
    Mat3 R;
    R.col(0) = Y.block(0, 6, 3, 1);
    R.col(1) = Y.block(3, 6, 3, 1);
    R.col(2) << Y(1, 5) - Y(2, 4), Y(2, 3) - Y(0, 5), Y(0, 4) - Y(1, 3);
    return R;
}

TranslationBlock lift_translation(double tau, const Vec3& v) {
    if (!(tau >= 0.0 && tau <= 1.0)) throw Error(ErrorCode::InvalidInput, "tau must lie in [0,1]");
    if (!v.allFinite() || std::abs(v.norm() - 1.0) > 1e-9) throw Error(ErrorCode::InvalidInput, "v must be a unit vector");
    const double a = std::sqrt(tau), b = std::sqrt(1.0 - tau);
    TranslationBlock t;
    for (int l = 0; l < 3; ++l) {
        Eigen::Vector4d x(a * v(l), b * v(l), a, b);
        t.Y[l] = x * x.transpose();
    }
    return t;
}

double translation_row_residual(const TranslationBlock& b) {
    for (const auto& Y : b.Y)
        if (Y.rows() != 4 || Y.cols() != 4) throw Error(ErrorCode::InvalidBlock, "translation blocks must be 4x4");
    std::vector<const Eigen::MatrixXd*> mats{&b.Y[0], &b.Y[1], &b.Y[2]};
    double worst = 0;
    for (const auto& r : translation_constraint_rows({0, 16, 32}))
        worst = std::max(worst, row_violation(r, eval_dense(r, mats, 4)));
    worst = std::max(worst, std::abs(b.Y[0].trace() + b.Y[1].trace() + b.Y[2].trace() - kTranslationTrace));
    return worst;
}

std::pair<double, Vec3> recover_translation(const TranslationBlock& b, double tol) {
    if (translation_row_residual(b) > tol) throw Error(ErrorCode::InvalidBlock, "translation block violates its rows");
    Vec3 v;
    for (int l = 0; l < 3; ++l) v(l) = b.Y[l](0, 2) + b.Y[l](1, 3);
    return {b.Y[0](2, 2), v};
}

Vec3 recover_scaled_direction(const TranslationBlock& b, double tol) {
    if (translation_row_residual(b) > tol) throw Error(ErrorCode::InvalidBlock, "translation block violates its rows");
    return Vec3(b.Y[0](0, 2), b.Y[1](0, 2), b.Y[2](0, 2));
}

// ---- rows ------------------------------------------------------------------------------

std::vector<ConstraintRow> rotation_constraint_rows(int o) {
    std::vector<ConstraintRow> rows = pair_structure_rows(o);
    rows.insert(rows.begin() + 2, eq_row(at(o, 7, 0, 3) + at(o, 7, 1, 4) + at(o, 7, 2, 5), 0.0));
    return rows;
}

std::vector<ConstraintRow> pair_structure_rows(int o) {
    std::vector<ConstraintRow> rows;
    rows.push_back(eq_row(at(o, 7, 0, 0) + at(o, 7, 1, 1) + at(o, 7, 2, 2), 1.0));
    rows.push_back(eq_row(at(o, 7, 3, 3) + at(o, 7, 4, 4) + at(o, 7, 5, 5), 1.0));
    rows.push_back(eq_row(at(o, 7, 6, 6), 1.0));
    return rows;
}

std::vector<ConstraintRow> translation_constraint_rows(const std::array<int, 3>& o) {
    std::vector<ConstraintRow> rows;
    auto Y = [&](int l, int i, int j) { return at(o[l], 4, i, j); };
    for (int l = 0; l < 3; ++l) {
        rows.push_back(eq_row(Y(l, 2, 2) + Y(l, 3, 3), 1.0));
        rows.push_back(eq_row(Y(l, 0, 3) - Y(l, 1, 2), 0.0));
        for (auto [i, j] : {std::pair{0, 2}, {0, 3}, {1, 2}, {1, 3}}) rows.push_back(range_row(Y(l, i, j), -1.0, 1.0));
        rows.push_back(range_row(Y(l, 2, 2), 0.0, 1.0));
        rows.push_back(range_row(Y(l, 2, 3), 0.0, 1.0));
    }
    for (int l = 1; l < 3; ++l) {
        rows.push_back(eq_row(Y(l, 2, 2) - Y(0, 2, 2), 0.0));
        rows.push_back(eq_row(Y(l, 2, 3) - Y(0, 2, 3), 0.0));
    }
    rows.push_back(eq_row(Y(0, 0, 1) + Y(1, 0, 1) + Y(2, 0, 1) - Y(0, 2, 3), 0.0));
    rows.push_back(eq_row(Y(0, 0, 0) + Y(1, 0, 0) + Y(2, 0, 0) - Y(0, 2, 2), 0.0));
    rows.push_back(eq_row(Y(0, 1, 1) + Y(1, 1, 1) + Y(2, 1, 1) - Y(0, 3, 3), 0.0));
    return rows;
}

bool rank1_check(const std::vector<Eigen::MatrixXd>& group, double lambda_bar, double tol) {
    double s = 0;
    for (const auto& Y : group) s += lambda1(Y);
    return lambda_bar - s <= tol;
}

// ---- expression helpers ------------------------------------------------------------------

LinExpr dot(const Vec3& coef, const Vec3Expr& e) {
    LinExpr out;
    for (int k = 0; k < 3; ++k)
        if (coef(k) != 0.0) out += coef(k) * e[k];
    return out;
}

Vec3Expr combine(const std::array<Vec3Expr, 3>& cols, const Vec3& coef) {
    Vec3Expr out;
    for (int k = 0; k < 3; ++k)
        for (int a = 0; a < 3; ++a)
            if (coef(k) != 0.0) out[a] += coef(k) * cols[k][a];
    return out;
}

Vec3Expr scale(const Vec3Expr& e, double k) { return {k * e[0], k * e[1], k * e[2]}; }
Vec3Expr add(const Vec3Expr& a, const Vec3Expr& b) { return {a[0] + b[0], a[1] + b[1], a[2] + b[2]}; }
Vec3Expr sub(const Vec3Expr& a, const Vec3Expr& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }
Vec3Expr constant_times(const Vec3& c, const LinExpr& one) { return {c(0) * one, c(1) * one, c(2) * one}; }

// ---- ModelBuilder ------------------------------------------------------------------------

int ModelBuilder::push_block(int dim, int group, const std::string& label) {
    PsdBlockSpec s;
    s.id = static_cast<int>(blocks_.size());
    s.dim = dim;
    s.group = group;
    s.label = label;
    blocks_.push_back(s);
    offsets_.push_back(next_offset_);
    next_offset_ += dim * dim;
    groups_[group].blocks.push_back(s.id);
    return s.id;
}

RotRef ModelBuilder::add_rotation(const std::string& label) {
    groups_.push_back({kRotationTrace, {}});
    RotRef r{push_block(7, static_cast<int>(groups_.size()) - 1, label)};
    add_rows(rotation_constraint_rows(offsets_[r.block]));
    return r;
}

RotRef ModelBuilder::add_pair(const std::string& label) {
    groups_.push_back({kRotationTrace, {}});
    RotRef r{push_block(7, static_cast<int>(groups_.size()) - 1, label)};
    add_rows(pair_structure_rows(offsets_[r.block]));
    return r;
}

TransRef ModelBuilder::add_translation(const std::string& label) {
    groups_.push_back({kTranslationTrace, {}});
    const int g = static_cast<int>(groups_.size()) - 1;
    TransRef t;
    for (int l = 0; l < 3; ++l) t.blocks[l] = push_block(4, g, label + "/" + std::to_string(l + 1));
    add_rows(translation_constraint_rows({offsets_[t.blocks[0]], offsets_[t.blocks[1]], offsets_[t.blocks[2]]}));
    return t;
}

int ModelBuilder::add_free(const std::string& label) {
    free_labels_.push_back(label);
    return static_cast<int>(free_labels_.size()) - 1;
}

LinExpr ModelBuilder::entry(int block, int i, int j) const {
    if (block < 0 || block >= static_cast<int>(blocks_.size())) throw Error(ErrorCode::InvalidBinding, "unknown block");
    return at(offsets_[block], blocks_[block].dim, i, j);
}

// Free variables get provisional negative indices resolved in build().
LinExpr ModelBuilder::free_var(int k) const {
    if (k < 0 || k >= static_cast<int>(free_labels_.size())) throw Error(ErrorCode::InvalidBinding, "unknown free variable");
    return LinExpr::var(-1 - k);
}

Vec3Expr ModelBuilder::rot_col(RotRef r, int col) const {
    const int b = r.block;
    if (col == 0) return {entry(b, 0, 6), entry(b, 1, 6), entry(b, 2, 6)};
    if (col == 1) return {entry(b, 3, 6), entry(b, 4, 6), entry(b, 5, 6)};
    if (col == 2)
        return {entry(b, 1, 5) - entry(b, 2, 4), entry(b, 2, 3) - entry(b, 0, 5), entry(b, 0, 4) - entry(b, 1, 3)};
    throw Error(ErrorCode::InvalidBinding, "rotation column index out of range");
}

LinExpr ModelBuilder::one(RotRef r) const { return entry(r.block, 6, 6); }
LinExpr ModelBuilder::tau(TransRef t) const { return entry(t.blocks[0], 2, 2); }

Vec3Expr ModelBuilder::dir(TransRef t) const {
    Vec3Expr v;
    for (int l = 0; l < 3; ++l) v[l] = entry(t.blocks[l], 0, 2) + entry(t.blocks[l], 1, 3);
    return v;
}

Vec3Expr ModelBuilder::scaled_dir(TransRef t) const {
    Vec3Expr v;
    for (int l = 0; l < 3; ++l) v[l] = entry(t.blocks[l], 0, 2);
    return v;
}

LinExpr ModelBuilder::cross_trace(int block) const {
    return entry(block, 0, 3) + entry(block, 1, 4) + entry(block, 2, 5);
}

void ModelBuilder::add_eq(const LinExpr& e, double rhs) { rows_.push_back(eq_row(e, rhs)); }

void ModelBuilder::add_eq(const Vec3Expr& e, const Vec3& rhs) {
    for (int k = 0; k < 3; ++k) add_eq(e[k], rhs(k));
}

void ModelBuilder::add_range(const LinExpr& e, double lo, double hi) { rows_.push_back(range_row(e, lo, hi)); }

void ModelBuilder::add_residual(const LinExpr& e) {
    if (e.constant != 0.0) throw Error(ErrorCode::InvalidObjective, "objective residual must be homogeneous");
    residuals_.push_back(e);
}

void ModelBuilder::add_residual(const Vec3Expr& e) {
    for (const auto& x : e) add_residual(x);
}

void ModelBuilder::add_rows(const std::vector<ConstraintRow>& rows) { rows_.insert(rows_.end(), rows.begin(), rows.end()); }

TcsdpProblem ModelBuilder::build() const {
    TcsdpProblem p;
    p.blocks = blocks_;
    p.groups = groups_;
    p.n_free = static_cast<int>(free_labels_.size());
    p.free_labels = free_labels_;
    const int nb = next_offset_;
    auto fix = [nb](LinExpr e) {
        for (auto& t : e.terms)
            if (t.first < 0) t.first = nb + (-1 - t.first);
        return e;
    };
    for (const auto& r : residuals_) p.L.push_back(fix(r));
    for (const auto& r : rows_) {
        ConstraintRow c = r;
        c.a = fix(c.a);
        p.rows.push_back(std::move(c));
    }
    p.finalize();
    return p;
}

// ---- constant-transformation constraints ----------------------------------------------

FrameExpr frame_known_r1(const Mat3& R1, const LinExpr* tau, const Vec3Expr* v, const std::array<Vec3Expr, 2>* r2) {
    FrameExpr f;
    if (tau) {
        f.tau = *tau;
        f.has_tau = true;
    }
    for (int l1 = 0; l1 < 3; ++l1) {
        const Vec3 col = R1.col(l1);
        if (v) f.dir[l1] = dot(col, *v);
        if (r2)
            for (int l2 = 0; l2 < 2; ++l2) f.rot[l1][l2] = dot(col, (*r2)[l2]);
    }
    f.has_dir = v != nullptr;
    f.has_rot = r2 != nullptr;
    return f;
}

FrameExpr frame_pair(const ModelBuilder& mb, const LinExpr& tau, const PairProductBlock& ya) {
    FrameExpr f;
    f.tau = tau;
    for (int l1 = 0; l1 < 3; ++l1) {
        f.dir[l1] = mb.cross_trace(ya.blocks[l1]);
        for (int l2 = 0; l2 < 2; ++l2) f.rot[l1][l2] = mb.cross_trace(ya.blocks[3 + 2 * l1 + l2]);
    }
    f.has_tau = f.has_dir = f.has_rot = true;
    return f;
}

std::vector<ConstraintRow> transform_equality_rows(const FrameExpr& a, const FrameExpr& b) {
    if (a.has_tau != b.has_tau || a.has_dir != b.has_dir || a.has_rot != b.has_rot)
        throw Error(ErrorCode::InvalidBinding, "frames bind different symbols");
    std::vector<ConstraintRow> rows;
    if (a.has_tau) rows.push_back(eq_row(a.tau - b.tau, 0.0));
    if (a.has_dir)
        for (int l1 = 0; l1 < 3; ++l1) rows.push_back(eq_row(a.dir[l1] - b.dir[l1], 0.0));
    if (a.has_rot)
        for (int l1 = 0; l1 < 3; ++l1)
            for (int l2 = 0; l2 < 2; ++l2) rows.push_back(eq_row(a.rot[l1][l2] - b.rot[l1][l2], 0.0));
    return rows;
}

PairProductBlock add_pair_product(ModelBuilder& mb, const std::string& label) {
    PairProductBlock ya;
    for (int k = 0; k < 9; ++k) ya.blocks[k] = mb.add_pair(label + "/" + std::to_string(k + 1)).block;
    return ya;
}

std::vector<ConstraintRow> pair_product_rows(const ModelBuilder& mb, const PairProductBlock& ya,
                                             const std::array<Vec3Expr, 3>& r1_cols, const Vec3Expr& v,
                                             const std::array<Vec3Expr, 2>& r2_cols) {
    std::vector<ConstraintRow> rows;
    auto link = [&](int block, const Vec3Expr& first, const Vec3Expr& second) {
        for (int a = 0; a < 3; ++a) {
            rows.push_back(eq_row(mb.entry(block, a, 6) - first[a], 0.0));
            rows.push_back(eq_row(mb.entry(block, 3 + a, 6) - second[a], 0.0));
        }
    };
    for (int l1 = 0; l1 < 3; ++l1) {
        link(ya.blocks[l1], r1_cols[l1], v);
        for (int l2 = 0; l2 < 2; ++l2) link(ya.blocks[3 + 2 * l1 + l2], r1_cols[l1], r2_cols[l2]);
    }
    return rows;
}

}  // namespace tcsdp
