#include "robots.hpp"

#include <cmath>

#include "error.hpp"
#include "refine.hpp"

namespace tcsdp {

Mat4 make_transform(const Mat3& R, const Vec3& t) {
    Mat4 T = Mat4::Identity();
    T.topLeftCorner<3, 3>() = R;
    T.topRightCorner<3, 1>() = t;
    return T;
}

Mat4 inverse_transform(const Mat4& T) {
    const Mat3 R = T.topLeftCorner<3, 3>();
    const Vec3 t = T.topRightCorner<3, 1>();
    return make_transform(R.transpose(), -R.transpose() * t);
}

Vec3 sp_forward(const Vec3& t_base, double tau, const Vec3& v, double tau_u) { return t_base + tau_u * tau * v; }

SpRobot sp_reach(const Vec3& base, const Vec3& target, double tau_u) {
    SpRobot r;
    r.base = base;
    r.tau_u = tau_u;
    const Vec3 d = target - base;
    const double len = d.norm();
    if (len > tau_u * (1.0 + 1e-12)) throw Error(ErrorCode::InvalidInput, "target beyond the extension cap");
    if (len == 0.0) return r;
    r.tau = std::min(1.0, len / tau_u);
    r.v = d / len;
    return r;
}

Vec3 bearing_from_pixel(const Vec2& p, double f_cam) {
    if (!(f_cam > 0)) throw Error(ErrorCode::InvalidInput, "focal length must be positive");
    return Vec3(p(0), p(1), f_cam).normalized();
}

double scene_tau_u(const std::vector<Vec3>& pts) {
    if (pts.empty()) throw Error(ErrorCode::InvalidInput, "no scene points");
    Vec3 c = Vec3::Zero();
    for (const auto& p : pts) c += p;
    c /= static_cast<double>(pts.size());
    double r = 0;
    for (const auto& p : pts) r = std::max(r, (p - c).norm());
    return 2.0 * std::max(2.0 * r, 1e-6);
}

namespace {

std::array<Vec3Expr, 3> rot_cols(const ModelBuilder& mb, RotRef r) {
    return {mb.rot_col(r, 0), mb.rot_col(r, 1), mb.rot_col(r, 2)};
}

// R * p as linear reads of the lifted rotation.
Vec3Expr rotate(const ModelBuilder& mb, RotRef r, const Vec3& p) { return combine(rot_cols(mb, r), p); }

bool coplanar4(const std::vector<Vec3>& q) {
    const int n = static_cast<int>(q.size());
    if (n < 4 || n > 30) return false;
    double scale = 0;
    for (const auto& a : q)
        for (const auto& b : q) scale = std::max(scale, (a - b).norm());
    const double tol = 1e-9 * scale * scale * scale;
    for (int a = 0; a < n; ++a)
        for (int b = a + 1; b < n; ++b)
            for (int c = b + 1; c < n; ++c)
                for (int d = c + 1; d < n; ++d)
                    if (std::abs((q[b] - q[a]).cross(q[c] - q[a]).dot(q[d] - q[a])) <= tol) return true;
    return false;
}

void place_translation(Point& pt, const TransRef& t, const Vec3& base, const Vec3& target, double tau_u) {
    SpRobot r = sp_reach(base, target, tau_u);
    TranslationBlock b = lift_translation(r.tau, r.v);
    for (int l = 0; l < 3; ++l) pt.Y[t.blocks[l]] = b.Y[l];
}

Point empty_point(const TcsdpProblem& p) {
    Point pt;
    for (const auto& b : p.blocks) pt.Y.push_back(Eigen::MatrixXd::Zero(b.dim, b.dim));
    pt.free = Eigen::VectorXd::Zero(p.n_free);
    return pt;
}

void check_rank1(const TcsdpProblem& p, const Point& pt, double tol) {
    if (tol < 0) return;
    if (eigenvalue_gap(p, pt) > tol) throw Error(ErrorCode::NotRankOne, "solution blocks are not rank-1");
}

Vec3 tv_value(const Point& pt, const TransRef& t) {
    TranslationBlock b{{pt.Y[t.blocks[0]], pt.Y[t.blocks[1]], pt.Y[t.blocks[2]]}};
    return recover_scaled_direction(b, 1e-4);
}

Mat3 rot_value(const Point& pt, RotRef r) { return clean_rotation(recover_rotation(pt.Y[r.block], 1e-4)); }

}  // namespace

// ---- PnP -----------------------------------------------------------------------------------

Built<PnpIndex> build_pnp(const PnpScenario& s, double tau_u) {
    const int n = static_cast<int>(s.points.size());
    if (n < 3 || static_cast<int>(s.pixels.size()) != n)
        throw Error(ErrorCode::DegenerateScenario, "PnP needs at least 3 points with one pixel each");
    if (!(tau_u > 0)) throw Error(ErrorCode::InvalidInput, "tau_u must be positive");
    Built<PnpIndex> out;
    PnpIndex& ix = out.index;
    ix.tau_u = tau_u;
    if (n < 6) ix.warnings.push_back("fewer than 6 points: pose may not be unique");
    if (coplanar4(s.points)) ix.warnings.push_back("four or more points are coplanar");
    ModelBuilder mb;
    ix.cam = mb.add_rotation("R_c");
    for (int k = 0; k < 3; ++k) ix.t_free[k] = mb.add_free(std::string("t_c.") + "xyz"[k]);
    Vec3Expr t_c{mb.free_var(ix.t_free[0]), mb.free_var(ix.t_free[1]), mb.free_var(ix.t_free[2])};
    for (int i = 0; i < n; ++i) {
        TransRef tr = mb.add_translation("ray" + std::to_string(i + 1));
        ix.rays.push_back(tr);
        mb.add_eq(add(t_c, scale(mb.scaled_dir(tr), tau_u)), s.points[i]);
        mb.add_residual(sub(mb.dir(tr), rotate(mb, ix.cam, bearing_from_pixel(s.pixels[i], s.f_cam))));
    }
    out.problem = mb.build();
    return out;
}

Point lift_truth(const PnpScenario& s, const Built<PnpIndex>& b) {
    if (!s.has_truth) throw Error(ErrorCode::InvalidInput, "scenario has no ground truth");
    Point pt = empty_point(b.problem);
    pt.Y[b.index.cam.block] = lift_rotation(s.R_true);
    for (size_t i = 0; i < s.points.size(); ++i)
        place_translation(pt, b.index.rays[i], s.t_true, s.points[i], b.index.tau_u);
    for (int k = 0; k < 3; ++k) pt.free(b.index.t_free[k]) = s.t_true(k);
    return pt;
}

PnpSolution extract_pnp(const Built<PnpIndex>& b, const Point& pt, double rank_tol) {
    check_rank1(b.problem, pt, rank_tol);
    PnpSolution sol;
    sol.R = rot_value(pt, b.index.cam);
    for (int k = 0; k < 3; ++k) sol.t(k) = pt.free(b.index.t_free[k]);
    for (const auto& r : b.index.rays) {
        TranslationBlock tb{{pt.Y[r.blocks[0]], pt.Y[r.blocks[1]], pt.Y[r.blocks[2]]}};
        auto [tau, v] = recover_translation(tb, 1e-4);
        sol.tau.push_back(tau);
        sol.v.push_back(v);
    }
    return sol;
}

// ---- hand-eye ---------------------------------------------------------------------------------

Built<HandEyeIndex> build_handeye(const HandEyeScenario& s, double tau_u) {
    const int m = s.m, n = s.n;
    if (m < 2) throw Error(ErrorCode::DegenerateScenario, "hand-eye needs at least 2 configurations");
    if (n < 3) throw Error(ErrorCode::DegenerateScenario, "hand-eye needs at least 3 features");
    if (static_cast<int>(s.T_e.size()) != m || static_cast<int>(s.features.size()) != n ||
        static_cast<int>(s.pixels.size()) != m)
        throw Error(ErrorCode::InvalidInput, "hand-eye scenario sizes inconsistent");
    for (const auto& row : s.pixels)
        if (static_cast<int>(row.size()) != n) throw Error(ErrorCode::InvalidInput, "pixel table is not m x n");
    if (!(tau_u > 0)) throw Error(ErrorCode::InvalidInput, "tau_u must be positive");
    Built<HandEyeIndex> out;
    HandEyeIndex& ix = out.index;
    ix.tau_u = tau_u;
    if (n < 6) ix.warnings.push_back("fewer than 6 features");
    if (coplanar4(s.features)) ix.warnings.push_back("four or more features are coplanar");
    ModelBuilder mb;
    for (int i = 0; i < m; ++i) ix.cam.push_back(mb.add_rotation("R_c" + std::to_string(i + 1)));
    ix.target = mb.add_rotation("R_f");
    for (int i = 0; i < m; ++i) ix.mount.push_back(mb.add_translation("e" + std::to_string(i + 1) + "c"));
    ix.rays.resize(m);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j)
            ix.rays[i].push_back(mb.add_translation("c" + std::to_string(i + 1) + "f" + std::to_string(j + 1)));

    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j)
            mb.add_residual(sub(mb.dir(ix.rays[i][j]), rotate(mb, ix.cam[i], bearing_from_pixel(s.pixels[i][j], s.f_cam))));

    // Closure p(p(t_e_i, mount_i), ray_ij) - R_f f_j is the same point for every (i,j).
    auto chain = [&](int i, int j) {
        return sub(add(scale(mb.scaled_dir(ix.mount[i]), tau_u), scale(mb.scaled_dir(ix.rays[i][j]), tau_u)),
                   rotate(mb, ix.target, s.features[j]));
    };
    const Vec3Expr ref = chain(0, 0);
    const Vec3 te0 = s.T_e[0].topRightCorner<3, 1>();
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) {
            if (i == 0 && j == 0) continue;
            const Vec3 tei = s.T_e[i].topRightCorner<3, 1>();
            mb.add_eq(sub(chain(i, j), ref), te0 - tei);
        }

    // Constant mount transform X across configurations.
    auto frame = [&](int i) {
        const Mat3 Re = s.T_e[i].topLeftCorner<3, 3>();
        LinExpr tau = mb.tau(ix.mount[i]);
        Vec3Expr v = mb.dir(ix.mount[i]);
        std::array<Vec3Expr, 2> r2{mb.rot_col(ix.cam[i], 0), mb.rot_col(ix.cam[i], 1)};
        return frame_known_r1(Re, &tau, &v, &r2);
    };
    const FrameExpr f0 = frame(0);
    for (int i = 1; i < m; ++i) mb.add_rows(transform_equality_rows(frame(i), f0));
    out.problem = mb.build();
    return out;
}

Point lift_truth(const HandEyeScenario& s, const Built<HandEyeIndex>& b) {
    if (!s.has_truth) throw Error(ErrorCode::InvalidInput, "scenario has no ground truth");
    Point pt = empty_point(b.problem);
    const Mat3 Rf = s.T_f.topLeftCorner<3, 3>();
    const Vec3 tf = s.T_f.topRightCorner<3, 1>();
    pt.Y[b.index.target.block] = lift_rotation(Rf);
    for (int i = 0; i < s.m; ++i) {
        const Mat4 Tc = s.T_e[i] * s.X;
        pt.Y[b.index.cam[i].block] = lift_rotation(Tc.topLeftCorner<3, 3>());
        const Vec3 tc = Tc.topRightCorner<3, 1>();
        place_translation(pt, b.index.mount[i], s.T_e[i].topRightCorner<3, 1>(), tc, b.index.tau_u);
        for (int j = 0; j < s.n; ++j)
            place_translation(pt, b.index.rays[i][j], tc, Rf * s.features[j] + tf, b.index.tau_u);
    }
    return pt;
}

HandEyeSolution extract_handeye(const HandEyeScenario& s, const Built<HandEyeIndex>& b, const Point& pt,
                                double rank_tol) {
    check_rank1(b.problem, pt, rank_tol);
    HandEyeSolution sol;
    for (int i = 0; i < s.m; ++i) {
        const Vec3 te = s.T_e[i].topRightCorner<3, 1>();
        sol.T_c.push_back(make_transform(rot_value(pt, b.index.cam[i]), te + b.index.tau_u * tv_value(pt, b.index.mount[i])));
    }
    sol.X = inverse_transform(s.T_e[0]) * sol.T_c[0];
    return sol;
}

double handeye_residual(const HandEyeScenario& s, const std::vector<Mat4>& T_c, const Mat4& X) {
    double worst = 0;
    for (int i = 0; i < s.m; ++i)
        for (int j = i + 1; j < s.m; ++j) {
            const Mat4 A = inverse_transform(s.T_e[i]) * s.T_e[j];
            const Mat4 B = inverse_transform(T_c[i]) * T_c[j];
            worst = std::max(worst, (A * X - X * B).norm());
        }
    return worst;
}

// ---- dual-robot calibration ------------------------------------------------------------------

Built<DualCalIndex> build_dualcal(const DualCalScenario& s, double tau_u, double gamma_w) {
    const int m = s.m;
    if (m < 2) throw Error(ErrorCode::DegenerateScenario, "dual calibration needs at least 2 configurations");
    if (static_cast<int>(s.A.size()) != m || static_cast<int>(s.B.size()) != m || static_cast<int>(s.C.size()) != m)
        throw Error(ErrorCode::InvalidInput, "dual calibration scenario sizes inconsistent");
    if (!(tau_u > 0)) throw Error(ErrorCode::InvalidInput, "tau_u must be positive");
    if (!(gamma_w > 0)) throw Error(ErrorCode::InvalidInput, "gamma_w must be positive");
    for (const auto* set : {&s.A, &s.B, &s.C})
        for (const auto& T : *set) {
            const Mat3 R = T.topLeftCorner<3, 3>();
            if ((R.transpose() * R - Mat3::Identity()).cwiseAbs().maxCoeff() > 1e-6 || R.determinant() <= 0)
                throw Error(ErrorCode::InvalidInput, "measured transform has an invalid rotation");
        }
    Built<DualCalIndex> out;
    DualCalIndex& ix = out.index;
    ix.tau_u = tau_u;
    ix.gamma_w = gamma_w;
    ModelBuilder mb;
    for (int i = 0; i < m; ++i) {
        const std::string k = std::to_string(i + 1);
        ix.R_c.push_back(mb.add_rotation("R_c" + k));
        ix.R_eb.push_back(mb.add_rotation("R_eb" + k));
        ix.R_t.push_back(mb.add_rotation("R_t" + k));
    }
    for (int i = 0; i < m; ++i) {
        const std::string k = std::to_string(i + 1);
        ix.ea_c.push_back(mb.add_translation("ea" + k + "c"));
        ix.w_b.push_back(mb.add_translation("w" + k + "b"));
        ix.eb_t.push_back(mb.add_translation("eb" + k + "t"));
    }
    for (int i = 0; i < m; ++i) ix.ya.push_back(add_pair_product(mb, "Ya" + std::to_string(i + 1)));

    const LinExpr one = mb.one(ix.R_c[0]);
    const double sw = std::sqrt(gamma_w);
    for (int i = 0; i < m; ++i) {
        const Mat3 RB = s.B[i].topLeftCorner<3, 3>();
        const Vec3 tB = s.B[i].topRightCorner<3, 1>();
        const Mat3 RC = s.C[i].topLeftCorner<3, 3>();
        const Vec3 tC = s.C[i].topRightCorner<3, 1>();
        const Vec3 ta = s.A[i].topRightCorner<3, 1>();
        const auto c = rot_cols(mb, ix.R_c[i]);
        const auto t = rot_cols(mb, ix.R_t[i]);
        const auto e = rot_cols(mb, ix.R_eb[i]);
        for (int k = 0; k < 3; ++k) mb.add_residual(sub(combine(c, RB.col(k)), t[k]));
        const Vec3Expr p1 = add(add(constant_times(ta, one), scale(mb.scaled_dir(ix.ea_c[i]), tau_u)), combine(c, tB));
        const Vec3Expr p2 = add(add(scale(mb.scaled_dir(ix.w_b[i]), tau_u), combine(e, RC.transpose() * tC)),
                                scale(mb.scaled_dir(ix.eb_t[i]), tau_u));
        mb.add_residual(scale(sub(p1, p2), sw));
        mb.add_rows(pair_product_rows(mb, ix.ya[i], e, mb.dir(ix.eb_t[i]), {t[0], t[1]}));
    }

    auto frame_x = [&](int i) {
        LinExpr tau = mb.tau(ix.ea_c[i]);
        Vec3Expr v = mb.dir(ix.ea_c[i]);
        std::array<Vec3Expr, 2> r2{mb.rot_col(ix.R_c[i], 0), mb.rot_col(ix.R_c[i], 1)};
        return frame_known_r1(s.A[i].topLeftCorner<3, 3>(), &tau, &v, &r2);
    };
    // Base of robot b is fixed in the world: R_w = I, R_b = R_eb R_C^T.
    auto frame_y = [&](int i) {
        const Mat3 RC = s.C[i].topLeftCorner<3, 3>();
        const auto e = rot_cols(mb, ix.R_eb[i]);
        LinExpr tau = mb.tau(ix.w_b[i]);
        Vec3Expr v = mb.dir(ix.w_b[i]);
        std::array<Vec3Expr, 2> r2{combine(e, RC.row(0).transpose()), combine(e, RC.row(1).transpose())};
        return frame_known_r1(Mat3::Identity(), &tau, &v, &r2);
    };
    auto frame_z = [&](int i) { return frame_pair(mb, mb.tau(ix.eb_t[i]), ix.ya[i]); };
    const FrameExpr x0 = frame_x(0), y0 = frame_y(0), z0 = frame_z(0);
    for (int i = 1; i < m; ++i) {
        mb.add_rows(transform_equality_rows(frame_x(i), x0));
        mb.add_rows(transform_equality_rows(frame_y(i), y0));
        mb.add_rows(transform_equality_rows(frame_z(i), z0));
    }
    out.problem = mb.build();
    return out;
}

Point lift_truth(const DualCalScenario& s, const Built<DualCalIndex>& b) {
    if (!s.has_truth) throw Error(ErrorCode::InvalidInput, "scenario has no ground truth");
    Point pt = empty_point(b.problem);
    const auto& ix = b.index;
    const Vec3 tY = s.Y.topRightCorner<3, 1>();
    for (int i = 0; i < s.m; ++i) {
        const Mat4 Tc = s.A[i] * s.X;
        const Mat4 Tt = Tc * s.B[i];
        const Mat4 Teb = s.Y * s.C[i];
        const Mat3 Reb = Teb.topLeftCorner<3, 3>();
        const Mat3 Rt = Tt.topLeftCorner<3, 3>();
        pt.Y[ix.R_c[i].block] = lift_rotation(Tc.topLeftCorner<3, 3>());
        pt.Y[ix.R_eb[i].block] = lift_rotation(Reb);
        pt.Y[ix.R_t[i].block] = lift_rotation(Rt);
        place_translation(pt, ix.ea_c[i], s.A[i].topRightCorner<3, 1>(), Tc.topRightCorner<3, 1>(), ix.tau_u);
        place_translation(pt, ix.w_b[i], Vec3::Zero(), tY, ix.tau_u);
        const Vec3 teb = Teb.topRightCorner<3, 1>();
        const Vec3 tt = Tt.topRightCorner<3, 1>();
        place_translation(pt, ix.eb_t[i], teb, tt, ix.tau_u);
        const Vec3 v = sp_reach(teb, tt, ix.tau_u).v;
        for (int l1 = 0; l1 < 3; ++l1) {
            pt.Y[ix.ya[i].blocks[l1]] = lift_pair(Reb.col(l1), v);
            for (int l2 = 0; l2 < 2; ++l2) pt.Y[ix.ya[i].blocks[3 + 2 * l1 + l2]] = lift_pair(Reb.col(l1), Rt.col(l2));
        }
    }
    return pt;
}

DualCalSolution extract_dualcal(const DualCalScenario& s, const Built<DualCalIndex>& b, const Point& pt,
                                double rank_tol) {
    check_rank1(b.problem, pt, rank_tol);
    const auto& ix = b.index;
    const Mat3 Rc = rot_value(pt, ix.R_c[0]);
    const Mat3 Reb = rot_value(pt, ix.R_eb[0]);
    const Mat3 Rt = rot_value(pt, ix.R_t[0]);
    const Mat3 RA = s.A[0].topLeftCorner<3, 3>();
    const Mat3 RC = s.C[0].topLeftCorner<3, 3>();
    DualCalSolution sol;
    sol.X = make_transform(clean_rotation(RA.transpose() * Rc), RA.transpose() * ix.tau_u * tv_value(pt, ix.ea_c[0]));
    sol.Y = make_transform(clean_rotation(Reb * RC.transpose()), ix.tau_u * tv_value(pt, ix.w_b[0]));
    sol.Z = make_transform(clean_rotation(Reb.transpose() * Rt), Reb.transpose() * ix.tau_u * tv_value(pt, ix.eb_t[0]));
    return sol;
}

double dualcal_residual(const DualCalScenario& s, const Mat4& X, const Mat4& Y, const Mat4& Z) {
    double worst = 0;
    for (int i = 0; i < s.m; ++i) worst = std::max(worst, (s.A[i] * X * s.B[i] - Y * s.C[i] * Z).norm());
    return worst;
}

Mat3 clean_rotation(const Mat3& R) {
    const double defect = (R.transpose() * R - Mat3::Identity()).cwiseAbs().maxCoeff();
    if (!std::isfinite(defect) || defect > 1e-4 || R.determinant() <= 0)
        throw Error(ErrorCode::ExtractionFailed, "recovered matrix is far from SO(3)");
    if (defect <= 1e-9) return R;
    Eigen::JacobiSVD<Mat3> svd(R, Eigen::ComputeFullU | Eigen::ComputeFullV);
    return svd.matrixU() * svd.matrixV().transpose();
}

}  // namespace tcsdp
