#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "manifolds.hpp"
#include "problem.hpp"

namespace tcsdp {

using Vec2 = Eigen::Vector2d;
using Mat4 = Eigen::Matrix4d;

Mat4 make_transform(const Mat3& R, const Vec3& t);
Mat4 inverse_transform(const Mat4& T);

// ---- SP robot ------------------------------------------------------------------------

struct SpRobot {
    Vec3 base = Vec3::Zero();
    double tau_u = 1.0;
    double tau = 0.0;
    Vec3 v = Vec3::UnitZ();
};

Vec3 sp_forward(const Vec3& t_base, double tau, const Vec3& v, double tau_u);
// Pose reaching `target` from `base` (Lemma on rigid translation); requires
// ||target - base|| <= tau_u. A zero displacement returns tau = 0, v = e_z.
SpRobot sp_reach(const Vec3& base, const Vec3& target, double tau_u);

Vec3 bearing_from_pixel(const Vec2& p, double f_cam);

// Twice the diameter of the centroid-centred bounding sphere of the points.
double scene_tau_u(const std::vector<Vec3>& pts);

// ---- scenarios ---------------------------------------------------------------------

struct PnpScenario {
    std::vector<Vec3> points;
    std::vector<Vec2> pixels;
    double f_cam = 500.0;
    bool has_truth = false;
    Mat3 R_true = Mat3::Identity();   // camera orientation in world
    Vec3 t_true = Vec3::Zero();       // camera position in world
};

struct HandEyeScenario {
    int m = 0, n = 0;
    double f_cam = 500.0;
    std::vector<Mat4> T_e;                     // known end-effector poses in world
    std::vector<Vec3> features;                // body coordinates on the target
    std::vector<std::vector<Vec2>> pixels;     // m x n
    bool has_truth = false;
    Mat4 X = Mat4::Identity();                 // end effector -> camera
    Mat4 T_f = Mat4::Identity();               // target pose in world
};

struct DualCalScenario {
    int m = 0;
    std::vector<Mat4> A, B, C;
    bool has_truth = false;
    Mat4 X = Mat4::Identity(), Y = Mat4::Identity(), Z = Mat4::Identity();
};

// ---- builders ------------------------------------------------------------------------

struct PnpIndex {
    RotRef cam;
    std::vector<TransRef> rays;
    std::array<int, 3> t_free{};
    double tau_u = 0;
    std::vector<std::string> warnings;
};

struct HandEyeIndex {
    std::vector<RotRef> cam;
    RotRef target;
    std::vector<TransRef> mount;                // e_i -> c_i
    std::vector<std::vector<TransRef>> rays;    // c_i -> feature j
    double tau_u = 0;
    std::vector<std::string> warnings;
};

struct DualCalIndex {
    std::vector<RotRef> R_c, R_eb, R_t;
    std::vector<TransRef> ea_c, w_b, eb_t;
    std::vector<PairProductBlock> ya;
    double tau_u = 0;
    double gamma_w = 1.0;
};

template <class Index>
struct Built {
    TcsdpProblem problem;
    Index index;
};

Built<PnpIndex> build_pnp(const PnpScenario& s, double tau_u);
Built<HandEyeIndex> build_handeye(const HandEyeScenario& s, double tau_u);
Built<DualCalIndex> build_dualcal(const DualCalScenario& s, double tau_u, double gamma_w = 1.0);

// Lifted ground truth (synthetic scenarios only).
Point lift_truth(const PnpScenario& s, const Built<PnpIndex>& b);
Point lift_truth(const HandEyeScenario& s, const Built<HandEyeIndex>& b);
Point lift_truth(const DualCalScenario& s, const Built<DualCalIndex>& b);

// ---- extraction ------------------------------------------------------------------------

// Rotation read through g(.) then, if the orthogonality defect is in
// (1e-9, 1e-4], projected to SO(3); larger defects raise ExtractionFailed.
Mat3 clean_rotation(const Mat3& R);

struct PnpSolution {
    Mat3 R;
    Vec3 t;
    std::vector<double> tau;
    std::vector<Vec3> v;
};

struct HandEyeSolution {
    Mat4 X;
    std::vector<Mat4> T_c;
};

struct DualCalSolution {
    Mat4 X, Y, Z;
};

// rank_tol < 0 skips the rank-1 gate.
PnpSolution extract_pnp(const Built<PnpIndex>& b, const Point& pt, double rank_tol = 1e-4);
HandEyeSolution extract_handeye(const HandEyeScenario& s, const Built<HandEyeIndex>& b, const Point& pt,
                                double rank_tol = 1e-4);
DualCalSolution extract_dualcal(const DualCalScenario& s, const Built<DualCalIndex>& b, const Point& pt,
                                double rank_tol = 1e-4);

// max over pairs (i,j) of ||A_ij X - X B_ij||_F with A from end-effector poses
// and B from the given camera poses.
double handeye_residual(const HandEyeScenario& s, const std::vector<Mat4>& T_c, const Mat4& X);
// max over i of ||A_i X B_i - Y C_i Z||_F
double dualcal_residual(const DualCalScenario& s, const Mat4& X, const Mat4& Y, const Mat4& Z);

}  // namespace tcsdp
