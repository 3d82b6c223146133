#pragma once

#include <Eigen/Dense>
#include <array>
#include <string>
#include <utility>
#include <vector>

#include "problem.hpp"

namespace tcsdp {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Vec3Expr = std::array<LinExpr, 3>;

constexpr double kRotationTrace = 3.0;
constexpr double kTranslationTrace = 4.0;

struct TranslationBlock {
    std::array<Eigen::MatrixXd, 3> Y;  // three 4x4 matrices
};

// ---- lifts and recovery -----------------------------------------------------

// Outer product of (R col1; R col2; 1).
Eigen::MatrixXd lift_rotation(const Mat3& R);
// Columns 1-2 from the corner column, column 3 from the bilinear submatrix.
Mat3 recover_rotation(const Eigen::MatrixXd& Y, double tol = 1e-6);

// Y_l = outer product of (sqrt(tau) v_l, sqrt(1-tau) v_l, sqrt(tau), sqrt(1-tau)).
TranslationBlock lift_translation(double tau, const Vec3& v);
std::pair<double, Vec3> recover_translation(const TranslationBlock& b, double tol = 1e-6);
Vec3 recover_scaled_direction(const TranslationBlock& b, double tol = 1e-6);

// Pair-product lift of (a; b; 1) for unit a, b.
Eigen::MatrixXd lift_pair(const Vec3& a, const Vec3& b);

// ---- constraint rows (indices are offset + i*d + j) ---------------------------

std::vector<ConstraintRow> rotation_constraint_rows(int offset);
std::vector<ConstraintRow> pair_structure_rows(int offset);
std::vector<ConstraintRow> translation_constraint_rows(const std::array<int, 3>& offsets);

double rotation_row_residual(const Eigen::MatrixXd& Y);       // max |row residual|
double translation_row_residual(const TranslationBlock& b);   // max violation incl. bounds

bool rank1_check(const std::vector<Eigen::MatrixXd>& group, double lambda_bar, double tol);

// ---- model building -------------------------------------------------------------

struct RotRef { int block = -1; };
struct TransRef { std::array<int, 3> blocks{-1, -1, -1}; };
struct PairProductBlock { std::array<int, 9> blocks{}; };

// Frame bindings for the constant-transformation constraint between two
// frames: tau, R1^(l1)T v for l1 = 1..3, and R1^(l1)T R2^(l2) for l2 = 1..2,
// each already expressed linearly in the lifted variables.
struct FrameExpr {
    LinExpr tau;
    std::array<LinExpr, 3> dir;
    std::array<std::array<LinExpr, 2>, 3> rot;
    bool has_tau = false, has_dir = false, has_rot = false;
};

class ModelBuilder {
public:
    RotRef add_rotation(const std::string& label);
    RotRef add_pair(const std::string& label);  // pair-product 7x7 (no zero cross-trace)
    TransRef add_translation(const std::string& label);
    int add_free(const std::string& label);

    LinExpr entry(int block, int i, int j) const;
    LinExpr free_var(int k) const;
    Vec3Expr rot_col(RotRef r, int col) const;  // col in {0,1,2}
    LinExpr one(RotRef r) const;                // corner entry, fixed to 1
    LinExpr tau(TransRef t) const;
    Vec3Expr dir(TransRef t) const;             // v
    Vec3Expr scaled_dir(TransRef t) const;      // tau * v
    LinExpr cross_trace(int block) const;       // trace(Y(1:3,4:6))

    void add_eq(const LinExpr& e, double rhs = 0.0);
    void add_eq(const Vec3Expr& e, const Vec3& rhs = Vec3::Zero());
    void add_range(const LinExpr& e, double lo, double hi);
    void add_residual(const LinExpr& e);  // constant must be zero
    void add_residual(const Vec3Expr& e);

    void add_rows(const std::vector<ConstraintRow>& rows);
    const std::vector<PsdBlockSpec>& blocks() const { return blocks_; }
    int block_offset(int b) const { return offsets_[b]; }

    TcsdpProblem build() const;

private:
    int push_block(int dim, int group, const std::string& label);
    std::vector<PsdBlockSpec> blocks_;
    std::vector<TraceGroup> groups_;
    std::vector<int> offsets_;
    int next_offset_ = 0;
    std::vector<std::string> free_labels_;
    std::vector<ConstraintRow> rows_;
    std::vector<LinExpr> residuals_;
};

// Linear combination sum_k coef(k) * cols[k].
LinExpr dot(const Vec3& coef, const Vec3Expr& e);
Vec3Expr combine(const std::array<Vec3Expr, 3>& cols, const Vec3& coef);  // sum_k cols[k] * coef(k)
Vec3Expr scale(const Vec3Expr& e, double k);
Vec3Expr add(const Vec3Expr& a, const Vec3Expr& b);
Vec3Expr sub(const Vec3Expr& a, const Vec3Expr& b);
Vec3Expr constant_times(const Vec3& c, const LinExpr& one);

// Frame whose R1 is a known rotation; R2 columns given as linear reads.
FrameExpr frame_known_r1(const Mat3& R1, const LinExpr* tau, const Vec3Expr* v,
                         const std::array<Vec3Expr, 2>* r2_cols);
// Frame whose R1 is unknown; products read from pair-product cross-traces.
FrameExpr frame_pair(const ModelBuilder& mb, const LinExpr& tau, const PairProductBlock& ya);

// Rows equating two frames: 1 (tau) + 3 (direction) + 6 (rotation) scalar rows.
std::vector<ConstraintRow> transform_equality_rows(const FrameExpr& a, const FrameExpr& b);

// Nine pair-product blocks: three lift (R1^(l1), v, 1), six lift (R1^(l1), R2^(l2), 1).
PairProductBlock add_pair_product(ModelBuilder& mb, const std::string& label);
// Structural rows are emitted by add_pair; these are the linking rows.
std::vector<ConstraintRow> pair_product_rows(const ModelBuilder& mb, const PairProductBlock& ya,
                                             const std::array<Vec3Expr, 3>& r1_cols, const Vec3Expr& v,
                                             const std::array<Vec3Expr, 2>& r2_cols);

}  // namespace tcsdp
