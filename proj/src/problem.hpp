#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "conic.hpp"

namespace tcsdp {

// Sparse linear functional over the problem variables
// x = [vec(Y_1); ...; vec(Y_p); free scalars]. Block entries are addressed by
// their upper-triangle position; a coefficient on Y(i,j) multiplies that one
// (symmetric) entry.
struct LinExpr {
    std::vector<std::pair<int, double>> terms;
    double constant = 0.0;

    LinExpr() = default;
    explicit LinExpr(double k) : constant(k) {}
    static LinExpr var(int index, double coef = 1.0);

    LinExpr& operator+=(const LinExpr& o);
    LinExpr& operator-=(const LinExpr& o);
    LinExpr& operator*=(double k);
    void compact();  // merge duplicates, drop exact zeros
    double eval(const Eigen::VectorXd& x) const;
};

LinExpr operator+(LinExpr a, const LinExpr& b);
LinExpr operator-(LinExpr a, const LinExpr& b);
LinExpr operator*(double k, LinExpr a);
LinExpr operator*(LinExpr a, double k);

struct PsdBlockSpec {
    int id = 0;
    int dim = 1;
    int group = 0;
    std::string label;
};

struct TraceGroup {
    double trace = 1.0;
    std::vector<int> blocks;
};

// lo <= a^T x <= hi; equality when lo == hi.
struct ConstraintRow {
    LinExpr a;  // constant must be zero
    double lo = 0.0;
    double hi = 0.0;
    bool is_equality() const { return lo == hi; }
};

enum class Sense { Eq, Ge, Le };

// One scalar side of a constraint, as seen by the dual.
struct ConstraintSide {
    int row;  // index into all_rows()
    double rhs;
    Sense sense;
};

class TcsdpProblem {
public:
    std::vector<PsdBlockSpec> blocks;
    std::vector<TraceGroup> groups;
    int n_free = 0;
    std::vector<std::string> free_labels;
    std::vector<LinExpr> L;  // objective ||L x||^2 + c^T x
    LinExpr c;
    std::vector<ConstraintRow> rows;  // trace rows are implied by groups

    void finalize();  // computes offsets, validates; throws InvalidInput
    int block_offset(int b) const { return offset_[b]; }
    int entry(int b, int i, int j) const;
    // Block entry index -> (block, i, j) with i <= j; block = -1 for free vars.
    void decode(int index, int& b, int& i, int& j) const;
    int free_index(int k) const { return n_block_entries_ + k; }
    int n_block_entries() const { return n_block_entries_; }
    int n_vars() const { return n_block_entries_ + n_free; }
    double lambda_bar_s() const;

    std::vector<ConstraintRow> trace_rows() const;
    std::vector<ConstraintRow> all_rows() const;  // rows then trace rows
    std::vector<ConstraintSide> sides() const;

    Eigen::SparseMatrix<double> L_matrix() const;    // r x n_vars
    Eigen::SparseMatrix<double> Q_matrix() const;    // L^T L, n_vars x n_vars
    Eigen::VectorXd c_vector() const;

private:
    std::vector<int> offset_;
    int n_block_entries_ = 0;
};

// Point in problem space.
struct Point {
    std::vector<Eigen::MatrixXd> Y;
    Eigen::VectorXd free;
};

Eigen::VectorXd flatten(const TcsdpProblem& p, const Point& pt);
Point unflatten(const TcsdpProblem& p, const Eigen::VectorXd& x);
double objective_value(const TcsdpProblem& p, const Point& pt);
// Largest absolute violation over all rows including trace rows.
double max_row_violation(const TcsdpProblem& p, const Point& pt);

// ---- assembly -------------------------------------------------------------

// Dense-Q entry point. Q is n_vars x n_vars over x; rows carry equalities and
// box inequalities. Validates and factors Q.
TcsdpProblem assemble_problem(const std::vector<PsdBlockSpec>& blocks, const Eigen::MatrixXd& Q,
                              const Eigen::VectorXd& c, const std::vector<ConstraintRow>& rows,
                              const std::vector<TraceGroup>& groups, int n_free = 0);

// L (r x n) with L^T L = Q, rows for zero eigenvalues dropped.
Eigen::MatrixXd factor_objective(const Eigen::MatrixXd& Q);

// ---- standard form (epigraph) --------------------------------------------

struct StandardFormSdp {
    const TcsdpProblem* problem = nullptr;
    Eigen::SparseMatrix<double> L;
    int r() const { return static_cast<int>(L.rows()); }
    // [[t, (Lx)^T], [Lx, I]]
    Eigen::MatrixXd lmi(double t, const Eigen::VectorXd& x) const;
};

StandardFormSdp to_standard_form(const TcsdpProblem& p);

// ---- lowering to the conic backend ---------------------------------------

struct Lowered {
    ConicProgram prog;
    std::vector<int> block_cone;   // cone index per problem block
    std::vector<int> extra_cone;   // caller-requested scalar cones (>= 0)
    int free_offset = 0;           // conic index of first problem free var
    int w_offset = 0;              // conic index of first w = L x
    int n_side_rows = 0;           // rows [0, n_side_rows) are constraint sides
    std::vector<ConstraintRow> all_rows;
    std::vector<ConstraintSide> sides;

    // Conic-space coefficients for a problem-space expression.
    std::vector<std::pair<int, double>> map(const LinExpr& e) const;
    int conic_block_offset(int b) const { return cone_off[block_cone[b]]; }
    int extra_index(int k) const { return cone_off[extra_cone[k]]; }
    std::vector<int> cone_off;
    void add_row(const std::vector<std::pair<int, double>>& coefs, double rhs);
    Point point(const TcsdpProblem& p, const Eigen::VectorXd& x) const;

    const TcsdpProblem* problem = nullptr;
};

Lowered lower_problem(const TcsdpProblem& p, int n_extra_scalars = 0);

// ---- duality --------------------------------------------------------------

struct DualCertificate {
    Eigen::VectorXd rho;              // one per constraint side
    std::vector<Eigen::MatrixXd> S;   // one per block
    Eigen::MatrixXd Z;                // (r+1) x (r+1), Z(0,0) = 1
    double d = 0.0;
};

struct CertificateReport {
    double primal_feasibility = 0;   // max row violation
    double primal_cone = 0;          // max(0, -min eig Y_i)
    double lmi_violation = 0;        // max(0, -min eig LMI(t,y))
    double dual_cone = 0;            // max(0, -min eig S_i, -min eig Z, sign violations of rho)
    double stationarity = 0;         // max abs of c - 2L^T z - A^T rho - S
    double complementarity = 0;      // sum of <S_i,Y_i>, <Z,LMI>, rho_k * slack_k (absolute)
    double primal_value = 0;
    double dual_value = 0;
    double gap = 0;
    bool certified = false;
    std::string reason;
    double max_residual() const;
};

double dual_objective_value(const Eigen::VectorXd& rho, const Eigen::MatrixXd& Z, const Eigen::VectorXd& b);
CertificateReport kkt_certify(const TcsdpProblem& p, const Point& primal, double t,
                              const DualCertificate& dual, double tol);
double duality_gap(double f_value, double d_value);

// Build (rho, S, Z) from a solved lowering of the plain relaxation.
DualCertificate certificate_from_solution(const Lowered& low, const ConicResult& r);
// Right-hand sides of the constraint sides, in rho order.
Eigen::VectorXd side_rhs(const Lowered& low);

// Solve the relaxation (Problem 2) with the backend.
struct RelaxResult {
    SolveStatus status;
    Point point;
    DualCertificate dual;
    double f = 0;
    int iterations = 0;
};
RelaxResult solve_relaxation(const TcsdpProblem& p, const SolverSettings& s);

}  // namespace tcsdp
