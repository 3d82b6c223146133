#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <string>
#include <vector>

namespace tcsdp {

// minimize  c^T x + 1/2 x^T P x   s.t.  A x = b,  x in K
//
// x = [svec(X_1); ...; svec(X_p); free scalars]. A cone of dimension 1 is the
// nonnegative half-line. svec stacks the upper triangle column by column with
// off-diagonal entries scaled by sqrt(2), so <X,S> = svec(X)^T svec(S).
struct ConicProgram {
    std::vector<int> cone_dims;
    int n_free = 0;
    int n_rows = 0;
    std::vector<Eigen::Triplet<double>> A;
    Eigen::VectorXd b;
    Eigen::VectorXd c;
    // Symmetric; entries with row > col are ignored, diagonal counted once.
    std::vector<Eigen::Triplet<double>> P;

    int n_cone_vars() const;
    int n_vars() const { return n_cone_vars() + n_free; }
    int cone_offset(int k) const;
    void validate() const;
};

struct SolverSettings {
    double feas_tol = 1e-8;
    double gap_tol = 1e-8;
    int max_iter = 100;
    int verbosity = 0;
};

enum class SolveStatus { Optimal, Infeasible, Unbounded, NumericalFailure };
const char* status_name(SolveStatus s);

struct ConicResult {
    SolveStatus status = SolveStatus::NumericalFailure;
    Eigen::VectorXd x, y, s;
    double primal_obj = 0, dual_obj = 0;
    double pres = 0, dres = 0, gap = 0;  // scaled residuals at exit
    int iterations = 0;
};

// Warm-start hint is accepted for interface compatibility and ignored.
ConicResult solve_conic(const ConicProgram& p, const SolverSettings& s,
                        const ConicResult* warm_hint = nullptr);

int svec_dim(int d);
int svec_index(int i, int j);  // i <= j
Eigen::VectorXd svec(const Eigen::MatrixXd& m);
Eigen::MatrixXd smat(const Eigen::Ref<const Eigen::VectorXd>& v, int d);

}  // namespace tcsdp
