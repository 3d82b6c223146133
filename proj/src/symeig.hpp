#pragma once

#include <Eigen/Dense>
#include <vector>

namespace tcsdp {

// Dense symmetric matrix. Only the upper triangle of the source is read, so
// entry(i,j) and entry(j,i) are the same stored value.
class SymmetricMatrix {
public:
    SymmetricMatrix() = default;
    explicit SymmetricMatrix(int d);
    explicit SymmetricMatrix(const Eigen::MatrixXd& m);

    int dim() const { return static_cast<int>(m_.rows()); }
    double operator()(int i, int j) const { return m_(i, j); }
    void set(int i, int j, double v);
    const Eigen::MatrixXd& dense() const { return m_; }
    bool finite() const { return m_.allFinite(); }

private:
    Eigen::MatrixXd m_;
};

struct EigenPair {
    Eigen::VectorXd values;   // descending
    Eigen::MatrixXd vectors;  // column k pairs with values(k)
};

EigenPair sym_eig(const SymmetricMatrix& m);
double lambda1(const SymmetricMatrix& m);
double lambda1(const Eigen::MatrixXd& m);
double lambda_min(const Eigen::MatrixXd& m);

// Default multiplicity tolerance 1e-8 * max(1, |lambda1|).
double default_mult_tol(double lambda1);

// u1 u1^T for the unit top eigenvector. mult_tol < 0 selects the default.
// Throws DegenerateSpectrum when lambda1 - lambda2 <= mult_tol.
SymmetricMatrix grad_lambda1(const SymmetricMatrix& m, double mult_tol = -1.0);

// Max over groups of (trace_g - sum of lambda1 over the group's blocks).
double eigenvalue_gap(const std::vector<std::vector<SymmetricMatrix>>& groups,
                      const std::vector<double>& group_traces);

}  // namespace tcsdp
