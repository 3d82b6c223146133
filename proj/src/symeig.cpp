#include "symeig.hpp"

#include <algorithm>
#include <cmath>

#include "error.hpp"

namespace tcsdp {

SymmetricMatrix::SymmetricMatrix(int d) {
    if (d < 1) throw Error(ErrorCode::InvalidInput, "matrix dimension must be positive");
    m_ = Eigen::MatrixXd::Zero(d, d);
}

SymmetricMatrix::SymmetricMatrix(const Eigen::MatrixXd& m) {
    if (m.rows() != m.cols() || m.rows() < 1)
        throw Error(ErrorCode::InvalidInput, "symmetric matrix must be square and non-empty");
    m_ = m.triangularView<Eigen::Upper>();
    m_.triangularView<Eigen::StrictlyLower>() = m_.transpose().triangularView<Eigen::StrictlyLower>();
}

void SymmetricMatrix::set(int i, int j, double v) {
    m_(i, j) = v;
    m_(j, i) = v;
}

EigenPair sym_eig(const SymmetricMatrix& m) {
    if (!m.finite()) throw Error(ErrorCode::InvalidInput, "non-finite matrix entry");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m.dense());
    const int d = m.dim();
    EigenPair out;
    out.values.resize(d);
    out.vectors.resize(d, d);
    for (int k = 0; k < d; ++k) {
        out.values(k) = es.eigenvalues()(d - 1 - k);
        out.vectors.col(k) = es.eigenvectors().col(d - 1 - k);
    }
    return out;
}

double lambda1(const Eigen::MatrixXd& m) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
    return es.eigenvalues()(m.rows() - 1);
}

double lambda1(const SymmetricMatrix& m) {
    if (!m.finite()) throw Error(ErrorCode::InvalidInput, "non-finite matrix entry");
    return lambda1(m.dense());
}

double lambda_min(const Eigen::MatrixXd& m) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
    return es.eigenvalues()(0);
}

double default_mult_tol(double lambda1) { return 1e-8 * std::max(1.0, std::abs(lambda1)); }

SymmetricMatrix grad_lambda1(const SymmetricMatrix& m, double mult_tol) {
    EigenPair ep = sym_eig(m);
    if (mult_tol < 0) mult_tol = default_mult_tol(ep.values(0));
    if (m.dim() > 1 && ep.values(0) - ep.values(1) <= mult_tol)
        throw Error(ErrorCode::DegenerateSpectrum, "largest eigenvalue is not simple");
    Eigen::VectorXd u = ep.vectors.col(0);
    return SymmetricMatrix(Eigen::MatrixXd(u * u.transpose()));
}

double eigenvalue_gap(const std::vector<std::vector<SymmetricMatrix>>& groups,
                      const std::vector<double>& group_traces) {
    if (groups.empty()) throw Error(ErrorCode::InvalidInput, "no blocks");
    if (groups.size() != group_traces.size())
        throw Error(ErrorCode::InvalidInput, "one trace value per group required");
    double gap = -INFINITY;
    for (size_t g = 0; g < groups.size(); ++g) {
        if (groups[g].empty()) throw Error(ErrorCode::InvalidInput, "empty trace group");
        double s = 0;
        for (const auto& b : groups[g]) s += lambda1(b);
        gap = std::max(gap, group_traces[g] - s);
    }
    return gap;
}

}  // namespace tcsdp
