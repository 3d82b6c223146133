#include "conic.hpp"

#include <Eigen/SparseCholesky>
#include <Eigen/SparseQR>
#include <algorithm>
#include <cmath>
#include <cstdio>

#include "error.hpp"

namespace tcsdp {

namespace {

constexpr double kSqrt2 = 1.4142135623730951;

struct ConeScaling {
    Eigen::MatrixXd G, Ginv, Winv;
    Eigen::VectorXd lam;
};

double inf_norm(const Eigen::VectorXd& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

// Largest alpha in (0, inf] with Lam + alpha * D PSD, Lam diagonal positive.
double max_step_scaled(const Eigen::VectorXd& lam, const Eigen::MatrixXd& D) {
    Eigen::VectorXd is = lam.cwiseSqrt().cwiseInverse();
    Eigen::MatrixXd M = is.asDiagonal() * D * is.asDiagonal();
    double mn;
    if (M.rows() == 1) {
        mn = M(0, 0);
    } else {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M, Eigen::EigenvaluesOnly);
        mn = es.eigenvalues()(0);
    }
    return mn >= 0 ? INFINITY : -1.0 / mn;
}

class Ipm {
public:
    Ipm(const ConicProgram& p, const SolverSettings& s) : p_(p), s_(s) {
        n_ = p.n_vars();
        m_ = p.n_rows;
        nc_ = p.n_cone_vars();
        A_.resize(m_, n_);
        A_.setFromTriplets(p.A.begin(), p.A.end());
        A_.makeCompressed();
        At_ = A_.transpose();
        std::vector<Eigen::Triplet<double>> pu;
        for (const auto& t : p.P)
            if (t.row() <= t.col()) pu.push_back(t);
        Pu_.resize(n_, n_);
        Pu_.setFromTriplets(pu.begin(), pu.end());
        offs_.clear();
        int o = 0;
        for (int d : p.cone_dims) {
            offs_.push_back(o);
            o += svec_dim(d);
        }
        nu_ = 0;
        for (int d : p.cone_dims) nu_ += d;
    }

    ConicResult run();

private:
    Eigen::VectorXd Px(const Eigen::VectorXd& x) const {
        return Pu_.selfadjointView<Eigen::Upper>() * x;
    }
    void compute_scaling();
    void build_kkt();
    bool factor();
    void solve_kkt(const Eigen::VectorXd& r1, const Eigen::VectorXd& r2, Eigen::VectorXd& dx,
                   Eigen::VectorXd& dy);
    Eigen::VectorXd comp_rhs(const std::vector<Eigen::MatrixXd>& R) const;
    Eigen::VectorXd apply_H(const Eigen::VectorXd& v) const;
    double step_length(const Eigen::VectorXd& dx, const Eigen::VectorXd& ds) const;
    std::vector<Eigen::MatrixXd> scaled_x(const Eigen::VectorXd& dx) const;
    std::vector<Eigen::MatrixXd> scaled_s(const Eigen::VectorXd& ds) const;

    const ConicProgram& p_;
    const SolverSettings& s_;
    int n_ = 0, m_ = 0, nc_ = 0, nu_ = 0;
    Eigen::SparseMatrix<double> A_, At_, Pu_, K_;
    std::vector<int> offs_;
    std::vector<ConeScaling> sc_;
    std::vector<Eigen::MatrixXd> H_;
    Eigen::VectorXd x_, y_, s_vec_;
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>, Eigen::Upper> ldlt_;
    bool analyzed_ = false;
    double reg_ = 1e-9;
};

void Ipm::compute_scaling() {
    const int nb = static_cast<int>(p_.cone_dims.size());
    sc_.resize(nb);
    H_.resize(nb);
    for (int k = 0; k < nb; ++k) {
        const int d = p_.cone_dims[k];
        const int o = offs_[k];
        ConeScaling& c = sc_[k];
        if (d == 1) {
            double x = x_(o), s = s_vec_(o);
            c.lam = Eigen::VectorXd::Constant(1, std::sqrt(x * s));
            c.G = Eigen::MatrixXd::Constant(1, 1, std::sqrt(std::sqrt(x / s)));
            c.Ginv = c.G.cwiseInverse();
            c.Winv = Eigen::MatrixXd::Constant(1, 1, s / x);
            H_[k] = c.Winv;
            continue;
        }
        const int sd = svec_dim(d);
        Eigen::MatrixXd X = smat(x_.segment(o, sd), d);
        Eigen::MatrixXd S = smat(s_vec_.segment(o, sd), d);
        Eigen::LLT<Eigen::MatrixXd> llt(X);
        if (llt.info() != Eigen::Success) throw Error(ErrorCode::NumericalFailure, "primal iterate left the cone");
        Eigen::MatrixXd L = llt.matrixL();
        Eigen::MatrixXd M = L.transpose() * S * L;
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M);
        Eigen::VectorXd ev = es.eigenvalues();
        if (ev.minCoeff() <= 0) throw Error(ErrorCode::NumericalFailure, "dual iterate left the cone");
        Eigen::VectorXd q = ev.array().pow(-0.25);
        c.lam = ev.cwiseSqrt();
        c.G = L * es.eigenvectors() * q.asDiagonal();
        Eigen::MatrixXd Linv = L.triangularView<Eigen::Lower>().solve(Eigen::MatrixXd::Identity(d, d));
        c.Ginv = q.cwiseInverse().asDiagonal() * es.eigenvectors().transpose() * Linv;
        c.Winv = c.Ginv.transpose() * c.Ginv;
        // H(E) = W^-1 E W^-1 on the svec basis
        Eigen::MatrixXd Hk(sd, sd);
        for (int j = 0, col = 0; j < d; ++j) {
            for (int i = 0; i <= j; ++i, ++col) {
                Eigen::MatrixXd E;
                if (i == j) {
                    E = c.Winv.col(i) * c.Winv.row(i);
                } else {
                    E = (c.Winv.col(i) * c.Winv.row(j) + c.Winv.col(j) * c.Winv.row(i)) / kSqrt2;
                }
                Hk.col(col) = svec(E);
            }
        }
        H_[k] = 0.5 * (Hk + Hk.transpose());
    }
}

void Ipm::build_kkt() {
    std::vector<Eigen::Triplet<double>> t;
    t.reserve(Pu_.nonZeros() + A_.nonZeros() + n_ + m_ + 64 * p_.cone_dims.size());
    for (int k = 0; k < static_cast<int>(p_.cone_dims.size()); ++k) {
        const int o = offs_[k];
        const Eigen::MatrixXd& Hk = H_[k];
        for (int j = 0; j < Hk.cols(); ++j)
            for (int i = 0; i <= j; ++i) t.emplace_back(o + i, o + j, Hk(i, j));
    }
    for (int j = 0; j < Pu_.outerSize(); ++j)
        for (Eigen::SparseMatrix<double>::InnerIterator it(Pu_, j); it; ++it)
            t.emplace_back(it.row(), it.col(), it.value());
    for (int i = 0; i < n_; ++i) t.emplace_back(i, i, reg_);
    for (int j = 0; j < A_.outerSize(); ++j)
        for (Eigen::SparseMatrix<double>::InnerIterator it(A_, j); it; ++it)
            t.emplace_back(it.col(), n_ + it.row(), it.value());
    for (int i = 0; i < m_; ++i) t.emplace_back(n_ + i, n_ + i, -reg_);
    K_.resize(n_ + m_, n_ + m_);
    K_.setFromTriplets(t.begin(), t.end());
}

bool Ipm::factor() {
    if (!analyzed_) {
        ldlt_.analyzePattern(K_);
        analyzed_ = true;
    }
    ldlt_.factorize(K_);
    return ldlt_.info() == Eigen::Success;
}

Eigen::VectorXd Ipm::apply_H(const Eigen::VectorXd& v) const {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(n_);
    for (int k = 0; k < static_cast<int>(p_.cone_dims.size()); ++k) {
        const int o = offs_[k];
        const int sd = static_cast<int>(H_[k].rows());
        out.segment(o, sd) = H_[k] * v.segment(o, sd);
    }
    return out;
}

// Solves [P+H, A^T; A, 0] [dx; -dy] = [r1; r2] with regularized factor plus
// iterative refinement against the unregularized operator.
void Ipm::solve_kkt(const Eigen::VectorXd& r1, const Eigen::VectorXd& r2, Eigen::VectorXd& dx,
                    Eigen::VectorXd& dy) {
    Eigen::VectorXd rhs(n_ + m_);
    rhs << r1, r2;
    Eigen::VectorXd sol = ldlt_.solve(rhs);
    for (int it = 0; it < 8; ++it) {
        Eigen::VectorXd xs = sol.head(n_), ys = sol.tail(m_);
        Eigen::VectorXd res(n_ + m_);
        res.head(n_) = r1 - (Px(xs) + apply_H(xs) + At_ * ys);
        res.tail(m_) = r2 - A_ * xs;
        if (inf_norm(res) <= 1e-14 * (1.0 + inf_norm(rhs))) break;
        sol += ldlt_.solve(res);
    }
    dx = sol.head(n_);
    dy = -sol.tail(m_);
}

std::vector<Eigen::MatrixXd> Ipm::scaled_x(const Eigen::VectorXd& dx) const {
    std::vector<Eigen::MatrixXd> out(p_.cone_dims.size());
    for (size_t k = 0; k < out.size(); ++k) {
        const int d = p_.cone_dims[k];
        Eigen::MatrixXd D = smat(dx.segment(offs_[k], svec_dim(d)), d);
        out[k] = sc_[k].Ginv * D * sc_[k].Ginv.transpose();
    }
    return out;
}

std::vector<Eigen::MatrixXd> Ipm::scaled_s(const Eigen::VectorXd& ds) const {
    std::vector<Eigen::MatrixXd> out(p_.cone_dims.size());
    for (size_t k = 0; k < out.size(); ++k) {
        const int d = p_.cone_dims[k];
        Eigen::MatrixXd D = smat(ds.segment(offs_[k], svec_dim(d)), d);
        out[k] = sc_[k].G.transpose() * D * sc_[k].G;
    }
    return out;
}

// Lam o (dX~ + dS~) = R  =>  svec(G^-T T G^-1) with T_ij = 2 R_ij / (lam_i + lam_j).
Eigen::VectorXd Ipm::comp_rhs(const std::vector<Eigen::MatrixXd>& R) const {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(n_);
    for (size_t k = 0; k < R.size(); ++k) {
        const int d = p_.cone_dims[k];
        const Eigen::VectorXd& lam = sc_[k].lam;
        Eigen::MatrixXd T(d, d);
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) T(i, j) = 2.0 * R[k](i, j) / (lam(i) + lam(j));
        out.segment(offs_[k], svec_dim(d)) = svec(sc_[k].Ginv.transpose() * T * sc_[k].Ginv);
    }
    return out;
}

double Ipm::step_length(const Eigen::VectorXd& dx, const Eigen::VectorXd& ds) const {
    double a = INFINITY;
    auto dX = scaled_x(dx);
    auto dS = scaled_s(ds);
    for (size_t k = 0; k < dX.size(); ++k) {
        a = std::min(a, max_step_scaled(sc_[k].lam, dX[k]));
        a = std::min(a, max_step_scaled(sc_[k].lam, dS[k]));
    }
    return a;
}

ConicResult Ipm::run() {
    ConicResult res;
    x_ = Eigen::VectorXd::Zero(n_);
    s_vec_ = Eigen::VectorXd::Zero(n_);
    y_ = Eigen::VectorXd::Zero(m_);
    for (size_t k = 0; k < p_.cone_dims.size(); ++k) {
        const int d = p_.cone_dims[k];
        for (int i = 0; i < d; ++i) {
            x_(offs_[k] + svec_index(i, i)) = 1.0;
            s_vec_(offs_[k] + svec_index(i, i)) = 1.0;
        }
    }
    const double bnorm = 1.0 + inf_norm(p_.b);
    const double cnorm = 1.0 + inf_norm(p_.c);
    double best_merit = INFINITY;
    int stall = 0;
    for (int iter = 0; iter <= s_.max_iter; ++iter) {
        Eigen::VectorXd Pxv = Px(x_);
        Eigen::VectorXd rp = p_.b - A_ * x_;
        Eigen::VectorXd rd = p_.c + Pxv - At_ * y_ - s_vec_;
        double xs = x_.head(nc_).dot(s_vec_.head(nc_));
        double mu = nu_ > 0 ? xs / nu_ : 0.0;
        double quad = 0.5 * x_.dot(Pxv);
        res.primal_obj = p_.c.dot(x_) + quad;
        res.dual_obj = p_.b.dot(y_) - quad;
        res.pres = inf_norm(rp) / bnorm;
        res.dres = inf_norm(rd) / cnorm;
        res.gap = std::abs(xs) / std::max(1.0, std::min(std::abs(res.primal_obj), std::abs(res.dual_obj)));
        res.iterations = iter;
        if (s_.verbosity > 0)
            std::fprintf(stderr, "ipm %3d pobj %+.6e dobj %+.6e pres %.2e dres %.2e gap %.2e\n", iter,
                         res.primal_obj, res.dual_obj, res.pres, res.dres, res.gap);
        if (!std::isfinite(res.pres) || !std::isfinite(res.dres)) break;
        if (res.pres <= s_.feas_tol && res.dres <= s_.feas_tol && res.gap <= s_.gap_tol) {
            res.status = SolveStatus::Optimal;
            break;
        }
        // Divergent dual with a certificate-like ray: primal infeasible.
        if (inf_norm(y_) > 1e12 && res.dual_obj > 1e10 * std::max(1.0, std::abs(res.primal_obj))) {
            res.status = SolveStatus::Infeasible;
            break;
        }
        if (inf_norm(x_) > 1e12 && res.primal_obj < -1e10) {
            res.status = SolveStatus::Unbounded;
            break;
        }
        double merit = std::max({res.pres, res.dres, res.gap});
        if (merit < 0.5 * best_merit) {
            best_merit = merit;
            stall = 0;
        } else if (++stall > 15) {
            if (s_.verbosity > 0) std::fprintf(stderr, "ipm stop: stalled\n");
            break;
        }
        if (iter == s_.max_iter) break;

        try {
            compute_scaling();
        } catch (const Error& e) {
            if (s_.verbosity > 0) std::fprintf(stderr, "ipm stop: %s\n", e.what());
            break;
        }
        // Raise the static regularization when the factor or the step breaks down.
        bool moved = false;
        for (int attempt = 0; attempt < 5 && !moved; ++attempt) {
            if (attempt > 0) reg_ = std::min(1e-3, reg_ * 100.0);
            build_kkt();
            if (!factor()) continue;
            const int nb = static_cast<int>(p_.cone_dims.size());
            // predictor
            std::vector<Eigen::MatrixXd> R(nb);
            for (int k = 0; k < nb; ++k) R[k] = -Eigen::MatrixXd(sc_[k].lam.array().square().matrix().asDiagonal());
            Eigen::VectorXd rc = comp_rhs(R);
            Eigen::VectorXd dxa, dya;
            solve_kkt(rc - rd, rp, dxa, dya);
            Eigen::VectorXd dsa = rc - apply_H(dxa);
            double aa = std::min(1.0, step_length(dxa, dsa));
            double mu_aff = nu_ > 0 ? (x_ + aa * dxa).head(nc_).dot((s_vec_ + aa * dsa).head(nc_)) / nu_ : 0.0;
            double sigma = mu > 0 ? std::pow(std::clamp(mu_aff / mu, 0.0, 1.0), 3) : 0.0;

            // corrector
            auto dXa = scaled_x(dxa);
            auto dSa = scaled_s(dsa);
            for (int k = 0; k < nb; ++k) {
                const int d = p_.cone_dims[k];
                Eigen::MatrixXd cross = dXa[k] * dSa[k];
                R[k] = sigma * mu * Eigen::MatrixXd::Identity(d, d) -
                       Eigen::MatrixXd(sc_[k].lam.array().square().matrix().asDiagonal()) -
                       0.5 * (cross + cross.transpose());
            }
            rc = comp_rhs(R);
            Eigen::VectorXd dx, dy;
            solve_kkt(rc - rd, rp, dx, dy);
            Eigen::VectorXd ds = rc - apply_H(dx);
            double a = std::min(1.0, 0.99 * step_length(dx, ds));
            if (!(a > 1e-10) || !dx.allFinite() || !ds.allFinite()) continue;
            x_ += a * dx;
            y_ += a * dy;
            s_vec_ += a * ds;
            moved = true;
        }
        if (!moved) {
            if (s_.verbosity > 0) std::fprintf(stderr, "ipm stop: no usable step (reg %.1e)\n", reg_);
            break;
        }
    }
    if (res.status == SolveStatus::NumericalFailure && res.pres > 1e-6) {
        // Check whether the affine constraints alone are inconsistent.
        Eigen::SparseQR<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> qr;
        qr.setPivotThreshold(1e-12);
        qr.compute(A_);
        if (qr.info() == Eigen::Success) {
            Eigen::VectorXd xl = qr.solve(p_.b);
            if (inf_norm(A_ * xl - p_.b) > 1e-6 * bnorm) res.status = SolveStatus::Infeasible;
        }
    }
    res.x = x_;
    res.y = y_;
    res.s = s_vec_;
    return res;
}

}  // namespace

int ConicProgram::n_cone_vars() const {
    int n = 0;
    for (int d : cone_dims) n += svec_dim(d);
    return n;
}

int ConicProgram::cone_offset(int k) const {
    int o = 0;
    for (int i = 0; i < k; ++i) o += svec_dim(cone_dims[i]);
    return o;
}

void ConicProgram::validate() const {
    const int n = n_vars();
    for (int d : cone_dims)
        if (d < 1) throw Error(ErrorCode::InvalidInput, "cone dimension must be positive");
    if (n_free < 0 || n_rows < 0) throw Error(ErrorCode::InvalidInput, "negative size");
    if (b.size() != n_rows) throw Error(ErrorCode::InvalidInput, "b length differs from row count");
    if (c.size() != n) throw Error(ErrorCode::InvalidInput, "c length differs from variable count");
    for (const auto& t : A)
        if (t.row() < 0 || t.row() >= n_rows || t.col() < 0 || t.col() >= n || !std::isfinite(t.value()))
            throw Error(ErrorCode::InvalidInput, "constraint entry out of range");
    for (const auto& t : P)
        if (t.row() < 0 || t.row() >= n || t.col() < 0 || t.col() >= n || !std::isfinite(t.value()))
            throw Error(ErrorCode::InvalidInput, "quadratic entry out of range");
    if (!b.allFinite() || !c.allFinite()) throw Error(ErrorCode::InvalidInput, "non-finite program data");
}

const char* status_name(SolveStatus s) {
    switch (s) {
        case SolveStatus::Optimal: return "Optimal";
        case SolveStatus::Infeasible: return "Infeasible";
        case SolveStatus::Unbounded: return "Unbounded";
        case SolveStatus::NumericalFailure: return "NumericalFailure";
    }
    return "Unknown";
}

ConicResult solve_conic(const ConicProgram& p, const SolverSettings& s, const ConicResult*) {
    p.validate();
    if (s.feas_tol <= 0 || s.gap_tol <= 0) throw Error(ErrorCode::InvalidInput, "tolerances must be positive");
    Ipm ipm(p, s);
    return ipm.run();
}

int svec_dim(int d) { return d * (d + 1) / 2; }
int svec_index(int i, int j) { return j * (j + 1) / 2 + i; }

Eigen::VectorXd svec(const Eigen::MatrixXd& m) {
    const int d = static_cast<int>(m.rows());
    Eigen::VectorXd v(svec_dim(d));
    for (int j = 0, k = 0; j < d; ++j)
        for (int i = 0; i <= j; ++i, ++k) v(k) = i == j ? m(i, j) : kSqrt2 * 0.5 * (m(i, j) + m(j, i));
    return v;
}

Eigen::MatrixXd smat(const Eigen::Ref<const Eigen::VectorXd>& v, int d) {
    Eigen::MatrixXd m(d, d);
    for (int j = 0, k = 0; j < d; ++j)
        for (int i = 0; i <= j; ++i, ++k) {
            if (i == j) {
                m(i, i) = v(k);
            } else {
                m(i, j) = m(j, i) = v(k) / kSqrt2;
            }
        }
    return m;
}

}  // namespace tcsdp
