#include <doctest.h>

#include "error.hpp"
#include "problem.hpp"
#include "rng.hpp"
#include "toy.hpp"

using namespace tcsdp;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    return ErrorCode::Ok;
}

}  // namespace

TEST_CASE("trivial problem assembles") {
    std::vector<PsdBlockSpec> b{{0, 7, 0, "r"}};
    TcsdpProblem p = assemble_problem(b, Eigen::MatrixXd::Zero(49, 49), Eigen::VectorXd::Zero(49), {}, {{3.0, {0}}});
    CHECK(p.n_vars() == 49);
    CHECK(p.L.empty());
    CHECK(p.lambda_bar_s() == 3.0);
}

TEST_CASE("assembly validates dimensions and definiteness") {
    std::vector<PsdBlockSpec> b{{0, 2, 0, "r"}};
    CHECK(code_of([&] { assemble_problem(b, Eigen::MatrixXd::Zero(3, 3), Eigen::VectorXd::Zero(4), {}, {{1.0, {0}}}); }) ==
          ErrorCode::InvalidInput);
    ConstraintRow bad{LinExpr::var(17), 0, 0};
    CHECK(code_of([&] { assemble_problem(b, Eigen::MatrixXd::Zero(4, 4), Eigen::VectorXd::Zero(4), {bad}, {{1.0, {0}}}); }) ==
          ErrorCode::InvalidInput);
    Eigen::MatrixXd Q = Eigen::MatrixXd::Identity(4, 4);
    Q(0, 0) = -1;
    CHECK(code_of([&] { assemble_problem(b, Q, Eigen::VectorXd::Zero(4), {}, {{1.0, {0}}}); }) == ErrorCode::InvalidObjective);
}

TEST_CASE("factor_objective reconstructs Q") {
    CHECK((factor_objective(Eigen::MatrixXd::Identity(3, 3)).transpose() * factor_objective(Eigen::MatrixXd::Identity(3, 3)) -
           Eigen::MatrixXd::Identity(3, 3))
              .norm() < 1e-12);
    CHECK(factor_objective(Eigen::MatrixXd::Zero(4, 4)).rows() == 0);
    SplitMix64 rng(1);
    for (int t = 0; t < 10; ++t) {
        Eigen::MatrixXd B(3, 8);
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 8; ++j) B(i, j) = rng.normal();
        Eigen::MatrixXd Q = B.transpose() * B;
        Eigen::MatrixXd L = factor_objective(Q);
        CHECK(L.rows() == 3);
        CHECK((L.transpose() * L - Q).cwiseAbs().maxCoeff() <= 1e-9 * Q.cwiseAbs().maxCoeff());
    }
}

TEST_CASE("standard form LMI is tight at t = y^T Q y") {
    TcsdpProblem p = toy_problem(Eigen::Vector3d(0.2, 0.3, 0.5));
    StandardFormSdp s = to_standard_form(p);
    Point pt{{Eigen::Vector4d(0.1, 0.3, 0.6, 1.0).asDiagonal().toDenseMatrix()}, Eigen::VectorXd(0)};
    Eigen::VectorXd x = flatten(p, pt);
    const double t = (s.L * x).squaredNorm();
    Eigen::MatrixXd M = s.lmi(t, x);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M);
    CHECK(es.eigenvalues()(0) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(es.eigenvalues()(0) >= -1e-12);
}

TEST_CASE("dual objective value") {
    CHECK(dual_objective_value(Eigen::VectorXd::Zero(2), Eigen::MatrixXd::Identity(4, 4), Eigen::Vector2d(1, 1)) ==
          doctest::Approx(-3.0));
    Eigen::MatrixXd Z = Eigen::MatrixXd::Zero(2, 2);
    Z(0, 0) = 1;
    CHECK(dual_objective_value(Eigen::Vector2d(2, 1), Z, Eigen::Vector2d(2, 1)) == doctest::Approx(5.0));
    Z(0, 0) = 0.5;
    CHECK(code_of([&] { dual_objective_value(Eigen::Vector2d(2, 1), Z, Eigen::Vector2d(2, 1)); }) ==
          ErrorCode::InvalidCertificate);
    CHECK(duality_gap(1.5, 1.5) == 0.0);
}

TEST_CASE("relaxation of a tiny problem matches a direct evaluation and certifies") {
    SplitMix64 rng(9);
    for (int t = 0; t < 5; ++t) {
        Eigen::Vector3d w(rng.uniform(), rng.uniform(), rng.uniform());
        std::vector<ConstraintRow> rows;
        if (t % 2) rows.push_back({LinExpr::var(1) - LinExpr::var(2), 0.0, 0.0});  // Y(0,1) = Y(0,2)
        TcsdpProblem p = toy_problem(w, rows);
        RelaxResult r = solve_relaxation(p, {});
        REQUIRE(r.status == SolveStatus::Optimal);
        CHECK(objective_value(p, r.point) == doctest::Approx(r.f).epsilon(1e-6));
        CHECK(max_row_violation(p, r.point) <= 1e-6);
        // The projection onto {trace 1} of diag(w) has cost (sum w - 1)^2 / 3.
        const double expect = std::pow(w.sum() - 1.0, 2) / 3.0;
        bool interior = true;
        for (int i = 0; i < 3; ++i) interior = interior && w(i) - (w.sum() - 1.0) / 3.0 > 0;
        if (interior) CHECK(r.f == doctest::Approx(expect).epsilon(1e-6));
        const double tv = objective_value(p, r.point);
        CertificateReport rep = kkt_certify(p, r.point, tv - p.c.eval(flatten(p, r.point)), r.dual, 1e-6);
        CHECK(rep.certified);
        CHECK(rep.gap >= -1e-6 * (1 + std::abs(rep.primal_value)));
    }
}

TEST_CASE("kkt_certify rejects an infeasible dual") {
    TcsdpProblem p = toy_problem(Eigen::Vector3d(0.2, 0.3, 0.5));
    RelaxResult r = solve_relaxation(p, {});
    DualCertificate d = r.dual;
    d.S[0] = -Eigen::MatrixXd::Identity(4, 4);
    CertificateReport rep = kkt_certify(p, r.point, r.f, d, 1e-6);
    CHECK_FALSE(rep.certified);
    CHECK(rep.reason == "dual_infeasible");
    d.S.pop_back();
    CHECK(code_of([&] { kkt_certify(p, r.point, r.f, d, 1e-6); }) == ErrorCode::InvalidCertificate);
}

TEST_CASE("trace rows hold on the relaxed optimum") {
    TcsdpProblem p = toy_problem(Eigen::Vector3d(1, 2, 3));
    RelaxResult r = solve_relaxation(p, {});
    CHECK(std::abs(r.point.Y[0].trace() - 2.0) <= 1e-8);
    CHECK(std::abs(r.point.Y[0].topLeftCorner(3, 3).trace() - 1.0) <= 1e-8);
    CHECK(std::abs(r.point.Y[0](3, 3) - 1.0) <= 1e-8);
}
