#include <doctest.h>

#include "conic.hpp"
#include "error.hpp"
#include "rng.hpp"

using namespace tcsdp;

TEST_CASE("svec round trip and inner product") {
    Eigen::MatrixXd A(3, 3), B(3, 3);
    A << 1, 2, 3, 2, 4, 5, 3, 5, 6;
    B << 2, -1, 0, -1, 1, 7, 0, 7, 3;
    CHECK((smat(svec(A), 3) - A).norm() < 1e-15);
    CHECK(svec(A).dot(svec(B)) == doctest::Approx((A.cwiseProduct(B)).sum()));
    CHECK(svec_dim(7) == 28);
    CHECK(svec_index(0, 2) == 3);
}

TEST_CASE("scalar cone with fixed value") {
    ConicProgram p;
    p.cone_dims = {1};
    p.n_rows = 1;
    p.A = {{0, 0, 1.0}};
    p.b = Eigen::VectorXd::Ones(1);
    p.c = Eigen::VectorXd::Ones(1);
    ConicResult r = solve_conic(p, {});
    CHECK(r.status == SolveStatus::Optimal);
    CHECK(r.x(0) == doctest::Approx(1.0));
    CHECK(r.primal_obj == doctest::Approx(1.0));
}

TEST_CASE("inconsistent equalities are infeasible") {
    ConicProgram p;
    p.cone_dims = {1};
    p.n_rows = 2;
    p.A = {{0, 0, 1.0}, {1, 0, 1.0}};
    p.b = Eigen::Vector2d(1, 2);
    p.c = Eigen::VectorXd::Ones(1);
    CHECK(solve_conic(p, {}).status == SolveStatus::Infeasible);
}

TEST_CASE("minimum eigenvalue as a unit-trace SDP") {
    SplitMix64 rng(5);
    for (int t = 0; t < 5; ++t) {
        Eigen::MatrixXd C(7, 7);
        for (int i = 0; i < 7; ++i)
            for (int j = 0; j < 7; ++j) C(i, j) = rng.normal();
        C = (C + C.transpose()).eval();
        ConicProgram p;
        p.cone_dims = {7};
        p.n_rows = 1;
        for (int i = 0; i < 7; ++i) p.A.emplace_back(0, svec_index(i, i), 1.0);
        p.b = Eigen::VectorXd::Ones(1);
        p.c = svec(C);
        ConicResult r = solve_conic(p, {});
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(C);
        CHECK(r.status == SolveStatus::Optimal);
        CHECK(r.primal_obj == doctest::Approx(es.eigenvalues()(0)).epsilon(1e-7));
        CHECK(r.pres <= 1e-8);
    }
}

TEST_CASE("quadratic objective with free variables") {
    // minimize (w - 3)^2 style: 1/2 * 2 * w^2 - 6 w with w free -> w = 3
    ConicProgram p;
    p.n_free = 1;
    p.n_rows = 0;
    p.b = Eigen::VectorXd(0);
    p.c = Eigen::VectorXd::Constant(1, -6.0);
    p.P = {{0, 0, 2.0}};
    ConicResult r = solve_conic(p, {});
    CHECK(r.status == SolveStatus::Optimal);
    CHECK(r.x(0) == doctest::Approx(3.0));
}

TEST_CASE("solves are deterministic") {
    ConicProgram p;
    p.cone_dims = {3, 1};
    p.n_rows = 2;
    p.A = {{0, 0, 1.0}, {0, 2, 1.0}, {0, 5, 1.0}, {1, 6, 1.0}, {1, 1, 1.0}};
    p.b = Eigen::Vector2d(1.0, 0.2);
    p.c = Eigen::VectorXd::LinSpaced(7, -1.0, 1.0);
    ConicResult a = solve_conic(p, {}), b = solve_conic(p, {});
    CHECK(a.status == b.status);
    CHECK((a.x - b.x).norm() == 0.0);
}

TEST_CASE("invalid programs are rejected") {
    ConicProgram p;
    p.cone_dims = {2};
    p.n_rows = 1;
    p.A = {{0, 9, 1.0}};
    p.b = Eigen::VectorXd::Ones(1);
    p.c = Eigen::VectorXd::Zero(3);
    CHECK_THROWS_AS(solve_conic(p, {}), Error);
    SolverSettings bad;
    bad.feas_tol = 0;
    p.A = {{0, 0, 1.0}};
    CHECK_THROWS_AS(solve_conic(p, bad), Error);
}
