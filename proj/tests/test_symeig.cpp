#include <doctest.h>

#include <cmath>

#include "error.hpp"
#include "rng.hpp"
#include "symeig.hpp"

using namespace tcsdp;

namespace {
Eigen::MatrixXd random_sym(SplitMix64& rng, int d) {
    Eigen::MatrixXd A(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) A(i, j) = rng.normal();
    return 0.5 * (A + A.transpose());
}
}  // namespace

TEST_CASE("symmetric storage mirrors the upper triangle") {
    Eigen::MatrixXd m(2, 2);
    m << 1, 2, 99, 3;
    SymmetricMatrix s(m);
    CHECK(s(0, 1) == s(1, 0));
    CHECK(s(1, 0) == 2);
}

TEST_CASE("sym_eig on diagonal and zero matrices") {
    Eigen::MatrixXd d = Eigen::Vector3d(1, 3, 2).asDiagonal();
    EigenPair e = sym_eig(SymmetricMatrix(d));
    CHECK(e.values(0) == doctest::Approx(3));
    CHECK(e.values(1) == doctest::Approx(2));
    CHECK(e.values(2) == doctest::Approx(1));
    CHECK(std::abs(e.vectors(1, 0)) == doctest::Approx(1));
    EigenPair z = sym_eig(SymmetricMatrix(Eigen::MatrixXd::Zero(4, 4)));
    CHECK(z.values.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("sym_eig reconstructs random 7x7 matrices") {
    SplitMix64 rng(11);
    for (int t = 0; t < 50; ++t) {
        Eigen::MatrixXd M = random_sym(rng, 7);
        EigenPair e = sym_eig(SymmetricMatrix(M));
        for (int k = 1; k < 7; ++k) CHECK(e.values(k - 1) >= e.values(k));
        Eigen::MatrixXd V = e.vectors;
        CHECK((V.transpose() * V - Eigen::MatrixXd::Identity(7, 7)).cwiseAbs().maxCoeff() <= 1e-10);
        CHECK((V * e.values.asDiagonal() * V.transpose() - M).norm() <= 1e-9 * M.norm());
    }
}

TEST_CASE("sym_eig rejects non-finite input") {
    Eigen::MatrixXd m = Eigen::MatrixXd::Identity(3, 3);
    m(0, 1) = NAN;
    CHECK_THROWS_AS(sym_eig(SymmetricMatrix(m)), Error);
    try {
        sym_eig(SymmetricMatrix(m));
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::InvalidInput);
    }
}

TEST_CASE("grad_lambda1 basics") {
    Eigen::MatrixXd d = Eigen::Vector3d(3, 0, 0).asDiagonal();
    Eigen::MatrixXd g = grad_lambda1(SymmetricMatrix(d)).dense();
    Eigen::MatrixXd e1 = Eigen::MatrixXd::Zero(3, 3);
    e1(0, 0) = 1;
    CHECK((g - e1).norm() < 1e-14);
    try {
        grad_lambda1(SymmetricMatrix(Eigen::MatrixXd::Identity(3, 3)));
        FAIL("expected DegenerateSpectrum");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::DegenerateSpectrum);
    }
}

TEST_CASE("grad_lambda1 matches central differences and has unit trace") {
    SplitMix64 rng(3);
    int done = 0;
    double worst = 0;
    while (done < 100) {
        Eigen::MatrixXd M = random_sym(rng, 7);
        EigenPair e = sym_eig(SymmetricMatrix(M));
        if (e.values(0) - e.values(1) < 0.1) continue;
        ++done;
        Eigen::MatrixXd G = grad_lambda1(SymmetricMatrix(M)).dense();
        CHECK(G.trace() == doctest::Approx(1.0).epsilon(1e-12));
        const double h = 1e-6;
        for (int i = 0; i < 7; ++i)
            for (int j = i; j < 7; ++j) {
                Eigen::MatrixXd E = Eigen::MatrixXd::Zero(7, 7);
                E(i, j) = E(j, i) = 1.0;
                const double fd = (lambda1(Eigen::MatrixXd(M + h * E)) - lambda1(Eigen::MatrixXd(M - h * E))) / (2 * h);
                const double an = (G.cwiseProduct(E)).sum();
                worst = std::max(worst, std::abs(fd - an) / std::max(1.0, std::abs(an)));
            }
    }
    CHECK(worst <= 1e-5);
}

TEST_CASE("eigenvalue_gap examples") {
    Eigen::VectorXd v(7);
    v << 1, 0, 0, 0, 1, 0, 1;
    std::vector<std::vector<SymmetricMatrix>> one{{SymmetricMatrix(Eigen::MatrixXd(v * v.transpose()))}};
    CHECK(std::abs(eigenvalue_gap(one, {3.0})) < 1e-12);
    std::vector<std::vector<SymmetricMatrix>> iso{{SymmetricMatrix(Eigen::MatrixXd((3.0 / 7.0) * Eigen::MatrixXd::Identity(7, 7)))}};
    CHECK(eigenvalue_gap(iso, {3.0}) == doctest::Approx(18.0 / 7.0));
    CHECK_THROWS_AS(eigenvalue_gap({}, {}), Error);
}
