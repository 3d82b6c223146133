#include <doctest.h>

#include <cmath>

#include "error.hpp"
#include "manifolds.hpp"
#include "rng.hpp"

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

// Evaluate generated rows on a single block stored at offset 0.
double rows_residual(const std::vector<ConstraintRow>& rows, const Eigen::VectorXd& x) {
    double w = 0;
    for (const auto& r : rows) {
        const double v = r.a.eval(x);
        w = std::max({w, r.lo - v, v - r.hi});
    }
    return w;
}

Eigen::VectorXd row_major(const Eigen::MatrixXd& Y) {
    Eigen::VectorXd x(Y.size());
    for (int i = 0; i < Y.rows(); ++i)
        for (int j = 0; j < Y.cols(); ++j) x(i * Y.cols() + j) = Y(i, j);
    return x;
}

Eigen::VectorXd stack(const TranslationBlock& b) {
    Eigen::VectorXd x(48);
    for (int l = 0; l < 3; ++l) x.segment(16 * l, 16) = row_major(b.Y[l]);
    return x;
}

}  // namespace

TEST_CASE("rotation lift examples") {
    Eigen::MatrixXd Y = lift_rotation(Mat3::Identity());
    Eigen::VectorXd v(7);
    v << 1, 0, 0, 0, 1, 0, 1;
    CHECK((Y - v * v.transpose()).norm() == 0.0);
    Mat3 Rz = Eigen::AngleAxisd(M_PI / 2, Vec3::UnitZ()).toRotationMatrix();
    Eigen::MatrixXd Yz = lift_rotation(Rz);
    CHECK(Yz(1, 6) == doctest::Approx(1.0));
    CHECK(Yz(3, 6) == doctest::Approx(-1.0));
    CHECK(Yz.trace() == doctest::Approx(3.0));
    CHECK((recover_rotation(Y) - Mat3::Identity()).norm() == 0.0);
    CHECK(code_of([] { lift_rotation(2.0 * Mat3::Identity()); }) == ErrorCode::InvalidInput);
}

TEST_CASE("rotation rows") {
    auto rows = rotation_constraint_rows(0);
    CHECK(rows.size() == 4);
    SplitMix64 rng(4);
    for (int t = 0; t < 20; ++t) CHECK(rows_residual(rows, row_major(lift_rotation(rng.rotation()))) <= 1e-12);
    Eigen::MatrixXd iso = (3.0 / 7.0) * Eigen::MatrixXd::Identity(7, 7);
    CHECK(rotation_row_residual(iso) == doctest::Approx(1.0 - 3.0 / 7.0));
}

TEST_CASE("translation lift examples") {
    TranslationBlock b = lift_translation(0.25, Vec3(0.6, 0.8, 0));
    Eigen::Vector4d u(0.3, std::sqrt(0.75) * 0.6, 0.5, std::sqrt(0.75));
    CHECK((b.Y[0] - u * u.transpose()).norm() < 1e-15);
    CHECK(b.Y[0](0, 2) + b.Y[0](1, 3) == doctest::Approx(0.6));
    auto [tau, v] = recover_translation(b);
    CHECK(tau == doctest::Approx(0.25));
    CHECK((v - Vec3(0.6, 0.8, 0)).norm() < 1e-15);
    CHECK((recover_scaled_direction(b) - Vec3(0.15, 0.2, 0)).norm() < 1e-15);
    double tr = 0;
    for (const auto& Y : b.Y) tr += Y.trace();
    CHECK(tr == doctest::Approx(4.0));

    TranslationBlock b1 = lift_translation(1.0, Vec3(0, 0, 1));
    CHECK(b1.Y[2](3, 3) == 0.0);
    CHECK(translation_row_residual(b1) <= 1e-15);
    TranslationBlock b0 = lift_translation(0.0, Vec3(0, 1, 0));
    CHECK(recover_translation(b0).second.norm() == doctest::Approx(1.0));
    CHECK(recover_scaled_direction(b0).norm() == 0.0);

    CHECK(code_of([] { lift_translation(1.5, Vec3(1, 0, 0)); }) == ErrorCode::InvalidInput);
    CHECK(code_of([] { lift_translation(0.5, Vec3(1, 1, 0)); }) == ErrorCode::InvalidInput);
}

TEST_CASE("translation rows") {
    auto rows = translation_constraint_rows({0, 16, 32});
    SplitMix64 rng(8);
    for (int t = 0; t < 20; ++t) CHECK(rows_residual(rows, stack(lift_translation(rng.uniform(), rng.unit_vector()))) <= 1e-12);
    TranslationBlock b = lift_translation(0.4, Vec3(0, 0.6, 0.8));
    b.Y[1](0, 3) += 0.01;
    b.Y[1](3, 0) += 0.01;
    CHECK(rows_residual(rows, stack(b)) >= 0.01 - 1e-12);
    CHECK(translation_row_residual(b) >= 0.01 - 1e-12);
}

TEST_CASE("round trips over random samples") {
    SplitMix64 rng(21);
    double wr = 0, wt = 0;
    for (int t = 0; t < 1000; ++t) {
        const Mat3 R = rng.rotation();
        wr = std::max(wr, (recover_rotation(lift_rotation(R)) - R).cwiseAbs().maxCoeff());
        const double tau = rng.uniform();
        const Vec3 v = rng.unit_vector();
        auto [tr, vr] = recover_translation(lift_translation(tau, v));
        wt = std::max({wt, std::abs(tr - tau), (vr - v).cwiseAbs().maxCoeff()});
        CHECK((recover_scaled_direction(lift_translation(tau, v)) - tau * v).norm() <= 1e-12);
    }
    CHECK(wr <= 1e-12);
    CHECK(wt <= 1e-12);
}

TEST_CASE("mixtures of rotation lifts lose orthogonality") {
    SplitMix64 rng(2);
    int checked = 0;
    for (int t = 0; t < 100; ++t) {
        Eigen::MatrixXd Y = (lift_rotation(rng.rotation()) + lift_rotation(rng.rotation()) + lift_rotation(rng.rotation())) / 3.0;
        CHECK(rotation_row_residual(Y) <= 1e-12);
        CHECK_FALSE(rank1_check({Y}, 3.0, 1e-9));
        Mat3 R = recover_rotation(Y);
        CHECK((R.transpose() * R - Mat3::Identity()).norm() > 1e-3);
        ++checked;
    }
    CHECK(checked == 100);
}

TEST_CASE("rank1_check") {
    CHECK(rank1_check({lift_rotation(Mat3::Identity())}, 3.0, 1e-12));
    CHECK_FALSE(rank1_check({Eigen::MatrixXd((3.0 / 7.0) * Eigen::MatrixXd::Identity(7, 7))}, 3.0, 1e-6));
    TranslationBlock b = lift_translation(0.3, Vec3(1, 0, 0));
    CHECK(rank1_check({b.Y[0], b.Y[1], b.Y[2]}, 4.0, 1e-12));
}

TEST_CASE("transform equality rows vanish on identical frames") {
    ModelBuilder mb;
    RotRef r = mb.add_rotation("r");
    TransRef tr = mb.add_translation("t");
    const LinExpr tau = mb.tau(tr);
    const Vec3Expr v = mb.dir(tr);
    const std::array<Vec3Expr, 2> cols{mb.rot_col(r, 0), mb.rot_col(r, 1)};
    const Mat3 R1 = Eigen::AngleAxisd(0.3, Vec3(1, 2, 3).normalized()).toRotationMatrix();
    FrameExpr a = frame_known_r1(R1, &tau, &v, &cols);
    auto rows = transform_equality_rows(a, a);
    CHECK(rows.size() == 10);
    for (auto row : rows) {
        row.a.compact();
        CHECK(row.a.terms.empty());
    }
    FrameExpr unbound;
    CHECK(code_of([&] { transform_equality_rows(a, unbound); }) == ErrorCode::InvalidBinding);
}
