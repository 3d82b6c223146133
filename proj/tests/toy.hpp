#pragma once

#include <Eigen/Dense>
#include <vector>

#include "problem.hpp"

// Homogenized toy: one 4x4 block of trace 2 with the corner fixed to 1, so the
// top-left 3x3 part has trace 1. Residuals Y_ii - w_i * Y_33 for i < 3.
inline tcsdp::TcsdpProblem toy_problem(const Eigen::Vector3d& w, std::vector<tcsdp::ConstraintRow> rows = {}) {
    using namespace tcsdp;
    TcsdpProblem p;
    p.blocks = {{0, 4, 0, "y"}};
    p.groups = {{2.0, {0}}};
    rows.push_back({LinExpr::var(15), 1.0, 1.0});
    p.rows = std::move(rows);
    for (int i = 0; i < 3; ++i) {
        LinExpr e = LinExpr::var(5 * i);
        e += LinExpr::var(15, -w(i));
        p.L.push_back(e);
    }
    p.finalize();
    return p;
}

// Lift of the unit vector u with the homogenizing 1 appended.
inline Eigen::MatrixXd toy_lift(const Eigen::Vector3d& u) {
    Eigen::Vector4d x(u(0), u(1), u(2), 1.0);
    return x * x.transpose();
}
