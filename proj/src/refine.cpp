#include "refine.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

#include "error.hpp"
#include "symeig.hpp"

namespace tcsdp {

const char* phase_name(Phase p) {
    switch (p) {
        case Phase::InitialRelax: return "InitialRelax";
        case Phase::RankMin: return "RankMin";
        case Phase::Scheduling: return "Scheduling";
        case Phase::Channel: return "Channel";
    }
    return "Unknown";
}

void RefineOptions::validate() const {
    if (!(gamma > 0 && gamma < 1)) throw Error(ErrorCode::InvalidInput, "gamma must lie in (0,1)");
    if (!(gamma_c > 0)) throw Error(ErrorCode::InvalidInput, "gamma_c must be positive");
    if (sched_limit < 1 || chan_limit < 1 || rankmin_limit < 1) throw Error(ErrorCode::InvalidInput, "limits must be >= 1");
    if (max_repeats < 0) throw Error(ErrorCode::InvalidInput, "repeats must be >= 0");
    if (!(rank_tol > 0) || !(eps > 0) || !(sigma_floor > 0)) throw Error(ErrorCode::InvalidInput, "tolerances must be positive");
}

double sigma_schedule(int k, double floor) {
    if (k < 1) throw Error(ErrorCode::InvalidInput, "schedule index starts at 1");
    return std::max(floor, 1.0 - 1.0 / (1.0 + std::exp((25.0 - k) / 5.0)));
}

std::vector<double> group_lambda1(const TcsdpProblem& p, const Point& pt) {
    std::vector<double> out(p.groups.size(), 0.0);
    for (size_t g = 0; g < p.groups.size(); ++g)
        for (int b : p.groups[g].blocks) out[g] += lambda1(pt.Y[b]);
    return out;
}

double eigenvalue_gap(const TcsdpProblem& p, const Point& pt) {
    auto l = group_lambda1(p, pt);
    double eg = -INFINITY;
    for (size_t g = 0; g < l.size(); ++g) eg = std::max(eg, p.groups[g].trace - l[g]);
    return eg;
}

double sum_lambda1(const TcsdpProblem& p, const Point& pt) {
    double s = 0;
    for (double v : group_lambda1(p, pt)) s += v;
    return s;
}

namespace {

// Top eigenvector, with one deterministic 1e-9 perturbation on a tie.
Eigen::VectorXd top_vector(const Eigen::MatrixXd& Y) {
    try {
        SymmetricMatrix g = grad_lambda1(SymmetricMatrix(Y));
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(g.dense());
        return es.eigenvectors().col(Y.rows() - 1);
    } catch (const Error& e) {
        if (e.code() != ErrorCode::DegenerateSpectrum) throw;
    }
    const int d = static_cast<int>(Y.rows());
    Eigen::VectorXd w = Eigen::VectorXd::LinSpaced(d, 1.0, d).normalized();
    Eigen::MatrixXd Yp = Y + 1e-9 * w * w.transpose();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Yp);
    return es.eigenvectors().col(d - 1);
}

bool acceptable(const ConicResult& r, const SolverSettings& s) {
    if (r.status == SolveStatus::Optimal) return true;
    // Stalled close to the target: usable iterate.
    return r.status == SolveStatus::NumericalFailure && r.pres <= 1e2 * s.feas_tol && r.dres <= 1e3 * s.feas_tol &&
           r.gap <= 1e3 * s.gap_tol;
}

}  // namespace

Point project_feasible(const TcsdpProblem& p, const Point& pt, const SolverSettings& s) {
    TcsdpProblem q = p;
    q.L.clear();
    q.c = LinExpr();
    for (size_t b = 0; b < p.blocks.size(); ++b) {
        const int d = p.blocks[b].dim;
        for (int i = 0; i < d; ++i)
            for (int j = i; j < d; ++j) {
                const double w = i == j ? 1.0 : 2.0;
                const int e = p.entry(static_cast<int>(b), i, j);
                q.L.push_back(LinExpr::var(e, std::sqrt(w)));
                q.c += LinExpr::var(e, -2.0 * w * pt.Y[b](i, j));
            }
    }
    for (int k = 0; k < p.n_free; ++k) {
        q.L.push_back(LinExpr::var(p.free_index(k)));
        q.c += LinExpr::var(p.free_index(k), -2.0 * pt.free(k));
    }
    q.finalize();
    RelaxResult r = solve_relaxation(q, s);
    if (r.status != SolveStatus::Optimal && r.status != SolveStatus::NumericalFailure)
        throw Error(ErrorCode::NumericalFailure, "re-projection failed");
    return r.point;
}

Refiner::Refiner(const TcsdpProblem& p, RefineOptions opts) : p_(p), o_(opts), base_(lower_problem(p, 3)) {
    o_.validate();
    // extra scalars: 0 -> c, 1 -> slack of c <= 1, 2 -> half-space slack
    base_.add_row({{base_.extra_index(0), 1.0}, {base_.extra_index(1), 1.0}}, 1.0);
}

Update Refiner::step(const RefineState& s, Mode mode, double sigma) const {
    const double lbar = p_.lambda_bar_s();
    // L1 is the value of the linear minorant at the current point; it equals
    // the sum of lambda1 unless the push is mixed.
    double L1 = 0;
    LinExpr grad;
    for (size_t b = 0; b < p_.blocks.size(); ++b) {
        const Eigen::MatrixXd& Y = s.Y.Y[b];
        const int d = static_cast<int>(Y.rows());
        Eigen::VectorXd u = top_vector(Y);
        if (mode == Mode::Rank && s.escape > 0 && d > 1) {
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Y);
            if (es.eigenvalues()(d - 2) > 1e-6 * std::max(1.0, es.eigenvalues()(d - 1))) {
                const int j = d - 2 - (s.escape - 1) % (d - 1);
                u = (es.eigenvectors().col(d - 1) + es.eigenvectors().col(j)).normalized();
            }
        }
        L1 += u.dot(Y * u);
        for (int i = 0; i < d; ++i)
            for (int j = i; j < d; ++j) {
                const double g = (i == j ? 1.0 : 2.0) * u(i) * u(j);
                if (g != 0.0) grad.terms.emplace_back(p_.entry(static_cast<int>(b), i, j), g);
            }
    }
    Lowered low = base_;
    auto coefs = low.map(grad);
    double rhs, coef_c;
    if (mode == Mode::Rank) {
        rhs = lbar - sigma;
        coef_c = lbar - L1;
        low.prog.c(low.extra_index(0)) += o_.gamma_c;
    } else {
        rhs = o_.gamma * lbar;
        coef_c = -(L1 - o_.gamma * lbar);
    }
    coefs.emplace_back(low.extra_index(0), coef_c);
    coefs.emplace_back(low.extra_index(2), -1.0);
    low.add_row(coefs, rhs);
    ConicResult r = solve_conic(low.prog, o_.solver);
    if (!acceptable(r, o_.solver)) {
        if (r.status == SolveStatus::Infeasible) throw Error(ErrorCode::Infeasible, "update program infeasible");
        throw Error(ErrorCode::NumericalFailure, std::string("update solve failed: ") + status_name(r.status));
    }
    Update u;
    u.status = r.status;
    u.next = low.point(p_, r.x);
    u.c = r.x(low.extra_index(0));
    for (size_t b = 0; b < p_.blocks.size(); ++b) u.dY.push_back(u.next.Y[b] - s.Y.Y[b]);
    return u;
}

Update Refiner::rank_min_update(const RefineState& s) const { return step(s, Mode::Rank, 0.0); }

Update Refiner::scheduled_update(const RefineState& s, double sigma) const {
    if (!(sigma >= 0)) throw Error(ErrorCode::InvalidInput, "sigma must be nonnegative");
    return step(s, Mode::Rank, sigma);
}

Update Refiner::channel_update(const RefineState& s) const {
    if (sum_lambda1(p_, s.Y) < o_.gamma * p_.lambda_bar_s())
        throw Error(ErrorCode::ChannelEntryViolation, "iterate is below the channel floor");
    return step(s, Mode::Channel, 0.0);
}

RefineResult refine_solve(const TcsdpProblem& p, const RefineOptions& opts, const ProgressSink& sink) {
    opts.validate();
    RefineResult res;
    RelaxResult relax = solve_relaxation(p, opts.solver);
    res.relax_status = relax.status;
    if (relax.status == SolveStatus::Infeasible) throw Error(ErrorCode::Infeasible, "relaxation is infeasible");
    if (relax.status != SolveStatus::Optimal && relax.status != SolveStatus::NumericalFailure)
        throw Error(ErrorCode::NumericalFailure, "relaxation failed");
    res.relax_cost = relax.f;
    res.dual = relax.dual;

    Refiner ref(p, opts);
    RefineState st;
    st.Y = relax.point;
    st.lambda_bar_s = p.lambda_bar_s();

    double best_cost = INFINITY;
    Point best;
    double cost = relax.f, eg = eigenvalue_gap(p, st.Y);

    auto record = [&](double c) {
        auto gl = group_lambda1(p, st.Y);
        cost = objective_value(p, st.Y);
        eg = -INFINITY;
        double s = 0;
        for (size_t g = 0; g < gl.size(); ++g) {
            eg = std::max(eg, p.groups[g].trace - gl[g]);
            s += gl[g];
        }
        st.cost_history.push_back(cost);
        st.lambda_history.push_back(gl);
        if (eg <= opts.rank_tol && cost < best_cost) {
            best_cost = cost;
            best = st.Y;
        }
        if (sink) {
            ProgressRecord r;
            r.iteration = st.k;
            r.phase = st.phase;
            r.cost = cost;
            r.sum_lambda1 = s;
            r.eg = eg;
            r.c = c;
            r.group_lambda1 = std::move(gl);
            sink(r);
        }
    };
    record(0.0);

    // A push that leaves sum lambda1 unchanged sits where the top eigenvector
    // is pinned by the constraints; the next push is then mixed.
    auto track_escape = [&](double before) {
        const double gained = sum_lambda1(p, st.Y) - before;
        st.escape = eg > opts.rank_tol && gained <= 1e-9 * st.lambda_bar_s ? st.escape + 1 : 0;
    };

    // Runs one update; on backend infeasibility or failure the iterate is
    // re-projected onto the feasible set and the update retried once. A
    // second failure halts refinement with the best point so far.
    bool halted = false;
    auto advance = [&](const std::function<Update()>& make) -> std::optional<Update> {
        for (int attempt = 0; attempt < 2; ++attempt) {
            try {
                return make();
            } catch (const Error& e) {
                if (e.code() != ErrorCode::Infeasible && e.code() != ErrorCode::NumericalFailure) throw;
                if (attempt == 1) {
                    halted = true;
                    res.note = std::string("stopped after re-projection: ") + e.what();
                    return std::nullopt;
                }
                st.Y = project_feasible(p, st.Y, opts.solver);
                ++res.reprojections;
            }
        }
        return std::nullopt;
    };

    auto rankmin = [&]() {
        st.phase = Phase::RankMin;
        st.escape = 0;
        for (int it = 0; it < opts.rankmin_limit && eg > opts.rank_tol && !halted; ++it) {
            const double before = sum_lambda1(p, st.Y);
            auto u = advance([&] { return ref.rank_min_update(st); });
            if (!u) break;
            st.Y = std::move(u->next);
            ++st.k;
            ++res.it_rankmin;
            record(u->c);
            track_escape(before);
        }
    };

    rankmin();
    for (int pass = 0; pass <= opts.max_repeats && !halted; ++pass) {
        if (best_cost <= opts.eps) break;
        st.phase = Phase::Scheduling;
        int flat = 0;
        for (int kk = 1; kk <= opts.sched_limit; ++kk) {
            const double sig = sigma_schedule(kk, opts.sigma_floor);
            const double before = cost;
            auto u = advance([&] { return ref.scheduled_update(st, sig); });
            if (!u) break;
            st.Y = std::move(u->next);
            ++st.k;
            ++res.it_sched;
            record(u->c);
            if (best_cost <= opts.eps) break;
            // At the floor the steps keep descending along the near rank-1 set; stop once flat.
            const bool settled = sig <= opts.sigma_floor && eg <= opts.rank_tol;
            flat = settled && std::abs(before - cost) <= 1e-12 + 1e-7 * std::abs(before) ? flat + 1 : 0;
            if (flat >= 10) break;
        }
        rankmin();
        if (best_cost <= opts.eps || halted) break;
        if (sum_lambda1(p, st.Y) >= opts.gamma * st.lambda_bar_s) {
            st.phase = Phase::Channel;
            int flat = 0;
            for (int it = 0; it < opts.chan_limit; ++it) {
                const double before = cost;
                std::optional<Update> u;
                try {
                    u = advance([&] { return ref.channel_update(st); });
                } catch (const Error& e) {
                    // a re-projection can leave the iterate below the floor
                    if (e.code() != ErrorCode::ChannelEntryViolation) throw;
                }
                if (!u) break;
                st.Y = std::move(u->next);
                ++st.k;
                ++res.it_chan;
                record(u->c);
                flat = std::abs(before - cost) <= 1e-12 + 1e-6 * std::abs(before) ? flat + 1 : 0;
                if (flat >= 5) break;
            }
        }
        rankmin();
    }

    res.iterations = st.k;
    if (std::isfinite(best_cost)) {
        res.Y = best;
        res.rank1 = true;
    } else {
        res.Y = st.Y;
        res.note = res.note.empty() ? "no rank-1 iterate reached" : res.note + "; no rank-1 iterate reached";
    }
    res.cost = objective_value(p, res.Y);
    res.eg = eigenvalue_gap(p, res.Y);
    const double t = res.cost - p.c.eval(flatten(p, res.Y));  // epigraph value y^T Q y
    res.certificate = kkt_certify(p, res.Y, t, res.dual, opts.certify_tol);
    res.dg = res.certificate.gap;
    return res;
}

}  // namespace tcsdp
