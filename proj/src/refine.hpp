#pragma once

#include <functional>
#include <string>
#include <vector>

#include "conic.hpp"
#include "problem.hpp"

namespace tcsdp {

enum class Phase { InitialRelax, RankMin, Scheduling, Channel };
const char* phase_name(Phase p);

struct RefineOptions {
    double gamma_c = 1.0;       // rank-push weight
    double gamma = 0.98;        // channel width
    double sigma_floor = 1e-5;
    int sched_limit = 1000;
    int chan_limit = 200;
    int rankmin_limit = 200;
    double rank_tol = 1e-5;     // on EG
    double eps = 1e-6;          // cost tolerance
    int max_repeats = 1;        // extra passes of the phase sequence
    double certify_tol = 1e-6;
    SolverSettings solver;
    void validate() const;
};

struct RefineState {
    Point Y;                    // current iterate
    int k = 0;
    Phase phase = Phase::InitialRelax;
    std::vector<double> cost_history;
    std::vector<std::vector<double>> lambda_history;  // per group sum of lambda1
    double lambda_bar_s = 0;
    // > 0 after iterations without lambda1 progress: the push then mixes the
    // top eigenvector with a lower one (cycling) in blocks that are not rank 1.
    int escape = 0;
};

struct ProgressRecord {
    int iteration = 0;
    Phase phase = Phase::InitialRelax;
    double cost = 0;
    double sum_lambda1 = 0;
    double eg = 0;
    double c = 0;
    std::vector<double> group_lambda1;
};

using ProgressSink = std::function<void(const ProgressRecord&)>;

struct Update {
    Point next;
    std::vector<Eigen::MatrixXd> dY;
    double c = 0;
    SolveStatus status = SolveStatus::Optimal;
};

double sigma_schedule(int k, double floor = 1e-5);

// Nearest feasible point in the Frobenius norm (used after backend failures).
Point project_feasible(const TcsdpProblem& p, const Point& pt, const SolverSettings& s);

// Per-group sums of lambda1, and EG = max over groups of (trace - sum).
std::vector<double> group_lambda1(const TcsdpProblem& p, const Point& pt);
double eigenvalue_gap(const TcsdpProblem& p, const Point& pt);
double sum_lambda1(const TcsdpProblem& p, const Point& pt);

class Refiner {
public:
    Refiner(const TcsdpProblem& p, RefineOptions opts);

    Update rank_min_update(const RefineState& s) const;
    Update channel_update(const RefineState& s) const;  // throws ChannelEntryViolation
    Update scheduled_update(const RefineState& s, double sigma) const;

private:
    enum class Mode { Rank, Channel };
    Update step(const RefineState& s, Mode mode, double sigma) const;

    const TcsdpProblem& p_;
    RefineOptions o_;
    Lowered base_;
};

struct RefineResult {
    Point Y;                      // best rank-1 iterate, else last iterate
    double cost = 0;
    double eg = 0;
    double relax_cost = 0;
    bool rank1 = false;
    int iterations = 0;           // excludes the initial relaxation
    int it_rankmin = 0, it_sched = 0, it_chan = 0;
    int reprojections = 0;        // feasibility restorations after backend failures
    DualCertificate dual;
    CertificateReport certificate;
    double dg = 0;
    SolveStatus relax_status = SolveStatus::Optimal;
    std::string note;
};

RefineResult refine_solve(const TcsdpProblem& p, const RefineOptions& opts, const ProgressSink& sink = {});

}  // namespace tcsdp
