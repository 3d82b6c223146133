#include "bench.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "error.hpp"
#include "rng.hpp"

namespace tcsdp {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kDeg = M_PI / 180.0;
constexpr double kFocal = 500.0;

// Rotation by a uniform angle in [0, theta] about a random axis.
Mat3 random_tilt(SplitMix64& rng, double theta) {
    const Vec3 axis = rng.unit_vector();
    return Eigen::AngleAxisd(rng.uniform(0.0, theta), axis).toRotationMatrix();
}

Vec2 project(const Mat3& R, const Vec3& t, const Vec3& q, double f, bool* in_front) {
    const Vec3 pc = R.transpose() * (q - t);
    if (in_front) *in_front = pc(2) > 1e-6;
    return Vec2(f * pc(0) / pc(2), f * pc(1) / pc(2));
}

std::string fmt(double v) {
    if (std::isnan(v)) return "";
    std::ostringstream os;
    os << std::setprecision(6) << std::scientific << v;
    return os.str();
}
}  // namespace

const char* kind_name(ProblemKind k) {
    switch (k) {
        case ProblemKind::Pnp: return "pnp";
        case ProblemKind::HandEye: return "handeye";
        case ProblemKind::DualCal: return "dualcal";
    }
    return "?";
}

const char* noise_name(NoiseLevel n) {
    switch (n) {
        case NoiseLevel::None: return "none";
        case NoiseLevel::Low: return "low";
        case NoiseLevel::Medium: return "medium";
        case NoiseLevel::High: return "high";
    }
    return "?";
}

ProblemKind parse_kind(const std::string& s) {
    if (s == "pnp") return ProblemKind::Pnp;
    if (s == "handeye") return ProblemKind::HandEye;
    if (s == "dualcal") return ProblemKind::DualCal;
    throw Error(ErrorCode::InvalidInput, "unknown problem kind: " + s);
}

NoiseLevel parse_noise(const std::string& s) {
    if (s == "none") return NoiseLevel::None;
    if (s == "low") return NoiseLevel::Low;
    if (s == "medium") return NoiseLevel::Medium;
    if (s == "high") return NoiseLevel::High;
    throw Error(ErrorCode::InvalidInput, "unknown noise level: " + s);
}

double pixel_noise(NoiseLevel n) {
    switch (n) {
        case NoiseLevel::None: return 0.0;
        case NoiseLevel::Low: return 2.0;
        case NoiseLevel::High: return 5.0;
        case NoiseLevel::Medium: break;
    }
    throw Error(ErrorCode::InvalidInput, "noise level 'medium' is only defined for dual calibration");
}

std::pair<double, double> transform_noise(NoiseLevel n) {
    switch (n) {
        case NoiseLevel::None: return {0.0, 0.0};
        case NoiseLevel::Low: return {0.1 * kDeg, 1e-4};
        case NoiseLevel::Medium: return {0.3 * kDeg, 3e-4};
        case NoiseLevel::High: return {0.8 * kDeg, 8e-4};
    }
    return {0.0, 0.0};
}

void ScenarioConfig::validate() const {
    opts.validate();
    if (kind == ProblemKind::Pnp && n < 3) throw Error(ErrorCode::InvalidInput, "pnp needs n >= 3");
    if (kind == ProblemKind::HandEye && (m < 2 || n < 3)) throw Error(ErrorCode::InvalidInput, "handeye needs m >= 2, n >= 3");
    if (kind == ProblemKind::DualCal && m < 2) throw Error(ErrorCode::InvalidInput, "dualcal needs m >= 2");
    if (kind != ProblemKind::DualCal) pixel_noise(noise);
}

// ---- generators ---------------------------------------------------------------------------

PnpScenario gen_pnp_scenario(int n, double e_p, uint64_t seed) {
    if (n < 3) throw Error(ErrorCode::InvalidInput, "pnp needs n >= 3");
    SplitMix64 rng(seed);
    PnpScenario s;
    s.f_cam = kFocal;
    s.has_truth = true;
    s.R_true = rng.rotation();
    s.t_true = rng.uniform_box(-1.0, 1.0);
    for (int i = 0; i < n; ++i) {
        for (;;) {
            const Vec3 pc(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0), rng.uniform(2.0, 4.0));
            const Vec3 q = s.R_true * pc + s.t_true;
            bool front = false;
            Vec2 px = project(s.R_true, s.t_true, q, s.f_cam, &front);
            if (!front) continue;
            px += Vec2(rng.uniform(-e_p, e_p), rng.uniform(-e_p, e_p));
            s.points.push_back(q);
            s.pixels.push_back(px);
            break;
        }
    }
    return s;
}

HandEyeScenario gen_handeye_scenario(int m, int n, double e_p, uint64_t seed) {
    if (m < 2 || n < 3) throw Error(ErrorCode::InvalidInput, "handeye needs m >= 2, n >= 3");
    SplitMix64 rng(seed);
    HandEyeScenario s;
    s.m = m;
    s.n = n;
    s.f_cam = kFocal;
    s.has_truth = true;
    s.X = make_transform(rng.rotation(), rng.uniform_box(-0.1, 0.1));
    s.T_f = make_transform(rng.rotation(), Vec3::Zero());
    // Unit tag grid with out-of-plane offsets so no four features are coplanar.
    const int g = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(n))));
    for (int j = 0; j < n; ++j) {
        const double gx = g > 1 ? static_cast<double>(j % g) / (g - 1) - 0.5 : 0.0;
        const double gy = g > 1 ? static_cast<double>(j / g) / (g - 1) - 0.5 : 0.0;
        s.features.emplace_back(gx, gy, rng.uniform(-0.3, 0.3));
    }
    const Mat3 Rf = s.T_f.topLeftCorner<3, 3>();
    const Vec3 tf = s.T_f.topRightCorner<3, 1>();
    const Mat3 Rx = s.X.topLeftCorner<3, 3>();
    const Vec3 tx = s.X.topRightCorner<3, 1>();
    for (int i = 0; i < m; ++i) {
        Mat3 Rc;
        Vec3 tc;
        for (;;) {
            Rc = rng.rotation();
            tc = -Rc * Vec3(0, 0, rng.uniform(1.5, 2.5)) + rng.uniform_box(-0.2, 0.2);
            bool ok = true;
            for (const auto& f : s.features) ok = ok && (Rc.transpose() * (Rf * f + tf - tc))(2) > 0.3;
            if (ok) break;
        }
        const Mat3 Re = Rc * Rx.transpose();
        s.T_e.push_back(make_transform(Re, tc - Re * tx));
        std::vector<Vec2> row;
        for (const auto& f : s.features) {
            Vec2 px = project(Rc, tc, Rf * f + tf, s.f_cam, nullptr);
            px += Vec2(rng.uniform(-e_p, e_p), rng.uniform(-e_p, e_p));
            row.push_back(px);
        }
        s.pixels.push_back(row);
    }
    return s;
}

DualCalScenario gen_dualcal_scenario(int m, double theta, double l, uint64_t seed) {
    if (m < 2) throw Error(ErrorCode::InvalidInput, "dualcal needs m >= 2");
    SplitMix64 rng(seed);
    DualCalScenario s;
    s.m = m;
    s.has_truth = true;
    s.X = make_transform(rng.rotation(), rng.uniform_box(-0.1, 0.1));
    s.Y = make_transform(rng.rotation(), Vec3(1.5, 0, 0) + rng.uniform_box(-0.2, 0.2));
    s.Z = make_transform(rng.rotation(), rng.uniform_box(-0.1, 0.1));
    auto noisy = [&](const Mat4& T) {
        if (theta == 0.0 && l == 0.0) return T;
        const Mat3 R = T.topLeftCorner<3, 3>() * random_tilt(rng, theta);
        const Vec3 t = T.topRightCorner<3, 1>() + rng.uniform_box(-l, l);
        return make_transform(R, t);
    };
    for (int i = 0; i < m; ++i) {
        const Mat4 Tt = make_transform(rng.rotation(), Vec3(0.75, 0, 0.5) + rng.uniform_box(-0.2, 0.2));
        const Mat4 A = make_transform(rng.rotation(), Vec3(0.3, 0, 0.5) + rng.uniform_box(-0.2, 0.2));
        const Mat4 Tc = A * s.X;
        const Mat4 B = inverse_transform(Tc) * Tt;
        const Mat4 C = inverse_transform(s.Y) * Tt * inverse_transform(s.Z);
        s.A.push_back(noisy(A));
        s.B.push_back(noisy(B));
        s.C.push_back(noisy(C));
    }
    return s;
}

// ---- metrics ---------------------------------------------------------------------------------

double rotation_error(const Mat3& est, const Mat3& truth) { return (est * truth.transpose() - Mat3::Identity()).norm(); }

PoseErrors pose_errors(const std::vector<Mat4>& estimate, const std::vector<Mat4>& truth) {
    if (estimate.size() != truth.size()) throw Error(ErrorCode::InvalidInput, "estimate and truth sizes differ");
    PoseErrors e;
    for (size_t k = 0; k < estimate.size(); ++k) {
        e.R.push_back(rotation_error(estimate[k].topLeftCorner<3, 3>(), truth[k].topLeftCorner<3, 3>()));
        e.t.push_back((estimate[k].topRightCorner<3, 1>() - truth[k].topRightCorner<3, 1>()).norm());
    }
    return e;
}

double SolveReport::max_rot_err() const {
    double w = 0;
    for (double r : R_err) w = std::isnan(r) ? INFINITY : std::max(w, r);
    return R_err.empty() ? INFINITY : w;
}

// ---- runs ----------------------------------------------------------------------------------------

namespace {

template <class B>
void fill_from_refine(SolveReport& rep, const RefineResult& rr, const B&) {
    rep.eg = rr.eg;
    rep.dg = rr.dg;
    rep.cost = rr.cost;
    rep.relax_cost = rr.relax_cost;
    rep.iterations = rr.iterations;
    rep.it_rankmin = rr.it_rankmin;
    rep.it_sched = rr.it_sched;
    rep.it_chan = rr.it_chan;
    rep.certified = rr.certificate.certified;
    rep.kkt_residual = rr.certificate.max_residual();
    rep.solver_status = status_name(rr.relax_status);
    if (!rr.note.empty()) rep.message = rr.note;
}

void fail_poses(SolveReport& rep, size_t k, const std::string& why) {
    rep.R_err.assign(k, kNaN);
    rep.t_err.assign(k, kNaN);
    rep.message = rep.message.empty() ? why : rep.message + "; " + why;
}

}  // namespace

SolveReport run_scenario(const ScenarioConfig& cfg, const ProgressSink& sink) {
    SolveReport rep;
    rep.config = cfg;
    rep.calib_residual = kNaN;
    const auto t0 = std::chrono::steady_clock::now();
    try {
        cfg.validate();
        switch (cfg.kind) {
            case ProblemKind::Pnp: {
                rep.unknowns = {"camera"};
                PnpScenario s = gen_pnp_scenario(cfg.n, pixel_noise(cfg.noise), cfg.seed);
                std::vector<Vec3> pts = s.points;
                pts.push_back(s.t_true);
                auto built = build_pnp(s, scene_tau_u(pts));
                RefineResult rr = refine_solve(built.problem, cfg.opts, sink);
                fill_from_refine(rep, rr, built);
                try {
                    PnpSolution sol = extract_pnp(built, rr.Y);
                    auto e = pose_errors({make_transform(sol.R, sol.t)}, {make_transform(s.R_true, s.t_true)});
                    rep.R_err = e.R;
                    rep.t_err = e.t;
                } catch (const Error& e) {
                    fail_poses(rep, 1, std::string(error_name(e.code())) + ": " + e.what());
                }
                break;
            }
            case ProblemKind::HandEye: {
                rep.unknowns = {"X"};
                HandEyeScenario s = gen_handeye_scenario(cfg.m, cfg.n, pixel_noise(cfg.noise), cfg.seed);
                std::vector<Vec3> pts;
                std::vector<Mat4> cams;
                for (const auto& f : s.features) pts.push_back(s.T_f.topLeftCorner<3, 3>() * f + s.T_f.topRightCorner<3, 1>());
                for (const auto& Te : s.T_e) {
                    cams.push_back(Te * s.X);
                    pts.push_back(Te.topRightCorner<3, 1>());
                    pts.push_back(cams.back().topRightCorner<3, 1>());
                }
                auto built = build_handeye(s, scene_tau_u(pts));
                RefineResult rr = refine_solve(built.problem, cfg.opts, sink);
                fill_from_refine(rep, rr, built);
                try {
                    HandEyeSolution sol = extract_handeye(s, built, rr.Y);
                    auto e = pose_errors({sol.X}, {s.X});
                    rep.R_err = e.R;
                    rep.t_err = e.t;
                    rep.calib_residual = handeye_residual(s, cams, sol.X);
                } catch (const Error& e) {
                    fail_poses(rep, 1, std::string(error_name(e.code())) + ": " + e.what());
                }
                break;
            }
            case ProblemKind::DualCal: {
                rep.unknowns = {"X", "Y", "Z"};
                auto [theta, l] = transform_noise(cfg.noise);
                DualCalScenario s = gen_dualcal_scenario(cfg.m, theta, l, cfg.seed);
                std::vector<Vec3> pts{Vec3::Zero(), s.Y.topRightCorner<3, 1>()};
                for (int i = 0; i < s.m; ++i) {
                    const Mat4 Tc = s.A[i] * s.X;
                    const Mat4 Tt = Tc * s.B[i];
                    const Mat4 Teb = s.Y * s.C[i];
                    for (const Mat4& T : {s.A[i], Tc, Tt, Teb}) pts.push_back(T.topRightCorner<3, 1>());
                }
                auto built = build_dualcal(s, scene_tau_u(pts), cfg.gamma_w);
                RefineResult rr = refine_solve(built.problem, cfg.opts, sink);
                fill_from_refine(rep, rr, built);
                try {
                    DualCalSolution sol = extract_dualcal(s, built, rr.Y);
                    auto e = pose_errors({sol.X, sol.Y, sol.Z}, {s.X, s.Y, s.Z});
                    rep.R_err = e.R;
                    rep.t_err = e.t;
                    rep.calib_residual = dualcal_residual(s, sol.X, sol.Y, sol.Z);
                } catch (const Error& e) {
                    fail_poses(rep, 3, std::string(error_name(e.code())) + ": " + e.what());
                }
                break;
            }
        }
        rep.completed = true;
    } catch (const Error& e) {
        rep.message = std::string(error_name(e.code())) + ": " + e.what();
    } catch (const std::exception& e) {
        rep.message = std::string("Internal: ") + e.what();
    }
    rep.success = rep.completed && rep.max_rot_err() < 0.1;
    rep.wall_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return rep;
}

std::vector<SolveReport> run_batch(const std::vector<ScenarioConfig>& configs, int parallelism,
                                   const ProgressFactory& progress) {
    std::vector<SolveReport> out(configs.size());
    if (configs.empty()) return out;
    const int workers = std::max(1, std::min<int>(parallelism, static_cast<int>(configs.size())));
    std::atomic<size_t> next{0};
    auto work = [&]() {
        for (;;) {
            const size_t k = next.fetch_add(1);
            if (k >= configs.size()) return;
            ProgressSink sink;
            std::string sink_error;
            try {
                if (progress) sink = progress(configs[k]);
            } catch (const std::exception& e) {
                sink_error = std::string("progress stream unavailable: ") + e.what();
            }
            out[k] = run_scenario(configs[k], sink);
            if (!sink_error.empty()) out[k].message += (out[k].message.empty() ? "" : "; ") + sink_error;
        }
    };
    if (workers == 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w) pool.emplace_back(work);
        for (auto& t : pool) t.join();
    }
    return out;
}

BatchSummary summarize(const std::vector<SolveReport>& reports) {
    BatchSummary s;
    s.total = static_cast<int>(reports.size());
    size_t k = 0;
    for (const auto& r : reports) k = std::max(k, r.R_err.size());
    s.mean_R.assign(k, 0.0);
    s.mean_t.assign(k, 0.0);
    int done = 0;
    for (const auto& r : reports) {
        if (!r.completed) continue;
        ++done;
        if (r.success) ++s.successes;
        for (size_t j = 0; j < r.R_err.size(); ++j) {
            s.mean_R[j] += r.R_err[j];
            s.mean_t[j] += r.t_err[j];
        }
        s.mean_eg += r.eg;
        s.mean_dg += r.dg;
        s.mean_cost += r.cost;
        s.mean_wall += r.wall_s;
        s.mean_iterations += r.iterations;
    }
    s.completed = done;
    if (done > 0) {
        for (auto& v : s.mean_R) v /= done;
        for (auto& v : s.mean_t) v /= done;
        s.mean_eg /= done;
        s.mean_dg /= done;
        s.mean_cost /= done;
        s.mean_wall /= done;
        s.mean_iterations /= done;
    }
    return s;
}


std::string results_csv(const std::vector<SolveReport>& reports) {
    std::ostringstream os;
    os << "problem,m,n,noise,seed,R1,R2,R3,t1,t2,t3,EG,DG,cost,time_s,iterations,success,certified,completed,"
          "calib_residual,message\n";
    auto errs = [&](const std::vector<double>& v) {
        for (size_t j = 0; j < 3; ++j) os << (j < v.size() ? fmt(v[j]) : "") << ",";
    };
    for (const auto& r : reports) {
        const auto& c = r.config;
        os << kind_name(c.kind) << "," << c.m << "," << c.n << "," << noise_name(c.noise) << "," << c.seed << ",";
        errs(r.R_err);
        errs(r.t_err);
        std::string msg = r.message;
        for (char& ch : msg)
            if (ch == ',' || ch == '\n') ch = ';';
        os << fmt(r.eg) << "," << fmt(r.dg) << "," << fmt(r.cost) << "," << fmt(r.wall_s) << "," << r.iterations << ","
           << (r.success ? 1 : 0) << "," << (r.certified ? 1 : 0) << "," << (r.completed ? 1 : 0) << ","
           << fmt(r.calib_residual) << "," << msg << "\n";
    }
    if (!reports.empty()) {
        BatchSummary s = summarize(reports);
        const auto& c = reports.front().config;
        os << kind_name(c.kind) << "," << c.m << "," << c.n << "," << noise_name(c.noise) << ",mean,";
        errs(s.mean_R);
        errs(s.mean_t);
        os << fmt(s.mean_eg) << "," << fmt(s.mean_dg) << "," << fmt(s.mean_cost) << "," << fmt(s.mean_wall) << ","
           << fmt(s.mean_iterations) << "," << s.successes << "/" << s.total << ",,,,\n";
    }
    return os.str();
}

namespace {
nlohmann::json num(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); }
nlohmann::json nums(const std::vector<double>& v) {
    nlohmann::json a = nlohmann::json::array();
    for (double x : v) a.push_back(num(x));
    return a;
}
}  // namespace

std::string results_json(const std::vector<SolveReport>& reports) {
    nlohmann::json runs = nlohmann::json::array();
    for (const auto& r : reports) {
        const auto& c = r.config;
        runs.push_back({{"problem", kind_name(c.kind)},
                        {"m", c.m},
                        {"n", c.n},
                        {"noise", noise_name(c.noise)},
                        {"seed", c.seed},
                        {"unknowns", r.unknowns},
                        {"rotation_error", nums(r.R_err)},
                        {"translation_error", nums(r.t_err)},
                        {"eg", num(r.eg)},
                        {"dg", num(r.dg)},
                        {"cost", num(r.cost)},
                        {"relax_cost", num(r.relax_cost)},
                        {"time_s", num(r.wall_s)},
                        {"iterations", {{"total", r.iterations},
                                        {"rank_min", r.it_rankmin},
                                        {"scheduling", r.it_sched},
                                        {"channel", r.it_chan}}},
                        {"success", r.success},
                        {"certified", r.certified},
                        {"kkt_residual", num(r.kkt_residual)},
                        {"completed", r.completed},
                        {"calib_residual", num(r.calib_residual)},
                        {"solver_status", r.solver_status},
                        {"message", r.message},
                        {"options", {{"gamma", c.opts.gamma},
                                     {"gamma_c", c.opts.gamma_c},
                                     {"limits", {c.opts.sched_limit, c.opts.chan_limit}},
                                     {"repeat", c.opts.max_repeats}}}});
    }
    BatchSummary s = summarize(reports);
    nlohmann::json doc = {{"runs", runs},
                          {"summary", {{"total", s.total},
                                       {"completed", s.completed},
                                       {"successes", s.successes},
                                       {"mean_rotation_error", nums(s.mean_R)},
                                       {"mean_translation_error", nums(s.mean_t)},
                                       {"mean_eg", num(s.mean_eg)},
                                       {"mean_dg", num(s.mean_dg)},
                                       {"mean_cost", num(s.mean_cost)},
                                       {"mean_time_s", num(s.mean_wall)},
                                       {"mean_iterations", num(s.mean_iterations)}}}};
    return doc.dump(2);
}

std::string progress_line(const ProgressRecord& r) {
    nlohmann::json j = {{"iteration", r.iteration}, {"phase", phase_name(r.phase)}, {"cost", num(r.cost)},
                        {"sum_lambda1", num(r.sum_lambda1)}, {"eg", num(r.eg)}, {"c", num(r.c)},
                        {"group_lambda1", nums(r.group_lambda1)}};
    return j.dump();
}

}  // namespace tcsdp
