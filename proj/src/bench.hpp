#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "refine.hpp"
#include "robots.hpp"

namespace tcsdp {

enum class ProblemKind { Pnp, HandEye, DualCal };
enum class NoiseLevel { None, Low, Medium, High };

const char* kind_name(ProblemKind k);
const char* noise_name(NoiseLevel n);
ProblemKind parse_kind(const std::string& s);
NoiseLevel parse_noise(const std::string& s);

// Pixel bound for PnP / hand-eye; Medium is not defined there.
double pixel_noise(NoiseLevel n);
// (theta in radians, l in meters) for dual calibration.
std::pair<double, double> transform_noise(NoiseLevel n);

struct ScenarioConfig {
    ProblemKind kind = ProblemKind::Pnp;
    int m = 1;
    int n = 6;
    NoiseLevel noise = NoiseLevel::None;
    uint64_t seed = 0;
    RefineOptions opts;
    double gamma_w = 1.0;
    void validate() const;
};

PnpScenario gen_pnp_scenario(int n, double e_p, uint64_t seed);
HandEyeScenario gen_handeye_scenario(int m, int n, double e_p, uint64_t seed);
DualCalScenario gen_dualcal_scenario(int m, double theta, double l, uint64_t seed);

struct PoseErrors {
    std::vector<double> R;
    std::vector<double> t;
};
PoseErrors pose_errors(const std::vector<Mat4>& estimate, const std::vector<Mat4>& truth);
double rotation_error(const Mat3& est, const Mat3& truth);

struct SolveReport {
    ScenarioConfig config;
    std::vector<std::string> unknowns;   // names of the pose unknowns, e.g. X, Y, Z
    std::vector<double> R_err, t_err;
    double eg = 0, dg = 0, cost = 0;
    double relax_cost = 0;
    int iterations = 0, it_rankmin = 0, it_sched = 0, it_chan = 0;
    double wall_s = 0;
    bool success = false;
    bool certified = false;
    double kkt_residual = 0;             // largest KKT residual of the certificate check
    bool completed = false;
    double calib_residual = 0;           // AX-XB or AXB-YCZ (NaN for PnP)
    std::string solver_status;
    std::string message;
    double max_rot_err() const;
};

using ProgressFactory = std::function<ProgressSink(const ScenarioConfig&)>;

SolveReport run_scenario(const ScenarioConfig& cfg, const ProgressSink& sink = {});
std::vector<SolveReport> run_batch(const std::vector<ScenarioConfig>& configs, int parallelism,
                                   const ProgressFactory& progress = {});

struct BatchSummary {
    int total = 0, completed = 0, successes = 0;
    std::vector<double> mean_R, mean_t;
    double mean_eg = 0, mean_dg = 0, mean_cost = 0, mean_wall = 0, mean_iterations = 0;
};
BatchSummary summarize(const std::vector<SolveReport>& reports);

std::string results_csv(const std::vector<SolveReport>& reports);
std::string results_json(const std::vector<SolveReport>& reports);
std::string progress_line(const ProgressRecord& r);

}  // namespace tcsdp
