#include "tcsdp/tcsdp.h"

#include <cstring>
#include <filesystem>
#include <fstream>
#include <memory>
#include <mutex>
#include <string>

#include "bench.hpp"
#include "error.hpp"
#include "manifolds.hpp"
#include "refine.hpp"
#include "serialize.hpp"
#include "symeig.hpp"

struct tcsdp_problem {
    tcsdp::TcsdpProblem p;
};
struct tcsdp_result {
    tcsdp::RefineResult r;
    const tcsdp::TcsdpProblem* problem;
    std::shared_ptr<const tcsdp::TcsdpProblem> owner;
};
struct tcsdp_batch {
    std::vector<tcsdp::SolveReport> reports;
};

namespace {

thread_local std::string g_last_error;

template <class F>
int guard(F&& f) {
    try {
        f();
        g_last_error.clear();
        return TCSDP_OK;
    } catch (const tcsdp::Error& e) {
        g_last_error = e.what();
        return static_cast<int>(e.code());
    } catch (const std::bad_alloc&) {
        g_last_error = "out of memory";
        return TCSDP_INTERNAL;
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return TCSDP_INTERNAL;
    }
}

void need(const void* p, const char* what) {
    if (!p) throw tcsdp::Error(tcsdp::ErrorCode::InvalidInput, std::string(what) + " is null");
}

char* dup(const std::string& s) {
    char* out = static_cast<char*>(std::malloc(s.size() + 1));
    if (!out) throw std::bad_alloc();
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

tcsdp::RefineOptions to_options(const tcsdp_refine_options* o) {
    tcsdp::RefineOptions r;
    if (!o) return r;
    r.gamma_c = o->gamma_c;
    r.gamma = o->gamma;
    r.sigma_floor = o->sigma_floor;
    r.sched_limit = o->sched_limit;
    r.chan_limit = o->chan_limit;
    r.rankmin_limit = o->rankmin_limit;
    r.rank_tol = o->rank_tol;
    r.eps = o->eps;
    r.max_repeats = o->max_repeats;
    r.certify_tol = o->certify_tol;
    return r;
}

nlohmann::json parse(const char* text) {
    need(text, "json");
    try {
        return nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw tcsdp::Error(tcsdp::ErrorCode::InvalidInput, std::string("json parse error: ") + e.what());
    }
}

void write_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream f(path);
    f << text;
    if (!f) throw tcsdp::Error(tcsdp::ErrorCode::Io, "cannot write " + path.string());
}

}  // namespace

extern "C" {

const char* tcsdp_version(void) { return "1.0.0"; }
const char* tcsdp_last_error(void) { return g_last_error.c_str(); }
const char* tcsdp_status_name(int code) { return tcsdp::error_name(static_cast<tcsdp::ErrorCode>(code)); }
void tcsdp_string_free(char* s) { std::free(s); }

int tcsdp_lambda1(const double* m, int d, double* lambda1, double* grad) {
    return guard([&] {
        need(m, "matrix");
        need(lambda1, "lambda1");
        if (d <= 0) throw tcsdp::Error(tcsdp::ErrorCode::InvalidInput, "dimension must be positive");
        Eigen::MatrixXd M = Eigen::Map<const Eigen::Matrix<double, -1, -1, Eigen::RowMajor>>(m, d, d);
        tcsdp::SymmetricMatrix S(M);
        if (grad) {
            const tcsdp::SymmetricMatrix G = tcsdp::grad_lambda1(S);
            Eigen::Map<Eigen::Matrix<double, -1, -1, Eigen::RowMajor>>(grad, d, d) = G.dense();
        }
        *lambda1 = tcsdp::lambda1(S);
    });
}

double tcsdp_sigma_schedule(int k, double floor) { return tcsdp::sigma_schedule(k, floor); }

int tcsdp_lift_rotation(const double R[9], double Y[49]) {
    return guard([&] {
        need(R, "R");
        need(Y, "Y");
        const tcsdp::Mat3 r = Eigen::Map<const Eigen::Matrix<double, 3, 3, Eigen::RowMajor>>(R);
        Eigen::Map<Eigen::Matrix<double, 7, 7, Eigen::RowMajor>> out(Y);
        out = tcsdp::lift_rotation(r);
    });
}

int tcsdp_recover_rotation(const double Y[49], double R[9]) {
    return guard([&] {
        need(Y, "Y");
        need(R, "R");
        Eigen::MatrixXd y = Eigen::Map<const Eigen::Matrix<double, 7, 7, Eigen::RowMajor>>(Y);
        Eigen::Map<Eigen::Matrix<double, 3, 3, Eigen::RowMajor>> out(R);
        out = tcsdp::recover_rotation(y);
    });
}

int tcsdp_lift_translation(double tau, const double v[3], double Y[48]) {
    return guard([&] {
        need(v, "v");
        need(Y, "Y");
        const auto b = tcsdp::lift_translation(tau, tcsdp::Vec3(v[0], v[1], v[2]));
        for (int l = 0; l < 3; ++l) Eigen::Map<Eigen::Matrix<double, 4, 4, Eigen::RowMajor>>(Y + 16 * l) = b.Y[l];
    });
}

int tcsdp_recover_translation(const double Y[48], double* tau, double v[3]) {
    return guard([&] {
        need(Y, "Y");
        need(tau, "tau");
        need(v, "v");
        tcsdp::TranslationBlock b;
        for (int l = 0; l < 3; ++l) b.Y[l] = Eigen::Map<const Eigen::Matrix<double, 4, 4, Eigen::RowMajor>>(Y + 16 * l);
        const auto [t, dir] = tcsdp::recover_translation(b);
        *tau = t;
        for (int i = 0; i < 3; ++i) v[i] = dir(i);
    });
}

int tcsdp_problem_from_json(const char* json, tcsdp_problem** out) {
    return guard([&] {
        need(out, "out");
        auto h = std::make_unique<tcsdp_problem>();
        h->p = tcsdp::problem_from_json(parse(json));
        *out = h.release();
    });
}

int tcsdp_problem_from_scenario(const char* scenario_json, double tau_u, tcsdp_problem** out) {
    return guard([&] {
        need(out, "out");
        const auto j = parse(scenario_json);
        const std::string kind = j.value("kind", "");
        auto h = std::make_unique<tcsdp_problem>();
        if (kind == "pnp") {
            h->p = tcsdp::build_pnp(tcsdp::pnp_scenario_from_json(j), tau_u).problem;
        } else if (kind == "handeye") {
            h->p = tcsdp::build_handeye(tcsdp::handeye_scenario_from_json(j), tau_u).problem;
        } else if (kind == "dualcal") {
            h->p = tcsdp::build_dualcal(tcsdp::dualcal_scenario_from_json(j), tau_u).problem;
        } else {
            throw tcsdp::Error(tcsdp::ErrorCode::InvalidInput, "unknown scenario kind: " + kind);
        }
        *out = h.release();
    });
}

int tcsdp_problem_to_json(const tcsdp_problem* p, char** out) {
    return guard([&] {
        need(p, "problem");
        need(out, "out");
        *out = dup(tcsdp::problem_to_json(p->p).dump(1));
    });
}

int tcsdp_problem_dims(const tcsdp_problem* p, int* n_blocks, int* n_vars, int* n_rows) {
    return guard([&] {
        need(p, "problem");
        if (n_blocks) *n_blocks = static_cast<int>(p->p.blocks.size());
        if (n_vars) *n_vars = p->p.n_vars();
        if (n_rows) *n_rows = static_cast<int>(p->p.all_rows().size());
    });
}

void tcsdp_problem_free(tcsdp_problem* p) { delete p; }

void tcsdp_refine_options_default(tcsdp_refine_options* o) {
    if (!o) return;
    const tcsdp::RefineOptions d;
    o->gamma_c = d.gamma_c;
    o->gamma = d.gamma;
    o->sigma_floor = d.sigma_floor;
    o->sched_limit = d.sched_limit;
    o->chan_limit = d.chan_limit;
    o->rankmin_limit = d.rankmin_limit;
    o->rank_tol = d.rank_tol;
    o->eps = d.eps;
    o->max_repeats = d.max_repeats;
    o->certify_tol = d.certify_tol;
}

int tcsdp_refine(const tcsdp_problem* p, const tcsdp_refine_options* o, tcsdp_progress_fn cb, void* user,
                 tcsdp_result** out) {
    return guard([&] {
        need(p, "problem");
        need(out, "out");
        tcsdp::ProgressSink sink;
        if (cb) {
            sink = [cb, user](const tcsdp::ProgressRecord& r) {
                cb(user, r.iteration, tcsdp::phase_name(r.phase), r.cost, r.sum_lambda1, r.eg);
            };
        }
        auto owner = std::make_shared<const tcsdp::TcsdpProblem>(p->p);
        auto h = std::make_unique<tcsdp_result>();
        h->r = tcsdp::refine_solve(*owner, to_options(o), sink);
        h->problem = owner.get();
        h->owner = owner;
        *out = h.release();
    });
}

int tcsdp_result_info_get(const tcsdp_result* r, tcsdp_result_info* info) {
    return guard([&] {
        need(r, "result");
        need(info, "info");
        info->cost = r->r.cost;
        info->eg = r->r.eg;
        info->dg = r->r.dg;
        info->relax_cost = r->r.relax_cost;
        info->rank1 = r->r.rank1 ? 1 : 0;
        info->certified = r->r.certificate.certified ? 1 : 0;
        info->iterations = r->r.iterations;
        info->it_rankmin = r->r.it_rankmin;
        info->it_sched = r->r.it_sched;
        info->it_chan = r->r.it_chan;
    });
}

int tcsdp_result_block(const tcsdp_result* r, int b, double* out, int cap, int* dim) {
    return guard([&] {
        need(r, "result");
        if (b < 0 || b >= static_cast<int>(r->r.Y.Y.size()))
            throw tcsdp::Error(tcsdp::ErrorCode::InvalidInput, "block index out of range");
        const Eigen::MatrixXd& Y = r->r.Y.Y[b];
        const int d = static_cast<int>(Y.rows());
        if (dim) *dim = d;
        if (!out) return;
        if (cap < d * d) throw tcsdp::Error(tcsdp::ErrorCode::InvalidInput, "output buffer too small");
        Eigen::Map<Eigen::Matrix<double, -1, -1, Eigen::RowMajor>>(out, d, d) = Y;
    });
}

int tcsdp_result_to_json(const tcsdp_result* r, char** out) {
    return guard([&] {
        need(r, "result");
        need(out, "out");
        nlohmann::json j = {{"schema", "tcsdp.result"},
                            {"version", tcsdp::kSchemaVersion},
                            {"cost", r->r.cost},
                            {"eg", r->r.eg},
                            {"dg", r->r.dg},
                            {"relax_cost", r->r.relax_cost},
                            {"rank1", r->r.rank1},
                            {"iterations", r->r.iterations},
                            {"solution", tcsdp::point_to_json(r->r.Y)},
                            {"certificate", tcsdp::certificate_to_json(r->r.dual, &r->r.certificate)}};
        *out = dup(j.dump(1));
    });
}

void tcsdp_result_free(tcsdp_result* r) { delete r; }

void tcsdp_bench_config_default(tcsdp_bench_config* c) {
    if (!c) return;
    c->kind = TCSDP_KIND_PNP;
    c->m = 1;
    c->n = 6;
    c->noise = TCSDP_NOISE_NONE;
    c->first_seed = 0;
    c->seeds = 1;
    c->parallel = 1;
    c->gamma_w = 1.0;
    tcsdp_refine_options_default(&c->opts);
}

int tcsdp_bench_run(const tcsdp_bench_config* c, const char* progress_dir, tcsdp_batch** out) {
    return guard([&] {
        need(c, "config");
        need(out, "out");
        if (c->kind < 0 || c->kind > 2) throw tcsdp::Error(tcsdp::ErrorCode::InvalidInput, "bad kind");
        if (c->noise < 0 || c->noise > 3) throw tcsdp::Error(tcsdp::ErrorCode::InvalidInput, "bad noise level");
        if (c->seeds < 0) throw tcsdp::Error(tcsdp::ErrorCode::InvalidInput, "seeds must be >= 0");
        std::vector<tcsdp::ScenarioConfig> cfgs;
        for (int s = 0; s < c->seeds; ++s) {
            tcsdp::ScenarioConfig cfg;
            cfg.kind = static_cast<tcsdp::ProblemKind>(c->kind);
            cfg.m = c->m;
            cfg.n = c->n;
            cfg.noise = static_cast<tcsdp::NoiseLevel>(c->noise);
            cfg.seed = c->first_seed + static_cast<uint64_t>(s);
            cfg.opts = to_options(&c->opts);
            cfg.gamma_w = c->gamma_w;
            cfg.validate();
            cfgs.push_back(cfg);
        }
        tcsdp::ProgressFactory factory;
        if (progress_dir) {
            const std::filesystem::path dir(progress_dir);
            std::error_code ec;
            std::filesystem::create_directories(dir, ec);
            if (ec) throw tcsdp::Error(tcsdp::ErrorCode::Io, "cannot create " + dir.string());
            factory = [dir](const tcsdp::ScenarioConfig& cfg) -> tcsdp::ProgressSink {
                auto f = std::make_shared<std::ofstream>(dir / (std::to_string(cfg.seed) + ".ndjson"));
                if (!*f) throw tcsdp::Error(tcsdp::ErrorCode::Io, "cannot open progress file");
                return [f](const tcsdp::ProgressRecord& r) { *f << tcsdp::progress_line(r) << "\n" << std::flush; };
            };
        }
        auto h = std::make_unique<tcsdp_batch>();
        h->reports = tcsdp::run_batch(cfgs, c->parallel, factory);
        *out = h.release();
    });
}

int tcsdp_batch_counts(const tcsdp_batch* b, int* total, int* completed, int* successes) {
    return guard([&] {
        need(b, "batch");
        const auto s = tcsdp::summarize(b->reports);
        if (total) *total = s.total;
        if (completed) *completed = s.completed;
        if (successes) *successes = s.successes;
    });
}

int tcsdp_batch_csv(const tcsdp_batch* b, char** out) {
    return guard([&] {
        need(b, "batch");
        need(out, "out");
        *out = dup(tcsdp::results_csv(b->reports));
    });
}

int tcsdp_batch_json(const tcsdp_batch* b, char** out) {
    return guard([&] {
        need(b, "batch");
        need(out, "out");
        *out = dup(tcsdp::results_json(b->reports));
    });
}

int tcsdp_batch_write(const tcsdp_batch* b, const char* dir) {
    return guard([&] {
        need(b, "batch");
        need(dir, "dir");
        const std::filesystem::path d(dir);
        std::error_code ec;
        std::filesystem::create_directories(d, ec);
        if (ec) throw tcsdp::Error(tcsdp::ErrorCode::Io, "cannot create " + d.string());
        write_file(d / "results.csv", tcsdp::results_csv(b->reports));
        write_file(d / "results.json", tcsdp::results_json(b->reports));
    });
}

void tcsdp_batch_free(tcsdp_batch* b) { delete b; }

}  // extern "C"
