// Benchmark CLI. Links only the C interface.
#include <cstdio>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "tcsdp/tcsdp.h"

namespace {

int fail(int code) {
    std::fprintf(stderr, "error: %s: %s\n", tcsdp_status_name(code), tcsdp_last_error());
    return 2;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Trace-constrained SDP benchmarks"};
    app.require_subcommand(1);
    CLI::App* run = app.add_subcommand("run", "run a batch of synthetic scenarios");

    std::string kind = "pnp", noise = "none", out_dir;
    int m = 1, n = 6, seeds = 1, parallel = 1, repeat = -1;
    uint64_t first_seed = 0;
    double gamma = -1, gamma_c = -1;
    std::vector<int> limits;
    bool progress = false;

    run->add_option("--kind", kind, "problem kind")->check(CLI::IsMember({"pnp", "handeye", "dualcal"}))->required();
    run->add_option("--m", m, "number of configurations")->check(CLI::NonNegativeNumber);
    run->add_option("--n", n, "number of points or features")->check(CLI::NonNegativeNumber);
    run->add_option("--noise", noise, "noise level")->check(CLI::IsMember({"none", "low", "medium", "high"}));
    run->add_option("--seeds", seeds, "number of seeds")->check(CLI::NonNegativeNumber);
    run->add_option("--first-seed", first_seed, "first seed");
    run->add_option("--out", out_dir, "output directory")->required();
    run->add_option("--gamma", gamma, "channel width in (0,1)");
    run->add_option("--gamma-c", gamma_c, "weight of the auxiliary variable c");
    run->add_option("--limits", limits, "scheduling,channel iteration limits")->delimiter(',')->expected(2);
    run->add_option("--repeat", repeat, "extra scheduling/channel passes")->check(CLI::NonNegativeNumber);
    run->add_option("--parallel", parallel, "concurrent runs")->check(CLI::NonNegativeNumber);
    run->add_flag("--progress", progress, "write progress/<seed>.ndjson");

    CLI11_PARSE(app, argc, argv);

    tcsdp_bench_config cfg;
    tcsdp_bench_config_default(&cfg);
    const std::vector<std::string> kinds{"pnp", "handeye", "dualcal"};
    const std::vector<std::string> noises{"none", "low", "medium", "high"};
    for (int i = 0; i < 3; ++i)
        if (kinds[i] == kind) cfg.kind = i;
    for (int i = 0; i < 4; ++i)
        if (noises[i] == noise) cfg.noise = i;
    cfg.m = m;
    cfg.n = n;
    cfg.seeds = seeds;
    cfg.first_seed = first_seed;
    cfg.parallel = parallel;
    if (gamma >= 0) cfg.opts.gamma = gamma;
    if (gamma_c >= 0) cfg.opts.gamma_c = gamma_c;
    if (limits.size() == 2) {
        cfg.opts.sched_limit = limits[0];
        cfg.opts.chan_limit = limits[1];
    }
    if (repeat >= 0) cfg.opts.max_repeats = repeat;

    const std::string progress_dir = out_dir + "/progress";
    tcsdp_batch* batch = nullptr;
    int rc = tcsdp_bench_run(&cfg, progress ? progress_dir.c_str() : nullptr, &batch);
    if (rc != TCSDP_OK) return fail(rc);
    rc = tcsdp_batch_write(batch, out_dir.c_str());
    if (rc != TCSDP_OK) {
        tcsdp_batch_free(batch);
        return fail(rc);
    }
    int total = 0, completed = 0, successes = 0;
    tcsdp_batch_counts(batch, &total, &completed, &successes);
    tcsdp_batch_free(batch);
    std::printf("%s: %d runs, %d completed, %d successful; results in %s\n", kind.c_str(), total, completed, successes,
                out_dir.c_str());
    return completed == total ? 0 : 1;
}
