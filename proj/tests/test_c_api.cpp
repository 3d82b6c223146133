#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <string>
#include <vector>

#include <tcsdp/tcsdp.h>

#include "bench.hpp"
#include "serialize.hpp"
#include "toy.hpp"

namespace {

std::string take(char* s) {
    std::string out(s ? s : "");
    tcsdp_string_free(s);
    return out;
}

struct Counter {
    int calls = 0;
    int last = -1;
};

void on_progress(void* user, int iteration, const char*, double, double, double) {
    auto* c = static_cast<Counter*>(user);
    ++c->calls;
    c->last = iteration;
}

}  // namespace

TEST_CASE("c api basics") {
    CHECK(std::string(tcsdp_version()).size() > 0);
    CHECK(std::string(tcsdp_status_name(TCSDP_OK)) == "Ok");
    CHECK(tcsdp_sigma_schedule(25, 1e-5) == doctest::Approx(0.5));
    const double m[4] = {2, 1, 1, 2};
    double l1 = 0, g[4];
    REQUIRE(tcsdp_lambda1(m, 2, &l1, g) == TCSDP_OK);
    CHECK(l1 == doctest::Approx(3.0));
    CHECK(g[1] == doctest::Approx(0.5));
    const double bad[4] = {NAN, 0, 0, 1};
    CHECK(tcsdp_lambda1(bad, 2, &l1, nullptr) == TCSDP_INVALID_INPUT);
    CHECK(std::string(tcsdp_last_error()).size() > 0);
}

TEST_CASE("c api lifts") {
    const double R[9] = {0, -1, 0, 1, 0, 0, 0, 0, 1};
    double Y[49], Rr[9];
    REQUIRE(tcsdp_lift_rotation(R, Y) == TCSDP_OK);
    REQUIRE(tcsdp_recover_rotation(Y, Rr) == TCSDP_OK);
    for (int i = 0; i < 9; ++i) CHECK(Rr[i] == doctest::Approx(R[i]));
    const double notR[9] = {2, 0, 0, 0, 1, 0, 0, 0, 1};
    CHECK(tcsdp_lift_rotation(notR, Y) == TCSDP_INVALID_INPUT);
    const double v[3] = {0, 0.6, 0.8};
    double T[48], tau = 0, vr[3];
    REQUIRE(tcsdp_lift_translation(0.7, v, T) == TCSDP_OK);
    REQUIRE(tcsdp_recover_translation(T, &tau, vr) == TCSDP_OK);
    CHECK(tau == doctest::Approx(0.7));
    CHECK(vr[2] == doctest::Approx(0.8));
    CHECK(tcsdp_lift_translation(1.2, v, T) == TCSDP_INVALID_INPUT);
}

TEST_CASE("problem json round trip") {
    const tcsdp::TcsdpProblem p = toy_problem(Eigen::Vector3d(0, 0.1, 0.9));
    const std::string doc = tcsdp::problem_to_json(p).dump();
    tcsdp_problem* h = nullptr;
    REQUIRE(tcsdp_problem_from_json(doc.c_str(), &h) == TCSDP_OK);
    int nb = 0, nv = 0, nr = 0;
    REQUIRE(tcsdp_problem_dims(h, &nb, &nv, &nr) == TCSDP_OK);
    CHECK(nb == 1);
    CHECK(nv == 16);
    char* back = nullptr;
    REQUIRE(tcsdp_problem_to_json(h, &back) == TCSDP_OK);
    const auto again = tcsdp::problem_from_json(nlohmann::json::parse(take(back)));
    CHECK(again.L.size() == p.L.size());
    CHECK(again.L[2].eval(Eigen::VectorXd::Ones(16)) == doctest::Approx(0.1));
    tcsdp_problem_free(h);

    CHECK(tcsdp_problem_from_json("{\"schema\":\"nope\"}", &h) == TCSDP_INVALID_INPUT);
    CHECK(tcsdp_problem_from_json("not json", &h) == TCSDP_INVALID_INPUT);
    CHECK(tcsdp_problem_from_json(nullptr, &h) == TCSDP_INVALID_INPUT);
}

TEST_CASE("scenario json round trip") {
    auto s = tcsdp::gen_dualcal_scenario(3, 0.01, 1e-3, 7);
    auto back = tcsdp::dualcal_scenario_from_json(tcsdp::scenario_to_json(s));
    CHECK((back.B[2] - s.B[2]).norm() == 0.0);
    CHECK((back.Z - s.Z).norm() == 0.0);
    auto h = tcsdp::gen_handeye_scenario(2, 4, 2.0, 7);
    auto hb = tcsdp::handeye_scenario_from_json(tcsdp::scenario_to_json(h));
    CHECK(hb.pixels[1][3] == h.pixels[1][3]);
    const std::string doc = tcsdp::scenario_to_json(tcsdp::gen_pnp_scenario(6, 0, 3)).dump();
    tcsdp_problem* p = nullptr;
    REQUIRE(tcsdp_problem_from_scenario(doc.c_str(), 20.0, &p) == TCSDP_OK);
    int nb = 0;
    tcsdp_problem_dims(p, &nb, nullptr, nullptr);
    CHECK(nb == 1 + 3 * 6);
    tcsdp_problem_free(p);
}

TEST_CASE("c api refine") {
    const std::string doc = tcsdp::problem_to_json(toy_problem(Eigen::Vector3d(0, 0.1, 0.9))).dump();
    tcsdp_problem* p = nullptr;
    REQUIRE(tcsdp_problem_from_json(doc.c_str(), &p) == TCSDP_OK);
    tcsdp_refine_options o;
    tcsdp_refine_options_default(&o);
    CHECK(o.gamma == doctest::Approx(0.98));
    o.sched_limit = 40;
    o.chan_limit = 20;
    o.rankmin_limit = 40;
    Counter c;
    tcsdp_result* r = nullptr;
    REQUIRE(tcsdp_refine(p, &o, on_progress, &c, &r) == TCSDP_OK);
    tcsdp_problem_free(p);  // the result keeps its own copy
    tcsdp_result_info info;
    REQUIRE(tcsdp_result_info_get(r, &info) == TCSDP_OK);
    CHECK(info.rank1 == 1);
    CHECK(c.calls == info.iterations + 1);
    CHECK(c.last == info.iterations);
    double Y[16];
    int dim = 0;
    CHECK(tcsdp_result_block(r, 0, Y, 4, &dim) == TCSDP_INVALID_INPUT);
    REQUIRE(tcsdp_result_block(r, 0, Y, 16, &dim) == TCSDP_OK);
    CHECK(dim == 4);
    CHECK(Y[15] == doctest::Approx(1.0));
    CHECK(tcsdp_result_block(r, 3, Y, 16, &dim) == TCSDP_INVALID_INPUT);
    char* js = nullptr;
    REQUIRE(tcsdp_result_to_json(r, &js) == TCSDP_OK);
    auto j = nlohmann::json::parse(take(js));
    CHECK(j.contains("solution"));
    tcsdp_result_free(r);

    o.gamma = 2.0;
    CHECK(tcsdp_refine(nullptr, &o, nullptr, nullptr, &r) == TCSDP_INVALID_INPUT);
}

TEST_CASE("c api batch") {
    tcsdp_bench_config c;
    tcsdp_bench_config_default(&c);
    c.seeds = 0;
    tcsdp_batch* b = nullptr;
    REQUIRE(tcsdp_bench_run(&c, nullptr, &b) == TCSDP_OK);
    int total = -1, done = -1, ok = -1;
    tcsdp_batch_counts(b, &total, &done, &ok);
    CHECK(total == 0);
    const auto dir = std::filesystem::temp_directory_path() / "tcsdp_c_api_batch";
    std::filesystem::remove_all(dir);
    REQUIRE(tcsdp_batch_write(b, dir.string().c_str()) == TCSDP_OK);
    CHECK(std::filesystem::exists(dir / "results.csv"));
    CHECK(std::filesystem::exists(dir / "results.json"));
    tcsdp_batch_free(b);
    c.seeds = -1;
    CHECK(tcsdp_bench_run(&c, nullptr, &b) == TCSDP_INVALID_INPUT);
    std::filesystem::remove_all(dir);
}
