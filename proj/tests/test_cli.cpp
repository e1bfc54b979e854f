#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "parisi/json_io.hpp"

using nlohmann::json;

namespace {

struct RunResult {
    int exit_code;
    std::string stdout_text;
};

RunResult run_cli(const std::string& args) {
    std::string cmd = std::string(PARISI_LAB_BIN) + " " + args + " > /tmp/parisi_cli_out.txt 2>&1";
    int rc = std::system(cmd.c_str());
    std::ifstream is("/tmp/parisi_cli_out.txt");
    std::stringstream ss;
    ss << is.rdbuf();
    return {WEXITSTATUS(rc), ss.str()};
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream os(path);
    os << content;
}

std::string slurp(const std::string& path) {
    std::ifstream is(path);
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("usage errors exit 1") {
    CHECK(run_cli("parisi optimize").exit_code == 1);            // missing --config
    CHECK(run_cli("nonsense").exit_code != 0);
    write_file("/tmp/parisi_bad.json", "{\"mixture\": {\"coeffs\": {\"2\": 0.32}}, \"oops\": 1}");
    RunResult r = run_cli("parisi optimize --config /tmp/parisi_bad.json");
    CHECK(r.exit_code == 1);
}

TEST_CASE("optimize writes the estimate with provenance and is deterministic") {
    write_file("/tmp/parisi_sk08.json",
               "{\"mixture\": {\"coeffs\": {\"2\": 0.32}}, \"h\": 0.0, \"k_max\": 1, "
               "\"restarts\": 3, \"seed\": 1}");
    RunResult r1 = run_cli(
        "parisi optimize --config /tmp/parisi_sk08.json --out /tmp/parisi_est1.json");
    REQUIRE(r1.exit_code == 0);
    json est = json::parse(slurp("/tmp/parisi_est1.json"));
    CHECK(est.at("k_used").get<int>() == 0);
    CHECK(std::abs(est.at("value").get<double>() - 0.8531471806) <= 1e-4);
    CHECK(est.contains("config_hash"));
    CHECK(est.at("seed").get<std::uint64_t>() == 1);
    CHECK(est.at("criterion").at("verdict").get<std::string>() == "pass");

    RunResult r2 = run_cli(
        "parisi optimize --config /tmp/parisi_sk08.json --out /tmp/parisi_est2.json");
    REQUIRE(r2.exit_code == 0);
    CHECK(slurp("/tmp/parisi_est1.json") == slurp("/tmp/parisi_est2.json"));
}

TEST_CASE("at-line run") {
    write_file("/tmp/parisi_at.json", "{\"mixture\": {\"coeffs\": {\"2\": 1.125}}, \"h\": 0.0}");
    RunResult r = run_cli("at-line --config /tmp/parisi_at.json --out /tmp/parisi_at_out.json");
    REQUIRE(r.exit_code == 0);
    json rep = json::parse(slurp("/tmp/parisi_at_out.json"));
    CHECK(rep.at("rs_consistent").get<bool>() == false);
    CHECK(std::abs(rep.at("lhs_ineq").get<double>() - 2.25) <= 1e-9);
}

TEST_CASE("solve dumps csv with hash preamble") {
    write_file("/tmp/parisi_solve.json",
               "{\"mixture\": {\"coeffs\": {\"2\": 0.5}}, "
               "\"measure\": {\"atoms\": [0.4], \"weights\": [1.0]}, \"h\": 0.2}");
    RunResult r =
        run_cli("parisi solve --config /tmp/parisi_solve.json --out /tmp/parisi_phi.csv");
    REQUIRE(r.exit_code == 0);
    std::string csv = slurp("/tmp/parisi_phi.csv");
    CHECK(csv.rfind("# config_hash=", 0) == 0);
    CHECK(csv.find("s,x,phi,dphi,ddphi") != std::string::npos);
}

TEST_CASE("hypothesis refusal exits 2 and names the failed condition") {
    write_file("/tmp/parisi_noncvx.json",
               "{\"mixture\": {\"coeffs\": {\"3\": 1.0}}, \"h\": 0.4, \"mode\": \"positivity\", "
               "\"q_grid_n\": 11, \"k_max\": 0}");
    RunResult r = run_cli("gt scan --config /tmp/parisi_noncvx.json --mode positivity");
    CHECK(r.exit_code == 2);
    CHECK(r.stdout_text.find("\"refused\": \"convexity\"") != std::string::npos);
}

TEST_CASE("oracle free energy with guerra gap") {
    write_file("/tmp/parisi_oracle.json",
               "{\"mixture\": {\"coeffs\": {\"2\": 0.5}}, \"h\": 0.3, \"N\": 1, "
               "\"n_disorder\": 200, \"seed\": 4, "
               "\"measure\": {\"atoms\": [0.3], \"weights\": [1.0]}}");
    RunResult r = run_cli(
        "oracle free-energy --config /tmp/parisi_oracle.json --out /tmp/parisi_fe.json");
    REQUIRE(r.exit_code == 0);
    json rep = json::parse(slurp("/tmp/parisi_fe.json"));
    double mean = rep.at("mean").get<double>();
    double se = rep.at("std_err").get<double>();
    CHECK(std::abs(mean - std::log(2.0 * std::cosh(0.3))) <= 3.0 * se);
    CHECK(rep.contains("guerra_gap"));
}

TEST_CASE("gt bound on a coarse grid reproduces the decoupled closed value") {
    write_file("/tmp/parisi_gtb.json",
               "{\"mixture\": {\"coeffs\": {\"2\": 0.32}}, \"h\": 0.0, \"q\": 0.0, "
               "\"lambda\": 0.0, \"measure\": {\"atoms\": [0.0], \"weights\": [1.0]}, "
               "\"grid2d\": {\"dx\": 0.08}}");
    RunResult r = run_cli("gt bound --config /tmp/parisi_gtb.json --out /tmp/parisi_gtb_out.json");
    REQUIRE(r.exit_code == 0);
    json rep = json::parse(slurp("/tmp/parisi_gtb_out.json"));
    CHECK(std::abs(rep.at("Lambda").get<double>() - 2.0 * (std::log(2.0) + 0.16)) <= 1e-5);
}

TEST_CASE("oracle overlap and constrained runs") {
    write_file("/tmp/parisi_ov.json",
               "{\"mixture\": {\"coeffs\": {\"2\": 0.5}}, \"h\": 0.0, \"N\": 4, "
               "\"n_disorder\": 6, \"seed\": 2}");
    RunResult r = run_cli("oracle overlap --config /tmp/parisi_ov.json --out /tmp/parisi_ov.csv");
    REQUIRE(r.exit_code == 0);
    std::string csv = slurp("/tmp/parisi_ov.csv");
    CHECK(csv.find("q,probability,std_err") != std::string::npos);

    write_file("/tmp/parisi_cn.json",
               "{\"mixture\": {\"coeffs\": {\"2\": 0.5}}, \"h\": 0.1, \"q\": 0.5, \"N\": 4, "
               "\"n_disorder\": 6, \"seed\": 2}");
    RunResult rc =
        run_cli("oracle constrained --config /tmp/parisi_cn.json --out /tmp/parisi_cn.json.out");
    REQUIRE(rc.exit_code == 0);
    json rep = json::parse(slurp("/tmp/parisi_cn.json.out"));
    CHECK(rep.at("pair_count").get<long long>() == 4 * 16);  // C(4,1) * 2^4
}

TEST_CASE("csv writers pin the documented headers") {
    // Curve CSV: r,eu2,euxx2[,stderr].
    {
        parisi::MomentCurve curve;
        curve.r = {0.0, 1.0};
        curve.eu2 = {0.0, 0.5};
        curve.euxx2 = {1.0, 0.25};
        std::ostringstream os;
        parisi::write_curve_csv(os, curve, "");
        CHECK(os.str().rfind("r,eu2,euxx2\n", 0) == 0);

        curve.monte_carlo = true;
        curve.std_err = {0.0, 0.01};
        std::ostringstream os2;
        parisi::write_curve_csv(os2, curve, "");
        CHECK(os2.str().rfind("r,eu2,euxx2,stderr\n", 0) == 0);
    }
    // Histogram CSV: q,probability,std_err.
    {
        parisi::OverlapHistogram hist;
        hist.N = 1;
        hist.q = {-1.0, 1.0};
        hist.prob = {0.5, 0.5};
        hist.std_err = {0.0, 0.0};
        std::ostringstream os;
        parisi::write_histogram_csv(os, hist, "# x\n");
        CHECK(os.str().rfind("# x\nq,probability,std_err\n", 0) == 0);
    }
    // Bound CSV: q,lambda_star,Lambda,two_P,margin,psd_ok.
    {
        parisi::BoundCurve curve;
        curve.two_P = 2.0;
        curve.points = {{0.1, 0.0, 1.9, true}};
        std::ostringstream os;
        parisi::write_bound_csv(os, curve, "");
        CHECK(os.str().rfind("q,lambda_star,Lambda,two_P,margin,psd_ok\n", 0) == 0);
    }
}

TEST_CASE("mixture check reports the analytic gates") {
    write_file("/tmp/parisi_mix.json",
               "{\"mixture\": {\"coeffs\": {\"2\": 0.3, \"3\": 0.075}}, "
               "\"mixture0\": {\"coeffs\": {\"2\": 0.3, \"3\": 0.0375}}}");
    RunResult r =
        run_cli("mixture check --config /tmp/parisi_mix.json --out /tmp/parisi_mix_out.json");
    REQUIRE(r.exit_code == 0);
    json rep = json::parse(slurp("/tmp/parisi_mix_out.json"));
    CHECK(rep.at("convexity").at("convex").get<bool>());
    CHECK(rep.at("dominance").at("strict").get<bool>());
    CHECK(rep.at("ratio_reflected").at("monotone").get<bool>());
}
