#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "dynnet/errors.hpp"
#include "dynnet/harness.hpp"

using namespace dynnet;

TEST_CASE("every config key lands in its field") {
    RunConfig cfg;
    apply_kv(&cfg, "protocol", "rlnc_broadcast");
    apply_kv(&cfg, "adversary", "rotating_path");
    apply_kv(&cfg, "T", "8");
    apply_kv(&cfg, "n", "32");
    apply_kv(&cfg, "k", "16");
    apply_kv(&cfg, "d", "12");
    apply_kv(&cfg, "b", "64");
    apply_kv(&cfg, "q", "5");
    apply_kv(&cfg, "placement", "all_at_origin");
    apply_kv(&cfg, "seed", "99");
    apply_kv(&cfg, "trial", "3");
    apply_kv(&cfg, "round_cap", "777");
    apply_kv(&cfg, "trace", "1");
    apply_kv(&cfg, "n_hat", "64");
    apply_kv(&cfg, "uid_bits", "7");
    apply_kv(&cfg, "abort_known", "10");
    apply_kv(&cfg, "uid_payload", "true");
    apply_kv(&cfg, "c_epoch", "1.5");
    apply_kv(&cfg, "c_bcast", "1.25");
    apply_kv(&cfg, "c_pipe", "3.0");
    apply_kv(&cfg, "c_diam", "6");
    apply_kv(&cfg, "mis_phases", "8");
    apply_kv(&cfg, "patch_mode", "2");

    CHECK(cfg.protocol == ProtocolKind::rlnc_broadcast);
    CHECK(cfg.adversary.kind == AdversaryKind::rotating_path);
    CHECK(cfg.adversary.T == 8);
    CHECK(cfg.n == 32);
    CHECK(cfg.k == 16);
    CHECK(cfg.d == 12);
    CHECK(cfg.b == 64);
    CHECK(cfg.q == 5);
    CHECK(cfg.placement == Placement::all_at_origin);
    CHECK(cfg.master_seed == 99);
    CHECK(cfg.trial == 3);
    CHECK(cfg.round_cap == 777);
    CHECK(cfg.record_trace);
    CHECK(cfg.n_hat == 64);
    CHECK(cfg.uid_bits_override == 7);
    CHECK(cfg.abort_if_known_exceeds == 10);
    CHECK(cfg.uid_payload_tokens);
    CHECK(cfg.consts.c_epoch == doctest::Approx(1.5));
    CHECK(cfg.consts.c_bcast == doctest::Approx(1.25));
    CHECK(cfg.consts.c_pipe == doctest::Approx(3.0));
    CHECK(cfg.consts.c_diam == 6);
    CHECK(cfg.consts.mis_phase_mult == 8);
    CHECK(cfg.consts.patch_mode == 2);

    CHECK_THROWS_AS(apply_kv(&cfg, "bogus_key", "1"), ConfigError);
    CHECK_THROWS_AS(apply_kv(&cfg, "n", "not_a_number"), ConfigError);
    CHECK_THROWS_AS(apply_kv(&cfg, "protocol", "no_such_protocol"), ConfigError);
}

TEST_CASE("config files skip comments and apply last writer wins") {
    const char* path = "harness_kv_test.cfg";
    {
        std::ofstream out(path);
        out << "# dissemination smoke config\n"
            << "protocol = flood_forward\n"
            << "n = 8   # overridden below\n"
            << "\n"
            << "n = 16\n"
            << "b=64\n";
    }
    KvList kv = parse_kv_file(path);
    REQUIRE(kv.size() == 4);
    RunConfig cfg = config_from_kv(kv);
    CHECK(cfg.protocol == ProtocolKind::flood_forward);
    CHECK(cfg.n == 16);
    CHECK(cfg.b == 64);
    std::remove(path);

    CHECK_THROWS_AS(parse_kv_file("no_such_file.cfg"), ConfigError);
}

namespace {

RunConfig small_flood() {
    RunConfig cfg;
    cfg.protocol = ProtocolKind::flood_forward;
    cfg.adversary.kind = AdversaryKind::fresh_random;
    cfg.n = 10;
    cfg.k = 10;
    cfg.d = 8;
    cfg.b = 64;
    cfg.q = 2;
    cfg.master_seed = 17;
    return cfg;
}

}  // namespace

TEST_CASE("parallel trials reproduce the serial records positionally") {
    RunConfig cfg = small_flood();
    TrialSet serial = run_trials_serial(cfg, 6);
    TrialSet par = run_trials(cfg, 6, 4);
    REQUIRE(serial.records.size() == par.records.size());
    for (std::size_t i = 0; i < serial.records.size(); ++i) {
        const RunRecord& a = serial.records[i];
        const RunRecord& b = par.records[i];
        CHECK(a.completion_round == b.completion_round);
        CHECK(a.termination_round == b.termination_round);
        CHECK(a.rounds_executed == b.rounds_executed);
        CHECK(a.total_bits_sent == b.total_bits_sent);
        CHECK(a.failure == b.failure);
        CHECK(a.stats == b.stats);
    }
    CHECK(csv_row(summarize(serial)) == csv_row(summarize(par)));
}

TEST_CASE("summary counts round cap hits as failures") {
    RunConfig cfg = small_flood();
    cfg.round_cap = 1;  // far below any completion
    TrialSet ts = run_trials_serial(cfg, 4);
    SummaryRow row = summarize(ts);
    CHECK(row.trials == 4);
    CHECK(row.failures == 4);
    // Capped trials report the rounds they actually executed.
    CHECK(row.max_rounds == 1);

    cfg.round_cap = 0;
    ts = run_trials_serial(cfg, 5);
    row = summarize(ts);
    CHECK(row.failures == 0);
    CHECK(row.min_rounds >= 1);
    CHECK(row.min_rounds <= row.median_rounds);
    CHECK(row.median_rounds <= row.p95_rounds);
    CHECK(row.p95_rounds <= row.max_rounds);
    CHECK(row.mean_bits > 0);
}

TEST_CASE("csv layout is stable") {
    CHECK(csv_header() ==
          "protocol,adversary,n,k,d,b,q,T,trials,failures,min_rounds,"
          "median_rounds,p95_rounds,max_rounds,mean_bits,seed");
    RunConfig cfg = small_flood();
    TrialSet ts = run_trials_serial(cfg, 2);
    std::string row = csv_row(summarize(ts));
    CHECK(row.substr(0, 27) == "flood_forward,fresh_random,");
    // Same column count as the header.
    auto commas = [](const std::string& s) {
        return std::count(s.begin(), s.end(), ',');
    };
    CHECK(commas(row) == commas(csv_header()));
}

TEST_CASE("jsonl rows parse and carry the per-trial outcome") {
    RunConfig cfg = small_flood();
    RunRecord rec = run_trial(cfg);
    nlohmann::json j = nlohmann::json::parse(jsonl_row(cfg, 0, rec));
    CHECK(j["protocol"] == "flood_forward");
    CHECK(j["adversary"] == "fresh_random");
    CHECK(j["n"] == 10);
    CHECK(j["trial"] == 0);
    CHECK(j["failure"] == "none");
    REQUIRE(j.contains("completion_round"));
    CHECK(j["completion_round"].get<std::uint64_t>() == *rec.completion_round);
    CHECK(j["stats"]["knowledge_min"] == 10.0);

    cfg.round_cap = 1;
    RunRecord capped = run_trial(cfg);
    nlohmann::json jc = nlohmann::json::parse(jsonl_row(cfg, 1, capped));
    CHECK(jc["failure"] == "round_cap");
    CHECK(!jc.contains("completion_round"));
    CHECK(trial_rounds(capped) == capped.rounds_executed);
}

TEST_CASE("scaling fit recovers a planted power law") {
    std::vector<double> x = {16, 32, 64, 128};
    std::vector<double> y;
    for (double v : x) y.push_back(1000.0 * std::pow(v, -1.5));
    ScalingFit f = fit_scaling(x, y);
    CHECK(f.slope == doctest::Approx(-1.5).epsilon(1e-9));
    CHECK(f.intercept == doctest::Approx(std::log2(1000.0)).epsilon(1e-9));

    CHECK_THROWS_AS(fit_scaling({4.0}, {2.0}), InsufficientData);
    CHECK_THROWS_AS(fit_scaling({4.0, 4.0}, {2.0, 3.0}), InsufficientData);
    CHECK_THROWS_AS(fit_scaling({4.0, 8.0}, {0.0, 3.0}), InsufficientData);
}
