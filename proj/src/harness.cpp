#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "dynnet/errors.hpp"
#include "dynnet/harness.hpp"

namespace dynnet {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

}  // namespace

KvList parse_kv_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    KvList kv;
    std::string line;
    while (std::getline(in, line)) {
        std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        line = trim(line);
        if (line.empty()) continue;
        std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line is not key=value: " + line);
        kv.emplace_back(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    return kv;
}

void apply_kv(RunConfig* cfg, const std::string& key, const std::string& value) {
    try {
        if (key == "protocol") {
            cfg->protocol = protocol_from_string(value);
        } else if (key == "adversary") {
            cfg->adversary.kind = adversary_kind_from_string(value);
        } else if (key == "T") {
            cfg->adversary.T = std::stoull(value);
        } else if (key == "extra_edge_prob") {
            cfg->adversary.extra_edge_prob = std::stod(value);
        } else if (key == "schedule") {
            int n_out = 0;
            cfg->adversary.schedule = load_schedule(value, &n_out);
            cfg->adversary.kind = AdversaryKind::custom;
            if (cfg->n != 0 && cfg->n != n_out)
                throw ConfigError("schedule node count disagrees with n");
            cfg->n = n_out;
        } else if (key == "n") {
            cfg->n = std::stoi(value);
        } else if (key == "k") {
            cfg->k = std::stoi(value);
        } else if (key == "d") {
            cfg->d = std::stoi(value);
        } else if (key == "b") {
            cfg->b = std::stoi(value);
        } else if (key == "q") {
            cfg->q = static_cast<std::uint32_t>(std::stoul(value));
        } else if (key == "placement") {
            cfg->placement = placement_from_string(value);
        } else if (key == "seed") {
            cfg->master_seed = std::stoull(value);
        } else if (key == "trial") {
            cfg->trial = std::stoull(value);
        } else if (key == "round_cap") {
            cfg->round_cap = std::stoull(value);
        } else if (key == "trace") {
            cfg->record_trace = value == "1" || value == "true";
        } else if (key == "n_hat") {
            cfg->n_hat = std::stoi(value);
        } else if (key == "uid_bits") {
            cfg->uid_bits_override = std::stoi(value);
        } else if (key == "abort_known") {
            cfg->abort_if_known_exceeds = std::stoi(value);
        } else if (key == "uid_payload") {
            cfg->uid_payload_tokens = value == "1" || value == "true";
        } else if (key == "c_epoch") {
            cfg->consts.c_epoch = std::stod(value);
        } else if (key == "c_bcast") {
            cfg->consts.c_bcast = std::stod(value);
        } else if (key == "c_pipe") {
            cfg->consts.c_pipe = std::stod(value);
        } else if (key == "c_diam") {
            cfg->consts.c_diam = std::stoi(value);
        } else if (key == "mis_phases") {
            cfg->consts.mis_phase_mult = std::stoi(value);
        } else if (key == "patch_mode") {
            cfg->consts.patch_mode = std::stoi(value);
        } else {
            throw ConfigError("unknown config key: " + key);
        }
    } catch (const std::invalid_argument&) {
        throw ConfigError("bad value for " + key + ": " + value);
    } catch (const std::out_of_range&) {
        throw ConfigError("value out of range for " + key + ": " + value);
    }
}

RunConfig config_from_kv(const KvList& kv) {
    RunConfig cfg;
    for (const auto& [k, v] : kv) apply_kv(&cfg, k, v);
    return cfg;
}

TrialSet run_trials_serial(const RunConfig& base, int trials) {
    TrialSet ts;
    ts.base = base;
    ts.records.resize(static_cast<std::size_t>(trials));
    for (int t = 0; t < trials; ++t) {
        RunConfig c = base;
        c.trial = static_cast<std::uint64_t>(t);
        ts.records[static_cast<std::size_t>(t)] = run_trial(c);
    }
    return ts;
}

TrialSet run_trials(const RunConfig& base, int trials, int jobs) {
#if defined(_OPENMP)
    if (jobs > 1 && trials > 1) {
        TrialSet ts;
        ts.base = base;
        ts.records.resize(static_cast<std::size_t>(trials));
        std::vector<std::exception_ptr> errs(static_cast<std::size_t>(trials));
#pragma omp parallel for schedule(dynamic) num_threads(jobs)
        for (int t = 0; t < trials; ++t) {
            try {
                RunConfig c = base;
                c.trial = static_cast<std::uint64_t>(t);
                ts.records[static_cast<std::size_t>(t)] = run_trial(c);
            } catch (...) {
                errs[static_cast<std::size_t>(t)] = std::current_exception();
            }
        }
        for (const auto& e : errs)
            if (e) std::rethrow_exception(e);
        return ts;
    }
#else
    (void)jobs;
#endif
    return run_trials_serial(base, trials);
}

std::uint64_t trial_rounds(const RunRecord& rec) {
    return rec.completion_round ? *rec.completion_round : rec.rounds_executed;
}

SummaryRow summarize(const TrialSet& ts) {
    SummaryRow row;
    row.cfg = ts.base;
    row.trials = static_cast<int>(ts.records.size());
    if (ts.records.empty()) return row;
    std::vector<std::uint64_t> rounds;
    rounds.reserve(ts.records.size());
    double bits = 0;
    for (const RunRecord& r : ts.records) {
        if (r.failure != FailureReason::none || !r.completion_round)
            ++row.failures;
        rounds.push_back(trial_rounds(r));
        bits += static_cast<double>(r.total_bits_sent);
    }
    std::sort(rounds.begin(), rounds.end());
    std::size_t t = rounds.size();
    row.min_rounds = rounds.front();
    row.max_rounds = rounds.back();
    row.median_rounds = rounds[(t - 1) / 2];
    std::size_t p95 = (95 * t + 99) / 100;
    row.p95_rounds = rounds[p95 > 0 ? p95 - 1 : 0];
    row.mean_bits = bits / static_cast<double>(t);
    return row;
}

std::string csv_header() {
    return "protocol,adversary,n,k,d,b,q,T,trials,failures,min_rounds,"
           "median_rounds,p95_rounds,max_rounds,mean_bits,seed";
}

std::string csv_row(const SummaryRow& row) {
    char buf[512];
    std::snprintf(buf, sizeof buf,
                  "%s,%s,%d,%d,%d,%d,%u,%llu,%d,%d,%llu,%llu,%llu,%llu,%.1f,%llu",
                  to_string(row.cfg.protocol).c_str(),
                  to_string(row.cfg.adversary.kind).c_str(), row.cfg.n, row.cfg.k,
                  row.cfg.d, row.cfg.b, row.cfg.q,
                  static_cast<unsigned long long>(row.cfg.adversary.T), row.trials,
                  row.failures, static_cast<unsigned long long>(row.min_rounds),
                  static_cast<unsigned long long>(row.median_rounds),
                  static_cast<unsigned long long>(row.p95_rounds),
                  static_cast<unsigned long long>(row.max_rounds), row.mean_bits,
                  static_cast<unsigned long long>(row.cfg.master_seed));
    return buf;
}

std::string jsonl_row(const RunConfig& cfg, std::uint64_t trial,
                      const RunRecord& rec) {
    nlohmann::json j;
    j["protocol"] = to_string(cfg.protocol);
    j["adversary"] = to_string(cfg.adversary.kind);
    j["n"] = cfg.n;
    j["k"] = cfg.k;
    j["d"] = cfg.d;
    j["b"] = cfg.b;
    j["q"] = cfg.q;
    j["T"] = cfg.adversary.T;
    j["seed"] = cfg.master_seed;
    j["trial"] = trial;
    if (rec.completion_round) j["completion_round"] = *rec.completion_round;
    if (rec.termination_round) j["termination_round"] = *rec.termination_round;
    j["rounds_executed"] = rec.rounds_executed;
    j["total_bits_sent"] = rec.total_bits_sent;
    j["failure"] = to_string(rec.failure);
    j["stats"] = rec.stats;
    return j.dump();
}

ScalingFit fit_scaling(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2)
        throw InsufficientData("need at least two points for a scaling fit");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    std::size_t m = x.size();
    for (std::size_t i = 0; i < m; ++i) {
        if (x[i] <= 0 || y[i] <= 0)
            throw InsufficientData("scaling fit needs positive samples");
        double lx = std::log2(x[i]), ly = std::log2(y[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    double dm = static_cast<double>(m);
    double var = sxx - sx * sx / dm;
    if (var <= 1e-12)
        throw InsufficientData("scaling fit needs at least two distinct x");
    ScalingFit f;
    f.slope = (sxy - sx * sy / dm) / var;
    f.intercept = (sy - f.slope * sx) / dm;
    return f;
}

}  // namespace dynnet
