#include <chrono>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dynnet/acceptance.hpp"
#include "dynnet/errors.hpp"
#include "dynnet/harness.hpp"

namespace {

dynnet::RunConfig build_config(const std::string& config_path,
                               const std::vector<std::string>& sets,
                               std::uint64_t seed, bool seed_given) {
    dynnet::KvList kv;
    if (!config_path.empty()) kv = dynnet::parse_kv_file(config_path);
    for (const std::string& s : sets) {
        std::size_t eq = s.find('=');
        if (eq == std::string::npos)
            throw dynnet::ConfigError("--set needs key=value, got: " + s);
        kv.emplace_back(s.substr(0, eq), s.substr(eq + 1));
    }
    dynnet::RunConfig cfg = dynnet::config_from_kv(kv);
    if (seed_given) cfg.master_seed = seed;
    return cfg;
}

std::ostream& open_out(const std::string& path, std::ofstream& file) {
    if (path.empty()) return std::cout;
    file.open(path);
    if (!file) throw dynnet::ConfigError("cannot open output file: " + path);
    return file;
}

int cmd_run(const dynnet::RunConfig& cfg, int trials, int jobs,
            const std::string& out_path, const std::string& jsonl_path) {
    dynnet::TrialSet ts = dynnet::run_trials(cfg, trials, jobs);
    std::ofstream file;
    std::ostream& out = open_out(out_path, file);
    out << dynnet::csv_header() << "\n"
        << dynnet::csv_row(dynnet::summarize(ts)) << "\n";
    if (!jsonl_path.empty()) {
        std::ofstream jf(jsonl_path);
        if (!jf) throw dynnet::ConfigError("cannot open jsonl file: " + jsonl_path);
        for (std::size_t t = 0; t < ts.records.size(); ++t)
            jf << dynnet::jsonl_row(cfg, t, ts.records[t]) << "\n";
    }
    return 0;
}

int cmd_trace(dynnet::RunConfig cfg, std::uint64_t trial,
              const std::string& out_path) {
    cfg.record_trace = true;
    cfg.trial = trial;
    dynnet::RunRecord rec = dynnet::run_trial(cfg);
    std::ofstream file;
    std::ostream& out = open_out(out_path, file);
    out << "round,topology_hash,knowledge_min,knowledge_max\n";
    for (const dynnet::TraceRow& row : rec.trace) {
        int lo = row.knowledge.empty() ? 0 : row.knowledge[0], hi = lo;
        for (int kn : row.knowledge) {
            lo = kn < lo ? kn : lo;
            hi = kn > hi ? kn : hi;
        }
        out << row.round << "," << row.topology_hash << "," << lo << "," << hi
            << "\n";
    }
    out << "# failure=" << dynnet::to_string(rec.failure)
        << " rounds=" << rec.rounds_executed
        << " bits=" << rec.total_bits_sent << "\n";
    return 0;
}

int cmd_bench(int jobs, int trials) {
    dynnet::RunConfig cfg;
    cfg.protocol = dynnet::ProtocolKind::rlnc_broadcast;
    cfg.adversary.kind = dynnet::AdversaryKind::fresh_random;
    cfg.n = 96;
    cfg.k = 96;
    cfg.d = 16;
    cfg.b = 1 + (96 + 16) + 8;
    cfg.master_seed = 7;

    auto wall = [](auto&& fn) {
        auto t0 = std::chrono::steady_clock::now();
        fn();
        auto t1 = std::chrono::steady_clock::now();
        return std::chrono::duration<double>(t1 - t0).count();
    };
    dynnet::TrialSet serial, parallel;
    double ts = wall([&] { serial = dynnet::run_trials_serial(cfg, trials); });
    double tp = wall([&] { parallel = dynnet::run_trials(cfg, trials, jobs); });
    bool same = serial.records.size() == parallel.records.size();
    for (std::size_t i = 0; same && i < serial.records.size(); ++i) {
        same = serial.records[i].rounds_executed ==
                   parallel.records[i].rounds_executed &&
               serial.records[i].total_bits_sent ==
                   parallel.records[i].total_bits_sent;
    }
    std::cout << "bench rlnc_broadcast n=96 k=96 trials=" << trials << "\n"
              << "serial_seconds=" << ts << "\n"
              << "parallel_seconds=" << tp << " jobs=" << jobs << "\n"
              << "speedup=" << (tp > 0 ? ts / tp : 0) << "\n"
              << "identical_results=" << (same ? "yes" : "no") << "\n";
    return same ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"simulator of token dissemination on adversarial dynamic networks"};
    app.require_subcommand(1);

    std::string config_path, out_path, jsonl_path;
    std::vector<std::string> sets;
    std::uint64_t seed = 0, trial = 0;
    int trials = 1, jobs = 1;

    CLI::App* run = app.add_subcommand("run", "run trials, print a summary row");
    run->add_option("--config", config_path, "key=value config file");
    run->add_option("--set", sets, "inline config overrides, key=value");
    run->add_option("--trials", trials, "number of trials");
    CLI::Option* run_seed = run->add_option("--seed", seed, "master seed");
    run->add_option("--jobs", jobs, "worker threads for trials");
    run->add_option("--out", out_path, "summary CSV path (default stdout)");
    run->add_option("--jsonl", jsonl_path, "per-trial JSONL path");

    CLI::App* trace = app.add_subcommand("trace", "run one trial, dump per-round rows");
    trace->add_option("--config", config_path, "key=value config file");
    trace->add_option("--set", sets, "inline config overrides, key=value");
    CLI::Option* trace_seed = trace->add_option("--seed", seed, "master seed");
    trace->add_option("--trial", trial, "trial number");
    trace->add_option("--out", out_path, "trace CSV path (default stdout)");

    CLI::App* accept = app.add_subcommand("accept", "run the acceptance suite");
    CLI::Option* accept_seed = accept->add_option("--seed", seed, "master seed");
    accept->add_option("--jobs", jobs, "worker threads for trials");
    accept->add_option("--out", out_path, "also write the report here");

    CLI::App* bench = app.add_subcommand("bench", "compare serial and parallel trial throughput");
    bench->add_option("--jobs", jobs, "worker threads for trials");
    bench->add_option("--trials", trials, "number of trials")->default_val(16);

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed())
            return cmd_run(build_config(config_path, sets, seed, !run_seed->empty()),
                           trials, jobs, out_path, jsonl_path);
        if (trace->parsed())
            return cmd_trace(build_config(config_path, sets, seed, !trace_seed->empty()),
                             trial, out_path);
        if (accept->parsed()) {
            std::ofstream file;
            std::ostream& out = open_out(out_path, file);
            return dynnet::run_acceptance(accept_seed->empty() ? 0 : seed, jobs,
                                          out);
        }
        if (bench->parsed()) return cmd_bench(jobs, trials);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}
