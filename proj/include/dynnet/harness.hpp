#pragma once

#include <string>
#include <utility>
#include <vector>

#include "dynnet/simulator.hpp"

namespace dynnet {

// key=value configuration. Later entries overwrite earlier ones; unknown
// keys throw ConfigError so typos cannot silently fall back to defaults.
using KvList = std::vector<std::pair<std::string, std::string>>;

KvList parse_kv_file(const std::string& path);
void apply_kv(RunConfig* cfg, const std::string& key, const std::string& value);
RunConfig config_from_kv(const KvList& kv);

struct TrialSet {
    RunConfig base;
    std::vector<RunRecord> records;  // indexed by trial number
};

// Runs trials 0..trials-1 of the base config. jobs > 1 distributes trials
// across OpenMP threads; results are positionally identical to the serial
// path because every trial derives its own random streams.
TrialSet run_trials(const RunConfig& base, int trials, int jobs);
TrialSet run_trials_serial(const RunConfig& base, int trials);

// A trial counts as failed when it missed completion or hit a failure stop.
struct SummaryRow {
    RunConfig cfg;
    int trials = 0;
    int failures = 0;
    std::uint64_t min_rounds = 0;
    std::uint64_t median_rounds = 0;
    std::uint64_t p95_rounds = 0;
    std::uint64_t max_rounds = 0;
    double mean_bits = 0;
};

SummaryRow summarize(const TrialSet& ts);

// Per-trial completion round, falling back to rounds executed on failure.
std::uint64_t trial_rounds(const RunRecord& rec);

std::string csv_header();
std::string csv_row(const SummaryRow& row);
std::string jsonl_row(const RunConfig& cfg, std::uint64_t trial,
                      const RunRecord& rec);

// Least-squares line through (log2 x, log2 y). Throws InsufficientData on
// fewer than two distinct x values.
struct ScalingFit {
    double slope = 0;
    double intercept = 0;
};

ScalingFit fit_scaling(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace dynnet
