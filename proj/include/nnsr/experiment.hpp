#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "nnsr/config.hpp"
#include "nnsr/measure.hpp"
#include "nnsr/solver.hpp"

namespace nnsr {

struct Assertion {
    std::string name;
    std::string statement;
    double margin = 0.0;  // >= 0 when the assertion holds
    bool passed = false;
};

bool all_passed(const std::vector<Assertion>& assertions);

struct ExactRecoveryReport {
    DiscreteMeasure recovered;
    double residual = 0.0;
    double max_location_error = 0.0;
    double max_weight_error = 0.0;
    bool count_match = false;
    UniquenessReport uniqueness;
    std::vector<Assertion> assertions;
    bool pass = false;
};

ExactRecoveryReport run_exact_recovery(const ExperimentConfig& cfg);

struct SweepRecord {
    int trial = 0;
    double delta = 0.0;
    double epsilon = 0.0;           // requested epsilon
    double epsilon_used = 0.0;      // min(epsilon, Delta/2)
    double residual = 0.0;
    bool feasible = false;
    double d_gw = 0.0;
    double log10_gw_bound = 0.0;    // log10(F1 delta + ||x|| eps)
    bool gw_holds = false;
    double x_hat_tv = 0.0;
    double tail_mass = 0.0;
    double tail_bound = 0.0;        // 2 ||b|| delta / f_bar
    bool tail_holds = false;
    std::vector<double> local_errors;
    double local_bound = 0.0;       // (2 (1 + ||b||/f_bar) delta + c L eps ||x_hat||) * Varah
    bool local_holds = false;
    double norm_b = 0.0;
};

struct SweepResult {
    std::vector<SweepRecord> records;
    std::vector<double> deltas;          // sorted descending
    std::vector<double> median_d_gw;     // per delta
    double empirical_rate = 0.0;         // slope of log median d_GW against log delta, delta > 0
    std::vector<Assertion> assertions;
};

// Wasserstein stability: bound satisfaction per record, median trend and decay.
SweepResult run_stability_sweep(const ExperimentConfig& cfg);
// Local averages and tail mass against the measured-certificate bounds.
SweepResult run_average_stability(const ExperimentConfig& cfg);
// Both assertion sets from a single pass over the noise draws.
SweepResult run_sweep(const ExperimentConfig& cfg);

struct RandomSeparationReport {
    int k = 0;
    int trials = 0;
    double mean = 0.0;
    double expected = 0.0;
    double relative_error = 0.0;
    double standard_error = 0.0;
    bool pass = false;
};

// Monte Carlo mean of Delta(T) for k uniform sources against 1/(k+1)^2.
RandomSeparationReport run_random_separation(int k, int trials, std::uint64_t seed);

std::string sweep_csv_header();
std::string sweep_csv(const std::vector<SweepRecord>& records);
nlohmann::json assertions_json(const std::vector<Assertion>& assertions);

// Writes <stem>.csv and <stem>_summary.json into out_dir.
void emit_report(const std::vector<SweepRecord>& records, const std::vector<Assertion>& assertions,
                 const std::string& out_dir, const std::string& stem, const nlohmann::json& extra = {});

}  // namespace nnsr
