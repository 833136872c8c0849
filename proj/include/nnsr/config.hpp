#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "nnsr/measure.hpp"
#include "nnsr/window.hpp"

namespace nnsr {

struct SamplingConfig {
    // "explicit": use `samples`; "pairs": {0, t_i -+ eta/2, 1}; "uniform": spacing 2*lambda*Delta
    std::string mode = "explicit";
    std::vector<double> samples;
    double eta = 0.0;     // pairs mode; 0 means sigma^2
    double lambda = 0.0;  // uniform mode; 0 means 0.9 * min(lambda0, lambda_threshold)
};

struct ExperimentConfig {
    std::string scenario = "default";
    std::vector<double> sources;
    std::vector<double> weights;  // empty means unit weights
    int random_k = 0;             // draw this many uniform sources when `sources` is empty
    std::uint64_t seed = 1;
    double sigma = 0.06;
    SamplingConfig sampling;

    std::vector<double> deltas{0.0};
    std::vector<double> epsilons;     // fixed epsilons; may be empty when epsilon_exponent > 0
    double epsilon_exponent = 0.0;    // if > 0, also use epsilon = delta^exponent
    int trials = 1;
    std::size_t grid_resolution = 2000;
    int refine_levels = 2;
    int uniqueness_trials = 20;

    double f_bar = 0.5;
    double f1 = 1.0;
    std::vector<int> sign_pattern;
    bool grouped = false;
    double lambda_threshold = 0.4;
    double decay_threshold = 1e-2;

    std::vector<int> separation_k{1, 3, 5};
    int separation_trials = 100000;
};

ExperimentConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const ExperimentConfig& c);
// Throws std::runtime_error on unreadable files or invalid values.
ExperimentConfig load_config(const std::string& path);
void validate(const ExperimentConfig& c);

DiscreteMeasure config_measure(const ExperimentConfig& c);
SamplingScheme config_scheme(const ExperimentConfig& c, const DiscreteMeasure& x);

}  // namespace nnsr
