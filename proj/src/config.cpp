#include "nnsr/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

#include "nnsr/bounds.hpp"

namespace nnsr {

ExperimentConfig config_from_json(const nlohmann::json& j) {
    ExperimentConfig c;
    auto get = [&j](const char* key, auto& field) {
        if (j.contains(key)) j.at(key).get_to(field);
    };
    get("scenario", c.scenario);
    get("sources", c.sources);
    get("weights", c.weights);
    get("random_k", c.random_k);
    get("seed", c.seed);
    get("sigma", c.sigma);
    if (j.contains("sampling")) {
        const auto& s = j.at("sampling");
        if (s.contains("mode")) s.at("mode").get_to(c.sampling.mode);
        if (s.contains("samples")) s.at("samples").get_to(c.sampling.samples);
        if (s.contains("eta")) s.at("eta").get_to(c.sampling.eta);
        if (s.contains("lambda")) s.at("lambda").get_to(c.sampling.lambda);
    }
    get("deltas", c.deltas);
    get("epsilons", c.epsilons);
    get("epsilon_exponent", c.epsilon_exponent);
    get("trials", c.trials);
    get("grid_resolution", c.grid_resolution);
    get("refine_levels", c.refine_levels);
    get("uniqueness_trials", c.uniqueness_trials);
    get("f_bar", c.f_bar);
    get("f1", c.f1);
    get("sign_pattern", c.sign_pattern);
    get("grouped", c.grouped);
    get("lambda_threshold", c.lambda_threshold);
    get("decay_threshold", c.decay_threshold);
    get("separation_k", c.separation_k);
    get("separation_trials", c.separation_trials);
    return c;
}

nlohmann::json config_to_json(const ExperimentConfig& c) {
    return {{"scenario", c.scenario},
            {"sources", c.sources},
            {"weights", c.weights},
            {"random_k", c.random_k},
            {"seed", c.seed},
            {"sigma", c.sigma},
            {"sampling",
             {{"mode", c.sampling.mode},
              {"samples", c.sampling.samples},
              {"eta", c.sampling.eta},
              {"lambda", c.sampling.lambda}}},
            {"deltas", c.deltas},
            {"epsilons", c.epsilons},
            {"epsilon_exponent", c.epsilon_exponent},
            {"trials", c.trials},
            {"grid_resolution", c.grid_resolution},
            {"refine_levels", c.refine_levels},
            {"uniqueness_trials", c.uniqueness_trials},
            {"f_bar", c.f_bar},
            {"f1", c.f1},
            {"sign_pattern", c.sign_pattern},
            {"grouped", c.grouped},
            {"lambda_threshold", c.lambda_threshold},
            {"decay_threshold", c.decay_threshold},
            {"separation_k", c.separation_k},
            {"separation_trials", c.separation_trials}};
}

void validate(const ExperimentConfig& c) {
    auto fail = [](const std::string& what) { throw std::runtime_error("invalid config: " + what); };
    if (c.sources.empty() && c.random_k <= 0) fail("give sources or random_k");
    if (!c.weights.empty() && c.weights.size() != c.sources.size()) fail("weights and sources differ in length");
    if (!(c.sigma > 0.0)) fail("sigma must be positive");
    if (c.deltas.empty()) fail("deltas must be nonempty");
    for (double d : c.deltas)
        if (d < 0.0) fail("deltas must be non-negative");
    if (c.epsilons.empty() && c.epsilon_exponent <= 0.0) fail("give epsilons or epsilon_exponent");
    if (c.trials < 1) fail("trials must be at least 1");
    if (c.grid_resolution < 2) fail("grid_resolution must be at least 2");
    if (c.sampling.mode != "explicit" && c.sampling.mode != "pairs" && c.sampling.mode != "uniform")
        fail("sampling.mode must be explicit, pairs or uniform");
    if (c.sampling.mode == "explicit" && c.sampling.samples.empty()) fail("explicit sampling needs samples");
    if (!(c.f_bar > 0.0)) fail("f_bar must be positive");
    if (!c.sign_pattern.empty()) {
        for (int p : c.sign_pattern)
            if (p != 1 && p != -1) fail("sign_pattern entries must be +1 or -1");
    }
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error("cannot parse config " + path + ": " + e.what());
    }
    ExperimentConfig c = config_from_json(j);
    validate(c);
    return c;
}

DiscreteMeasure config_measure(const ExperimentConfig& c) {
    std::vector<double> t = c.sources, a = c.weights;
    if (t.empty()) {
        std::mt19937_64 rng(c.seed);
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        t.resize(static_cast<std::size_t>(c.random_k));
        for (double& v : t) v = unif(rng);
        std::sort(t.begin(), t.end());
    }
    if (a.empty()) a.assign(t.size(), 1.0);
    return DiscreteMeasure(std::move(t), std::move(a));
}

SamplingScheme config_scheme(const ExperimentConfig& c, const DiscreteMeasure& x) {
    const GaussianWindow window(c.sigma);
    if (c.sampling.mode == "explicit") return SamplingScheme(c.sampling.samples, window);
    if (c.sampling.mode == "pairs") {
        const double eta = c.sampling.eta > 0.0 ? c.sampling.eta : c.sigma * c.sigma;
        std::vector<double> s{0.0};
        for (double t : x.locations()) {
            s.push_back(t - eta / 2.0);
            s.push_back(t + eta / 2.0);
        }
        s.push_back(1.0);
        return SamplingScheme(std::move(s), window);
    }
    // grouped sources are resolved only down to 2 eps, so the spacing follows eps instead of Delta
    double sep = std::min(0.5, min_separation(x));
    if (c.grouped && !c.epsilons.empty()) sep = std::min(0.5, 2.0 * c.epsilons.front());
    double lambda = c.sampling.lambda;
    if (lambda <= 0.0) lambda = 0.9 * std::min(solve_lambda0(window, sep), c.lambda_threshold);
    return place_samples(sep, lambda, window);
}

}  // namespace nnsr
