#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "nnsr/bounds.hpp"
#include "nnsr/certificate.hpp"
#include "nnsr/config.hpp"
#include "nnsr/experiment.hpp"
#include "nnsr/solver.hpp"
#include "nnsr/transport.hpp"
#include "nnsr/window.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace nnsr;

namespace {

struct Common {
    std::string config;
    std::string out_dir = "out";
    long long seed = -1;
};

ExperimentConfig load(const Common& c) {
    ExperimentConfig cfg = load_config(c.config);
    if (c.seed >= 0) cfg.seed = static_cast<std::uint64_t>(c.seed);
    return cfg;
}

void write_file(const fs::path& path, const std::string& text) {
    fs::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
}

double default_epsilon(const ExperimentConfig& cfg, const DiscreteMeasure& x) {
    const double half = min_separation(x) / 2.0;
    return cfg.epsilons.empty() ? half : std::min(cfg.epsilons.front(), half);
}

double pair_eta(const ExperimentConfig& cfg, const DiscreteMeasure& x, const SamplingScheme& scheme) {
    if (cfg.sampling.mode == "pairs") return cfg.sampling.eta > 0.0 ? cfg.sampling.eta : cfg.sigma * cfg.sigma;
    const double e = check_conditions(x.locations(), scheme, cfg.sigma * cfg.sigma).smallest_pair_eta;
    return std::isfinite(e) && e > 0.0 ? e : cfg.sigma * cfg.sigma;
}

Measurement read_measurement(const std::string& path, const SamplingScheme& scheme, double delta) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open measurement " + path);
    std::string line;
    std::getline(in, line);
    std::vector<double> values;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string j, s, y;
        std::getline(ss, j, ',');
        std::getline(ss, s, ',');
        std::getline(ss, y, ',');
        values.push_back(std::stod(y));
    }
    if (values.size() != scheme.size()) throw std::runtime_error("measurement length does not match the samples");
    Measurement m;
    m.values = Eigen::Map<Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
    m.noise_level = delta;
    return m;
}

int cmd_simulate(const Common& c) {
    const ExperimentConfig cfg = load(c);
    const DiscreteMeasure x = config_measure(cfg);
    const SamplingScheme scheme = config_scheme(cfg, x);
    const double delta = cfg.deltas.front();
    const Measurement y = sample_measure(x, scheme, delta, cfg.seed);
    write_file(fs::path(c.out_dir) / "truth.csv", to_csv(x));
    write_file(fs::path(c.out_dir) / "measurement.csv", measurement_csv(y, scheme));
    const auto cond = check_conditions(x.locations(), scheme, pair_eta(cfg, x, scheme));
    json j = {{"k", x.size()},
              {"m", scheme.size()},
              {"delta", delta},
              {"conditions",
               {{"boundary_samples", cond.boundary_samples},
                {"sample_pairs", cond.sample_pairs},
                {"margins", cond.margins},
                {"width_and_separation", cond.width_and_separation},
                {"smallest_pair_eta", std::isfinite(cond.smallest_pair_eta) ? json(cond.smallest_pair_eta) : json()}}}};
    write_file(fs::path(c.out_dir) / "simulate.json", j.dump(2) + "\n");
    std::cout << "wrote " << c.out_dir << "/truth.csv and measurement.csv (m=" << scheme.size() << ")\n";
    return 0;
}

int cmd_solve(const Common& c, const std::string& measurement_path) {
    const ExperimentConfig cfg = load(c);
    const DiscreteMeasure x = config_measure(cfg);
    const SamplingScheme scheme = config_scheme(cfg, x);
    const double delta = cfg.deltas.front();
    const Measurement y = measurement_path.empty() ? sample_measure(x, scheme, delta, cfg.seed)
                                                   : read_measurement(measurement_path, scheme, delta);
    Solution sol = solve_nnls(y, scheme, cfg.grid_resolution, delta);
    sol = refine(sol, y, scheme, cfg.refine_levels);
    const DiscreteMeasure cells = sol.z.to_discrete();
    const DiscreteMeasure spikes = extract_spikes(sol.z, x.empty() ? 0.01 : min_separation(x) / 4.0);
    write_file(fs::path(c.out_dir) / "solution.csv", to_csv(cells));
    write_file(fs::path(c.out_dir) / "spikes.csv", to_csv(spikes));
    const bool nonneg = (sol.z.weights.array() >= 0.0).all();
    std::vector<Assertion> as{{"feasible", "residual <= delta'", delta - sol.report.residual + 1e-12,
                               sol.report.feasible},
                              {"nonnegative", "all weights >= 0", nonneg ? 0.0 : -1.0, nonneg}};
    json j = {{"residual", sol.report.residual},
              {"delta_prime", sol.report.delta_prime},
              {"feasible", sol.report.feasible},
              {"iterations", sol.report.iterations},
              {"grid_resolution", sol.report.grid_resolution},
              {"active_set_size", sol.report.active_set_size},
              {"d_gw_to_truth", generalized_wasserstein(cells, x).distance},
              {"assertions", assertions_json(as)}};
    write_file(fs::path(c.out_dir) / "solve_report.json", j.dump(2) + "\n");
    std::cout << "residual " << sol.report.residual << ", " << spikes.size() << " spikes\n";
    return all_passed(as) ? 0 : 1;
}

int cmd_certify(const Common& c) {
    const ExperimentConfig cfg = load(c);
    const DiscreteMeasure x = config_measure(cfg);
    const SamplingScheme scheme = config_scheme(cfg, x);
    SeparatorSpec sep;
    sep.f_bar = cfg.f_bar;
    sep.f1 = cfg.f1;
    sep.epsilon = default_epsilon(cfg, x);
    const F0Choice choice = choose_f0(x.locations(), scheme, sep.epsilon, sep.f_bar, sep.f1);
    sep.f0 = choice.f0;
    const DualCertificate cert = certificate_coefficients(build_minor_system(x.locations(), scheme, sep));
    const CertificateReport rep = verify_certificate(cert);
    std::vector<Assertion> as{{"certificate", "|q(t_i)| <= 1e-8 and q >= F - 1e-8 on the grid",
                               std::min(1e-8 - rep.max_interpolation_error, rep.min_margin + 1e-8), rep.pass}};
    write_file(fs::path(c.out_dir) / "certificate.json", certificate_json(cert) + "\n");
    write_file(fs::path(c.out_dir) / "certificate_curve.csv", certificate_curve_csv(cert, 2001));
    json j = {{"f0", choice.f0},
              {"f0_epsilon_rule", choice.epsilon_rule},
              {"f0_required", choice.required},
              {"f0_overridden", choice.overridden},
              {"norm_b", cert.norm()},
              {"min_margin", rep.min_margin},
              {"min_far_margin", rep.min_far_margin},
              {"max_interpolation_error", rep.max_interpolation_error},
              {"max_derivative_at_sources", rep.max_derivative_at_sources},
              {"boundary_error", rep.boundary_error}};
    if (!cfg.sign_pattern.empty()) {
        SeparatorSpec sp = sep;
        sp.sign_pattern = cfg.sign_pattern;
        const DualCertificate cp = certificate_coefficients(build_minor_system(x.locations(), scheme, sp));
        const CertificateReport rp = verify_certificate(cp);
        as.push_back({"sign_certificate", "|q_pi(t_i) - pi_i| <= 1e-8", 1e-8 - rp.max_interpolation_error, rp.pass});
        write_file(fs::path(c.out_dir) / "certificate_pi.json", certificate_json(cp) + "\n");
        write_file(fs::path(c.out_dir) / "certificate_pi_curve.csv", certificate_curve_csv(cp, 2001));
        j["norm_b_pi"] = cp.norm();
    }
    j["assertions"] = assertions_json(as);
    write_file(fs::path(c.out_dir) / "certificate_report.json", j.dump(2) + "\n");
    std::cout << "f0 " << choice.f0 << ", ||b|| " << cert.norm() << ", pass " << rep.pass << "\n";
    return all_passed(as) ? 0 : 1;
}

int cmd_bounds(const Common& c) {
    const ExperimentConfig cfg = load(c);
    const DiscreteMeasure x = config_measure(cfg);
    const SamplingScheme scheme = config_scheme(cfg, x);
    BoundInputs in;
    in.k = static_cast<int>(x.size());
    in.delta_sep = min_separation(x);
    in.sigma = cfg.sigma;
    in.epsilon = default_epsilon(cfg, x);
    in.eta = pair_eta(cfg, x, scheme);
    in.lambda = build_dominance_matrix(x.locations(), scheme).proximity;
    in.f_bar = cfg.f_bar;
    in.f1 = cfg.f1;
    in.lambda_threshold = cfg.lambda_threshold;
    in.f0 = choose_f0(x.locations(), scheme, in.epsilon, in.f_bar, in.f1).f0;
    const BoundReport r = compute_bounds(in, &x.locations(), &scheme);
    write_file(fs::path(c.out_dir) / "bounds.json", bound_report_json(r) + "\n");
    write_file(fs::path(c.out_dir) / "bounds.csv", bound_report_csv_header() + "\n" + bound_report_csv_row(r) + "\n");
    std::cout << "log10 F1 " << r.log10_F1 << ", eta_max " << r.eta_max.value << ", lambda0 " << r.lambda0 << "\n";
    return 0;
}

json sweep_extra(const SweepResult& s) {
    return {{"deltas", s.deltas}, {"median_d_gw", s.median_d_gw}, {"empirical_rate", s.empirical_rate}};
}

int cmd_sweep(const Common& c) {
    const ExperimentConfig cfg = load(c);
    const SweepResult s = run_sweep(cfg);
    json extra = sweep_extra(s);
    extra["config"] = config_to_json(cfg);
    emit_report(s.records, s.assertions, c.out_dir, "sweep", extra);
    for (const auto& a : s.assertions)
        std::cout << (a.passed ? "PASS " : "FAIL ") << a.name << " (margin " << a.margin << ")\n";
    return all_passed(s.assertions) ? 0 : 1;
}

int cmd_report(const Common& c) {
    const ExperimentConfig cfg = load(c);
    const ExactRecoveryReport er = run_exact_recovery(cfg);
    std::vector<Assertion> as = er.assertions;
    json sep = json::array();
    for (int k : cfg.separation_k) {
        const RandomSeparationReport r = run_random_separation(k, cfg.separation_trials, cfg.seed + k);
        sep.push_back({{"k", k}, {"mean", r.mean}, {"expected", r.expected}, {"relative_error", r.relative_error}});
        as.push_back({"separation_k" + std::to_string(k), "Monte Carlo mean of Delta within 2% of 1/(k+1)^2",
                      0.02 - r.relative_error, r.pass});
    }
    json extra = {{"exact_recovery",
                   {{"residual", er.residual},
                    {"max_location_error", er.max_location_error},
                    {"max_weight_error", er.max_weight_error},
                    {"feasible_runs", er.uniqueness.feasible_runs}}},
                  {"random_separation", sep}};
    write_file(fs::path(c.out_dir) / "recovered.csv", to_csv(er.recovered));
    emit_report({}, as, c.out_dir, "report", extra);
    for (const auto& a : as) std::cout << (a.passed ? "PASS " : "FAIL ") << a.name << " (margin " << a.margin << ")\n";
    return all_passed(as) ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Non-negative sparse recovery from Gaussian-window samples"};
    app.require_subcommand(1);
    Common common;
    std::string measurement;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", common.config, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
        sub->add_option("--seed", common.seed, "override the config seed");
        sub->add_option("--out-dir", common.out_dir, "output directory");
    };
    auto* simulate = app.add_subcommand("simulate", "sample the configured measure");
    auto* solve = app.add_subcommand("solve", "solve the feasibility program by NNLS");
    auto* certify = app.add_subcommand("certify", "build and verify the dual certificate");
    auto* bounds = app.add_subcommand("bounds", "evaluate the closed-form stability bounds");
    auto* sweep = app.add_subcommand("sweep", "noise sweep with stability assertions");
    auto* report = app.add_subcommand("report", "exact recovery and random-separation summary");
    for (auto* s : {simulate, solve, certify, bounds, sweep, report}) add_common(s);
    solve->add_option("--measurement", measurement, "measurement CSV (j,s_j,y_j); simulated when omitted");

    CLI11_PARSE(app, argc, argv);
    try {
        if (*simulate) return cmd_simulate(common);
        if (*solve) return cmd_solve(common, measurement);
        if (*certify) return cmd_certify(common);
        if (*bounds) return cmd_bounds(common);
        if (*sweep) return cmd_sweep(common);
        if (*report) return cmd_report(common);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}
