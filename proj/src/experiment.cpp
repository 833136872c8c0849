#include "nnsr/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <random>
#include <sstream>
#include <stdexcept>

#include "nnsr/bounds.hpp"
#include "nnsr/certificate.hpp"
#include "nnsr/transport.hpp"

namespace nnsr {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double median(std::vector<double> v) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double log10_sum(double la, double lb) {
    const double hi = std::max(la, lb), lo = std::min(la, lb);
    if (hi == -kInf) return -kInf;
    return hi + std::log10(1.0 + std::pow(10.0, lo - hi));
}

std::uint64_t trial_seed(std::uint64_t base, std::size_t delta_index, int trial) {
    return base * 1000003ULL + delta_index * 10007ULL + static_cast<std::uint64_t>(trial);
}

Assertion make_assertion(std::string name, std::string statement, double margin) {
    return {std::move(name), std::move(statement), margin, margin >= 0.0};
}

// Everything that depends on epsilon but not on the noise draw.
struct EpsilonContext {
    double epsilon_used = 0.0;
    double log10_F1 = 0.0;
    double norm_b = 0.0;
    double varah = kInf;
    double lipschitz_factor = 0.0;  // L, times (2k - 1) in grouped mode
    bool certificate_ok = false;
    std::string error;
};

EpsilonContext epsilon_context(const ExperimentConfig& cfg, const DiscreteMeasure& x, const SamplingScheme& scheme,
                               double epsilon, double eta) {
    EpsilonContext ctx;
    // Grouped mode certifies the group representatives; clusters closer than 2 eps are one source.
    std::vector<double> centers = x.locations();
    if (cfg.grouped) {
        centers.clear();
        for (const auto& g : group_partition(x, epsilon).groups) centers.push_back(g.representative);
    }
    const double sep = min_separation(centers);
    ctx.epsilon_used = std::min(epsilon, sep / 2.0);
    const double L = 2.0 / (cfg.sigma * cfg.sigma);
    try {
        SeparatorSpec spec;
        spec.f_bar = cfg.f_bar;
        spec.f1 = cfg.f1;
        spec.epsilon = ctx.epsilon_used;
        const auto choice = choose_f0(centers, scheme, spec.epsilon, spec.f_bar, spec.f1);
        spec.f0 = choice.f0;
        const auto cert = certificate_coefficients(build_minor_system(centers, scheme, spec));
        ctx.norm_b = cert.norm();
        BoundInputs in;
        in.k = static_cast<int>(centers.size());
        in.delta_sep = sep;
        in.sigma = cfg.sigma;
        in.epsilon = ctx.epsilon_used;
        in.eta = eta;
        in.f0 = spec.f0;
        in.f1 = spec.f1;
        in.f_bar = spec.f_bar;
        ctx.log10_F1 = log10_F1(in);
        ctx.certificate_ok = true;
    } catch (const std::exception& e) {
        ctx.error = e.what();
        ctx.log10_F1 = kInf;
    }
    if (cfg.grouped) {
        const auto groups = group_partition(x, ctx.epsilon_used);
        ctx.varah = build_dominance_matrix(x.locations(), scheme, &groups).varah_bound;
        ctx.lipschitz_factor = (2.0 * static_cast<double>(x.size()) - 1.0) * L;
    } else {
        ctx.varah = build_dominance_matrix(x.locations(), scheme).varah_bound;
        ctx.lipschitz_factor = L;
    }
    return ctx;
}

SweepResult compute_sweep(const ExperimentConfig& cfg) {
    validate(cfg);
    const DiscreteMeasure x = config_measure(cfg);
    const SamplingScheme scheme = config_scheme(cfg, x);
    const double x_tv = tv_norm(x);
    double eta = cfg.sampling.mode == "pairs" && cfg.sampling.eta > 0.0 ? cfg.sampling.eta : cfg.sigma * cfg.sigma;
    if (cfg.sampling.mode != "pairs") {
        const double e = check_conditions(x.locations(), scheme, cfg.sigma * cfg.sigma).smallest_pair_eta;
        if (std::isfinite(e) && e > 0.0) eta = e;
    }

    SweepResult res;
    res.deltas = cfg.deltas;
    std::sort(res.deltas.begin(), res.deltas.end(), std::greater<>());
    std::map<double, EpsilonContext> contexts;

    for (std::size_t di = 0; di < res.deltas.size(); ++di) {
        const double delta = res.deltas[di];
        std::vector<double> eps_list = cfg.epsilons;
        if (cfg.epsilon_exponent > 0.0 && delta > 0.0) eps_list.push_back(std::pow(delta, cfg.epsilon_exponent));
        std::vector<double> d_values;
        for (int trial = 0; trial < cfg.trials; ++trial) {
            const Measurement y = sample_measure(x, scheme, delta, trial_seed(cfg.seed, di, trial));
            Solution sol = solve_nnls(y, scheme, cfg.grid_resolution, delta);
            sol = refine(sol, y, scheme, cfg.refine_levels);
            const DiscreteMeasure x_hat = sol.z.to_discrete();
            const double d_gw = generalized_wasserstein(x_hat, x).distance;
            d_values.push_back(d_gw);
            for (double eps : eps_list) {
                auto it = contexts.find(eps);
                if (it == contexts.end()) it = contexts.emplace(eps, epsilon_context(cfg, x, scheme, eps, eta)).first;
                const EpsilonContext& ctx = it->second;
                SweepRecord r;
                r.trial = trial;
                r.delta = delta;
                r.epsilon = eps;
                r.epsilon_used = ctx.epsilon_used;
                r.residual = sol.report.residual;
                r.feasible = sol.report.residual <= delta + 1e-12;
                r.d_gw = d_gw;
                const double l_eps = std::log10(x_tv * ctx.epsilon_used);
                r.log10_gw_bound = delta > 0.0 ? log10_sum(ctx.log10_F1 + std::log10(delta), l_eps) : l_eps;
                r.gw_holds = ctx.certificate_ok && (d_gw == 0.0 || std::log10(d_gw) <= r.log10_gw_bound);
                r.x_hat_tv = tv_norm(x_hat);
                const auto dec = error_decomposition(x_hat, x, ctx.epsilon_used, cfg.grouped);
                r.tail_mass = dec.tail_mass;
                r.local_errors = dec.local_errors;
                r.norm_b = ctx.norm_b;
                r.tail_bound = 2.0 * ctx.norm_b * delta / cfg.f_bar;
                r.tail_holds = ctx.certificate_ok && r.tail_mass <= r.tail_bound + 1e-12;
                r.local_bound = (2.0 * (1.0 + ctx.norm_b / cfg.f_bar) * delta +
                                 ctx.lipschitz_factor * ctx.epsilon_used * r.x_hat_tv) *
                                ctx.varah;
                const double worst = dec.local_errors.empty()
                                         ? 0.0
                                         : *std::max_element(dec.local_errors.begin(), dec.local_errors.end());
                r.local_holds = ctx.certificate_ok && std::isfinite(r.local_bound) && worst <= r.local_bound;
                res.records.push_back(std::move(r));
            }
        }
        res.median_d_gw.push_back(median(d_values));
    }

    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < res.deltas.size(); ++i) {
        if (res.deltas[i] > 0.0 && res.median_d_gw[i] > 0.0) {
            lx.push_back(std::log10(res.deltas[i]));
            ly.push_back(std::log10(res.median_d_gw[i]));
        }
    }
    if (lx.size() >= 2) {
        double mx = 0.0, my = 0.0;
        for (std::size_t i = 0; i < lx.size(); ++i) {
            mx += lx[i];
            my += ly[i];
        }
        mx /= static_cast<double>(lx.size());
        my /= static_cast<double>(lx.size());
        double sxy = 0.0, sxx = 0.0;
        for (std::size_t i = 0; i < lx.size(); ++i) {
            sxy += (lx[i] - mx) * (ly[i] - my);
            sxx += (lx[i] - mx) * (lx[i] - mx);
        }
        res.empirical_rate = sxy / sxx;
    }
    return res;
}

double min_over(const std::vector<SweepRecord>& records, double (*f)(const SweepRecord&)) {
    double m = kInf;
    for (const auto& r : records) m = std::min(m, f(r));
    return records.empty() ? 0.0 : m;
}

}  // namespace

bool all_passed(const std::vector<Assertion>& assertions) {
    return std::all_of(assertions.begin(), assertions.end(), [](const Assertion& a) { return a.passed; });
}

ExactRecoveryReport run_exact_recovery(const ExperimentConfig& cfg) {
    validate(cfg);
    const DiscreteMeasure x = config_measure(cfg);
    const SamplingScheme scheme = config_scheme(cfg, x);
    ExactRecoveryReport rep;
    const Measurement y =
        sample_measure(x, scheme, Eigen::VectorXd::Zero(static_cast<Eigen::Index>(scheme.size())), 0.0);
    Solution sol = solve_nnls(y, scheme, cfg.grid_resolution, 0.0);
    sol = refine(sol, y, scheme, cfg.refine_levels);
    rep.residual = sol.report.residual;
    rep.recovered = extract_spikes(sol.z, min_separation(x) / 4.0);
    rep.count_match = rep.recovered.size() == x.size();
    if (rep.count_match) {
        for (std::size_t i = 0; i < x.size(); ++i) {
            rep.max_location_error =
                std::max(rep.max_location_error, std::abs(rep.recovered.locations()[i] - x.locations()[i]));
            rep.max_weight_error = std::max(
                rep.max_weight_error, std::abs(rep.recovered.weights()[i] - x.weights()[i]) / x.weights()[i]);
        }
    } else {
        rep.max_location_error = rep.max_weight_error = kInf;
    }
    rep.uniqueness = verify_uniqueness(x, scheme, cfg.uniqueness_trials, cfg.seed, cfg.grid_resolution,
                                       cfg.refine_levels);
    rep.assertions.push_back(
        make_assertion("spike_count", "recovered spike count equals k", rep.count_match ? 0.0 : -1.0));
    rep.assertions.push_back(make_assertion("location_error", "max location error <= 1e-4",
                                            1e-4 - rep.max_location_error));
    rep.assertions.push_back(make_assertion("weight_error", "max relative weight error <= 1e-6",
                                            1e-6 - rep.max_weight_error));
    rep.assertions.push_back(make_assertion("uniqueness", "every feasible multi-start solution clusters to x",
                                            rep.uniqueness.unique ? 0.0 : -1.0));
    rep.pass = all_passed(rep.assertions);
    return rep;
}

namespace {

void add_stability_assertions(SweepResult& res, const ExperimentConfig& cfg) {
    res.assertions.push_back(make_assertion(
        "feasible", "residual <= delta for every record",
        min_over(res.records, [](const SweepRecord& r) { return r.feasible ? 0.0 : -1.0; })));
    res.assertions.push_back(make_assertion(
        "gw_bound", "d_GW <= F1 * delta + ||x||_TV * eps for every record (log10 margin)",
        min_over(res.records, [](const SweepRecord& r) {
            if (!r.gw_holds) return -1.0;
            return r.d_gw > 0.0 ? r.log10_gw_bound - std::log10(r.d_gw) : 0.0;
        })));
    double trend = kInf;
    for (std::size_t i = 1; i < res.deltas.size(); ++i)
        trend = std::min(trend, 2.0 * res.median_d_gw[i - 1] - res.median_d_gw[i]);
    res.assertions.push_back(make_assertion("median_trend",
                                            "median d_GW at each smaller delta <= 2x the median at the previous delta",
                                            res.deltas.size() > 1 ? trend : 0.0));
    if (cfg.epsilon_exponent > 0.0 && !res.deltas.empty()) {
        res.assertions.push_back(make_assertion(
            "decay", "median d_GW at the smallest delta < decay_threshold",
            cfg.decay_threshold - res.median_d_gw.back()));
    }
}

void add_average_assertions(SweepResult& res) {
    res.assertions.push_back(make_assertion(
        "tail_mass", "x_hat mass off T_eps <= 2 ||b||_2 delta / f_bar for every record",
        min_over(res.records, [](const SweepRecord& r) {
            return r.tail_holds ? r.tail_bound - r.tail_mass : -1.0;
        })));
    res.assertions.push_back(make_assertion(
        "local_error", "max_i |x_hat(T_i,eps) - a_i| <= (2(1+||b||/f_bar) delta + L eps ||x_hat||) * Varah",
        min_over(res.records, [](const SweepRecord& r) {
            if (!r.local_holds) return -1.0;
            const double worst = r.local_errors.empty()
                                     ? 0.0
                                     : *std::max_element(r.local_errors.begin(), r.local_errors.end());
            return r.local_bound - worst;
        })));
}

}  // namespace

SweepResult run_stability_sweep(const ExperimentConfig& cfg) {
    SweepResult res = compute_sweep(cfg);
    add_stability_assertions(res, cfg);
    return res;
}

SweepResult run_average_stability(const ExperimentConfig& cfg) {
    SweepResult res = compute_sweep(cfg);
    add_average_assertions(res);
    return res;
}

SweepResult run_sweep(const ExperimentConfig& cfg) {
    SweepResult res = compute_sweep(cfg);
    add_stability_assertions(res, cfg);
    add_average_assertions(res);
    return res;
}

RandomSeparationReport run_random_separation(int k, int trials, std::uint64_t seed) {
    if (k < 1) throw std::invalid_argument("k must be at least 1");
    if (trials < 1000) throw std::invalid_argument("trials must be at least 1000");
    RandomSeparationReport rep;
    rep.k = k;
    rep.trials = trials;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::vector<double> t(static_cast<std::size_t>(k));
    double sum = 0.0, sum2 = 0.0;
    for (int n = 0; n < trials; ++n) {
        for (double& v : t) v = unif(rng);
        std::sort(t.begin(), t.end());
        const double d = min_separation(t);
        sum += d;
        sum2 += d * d;
    }
    rep.mean = sum / trials;
    rep.expected = 1.0 / ((k + 1.0) * (k + 1.0));
    rep.relative_error = std::abs(rep.mean - rep.expected) / rep.expected;
    rep.standard_error = std::sqrt(std::max(0.0, sum2 / trials - rep.mean * rep.mean) / trials);
    rep.pass = rep.relative_error <= 0.02;
    return rep;
}

std::string sweep_csv_header() {
    return "trial,delta,epsilon,epsilon_used,residual,feasible,d_gw,log10_gw_bound,gw_holds,x_hat_tv,tail_mass,"
           "tail_bound,tail_holds,max_local_error,local_bound,local_holds,norm_b,local_errors";
}

std::string sweep_csv(const std::vector<SweepRecord>& records) {
    std::ostringstream os;
    os.precision(17);
    os << sweep_csv_header() << '\n';
    for (const auto& r : records) {
        const double worst =
            r.local_errors.empty() ? 0.0 : *std::max_element(r.local_errors.begin(), r.local_errors.end());
        os << r.trial << ',' << r.delta << ',' << r.epsilon << ',' << r.epsilon_used << ',' << r.residual << ','
           << r.feasible << ',' << r.d_gw << ',' << r.log10_gw_bound << ',' << r.gw_holds << ',' << r.x_hat_tv
           << ',' << r.tail_mass << ',' << r.tail_bound << ',' << r.tail_holds << ',' << worst << ','
           << r.local_bound << ',' << r.local_holds << ',' << r.norm_b << ',';
        for (std::size_t i = 0; i < r.local_errors.size(); ++i) os << (i ? ";" : "") << r.local_errors[i];
        os << '\n';
    }
    return os.str();
}

nlohmann::json assertions_json(const std::vector<Assertion>& assertions) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& a : assertions) {
        arr.push_back({{"name", a.name},
                       {"statement", a.statement},
                       {"margin", std::isfinite(a.margin) ? nlohmann::json(a.margin) : nlohmann::json(nullptr)},
                       {"passed", a.passed}});
    }
    return arr;
}

void emit_report(const std::vector<SweepRecord>& records, const std::vector<Assertion>& assertions,
                 const std::string& out_dir, const std::string& stem, const nlohmann::json& extra) {
    std::filesystem::create_directories(out_dir);
    const auto base = std::filesystem::path(out_dir) / stem;
    {
        std::ofstream csv(base.string() + ".csv");
        if (!csv) throw std::runtime_error("cannot write " + base.string() + ".csv");
        csv << sweep_csv(records);
    }
    nlohmann::json summary = extra.is_object() ? extra : nlohmann::json::object();
    summary["assertions"] = assertions_json(assertions);
    summary["passed"] = all_passed(assertions);
    summary["records"] = records.size();
    std::ofstream js(base.string() + "_summary.json");
    if (!js) throw std::runtime_error("cannot write " + base.string() + "_summary.json");
    js << summary.dump(2) << '\n';
}

}  // namespace nnsr
