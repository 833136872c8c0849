#include "nnsr/window.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace nnsr {

GaussianWindow::GaussianWindow(double sigma) : sigma_(sigma) {
    if (!(sigma > 0.0) || !std::isfinite(sigma)) throw std::invalid_argument("sigma must be positive");
}

double GaussianWindow::operator()(double t, int order) const {
    const double s2 = sigma_ * sigma_;
    const double g = std::exp(-t * t / s2);
    switch (order) {
        case 0: return g;
        case 1: return -(2.0 * t / s2) * g;
        case 2: return (-2.0 / s2 + 4.0 * t * t / (s2 * s2)) * g;
        case 3: return (12.0 * t / (s2 * s2) - 8.0 * t * t * t / (s2 * s2 * s2)) * g;
        default: throw std::invalid_argument("derivative order must be 0..3");
    }
}

double g_eval(const GaussianWindow& window, double t, int order) { return window(t, order); }

SamplingScheme::SamplingScheme(std::vector<double> samples, GaussianWindow window)
    : samples_(std::move(samples)), window_(window) {
    if (samples_.empty()) throw std::invalid_argument("sampling scheme needs at least one sample");
    for (std::size_t j = 0; j < samples_.size(); ++j) {
        if (!(samples_[j] >= 0.0 && samples_[j] <= 1.0))
            throw std::invalid_argument("sample outside [0,1]");
        if (j > 0 && !(samples_[j] > samples_[j - 1]))
            throw std::invalid_argument("samples must be strictly increasing");
    }
}

Eigen::VectorXd ball_noise(std::size_t m, double delta, std::mt19937_64& rng) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(m));
    if (m == 0 || delta <= 0.0) return Eigen::VectorXd::Zero(static_cast<Eigen::Index>(m));
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    double norm = 0.0;
    do {
        for (auto& x : v) x = normal(rng);
        norm = v.norm();
    } while (norm == 0.0);
    const double radius = delta * std::pow(unif(rng), 1.0 / static_cast<double>(m));
    v *= radius / norm;
    // guard the last ulp so that ||eta|| <= delta holds exactly
    const double n2 = v.norm();
    if (n2 > delta) v *= delta / n2 * (1.0 - 4.0 * std::numeric_limits<double>::epsilon());
    return v;
}

Eigen::MatrixXd phi_matrix(const SamplingScheme& scheme, const std::vector<double>& points) {
    const auto& s = scheme.samples();
    Eigen::MatrixXd out(static_cast<Eigen::Index>(s.size()), static_cast<Eigen::Index>(points.size()));
    for (std::size_t p = 0; p < points.size(); ++p)
        for (std::size_t j = 0; j < s.size(); ++j)
            out(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(p)) = scheme.window()(points[p] - s[j]);
    return out;
}

Measurement sample_measure(const DiscreteMeasure& mu, const SamplingScheme& scheme,
                           const Eigen::VectorXd& noise, double delta) {
    const auto m = static_cast<Eigen::Index>(scheme.size());
    if (noise.size() != m) throw std::invalid_argument("noise length does not match sample count");
    Measurement y;
    y.noise_level = delta;
    y.values = Eigen::VectorXd::Zero(m);
    if (!mu.empty()) {
        Eigen::Map<const Eigen::VectorXd> a(mu.weights().data(), static_cast<Eigen::Index>(mu.size()));
        y.values = phi_matrix(scheme, mu.locations()) * a;
    }
    y.values += noise;
    return y;
}

Measurement sample_measure(const DiscreteMeasure& mu, const SamplingScheme& scheme, double delta,
                           std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    return sample_measure(mu, scheme, ball_noise(scheme.size(), delta, rng), delta);
}

namespace {

bool same_gap(double gap, double eta) { return std::abs(gap - eta) <= 1e-12 + 1e-9 * eta; }

bool pair_property(const std::vector<double>& t, const std::vector<double>& s, double eta) {
    for (double ti : t) {
        bool found = false;
        for (std::size_t a = 0; a < s.size() && !found; ++a) {
            if (std::abs(s[a] - ti) > eta * (1.0 + 1e-12)) continue;
            for (std::size_t b = a + 1; b < s.size(); ++b) {
                if (s[b] - s[a] > eta * (1.0 + 1e-9) + 1e-12) break;
                if (same_gap(s[b] - s[a], eta)) {
                    found = true;
                    break;
                }
            }
        }
        if (!found) return false;
    }
    return true;
}

}  // namespace

ConditionsReport check_conditions(const std::vector<double>& sources, const SamplingScheme& scheme,
                                  double eta) {
    if (!(eta > 0.0)) throw std::invalid_argument("eta must be positive");
    const auto& s = scheme.samples();
    const double sigma = scheme.sigma();
    ConditionsReport r;
    r.eta = eta;

    r.boundary_samples = s.front() == 0.0 && s.back() == 1.0;

    r.sample_pairs = eta <= sigma * sigma && pair_property(sources, s, eta);

    r.margin = eta < 1.0 ? sigma * std::sqrt(std::log(1.0 / (eta * eta * eta))) : 0.0;
    bool inside = eta < 1.0;
    for (double ti : sources) inside = inside && ti >= r.margin && ti <= 1.0 - r.margin;
    for (std::size_t j = 1; j + 1 < s.size(); ++j)
        inside = inside && s[j] >= r.margin && s[j] <= 1.0 - r.margin;
    r.margins = inside;

    r.separation = sources.empty() ? 1.0 : min_separation(sources);
    r.separation_threshold = sigma * std::sqrt(std::log(3.0 + 4.0 / (sigma * sigma)));
    r.width_and_separation = sigma <= std::sqrt(2.0) && r.separation > r.separation_threshold;

    r.smallest_pair_eta = std::numeric_limits<double>::infinity();
    std::vector<double> gaps;
    for (std::size_t a = 0; a < s.size(); ++a)
        for (std::size_t b = a + 1; b < s.size(); ++b) gaps.push_back(s[b] - s[a]);
    std::sort(gaps.begin(), gaps.end());
    for (double cand : gaps) {
        if (pair_property(sources, s, cand)) {
            r.smallest_pair_eta = cand;
            break;
        }
    }
    return r;
}

SamplingScheme place_samples(double delta_sep, double lambda0, const GaussianWindow& window) {
    if (!(lambda0 > 0.0 && lambda0 < 0.5)) throw std::invalid_argument("lambda0 must lie in (0, 1/2)");
    if (!(delta_sep > 0.0)) throw std::invalid_argument("separation must be positive");
    const double h = 2.0 * lambda0 * delta_sep;
    if (h >= 1.0) throw std::invalid_argument("sample spacing must be below 1");
    const auto n = static_cast<std::size_t>(std::ceil(1.0 / h - 1e-12));
    std::vector<double> s;
    s.reserve(n + 1);
    for (std::size_t j = 0; j < n; ++j) s.push_back(static_cast<double>(j) * h);
    s.push_back(1.0);
    return SamplingScheme(std::move(s), window);
}

double lipschitz_constant(std::size_t m, double sigma) {
    return 2.0 * std::sqrt(static_cast<double>(m)) / (sigma * std::sqrt(2.0 * std::exp(1.0)));
}

std::string measurement_csv(const Measurement& y, const SamplingScheme& scheme) {
    std::ostringstream os;
    os.precision(17);
    os << "j,s_j,y_j\n";
    for (std::size_t j = 0; j < scheme.size(); ++j)
        os << j + 1 << ',' << scheme.samples()[j] << ',' << y.values(static_cast<Eigen::Index>(j)) << '\n';
    return os.str();
}

}  // namespace nnsr
