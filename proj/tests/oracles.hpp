#pragma once

// Independent reference computations shared by the unit tests and the acceptance binary.

#include <algorithm>
#include <cmath>
#include <optional>
#include <random>
#include <vector>

#include <boost/multiprecision/cpp_dec_float.hpp>

#include "nnsr/bounds.hpp"
#include "nnsr/measure.hpp"
#include "nnsr/window.hpp"

namespace oracle {

using Big = boost::multiprecision::cpp_dec_float_50;

// Closed-form bound quantities, transcribed term by term in 50-digit decimal arithmetic.
struct BoundOracle {
    Big f_min, f_max, c_bar, p, eta_fmin, eta_cbar, eta_max, b, b_pi, F1, F2, F3, C1, C2;
};

inline BoundOracle bounds(const nnsr::BoundInputs& in) {
    using boost::multiprecision::exp;
    using boost::multiprecision::pow;
    using boost::multiprecision::sqrt;
    const Big s = in.sigma, d = in.delta_sep, k = in.k, f0 = in.f0, f1 = in.f1, fb = in.f_bar, eta = in.eta,
              lam = in.lambda;
    const Big s2 = s * s, s4 = s2 * s2, s6 = s4 * s2, s8 = s4 * s4;
    const Big e = exp(-(d * d) / s2);
    BoundOracle o;
    o.f_min = 1 - (1 + 2 / s2) * 2 * e / (1 - e);
    o.f_max = sqrt(8 + (1 + 4 / s4) * 2 / (1 - e)) * sqrt(32 + (1 / s4 + 2 / s6 + 2 / s8) * 24 / (1 - e));
    o.c_bar = f0 * f0 + f1 * f1 + 2 * f0 + 2 * f1 + 2;
    const Big a = 2 / s2 + 4 / s4, c = 12 / s4 + 8 / s6;
    o.p = 4 / s4 + Big(13) / 4 * a * a + Big(9) / 4 * c * c;
    o.eta_fmin = 8 * o.f_min / (34 * (2 * k + 2) * sqrt(80 * k + 8 + k * o.p * 3 / (1 - e)));
    o.eta_cbar = pow(o.c_bar, Big(1) / 6) / pow(4 * k + 4 + 4 * k / s2, Big(1) / 3);
    o.eta_max = std::min(o.eta_fmin, o.eta_cbar);
    const Big ratio = pow(o.f_max / (o.f_min * o.f_min), k);
    const Big pre = 1 - sqrt(exp(Big(1))) / 2;
    const Big root = sqrt(4 * k + 5 + 4 * k / s4);
    o.b = sqrt(2 * k + 2) * root / pre * pow(o.c_bar, Big(5) / 4) * ratio;
    o.b_pi = sqrt(2 * k + 2) / (eta * pre) * pow(o.c_bar + 2 * k, Big(3) / 2) * ratio;
    o.F1 = ((6 + 2 / fb) * root * pow(o.c_bar, Big(5) / 4) + 6 / eta * pow(o.c_bar + 2 * k, Big(3) / 2)) *
           sqrt(2 * k + 2) / pre * ratio;
    o.F2 = sqrt(2 * k + 2) * root / pre * pow(o.c_bar, Big(5) / 4) / fb * ratio;
    const Big el = exp(-(d * d * lam * lam) / s2);
    const Big e2 = exp(-2 * d * d / s2);
    o.F3 = 1 / (el - el * (e + e2) / (1 - e) - exp(-(d * d * (1 - lam) * (1 - lam)) / s2));
    o.C1 = pow(o.c_bar + 2 * k, Big(3) / 2) / fb;
    o.C2 = pow(o.c_bar, Big(5) / 4) / fb;
    return o;
}

inline double rel_diff(double value, const Big& ref) {
    const Big diff = Big(abs(Big(value) - ref));
    const Big scale = std::max(Big(abs(ref)), Big(1e-300));
    return static_cast<double>(diff / scale);
}

// phi(l D) - phi(D - l D) - phi(D + l D) - (1/D) (I1 + I2) with Gaussian integrals in erf form.
inline double lambda_residual(double sigma, double delta, double lambda) {
    auto phi = [sigma](double t) { return std::exp(-t * t / (sigma * sigma)); };
    auto integral = [sigma](double a, double b) {
        return 0.5 * sigma * std::sqrt(M_PI) * (std::erf(b / sigma) - std::erf(a / sigma));
    };
    const double ld = lambda * delta;
    return phi(ld) - phi(delta - ld) - phi(delta + ld) -
           (integral(delta - ld, 0.5 - ld) + integral(delta + ld, 0.5 + ld)) / delta;
}

// Generalized Wasserstein distance as the linear program
//   max sum_ij (2 - |x_i - y_j|) g_ij  s.t.  sum_j g_ij <= a_i,  sum_i g_ij <= b_j,  g >= 0,
// d_GW = sum a + sum b - max. Dense tableau simplex with Bland's rule in long double.
inline double gw_lp(const nnsr::DiscreteMeasure& mu, const nnsr::DiscreteMeasure& nu) {
    const std::size_t p = mu.size(), q = nu.size();
    double total = 0.0;
    for (double w : mu.weights()) total += w;
    for (double w : nu.weights()) total += w;
    if (p == 0 || q == 0) return total;
    const std::size_t nv = p * q, rows = p + q, cols = nv + rows;
    using LD = long double;
    std::vector<std::vector<LD>> T(rows + 1, std::vector<LD>(cols + 1, 0.0L));
    std::vector<std::size_t> basis(rows);
    for (std::size_t i = 0; i < p; ++i) {
        for (std::size_t j = 0; j < q; ++j) {
            T[i][i * q + j] = 1.0L;
            T[p + j][i * q + j] = 1.0L;
            T[rows][i * q + j] = -(2.0L - std::fabs(static_cast<LD>(mu.locations()[i]) - nu.locations()[j]));
        }
        T[i][cols] = mu.weights()[i];
    }
    for (std::size_t j = 0; j < q; ++j) T[p + j][cols] = nu.weights()[j];
    for (std::size_t r = 0; r < rows; ++r) {
        T[r][nv + r] = 1.0L;
        basis[r] = nv + r;
    }
    for (int iter = 0; iter < 10000; ++iter) {
        std::size_t enter = cols;
        for (std::size_t c = 0; c < cols; ++c)
            if (T[rows][c] < -1e-15L) {
                enter = c;
                break;
            }
        if (enter == cols) break;
        std::size_t leave = rows;
        LD best = 0.0L;
        for (std::size_t r = 0; r < rows; ++r) {
            if (T[r][enter] > 1e-15L) {
                const LD ratio = T[r][cols] / T[r][enter];
                if (leave == rows || ratio < best - 1e-18L ||
                    (std::fabs(ratio - best) <= 1e-18L && basis[r] < basis[leave])) {
                    best = ratio;
                    leave = r;
                }
            }
        }
        if (leave == rows) break;  // unbounded cannot happen: the feasible set is bounded
        const LD piv = T[leave][enter];
        for (LD& v : T[leave]) v /= piv;
        for (std::size_t r = 0; r <= rows; ++r) {
            if (r == leave || T[r][enter] == 0.0L) continue;
            const LD f = T[r][enter];
            for (std::size_t c = 0; c <= cols; ++c) T[r][c] -= f * T[leave][c];
        }
        basis[leave] = enter;
    }
    return static_cast<double>(static_cast<LD>(total) - T[rows][cols]);
}

// Random measure with up to max_atoms atoms in (0,1); may be empty when allow_empty.
inline nnsr::DiscreteMeasure random_measure(std::mt19937_64& rng, std::size_t max_atoms, bool allow_empty,
                                            double max_weight = 2.0) {
    std::uniform_int_distribution<std::size_t> count(allow_empty ? 0 : 1, max_atoms);
    std::uniform_real_distribution<double> loc(0.001, 0.999), w(0.05, max_weight);
    const std::size_t n = count(rng);
    std::vector<double> t(n), a(n);
    for (std::size_t i = 0; i < n; ++i) {
        t[i] = loc(rng);
        a[i] = w(rng);
    }
    return nnsr::DiscreteMeasure(t, a);
}

struct ConditionsConfig {
    std::vector<double> sources;
    double sigma = 0.0;
    double eta = 0.0;
    bool small_eta = false;  // eta drawn below the F_min branch of eta_max
    nnsr::SamplingScheme scheme{{0.0, 1.0}, nnsr::GaussianWindow(1.0)};
};

inline nnsr::SamplingScheme pair_scheme(const std::vector<double>& sources, double eta, double sigma) {
    std::vector<double> s{0.0};
    for (double t : sources) {
        s.push_back(t - eta / 2.0);
        s.push_back(t + eta / 2.0);
    }
    s.push_back(1.0);
    return nnsr::SamplingScheme(std::move(s), nnsr::GaussianWindow(sigma));
}

// Draws k <= k_max sources, sigma and eta until all four window conditions hold with
// paired samples {0, t_i -+ eta/2, 1}. Half of the draws use eta = sigma^2; the other half
// put eta below the F_min branch of eta_max (which does not depend on f0, f1).
inline std::optional<ConditionsConfig> random_conditions_config(std::mt19937_64& rng, int k_max,
                                                                int attempts = 5000) {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const bool small_eta = unif(rng) < 0.5;
    for (int a = 0; a < attempts; ++a) {
        ConditionsConfig c;
        c.small_eta = small_eta;
        const int k = 1 + static_cast<int>(unif(rng) * k_max) % k_max;
        c.sigma = small_eta ? 0.04 + 0.02 * unif(rng) : 0.04 + 0.08 * unif(rng);
        double eta = c.sigma * c.sigma;
        if (small_eta) eta = 1e-12;  // provisional, only to size the margins
        const double margin = c.sigma * std::sqrt(std::log(1.0 / (eta * eta * eta)));
        if (margin >= 0.5) continue;
        std::vector<double> t(static_cast<std::size_t>(k));
        for (double& v : t) v = margin + (1.0 - 2.0 * margin) * unif(rng);
        std::sort(t.begin(), t.end());
        if (nnsr::min_separation(t) <= c.sigma * std::sqrt(std::log(3.0 + 4.0 / (c.sigma * c.sigma)))) continue;
        if (small_eta) {
            const double d = nnsr::min_separation(t);
            const auto br = nnsr::eta_max_branches(k, d, c.sigma, 1.0, 1.0);
            eta = (0.5 + 0.5 * unif(rng)) * br.branch_fmin;
            if (!(eta > 0.0)) continue;
        }
        c.sources = t;
        c.eta = eta;
        c.scheme = pair_scheme(t, eta, c.sigma);
        if (!nnsr::check_conditions(t, c.scheme, eta).pass()) continue;
        return c;
    }
    return std::nullopt;
}

}  // namespace oracle
