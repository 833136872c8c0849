#include "nnsr/certificate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "nnsr/linalg.hpp"
#include "nnsr/measure.hpp"

namespace nnsr {

namespace {

template <class Real>
Real gauss(const Real& t, const Real& sigma2, int order) {
    using std::exp;
    const Real g = exp(-(t * t) / sigma2);
    if (order == 0) return g;
    return -(2 * t / sigma2) * g;
}

bool in_neighborhood(double t, const std::vector<double>& sources, double eps, std::size_t* which = nullptr) {
    for (std::size_t i = 0; i < sources.size(); ++i) {
        if (std::abs(t - sources[i]) <= eps) {
            if (which) *which = i;
            return true;
        }
    }
    return false;
}

// Hermite collocation matrix (row-major, m x m): rows 0, (t_i, d/dt at t_i)..., 1.
template <class Real>
std::vector<Real> hermite_matrix(const std::vector<double>& sources, const std::vector<double>& samples,
                                 double sigma) {
    const std::size_t m = samples.size();
    const Real s2 = Real(sigma) * Real(sigma);
    std::vector<Real> a;
    a.reserve(m * m);
    auto push_row = [&](double t, int order) {
        for (double s : samples) a.push_back(gauss<Real>(Real(t) - Real(s), s2, order));
    };
    push_row(0.0, 0);
    for (double t : sources) {
        push_row(t, 0);
        push_row(t, 1);
    }
    push_row(1.0, 0);
    return a;
}

template <class Real>
std::vector<Real> separator_rhs(const std::vector<double>& sources, const SeparatorSpec& sep) {
    std::vector<Real> r;
    r.push_back(Real(sep.f0));
    for (std::size_t i = 0; i < sources.size(); ++i) {
        r.push_back(sep.has_sign_pattern() ? Real(sep.sign_pattern[i]) : Real(0));
        r.push_back(Real(0));
    }
    r.push_back(Real(sep.f1));
    return r;
}

std::vector<double> selected_samples(const std::vector<double>& sources, const SamplingScheme& scheme) {
    std::vector<double> s;
    for (std::size_t idx : select_certificate_samples(sources, scheme)) s.push_back(scheme.samples()[idx]);
    return s;
}

void check_sources(const std::vector<double>& sources) {
    if (!std::is_sorted(sources.begin(), sources.end()))
        throw std::invalid_argument("sources must be sorted");
    for (double t : sources)
        if (!(t > 0.0 && t < 1.0)) throw std::invalid_argument("sources must lie in (0,1)");
}

}  // namespace

std::vector<HighPrecision> hp_eval_uniform(const std::vector<HighPrecision>& coeffs,
                                           const std::vector<double>& samples, double sigma, std::size_t count) {
    if (count < 2) throw std::invalid_argument("hp_eval_uniform needs at least 2 points");
    std::vector<HighPrecision> out(count, HighPrecision(0));
    const HighPrecision s2 = HighPrecision(sigma) * HighPrecision(sigma);
    const HighPrecision h = HighPrecision(1) / HighPrecision(count - 1);
    const HighPrecision step = exp(-2 * h * h / s2);
    for (std::size_t j = 0; j < samples.size(); ++j) {
        const HighPrecision s(samples[j]);
        HighPrecision g = exp(-(s * s) / s2);
        HighPrecision r = exp(-(-2 * s * h + h * h) / s2);
        for (std::size_t n = 0; n < count; ++n) {
            out[n] += coeffs[j] * g;
            g *= r;
            r *= step;
        }
    }
    return out;
}

HighPrecision hp_eval_point(const std::vector<HighPrecision>& coeffs, const std::vector<double>& samples,
                            double sigma, double t, int order) {
    const HighPrecision s2 = HighPrecision(sigma) * HighPrecision(sigma);
    HighPrecision q(0);
    for (std::size_t j = 0; j < samples.size(); ++j)
        q += coeffs[j] * gauss<HighPrecision>(HighPrecision(t) - HighPrecision(samples[j]), s2, order);
    return q;
}

double SeparatorSpec::value(double t, const std::vector<double>& sources) const {
    if (t == 0.0) return f0;
    if (t == 1.0) return f1;
    std::size_t i = 0;
    if (in_neighborhood(t, sources, epsilon, &i)) return has_sign_pattern() ? sign_pattern[i] : 0.0;
    return has_sign_pattern() ? -f_bar : f_bar;
}

std::vector<std::size_t> select_certificate_samples(const std::vector<double>& sources,
                                                    const SamplingScheme& scheme) {
    check_sources(sources);
    const auto& s = scheme.samples();
    if (s.front() != 0.0 || s.back() != 1.0)
        throw std::invalid_argument("certificate needs samples at 0 and 1");
    std::vector<std::size_t> idx{0};
    for (double t : sources) {
        // largest s <= t, then smallest s > t
        const auto right = std::upper_bound(s.begin(), s.end(), t);
        const auto r = static_cast<std::size_t>(right - s.begin());
        idx.push_back(r - 1);
        idx.push_back(r);
    }
    idx.push_back(s.size() - 1);
    for (std::size_t i = 1; i < idx.size(); ++i)
        if (idx[i] <= idx[i - 1])
            throw std::invalid_argument("sources do not have 2k+2 distinct neighbouring samples");
    return idx;
}

MinorSystem build_minor_system(const std::vector<double>& sources, const SamplingScheme& scheme,
                               const SeparatorSpec& separator) {
    if (separator.has_sign_pattern() && separator.sign_pattern.size() != sources.size())
        throw std::invalid_argument("sign pattern length must equal the number of sources");
    MinorSystem sys;
    sys.sources = sources;
    sys.samples = selected_samples(sources, scheme);
    sys.sigma = scheme.sigma();
    sys.separator = separator;
    const std::size_t m = sys.samples.size();
    const auto g = hermite_matrix<double>(sources, sys.samples, sys.sigma);
    const auto f = separator_rhs<double>(sources, separator);

    std::vector<double> full(m * (m + 1));
    sys.matrix.resize(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m + 1));
    for (std::size_t i = 0; i < m; ++i) {
        full[i * (m + 1)] = f[i];
        for (std::size_t j = 0; j < m; ++j) full[i * (m + 1) + j + 1] = g[i * m + j];
        for (std::size_t j = 0; j <= m; ++j)
            sys.matrix(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = full[i * (m + 1) + j];
    }
    for (std::size_t j = 0; j <= m; ++j) {
        const auto d = signed_log_det(drop_column(full, m, m + 1, j), m);
        sys.log_minors.push_back(d.sign == 0 ? -std::numeric_limits<double>::infinity() : d.log_abs);
        sys.minor_signs.push_back(d.sign);
    }
    if (sys.minor_signs.front() == 0 || !std::isfinite(sys.log_minors.front()))
        throw std::runtime_error("degenerate configuration");
    return sys;
}

DualCertificate certificate_coefficients(const MinorSystem& system) {
    const std::size_t m = system.m();
    DualCertificate cert;
    cert.separator = system.separator;
    cert.sources = system.sources;
    cert.samples = system.samples;
    cert.sigma = system.sigma;

    cert.b.resize(m);
    for (std::size_t j = 0; j < m; ++j) {
        const int sign = (j % 2 == 0 ? 1 : -1) * system.minor_signs[j + 1] * system.minor_signs[0];
        cert.b[j] = sign == 0 ? 0.0 : sign * std::exp(system.log_minors[j + 1] - system.log_minors[0]);
    }

    const auto g = hermite_matrix<double>(system.sources, system.samples, system.sigma);
    const auto lu = lu_solve(g, separator_rhs<double>(system.sources, system.separator), m, 1);
    double diff = 0.0, scale = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
        diff = std::max(diff, std::abs(cert.b[j] - lu[j]));
        scale = std::max(scale, std::abs(lu[j]));
    }
    cert.route_disagreement = scale > 0.0 ? diff / scale : diff;

    cert.b_hp = lu_solve(hermite_matrix<HighPrecision>(system.sources, system.samples, system.sigma),
                         separator_rhs<HighPrecision>(system.sources, system.separator), m, 1);
    return cert;
}

HighPrecision DualCertificate::evaluate_hp(double t, int order) const {
    return hp_eval_point(b_hp, samples, sigma, t, order);
}

double DualCertificate::evaluate(double t) const { return to_double(evaluate_hp(t)); }

double DualCertificate::norm() const {
    HighPrecision s(0);
    for (const auto& v : b_hp) s += v * v;
    return to_double(sqrt(s));
}

CertificateReport verify_certificate(const DualCertificate& cert, std::size_t grid_points) {
    if (grid_points < 1000) throw std::invalid_argument("verification needs at least 1000 grid points");
    const auto& sep = cert.separator;
    const double inf = std::numeric_limits<double>::infinity();
    CertificateReport rep;
    rep.min_margin = inf;
    rep.min_far_margin = inf;

    auto account = [&](double t, const HighPrecision& q) {
        const double margin = to_double(q - HighPrecision(sep.value(t, cert.sources)));
        rep.min_margin = std::min(rep.min_margin, margin);
        if (t > 0.0 && t < 1.0 && !in_neighborhood(t, cert.sources, sep.epsilon))
            rep.min_far_margin = std::min(rep.min_far_margin, margin);
        ++rep.points;
    };

    const auto grid = hp_eval_uniform(cert.b_hp, cert.samples, cert.sigma, grid_points);
    for (std::size_t n = 0; n < grid_points; ++n) {
        const double t = n + 1 == grid_points ? 1.0 : static_cast<double>(n) / static_cast<double>(grid_points - 1);
        account(t, grid[n]);
    }
    std::vector<double> extra = cert.samples;
    for (double t : cert.sources) {
        extra.push_back(t);
        extra.push_back(std::max(0.0, t - sep.epsilon));
        extra.push_back(std::min(1.0, t + sep.epsilon));
    }
    for (double t : extra) account(t, cert.evaluate_hp(t));

    for (std::size_t i = 0; i < cert.sources.size(); ++i) {
        const double t = cert.sources[i];
        const double target = sep.has_sign_pattern() ? sep.sign_pattern[i] : 0.0;
        rep.max_interpolation_error =
            std::max(rep.max_interpolation_error, std::abs(to_double(cert.evaluate_hp(t) - HighPrecision(target))));
        rep.max_derivative_at_sources =
            std::max(rep.max_derivative_at_sources, std::abs(to_double(cert.evaluate_hp(t, 1))));
    }
    rep.q_at_zero = cert.evaluate(0.0);
    rep.q_at_one = cert.evaluate(1.0);
    rep.boundary_error = std::max(std::abs(to_double(cert.evaluate_hp(0.0) - HighPrecision(sep.f0))),
                                  std::abs(to_double(cert.evaluate_hp(1.0) - HighPrecision(sep.f1))));

    const double tol = 1e-8;
    const bool interpolates =
        rep.max_interpolation_error <= tol && rep.max_derivative_at_sources <= tol && rep.boundary_error <= tol;
    // q^pi is only required to interpolate; the floor applies to the F separator
    rep.pass = interpolates && (sep.has_sign_pattern() || rep.min_margin >= -tol);
    return rep;
}

F0Choice choose_f0(const std::vector<double>& sources, const SamplingScheme& scheme, double epsilon,
                   double f_bar, double f1, std::size_t grid_points) {
    if (epsilon <= 0.0) throw std::invalid_argument("epsilon must be positive");
    if (!sources.empty() && epsilon > min_separation(sources) / 2.0 + 1e-15)
        throw std::invalid_argument("epsilon exceeds half the minimum separation");
    const std::vector<double> samples = selected_samples(sources, scheme);
    const std::size_t m = samples.size();
    const double sigma = scheme.sigma();

    const auto g = hermite_matrix<HighPrecision>(sources, samples, sigma);
    std::vector<HighPrecision> rhs(2 * m, HighPrecision(0));
    rhs[0] = 1;                  // q0: 1 at t=0, 0 at t=1
    rhs[(m - 1) * 2 + 1] = 1;    // q1: 0 at t=0, 1 at t=1
    const auto sol = lu_solve(g, rhs, m, 2);
    std::vector<HighPrecision> c0(m), c1(m);
    for (std::size_t j = 0; j < m; ++j) {
        c0[j] = sol[j * 2];
        c1[j] = sol[j * 2 + 1];
    }

    F0Choice out;
    const auto den = signed_log_det(g, m);
    if (den.sign == 0) throw std::runtime_error("degenerate configuration");
    out.log_n_denominator = to_double(den.log_abs);

    // |N_{1,1}(tau)| = q0(tau) * |N_{l,1}|: replacing the t=0 row by the tau row
    HighPrecision min_q0(-1);
    for (double t : sources) {
        for (double tau : {t - epsilon, t + epsilon}) {
            if (tau <= 0.0 || tau >= 1.0) continue;
            const HighPrecision q0 = hp_eval_point(c0, samples, sigma, tau);
            if (q0 <= 0) throw std::runtime_error("degenerate configuration: q0 not positive near the sources");
            if (min_q0 < 0 || q0 < min_q0) min_q0 = q0;
        }
    }
    if (min_q0 > 0) {
        out.epsilon_rule = 1.5 * f_bar / to_double(min_q0);
        out.c_eps = out.epsilon_rule * epsilon * epsilon / f_bar;
        out.min_log_n11 = to_double(log(min_q0)) + out.log_n_denominator;
    }

    const auto q0 = hp_eval_uniform(c0, samples, sigma, grid_points);
    const auto q1 = hp_eval_uniform(c1, samples, sigma, grid_points);
    HighPrecision required(0);
    for (std::size_t n = 1; n + 1 < grid_points; ++n) {
        const double t = static_cast<double>(n) / static_cast<double>(grid_points - 1);
        if (in_neighborhood(t, sources, epsilon)) continue;
        const HighPrecision num = HighPrecision(f_bar) - HighPrecision(f1) * q1[n];
        if (num <= 0) continue;
        if (q0[n] <= 0) throw std::runtime_error("degenerate configuration: q0 not positive off the sources");
        const HighPrecision r = num / q0[n];
        if (r > required) required = r;
    }
    out.required = to_double(required);

    out.f0 = out.epsilon_rule;
    if (out.f0 < out.required) {
        out.f0 = 3.0 * out.required;
        out.overridden = true;
    }
    const double floor = 3.0 * std::max(f1, 1.0);
    if (out.f0 < floor) {
        out.f0 = floor;
        out.overridden = true;
    }
    return out;
}

DualCertificate build_certificate(const std::vector<double>& sources, const SamplingScheme& scheme,
                                  SeparatorSpec separator) {
    separator.f0 = choose_f0(sources, scheme, separator.epsilon, separator.f_bar, separator.f1).f0;
    return certificate_coefficients(build_minor_system(sources, scheme, separator));
}

TSystemReport tsystem_check(const SamplingScheme& scheme, int trials, std::uint64_t seed) {
    if (trials < 1) throw std::invalid_argument("trials must be at least 1");
    const std::size_t m = scheme.size();
    const double sigma = scheme.sigma();
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    TSystemReport rep;
    rep.min_log10_abs_det = std::numeric_limits<double>::infinity();

    for (int trial = 0; trial < trials; ++trial) {
        std::vector<double> tau(m);
        do {
            for (double& t : tau) t = unif(rng);
            std::sort(tau.begin(), tau.end());
        } while (std::adjacent_find(tau.begin(), tau.end()) != tau.end());
        ++rep.trials;

        auto equilibrated = [&](auto zero) {
            using Real = decltype(zero);
            using std::abs;
            const Real s2 = Real(sigma) * Real(sigma);
            std::vector<Real> a(m * m);
            for (std::size_t l = 0; l < m; ++l)
                for (std::size_t j = 0; j < m; ++j)
                    a[l * m + j] = gauss<Real>(Real(tau[l]) - Real(scheme.samples()[j]), s2, 0);
            for (int pass = 0; pass < 2; ++pass) {
                for (std::size_t r = 0; r < m; ++r) {
                    Real mx(0);
                    for (std::size_t c = 0; c < m; ++c) {
                        const Real v = abs(pass == 0 ? a[r * m + c] : a[c * m + r]);
                        if (v > mx) mx = v;
                    }
                    if (mx == 0) continue;
                    for (std::size_t c = 0; c < m; ++c) (pass == 0 ? a[r * m + c] : a[c * m + r]) /= mx;
                }
            }
            return signed_log_det(std::move(a), m);
        };

        const auto d = equilibrated(0.0);
        double log10_det = d.sign > 0 ? d.log_abs / std::log(10.0) : -std::numeric_limits<double>::infinity();
        if (d.sign <= 0) {
            // double underflowed or lost the sign; settle it in high precision
            const auto dh = equilibrated(HighPrecision(0));
            if (dh.sign == 0) {
                ++rep.counterexamples;
            } else {
                log10_det = to_double(dh.log_abs) / std::log(10.0);
            }
        }
        rep.min_log10_abs_det = std::min(rep.min_log10_abs_det, log10_det);
    }
    return rep;
}

TStarReport tstar_rate_check(const std::vector<double>& sources, const SamplingScheme& scheme,
                             const SeparatorSpec& separator, const std::vector<double>& rho_sequence,
                             std::optional<double> tau) {
    if (rho_sequence.size() < 2) throw std::invalid_argument("need at least two rho values");
    const std::vector<double> samples = selected_samples(sources, scheme);
    const std::size_t m = samples.size();
    const double sigma = scheme.sigma();
    TStarReport rep;
    rep.rho = rho_sequence;

    if (tau) {
        rep.tau = *tau;
    } else {
        std::vector<double> pts{0.0};
        pts.insert(pts.end(), sources.begin(), sources.end());
        pts.push_back(1.0);
        double widest = -1.0;
        for (std::size_t i = 1; i < pts.size(); ++i) {
            if (pts[i] - pts[i - 1] > widest) {
                widest = pts[i] - pts[i - 1];
                rep.tau = 0.5 * (pts[i] + pts[i - 1]);
            }
        }
    }

    const HighPrecision s2 = HighPrecision(sigma) * HighPrecision(sigma);
    rep.det_positive = true;
    for (double rho : rho_sequence) {
        std::vector<double> rows{0.0};
        for (double t : sources) {
            if (rho > separator.epsilon) throw std::invalid_argument("rho must not exceed epsilon");
            rows.push_back(t);
            rows.push_back(t + rho);
        }
        rows.push_back(1.0);
        const auto pos = std::upper_bound(rows.begin(), rows.end(), rep.tau);
        const auto tau_row = static_cast<std::size_t>(pos - rows.begin());
        rows.insert(pos, rep.tau);

        const std::size_t n = m + 1;
        std::vector<HighPrecision> a(n * n);
        for (std::size_t r = 0; r < n; ++r) {
            a[r * n] = HighPrecision(separator.value(rows[r], sources));
            for (std::size_t j = 0; j < m; ++j)
                a[r * n + j + 1] = gauss<HighPrecision>(HighPrecision(rows[r]) - HighPrecision(samples[j]), s2, 0);
        }
        const auto det = signed_log_det(a, n);
        rep.det_signs.push_back(det.sign);
        if (det.sign <= 0) rep.det_positive = false;

        std::vector<HighPrecision> reduced;
        reduced.reserve(m * n);
        for (std::size_t r = 0; r < n; ++r)
            if (r != tau_row) reduced.insert(reduced.end(), a.begin() + r * n, a.begin() + (r + 1) * n);
        std::vector<double> logs;
        for (std::size_t j = 0; j < n; ++j) {
            const auto d = signed_log_det(drop_column(reduced, m, n, j), m);
            logs.push_back(d.sign == 0 ? -std::numeric_limits<double>::infinity()
                                       : to_double(d.log_abs) / std::log(10.0));
        }
        rep.log10_minors.push_back(std::move(logs));
    }

    // least-squares slope of log10 |minor| against log10 rho, per column
    const std::size_t cols = m + 1;
    const double k = static_cast<double>(sources.size());
    double xbar = 0.0;
    for (double r : rho_sequence) xbar += std::log10(r);
    xbar /= static_cast<double>(rho_sequence.size());
    bool finite = true;
    for (std::size_t j = 0; j < cols; ++j) {
        double ybar = 0.0;
        for (std::size_t i = 0; i < rho_sequence.size(); ++i) ybar += rep.log10_minors[i][j];
        ybar /= static_cast<double>(rho_sequence.size());
        double sxy = 0.0, sxx = 0.0;
        for (std::size_t i = 0; i < rho_sequence.size(); ++i) {
            const double dx = std::log10(rho_sequence[i]) - xbar;
            sxy += dx * (rep.log10_minors[i][j] - ybar);
            sxx += dx * dx;
        }
        const double slope = sxy / sxx;
        if (!std::isfinite(slope)) finite = false;
        rep.slopes.push_back(slope);
        rep.max_slope_error = std::max(rep.max_slope_error, std::abs(slope - k));
    }
    rep.pass = finite && rep.det_positive && rep.max_slope_error <= 0.1;
    return rep;
}

std::string certificate_json(const DualCertificate& cert) {
    nlohmann::json j;
    j["b"] = cert.b;
    std::vector<std::string> b_hp;
    for (const auto& v : cert.b_hp) b_hp.push_back(v.str(30, std::ios_base::scientific));
    j["b_high_precision"] = b_hp;
    j["samples"] = cert.samples;
    j["sources"] = cert.sources;
    j["sigma"] = cert.sigma;
    j["f0"] = cert.separator.f0;
    j["f1"] = cert.separator.f1;
    j["f_bar"] = cert.separator.f_bar;
    j["epsilon"] = cert.separator.epsilon;
    if (cert.separator.has_sign_pattern()) j["pi"] = cert.separator.sign_pattern;
    j["norm_b"] = cert.norm();
    return j.dump(2);
}

std::string certificate_curve_csv(const DualCertificate& cert, std::size_t points) {
    const auto q = hp_eval_uniform(cert.b_hp, cert.samples, cert.sigma, points);
    std::ostringstream os;
    os.precision(17);
    os << "t,q,F\n";
    for (std::size_t n = 0; n < points; ++n) {
        const double t = n + 1 == points ? 1.0 : static_cast<double>(n) / static_cast<double>(points - 1);
        os << t << ',' << to_double(q[n]) << ',' << cert.separator.value(t, cert.sources) << '\n';
    }
    return os.str();
}

}  // namespace nnsr
