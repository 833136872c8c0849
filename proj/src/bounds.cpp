#include "nnsr/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/roots.hpp>
#include <json.hpp>

namespace nnsr {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// 1 - e^{-D^2/sigma^2} without cancellation
double one_minus_gap(double delta_sep, double sigma) {
    return -std::expm1(-(delta_sep * delta_sep) / (sigma * sigma));
}

double shrink_factor() { return 1.0 - std::sqrt(std::exp(1.0)) / 2.0; }

double log10_sum(double la, double lb) {
    const double hi = std::max(la, lb), lo = std::min(la, lb);
    if (hi == -kInf) return -kInf;
    return hi + std::log10(1.0 + std::pow(10.0, lo - hi));
}

// F_min > 0 is equivalent to Delta^2/sigma^2 > log(3 + 4/sigma^2); the log form is exact at the edge.
// F_min < 1 holds for every finite Delta but rounds to 1 in double once the Gaussian tail underflows,
// so it is not tested here.
bool f_min_in_range(double delta_sep, double sigma) {
    return delta_sep > sigma * std::sqrt(std::log(3.0 + 4.0 / (sigma * sigma))) && f_min(delta_sep, sigma) > 0.0;
}

// log10(C_bar(f0, f1) + extra) without overflow for f0 near the double range
double log10_c_bar(double f0, double f1, double extra = 0.0) {
    const double m = std::max({f0, f1, 1.0});
    const double a = f0 / m, b = f1 / m;
    return 2.0 * std::log10(m) + std::log10(a * a + b * b + (2.0 * f0 + 2.0 * f1 + 2.0 + extra) / m / m);
}

double poly_term(int k, double sigma) {
    const double s4 = std::pow(sigma, 4);
    return 4.0 * k + 5.0 + 4.0 * k / s4;
}

}  // namespace

double f_min(double delta_sep, double sigma) {
    const double e = std::exp(-(delta_sep * delta_sep) / (sigma * sigma));
    return 1.0 - (1.0 + 2.0 / (sigma * sigma)) * 2.0 * e / one_minus_gap(delta_sep, sigma);
}

double f_max(double delta_sep, double sigma) {
    const double d = one_minus_gap(delta_sep, sigma);
    const double s2 = sigma * sigma, s4 = s2 * s2, s6 = s4 * s2, s8 = s4 * s4;
    const double first = 8.0 + (1.0 + 4.0 / s4) * 2.0 / d;
    const double second = 32.0 + (1.0 / s4 + 2.0 / s6 + 2.0 / s8) * 24.0 / d;
    return std::sqrt(first) * std::sqrt(second);
}

double c_bar(double f0, double f1) { return f0 * f0 + f1 * f1 + 2.0 * f0 + 2.0 * f1 + 2.0; }

double p_poly(double sigma) {
    const double s2 = sigma * sigma, s4 = s2 * s2, s6 = s4 * s2;
    const double a = 2.0 / s2 + 4.0 / s4;
    const double b = 12.0 / s4 + 8.0 / s6;
    return 4.0 / s4 + 13.0 / 4.0 * a * a + 9.0 / 4.0 * b * b;
}

EtaMax eta_max_branches(int k, double delta_sep, double sigma, double f0, double f1) {
    EtaMax out;
    const double inner = 80.0 * k + 8.0 + k * p_poly(sigma) * 3.0 / one_minus_gap(delta_sep, sigma);
    out.branch_fmin = 8.0 * f_min(delta_sep, sigma) / (34.0 * (2.0 * k + 2.0) * std::sqrt(inner));
    out.branch_cbar =
        std::pow(c_bar(f0, f1), 1.0 / 6.0) / std::cbrt(4.0 * k + 4.0 + 4.0 * k / (sigma * sigma));
    out.value = std::min(out.branch_fmin, out.branch_cbar);
    return out;
}

double eta_max(int k, double delta_sep, double sigma, double f0, double f1) {
    return eta_max_branches(k, delta_sep, sigma, f0, f1).value;
}

double growth_ratio(double delta_sep, double sigma) {
    const double fm = f_min(delta_sep, sigma);
    return f_max(delta_sep, sigma) / (fm * fm);
}

BNormBounds b_norm_bounds(const BoundInputs& in) {
    BNormBounds out;
    const double cb = c_bar(in.f0, in.f1);
    const int k = in.k;
    out.ratio = growth_ratio(in.delta_sep, in.sigma);
    const double pre = std::sqrt((2.0 * k + 2.0) * poly_term(k, in.sigma)) / shrink_factor();
    const double pre_pi = std::sqrt(2.0 * k + 2.0) / (in.eta * shrink_factor());
    out.b = pre * std::pow(cb, 1.25) * std::pow(out.ratio, k);
    out.b_pi = pre_pi * std::pow(cb + 2.0 * k, 1.5) * std::pow(out.ratio, k);
    out.log10_b = std::log10(pre) + 1.25 * log10_c_bar(in.f0, in.f1) + k * std::log10(out.ratio);
    out.log10_b_pi = std::log10(pre_pi) + 1.5 * log10_c_bar(in.f0, in.f1, 2.0 * k) + k * std::log10(out.ratio);
    out.valid = f_min_in_range(in.delta_sep, in.sigma) && in.eta > 0.0 &&
                in.eta <= eta_max(k, in.delta_sep, in.sigma, in.f0, in.f1);
    return out;
}

double F1(const BoundInputs& in) {
    const int k = in.k;
    const double cb = c_bar(in.f0, in.f1);
    const double head = (6.0 + 2.0 / in.f_bar) * std::sqrt(poly_term(k, in.sigma)) * std::pow(cb, 1.25) +
                        6.0 / in.eta * std::pow(cb + 2.0 * k, 1.5);
    return head * std::sqrt(2.0 * k + 2.0) / shrink_factor() * std::pow(growth_ratio(in.delta_sep, in.sigma), k);
}

double log10_F1(const BoundInputs& in) {
    const int k = in.k;
    const double la = std::log10(6.0 + 2.0 / in.f_bar) + 0.5 * std::log10(poly_term(k, in.sigma)) +
                      1.25 * log10_c_bar(in.f0, in.f1);
    const double lb = std::log10(6.0 / in.eta) + 1.5 * log10_c_bar(in.f0, in.f1, 2.0 * k);
    return log10_sum(la, lb) + 0.5 * std::log10(2.0 * k + 2.0) - std::log10(shrink_factor()) +
           k * std::log10(growth_ratio(in.delta_sep, in.sigma));
}

double F2(const BoundInputs& in) {
    const int k = in.k;
    return std::sqrt((2.0 * k + 2.0) * poly_term(k, in.sigma)) / shrink_factor() *
           std::pow(c_bar(in.f0, in.f1), 1.25) / in.f_bar * std::pow(growth_ratio(in.delta_sep, in.sigma), k);
}

double log10_F2(const BoundInputs& in) {
    const int k = in.k;
    return 0.5 * std::log10((2.0 * k + 2.0) * poly_term(k, in.sigma)) - std::log10(shrink_factor()) +
           1.25 * log10_c_bar(in.f0, in.f1) - std::log10(in.f_bar) +
           k * std::log10(growth_ratio(in.delta_sep, in.sigma));
}

double F3(const BoundInputs& in) {
    const double s2 = in.sigma * in.sigma;
    const double d2 = in.delta_sep * in.delta_sep;
    const double near = std::exp(-d2 * in.lambda * in.lambda / s2);
    const double x = std::exp(-d2 / s2);
    const double tail = (x + std::exp(-2.0 * d2 / s2)) / one_minus_gap(in.delta_sep, in.sigma);
    const double far = std::exp(-d2 * (1.0 - in.lambda) * (1.0 - in.lambda) / s2);
    const double den = near - near * tail - far;
    return den > 0.0 ? 1.0 / den : kInf;
}

double C1(const BoundInputs& in) { return std::pow(c_bar(in.f0, in.f1) + 2.0 * in.k, 1.5) / in.f_bar; }

double C2(const BoundInputs& in) { return std::pow(c_bar(in.f0, in.f1), 1.25) / in.f_bar; }

double lambda_residual(double sigma, double delta_sep, double lambda, LambdaVariant variant) {
    using boost::math::quadrature::gauss_kronrod;
    const double s2 = sigma * sigma;
    auto phi = [s2](double t) { return std::exp(-(t * t) / s2); };
    const double d = delta_sep, ld = lambda * delta_sep;
    double rhs = phi(d - ld) + phi(d + ld);
    // phi(a) is factored out so the quadrature sees an O(1) integrand; a >= 0 and the
    // shifted integrand exp(-(2au + u^2)/sigma^2) is below e^-40 past min(7 sigma, 20 sigma^2 / a).
    // The Kronrod error estimate bottoms out near 1e-16 absolute, so a tighter relative
    // tolerance only drives the recursion to full depth.
    auto integral = [&](double a, double b) {
        if (b <= a) return 0.0;
        auto shifted = [a, s2](double u) { return std::exp(-(2.0 * a * u + u * u) / s2); };
        double reach = 7.0 * sigma;
        if (a > 0.0) reach = std::min(reach, 20.0 * s2 / a);
        return phi(a) * gauss_kronrod<double, 61>::integrate(shifted, 0.0, std::min(b - a, reach), 15, 1e-12);
    };
    if (variant != LambdaVariant::three_sources) rhs += integral(d - ld, 0.5 - ld) / d;
    if (variant == LambdaVariant::full) rhs += integral(d + ld, 0.5 + ld) / d;
    return phi(ld) - rhs;
}

double solve_lambda0(const GaussianWindow& window, double delta_sep, LambdaVariant variant) {
    if (!(delta_sep > 0.0 && delta_sep <= 0.5)) throw std::invalid_argument("delta_sep must lie in (0, 1/2]");
    const double sigma = window.sigma();
    auto f = [&](double l) { return lambda_residual(sigma, delta_sep, l, variant); };
    const double lo = 1e-9, hi = 0.5 - 1e-9;
    const double flo = f(lo), fhi = f(hi);
    if (flo == 0.0) return lo;
    if (fhi == 0.0) return hi;
    if ((flo > 0.0) == (fhi > 0.0)) throw std::runtime_error("no admissible lambda0");
    const auto r = boost::math::tools::bisect(f, lo, hi, boost::math::tools::eps_tolerance<double>(52));
    const double a = f(r.first), b = f(r.second);
    return std::abs(a) <= std::abs(b) ? r.first : r.second;
}

DominanceMatrix build_dominance_matrix(const std::vector<double>& sources, const SamplingScheme& scheme,
                                       const GroupedPartition* grouped) {
    DominanceMatrix out;
    if (grouped) {
        for (const auto& g : grouped->groups) out.points.push_back(g.representative);
    } else {
        out.points = sources;
    }
    const std::size_t k = out.points.size();
    const auto& s = scheme.samples();
    const auto& win = scheme.window();
    const double sep = k ? min_separation(out.points) : 1.0;

    for (double t : out.points) {
        std::size_t best = 0;
        for (std::size_t j = 1; j < s.size(); ++j)
            if (std::abs(t - s[j]) < std::abs(t - s[best])) best = j;
        out.nearest.push_back(best);
        out.proximity = std::max(out.proximity, std::abs(t - s[best]) / sep);
    }

    out.A.resize(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k));
    double min_margin = kInf;
    for (std::size_t j = 0; j < k; ++j) {
        const double sj = s[out.nearest[j]];
        double off = 0.0;
        for (std::size_t i = 0; i < k; ++i) {
            const double v = std::abs(win(out.points[i] - sj));
            out.A(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = i == j ? v : -v;
            if (i != j) off += v;
        }
        const double margin = std::abs(win(out.points[j] - sj)) - off;
        out.margins.push_back(margin);
        min_margin = std::min(min_margin, margin);
    }
    out.dominant = k > 0 && min_margin > 0.0;
    out.varah_bound = out.dominant ? 1.0 / min_margin : kInf;
    return out;
}

double inverse_inf_norm(const Eigen::MatrixXd& A) {
    const Eigen::MatrixXd inv = A.fullPivLu().inverse();
    return inv.cwiseAbs().rowwise().sum().maxCoeff();
}

Eigen::MatrixXd block_matrix_b(const std::vector<double>& sources, double sigma) {
    const GaussianWindow g(sigma);
    const auto k = static_cast<Eigen::Index>(sources.size());
    Eigen::MatrixXd B(2 * k, 2 * k);
    for (Eigen::Index i = 0; i < k; ++i) {
        for (Eigen::Index u = 0; u < k; ++u) {
            const double t = sources[static_cast<std::size_t>(i)] - sources[static_cast<std::size_t>(u)];
            B(2 * i, 2 * u) = g(t, 0);
            B(2 * i, 2 * u + 1) = -g(t, 1);
            B(2 * i + 1, 2 * u) = g(t, 1);
            B(2 * i + 1, 2 * u + 1) = -g(t, 2);
        }
    }
    return B;
}

GershgorinReport gershgorin_floor(const std::vector<double>& sources, double sigma) {
    GershgorinReport out;
    const double sep = min_separation(sources);
    out.floor = f_min(sep, sigma);
    out.hypotheses = sigma <= std::sqrt(2.0) && sep > sigma * std::sqrt(std::log(3.0 + 4.0 / (sigma * sigma))) &&
                     out.floor > 0.0 && out.floor < 1.0;
    out.B = block_matrix_b(sources, sigma);
    const Eigen::Index n = out.B.rows();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(out.B, Eigen::EigenvaluesOnly);
    out.lambda_min = eig.eigenvalues().minCoeff();
    const Eigen::LLT<Eigen::MatrixXd> llt(out.B - out.floor * Eigen::MatrixXd::Identity(n, n));
    out.factorization_ok = llt.info() == Eigen::Success;
    return out;
}

DetEnvelope det_perturbation_envelope(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, double eps) {
    if (A.rows() != A.cols() || B.rows() != A.rows() || B.cols() != A.cols())
        throw std::invalid_argument("A and B must be square and of equal size");
    DetEnvelope out;
    out.det_a = A.determinant();
    if (!(out.det_a > 0.0)) throw std::invalid_argument("det(A) must be positive");
    const double m = static_cast<double>(A.rows());
    const Eigen::JacobiSVD<Eigen::MatrixXd> svd(A);
    const double inv_norm = 1.0 / svd.singularValues()(A.rows() - 1);
    out.rho_hat = inv_norm * B.norm();
    const double w = 17.0 * std::sqrt(std::exp(1.0)) / 8.0 * m * eps * out.rho_hat;
    out.lo = out.det_a * (1.0 - w);
    out.hi = out.det_a * (1.0 + w);
    out.coarse_lo = out.det_a * (1.0 - std::sqrt(std::exp(1.0)) / 2.0);
    out.coarse_hi = out.det_a * (1.0 + std::sqrt(std::exp(1.0)) / 2.0);
    out.eps_cap = out.rho_hat > 0.0 ? 8.0 / (34.0 * m * out.rho_hat) : kInf;
    out.admissible = eps >= 0.0 && eps <= out.eps_cap;
    return out;
}

BoundReport compute_bounds(const BoundInputs& in, const std::vector<double>* sources,
                           const SamplingScheme* scheme) {
    BoundReport r;
    r.inputs = in;
    r.F_min = f_min(in.delta_sep, in.sigma);
    r.F_max = f_max(in.delta_sep, in.sigma);
    r.C_bar = c_bar(in.f0, in.f1);
    r.P_value = p_poly(in.sigma);
    r.f_min_valid = f_min_in_range(in.delta_sep, in.sigma);
    r.eta_max = eta_max_branches(in.k, in.delta_sep, in.sigma, in.f0, in.f1);
    r.eta_valid = r.f_min_valid && in.eta > 0.0 && in.eta <= r.eta_max.value;
    r.b_norm = b_norm_bounds(in);
    r.F1 = F1(in);
    r.F2 = F2(in);
    r.F3 = F3(in);
    r.log10_F1 = log10_F1(in);
    r.log10_F2 = log10_F2(in);
    r.C1 = C1(in);
    r.C2 = C2(in);
    r.f3_valid = std::isfinite(r.F3);
    try {
        r.lambda0 = solve_lambda0(GaussianWindow(in.sigma), in.delta_sep);
        r.lambda0_valid = true;
    } catch (const std::exception&) {
        r.lambda0_valid = false;
    }
    r.lambda_valid = r.lambda0_valid && in.lambda < std::min(r.lambda0, in.lambda_threshold);
    r.gershgorin_floor = r.F_min;
    if (sources && !sources->empty()) {
        const auto gr = gershgorin_floor(*sources, in.sigma);
        r.gershgorin_valid = gr.hypotheses && gr.factorization_ok;
        if (scheme) {
            const auto dm = build_dominance_matrix(*sources, *scheme);
            r.varah_bound = dm.varah_bound;
            r.varah_valid = dm.dominant;
        }
    }
    return r;
}

std::string bound_report_json(const BoundReport& r) {
    nlohmann::json j;
    const auto& in = r.inputs;
    j["inputs"] = {{"k", in.k},          {"delta_sep", in.delta_sep}, {"sigma", in.sigma},
                   {"epsilon", in.epsilon}, {"eta", in.eta},          {"lambda", in.lambda},
                   {"f0", in.f0},        {"f1", in.f1},               {"f_bar", in.f_bar},
                   {"lambda_threshold", in.lambda_threshold}};
    auto num = [](double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); };
    j["F_min"] = num(r.F_min);
    j["F_max"] = num(r.F_max);
    j["C_bar"] = num(r.C_bar);
    j["P"] = num(r.P_value);
    j["eta_max"] = {{"value", num(r.eta_max.value)},
                    {"branch_fmin", num(r.eta_max.branch_fmin)},
                    {"branch_cbar", num(r.eta_max.branch_cbar)}};
    j["b_norm_bound"] = num(r.b_norm.b);
    j["b_pi_norm_bound"] = num(r.b_norm.b_pi);
    j["log10_b_norm_bound"] = num(r.b_norm.log10_b);
    j["log10_b_pi_norm_bound"] = num(r.b_norm.log10_b_pi);
    j["growth_ratio"] = num(r.b_norm.ratio);
    j["F1"] = num(r.F1);
    j["F2"] = num(r.F2);
    j["F3"] = num(r.F3);
    j["log10_F1"] = num(r.log10_F1);
    j["log10_F2"] = num(r.log10_F2);
    j["C1"] = num(r.C1);
    j["C2"] = num(r.C2);
    j["lambda0"] = num(r.lambda0);
    j["varah_bound"] = num(r.varah_bound);
    j["gershgorin_floor"] = num(r.gershgorin_floor);
    j["valid"] = {{"F_min", r.f_min_valid},       {"eta", r.eta_valid},       {"b_norm", r.b_norm.valid},
                  {"F3", r.f3_valid},             {"lambda0", r.lambda0_valid}, {"lambda", r.lambda_valid},
                  {"varah", r.varah_valid},       {"gershgorin", r.gershgorin_valid}};
    return j.dump(2);
}

std::string bound_report_csv_header() {
    return "k,delta_sep,sigma,epsilon,eta,lambda,f0,f1,f_bar,F_min,F_max,C_bar,P,eta_max,log10_b_norm_bound,"
           "log10_b_pi_norm_bound,log10_F1,log10_F2,F3,C1,C2,lambda0,varah_bound,eta_valid,lambda_valid";
}

std::string bound_report_csv_row(const BoundReport& r) {
    std::ostringstream os;
    os.precision(17);
    const auto& in = r.inputs;
    os << in.k << ',' << in.delta_sep << ',' << in.sigma << ',' << in.epsilon << ',' << in.eta << ',' << in.lambda
       << ',' << in.f0 << ',' << in.f1 << ',' << in.f_bar << ',' << r.F_min << ',' << r.F_max << ',' << r.C_bar
       << ',' << r.P_value << ',' << r.eta_max.value << ',' << r.b_norm.log10_b << ',' << r.b_norm.log10_b_pi
       << ',' << r.log10_F1 << ',' << r.log10_F2 << ',' << r.F3 << ',' << r.C1 << ',' << r.C2 << ','
       << r.lambda0 << ',' << r.varah_bound << ',' << r.eta_valid << ',' << r.lambda_valid;
    return os.str();
}

}  // namespace nnsr
