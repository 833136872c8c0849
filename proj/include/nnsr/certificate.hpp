#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "nnsr/hp.hpp"
#include "nnsr/window.hpp"

namespace nnsr {

// Separator F (no sign pattern) or F^pi (with one). f == 0 inside each T_{i,eps}.
struct SeparatorSpec {
    double f0 = 1.0;
    double f1 = 1.0;
    double f_bar = 0.5;
    double epsilon = 0.01;
    std::vector<int> sign_pattern;  // empty for F

    bool has_sign_pattern() const { return !sign_pattern.empty(); }
    // Value of the separator at t for sources T.
    double value(double t, const std::vector<double>& sources) const;
};

// Indices (into scheme.samples()) of 0, the nearest sample on each side of every
// source, and 1. Throws std::invalid_argument if they are not 2k+2 distinct samples.
std::vector<std::size_t> select_certificate_samples(const std::vector<double>& sources,
                                                    const SamplingScheme& scheme);

// The m x (m+1) system [F | G] with rows 0, (t_i, t_i') pairs, 1: column 0 holds
// the separator values and columns 1..m hold g or g' at t - s_j. Minors are
// taken along the free tau row, i.e. by deleting one column.
struct MinorSystem {
    std::vector<double> sources;
    std::vector<double> samples;
    double sigma = 0.0;
    SeparatorSpec separator;
    Eigen::MatrixXd matrix;
    std::vector<double> log_minors;  // natural log |N_{l,j}|, j = 0..m
    std::vector<int> minor_signs;

    std::size_t m() const { return samples.size(); }
    double log_denominator() const { return log_minors.front(); }
};

MinorSystem build_minor_system(const std::vector<double>& sources, const SamplingScheme& scheme,
                               const SeparatorSpec& separator);

struct DualCertificate {
    std::vector<double> b;
    std::vector<HighPrecision> b_hp;
    SeparatorSpec separator;
    std::vector<double> sources;
    std::vector<double> samples;
    double sigma = 0.0;
    // max_j |b_j(minor ratio) - b_j(LU)| / max_j |b_j(LU)|, both in double
    double route_disagreement = 0.0;

    double evaluate(double t) const;
    HighPrecision evaluate_hp(double t, int order = 0) const;
    double norm() const;
};

// b_j = (-1)^{j+1} N_{l,j+1} / N_{l,1}; cross-checked against an LU solve.
DualCertificate certificate_coefficients(const MinorSystem& system);

struct CertificateReport {
    double min_margin = 0.0;       // min over the grid of q - F
    double min_far_margin = 0.0;   // same, restricted to the complement of T_eps
    double max_interpolation_error = 0.0;  // max_i |q(t_i) - F(t_i)|
    double max_derivative_at_sources = 0.0;
    double boundary_error = 0.0;   // max(|q(0) - f0|, |q(1) - f1|)
    double q_at_zero = 0.0;
    double q_at_one = 0.0;
    std::size_t points = 0;
    bool pass = false;
};

CertificateReport verify_certificate(const DualCertificate& cert, std::size_t grid_points = 10000);

struct F0Choice {
    double f0 = 0.0;
    double epsilon_rule = 0.0;   // C_eps * f_bar / eps^2
    double c_eps = 0.0;
    double required = 0.0;       // max over T_eps^C of (f_bar - f1 q1) / q0
    double log_n_denominator = 0.0;
    double min_log_n11 = 0.0;    // min over tau in {t_i +- eps} of log N_{1,1}(tau)
    bool overridden = false;
};

F0Choice choose_f0(const std::vector<double>& sources, const SamplingScheme& scheme, double epsilon,
                   double f_bar, double f1 = 1.0, std::size_t grid_points = 10000);

// Convenience: choose f0, then build and solve the system.
DualCertificate build_certificate(const std::vector<double>& sources, const SamplingScheme& scheme,
                                  SeparatorSpec separator);

struct TSystemReport {
    int trials = 0;
    int counterexamples = 0;
    double min_log10_abs_det = 0.0;  // after equilibration
};

TSystemReport tsystem_check(const SamplingScheme& scheme, int trials, std::uint64_t seed);

struct TStarReport {
    std::vector<double> rho;
    std::vector<int> det_signs;                  // sign of det M^rho
    std::vector<std::vector<double>> log10_minors;  // [rho][column]
    std::vector<double> slopes;                  // per column
    double tau = 0.0;
    double max_slope_error = 0.0;
    bool det_positive = false;
    bool pass = false;
};

// tau defaults to the midpoint of the widest gap of {0, T, 1}.
TStarReport tstar_rate_check(const std::vector<double>& sources, const SamplingScheme& scheme,
                             const SeparatorSpec& separator, const std::vector<double>& rho_sequence,
                             std::optional<double> tau = std::nullopt);

std::string certificate_json(const DualCertificate& cert);
std::string certificate_curve_csv(const DualCertificate& cert, std::size_t points);

}  // namespace nnsr
