#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "nnsr/measure.hpp"
#include "nnsr/window.hpp"

namespace nnsr {

struct BoundInputs {
    int k = 1;
    double delta_sep = 0.0;
    double sigma = 0.0;
    double epsilon = 0.0;
    double eta = 0.0;
    double lambda = 0.0;
    double f0 = 1.0;
    double f1 = 1.0;
    double f_bar = 0.5;
    // hypothesis threshold on lambda for the average-stability regime
    double lambda_threshold = 0.4;
};

double f_min(double delta_sep, double sigma);
double f_max(double delta_sep, double sigma);
double c_bar(double f0, double f1);
double p_poly(double sigma);

struct EtaMax {
    double value = 0.0;
    double branch_fmin = 0.0;  // 8 F_min / (34 (2k+2) (...)^{1/2})
    double branch_cbar = 0.0;  // C^{1/6} / (4k + 4 + 4k/sigma^2)^{1/3}
};

EtaMax eta_max_branches(int k, double delta_sep, double sigma, double f0, double f1);
double eta_max(int k, double delta_sep, double sigma, double f0, double f1);

// F_max / F_min^2
double growth_ratio(double delta_sep, double sigma);

struct BNormBounds {
    double b = 0.0;
    double b_pi = 0.0;
    double log10_b = 0.0;
    double log10_b_pi = 0.0;
    double ratio = 0.0;
    bool valid = false;  // F_min in (0,1) and eta <= eta_max
};

BNormBounds b_norm_bounds(const BoundInputs& in);

double F1(const BoundInputs& in);
double F2(const BoundInputs& in);
double F3(const BoundInputs& in);
double log10_F1(const BoundInputs& in);
double log10_F2(const BoundInputs& in);
double C1(const BoundInputs& in);
double C2(const BoundInputs& in);

enum class LambdaVariant { full, three_sources, four_sources };

// phi(l D) - [phi(D - l D) + phi(D + l D) + integral terms]
double lambda_residual(double sigma, double delta_sep, double lambda, LambdaVariant variant = LambdaVariant::full);

// Root of the residual on [1e-9, 1/2 - 1e-9]. Throws std::runtime_error("no admissible lambda0").
double solve_lambda0(const GaussianWindow& window, double delta_sep, LambdaVariant variant = LambdaVariant::full);

struct DominanceMatrix {
    Eigen::MatrixXd A;
    std::vector<double> points;          // t_i, or xi_i in grouped mode
    std::vector<std::size_t> nearest;    // l(i), index into scheme samples
    std::vector<double> margins;
    double proximity = 0.0;              // max_i |t_i - s_l(i)| / Delta
    bool dominant = false;
    double varah_bound = 0.0;            // 1 / min margin, +inf when not dominant
};

DominanceMatrix build_dominance_matrix(const std::vector<double>& sources, const SamplingScheme& scheme,
                                       const GroupedPartition* grouped = nullptr);

// Exact ||A^{-1}||_inf by explicit inversion.
double inverse_inf_norm(const Eigen::MatrixXd& A);

struct GershgorinReport {
    Eigen::MatrixXd B;
    double floor = 0.0;       // F_min(Delta, 1/sigma)
    double lambda_min = 0.0;  // informational, from a symmetric eigensolver
    bool hypotheses = false;  // sigma <= sqrt 2, Delta condition, 0 < F_min < 1
    bool factorization_ok = false;
};

Eigen::MatrixXd block_matrix_b(const std::vector<double>& sources, double sigma);
GershgorinReport gershgorin_floor(const std::vector<double>& sources, double sigma);

struct DetEnvelope {
    double det_a = 0.0;
    double rho_hat = 0.0;
    double lo = 0.0;
    double hi = 0.0;
    double coarse_lo = 0.0;  // det A (1 - sqrt(e)/2)
    double coarse_hi = 0.0;  // det A (1 + sqrt(e)/2)
    double eps_cap = 0.0;    // 8 / (34 m rho_hat)
    bool admissible = false;
};

// Throws std::invalid_argument when det(A) <= 0.
DetEnvelope det_perturbation_envelope(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, double eps);

struct BoundReport {
    BoundInputs inputs;
    double F_min = 0.0;
    double F_max = 0.0;
    double C_bar = 0.0;
    double P_value = 0.0;
    EtaMax eta_max;
    BNormBounds b_norm;
    double F1 = 0.0, F2 = 0.0, F3 = 0.0;
    double log10_F1 = 0.0, log10_F2 = 0.0;
    double C1 = 0.0, C2 = 0.0;
    double lambda0 = 0.0;
    double varah_bound = 0.0;
    double gershgorin_floor = 0.0;

    bool f_min_valid = false;
    bool eta_valid = false;
    bool f3_valid = false;
    bool lambda0_valid = false;
    bool lambda_valid = false;   // inputs.lambda < min(lambda0, threshold)
    bool varah_valid = false;
    bool gershgorin_valid = false;
};

// Sources and scheme are optional; without them the Varah and Gershgorin fields stay invalid.
BoundReport compute_bounds(const BoundInputs& in, const std::vector<double>* sources = nullptr,
                           const SamplingScheme* scheme = nullptr);

std::string bound_report_json(const BoundReport& r);
std::string bound_report_csv_header();
std::string bound_report_csv_row(const BoundReport& r);

}  // namespace nnsr
