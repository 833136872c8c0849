#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "nnsr/certificate.hpp"
#include "nnsr/measure.hpp"
#include "nnsr/solver.hpp"

namespace nnsr {

struct PlanEntry {
    std::size_t from = 0;
    std::size_t to = 0;
    double mass = 0.0;
};

struct TransportResult {
    double distance = 0.0;
    std::vector<PlanEntry> plan;
    double dropped_left = 0.0;   // mass removed from the first measure
    double dropped_right = 0.0;  // mass removed from the second measure
};

// Equal-mass 1-D optimal transport (monotone coupling), cross-checked
// against the CDF integral. Throws std::invalid_argument("use generalized_wasserstein").
TransportResult wasserstein(const DiscreteMeasure& mu, const DiscreteMeasure& nu);

// Integral of |F_mu - F_nu| over [0,1].
double cdf_distance(const DiscreteMeasure& mu, const DiscreteMeasure& nu);

// Partial transport with unit cost for removing mass on either side, solved as
// a min-cost flow. Throws std::logic_error if complementary slackness fails.
TransportResult generalized_wasserstein(const DiscreteMeasure& mu, const DiscreteMeasure& nu);

std::string plan_csv(const TransportResult& r);

struct ResidualResult {
    DiscreteMeasure chi;
    double r_upper = 0.0;
};

// Merges the closest adjacent atoms into their weighted mean until at most
// k_target atoms remain, all 2*epsilon apart.
ResidualResult residual_heuristic(const DiscreteMeasure& x, std::size_t k_target, double epsilon);

struct ErrorDecomposition {
    std::vector<double> local_mass;    // integral of x_hat over T_{i,eps} (or the merged group interval)
    std::vector<double> target_mass;   // a_i, or the group weight
    std::vector<double> local_errors;  // |local_mass - target_mass|
    std::vector<double> h_integrals;   // signed local_mass - target_mass
    double tail_mass = 0.0;            // x_hat on the complement of T_eps
    double tail_true = 0.0;            // x_true on the complement of T_eps
    bool grouped = false;
};

ErrorDecomposition error_decomposition(const DiscreteMeasure& x_hat, const DiscreteMeasure& x_true, double epsilon,
                                       bool grouped = false);
ErrorDecomposition error_decomposition(const GriddedMeasure& x_hat, const DiscreteMeasure& x_true, double epsilon,
                                       bool grouped = false);

struct DualInequalityReport {
    double far_lhs = 0.0;        // f_bar * integral of h off T_eps
    double far_rhs = 0.0;        // 2 ||b|| delta'
    double near_lhs = 0.0;       // sum_i |integral of h over T_{i,eps}|
    double near_rhs = 0.0;       // 2 (||b|| + ||b0||) delta'
    double near_mass = 0.0;      // integral of |h| over T_eps
    double norm_b = 0.0;
    double norm_b0 = 0.0;
    std::vector<int> pi0;
    bool far_holds = false;
    bool near_holds = false;
    bool mass_dominates = false;  // near_lhs <= near_mass
};

// h = x_hat - chi. The sign-pattern certificate is built from cert's samples.
DualInequalityReport check_dual_inequality(const DiscreteMeasure& x_hat, const DiscreteMeasure& chi,
                                           const DualCertificate& cert, double delta_prime);

}  // namespace nnsr
