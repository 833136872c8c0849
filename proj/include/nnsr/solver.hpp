#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "nnsr/measure.hpp"
#include "nnsr/window.hpp"

namespace nnsr {

// Non-negative weights on a sorted set of grid locations inside (0,1).
struct GriddedMeasure {
    std::vector<double> grid;
    Eigen::VectorXd weights;
    double spacing = 0.0;  // finest local cell width

    // One atom per nonzero cell.
    DiscreteMeasure to_discrete() const;
    double total_mass() const { return weights.sum(); }
};

double local_mass(const GriddedMeasure& z, const Interval& interval);

struct SolveReport {
    double residual = 0.0;
    double delta_prime = 0.0;
    bool feasible = false;
    int iterations = 0;
    std::size_t grid_resolution = 0;
    std::size_t active_set_size = 0;
};

struct NnlsOptions {
    double tolerance = 1e-12;
    int max_iterations = -1;  // -1: 50 * number of columns
};

struct NnlsResult {
    Eigen::VectorXd x;
    double residual = 0.0;
    int iterations = 0;
    std::size_t active = 0;
};

class NnlsError : public std::runtime_error {
public:
    NnlsError(const std::string& what, NnlsResult best) : std::runtime_error(what), best_(std::move(best)) {}
    const NnlsResult& best() const { return best_; }

private:
    NnlsResult best_;
};

// Lawson-Hanson active set: min ||A x - b||_2 subject to x >= 0.
NnlsResult nnls(const Eigen::MatrixXd& A, const Eigen::VectorXd& b, const NnlsOptions& opts = {});

// Max KKT violation of x for min 1/2 ||A x - b||^2, x >= 0.
double kkt_violation(const Eigen::MatrixXd& A, const Eigen::VectorXd& b, const Eigen::VectorXd& x);

// Uniform interior grid {i/n : 0 < i < n}, optionally shifted by offset*(1/n).
std::vector<double> uniform_grid(std::size_t resolution, double offset = 0.0);

struct Solution {
    GriddedMeasure z;
    SolveReport report;
};

Solution solve_on_grid(const Measurement& y, const SamplingScheme& scheme, std::vector<double> grid,
                       double delta_prime, const NnlsOptions& opts = {});

Solution solve_nnls(const Measurement& y, const SamplingScheme& scheme, std::size_t grid_resolution,
                    const NnlsOptions& opts = {});
Solution solve_nnls(const Measurement& y, const SamplingScheme& scheme, std::size_t grid_resolution,
                    double delta_prime, const NnlsOptions& opts = {});

// Re-solves on grids refined by 10x per level around the current support (+/- one cell).
Solution refine(const Solution& initial, const Measurement& y, const SamplingScheme& scheme, int levels,
                const NnlsOptions& opts = {});

// Clusters nonzero cells whose gaps are <= epsilon into (center of mass, total mass) spikes.
DiscreteMeasure extract_spikes(const GriddedMeasure& z, double epsilon);

struct UniquenessReport {
    bool unique = true;
    int feasible_runs = 0;
    double max_location_error = 0.0;
    double max_weight_error = 0.0;
};

// Multi-start audit: grids augmented with random candidate locations and shuffled
// column orders, each solved and refined.
UniquenessReport verify_uniqueness(const DiscreteMeasure& x, const SamplingScheme& scheme, int trials,
                                   std::uint64_t seed, std::size_t grid_resolution = 2000,
                                   int refine_levels = 2);

}  // namespace nnsr
