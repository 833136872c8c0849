#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "nnsr/measure.hpp"

namespace nnsr {

// g(t) = exp(-t^2 / sigma^2)
class GaussianWindow {
public:
    explicit GaussianWindow(double sigma);

    double sigma() const { return sigma_; }
    // order 0..3; throws std::invalid_argument otherwise
    double operator()(double t, int order = 0) const;

private:
    double sigma_;
};

double g_eval(const GaussianWindow& window, double t, int order);

class SamplingScheme {
public:
    SamplingScheme(std::vector<double> samples, GaussianWindow window);

    const std::vector<double>& samples() const { return samples_; }
    const GaussianWindow& window() const { return window_; }
    double sigma() const { return window_.sigma(); }
    std::size_t size() const { return samples_.size(); }

private:
    std::vector<double> samples_;
    GaussianWindow window_;
};

struct Measurement {
    Eigen::VectorXd values;
    double noise_level = 0.0;
};

// Uniform draw from the closed l2 ball of radius delta in R^m.
Eigen::VectorXd ball_noise(std::size_t m, double delta, std::mt19937_64& rng);

Measurement sample_measure(const DiscreteMeasure& mu, const SamplingScheme& scheme,
                           const Eigen::VectorXd& noise, double delta);
Measurement sample_measure(const DiscreteMeasure& mu, const SamplingScheme& scheme, double delta,
                           std::uint64_t seed);

// entry (j, p) = g(points[p] - s_j)
Eigen::MatrixXd phi_matrix(const SamplingScheme& scheme, const std::vector<double>& points);

struct ConditionsReport {
    bool boundary_samples = false;
    bool sample_pairs = false;
    bool margins = false;
    bool width_and_separation = false;
    double eta = 0.0;
    double margin = 0.0;
    double separation = 0.0;
    double separation_threshold = 0.0;
    // smallest eta for which the pair property holds with the given samples; +inf if none
    double smallest_pair_eta = 0.0;

    bool pass() const { return boundary_samples && sample_pairs && margins && width_and_separation; }
};

ConditionsReport check_conditions(const std::vector<double>& sources, const SamplingScheme& scheme,
                                  double eta);

// Uniform grid with spacing 2*lambda0*delta_sep, first point 0, last point snapped to 1.
SamplingScheme place_samples(double delta_sep, double lambda0, const GaussianWindow& window);

// 2 sqrt(m) / (sigma sqrt(2e))
double lipschitz_constant(std::size_t m, double sigma);

std::string measurement_csv(const Measurement& y, const SamplingScheme& scheme);

}  // namespace nnsr
