#include "nnsr/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

namespace nnsr {

DiscreteMeasure GriddedMeasure::to_discrete() const {
    std::vector<double> t, a;
    for (Eigen::Index i = 0; i < weights.size(); ++i) {
        if (weights(i) > 0.0) {
            t.push_back(grid[static_cast<std::size_t>(i)]);
            a.push_back(weights(i));
        }
    }
    return DiscreteMeasure(std::move(t), std::move(a));
}

double local_mass(const GriddedMeasure& z, const Interval& interval) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < z.weights.size(); ++i)
        if (interval.contains(z.grid[static_cast<std::size_t>(i)])) s += z.weights(i);
    return s;
}

NnlsResult nnls(const Eigen::MatrixXd& A, const Eigen::VectorXd& b, const NnlsOptions& opts) {
    const Eigen::Index n = A.cols();
    const int max_iter = opts.max_iterations < 0 ? static_cast<int>(50 * n) : opts.max_iterations;
    NnlsResult res;
    res.x = Eigen::VectorXd::Zero(n);
    if (n == 0) {
        res.residual = b.norm();
        return res;
    }
    const double tol = opts.tolerance * std::max(1.0, (A.transpose() * b).cwiseAbs().maxCoeff());

    std::vector<char> passive(static_cast<std::size_t>(n), 0);
    std::vector<char> skip(static_cast<std::size_t>(n), 0);
    Eigen::VectorXd& x = res.x;
    Eigen::VectorXd w = A.transpose() * (b - A * x);

    auto solve_passive = [&](std::vector<Eigen::Index>& idx) {
        idx.clear();
        for (Eigen::Index j = 0; j < n; ++j)
            if (passive[static_cast<std::size_t>(j)]) idx.push_back(j);
        Eigen::MatrixXd Ap(A.rows(), static_cast<Eigen::Index>(idx.size()));
        for (std::size_t c = 0; c < idx.size(); ++c) Ap.col(static_cast<Eigen::Index>(c)) = A.col(idx[c]);
        Eigen::VectorXd zp = Ap.colPivHouseholderQr().solve(b);
        Eigen::VectorXd z = Eigen::VectorXd::Zero(n);
        for (std::size_t c = 0; c < idx.size(); ++c) z(idx[c]) = zp(static_cast<Eigen::Index>(c));
        return z;
    };

    std::vector<Eigen::Index> idx;
    while (true) {
        // entering index: largest dual value, lowest index on exact ties
        Eigen::Index enter = -1;
        double best = tol;
        for (Eigen::Index j = 0; j < n; ++j) {
            const auto u = static_cast<std::size_t>(j);
            if (!passive[u] && !skip[u] && w(j) > best) {
                best = w(j);
                enter = j;
            }
        }
        if (enter < 0) break;
        if (++res.iterations > max_iter) {
            res.residual = (b - A * x).norm();
            throw NnlsError("nnls: iteration cap reached", res);
        }
        passive[static_cast<std::size_t>(enter)] = 1;

        bool first = true;
        bool entered = true;
        while (true) {
            Eigen::VectorXd z = solve_passive(idx);
            if (first && z(enter) <= 0.0) {
                // degenerate entry from rounding: leave x unchanged, try the next candidate
                passive[static_cast<std::size_t>(enter)] = 0;
                skip[static_cast<std::size_t>(enter)] = 1;
                entered = false;
                break;
            }
            first = false;
            bool all_pos = true;
            for (Eigen::Index j : idx) all_pos = all_pos && z(j) > 0.0;
            if (all_pos) {
                x = z;
                break;
            }
            double alpha = 1.0;
            Eigen::Index block = -1;
            for (Eigen::Index j : idx) {
                if (z(j) > 0.0) continue;
                const double a = x(j) / (x(j) - z(j));
                if (block < 0 || a < alpha) {
                    alpha = a;
                    block = j;
                }
            }
            x += alpha * (z - x);
            // the blocking coordinate reaches zero exactly in exact arithmetic
            x(block) = 0.0;
            for (Eigen::Index j : idx) {
                if (x(j) <= 0.0) {
                    x(j) = 0.0;
                    passive[static_cast<std::size_t>(j)] = 0;
                }
            }
            if (++res.iterations > max_iter) {
                res.residual = (b - A * x).norm();
                throw NnlsError("nnls: iteration cap reached", res);
            }
        }
        if (entered) std::fill(skip.begin(), skip.end(), 0);
        w = A.transpose() * (b - A * x);
    }
    res.residual = (b - A * x).norm();
    res.active = static_cast<std::size_t>((x.array() > 0.0).count());
    return res;
}

double kkt_violation(const Eigen::MatrixXd& A, const Eigen::VectorXd& b, const Eigen::VectorXd& x) {
    const Eigen::VectorXd w = A.transpose() * (b - A * x);
    double v = 0.0;
    for (Eigen::Index j = 0; j < x.size(); ++j) {
        if (x(j) < 0.0) v = std::max(v, -x(j));
        v = std::max(v, x(j) > 0.0 ? std::abs(w(j)) : std::max(0.0, w(j)));
    }
    return v;
}

std::vector<double> uniform_grid(std::size_t resolution, double offset) {
    if (resolution < 2) throw std::invalid_argument("grid resolution must be at least 2");
    std::vector<double> g;
    g.reserve(resolution);
    const double h = 1.0 / static_cast<double>(resolution);
    for (std::size_t i = 0; i <= resolution; ++i) {
        const double t = (static_cast<double>(i) + offset) * h;
        if (t > 0.0 && t < 1.0) g.push_back(t);
    }
    return g;
}

Solution solve_on_grid(const Measurement& y, const SamplingScheme& scheme, std::vector<double> grid,
                       double delta_prime, const NnlsOptions& opts) {
    Solution sol;
    const Eigen::MatrixXd A = phi_matrix(scheme, grid);
    NnlsResult r = nnls(A, y.values, opts);
    sol.z.grid = std::move(grid);
    sol.z.weights = std::move(r.x);
    sol.report.residual = r.residual;
    sol.report.delta_prime = delta_prime;
    sol.report.feasible = r.residual <= delta_prime + 1e-12;
    sol.report.iterations = r.iterations;
    sol.report.grid_resolution = sol.z.grid.size();
    sol.report.active_set_size = r.active;
    return sol;
}

Solution solve_nnls(const Measurement& y, const SamplingScheme& scheme, std::size_t grid_resolution,
                    double delta_prime, const NnlsOptions& opts) {
    Solution sol = solve_on_grid(y, scheme, uniform_grid(grid_resolution), delta_prime, opts);
    sol.z.spacing = 1.0 / static_cast<double>(grid_resolution);
    return sol;
}

Solution solve_nnls(const Measurement& y, const SamplingScheme& scheme, std::size_t grid_resolution,
                    const NnlsOptions& opts) {
    return solve_nnls(y, scheme, grid_resolution, y.noise_level, opts);
}

Solution refine(const Solution& initial, const Measurement& y, const SamplingScheme& scheme, int levels,
                const NnlsOptions& opts) {
    Solution best = initial;
    double h = initial.z.spacing > 0.0 ? initial.z.spacing : 1.0 / static_cast<double>(initial.z.grid.size() + 1);
    for (int level = 0; level < levels; ++level) {
        const double fine = h / 10.0;
        std::vector<double> pts;
        for (Eigen::Index i = 0; i < best.z.weights.size(); ++i) {
            if (best.z.weights(i) <= 0.0) continue;
            const double p = best.z.grid[static_cast<std::size_t>(i)];
            pts.push_back(p);
            for (int k = -10; k <= 10; ++k) {
                if (k == 0) continue;
                const double t = p + k * fine;
                if (t > 0.0 && t < 1.0) pts.push_back(t);
            }
        }
        if (pts.empty()) break;
        std::sort(pts.begin(), pts.end());
        std::vector<double> grid;
        for (double t : pts)
            if (grid.empty() || t - grid.back() > fine * 1e-3) grid.push_back(t);
        Solution next = solve_on_grid(y, scheme, std::move(grid), best.report.delta_prime, opts);
        next.z.spacing = fine;
        next.report.iterations += best.report.iterations;
        h = fine;
        // Residuals near machine precision tie; prefer the finer grid then.
        const double slack = 64.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, y.values.norm());
        if (next.report.residual <= best.report.residual + slack) {
            best = std::move(next);
        } else {
            best.z.spacing = fine;
        }
    }
    return best;
}

DiscreteMeasure extract_spikes(const GriddedMeasure& z, double epsilon) {
    std::vector<double> t, a;
    double mass = 0.0, moment = 0.0, last = -1.0;
    for (Eigen::Index i = 0; i < z.weights.size(); ++i) {
        const double w = z.weights(i);
        if (w <= 0.0) continue;
        const double p = z.grid[static_cast<std::size_t>(i)];
        if (mass > 0.0 && p - last > epsilon) {
            t.push_back(moment / mass);
            a.push_back(mass);
            mass = moment = 0.0;
        }
        mass += w;
        moment += w * p;
        last = p;
    }
    if (mass > 0.0) {
        t.push_back(moment / mass);
        a.push_back(mass);
    }
    return DiscreteMeasure(std::move(t), std::move(a));
}

UniquenessReport verify_uniqueness(const DiscreteMeasure& x, const SamplingScheme& scheme, int trials,
                                   std::uint64_t seed, std::size_t grid_resolution, int refine_levels) {
    UniquenessReport rep;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const Measurement y = sample_measure(x, scheme, Eigen::VectorXd::Zero(static_cast<Eigen::Index>(scheme.size())), 0.0);
    const double cluster_eps = x.empty() ? 0.01 : min_separation(x) / 4.0;

    // Start 0 is the plain grid; later starts add `grid_resolution` uniform random candidate
    // locations and shuffle the column order. Shifting the whole grid instead would move x
    // off-grid, where near-null directions of Phi admit residual-1e-15 measures that differ
    // from x by ~1e-4 in mass, which no double-precision audit can separate from x.
    const std::vector<double> base = uniform_grid(grid_resolution);
    for (int trial = 0; trial < trials; ++trial) {
        std::vector<double> grid = base;
        if (trial > 0) {
            for (std::size_t i = 0; i < grid_resolution; ++i) {
                const double t = unif(rng);
                if (t > 0.0) grid.push_back(t);
            }
            std::sort(grid.begin(), grid.end());
            grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
        }
        std::vector<std::size_t> order(grid.size());
        std::iota(order.begin(), order.end(), 0);
        if (trial > 0) std::shuffle(order.begin(), order.end(), rng);

        std::vector<double> permuted(grid.size());
        for (std::size_t c = 0; c < order.size(); ++c) permuted[c] = grid[order[c]];
        const Eigen::MatrixXd A = phi_matrix(scheme, permuted);
        NnlsResult r = nnls(A, y.values);

        Solution sol;
        sol.z.grid = grid;
        sol.z.weights = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(grid.size()));
        for (std::size_t c = 0; c < order.size(); ++c)
            sol.z.weights(static_cast<Eigen::Index>(order[c])) = r.x(static_cast<Eigen::Index>(c));
        sol.z.spacing = 1.0 / static_cast<double>(grid_resolution);
        sol.report.residual = r.residual;
        sol.report.delta_prime = 0.0;
        sol = refine(sol, y, scheme, refine_levels);
        if (sol.report.residual > 1e-8) continue;
        ++rep.feasible_runs;

        const DiscreteMeasure spikes = extract_spikes(sol.z, cluster_eps);
        if (spikes.size() != x.size()) {
            rep.unique = false;
            continue;
        }
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double dl = std::abs(spikes.locations()[i] - x.locations()[i]);
            const double dw = std::abs(spikes.weights()[i] - x.weights()[i]) / x.weights()[i];
            rep.max_location_error = std::max(rep.max_location_error, dl);
            rep.max_weight_error = std::max(rep.max_weight_error, dw);
            if (dl > 1e-3 || dw > 1e-6) rep.unique = false;
        }
    }
    if (rep.feasible_runs == 0) rep.unique = false;
    return rep;
}

}  // namespace nnsr
