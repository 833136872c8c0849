#include "nnsr/transport.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>

namespace nnsr {

namespace {

constexpr double kBig = 1e300;

struct Edge {
    std::size_t to;
    std::size_t rev;
    double cap;
    double cost;
    double flow = 0.0;
    bool forward;
};

class MinCostFlow {
public:
    explicit MinCostFlow(std::size_t n) : graph_(n) {}

    std::pair<std::size_t, std::size_t> add_edge(std::size_t u, std::size_t v, double cap, double cost) {
        graph_[u].push_back({v, graph_[v].size(), cap, cost, 0.0, true});
        graph_[v].push_back({u, graph_[u].size() - 1, 0.0, -cost, 0.0, false});
        return {u, graph_[u].size() - 1};
    }

    // Successive shortest paths (Bellman-Ford, so negative residual arcs are fine).
    double run(std::size_t s, std::size_t t, double demand, double tol) {
        double sent = 0.0;
        const std::size_t n = graph_.size();
        while (sent < demand - tol) {
            std::vector<double> dist(n, std::numeric_limits<double>::infinity());
            std::vector<std::size_t> pv(n, n), pe(n, 0);
            dist[s] = 0.0;
            for (std::size_t it = 0; it < n; ++it) {
                bool changed = false;
                for (std::size_t u = 0; u < n; ++u) {
                    if (!std::isfinite(dist[u])) continue;
                    for (std::size_t e = 0; e < graph_[u].size(); ++e) {
                        const Edge& ed = graph_[u][e];
                        if (ed.cap - ed.flow <= tol) continue;
                        const double nd = dist[u] + ed.cost;
                        if (nd < dist[ed.to] - 1e-15) {
                            dist[ed.to] = nd;
                            pv[ed.to] = u;
                            pe[ed.to] = e;
                            changed = true;
                        }
                    }
                }
                if (!changed) break;
            }
            if (!std::isfinite(dist[t])) break;
            double push = demand - sent;
            for (std::size_t v = t; v != s; v = pv[v]) {
                const Edge& ed = graph_[pv[v]][pe[v]];
                push = std::min(push, ed.cap - ed.flow);
            }
            for (std::size_t v = t; v != s; v = pv[v]) {
                Edge& ed = graph_[pv[v]][pe[v]];
                ed.flow += push;
                graph_[v][ed.rev].flow -= push;
            }
            sent += push;
        }
        return sent;
    }

    // Max violation of reduced-cost optimality over residual arcs, with
    // potentials from a Bellman-Ford pass started at every node.
    double slackness_violation(double tol) const {
        const std::size_t n = graph_.size();
        std::vector<double> pot(n, 0.0);
        for (std::size_t it = 0; it < n; ++it) {
            bool changed = false;
            for (std::size_t u = 0; u < n; ++u)
                for (const Edge& ed : graph_[u])
                    if (ed.cap - ed.flow > tol && pot[u] + ed.cost < pot[ed.to] - 1e-13) {
                        pot[ed.to] = pot[u] + ed.cost;
                        changed = true;
                    }
            if (!changed) break;
        }
        double worst = 0.0;
        for (std::size_t u = 0; u < n; ++u)
            for (const Edge& ed : graph_[u])
                if (ed.cap - ed.flow > tol) worst = std::max(worst, -(ed.cost + pot[u] - pot[ed.to]));
        return worst;
    }

    const Edge& edge(std::pair<std::size_t, std::size_t> id) const { return graph_[id.first][id.second]; }

private:
    std::vector<std::vector<Edge>> graph_;
};

bool in_any(double t, const std::vector<Interval>& intervals) {
    return std::any_of(intervals.begin(), intervals.end(), [t](const Interval& I) { return I.contains(t); });
}

double mass_in_union(const DiscreteMeasure& mu, const std::vector<Interval>& intervals) {
    double s = 0.0;
    for (std::size_t i = 0; i < mu.size(); ++i)
        if (in_any(mu.locations()[i], intervals)) s += mu.weights()[i];
    return s;
}

}  // namespace

double cdf_distance(const DiscreteMeasure& mu, const DiscreteMeasure& nu) {
    std::vector<std::pair<double, double>> jumps;  // (location, signed weight)
    for (std::size_t i = 0; i < mu.size(); ++i) jumps.emplace_back(mu.locations()[i], mu.weights()[i]);
    for (std::size_t j = 0; j < nu.size(); ++j) jumps.emplace_back(nu.locations()[j], -nu.weights()[j]);
    std::sort(jumps.begin(), jumps.end());
    double diff = 0.0, total = 0.0;
    for (std::size_t i = 0; i < jumps.size(); ++i) {
        diff += jumps[i].second;
        const double next = i + 1 < jumps.size() ? jumps[i + 1].first : 1.0;
        total += std::abs(diff) * (next - jumps[i].first);
    }
    return total;
}

TransportResult wasserstein(const DiscreteMeasure& mu, const DiscreteMeasure& nu) {
    const double ma = tv_norm(mu), mb = tv_norm(nu);
    if (std::abs(ma - mb) > 1e-12 * std::max(1.0, ma)) throw std::invalid_argument("use generalized_wasserstein");
    TransportResult r;
    std::size_t i = 0, j = 0;
    double ra = mu.empty() ? 0.0 : mu.weights()[0];
    double rb = nu.empty() ? 0.0 : nu.weights()[0];
    while (i < mu.size() && j < nu.size()) {
        const double m = std::min(ra, rb);
        if (m > 0.0) {
            r.plan.push_back({i, j, m});
            r.distance += m * std::abs(mu.locations()[i] - nu.locations()[j]);
        }
        ra -= m;
        rb -= m;
        if (ra <= 1e-15 * std::max(1.0, ma) && ++i < mu.size()) ra = mu.weights()[i];
        if (rb <= 1e-15 * std::max(1.0, mb) && ++j < nu.size()) rb = nu.weights()[j];
        if (i >= mu.size() || j >= nu.size()) break;
    }
    const double cdf = cdf_distance(mu, nu);
    if (std::abs(cdf - r.distance) > 1e-10 * std::max(1.0, ma))
        throw std::logic_error("monotone coupling disagrees with the CDF formula");
    return r;
}

TransportResult generalized_wasserstein(const DiscreteMeasure& mu, const DiscreteMeasure& nu) {
    const std::size_t p = mu.size(), q = nu.size();
    const double ma = tv_norm(mu), mb = tv_norm(nu);
    // nodes: source, p atoms + drop row, q atoms + drop column, sink
    const std::size_t s = 0, row0 = 1, u = row0 + p, col0 = u + 1, v = col0 + q, t = v + 1;
    MinCostFlow flow(t + 1);
    for (std::size_t i = 0; i < p; ++i) flow.add_edge(s, row0 + i, mu.weights()[i], 0.0);
    flow.add_edge(s, u, mb, 0.0);
    for (std::size_t j = 0; j < q; ++j) flow.add_edge(col0 + j, t, nu.weights()[j], 0.0);
    flow.add_edge(v, t, ma, 0.0);

    std::vector<std::vector<std::pair<std::size_t, std::size_t>>> pair_edges(p);
    std::vector<std::pair<std::size_t, std::size_t>> drop_left(p), drop_right(q);
    for (std::size_t i = 0; i < p; ++i) {
        for (std::size_t j = 0; j < q; ++j)
            pair_edges[i].push_back(
                flow.add_edge(row0 + i, col0 + j, kBig, std::abs(mu.locations()[i] - nu.locations()[j])));
        drop_left[i] = flow.add_edge(row0 + i, v, kBig, 1.0);
    }
    for (std::size_t j = 0; j < q; ++j) drop_right[j] = flow.add_edge(u, col0 + j, kBig, 1.0);
    flow.add_edge(u, v, kBig, 0.0);

    const double total = ma + mb;
    const double tol = 1e-15 * std::max(1.0, total);
    const double sent = flow.run(s, t, total, tol);
    if (std::abs(sent - total) > 1e-12 * std::max(1.0, total)) throw std::logic_error("flow did not saturate");
    if (flow.slackness_violation(tol) > 1e-9) throw std::logic_error("complementary slackness violated");

    TransportResult r;
    for (std::size_t i = 0; i < p; ++i) {
        for (std::size_t j = 0; j < q; ++j) {
            const double m = flow.edge(pair_edges[i][j]).flow;
            if (m > tol) {
                r.plan.push_back({i, j, m});
                r.distance += m * std::abs(mu.locations()[i] - nu.locations()[j]);
            }
        }
        r.dropped_left += std::max(0.0, flow.edge(drop_left[i]).flow);
    }
    for (std::size_t j = 0; j < q; ++j) r.dropped_right += std::max(0.0, flow.edge(drop_right[j]).flow);
    r.distance += r.dropped_left + r.dropped_right;
    return r;
}

std::string plan_csv(const TransportResult& r) {
    std::ostringstream os;
    os.precision(17);
    os << "from,to,mass\n";
    for (const auto& e : r.plan) os << e.from << ',' << e.to << ',' << e.mass << '\n';
    return os.str();
}

ResidualResult residual_heuristic(const DiscreteMeasure& x, std::size_t k_target, double epsilon) {
    if (k_target < 1) throw std::invalid_argument("k_target must be at least 1");
    if (epsilon <= 0.0) throw std::invalid_argument("epsilon must be positive");
    if (2.0 * epsilon * static_cast<double>(k_target - 1) >= 1.0)
        throw std::invalid_argument("cannot place k_target atoms 2*epsilon apart inside (0,1)");
    std::vector<double> t = x.locations(), a = x.weights();
    auto needs_merge = [&]() {
        if (t.size() > k_target) return true;
        for (std::size_t i = 1; i < t.size(); ++i)
            if (t[i] - t[i - 1] < 2.0 * epsilon) return true;
        return false;
    };
    while (t.size() > 1 && needs_merge()) {
        std::size_t best = 1;
        for (std::size_t i = 2; i < t.size(); ++i)
            if (t[i] - t[i - 1] < t[best] - t[best - 1]) best = i;
        const double w = a[best - 1] + a[best];
        t[best - 1] = (a[best - 1] * t[best - 1] + a[best] * t[best]) / w;
        a[best - 1] = w;
        t.erase(t.begin() + static_cast<std::ptrdiff_t>(best));
        a.erase(a.begin() + static_cast<std::ptrdiff_t>(best));
    }
    ResidualResult r;
    r.chi = DiscreteMeasure(std::move(t), std::move(a));
    r.r_upper = generalized_wasserstein(x, r.chi).distance;
    return r;
}

ErrorDecomposition error_decomposition(const DiscreteMeasure& x_hat, const DiscreteMeasure& x_true, double epsilon,
                                       bool grouped) {
    ErrorDecomposition out;
    out.grouped = grouped;
    std::vector<Interval> intervals = neighborhoods(x_true, epsilon).intervals;
    std::vector<Interval> regions;
    if (grouped) {
        for (const auto& g : group_partition(x_true, epsilon).groups) {
            regions.push_back({std::max(0.0, g.span.lo - epsilon), std::min(1.0, g.span.hi + epsilon)});
            out.target_mass.push_back(g.weight);
        }
    } else {
        regions = intervals;
        out.target_mass = x_true.weights();
    }
    for (std::size_t i = 0; i < regions.size(); ++i) {
        const double m = local_mass(x_hat, regions[i]);
        out.local_mass.push_back(m);
        out.h_integrals.push_back(m - out.target_mass[i]);
        out.local_errors.push_back(std::abs(m - out.target_mass[i]));
    }
    out.tail_mass = tv_norm(x_hat) - mass_in_union(x_hat, intervals);
    out.tail_true = tv_norm(x_true) - mass_in_union(x_true, intervals);
    return out;
}

ErrorDecomposition error_decomposition(const GriddedMeasure& x_hat, const DiscreteMeasure& x_true, double epsilon,
                                       bool grouped) {
    return error_decomposition(x_hat.to_discrete(), x_true, epsilon, grouped);
}

DualInequalityReport check_dual_inequality(const DiscreteMeasure& x_hat, const DiscreteMeasure& chi,
                                           const DualCertificate& cert, double delta_prime) {
    DualInequalityReport r;
    const double eps = cert.separator.epsilon;
    const auto nb = neighborhoods(cert.sources, eps);
    r.norm_b = cert.norm();

    const double tail_h = (tv_norm(x_hat) - mass_in_union(x_hat, nb.intervals)) -
                          (tv_norm(chi) - mass_in_union(chi, nb.intervals));
    r.far_lhs = cert.separator.f_bar * tail_h;
    r.far_rhs = 2.0 * r.norm_b * delta_prime;
    r.far_holds = r.far_lhs <= r.far_rhs;

    for (const auto& I : nb.intervals) {
        const double h = local_mass(x_hat, I) - local_mass(chi, I);
        r.near_lhs += std::abs(h);
        r.pi0.push_back(h > 0.0 ? 1 : -1);
    }
    std::map<double, double> net;
    for (std::size_t i = 0; i < x_hat.size(); ++i) net[x_hat.locations()[i]] += x_hat.weights()[i];
    for (std::size_t i = 0; i < chi.size(); ++i) net[chi.locations()[i]] -= chi.weights()[i];
    for (const auto& [t, w] : net)
        if (in_any(t, nb.intervals)) r.near_mass += std::abs(w);
    r.mass_dominates = r.near_lhs <= r.near_mass + 1e-12;

    if (!cert.sources.empty()) {
        SeparatorSpec sep = cert.separator;
        sep.sign_pattern = r.pi0;
        const SamplingScheme sub(cert.samples, GaussianWindow(cert.sigma));
        r.norm_b0 = certificate_coefficients(build_minor_system(cert.sources, sub, sep)).norm();
    }
    r.near_rhs = 2.0 * (r.norm_b + r.norm_b0) * delta_prime;
    r.near_holds = r.near_lhs <= r.near_rhs;
    return r;
}

}  // namespace nnsr
