#include "nnsr/measure.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace nnsr {

DiscreteMeasure::DiscreteMeasure(std::vector<double> locations, std::vector<double> weights) {
    if (locations.size() != weights.size())
        throw std::invalid_argument("locations and weights differ in length");
    std::vector<std::size_t> order(locations.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return locations[a] < locations[b]; });
    for (std::size_t idx : order) {
        double t = locations[idx];
        double a = weights[idx];
        if (!std::isfinite(t) || t <= 0.0 || t >= 1.0)
            throw std::invalid_argument("atom location outside (0,1)");
        if (!std::isfinite(a) || a <= 0.0)
            throw std::invalid_argument("atom weight must be positive");
        if (!locations_.empty() && locations_.back() == t) {
            weights_.back() += a;
        } else {
            locations_.push_back(t);
            weights_.push_back(a);
        }
    }
}

bool NeighborhoodSet::in_union(double t) const { return index_of(t) >= 0; }

int NeighborhoodSet::index_of(double t) const {
    for (std::size_t i = 0; i < intervals.size(); ++i)
        if (intervals[i].contains(t)) return static_cast<int>(i);
    return -1;
}

double tv_norm(const DiscreteMeasure& mu) {
    return std::accumulate(mu.weights().begin(), mu.weights().end(), 0.0);
}

double min_separation(const std::vector<double>& t) {
    if (t.empty()) throw std::invalid_argument("no sources");
    double best = std::min(t.front(), 1.0 - t.back());
    for (std::size_t i = 1; i < t.size(); ++i) best = std::min(best, t[i] - t[i - 1]);
    return best;
}

double min_separation(const DiscreteMeasure& mu) { return min_separation(mu.locations()); }

NeighborhoodSet neighborhoods(const std::vector<double>& t, double epsilon) {
    if (!(epsilon > 0.0)) throw std::invalid_argument("epsilon must be positive");
    NeighborhoodSet out;
    out.epsilon = epsilon;
    for (double ti : t)
        out.intervals.push_back({std::max(0.0, ti - epsilon), std::min(1.0, ti + epsilon)});
    out.disjoint = true;
    for (std::size_t i = 1; i < out.intervals.size(); ++i)
        if (out.intervals[i].lo <= out.intervals[i - 1].hi) out.disjoint = false;
    return out;
}

NeighborhoodSet neighborhoods(const DiscreteMeasure& mu, double epsilon) {
    return neighborhoods(mu.locations(), epsilon);
}

GroupedPartition group_partition(const DiscreteMeasure& mu, double epsilon) {
    if (!(epsilon > 0.0)) throw std::invalid_argument("epsilon must be positive");
    GroupedPartition out;
    out.epsilon = epsilon;
    const auto& t = mu.locations();
    const auto& a = mu.weights();
    for (std::size_t i = 0; i < t.size(); ++i) {
        // strict "< 2 eps": a gap of exactly 2 eps starts a new group
        if (out.groups.empty() || !(t[i] - t[i - 1] < 2.0 * epsilon)) out.groups.emplace_back();
        out.groups.back().members.push_back(i);
    }
    for (auto& g : out.groups) {
        double mass = 0.0, moment = 0.0;
        for (std::size_t i : g.members) {
            mass += a[i];
            moment += a[i] * t[i];
        }
        g.weight = mass;
        g.representative = moment / mass;
        g.span = {std::max(0.0, t[g.members.front()] - epsilon),
                  std::min(1.0, t[g.members.back()] + epsilon)};
    }
    return out;
}

double local_mass(const DiscreteMeasure& mu, const Interval& interval) {
    double s = 0.0;
    for (std::size_t i = 0; i < mu.size(); ++i)
        if (interval.contains(mu.locations()[i])) s += mu.weights()[i];
    return s;
}

std::string to_csv(const DiscreteMeasure& mu) {
    std::ostringstream os;
    os.precision(17);
    os << "location,weight\n";
    for (std::size_t i = 0; i < mu.size(); ++i)
        os << mu.locations()[i] << ',' << mu.weights()[i] << '\n';
    return os.str();
}

DiscreteMeasure measure_from_csv(const std::string& text) {
    std::istringstream is(text);
    std::string line;
    std::vector<double> t, a;
    while (std::getline(is, line)) {
        if (line.empty() || line.rfind("location", 0) == 0) continue;
        auto comma = line.find(',');
        if (comma == std::string::npos) throw std::invalid_argument("malformed measure line: " + line);
        t.push_back(std::stod(line.substr(0, comma)));
        a.push_back(std::stod(line.substr(comma + 1)));
    }
    return DiscreteMeasure(std::move(t), std::move(a));
}

}  // namespace nnsr
