#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace nnsr {

struct Interval {
    double lo = 0.0;
    double hi = 0.0;

    bool contains(double t) const { return t >= lo && t <= hi; }
    double width() const { return hi - lo; }
};

// Non-negative discrete measure sum_i a_i delta_{t_i} with atoms in (0,1).
class DiscreteMeasure {
public:
    DiscreteMeasure() = default;

    // Sorts atoms and merges equal locations. Throws std::invalid_argument
    // on a location outside (0,1), a non-positive weight, or a size mismatch.
    DiscreteMeasure(std::vector<double> locations, std::vector<double> weights);

    const std::vector<double>& locations() const { return locations_; }
    const std::vector<double>& weights() const { return weights_; }
    std::size_t size() const { return locations_.size(); }
    bool empty() const { return locations_.empty(); }

private:
    std::vector<double> locations_;
    std::vector<double> weights_;
};

struct NeighborhoodSet {
    std::vector<Interval> intervals;
    double epsilon = 0.0;
    bool disjoint = true;

    bool in_union(double t) const;
    // Index of the first interval containing t, or -1.
    int index_of(double t) const;
};

struct Group {
    std::vector<std::size_t> members;
    Interval span;
    double weight = 0.0;
    double representative = 0.0;
};

struct GroupedPartition {
    std::vector<Group> groups;
    double epsilon = 0.0;
};

double tv_norm(const DiscreteMeasure& mu);

// Minimum gap over the support together with the endpoints 0 and 1.
double min_separation(const DiscreteMeasure& mu);
double min_separation(const std::vector<double>& sorted_locations);

NeighborhoodSet neighborhoods(const DiscreteMeasure& mu, double epsilon);
NeighborhoodSet neighborhoods(const std::vector<double>& sorted_locations, double epsilon);

GroupedPartition group_partition(const DiscreteMeasure& mu, double epsilon);

double local_mass(const DiscreteMeasure& mu, const Interval& interval);

// One "location,weight" line per atom, 17 significant digits.
std::string to_csv(const DiscreteMeasure& mu);
DiscreteMeasure measure_from_csv(const std::string& text);

}  // namespace nnsr
