#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "subtail/domain.hpp"

namespace subtail {

struct ClusterConfig {
    int delta = 10;       // lower bound on the capacity
    int iterations = 10;  // outer assign/update passes
    std::uint64_t seed = 0;

    void validate() const;
};

/// Capacity-capped partition of one class.
struct ClassPartition {
    std::vector<int> assignment;  // local sample index -> cluster index
    Matrix centroids;             // unit rows, one per cluster
    std::vector<int> cluster_sizes;

    int cluster_count() const noexcept { return static_cast<int>(cluster_sizes.size()); }
};

struct SubclusterAssignment {
    int capacity = 0;
    std::vector<std::vector<std::size_t>> members;  // per class: global sample indices
    std::vector<ClassPartition> classes;            // aligned with members
    std::vector<int> local_cluster;                 // per sample: cluster index within its class
    std::vector<int> global_cluster;                // per sample: cluster id unique across classes

    int num_classes() const noexcept { return static_cast<int>(classes.size()); }
    std::vector<int> cluster_counts() const;
};

/// U = max(smallest class size, delta).
int capacity_threshold(std::span<const int> class_counts, int delta);

/// Number of clusters needed to hold n samples at capacity U.
inline int cluster_count_for(int n, int capacity) { return (n + capacity - 1) / capacity; }

/// One assignment pass: repeatedly assigns the most cosine-similar (unassigned sample, open
/// center) pair; a center closes once it holds `capacity` samples. Ties go to the lowest
/// sample index, then the lowest center index.
std::vector<int> greedy_capacity_assign(const Matrix& features, const Matrix& centers, int capacity);

/// Greedy capacity-capped spherical clustering of one class. Rows of `features` must be
/// unit length. Produces ceil(n / U) clusters, each of size at most U.
ClassPartition subcluster_class(const Matrix& features, const ClusterConfig& config, int capacity,
                                RandomSource& rng);

/// Applies the capacity threshold over all classes, then clusters each class.
SubclusterAssignment subcluster_all(const Matrix& embeddings, std::span<const int> labels,
                                    int num_classes, const ClusterConfig& config);

}  // namespace subtail
