#pragma once

#include <span>
#include <vector>

#include "subtail/clustering.hpp"
#include "subtail/domain.hpp"

namespace subtail {

/// Distances below this are treated as collapsed features.
inline constexpr double kMinSeparation = 1e-8;

struct ClassDistances {
    Matrix pairwise;                // K x K, zero diagonal
    std::vector<double> class_min;  // distance to the nearest other class centroid
};

struct SubclusterDistances {
    std::vector<double> sub_min;  // nearest cross-class sub-cluster centroid distance
    std::vector<double> w_sub;    // normalized reciprocals
};

struct DistanceReport {
    Matrix class_centroids;
    Matrix pairwise;
    std::vector<double> class_min;
    std::vector<double> sub_min;
    std::vector<double> w_class;
    std::vector<double> w_sub;
    std::vector<double> w_final;

    friend bool operator==(const DistanceReport&, const DistanceReport&) = default;
};

/// Plain (not re-normalized) mean embedding of each class.
Matrix class_centroids(const Matrix& embeddings, std::span<const int> labels, int num_classes);

ClassDistances min_class_distances(const Matrix& centroids);

/// Reciprocals normalized to sum 1.
std::vector<double> class_weights(std::span<const double> class_min);

/// Plain mean embedding of every sub-cluster, grouped by class.
std::vector<Matrix> subcluster_centroids(const Matrix& embeddings, const SubclusterAssignment& assignment);

/// For each class, the smallest distance between one of its sub-cluster centroids and a
/// sub-cluster centroid of any other class, plus the normalized reciprocal weights.
SubclusterDistances subcluster_weights(std::span<const Matrix> centroids_per_class);

/// Elementwise sum; sums to 2 when both inputs sum to 1.
std::vector<double> combined_weights(std::span<const double> w_class, std::span<const double> w_sub);

/// Inverse class frequency normalized to sum 1. Baseline comparator, not distance based.
std::vector<double> inverse_frequency_weights(std::span<const int> class_counts);

/// Runs the full centroid, distance and weight pipeline.
DistanceReport compute_distance_report(const Matrix& embeddings, std::span<const int> labels,
                                       int num_classes, const SubclusterAssignment& assignment);

}  // namespace subtail
