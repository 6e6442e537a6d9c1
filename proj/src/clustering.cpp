#include "subtail/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace subtail {

void ClusterConfig::validate() const {
    if (delta < 1) throw data_error("cluster delta must be >= 1");
    if (iterations < 1) throw data_error("cluster iterations must be >= 1");
}

std::vector<int> SubclusterAssignment::cluster_counts() const {
    std::vector<int> out;
    out.reserve(classes.size());
    for (const auto& p : classes) out.push_back(p.cluster_count());
    return out;
}

int capacity_threshold(std::span<const int> class_counts, int delta) {
    if (class_counts.empty()) throw data_error("capacity threshold needs at least one class");
    const int smallest = *std::min_element(class_counts.begin(), class_counts.end());
    if (smallest < 1) throw data_error("every class needs at least one sample");
    return std::max(smallest, delta);
}

namespace {

struct Candidate {
    double similarity;
    int sample;
    int center;
};

// Farthest-point seeding under cosine distance, starting from a random sample.
Matrix seed_centers(const Matrix& x, int m, RandomSource& rng) {
    const std::size_t n = x.rows();
    Matrix centers(static_cast<std::size_t>(m), x.cols());
    std::vector<double> nearest(n, std::numeric_limits<double>::infinity());
    std::size_t pick = rng.index(n);
    for (int k = 0; k < m; ++k) {
        auto src = x.row(pick);
        std::copy(src.begin(), src.end(), centers.row(static_cast<std::size_t>(k)).begin());
        for (std::size_t i = 0; i < n; ++i) {
            nearest[i] = std::min(nearest[i], 1.0 - cosine_similarity(x.row(i), src));
        }
        pick = static_cast<std::size_t>(std::max_element(nearest.begin(), nearest.end()) - nearest.begin());
    }
    return centers;
}

}  // namespace

// Sorting all pairs once yields the same extraction sequence as rescanning, because removing
// samples and closing centers never changes the similarity of the remaining pairs.
std::vector<int> greedy_capacity_assign(const Matrix& x, const Matrix& centers, int capacity) {
    const int n = static_cast<int>(x.rows());
    const int m = static_cast<int>(centers.rows());
    std::vector<Candidate> pairs;
    pairs.reserve(static_cast<std::size_t>(n) * static_cast<std::size_t>(m));
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < m; ++j) {
            pairs.push_back({cosine_similarity(x.row(static_cast<std::size_t>(i)),
                                               centers.row(static_cast<std::size_t>(j))),
                             i, j});
        }
    }
    std::sort(pairs.begin(), pairs.end(), [](const Candidate& a, const Candidate& b) {
        if (a.similarity != b.similarity) return a.similarity > b.similarity;
        if (a.sample != b.sample) return a.sample < b.sample;
        return a.center < b.center;
    });

    std::vector<int> assignment(static_cast<std::size_t>(n), -1);
    std::vector<int> sizes(static_cast<std::size_t>(m), 0);
    int remaining = n;
    for (const Candidate& c : pairs) {
        if (remaining == 0) break;
        auto& slot = assignment[static_cast<std::size_t>(c.sample)];
        auto& size = sizes[static_cast<std::size_t>(c.center)];
        if (slot >= 0 || size >= capacity) continue;
        slot = c.center;
        ++size;  // the center closes once it reaches capacity
        --remaining;
    }
    if (remaining != 0) throw std::logic_error("capacity-capped assignment left samples unassigned");
    return assignment;
}

namespace {

// Normalized member means. A center whose members cancel out keeps its previous position.
void update_centers(const Matrix& x, const std::vector<int>& assignment, Matrix& centers) {
    Matrix sums(centers.rows(), centers.cols());
    std::vector<int> counts(centers.rows(), 0);
    for (std::size_t i = 0; i < x.rows(); ++i) {
        const auto j = static_cast<std::size_t>(assignment[i]);
        auto dst = sums.row(j);
        auto src = x.row(i);
        for (std::size_t d = 0; d < dst.size(); ++d) dst[d] += src[d];
        ++counts[j];
    }
    for (std::size_t j = 0; j < centers.rows(); ++j) {
        if (counts[j] == 0) throw std::logic_error("empty cluster under a feasible capacity");
        const double n = norm(sums.row(j));
        if (!(n > 1e-12)) continue;
        auto dst = centers.row(j);
        auto src = sums.row(j);
        for (std::size_t d = 0; d < dst.size(); ++d) dst[d] = src[d] / n;
    }
}

}  // namespace

ClassPartition subcluster_class(const Matrix& features, const ClusterConfig& config, int capacity,
                                RandomSource& rng) {
    config.validate();
    const std::size_t n = features.rows();
    if (n == 0) throw data_error("cannot cluster an empty class");
    if (capacity < 1) throw data_error("cluster capacity must be >= 1");
    for (std::size_t i = 0; i < n; ++i) {
        if (std::abs(norm(features.row(i)) - 1.0) > 1e-6) {
            throw data_error("clustering requires unit-length rows (row " + std::to_string(i) + ")");
        }
    }

    const int m = cluster_count_for(static_cast<int>(n), capacity);
    ClassPartition out;
    out.centroids = seed_centers(features, m, rng);
    for (int t = 0; t < config.iterations; ++t) {
        if (t > 0) update_centers(features, out.assignment, out.centroids);
        out.assignment = greedy_capacity_assign(features, out.centroids, capacity);
    }
    update_centers(features, out.assignment, out.centroids);

    out.cluster_sizes.assign(static_cast<std::size_t>(m), 0);
    for (int a : out.assignment) ++out.cluster_sizes[static_cast<std::size_t>(a)];
    return out;
}

SubclusterAssignment subcluster_all(const Matrix& embeddings, std::span<const int> labels,
                                    int num_classes, const ClusterConfig& config) {
    config.validate();
    if (embeddings.rows() != labels.size()) throw data_error("embeddings and labels differ in length");
    if (num_classes < 1) throw data_error("need at least one class");

    SubclusterAssignment out;
    out.members.resize(static_cast<std::size_t>(num_classes));
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const int y = labels[i];
        if (y < 0 || y >= num_classes) throw data_error("label out of range: " + std::to_string(y));
        out.members[static_cast<std::size_t>(y)].push_back(i);
    }
    std::vector<int> counts;
    for (const auto& m : out.members) counts.push_back(static_cast<int>(m.size()));
    out.capacity = capacity_threshold(counts, config.delta);

    out.classes.reserve(out.members.size());
    out.local_cluster.assign(labels.size(), -1);
    out.global_cluster.assign(labels.size(), -1);
    int offset = 0;
    for (int c = 0; c < num_classes; ++c) {
        const auto& idx = out.members[static_cast<std::size_t>(c)];
        RandomSource rng(config.seed, "cluster-seed/" + std::to_string(c));
        out.classes.push_back(subcluster_class(embeddings.gather_rows(idx), config, out.capacity, rng));
        const auto& part = out.classes.back();
        for (std::size_t k = 0; k < idx.size(); ++k) {
            out.local_cluster[idx[k]] = part.assignment[k];
            out.global_cluster[idx[k]] = offset + part.assignment[k];
        }
        offset += part.cluster_count();
    }
    return out;
}

}  // namespace subtail
