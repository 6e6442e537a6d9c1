#include "subtail/reweighting.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace subtail {

namespace {

std::vector<double> normalized_reciprocals(std::span<const double> distances) {
    std::vector<double> w(distances.size());
    double total = 0.0;
    for (std::size_t c = 0; c < distances.size(); ++c) {
        if (!(distances[c] >= kMinSeparation) || !std::isfinite(distances[c])) {
            throw numerical_error("zero class separation");
        }
        w[c] = 1.0 / distances[c];
        total += w[c];
    }
    for (double& x : w) x /= total;
    return w;
}

}  // namespace

Matrix class_centroids(const Matrix& embeddings, std::span<const int> labels, int num_classes) {
    if (embeddings.rows() != labels.size()) throw data_error("embeddings and labels differ in length");
    Matrix sums(static_cast<std::size_t>(num_classes), embeddings.cols());
    std::vector<std::size_t> counts(static_cast<std::size_t>(num_classes), 0);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const int y = labels[i];
        if (y < 0 || y >= num_classes) throw data_error("label out of range: " + std::to_string(y));
        auto dst = sums.row(static_cast<std::size_t>(y));
        auto src = embeddings.row(i);
        for (std::size_t d = 0; d < dst.size(); ++d) dst[d] += src[d];
        ++counts[static_cast<std::size_t>(y)];
    }
    for (std::size_t c = 0; c < counts.size(); ++c) {
        if (counts[c] == 0) throw data_error("empty class " + std::to_string(c));
        for (double& x : sums.row(c)) x /= static_cast<double>(counts[c]);
    }
    return sums;
}

ClassDistances min_class_distances(const Matrix& centroids) {
    const std::size_t k = centroids.rows();
    if (k < 2) throw data_error("class distances need at least 2 classes");
    ClassDistances out{Matrix(k, k), std::vector<double>(k, std::numeric_limits<double>::infinity())};
    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = i + 1; j < k; ++j) {
            const double d = euclidean_distance(centroids.row(i), centroids.row(j));
            if (d < kMinSeparation) throw numerical_error("zero class separation");
            out.pairwise(i, j) = d;
            out.pairwise(j, i) = d;
            out.class_min[i] = std::min(out.class_min[i], d);
            out.class_min[j] = std::min(out.class_min[j], d);
        }
    }
    return out;
}

std::vector<double> class_weights(std::span<const double> class_min) {
    return normalized_reciprocals(class_min);
}

std::vector<Matrix> subcluster_centroids(const Matrix& embeddings, const SubclusterAssignment& assignment) {
    std::vector<Matrix> out;
    out.reserve(assignment.classes.size());
    for (std::size_t c = 0; c < assignment.classes.size(); ++c) {
        const auto& part = assignment.classes[c];
        const auto& members = assignment.members[c];
        Matrix sums(static_cast<std::size_t>(part.cluster_count()), embeddings.cols());
        for (std::size_t k = 0; k < members.size(); ++k) {
            auto dst = sums.row(static_cast<std::size_t>(part.assignment[k]));
            auto src = embeddings.row(members[k]);
            for (std::size_t d = 0; d < dst.size(); ++d) dst[d] += src[d];
        }
        for (std::size_t j = 0; j < sums.rows(); ++j) {
            for (double& x : sums.row(j)) x /= static_cast<double>(part.cluster_sizes[j]);
        }
        out.push_back(std::move(sums));
    }
    return out;
}

SubclusterDistances subcluster_weights(std::span<const Matrix> centroids_per_class) {
    const std::size_t k = centroids_per_class.size();
    if (k < 2) throw data_error("sub-cluster distances need at least 2 classes");
    SubclusterDistances out;
    out.sub_min.assign(k, std::numeric_limits<double>::infinity());
    for (std::size_t a = 0; a < k; ++a) {
        if (centroids_per_class[a].rows() == 0) {
            throw data_error("class " + std::to_string(a) + " has no sub-cluster centroid");
        }
    }
    for (std::size_t a = 0; a < k; ++a) {
        for (std::size_t b = a + 1; b < k; ++b) {
            const Matrix& ca = centroids_per_class[a];
            const Matrix& cb = centroids_per_class[b];
            for (std::size_t s = 0; s < ca.rows(); ++s) {
                for (std::size_t t = 0; t < cb.rows(); ++t) {
                    const double d = euclidean_distance(ca.row(s), cb.row(t));
                    if (d < kMinSeparation) throw numerical_error("zero sub-cluster separation");
                    out.sub_min[a] = std::min(out.sub_min[a], d);
                    out.sub_min[b] = std::min(out.sub_min[b], d);
                }
            }
        }
    }
    out.w_sub = normalized_reciprocals(out.sub_min);
    return out;
}

std::vector<double> combined_weights(std::span<const double> w_class, std::span<const double> w_sub) {
    if (w_class.size() != w_sub.size()) throw data_error("weight vectors differ in length");
    std::vector<double> out(w_class.size());
    for (std::size_t c = 0; c < out.size(); ++c) out[c] = w_class[c] + w_sub[c];
    return out;
}

std::vector<double> inverse_frequency_weights(std::span<const int> class_counts) {
    std::vector<double> out(class_counts.size());
    double total = 0.0;
    for (std::size_t c = 0; c < out.size(); ++c) {
        if (class_counts[c] < 1) throw data_error("empty class " + std::to_string(c));
        out[c] = 1.0 / class_counts[c];
        total += out[c];
    }
    for (double& x : out) x /= total;
    return out;
}

DistanceReport compute_distance_report(const Matrix& embeddings, std::span<const int> labels,
                                       int num_classes, const SubclusterAssignment& assignment) {
    DistanceReport r;
    r.class_centroids = class_centroids(embeddings, labels, num_classes);
    auto cd = min_class_distances(r.class_centroids);
    r.pairwise = std::move(cd.pairwise);
    r.class_min = std::move(cd.class_min);
    r.w_class = class_weights(r.class_min);
    auto sub = subcluster_centroids(embeddings, assignment);
    auto sd = subcluster_weights(sub);
    r.sub_min = std::move(sd.sub_min);
    r.w_sub = std::move(sd.w_sub);
    r.w_final = combined_weights(r.w_class, r.w_sub);
    return r;
}

}  // namespace subtail
