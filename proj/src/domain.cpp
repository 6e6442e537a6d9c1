#include "subtail/domain.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace subtail {

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_) {
        throw data_error("matrix data size does not match " + std::to_string(rows_) + "x" +
                         std::to_string(cols_));
    }
}

void Matrix::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

Matrix Matrix::gather_rows(std::span<const std::size_t> indices) const {
    Matrix out(indices.size(), cols_);
    for (std::size_t i = 0; i < indices.size(); ++i) {
        auto src = row(indices[i]);
        std::copy(src.begin(), src.end(), out.row(i).begin());
    }
    return out;
}

double dot(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) {
        throw data_error("shape mismatch: " + std::to_string(a.size()) + " vs " +
                         std::to_string(b.size()));
    }
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double norm(std::span<const double> v) { return std::sqrt(dot(v, v)); }

std::vector<double> unit_normalize(std::span<const double> v) {
    const double n = norm(v);
    if (!(n > 0.0) || !std::isfinite(n)) throw numerical_error("degenerate vector");
    std::vector<double> out(v.begin(), v.end());
    for (double& x : out) x /= n;
    return out;
}

void normalize_rows(Matrix& m) {
    for (std::size_t r = 0; r < m.rows(); ++r) {
        auto u = unit_normalize(m.row(r));
        std::copy(u.begin(), u.end(), m.row(r).begin());
    }
}

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
    return std::clamp(dot(a, b), -1.0, 1.0);
}

double euclidean_distance(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) {
        throw data_error("shape mismatch: " + std::to_string(a.size()) + " vs " +
                         std::to_string(b.size()));
    }
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return std::sqrt(s);
}

Dataset Dataset::build(Matrix features, std::vector<int> labels, std::vector<std::string> ids,
                       int num_classes) {
    if (features.rows() != labels.size()) throw data_error("feature rows and labels differ in length");
    if (features.cols() < 1) throw data_error("feature dimension must be at least 1");
    int max_label = -1;
    for (int y : labels) {
        if (y < 0) throw data_error("negative label " + std::to_string(y));
        max_label = std::max(max_label, y);
    }
    const int k = num_classes < 0 ? max_label + 1 : num_classes;
    if (max_label >= k) throw data_error("label " + std::to_string(max_label) + " out of range");
    if (k < 2) throw data_error("at least 2 classes required");

    Dataset ds;
    ds.class_counts.assign(static_cast<std::size_t>(k), 0);
    for (int y : labels) ++ds.class_counts[static_cast<std::size_t>(y)];
    for (int c = 0; c < k; ++c) {
        if (ds.class_counts[static_cast<std::size_t>(c)] == 0) throw data_error("non-contiguous labels");
    }
    if (ids.empty()) {
        ids.reserve(labels.size());
        for (std::size_t i = 0; i < labels.size(); ++i) ids.push_back(std::to_string(i));
    } else if (ids.size() != labels.size()) {
        throw data_error("ids and labels differ in length");
    }
    for (double x : features.data()) {
        if (!std::isfinite(x)) throw data_error("non-finite feature value");
    }
    ds.features = std::move(features);
    ds.labels = std::move(labels);
    ds.ids = std::move(ids);
    return ds;
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
    Dataset out;
    out.features = features.gather_rows(indices);
    out.class_counts.assign(class_counts.size(), 0);
    out.labels.reserve(indices.size());
    out.ids.reserve(indices.size());
    for (std::size_t i : indices) {
        out.labels.push_back(labels[i]);
        out.ids.push_back(ids[i]);
        ++out.class_counts[static_cast<std::size_t>(labels[i])];
    }
    return out;
}

void EmbeddingBatch::validate() const {
    if (!anchors.same_shape(augmented)) throw data_error("anchor and augmented shapes differ");
    if (anchors.rows() != labels.size()) throw data_error("batch labels do not match rows");
    if (!cluster_ids.empty() && cluster_ids.size() != labels.size()) {
        throw data_error("batch cluster ids do not match rows");
    }
    for (const Matrix* m : {&anchors, &augmented}) {
        for (std::size_t r = 0; r < m->rows(); ++r) {
            const double n = norm(m->row(r));
            if (!std::isfinite(n)) throw numerical_error("non-finite embedding");
            if (std::abs(n - 1.0) > 1e-6) throw data_error("embedding rows must be unit length");
        }
    }
}

namespace {

std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

}  // namespace

RandomSource::RandomSource(std::uint64_t seed, std::string_view stream)
    : seed_(seed), stream_(stream) {
    const std::uint64_t h = fnv1a(stream);
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(h), static_cast<std::uint32_t>(h >> 32)};
    engine_.seed(seq);
}

std::uint64_t RandomSource::next_u64() { return engine_(); }

double RandomSource::uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double RandomSource::normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    double u1 = 0.0;
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
}

std::size_t RandomSource::index(std::size_t n) {
    if (n == 0) throw data_error("cannot draw an index from an empty range");
    const std::uint64_t bound = static_cast<std::uint64_t>(n);
    // rejection keeps the draw unbiased
    const std::uint64_t limit = (~std::uint64_t{0}) - ((~std::uint64_t{0}) % bound + 1) % bound;
    std::uint64_t x = engine_();
    while (x > limit) x = engine_();
    return static_cast<std::size_t>(x % bound);
}

}  // namespace subtail
