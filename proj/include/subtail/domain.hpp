#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace subtail {

/// Error categories map onto the CLI exit-code contract.
enum class ErrorKind { usage, data, numerical };

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

inline Error data_error(const std::string& what) { return Error(ErrorKind::data, what); }
inline Error numerical_error(const std::string& what) { return Error(ErrorKind::numerical, what); }

/// Dense row-major matrix of doubles.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
    Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    bool empty() const noexcept { return data_.empty(); }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
    std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

    std::vector<double>& data() noexcept { return data_; }
    const std::vector<double>& data() const noexcept { return data_; }

    void fill(double v);
    bool same_shape(const Matrix& other) const noexcept {
        return rows_ == other.rows_ && cols_ == other.cols_;
    }

    /// Rows gathered in the given order.
    Matrix gather_rows(std::span<const std::size_t> indices) const;

    friend bool operator==(const Matrix&, const Matrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

double dot(std::span<const double> a, std::span<const double> b);
double norm(std::span<const double> v);

/// v / ||v||. Throws a numerical error on zero or non-finite norm.
std::vector<double> unit_normalize(std::span<const double> v);

/// Normalizes every row in place.
void normalize_rows(Matrix& m);

/// Dot product of two unit vectors, clamped to [-1, 1].
double cosine_similarity(std::span<const double> a, std::span<const double> b);

double euclidean_distance(std::span<const double> a, std::span<const double> b);

/// Labelled feature matrix. Labels are contiguous in [0, K).
struct Dataset {
    Matrix features;
    std::vector<int> labels;
    std::vector<int> class_counts;
    std::vector<std::string> ids;

    std::size_t size() const noexcept { return labels.size(); }
    std::size_t dim() const noexcept { return features.cols(); }
    int num_classes() const noexcept { return static_cast<int>(class_counts.size()); }

    /// Validates and fills class_counts. Ids default to the row index.
    static Dataset build(Matrix features, std::vector<int> labels, std::vector<std::string> ids = {},
                         int num_classes = -1);

    /// Subset preserving the class count of the parent (classes may be empty).
    Dataset subset(std::span<const std::size_t> indices) const;
};

/// Anchor / augmented embedding pair for one mini-batch.
struct EmbeddingBatch {
    Matrix anchors;
    Matrix augmented;
    std::vector<int> labels;
    std::vector<int> cluster_ids;  // -1 = unassigned

    std::size_t size() const noexcept { return labels.size(); }

    /// Checks shapes and unit-length rows (tolerance 1e-6).
    void validate() const;
};

/// Seeded generator keyed by (seed, stream label). Draws are derived from raw
/// mt19937_64 output only, so sequences do not depend on the standard library vendor.
class RandomSource {
public:
    RandomSource(std::uint64_t seed, std::string_view stream);

    std::uint64_t next_u64();
    /// Uniform in [0, 1).
    double uniform();
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    /// Standard normal (Box-Muller).
    double normal();
    /// Uniform integer in [0, n).
    std::size_t index(std::size_t n);

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = index(i);
            std::swap(v[i - 1], v[j]);
        }
    }

    std::uint64_t seed() const noexcept { return seed_; }
    const std::string& stream() const noexcept { return stream_; }

private:
    std::uint64_t seed_;
    std::string stream_;
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace subtail
