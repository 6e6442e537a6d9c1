#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace subtail {

/// counts(j, k) = samples of true class j predicted as k.
class ConfusionMatrix {
public:
    explicit ConfusionMatrix(int num_classes);
    ConfusionMatrix(int num_classes, std::vector<std::int64_t> counts);

    static ConfusionMatrix from_predictions(std::span<const int> truth, std::span<const int> predicted,
                                            int num_classes);

    int num_classes() const noexcept { return k_; }
    std::int64_t operator()(int truth, int predicted) const {
        return counts_[static_cast<std::size_t>(truth * k_ + predicted)];
    }
    void add(int truth, int predicted);

    std::int64_t row_total(int truth) const;
    std::int64_t total() const;
    const std::vector<std::int64_t>& counts() const noexcept { return counts_; }

    friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;

private:
    int k_;
    std::vector<std::int64_t> counts_;
};

double recall(const ConfusionMatrix& cm, int k);

/// Mean per-class recall.
double balanced_accuracy(const ConfusionMatrix& cm);

/// Precision with false positives from class j rescaled by n_j / n_k, so the value does not
/// depend on the class mix of the evaluated split.
double balanced_precision(const ConfusionMatrix& cm, int k);

/// Macro mean of the harmonic means of recall and balanced precision.
double balanced_f1(const ConfusionMatrix& cm);

}  // namespace subtail
