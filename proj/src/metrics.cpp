#include "subtail/metrics.hpp"

#include <numeric>
#include <string>

#include "subtail/domain.hpp"

namespace subtail {

ConfusionMatrix::ConfusionMatrix(int num_classes)
    : k_(num_classes), counts_(static_cast<std::size_t>(num_classes) * static_cast<std::size_t>(num_classes), 0) {
    if (num_classes < 1) throw data_error("confusion matrix needs at least one class");
}

ConfusionMatrix::ConfusionMatrix(int num_classes, std::vector<std::int64_t> counts)
    : k_(num_classes), counts_(std::move(counts)) {
    if (num_classes < 1) throw data_error("confusion matrix needs at least one class");
    if (counts_.size() != static_cast<std::size_t>(k_) * static_cast<std::size_t>(k_)) {
        throw data_error("confusion matrix counts must be K*K");
    }
    for (auto c : counts_) {
        if (c < 0) throw data_error("confusion matrix counts must be nonnegative");
    }
}

ConfusionMatrix ConfusionMatrix::from_predictions(std::span<const int> truth, std::span<const int> predicted,
                                                  int num_classes) {
    if (truth.size() != predicted.size()) throw data_error("truth and predictions differ in length");
    ConfusionMatrix cm(num_classes);
    for (std::size_t i = 0; i < truth.size(); ++i) cm.add(truth[i], predicted[i]);
    return cm;
}

void ConfusionMatrix::add(int truth, int predicted) {
    if (truth < 0 || truth >= k_ || predicted < 0 || predicted >= k_) {
        throw data_error("class index out of range in confusion matrix");
    }
    ++counts_[static_cast<std::size_t>(truth * k_ + predicted)];
}

std::int64_t ConfusionMatrix::row_total(int truth) const {
    const auto begin = counts_.begin() + truth * k_;
    return std::accumulate(begin, begin + k_, std::int64_t{0});
}

std::int64_t ConfusionMatrix::total() const {
    return std::accumulate(counts_.begin(), counts_.end(), std::int64_t{0});
}

double recall(const ConfusionMatrix& cm, int k) {
    const auto n = cm.row_total(k);
    if (n == 0) throw data_error("class " + std::to_string(k) + " has no samples in the evaluated split");
    return static_cast<double>(cm(k, k)) / static_cast<double>(n);
}

double balanced_accuracy(const ConfusionMatrix& cm) {
    double sum = 0.0;
    for (int k = 0; k < cm.num_classes(); ++k) sum += recall(cm, k);
    return sum / cm.num_classes();
}

double balanced_precision(const ConfusionMatrix& cm, int k) {
    if (k < 0 || k >= cm.num_classes()) throw data_error("class index out of range");
    const auto nk = cm.row_total(k);
    if (nk == 0) throw data_error("class " + std::to_string(k) + " has no samples in the evaluated split");
    const double tp = static_cast<double>(cm(k, k));
    double fp = 0.0;
    for (int j = 0; j < cm.num_classes(); ++j) {
        if (j == k) continue;
        const double pi = static_cast<double>(cm.row_total(j)) / static_cast<double>(nk);
        fp += pi * static_cast<double>(cm(j, k));
    }
    const double denom = tp + fp;
    if (denom == 0.0) return 0.0;
    return tp / denom;
}

double balanced_f1(const ConfusionMatrix& cm) {
    double sum = 0.0;
    for (int k = 0; k < cm.num_classes(); ++k) {
        const double r = recall(cm, k);
        const double p = balanced_precision(cm, k);
        if (r + p > 0.0) sum += 2.0 * r * p / (r + p);
    }
    return sum / cm.num_classes();
}

}  // namespace subtail
