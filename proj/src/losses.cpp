#include "subtail/losses.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

namespace subtail {

void ContrastiveConfig::validate() const {
    if (!(tau > 0.0) || !(tau1 > 0.0) || !(tau2 > 0.0)) throw data_error("temperatures must be positive");
    if (!(beta >= 0.0)) throw data_error("beta must be nonnegative");
}

Matrix augment_view(const Matrix& features, double sigma, double dropout_p, RandomSource& rng) {
    if (!(sigma >= 0.0)) throw data_error("augmentation sigma must be nonnegative");
    if (!(dropout_p >= 0.0 && dropout_p < 1.0)) throw data_error("dropout probability must be in [0, 1)");
    Matrix out = features;
    for (double& x : out.data()) {
        const double noise = rng.normal();
        const bool drop = rng.uniform() < dropout_p;
        x = drop ? 0.0 : x + sigma * noise;
    }
    return out;
}

namespace {

// Pool indices below B address anchors; index B + i addresses the augmentation of anchor i.
class ContrastiveTerms {
public:
    explicit ContrastiveTerms(const EmbeddingBatch& batch)
        : batch_(batch),
          b_(batch.size()),
          grad_anchors_(batch.anchors.rows(), batch.anchors.cols()),
          grad_augmented_(batch.augmented.rows(), batch.augmented.cols()) {}

    std::size_t batch_size() const noexcept { return b_; }

    // scale * ( logsumexp_{a in candidates} s_ia / t - mean_{p in positives} s_ip / t )
    void add(std::size_t i, const std::vector<std::size_t>& positives,
             const std::vector<std::size_t>& candidates, double t, double scale) {
        if (positives.empty() || scale == 0.0) return;
        auto zi = batch_.anchors.row(i);

        std::vector<double> logits(candidates.size());
        double max_logit = -std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < candidates.size(); ++k) {
            logits[k] = dot(zi, view(candidates[k])) / t;
            if (!std::isfinite(logits[k])) throw numerical_error("NaN in similarities");
            max_logit = std::max(max_logit, logits[k]);
        }
        double denom = 0.0;
        for (double l : logits) denom += std::exp(l - max_logit);
        const double lse = max_logit + std::log(denom);

        double pos_mean = 0.0;
        for (std::size_t p : positives) pos_mean += dot(zi, view(p)) / t;
        pos_mean /= static_cast<double>(positives.size());
        value_ += scale * (lse - pos_mean);

        auto gi = grad_anchors_.row(i);
        for (std::size_t k = 0; k < candidates.size(); ++k) {
            const double w = scale * std::exp(logits[k] - lse) / t;
            axpy(w, view(candidates[k]), gi);
            axpy(w, zi, grad_view(candidates[k]));
        }
        const double wp = -scale / (t * static_cast<double>(positives.size()));
        for (std::size_t p : positives) {
            axpy(wp, view(p), gi);
            axpy(wp, zi, grad_view(p));
        }
    }

    ContrastiveLoss finish() && {
        return {value_, std::move(grad_anchors_), std::move(grad_augmented_)};
    }

private:
    std::span<const double> view(std::size_t k) const {
        return k < b_ ? batch_.anchors.row(k) : batch_.augmented.row(k - b_);
    }
    std::span<double> grad_view(std::size_t k) {
        return k < b_ ? grad_anchors_.row(k) : grad_augmented_.row(k - b_);
    }
    static void axpy(double a, std::span<const double> x, std::span<double> y) {
        for (std::size_t d = 0; d < y.size(); ++d) y[d] += a * x[d];
    }

    const EmbeddingBatch& batch_;
    std::size_t b_;
    double value_ = 0.0;
    Matrix grad_anchors_;
    Matrix grad_augmented_;
};

}  // namespace

ContrastiveLoss scl_loss(const EmbeddingBatch& batch, const ContrastiveConfig& config) {
    config.validate();
    batch.validate();
    ContrastiveTerms terms(batch);
    const std::size_t b = batch.size();
    std::vector<std::size_t> positives, candidates;
    for (std::size_t i = 0; i < b; ++i) {
        positives.clear();
        candidates.clear();
        for (std::size_t j = 0; j < b; ++j) {
            if (j == i) continue;
            candidates.push_back(j);
            if (batch.labels[j] == batch.labels[i]) positives.push_back(j);
        }
        candidates.push_back(b + i);
        positives.push_back(b + i);
        terms.add(i, positives, candidates, config.tau, 1.0);
    }
    return std::move(terms).finish();
}

ContrastiveLoss subcluster_loss(const EmbeddingBatch& batch, const ContrastiveConfig& config) {
    config.validate();
    batch.validate();
    const std::size_t b = batch.size();
    if (batch.cluster_ids.size() != b) throw data_error("sub-cluster loss requires cluster ids");
    for (int c : batch.cluster_ids) {
        if (c < 0) throw data_error("sub-cluster loss requires every row to have a cluster id");
    }

    ContrastiveTerms terms(batch);
    std::vector<std::size_t> same_cluster, all_candidates, other_cluster, outside_cluster;
    for (std::size_t i = 0; i < b; ++i) {
        same_cluster.clear();
        all_candidates.clear();
        other_cluster.clear();
        outside_cluster.clear();
        for (std::size_t j = 0; j < b; ++j) {
            if (j == i) continue;
            all_candidates.push_back(j);
            const bool same_class = batch.labels[j] == batch.labels[i];
            const bool in_cluster = same_class && batch.cluster_ids[j] == batch.cluster_ids[i];
            if (in_cluster) {
                same_cluster.push_back(j);
            } else {
                outside_cluster.push_back(j);
                if (same_class) other_cluster.push_back(j);
            }
        }
        all_candidates.push_back(b + i);
        same_cluster.push_back(b + i);
        // the anchor's own augmentation is not a member of M_i, so it stays in both
        // set differences of the second term
        outside_cluster.push_back(b + i);
        other_cluster.push_back(b + i);

        terms.add(i, same_cluster, all_candidates, config.tau1, 1.0);
        terms.add(i, other_cluster, outside_cluster, config.tau2, config.beta);
    }
    return std::move(terms).finish();
}

LossOutput weighted_cross_entropy(const Matrix& logits, std::span<const int> labels,
                                  std::span<const double> class_weights) {
    const std::size_t b = logits.rows();
    const std::size_t k = logits.cols();
    if (labels.size() != b) throw data_error("logits and labels differ in length");
    if (class_weights.size() != k) throw data_error("class weights do not match logit width");
    for (double w : class_weights) {
        if (!(w > 0.0) || !std::isfinite(w)) throw data_error("class weights must be positive and finite");
    }
    LossOutput out{0.0, Matrix(b, k)};
    if (b == 0) return out;
    const double inv_b = 1.0 / static_cast<double>(b);
    for (std::size_t i = 0; i < b; ++i) {
        const int y = labels[i];
        if (y < 0 || static_cast<std::size_t>(y) >= k) {
            throw data_error("label out of range: " + std::to_string(y));
        }
        auto row = logits.row(i);
        const double mx = *std::max_element(row.begin(), row.end());
        double denom = 0.0;
        for (double l : row) denom += std::exp(l - mx);
        const double lse = mx + std::log(denom);
        const double w = class_weights[static_cast<std::size_t>(y)];
        out.value += w * (lse - row[static_cast<std::size_t>(y)]) * inv_b;
        auto g = out.gradient.row(i);
        for (std::size_t c = 0; c < k; ++c) {
            const double p = std::exp(row[c] - lse);
            g[c] = w * inv_b * (p - (c == static_cast<std::size_t>(y) ? 1.0 : 0.0));
        }
    }
    if (!std::isfinite(out.value)) throw numerical_error("non-finite cross entropy");
    return out;
}

}  // namespace subtail
