#pragma once

#include <span>

#include "subtail/domain.hpp"

namespace subtail {

struct ContrastiveConfig {
    double tau = 0.1;   // plain supervised contrastive temperature
    double tau1 = 0.1;  // same-sub-cluster term
    double tau2 = 0.1;  // same-class, other-sub-cluster term
    double beta = 1.0;  // weight of the second term

    void validate() const;
};

/// Value and gradients of a contrastive loss with respect to both embedding views.
struct ContrastiveLoss {
    double value = 0.0;
    Matrix grad_anchors;
    Matrix grad_augmented;
};

/// Value and gradient with respect to the logits.
struct LossOutput {
    double value = 0.0;
    Matrix gradient;
};

/// Input-space view generation: Gaussian jitter then independent coordinate dropout.
Matrix augment_view(const Matrix& features, double sigma, double dropout_p, RandomSource& rng);

/// Supervised contrastive loss summed over anchors. For anchor i the candidate set is every
/// other anchor plus its own augmentation; positives are same-class anchors plus its own
/// augmentation.
ContrastiveLoss scl_loss(const EmbeddingBatch& batch, const ContrastiveConfig& config);

/// Sub-cluster contrastive loss. Every row needs a cluster id; rows share a sub-cluster
/// only when both label and cluster id match.
ContrastiveLoss subcluster_loss(const EmbeddingBatch& batch, const ContrastiveConfig& config);

/// mean_i w[y_i] * -log softmax(logits_i)[y_i]
LossOutput weighted_cross_entropy(const Matrix& logits, std::span<const int> labels,
                                  std::span<const double> class_weights);

}  // namespace subtail
