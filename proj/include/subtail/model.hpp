#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "subtail/domain.hpp"

namespace subtail {

/// One hidden rectified layer followed by an affine map and unit normalization.
struct EncoderParams {
    Matrix w1;               // h x d
    std::vector<double> b1;  // h
    Matrix w2;               // e x h
    std::vector<double> b2;  // e

    std::size_t input_dim() const noexcept { return w1.cols(); }
    std::size_t hidden_dim() const noexcept { return w1.rows(); }
    std::size_t embedding_dim() const noexcept { return w2.rows(); }

    static EncoderParams zeros(std::size_t d, std::size_t h, std::size_t e);
    std::vector<std::span<double>> blocks();
    std::vector<std::span<const double>> blocks() const;

    friend bool operator==(const EncoderParams&, const EncoderParams&) = default;
};

struct ClassifierParams {
    Matrix w;               // K x e
    std::vector<double> b;  // K

    static ClassifierParams zeros(std::size_t e, std::size_t k);
    std::vector<std::span<double>> blocks();
    std::vector<std::span<const double>> blocks() const;

    friend bool operator==(const ClassifierParams&, const ClassifierParams&) = default;
};

/// Glorot-uniform weights, zero biases.
EncoderParams init_encoder(std::size_t d, std::size_t h, std::size_t e, RandomSource& rng);
ClassifierParams init_classifier(std::size_t e, std::size_t k, RandomSource& rng);

struct EncoderCache {
    Matrix input;
    Matrix hidden_pre;
    Matrix hidden;
    Matrix output_pre;
    std::vector<double> output_norms;
};

struct Encoded {
    Matrix embeddings;  // unit rows
    EncoderCache cache;
};

Encoded encode(const EncoderParams& params, const Matrix& features);

/// Parameter gradients given the gradient with respect to the unit-normalized embeddings.
EncoderParams encoder_backward(const EncoderParams& params, const EncoderCache& cache,
                               const Matrix& grad_embeddings);

Matrix classify(const ClassifierParams& params, const Matrix& embeddings);

struct ClassifierGradients {
    ClassifierParams params;
    Matrix embeddings;
};

ClassifierGradients classifier_backward(const ClassifierParams& params, const Matrix& embeddings,
                                        const Matrix& grad_logits);

/// Bias-corrected adaptive-moment optimizer state.
struct AdamState {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    std::int64_t step = 0;
    std::vector<std::vector<double>> first;
    std::vector<std::vector<double>> second;
};

void adam_update(AdamState& state, std::vector<std::span<double>> params,
                 std::vector<std::span<const double>> grads);

template <typename Params>
void optimizer_step(AdamState& state, Params& params, const Params& grads) {
    adam_update(state, params.blocks(), grads.blocks());
}

}  // namespace subtail
