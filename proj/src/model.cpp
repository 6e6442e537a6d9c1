#include "subtail/model.hpp"

#include <algorithm>

namespace subtail {

EncoderParams EncoderParams::zeros(std::size_t d, std::size_t h, std::size_t e) {
    return {Matrix(h, d), std::vector<double>(h, 0.0), Matrix(e, h), std::vector<double>(e, 0.0)};
}

std::vector<std::span<double>> EncoderParams::blocks() {
    return {w1.data(), b1, w2.data(), b2};
}

std::vector<std::span<const double>> EncoderParams::blocks() const {
    return {w1.data(), b1, w2.data(), b2};
}

ClassifierParams ClassifierParams::zeros(std::size_t e, std::size_t k) {
    return {Matrix(k, e), std::vector<double>(k, 0.0)};
}

std::vector<std::span<double>> ClassifierParams::blocks() { return {w.data(), b}; }

std::vector<std::span<const double>> ClassifierParams::blocks() const { return {w.data(), b}; }

namespace {

void glorot(Matrix& w, RandomSource& rng) {
    const double limit = std::sqrt(6.0 / static_cast<double>(w.rows() + w.cols()));
    for (double& x : w.data()) x = rng.uniform(-limit, limit);
}

// out(i, r) = sum_c in(i, c) * w(r, c) + b(r)
Matrix affine(const Matrix& in, const Matrix& w, std::span<const double> b) {
    if (in.cols() != w.cols()) throw data_error("affine layer input width mismatch");
    Matrix out(in.rows(), w.rows());
    for (std::size_t i = 0; i < in.rows(); ++i) {
        auto x = in.row(i);
        for (std::size_t r = 0; r < w.rows(); ++r) out(i, r) = dot(x, w.row(r)) + b[r];
    }
    return out;
}

// grad_w += g^T in, grad_b += column sums of g
void accumulate_affine_grads(const Matrix& in, const Matrix& g, Matrix& grad_w, std::vector<double>& grad_b) {
    for (std::size_t i = 0; i < in.rows(); ++i) {
        auto x = in.row(i);
        for (std::size_t r = 0; r < g.cols(); ++r) {
            const double gr = g(i, r);
            if (gr == 0.0) continue;
            auto wr = grad_w.row(r);
            for (std::size_t c = 0; c < x.size(); ++c) wr[c] += gr * x[c];
            grad_b[r] += gr;
        }
    }
}

// g w, the gradient with respect to the affine input
Matrix affine_input_grad(const Matrix& g, const Matrix& w) {
    Matrix out(g.rows(), w.cols());
    for (std::size_t i = 0; i < g.rows(); ++i) {
        auto o = out.row(i);
        for (std::size_t r = 0; r < w.rows(); ++r) {
            const double gr = g(i, r);
            if (gr == 0.0) continue;
            auto wr = w.row(r);
            for (std::size_t c = 0; c < o.size(); ++c) o[c] += gr * wr[c];
        }
    }
    return out;
}

}  // namespace

EncoderParams init_encoder(std::size_t d, std::size_t h, std::size_t e, RandomSource& rng) {
    auto p = EncoderParams::zeros(d, h, e);
    glorot(p.w1, rng);
    glorot(p.w2, rng);
    return p;
}

ClassifierParams init_classifier(std::size_t e, std::size_t k, RandomSource& rng) {
    auto p = ClassifierParams::zeros(e, k);
    glorot(p.w, rng);
    return p;
}

Encoded encode(const EncoderParams& params, const Matrix& features) {
    Encoded out;
    auto& cache = out.cache;
    cache.input = features;
    cache.hidden_pre = affine(features, params.w1, params.b1);
    cache.hidden = cache.hidden_pre;
    for (double& x : cache.hidden.data()) x = std::max(x, 0.0);
    cache.output_pre = affine(cache.hidden, params.w2, params.b2);
    out.embeddings = cache.output_pre;
    cache.output_norms.resize(features.rows());
    for (std::size_t i = 0; i < features.rows(); ++i) {
        const double n = norm(cache.output_pre.row(i));
        if (!(n > 0.0) || !std::isfinite(n)) throw numerical_error("degenerate embedding");
        cache.output_norms[i] = n;
        for (double& x : out.embeddings.row(i)) x /= n;
    }
    return out;
}

EncoderParams encoder_backward(const EncoderParams& params, const EncoderCache& cache,
                               const Matrix& grad_embeddings) {
    if (grad_embeddings.rows() != cache.output_pre.rows() || grad_embeddings.cols() != cache.output_pre.cols()) {
        throw data_error("embedding gradient shape does not match the forward pass");
    }
    auto grads = EncoderParams::zeros(params.input_dim(), params.hidden_dim(), params.embedding_dim());

    // through z = v / |v|: dv = (g - z (z.g)) / |v|
    Matrix grad_out(grad_embeddings.rows(), grad_embeddings.cols());
    for (std::size_t i = 0; i < grad_out.rows(); ++i) {
        const double n = cache.output_norms[i];
        auto v = cache.output_pre.row(i);
        auto g = grad_embeddings.row(i);
        const double zg = dot(v, g) / n;
        auto dst = grad_out.row(i);
        for (std::size_t c = 0; c < dst.size(); ++c) dst[c] = (g[c] - (v[c] / n) * zg) / n;
    }
    accumulate_affine_grads(cache.hidden, grad_out, grads.w2, grads.b2);

    Matrix grad_hidden = affine_input_grad(grad_out, params.w2);
    for (std::size_t k = 0; k < grad_hidden.data().size(); ++k) {
        if (cache.hidden_pre.data()[k] <= 0.0) grad_hidden.data()[k] = 0.0;
    }
    accumulate_affine_grads(cache.input, grad_hidden, grads.w1, grads.b1);
    return grads;
}

Matrix classify(const ClassifierParams& params, const Matrix& embeddings) {
    return affine(embeddings, params.w, params.b);
}

ClassifierGradients classifier_backward(const ClassifierParams& params, const Matrix& embeddings,
                                        const Matrix& grad_logits) {
    if (grad_logits.rows() != embeddings.rows() || grad_logits.cols() != params.w.rows()) {
        throw data_error("logit gradient shape mismatch");
    }
    ClassifierGradients out{ClassifierParams::zeros(params.w.cols(), params.w.rows()), Matrix()};
    accumulate_affine_grads(embeddings, grad_logits, out.params.w, out.params.b);
    out.embeddings = affine_input_grad(grad_logits, params.w);
    return out;
}

void adam_update(AdamState& state, std::vector<std::span<double>> params,
                 std::vector<std::span<const double>> grads) {
    if (params.size() != grads.size()) throw data_error("parameter and gradient block counts differ");
    for (std::size_t b = 0; b < params.size(); ++b) {
        if (params[b].size() != grads[b].size()) throw data_error("parameter and gradient shapes differ");
        for (double g : grads[b]) {
            if (!std::isfinite(g)) throw numerical_error("diverged");
        }
    }
    if (state.first.empty()) {
        for (const auto& p : params) {
            state.first.emplace_back(p.size(), 0.0);
            state.second.emplace_back(p.size(), 0.0);
        }
    } else if (state.first.size() != params.size()) {
        throw data_error("optimizer state does not match parameters");
    }

    ++state.step;
    const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
    const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
    for (std::size_t b = 0; b < params.size(); ++b) {
        auto& m = state.first[b];
        auto& v = state.second[b];
        for (std::size_t k = 0; k < params[b].size(); ++k) {
            const double g = grads[b][k];
            m[k] = state.beta1 * m[k] + (1.0 - state.beta1) * g;
            v[k] = state.beta2 * v[k] + (1.0 - state.beta2) * g * g;
            params[b][k] -= state.learning_rate * (m[k] / c1) / (std::sqrt(v[k] / c2) + state.epsilon);
        }
    }
}

}  // namespace subtail
