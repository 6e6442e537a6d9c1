#include "subtail/trainer.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <numeric>
#include <thread>

namespace subtail {

std::string_view to_string(ReweightMode mode) {
    switch (mode) {
        case ReweightMode::none: return "none";
        case ReweightMode::class_distance: return "class";
        case ReweightMode::subcluster: return "sub";
        case ReweightMode::combined: return "combined";
        case ReweightMode::inverse_frequency: return "inverse-frequency";
    }
    return "none";
}

ReweightMode parse_reweight_mode(std::string_view name) {
    for (auto m : {ReweightMode::none, ReweightMode::class_distance, ReweightMode::subcluster,
                   ReweightMode::combined, ReweightMode::inverse_frequency}) {
        if (to_string(m) == name) return m;
    }
    throw data_error("unknown reweight mode '" + std::string(name) + "'");
}

void TrainConfig::validate() const {
    if (epochs < 1) throw data_error("epochs must be >= 1");
    if (warmup_epochs < 0 || warmup_epochs >= epochs) throw data_error("warm-up epochs must be in [0, epochs)");
    if (update_interval < 1) throw data_error("update interval must be >= 1");
    if (batch_size < 1) throw data_error("batch size must be >= 1");
    if (hidden_dim < 1 || embedding_dim < 1) throw data_error("layer sizes must be >= 1");
    if (!(encoder_lr > 0.0) || !(classifier_lr > 0.0)) throw data_error("learning rates must be positive");
    cluster.validate();
    contrastive.validate();
    if (!(augment_sigma >= 0.0)) throw data_error("augmentation sigma must be nonnegative");
    if (!(augment_dropout >= 0.0 && augment_dropout < 1.0)) throw data_error("dropout must be in [0, 1)");
}

bool TrainConfig::is_update_epoch(int epoch) const {
    if (epoch <= warmup_epochs) return false;
    if (epoch == warmup_epochs + 1) return true;
    return dynamic && (epoch - warmup_epochs) % update_interval == 0;
}

namespace {

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (salt + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

template <typename Params>
void add_into(Params& acc, const Params& g) {
    auto dst = acc.blocks();
    auto src = g.blocks();
    for (std::size_t b = 0; b < dst.size(); ++b) {
        for (std::size_t k = 0; k < dst[b].size(); ++k) dst[b][k] += src[b][k];
    }
}

std::vector<double> select_weights(ReweightMode mode, const DistanceReport& report) {
    switch (mode) {
        case ReweightMode::class_distance: return report.w_class;
        case ReweightMode::subcluster: return report.w_sub;
        case ReweightMode::combined: return report.w_final;
        default: break;
    }
    throw std::logic_error("mode does not use distance weights");
}

bool uses_distances(ReweightMode mode) {
    return mode == ReweightMode::class_distance || mode == ReweightMode::subcluster ||
           mode == ReweightMode::combined;
}

}  // namespace

TrainResult train(const Dataset& train_set, const TrainConfig& config, const EpochObserver& observer) {
    config.validate();
    const std::size_t n = train_set.size();
    const int k = train_set.num_classes();
    if (n == 0) throw data_error("empty training set");
    for (int c = 0; c < k; ++c) {
        if (train_set.class_counts[static_cast<std::size_t>(c)] == 0) {
            throw data_error("class " + std::to_string(c) + " has no training samples");
        }
    }

    RandomSource init_rng(config.seed, "init");
    RandomSource batch_rng(config.seed, "batch");
    RandomSource augment_rng(config.seed, "augment");

    TrainResult result;
    auto& model = result.model;
    model.encoder = init_encoder(train_set.dim(), static_cast<std::size_t>(config.hidden_dim),
                                 static_cast<std::size_t>(config.embedding_dim), init_rng);
    model.classifier = init_classifier(static_cast<std::size_t>(config.embedding_dim),
                                       static_cast<std::size_t>(k), init_rng);
    result.initial = model;

    AdamState encoder_opt;
    encoder_opt.learning_rate = config.encoder_lr;
    AdamState classifier_opt;
    classifier_opt.learning_rate = config.classifier_lr;

    std::vector<double> weights(static_cast<std::size_t>(k), 1.0);
    if (config.reweight_mode == ReweightMode::inverse_frequency) {
        weights = inverse_frequency_weights(train_set.class_counts);
    }
    std::optional<SubclusterAssignment> clusters;
    bool retry_pending = false;

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});

    for (int epoch = 1; epoch <= config.epochs; ++epoch) {
        EpochRecord record;
        record.epoch = epoch;
        record.warmup = epoch <= config.warmup_epochs;

        if (!record.warmup && (config.is_update_epoch(epoch) || retry_pending)) {
            record.reclustered = true;
            const Matrix embeddings = encode(model.encoder, train_set.features).embeddings;
            ClusterConfig cc = config.cluster;
            cc.seed = mix_seed(config.seed ^ config.cluster.seed, static_cast<std::uint64_t>(epoch));
            clusters = subcluster_all(embeddings, train_set.labels, k, cc);
            if (uses_distances(config.reweight_mode)) {
                try {
                    auto report = compute_distance_report(embeddings, train_set.labels, k, *clusters);
                    weights = select_weights(config.reweight_mode, report);
                    result.snapshots.push_back({epoch, std::move(report)});
                    retry_pending = false;
                } catch (const Error& e) {
                    if (e.kind() != ErrorKind::numerical) throw;
                    if (retry_pending) {
                        throw numerical_error("weight update failed twice in a row at epoch " +
                                              std::to_string(epoch) + ": " + e.what());
                    }
                    retry_pending = true;
                }
            }
        }

        batch_rng.shuffle(order);
        double contrastive_sum = 0.0;
        double ce_sum = 0.0;
        for (std::size_t start = 0; start < n; start += static_cast<std::size_t>(config.batch_size)) {
            const std::size_t stop = std::min(n, start + static_cast<std::size_t>(config.batch_size));
            std::span<const std::size_t> idx(order.data() + start, stop - start);

            const Matrix x = train_set.features.gather_rows(idx);
            const Matrix x_aug = augment_view(x, config.augment_sigma, config.augment_dropout, augment_rng);
            auto anchors = encode(model.encoder, x);
            auto augmented = encode(model.encoder, x_aug);

            EmbeddingBatch batch{anchors.embeddings, augmented.embeddings, {}, {}};
            batch.labels.reserve(idx.size());
            for (std::size_t i : idx) batch.labels.push_back(train_set.labels[i]);

            ContrastiveLoss loss;
            if (record.warmup) {
                loss = scl_loss(batch, config.contrastive);
            } else {
                batch.cluster_ids.reserve(idx.size());
                for (std::size_t i : idx) batch.cluster_ids.push_back(clusters->global_cluster[i]);
                loss = subcluster_loss(batch, config.contrastive);
            }
            contrastive_sum += loss.value;

            auto encoder_grad = encoder_backward(model.encoder, anchors.cache, loss.grad_anchors);
            add_into(encoder_grad, encoder_backward(model.encoder, augmented.cache, loss.grad_augmented));
            optimizer_step(encoder_opt, model.encoder, encoder_grad);

            if (!record.warmup) {
                // the classifier sees the embeddings as constants
                const Matrix logits = classify(model.classifier, anchors.embeddings);
                auto ce = weighted_cross_entropy(logits, batch.labels, weights);
                ce_sum += ce.value * static_cast<double>(idx.size());
                auto grads = classifier_backward(model.classifier, anchors.embeddings, ce.gradient);
                optimizer_step(classifier_opt, model.classifier, grads.params);
            }
        }

        record.contrastive_loss = contrastive_sum / static_cast<double>(n);
        if (!record.warmup) {
            record.classification_loss = ce_sum / static_cast<double>(n);
            record.weights = weights;
        }
        if (clusters) record.cluster_counts = clusters->cluster_counts();
        if (!std::isfinite(record.contrastive_loss) || !std::isfinite(record.classification_loss)) {
            throw numerical_error("diverged at epoch " + std::to_string(epoch));
        }
        if (observer) observer(record);
        result.epochs.push_back(std::move(record));
    }
    return result;
}

std::vector<int> predict(const TrainedModel& model, const Matrix& features) {
    const Matrix logits = classify(model.classifier, encode(model.encoder, features).embeddings);
    std::vector<int> out(logits.rows());
    for (std::size_t i = 0; i < logits.rows(); ++i) {
        auto row = logits.row(i);
        out[i] = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
    }
    return out;
}

EvalReport evaluate_confusion(const ConfusionMatrix& cm) {
    EvalReport r;
    r.confusion = cm;
    r.balanced_accuracy = balanced_accuracy(cm);
    r.balanced_f1 = balanced_f1(cm);
    for (int c = 0; c < cm.num_classes(); ++c) {
        r.recall.push_back(recall(cm, c));
        r.balanced_precision.push_back(balanced_precision(cm, c));
    }
    return r;
}

EvalReport evaluate(const TrainedModel& model, const Dataset& split) {
    if (split.size() == 0) throw data_error("cannot evaluate an empty split");
    const auto predicted = predict(model, split.features);
    return evaluate_confusion(ConfusionMatrix::from_predictions(split.labels, predicted, split.num_classes()));
}

std::string AblationRow::label() const {
    std::string s = warmup ? "warmup" : "no-warmup";
    s += dynamic ? "/dynamic/" : "/static/";
    s += to_string(mode);
    return s;
}

std::vector<AblationRow> run_ablation_suite(const Dataset& train_set, const Dataset& eval_set,
                                            const TrainConfig& base, int threads) {
    base.validate();
    std::vector<AblationRow> rows;
    for (bool warmup : {true, false}) {
        for (bool dynamic : {true, false}) {
            for (auto mode : {ReweightMode::none, ReweightMode::combined, ReweightMode::class_distance,
                              ReweightMode::subcluster}) {
                rows.push_back({warmup, dynamic, mode, 0.0, 0.0});
            }
        }
    }

    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        for (std::size_t i = next++; i < rows.size(); i = next++) {
            try {
                TrainConfig cfg = base;
                cfg.warmup_epochs = rows[i].warmup ? base.warmup_epochs : 0;
                cfg.dynamic = rows[i].dynamic;
                cfg.reweight_mode = rows[i].mode;
                const auto trained = train(train_set, cfg);
                const auto report = evaluate(trained.model, eval_set);
                rows[i].balanced_accuracy = report.balanced_accuracy;
                rows[i].balanced_f1 = report.balanced_f1;
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
            }
        }
    };
    const int workers = std::clamp(threads, 1, static_cast<int>(rows.size()));
    if (workers == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (int t = 0; t < workers; ++t) pool.emplace_back(worker);
    }
    if (failure) std::rethrow_exception(failure);
    return rows;
}

}  // namespace subtail
