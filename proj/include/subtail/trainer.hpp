#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "subtail/clustering.hpp"
#include "subtail/domain.hpp"
#include "subtail/losses.hpp"
#include "subtail/metrics.hpp"
#include "subtail/model.hpp"
#include "subtail/reweighting.hpp"

namespace subtail {

/// Which class weights the classifier's cross entropy uses.
enum class ReweightMode {
    none,               // uniform 1
    class_distance,     // normalized reciprocal class-centroid distance
    subcluster,         // normalized reciprocal sub-cluster distance
    combined,           // sum of the two
    inverse_frequency,  // baseline comparator
};

std::string_view to_string(ReweightMode mode);
ReweightMode parse_reweight_mode(std::string_view name);

struct TrainConfig {
    int warmup_epochs = 5;
    int update_interval = 5;
    int epochs = 100;
    int batch_size = 128;
    int hidden_dim = 64;
    int embedding_dim = 32;
    double encoder_lr = 1e-3;
    double classifier_lr = 1e-3;
    double augment_sigma = 0.05;
    double augment_dropout = 0.1;
    ClusterConfig cluster;
    ContrastiveConfig contrastive;
    ReweightMode reweight_mode = ReweightMode::combined;
    bool dynamic = true;
    std::uint64_t seed = 0;

    void validate() const;

    /// True when sub-clusters and weights are recomputed at the start of `epoch` (1-based).
    /// The first post-warm-up epoch always clusters so the sub-cluster loss has labels.
    bool is_update_epoch(int epoch) const;
};

struct EpochRecord {
    int epoch = 0;
    bool warmup = false;
    bool reclustered = false;
    double contrastive_loss = 0.0;      // mean per anchor
    double classification_loss = 0.0;  // mean per sample, 0 during warm-up
    std::vector<double> weights;        // class weights in effect, empty during warm-up
    std::vector<int> cluster_counts;    // per class, empty before the first clustering

    friend bool operator==(const EpochRecord&, const EpochRecord&) = default;
};

struct WeightSnapshot {
    int epoch = 0;
    DistanceReport report;

    friend bool operator==(const WeightSnapshot&, const WeightSnapshot&) = default;
};

struct TrainedModel {
    EncoderParams encoder;
    ClassifierParams classifier;

    friend bool operator==(const TrainedModel&, const TrainedModel&) = default;
};

struct TrainResult {
    TrainedModel model;
    TrainedModel initial;
    std::vector<EpochRecord> epochs;
    std::vector<WeightSnapshot> snapshots;
};

/// Progress callback, invoked after every epoch.
using EpochObserver = std::function<void(const EpochRecord&)>;

TrainResult train(const Dataset& train_set, const TrainConfig& config, const EpochObserver& observer = {});

struct EvalReport {
    ConfusionMatrix confusion{2};
    double balanced_accuracy = 0.0;
    double balanced_f1 = 0.0;
    std::vector<double> recall;
    std::vector<double> balanced_precision;

    friend bool operator==(const EvalReport&, const EvalReport&) = default;
};

std::vector<int> predict(const TrainedModel& model, const Matrix& features);

EvalReport evaluate_confusion(const ConfusionMatrix& cm);
EvalReport evaluate(const TrainedModel& model, const Dataset& split);

struct AblationRow {
    bool warmup = true;
    bool dynamic = true;
    ReweightMode mode = ReweightMode::combined;
    double balanced_accuracy = 0.0;
    double balanced_f1 = 0.0;

    std::string label() const;
};

/// Runs {with/without warm-up} x {dynamic/static} x {none, class, sub, combined} with shared
/// seeds. Variants are trained on `train_set` and scored on `eval_set`. `threads` caps how
/// many variants run at once.
std::vector<AblationRow> run_ablation_suite(const Dataset& train_set, const Dataset& eval_set,
                                            const TrainConfig& base, int threads = 1);

}  // namespace subtail
