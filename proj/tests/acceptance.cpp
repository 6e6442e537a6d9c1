// Acceptance suite: one PASS/FAIL line per criterion. Exit status is nonzero if any fails.
// Usage: subtail_acceptance [criterion numbers...]

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <numeric>
#include <set>
#include <string>

#include "oracles.hpp"
#include "subtail/data_io.hpp"

using namespace subtail;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;
};

double sum(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0); }

EmbeddingBatch random_batch(RandomSource& rng, bool with_clusters) {
    const std::size_t b = 1 + rng.index(8);
    const std::size_t e = 1 + rng.index(6);
    EmbeddingBatch batch{oracle::random_unit_rows(b, e, rng), oracle::random_unit_rows(b, e, rng), {}, {}};
    const std::size_t k = 1 + rng.index(3);
    for (std::size_t i = 0; i < b; ++i) {
        const int y = static_cast<int>(rng.index(k));
        batch.labels.push_back(y);
        if (with_clusters) batch.cluster_ids.push_back(y * 10 + static_cast<int>(rng.index(3)));
    }
    return batch;
}

// 1. Directional comparison on the long-tailed synthetic benchmark.
Outcome benchmark() {
    SyntheticSpec spec;  // K=10, d=32, n_max=2000, R=65.78
    const std::vector<int> holdout(static_cast<std::size_t>(spec.num_classes), 200);
    double full = 0.0, none = 0.0, frozen = 0.0;
    const int seeds = 5;
    for (int s = 0; s < seeds; ++s) {
        spec.seed = 100 + static_cast<std::uint64_t>(s);
        const auto train_set = generate_synthetic(spec);
        const auto test_set = sample_synthetic(spec, holdout, "holdout");
        auto run = [&](ReweightMode mode, bool dynamic) {
            TrainConfig cfg;
            cfg.seed = static_cast<std::uint64_t>(s);
            cfg.reweight_mode = mode;
            cfg.dynamic = dynamic;
            return evaluate(train(train_set, cfg).model, test_set).balanced_accuracy;
        };
        const double f = run(ReweightMode::combined, true);
        const double n = run(ReweightMode::none, true);
        const double st = run(ReweightMode::combined, false);
        std::printf("    seed %d: full %.4f  none %.4f  static %.4f\n", s, f, n, st);
        std::fflush(stdout);
        full += f / seeds;
        none += n / seeds;
        frozen += st / seeds;
    }
    char buf[160];
    std::snprintf(buf, sizeof buf, "mean BA full %.4f vs none %.4f, static %.4f", full, none, frozen);
    return {full > none && full > frozen, buf};
}

// 2. Losses against the set-literal evaluator.
Outcome loss_oracle() {
    RandomSource rng(2, "acceptance");
    double worst = 0.0;
    for (int t = 0; t < 100; ++t) {
        auto b = random_batch(rng, true);
        ContrastiveConfig cfg{0.05 + rng.uniform(), 0.05 + rng.uniform(), 0.05 + rng.uniform(), rng.uniform(0, 2)};
        worst = std::max(worst, std::abs(scl_loss(b, cfg).value - oracle::scl_brute(b.anchors, b.augmented, b.labels, cfg.tau)));
        worst = std::max(worst, std::abs(subcluster_loss(b, cfg).value -
                                         oracle::subcluster_brute(b.anchors, b.augmented, b.labels, b.cluster_ids,
                                                                  cfg.tau1, cfg.tau2, cfg.beta)));
    }
    char buf[80];
    std::snprintf(buf, sizeof buf, "max abs error %.2e", worst);
    return {worst <= 1e-10, buf};
}

template <typename Params>
double params_error(Params& params, const Params& analytic, const std::function<double()>& f) {
    auto blocks = params.blocks();
    auto grads = analytic.blocks();
    double worst = 0.0;
    for (std::size_t b = 0; b < blocks.size(); ++b) {
        std::vector<double> copy(blocks[b].begin(), blocks[b].end());
        auto fd = oracle::finite_difference(copy, [&] {
            std::copy(copy.begin(), copy.end(), blocks[b].begin());
            return f();
        });
        std::copy(copy.begin(), copy.end(), blocks[b].begin());
        worst = std::max(worst, oracle::max_relative_error({grads[b].begin(), grads[b].end()}, fd));
    }
    return worst;
}

// 3. Analytic gradients against central differences.
Outcome gradients() {
    double worst = 0.0;
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        RandomSource rng(seed, "acceptance-grad");
        auto b = random_batch(rng, true);
        const ContrastiveConfig cfg{0.3 + rng.uniform(), 0.3 + rng.uniform(), 0.3 + rng.uniform(), rng.uniform(0, 2)};

        for (bool sub : {false, true}) {
            auto value = [&] {
                return sub ? oracle::subcluster_brute(b.anchors, b.augmented, b.labels, b.cluster_ids, cfg.tau1,
                                                      cfg.tau2, cfg.beta)
                           : oracle::scl_brute(b.anchors, b.augmented, b.labels, cfg.tau);
            };
            auto g = sub ? subcluster_loss(b, cfg) : scl_loss(b, cfg);
            worst = std::max(worst, oracle::max_relative_error(g.grad_anchors.data(),
                                                               oracle::finite_difference(b.anchors.data(), value)));
            worst = std::max(worst, oracle::max_relative_error(g.grad_augmented.data(),
                                                               oracle::finite_difference(b.augmented.data(), value)));
        }

        // weighted cross entropy through the classifier and encoder
        const std::size_t n = 2 + rng.index(6), d = 1 + rng.index(5), h = 2 + rng.index(6), e = 2 + rng.index(4);
        const std::size_t k = 2 + rng.index(3);
        auto enc = init_encoder(d, h, e, rng);
        auto cls = init_classifier(e, k, rng);
        for (double& v : enc.b1) v = 0.1 * rng.normal();
        for (double& v : enc.b2) v = rng.normal();  // keeps rows with every unit off away from zero
        for (double& v : cls.b) v = rng.normal();
        Matrix x(n, d), xa(n, d);
        for (double& v : x.data()) v = rng.normal();
        for (double& v : xa.data()) v = rng.normal();
        std::vector<int> y(n);
        for (int& v : y) v = static_cast<int>(rng.index(k));
        std::vector<double> w(k);
        for (double& v : w) v = rng.uniform(0.1, 2.0);

        Matrix logits = classify(cls, encode(enc, x).embeddings);
        auto ce = weighted_cross_entropy(logits, y, w);
        worst = std::max(worst, oracle::max_relative_error(ce.gradient.data(), oracle::finite_difference(logits.data(), [&] {
                                                               return weighted_cross_entropy(logits, y, w).value;
                                                           })));

        const Matrix z = encode(enc, x).embeddings;
        auto cg = classifier_backward(cls, z, weighted_cross_entropy(classify(cls, z), y, w).gradient);
        worst = std::max(worst, params_error(cls, cg.params, [&] {
                             return weighted_cross_entropy(classify(cls, z), y, w).value;
                         }));

        Matrix probe(n, e);
        for (double& v : probe.data()) v = rng.normal();
        auto enc_out = encode(enc, x);
        worst = std::max(worst, params_error(enc, encoder_backward(enc, enc_out.cache, probe), [&] {
                             const Matrix zz = encode(enc, x).embeddings;
                             return std::inner_product(zz.data().begin(), zz.data().end(), probe.data().begin(), 0.0);
                         }));

        // end to end: sub-cluster loss on both views plus weighted CE on the anchors
        std::vector<int> clusters(n);
        for (std::size_t i = 0; i < n; ++i) clusters[i] = y[i] * 10 + static_cast<int>(rng.index(2));
        auto total = [&] {
            EmbeddingBatch bb{encode(enc, x).embeddings, encode(enc, xa).embeddings, y, clusters};
            return subcluster_loss(bb, cfg).value + weighted_cross_entropy(classify(cls, bb.anchors), y, w).value;
        };
        auto a1 = encode(enc, x);
        auto a2 = encode(enc, xa);
        EmbeddingBatch bb{a1.embeddings, a2.embeddings, y, clusters};
        auto cl = subcluster_loss(bb, cfg);
        auto cls_grads = classifier_backward(cls, a1.embeddings,
                                             weighted_cross_entropy(classify(cls, a1.embeddings), y, w).gradient);
        Matrix ga = cl.grad_anchors;
        for (std::size_t q = 0; q < ga.data().size(); ++q) ga.data()[q] += cls_grads.embeddings.data()[q];
        auto ge = encoder_backward(enc, a1.cache, ga);
        auto ge2 = encoder_backward(enc, a2.cache, cl.grad_augmented);
        auto gb = ge.blocks();
        auto g2b = ge2.blocks();
        for (std::size_t blk = 0; blk < gb.size(); ++blk)
            for (std::size_t q = 0; q < gb[blk].size(); ++q) gb[blk][q] += g2b[blk][q];
        worst = std::max(worst, params_error(enc, ge, total));
        worst = std::max(worst, params_error(cls, cls_grads.params, total));
    }
    char buf[80];
    std::snprintf(buf, sizeof buf, "max relative error %.2e over 50 seeds", worst);
    return {worst <= 1e-4, buf};
}

// 4. Clustering invariants.
Outcome clustering() {
    RandomSource rng(4, "acceptance");
    int bad = 0;
    for (int t = 0; t < 1000; ++t) {
        const int classes = 1 + static_cast<int>(rng.index(4));
        const std::size_t e = 2 + rng.index(5);
        std::vector<int> labels;
        for (int c = 0; c < classes; ++c) {
            const int n = 1 + static_cast<int>(rng.index(60));
            labels.insert(labels.end(), static_cast<std::size_t>(n), c);
        }
        const Matrix emb = oracle::random_unit_rows(labels.size(), e, rng);
        ClusterConfig cfg;
        cfg.delta = 1 + static_cast<int>(rng.index(20));
        cfg.iterations = 1 + static_cast<int>(rng.index(5));
        cfg.seed = rng.next_u64();
        const auto a = subcluster_all(emb, labels, classes, cfg);
        const auto again = subcluster_all(emb, labels, classes, cfg);

        bool ok = a.global_cluster == again.global_cluster;
        std::vector<int> counts(static_cast<std::size_t>(classes), 0);
        for (int y : labels) ++counts[static_cast<std::size_t>(y)];
        const int cap = std::max(*std::min_element(counts.begin(), counts.end()), cfg.delta);
        ok = ok && a.capacity == cap;
        for (int c = 0; c < classes; ++c) {
            const auto& part = a.classes[static_cast<std::size_t>(c)];
            const int n = counts[static_cast<std::size_t>(c)];
            const int m = (n + cap - 1) / cap;
            ok = ok && part.cluster_count() == m && (n > cap || m == 1);
            ok = ok && part.assignment.size() == static_cast<std::size_t>(n);
            std::vector<int> sizes(static_cast<std::size_t>(m), 0);
            for (int j : part.assignment) {
                if (j < 0 || j >= m) {
                    ok = false;
                    break;
                }
                ++sizes[static_cast<std::size_t>(j)];
            }
            ok = ok && sizes == part.cluster_sizes;
            ok = ok && std::accumulate(sizes.begin(), sizes.end(), 0) == n;
            for (int s : sizes) ok = ok && s >= 1 && s <= cap;
        }
        std::set<int> ids(a.global_cluster.begin(), a.global_cluster.end());
        const auto cc = a.cluster_counts();
        ok = ok && static_cast<int>(ids.size()) == std::accumulate(cc.begin(), cc.end(), 0);
        bad += !ok;
    }
    return {bad == 0, std::to_string(1000 - bad) + "/1000 instances valid"};
}

// 5. Weight identities.
Outcome weights() {
    Outcome out;
    const Matrix example(3, 2, {0, 0, 1, 0, 3, 0});
    const auto dmin = min_class_distances(example).class_min;
    const bool example_ok = dmin == std::vector<double>{1, 1, 2} &&
                            class_weights(dmin) == std::vector<double>{0.4, 0.4, 0.2};

    RandomSource rng(5, "acceptance");
    double worst_sum = 0.0, worst_general_scale = 0.0;
    bool exact_scale = true;
    for (int t = 0; t < 500; ++t) {
        const int k = 2 + static_cast<int>(rng.index(8));
        const std::size_t e = 2 + rng.index(7);  // one-dimensional unit rows are only +-1
        std::vector<int> labels;
        for (int c = 0; c < k; ++c) labels.insert(labels.end(), 3 + rng.index(20), c);
        Matrix emb = oracle::random_unit_rows(labels.size(), e, rng);
        ClusterConfig cc;
        cc.delta = 2 + static_cast<int>(rng.index(5));
        const auto assignment = subcluster_all(emb, labels, k, cc);
        const auto report = compute_distance_report(emb, labels, k, assignment);
        worst_sum = std::max({worst_sum, std::abs(sum(report.w_class) - 1.0), std::abs(sum(report.w_sub) - 1.0),
                              std::abs(sum(report.w_final) - 2.0)});

        for (double kappa : {0.25, 2.0, 1024.0}) {
            Matrix scaled = emb;
            for (double& v : scaled.data()) v *= kappa;
            const auto w = class_weights(min_class_distances(class_centroids(scaled, labels, k)).class_min);
            exact_scale = exact_scale && w == report.w_class;
        }
        const double kappa = rng.uniform(0.1, 10.0);
        Matrix scaled = emb;
        for (double& v : scaled.data()) v *= kappa;
        const auto w = class_weights(min_class_distances(class_centroids(scaled, labels, k)).class_min);
        for (std::size_t c = 0; c < w.size(); ++c) worst_general_scale = std::max(worst_general_scale, std::abs(w[c] - report.w_class[c]));
    }
    char buf[200];
    std::snprintf(buf, sizeof buf,
                  "example %s, max sum error %.2e, power-of-two scaling %s, general scaling max diff %.2e",
                  example_ok ? "exact" : "WRONG", worst_sum, exact_scale ? "bitwise" : "NOT bitwise",
                  worst_general_scale);
    out.pass = example_ok && worst_sum <= 1e-9 && exact_scale && worst_general_scale <= 1e-12;
    out.detail = buf;
    return out;
}

// 6. Metrics against the literal formulas.
Outcome metrics() {
    RandomSource rng(6, "acceptance");
    double worst = 0.0;
    for (int t = 0; t < 1000; ++t) {
        const int k = 2 + static_cast<int>(rng.index(8));
        std::vector<int> truth, pred;
        for (int c = 0; c < k; ++c) {
            const std::size_t n = 1 + rng.index(50);
            for (std::size_t r = 0; r < n; ++r) {
                truth.push_back(c);
                pred.push_back(rng.uniform() < 0.6 ? c : static_cast<int>(rng.index(static_cast<std::size_t>(k))));
            }
        }
        const auto cm = ConfusionMatrix::from_predictions(truth, pred, k);
        const auto lit = oracle::metrics_literal(truth, pred, k);
        worst = std::max({worst, std::abs(balanced_accuracy(cm) - lit.ba), std::abs(balanced_f1(cm) - lit.bf1)});
        for (int c = 0; c < k; ++c)
            worst = std::max(worst, std::abs(balanced_precision(cm, c) - lit.bp[static_cast<std::size_t>(c)]));
    }

    // a standard split gives equal row sums, where balanced precision is plain precision
    SyntheticSpec spec;
    spec.num_classes = 4;
    spec.dim = 3;
    spec.n_max = 300;
    spec.imbalance_ratio = 3.0;
    const auto ds = generate_synthetic(spec);
    const auto split = make_split(ds, SplitSpec{});
    const auto test = ds.subset(split.test);
    std::vector<int> pred(test.size());
    for (int& p : pred) p = static_cast<int>(rng.index(4));
    const auto cm = ConfusionMatrix::from_predictions(test.labels, pred, 4);
    double reduction = 0.0;
    for (int c = 0; c < 4; ++c) {
        std::int64_t col = 0;
        for (int j = 0; j < 4; ++j) col += cm(j, c);
        const double plain = col == 0 ? 0.0 : static_cast<double>(cm(c, c)) / static_cast<double>(col);
        reduction = std::max(reduction, std::abs(balanced_precision(cm, c) - plain));
    }
    char buf[160];
    std::snprintf(buf, sizeof buf, "max error %.2e, standard-split precision reduction %.2e", worst, reduction);
    return {worst <= 1e-12 && reduction <= 1e-12, buf};
}

// 7. One cluster per class reduces to the plain contrastive loss and class weights.
Outcome degenerate() {
    RandomSource rng(7, "acceptance");
    double worst = 0.0;
    bool ranking_ok = true;
    for (int t = 0; t < 200; ++t) {
        auto b = random_batch(rng, false);
        b.cluster_ids = b.labels;
        ContrastiveConfig cfg;
        cfg.tau = cfg.tau1 = 0.05 + rng.uniform();
        cfg.tau2 = 0.05 + rng.uniform();
        cfg.beta = 0.0;
        worst = std::max(worst, std::abs(subcluster_loss(b, cfg).value - scl_loss(b, cfg).value));

        // force a single cluster per class through the capacity
        const int k = 2 + static_cast<int>(rng.index(6));
        std::vector<int> labels;
        for (int c = 0; c < k; ++c) labels.insert(labels.end(), 2 + rng.index(10), c);
        const Matrix emb = oracle::random_unit_rows(labels.size(), 4, rng);
        ClusterConfig cc;
        cc.delta = static_cast<int>(labels.size());
        const auto assignment = subcluster_all(emb, labels, k, cc);
        const auto report = compute_distance_report(emb, labels, k, assignment);
        std::vector<int> by_class(static_cast<std::size_t>(k)), by_sub(static_cast<std::size_t>(k));
        std::iota(by_class.begin(), by_class.end(), 0);
        std::iota(by_sub.begin(), by_sub.end(), 0);
        std::stable_sort(by_class.begin(), by_class.end(), [&](int a, int c) { return report.w_class[a] > report.w_class[c]; });
        std::stable_sort(by_sub.begin(), by_sub.end(), [&](int a, int c) { return report.w_sub[a] > report.w_sub[c]; });
        ranking_ok = ranking_ok && by_class == by_sub;
    }
    char buf[120];
    std::snprintf(buf, sizeof buf, "max loss gap %.2e, rankings %s", worst, ranking_ok ? "identical" : "DIFFER");
    return {worst <= 1e-12 && ranking_ok, buf};
}

// 8. Repeated training yields identical bytes.
Outcome reproducibility() {
    SyntheticSpec spec;
    spec.num_classes = 4;
    spec.dim = 8;
    spec.n_max = 200;
    spec.imbalance_ratio = 10.0;
    const auto ds = generate_synthetic(spec);
    const auto cfg = parse_run_config(R"({"seed": 11, "train": {"epochs": 12, "warmup_epochs": 2, "update_interval": 3}})");
    const auto split = make_split(ds, cfg.split);
    auto once = [&] {
        const auto tr = ds.subset(split.train);
        const auto result = train(tr, cfg.train);
        RunReport report;
        report.config = cfg;
        report.epochs = result.epochs;
        report.weights = result.snapshots;
        report.metrics["valid"] = evaluate(result.model, ds.subset(split.valid));
        report.metrics["test"] = evaluate(result.model, ds.subset(split.test));
        return std::pair{checkpoint_bytes(result.model), report_to_json(report)};
    };
    const auto a = once();
    const auto b = once();
    const bool same = a.first == b.first && a.second == b.second;
    return {same, same ? "checkpoint and report bytes identical" : "outputs differ between runs"};
}

}  // namespace

int main(int argc, char** argv) {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"synthetic long-tail benchmark ordering", benchmark},
        {"loss oracle equivalence", loss_oracle},
        {"gradient suite", gradients},
        {"clustering invariants", clustering},
        {"weight identities", weights},
        {"metrics oracle", metrics},
        {"degenerate sub-cluster reduction", degenerate},
        {"reproducibility", reproducibility},
    };
    std::set<int> only;
    for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));

    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const int id = static_cast<int>(i) + 1;
        if (!only.empty() && !only.count(id)) continue;
        const auto t0 = std::chrono::steady_clock::now();
        Outcome out;
        try {
            out = criteria[i].second();
        } catch (const std::exception& e) {
            out = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::printf("%s  %d. %s: %s (%.1fs)\n", out.pass ? "PASS" : "FAIL", id, criteria[i].first.c_str(),
                    out.detail.c_str(), secs);
        std::fflush(stdout);
        failed += !out.pass;
    }
    return failed == 0 ? 0 : 1;
}
