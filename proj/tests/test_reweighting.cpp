#include <doctest.h>

#include <algorithm>
#include <numeric>

#include "oracles.hpp"
#include "subtail/reweighting.hpp"

using namespace subtail;

namespace {

double sum(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0); }

std::vector<std::size_t> ranking(const std::vector<double>& w) {
    std::vector<std::size_t> idx(w.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) { return w[a] > w[b]; });
    return idx;
}

}  // namespace

TEST_CASE("class weights on three collinear centroids") {
    Matrix c(3, 2, {0, 0, 1, 0, 3, 0});
    auto d = min_class_distances(c);
    CHECK(d.class_min == std::vector<double>{1.0, 1.0, 2.0});
    CHECK(d.pairwise(0, 2) == 3.0);
    CHECK(d.pairwise(1, 1) == 0.0);
    auto w = class_weights(d.class_min);
    CHECK(w == std::vector<double>{0.4, 0.4, 0.2});
}

TEST_CASE("sub-cluster distances use the closest cross-class pair") {
    std::vector<Matrix> centroids{Matrix(2, 2, {0, 0, 5, 0}), Matrix(1, 2, {2, 0})};
    auto s = subcluster_weights(centroids);
    CHECK(s.sub_min == std::vector<double>{2.0, 2.0});
    CHECK(s.w_sub == std::vector<double>{0.5, 0.5});
}

TEST_CASE("combined weights add elementwise") {
    auto w = combined_weights(std::vector<double>{0.4, 0.4, 0.2}, std::vector<double>{0.2, 0.3, 0.5});
    REQUIRE(w.size() == 3);
    CHECK(w[0] == doctest::Approx(0.6).epsilon(1e-15));
    CHECK(w[1] == doctest::Approx(0.7).epsilon(1e-15));
    CHECK(w[2] == doctest::Approx(0.7).epsilon(1e-15));
    CHECK_THROWS_AS(combined_weights(std::vector<double>{1.0}, std::vector<double>{0.5, 0.5}), Error);
}

TEST_CASE("weights sum to one and are scale and translation invariant") {
    RandomSource rng(11, "test");
    for (int t = 0; t < 200; ++t) {
        const std::size_t k = 2 + rng.index(8);
        const std::size_t e = 1 + rng.index(6);
        Matrix c(k, e);
        for (double& v : c.data()) v = rng.normal();
        auto w = class_weights(min_class_distances(c).class_min);
        CHECK(std::abs(sum(w) - 1.0) < 1e-9);

        Matrix scaled = c;
        for (double& v : scaled.data()) v *= 4.0;  // powers of two keep the arithmetic exact
        CHECK(class_weights(min_class_distances(scaled).class_min) == w);

        Matrix shifted = c;
        const double offset = rng.normal();
        for (double& v : shifted.data()) v += offset;
        auto ws = class_weights(min_class_distances(shifted).class_min);
        for (std::size_t i = 0; i < k; ++i) CHECK(std::abs(ws[i] - w[i]) < 1e-9);

        std::vector<Matrix> subs;
        for (std::size_t i = 0; i < k; ++i) {
            Matrix s(1 + rng.index(3), e);
            for (double& v : s.data()) v = rng.normal();
            subs.push_back(std::move(s));
        }
        auto sw = subcluster_weights(subs).w_sub;
        CHECK(std::abs(sum(sw) - 1.0) < 1e-9);
        CHECK(std::abs(sum(combined_weights(w, sw)) - 2.0) < 1e-9);
    }
}

TEST_CASE("single-cluster centroids rank classes like class weights") {
    RandomSource rng(12, "test");
    for (int t = 0; t < 100; ++t) {
        const std::size_t k = 2 + rng.index(8);
        Matrix c(k, 3);
        for (double& v : c.data()) v = rng.normal();
        std::vector<Matrix> subs;
        for (std::size_t i = 0; i < k; ++i) subs.push_back(c.gather_rows(std::vector<std::size_t>{i}));
        auto w = class_weights(min_class_distances(c).class_min);
        auto sw = subcluster_weights(subs).w_sub;
        CHECK(ranking(w) == ranking(sw));
        for (std::size_t i = 0; i < k; ++i) CHECK(std::abs(w[i] - sw[i]) < 1e-12);
    }
}

TEST_CASE("collapsed centroids are a numerical error") {
    Matrix c(2, 2, {1, 1, 1, 1});
    try {
        (void)min_class_distances(c);
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::numerical);
        CHECK(std::string(e.what()).find("zero class separation") != std::string::npos);
    }
    std::vector<Matrix> subs{Matrix(1, 2, {0, 0}), Matrix(2, 2, {3, 3, 0, 0})};
    CHECK_THROWS_AS(subcluster_weights(subs), Error);
}

TEST_CASE("inverse frequency weights") {
    auto w = inverse_frequency_weights(std::vector<int>{10, 30});
    CHECK(w[0] == doctest::Approx(0.75));
    CHECK(w[1] == doctest::Approx(0.25));
    CHECK_THROWS_AS(inverse_frequency_weights(std::vector<int>{10, 0}), Error);
}

TEST_CASE("distance report on clustered embeddings") {
    RandomSource rng(13, "test");
    Matrix emb = oracle::random_unit_rows(60, 4, rng);
    std::vector<int> labels(60);
    for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = i < 40 ? 0 : (i < 52 ? 1 : 2);
    ClusterConfig cfg;
    cfg.delta = 5;
    auto assignment = subcluster_all(emb, labels, 3, cfg);
    auto report = compute_distance_report(emb, labels, 3, assignment);
    CHECK(report.class_centroids.rows() == 3);
    CHECK(std::abs(sum(report.w_class) - 1.0) < 1e-12);
    CHECK(std::abs(sum(report.w_sub) - 1.0) < 1e-12);
    CHECK(std::abs(sum(report.w_final) - 2.0) < 1e-12);
    auto centroids = subcluster_centroids(emb, assignment);
    REQUIRE(centroids.size() == 3);
    CHECK(static_cast<int>(centroids[0].rows()) == assignment.classes[0].cluster_count());
    // plain means: class centroid of class 2 is the average of its rows
    double mean0 = 0.0;
    for (std::size_t i = 52; i < 60; ++i) mean0 += emb(i, 0);
    CHECK(report.class_centroids(2, 0) == doctest::Approx(mean0 / 8.0).epsilon(1e-14));
}
