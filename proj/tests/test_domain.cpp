#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "subtail/domain.hpp"

using namespace subtail;

TEST_CASE("unit_normalize examples") {
    const std::vector<double> a{3.0, 4.0};
    auto u = unit_normalize(a);
    CHECK(u[0] == doctest::Approx(0.6).epsilon(1e-15));
    CHECK(u[1] == doctest::Approx(0.8).epsilon(1e-15));

    const std::vector<double> b{0.0, 0.0, 1.0};
    CHECK(unit_normalize(b) == b);

    const std::vector<double> c{1.0, 1.0};
    auto v = unit_normalize(c);
    CHECK(std::abs(v[0] - 0.70710678118654752) < 1e-15);
    CHECK(std::abs(v[1] - 0.70710678118654752) < 1e-15);
}

TEST_CASE("unit_normalize rejects a zero vector") {
    const std::vector<double> z{0.0, 0.0};
    CHECK_THROWS_WITH_AS(unit_normalize(z), "degenerate vector", Error);
}

TEST_CASE("unit_normalize is idempotent") {
    RandomSource rng(3, "test");
    for (int t = 0; t < 200; ++t) {
        std::vector<double> v(7);
        for (double& x : v) x = rng.uniform(-5, 5);
        auto once = unit_normalize(v);
        auto twice = unit_normalize(once);
        for (std::size_t i = 0; i < v.size(); ++i) CHECK(std::abs(once[i] - twice[i]) < 1e-12);
    }
}

TEST_CASE("cosine similarity examples") {
    const std::vector<double> x{1.0, 0.0}, y{0.0, 1.0}, nx{-1.0, 0.0};
    CHECK(cosine_similarity(x, x) == 1.0);
    CHECK(cosine_similarity(x, y) == 0.0);
    CHECK(cosine_similarity(x, nx) == -1.0);
    const std::vector<double> three{1.0, 0.0, 0.0};
    CHECK_THROWS_AS(cosine_similarity(x, three), Error);
}

TEST_CASE("euclidean distance examples") {
    const std::vector<double> o{0.0, 0.0}, p{3.0, 4.0}, x{1.0, 0.0}, y{0.0, 1.0};
    CHECK(euclidean_distance(o, p) == 5.0);
    CHECK(euclidean_distance(p, p) == 0.0);
    CHECK(std::abs(euclidean_distance(x, y) - 1.4142135623730951) < 1e-15);
    const std::vector<double> three{1.0, 0.0, 0.0};
    CHECK_THROWS_AS(euclidean_distance(x, three), Error);
}

TEST_CASE("squared distance and cosine agree on unit vectors") {
    RandomSource rng(11, "test");
    for (int t = 0; t < 500; ++t) {
        auto m = oracle::random_unit_rows(2, 5, rng);
        const double d = euclidean_distance(m.row(0), m.row(1));
        const double c = cosine_similarity(m.row(0), m.row(1));
        CHECK(std::abs(d * d - (2.0 - 2.0 * c)) < 1e-9);
    }
}

TEST_CASE("random source streams are reproducible and independent") {
    RandomSource a(42, "batch"), b(42, "batch"), c(42, "init"), d(43, "batch");
    bool differs_stream = false, differs_seed = false;
    for (int i = 0; i < 10000; ++i) {
        const auto x = a.next_u64();
        REQUIRE(x == b.next_u64());
        differs_stream |= x != c.next_u64();
        differs_seed |= x != d.next_u64();
    }
    CHECK(differs_stream);
    CHECK(differs_seed);
}

TEST_CASE("random source draws stay in range") {
    RandomSource rng(1, "range");
    double sum = 0.0, sq = 0.0;
    const int n = 20000;
    for (int i = 0; i < n; ++i) {
        const double u = rng.uniform();
        CHECK((u >= 0.0 && u < 1.0));
        CHECK(rng.index(7) < 7);
        const double z = rng.normal();
        sum += z;
        sq += z * z;
    }
    CHECK(std::abs(sum / n) < 0.05);
    CHECK(std::abs(sq / n - 1.0) < 0.05);
}

TEST_CASE("dataset validation") {
    Matrix f(3, 2, {1, 2, 3, 4, 5, 6});
    auto ds = Dataset::build(f, {0, 1, 1});
    CHECK(ds.class_counts == std::vector<int>{1, 2});
    CHECK(ds.ids == std::vector<std::string>{"0", "1", "2"});
    CHECK_THROWS_WITH_AS(Dataset::build(f, {0, 2, 2}), "non-contiguous labels", Error);
    CHECK_THROWS_AS(Dataset::build(f, {0, 0, 0}), Error);
    CHECK_THROWS_AS(Dataset::build(f, {0, 1}), Error);

    const std::vector<std::size_t> idx{2, 0};
    auto sub = ds.subset(idx);
    CHECK(sub.labels == std::vector<int>{1, 0});
    CHECK(sub.features(0, 0) == 5.0);
}

TEST_CASE("embedding batch validation") {
    RandomSource rng(5, "test");
    EmbeddingBatch b{oracle::random_unit_rows(3, 4, rng), oracle::random_unit_rows(3, 4, rng), {0, 1, 0}, {}};
    CHECK_NOTHROW(b.validate());
    b.anchors(1, 1) += 0.1;
    CHECK_THROWS_AS(b.validate(), Error);
}
