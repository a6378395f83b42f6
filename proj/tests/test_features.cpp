#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <cmath>
#include <random>

#include "dali/features.hpp"
#include "doctest.h"

using namespace dali;
using rules::extract_features;

namespace {
model::MemberWeightVector mw(std::vector<double> w) {
    model::MemberWeightVector v;
    v.group_id = 0;
    v.weights = std::move(w);
    return v;
}
}  // namespace

TEST_CASE("uniform weights") {
    auto f = extract_features(mw({0.25, 0.25, 0.25, 0.25}));
    CHECK(f.max_weight == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(f.mean_rest == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(f.dominance == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(f.top2_gap == doctest::Approx(0.0));
    CHECK(f.entropy == doctest::Approx(std::log(4.0)).epsilon(1e-12));
    CHECK(f.std_dev == doctest::Approx(0.0));
    CHECK(f.gini == doctest::Approx(0.0));
    CHECK(f.group_size == 4.0);
}

TEST_CASE("concentrated weights") {
    auto f = extract_features(mw({0.7, 0.1, 0.1, 0.1}));
    CHECK(f.dominance == doctest::Approx(6.0).epsilon(1e-12));
    CHECK(f.mean_rest == doctest::Approx(0.1).epsilon(1e-12));
    CHECK(f.top2_gap == doctest::Approx(0.6).epsilon(1e-12));
    CHECK(f.gini > 0.0);
    CHECK(f.std_dev > 0.0);
}

TEST_CASE("degenerate weights use the documented clamp and cap") {
    auto f = extract_features(mw({1.0, 0.0, 0.0}));
    CHECK(f.mean_rest == rules::kMeanRestClamp);
    CHECK(f.dominance <= rules::kDominanceCap);
    CHECK(f.dominance == doctest::Approx((1.0 - 1e-6) / 1e-6).epsilon(1e-9));
    CHECK(f.entropy == doctest::Approx(0.0));
}

TEST_CASE("single-member vector") {
    auto f = extract_features(mw({1.0}));
    CHECK(f.group_size == 1.0);
    CHECK(f.top2_gap == doctest::Approx(1.0));
    CHECK(f.mean_rest == rules::kMeanRestClamp);
}

TEST_CASE("empty weight vector is an error") {
    CHECK_THROWS_AS(extract_features(mw({})), Error);
    CHECK_THROWS_AS(rules::dominance(std::vector<double>{}), Error);
}

TEST_CASE("dominance helper on plain spans") {
    CHECK(rules::dominance(std::vector<double>{0.9, 0.1}) == doctest::Approx(8.0));
    CHECK(rules::dominance(std::vector<double>{0.5, 0.5}) == doctest::Approx(0.0));
}

TEST_CASE("extract_features is permutation-invariant") {
    std::mt19937_64 rng(404);
    for (int trial = 0; trial < 50; ++trial) {
        std::uniform_int_distribution<int> size(2, 7);
        const int n = size(rng);
        std::vector<double> w(n);
        double sum = 0;
        for (double& x : w) {
            x = std::uniform_real_distribution<double>(0.01, 1.0)(rng);
            sum += x;
        }
        for (double& x : w) x /= sum;
        auto base = extract_features(mw(w)).as_array();
        std::shuffle(w.begin(), w.end(), rng);
        auto perm = extract_features(mw(w)).as_array();
        for (std::size_t k = 0; k < base.size(); ++k)
            CHECK(base[k] == doctest::Approx(perm[k]).epsilon(1e-12));
    }
}

TEST_CASE("invariant ranges hold on random weight vectors") {
    std::mt19937_64 rng(808);
    for (int trial = 0; trial < 100; ++trial) {
        const int n = std::uniform_int_distribution<int>(1, 8)(rng);
        std::vector<double> w(n);
        double sum = 0;
        for (double& x : w) {
            x = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
            sum += x;
        }
        if (sum == 0) continue;
        for (double& x : w) x /= sum;
        auto f = extract_features(mw(w));
        CHECK(f.max_weight >= 0.0);
        CHECK(f.max_weight <= 1.0 + 1e-12);
        CHECK(f.entropy >= -1e-12);
        CHECK(f.entropy <= std::log((double)n) + 1e-9);
        CHECK(f.dominance >= 0.0);
        for (double v : f.as_array()) CHECK(std::isfinite(v));
    }
}

TEST_CASE("feature names line up with by_index") {
    const auto& names = rules::FeatureVector::names();
    CHECK(rules::feature_index("max_weight") == 0);
    CHECK(rules::feature_index("dominance") == names.size() - 1);
    CHECK(rules::feature_index("nope") == (std::size_t)-1);
    auto f = extract_features(mw({0.6, 0.4}));
    auto a = f.as_array();
    for (std::size_t k = 0; k < a.size(); ++k) CHECK(f.by_index(k) == a[k]);
}

TEST_CASE("standardization freezes and applies") {
    std::vector<rules::FeatureVector> sample;
    sample.push_back(extract_features(mw({0.7, 0.1, 0.1, 0.1})));
    sample.push_back(extract_features(mw({0.25, 0.25, 0.25, 0.25})));
    sample.push_back(extract_features(mw({0.5, 0.3, 0.1, 0.1})));

    rules::FeatureStats stats;
    SUBCASE("identity before freezing") {
        auto raw = stats.apply(sample[0]);
        CHECK(raw == sample[0].as_array());
    }
    stats.fit(sample);
    CHECK(stats.frozen);
    // standardized sample has mean ~0 per feature
    std::array<double, rules::FeatureVector::kCount> acc{};
    for (const auto& f : sample) {
        auto z = stats.apply(f);
        for (std::size_t k = 0; k < z.size(); ++k) acc[k] += z[k];
    }
    for (double v : acc) CHECK(std::abs(v) < 1e-9);
}
