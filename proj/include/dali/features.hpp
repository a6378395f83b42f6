#pragma once

#include <array>
#include <span>
#include <string_view>

#include "dali/model.hpp"

namespace dali::rules {

inline constexpr double kMeanRestClamp = 1e-6;
inline constexpr double kDominanceCap = 1e6;

// Statistical summary of a member weight vector; the fixed-length input to
// both discriminator channels.
struct FeatureVector {
    double max_weight = 0.0;
    double mean_rest = 0.0;  // mean of the non-max weights, clamped >= 1e-6
    double std_dev = 0.0;
    double entropy = 0.0;  // natural log
    double gini = 0.0;
    double top2_gap = 0.0;
    double group_size = 0.0;
    double dominance = 0.0;  // (w_max - mean_rest) / mean_rest, capped at 1e6

    static constexpr std::size_t kCount = 8;
    static const std::array<std::string_view, kCount>& names();
    std::array<double, kCount> as_array() const;
    static FeatureVector from_array(const std::array<double, kCount>& a);
    double by_index(std::size_t idx) const;
};

// index of name in FeatureVector::names(), or npos
std::size_t feature_index(std::string_view name);

double dominance(std::span<const double> weights);

FeatureVector extract_features(const model::MemberWeightVector& w);

// Per-feature standardization, frozen once fitted at the end of pretraining.
struct FeatureStats {
    std::array<double, FeatureVector::kCount> mean{};
    std::array<double, FeatureVector::kCount> stdev{};
    bool frozen = false;

    void fit(std::span<const FeatureVector> sample);
    std::array<double, FeatureVector::kCount> apply(const FeatureVector& f) const;
};

}  // namespace dali::rules
