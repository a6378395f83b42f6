#include "dali/features.hpp"

#include <algorithm>
#include <cmath>

namespace dali::rules {

const std::array<std::string_view, FeatureVector::kCount>& FeatureVector::names() {
    static const std::array<std::string_view, kCount> n = {
        "max_weight", "mean_rest", "std_dev", "entropy",
        "gini",       "top2_gap",  "group_size", "dominance"};
    return n;
}

std::array<double, FeatureVector::kCount> FeatureVector::as_array() const {
    return {max_weight, mean_rest, std_dev, entropy, gini, top2_gap, group_size, dominance};
}

FeatureVector FeatureVector::from_array(const std::array<double, kCount>& a) {
    FeatureVector f;
    f.max_weight = a[0];
    f.mean_rest = a[1];
    f.std_dev = a[2];
    f.entropy = a[3];
    f.gini = a[4];
    f.top2_gap = a[5];
    f.group_size = a[6];
    f.dominance = a[7];
    return f;
}

double FeatureVector::by_index(std::size_t idx) const { return as_array()[idx]; }

std::size_t feature_index(std::string_view name) {
    const auto& n = FeatureVector::names();
    for (std::size_t k = 0; k < n.size(); ++k)
        if (n[k] == name) return k;
    return (std::size_t)-1;
}

double dominance(std::span<const double> weights) {
    if (weights.empty()) throw Error("dominance of empty weight vector");
    const std::size_t n = weights.size();
    const double wmax = *std::max_element(weights.begin(), weights.end());
    double mu;
    if (n == 1) {
        mu = kMeanRestClamp;
    } else {
        double sum = 0.0;
        for (double w : weights) sum += w;
        mu = std::max((sum - wmax) / (double)(n - 1), kMeanRestClamp);
    }
    return std::min((wmax - mu) / mu, kDominanceCap);
}

FeatureVector extract_features(const model::MemberWeightVector& mw) {
    const auto& w = mw.weights;
    if (w.empty()) throw Error("extract_features: empty weight vector");
    const std::size_t n = w.size();

    FeatureVector f;
    f.group_size = (double)n;
    f.max_weight = *std::max_element(w.begin(), w.end());
    if (n == 1) {
        f.mean_rest = kMeanRestClamp;
        f.top2_gap = f.max_weight;
    } else {
        double sum = 0.0;
        for (double x : w) sum += x;
        f.mean_rest = std::max((sum - f.max_weight) / (double)(n - 1), kMeanRestClamp);
        std::vector<double> sorted(w.begin(), w.end());
        std::sort(sorted.begin(), sorted.end(), std::greater<>());
        f.top2_gap = sorted[0] - sorted[1];
    }

    double mean = 0.0;
    for (double x : w) mean += x;
    mean /= (double)n;
    double var = 0.0;
    for (double x : w) var += (x - mean) * (x - mean);
    f.std_dev = std::sqrt(var / (double)n);

    for (double x : w)
        if (x > 0.0) f.entropy -= x * std::log(x);

    double abs_diff = 0.0;
    for (double a : w)
        for (double b : w) abs_diff += std::abs(a - b);
    f.gini = abs_diff / (2.0 * (double)n);  // weights sum to 1

    f.dominance = std::min((f.max_weight - f.mean_rest) / f.mean_rest, kDominanceCap);
    return f;
}

void FeatureStats::fit(std::span<const FeatureVector> sample) {
    if (sample.empty()) throw Error("FeatureStats::fit on empty sample");
    mean.fill(0.0);
    stdev.fill(0.0);
    for (const auto& f : sample) {
        auto a = f.as_array();
        for (std::size_t k = 0; k < a.size(); ++k) mean[k] += a[k];
    }
    for (double& m : mean) m /= (double)sample.size();
    for (const auto& f : sample) {
        auto a = f.as_array();
        for (std::size_t k = 0; k < a.size(); ++k) {
            const double d = a[k] - mean[k];
            stdev[k] += d * d;
        }
    }
    for (double& s : stdev) s = std::max(std::sqrt(s / (double)sample.size()), 1e-8);
    frozen = true;
}

std::array<double, FeatureVector::kCount> FeatureStats::apply(const FeatureVector& f) const {
    auto a = f.as_array();
    if (!frozen) return a;
    for (std::size_t k = 0; k < a.size(); ++k) a[k] = (a[k] - mean[k]) / stdev[k];
    return a;
}

}  // namespace dali::rules
