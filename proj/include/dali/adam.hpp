#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "dali/common.hpp"

namespace dali::model {

struct AdamConfig {
    double lr = 0.001;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// Adaptive-moment estimation over one flat parameter vector.
class Adam {
public:
    Adam() = default;
    Adam(std::size_t n, AdamConfig cfg = {});

    // In-place update with bias correction; increments the step count.
    // Throws on shape mismatch or non-finite gradient.
    void step(std::span<double> params, std::span<const double> grads);

    long long steps() const { return t_; }
    const AdamConfig& config() const { return cfg_; }

private:
    AdamConfig cfg_;
    long long t_ = 0;
    std::vector<double> m_;
    std::vector<double> v_;
};

}  // namespace dali::model
