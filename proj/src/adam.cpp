#include "dali/adam.hpp"

#include <cmath>

namespace dali::model {

Adam::Adam(std::size_t n, AdamConfig cfg) : cfg_(cfg), m_(n, 0.0), v_(n, 0.0) {}

void Adam::step(std::span<double> params, std::span<const double> grads) {
    if (params.size() != m_.size() || grads.size() != m_.size())
        throw Error("optimizer step: shape mismatch");
    for (double g : grads)
        if (!std::isfinite(g)) throw Error("optimizer step: non-finite gradient");

    ++t_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, (double)t_);
    const double bc2 = 1.0 - std::pow(cfg_.beta2, (double)t_);
    for (std::size_t k = 0; k < params.size(); ++k) {
        m_[k] = cfg_.beta1 * m_[k] + (1.0 - cfg_.beta1) * grads[k];
        v_[k] = cfg_.beta2 * v_[k] + (1.0 - cfg_.beta2) * grads[k] * grads[k];
        const double mhat = m_[k] / bc1;
        const double vhat = v_[k] / bc2;
        params[k] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
    }
}

}  // namespace dali::model
