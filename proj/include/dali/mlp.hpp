#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "dali/common.hpp"

namespace dali::neural {

// Three-layer gated discriminator: ReLU, tanh, softmax over two classes.
// Parameters live in one flat vector: W1(in*h1) b1(h1) W2(h1*h2) b2(h2)
// W3(h2*2) b3(2). Output order is (leadership, collaborative).
struct MlpParams {
    std::size_t in = 0;
    std::size_t h1 = 0;
    std::size_t h2 = 0;
    std::vector<double> theta;
    std::uint64_t revision = 0;  // bumped on every parameter update

    static constexpr std::size_t kOut = 2;
    std::size_t size() const { return in * h1 + h1 + h1 * h2 + h2 + h2 * kOut + kOut; }
};

MlpParams init_mlp(std::size_t in, std::size_t h1, std::size_t h2, std::uint64_t seed);

struct MlpCache {
    std::vector<double> x;
    std::vector<double> z1, a1;  // pre/post ReLU
    std::vector<double> z2, a2;  // pre/post tanh
    std::vector<double> prob;
    std::uint64_t revision = 0;
};

// Throws on non-finite input.
ProbPair mlp_forward(const MlpParams& p, std::span<const double> x, MlpCache& cache);

// Gradients of -log P[target] for every parameter block; ReLU subgradient at
// zero is zero. Throws if the cache predates a parameter update.
std::vector<double> mlp_backward(const MlpParams& p, GroupLabel target,
                                 const MlpCache& cache);

GroupLabel mlp_predict(const MlpParams& p, std::span<const double> x);

}  // namespace dali::neural
