#include "dali/mlp.hpp"

#include <cmath>
#include <random>

namespace dali::neural {

MlpParams init_mlp(std::size_t in, std::size_t h1, std::size_t h2, std::uint64_t seed) {
    MlpParams p;
    p.in = in;
    p.h1 = h1;
    p.h2 = h2;
    p.theta.assign(p.size(), 0.0);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni(-0.05, 0.05);
    // weight matrices only; biases stay zero
    std::size_t off = 0;
    for (std::size_t k = 0; k < in * h1; ++k) p.theta[off + k] = uni(rng);
    off += in * h1 + h1;
    for (std::size_t k = 0; k < h1 * h2; ++k) p.theta[off + k] = uni(rng);
    off += h1 * h2 + h2;
    for (std::size_t k = 0; k < h2 * MlpParams::kOut; ++k) p.theta[off + k] = uni(rng);
    return p;
}

namespace {

struct Blocks {
    const double *w1, *b1, *w2, *b2, *w3, *b3;
};

Blocks blocks(const MlpParams& p) {
    const double* t = p.theta.data();
    Blocks b;
    b.w1 = t;
    b.b1 = b.w1 + p.in * p.h1;
    b.w2 = b.b1 + p.h1;
    b.b2 = b.w2 + p.h1 * p.h2;
    b.w3 = b.b2 + p.h2;
    b.b3 = b.w3 + p.h2 * MlpParams::kOut;
    return b;
}

// y = W^T x + b where W is (rows x cols) row-major
void affine(const double* w, const double* b, std::span<const double> x, std::size_t rows,
            std::size_t cols, std::vector<double>& y) {
    y.assign(cols, 0.0);
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c) y[c] += w[r * cols + c] * x[r];
    for (std::size_t c = 0; c < cols; ++c) y[c] += b[c];
}

}  // namespace

ProbPair mlp_forward(const MlpParams& p, std::span<const double> x, MlpCache& cache) {
    if (x.size() != p.in) throw Error("mlp_forward: input width mismatch");
    for (double v : x)
        if (!std::isfinite(v)) throw Error("mlp_forward: non-finite input");
    const Blocks b = blocks(p);

    cache.x.assign(x.begin(), x.end());
    affine(b.w1, b.b1, x, p.in, p.h1, cache.z1);
    cache.a1 = cache.z1;
    for (double& v : cache.a1) v = v > 0.0 ? v : 0.0;

    affine(b.w2, b.b2, cache.a1, p.h1, p.h2, cache.z2);
    cache.a2 = cache.z2;
    for (double& v : cache.a2) v = std::tanh(v);

    std::vector<double> z;
    affine(b.w3, b.b3, cache.a2, p.h2, MlpParams::kOut, z);
    const double mx = std::max(z[0], z[1]);
    const double e0 = std::exp(z[0] - mx), e1 = std::exp(z[1] - mx);
    cache.prob = {e0 / (e0 + e1), e1 / (e0 + e1)};
    cache.revision = p.revision;
    return {cache.prob[0], cache.prob[1]};
}

std::vector<double> mlp_backward(const MlpParams& p, GroupLabel target,
                                 const MlpCache& cache) {
    if (cache.revision != p.revision)
        throw Error("mlp_backward: stale cache (parameters were updated)");
    if (cache.x.size() != p.in) throw Error("mlp_backward: cache/param mismatch");
    const Blocks b = blocks(p);

    std::vector<double> grad(p.size(), 0.0);
    double* g = grad.data();
    double* gw1 = g;
    double* gb1 = gw1 + p.in * p.h1;
    double* gw2 = gb1 + p.h1;
    double* gb2 = gw2 + p.h1 * p.h2;
    double* gw3 = gb2 + p.h2;
    double* gb3 = gw3 + p.h2 * MlpParams::kOut;

    // dL/dz for -log P[target] under softmax
    const std::size_t tgt = target == GroupLabel::Leadership ? 0 : 1;
    double dz[2] = {cache.prob[0], cache.prob[1]};
    dz[tgt] -= 1.0;

    std::vector<double> da2(p.h2, 0.0);
    for (std::size_t r = 0; r < p.h2; ++r) {
        for (std::size_t c = 0; c < MlpParams::kOut; ++c) {
            gw3[r * MlpParams::kOut + c] += cache.a2[r] * dz[c];
            da2[r] += b.w3[r * MlpParams::kOut + c] * dz[c];
        }
    }
    for (std::size_t c = 0; c < MlpParams::kOut; ++c) gb3[c] += dz[c];

    std::vector<double> dz2(p.h2);
    for (std::size_t k = 0; k < p.h2; ++k)
        dz2[k] = da2[k] * (1.0 - cache.a2[k] * cache.a2[k]);

    std::vector<double> da1(p.h1, 0.0);
    for (std::size_t r = 0; r < p.h1; ++r) {
        for (std::size_t c = 0; c < p.h2; ++c) {
            gw2[r * p.h2 + c] += cache.a1[r] * dz2[c];
            da1[r] += b.w2[r * p.h2 + c] * dz2[c];
        }
    }
    for (std::size_t c = 0; c < p.h2; ++c) gb2[c] += dz2[c];

    std::vector<double> dz1(p.h1);
    for (std::size_t k = 0; k < p.h1; ++k) dz1[k] = cache.z1[k] > 0.0 ? da1[k] : 0.0;

    for (std::size_t r = 0; r < p.in; ++r)
        for (std::size_t c = 0; c < p.h1; ++c) gw1[r * p.h1 + c] += cache.x[r] * dz1[c];
    for (std::size_t c = 0; c < p.h1; ++c) gb1[c] += dz1[c];

    return grad;
}

GroupLabel mlp_predict(const MlpParams& p, std::span<const double> x) {
    MlpCache cache;
    return mlp_forward(p, x, cache).argmax();
}

}  // namespace dali::neural
