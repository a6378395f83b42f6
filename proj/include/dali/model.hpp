#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "dali/common.hpp"
#include "dali/dataset.hpp"

namespace dali::model {

struct EmbeddingTable {
    std::size_t num_users = 0;
    std::size_t num_items = 0;
    std::size_t dim = 0;
    std::vector<double> user_mat;  // num_users x dim, row-major
    std::vector<double> item_mat;  // num_items x dim, row-major

    std::span<const double> user(int u) const { return {&user_mat[(std::size_t)u * dim], dim}; }
    std::span<const double> item(int i) const { return {&item_mat[(std::size_t)i * dim], dim}; }
};

// Member logit for candidate item q:
//   l_u = proj_member . p_u + proj_item . q + bias + affinity * (p_u . q)
// The affinity term carries the member-item interaction; the shared
// proj_item/bias terms cancel inside the softmax.
struct AttentionParams {
    std::size_t dim = 0;
    std::vector<double> theta;  // [proj_member(d) | proj_item(d) | bias | affinity]

    static constexpr double kInitialAffinity = 5.0;

    std::span<const double> proj_member() const { return {theta.data(), dim}; }
    std::span<const double> proj_item() const { return {theta.data() + dim, dim}; }
    double bias() const { return theta[2 * dim]; }
    double affinity() const { return theta[2 * dim + 1]; }
};

struct Model {
    EmbeddingTable emb;
    AttentionParams attn;
};

// Embedding entries drawn uniform in [-0.05, 0.05], deterministic in seed.
Model init_model(std::size_t num_users, std::size_t num_items, std::size_t dim,
                 std::uint64_t seed);

// Attention weights alpha_u for one group and candidate item; sums to 1.
struct MemberWeightVector {
    int group_id = -1;
    std::vector<double> weights;
};

std::vector<double> member_logits(const Model& m, std::span<const int> members, int item);
MemberWeightVector attention_weights(const Model& m, const data::Group& g, int item);

// Mean of the per-item weight vectors over the group's observed items; the
// per-group weight profile both discriminator channels consume. Uniform when
// items is empty.
MemberWeightVector weight_profile(const Model& m, const data::Group& g,
                                  std::span<const int> items);

std::vector<double> aggregate_group(const std::vector<std::span<const double>>& member_embs,
                                    const MemberWeightVector& w);

double score(std::span<const double> p, std::span<const double> q);

// Dense gradient buffers matching Model's parameter blocks.
struct ModelGrads {
    std::vector<double> user_mat;
    std::vector<double> item_mat;
    std::vector<double> attn;

    void resize_like(const Model& m);
    void zero();
};

enum class AggMode { Leader, Attention };

struct GroupBatchEntry {
    const data::Group* group = nullptr;
    int positive = -1;
    std::vector<int> negatives;
    AggMode mode = AggMode::Attention;
    int leader_index = 0;  // index into group->members, used when mode == Leader
};

struct UserBatchEntry {
    int user = -1;
    int positive = -1;
    std::vector<int> negatives;
};

// Mean sampled-softmax cross-entropy of the positive among its candidates,
// aggregation routed per entry. Accumulates gradients; returns the loss.
double group_loss(const Model& m, std::span<const GroupBatchEntry> batch, ModelGrads& grads);

double user_loss(const Model& m, std::span<const UserBatchEntry> batch, ModelGrads& grads);

// Dominance eta of the group's weight profile, and the gradient of
// coeff * eta with respect to the attention parameters only.
double profile_dominance(const Model& m, const data::Group& g, std::span<const int> items);
void add_profile_dominance_grad(const Model& m, const data::Group& g,
                                std::span<const int> items, double coeff, ModelGrads& grads);

}  // namespace dali::model
