#include "dali/model.hpp"

#include <cmath>
#include <random>

#include "dali/features.hpp"
#include "dali/mathutil.hpp"

namespace dali::model {

Model init_model(std::size_t num_users, std::size_t num_items, std::size_t dim,
                 std::uint64_t seed) {
    if (dim < 1) throw Error("embedding dimension must be >= 1");
    Model m;
    m.emb.num_users = num_users;
    m.emb.num_items = num_items;
    m.emb.dim = dim;
    m.emb.user_mat.resize(num_users * dim);
    m.emb.item_mat.resize(num_items * dim);

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni(-0.05, 0.05);
    for (double& x : m.emb.user_mat) x = uni(rng);
    for (double& x : m.emb.item_mat) x = uni(rng);

    m.attn.dim = dim;
    m.attn.theta.assign(2 * dim + 2, 0.0);
    for (std::size_t k = 0; k < 2 * dim; ++k) m.attn.theta[k] = uni(rng);
    m.attn.theta[2 * dim] = 0.0;  // bias
    m.attn.theta[2 * dim + 1] = AttentionParams::kInitialAffinity;
    return m;
}

std::vector<double> member_logits(const Model& m, std::span<const int> members, int item) {
    if (item < 0 || item >= (int)m.emb.num_items)
        throw Error("unknown item id " + std::to_string(item));
    const auto q = m.emb.item(item);
    const double shared = dot(m.attn.proj_item(), q) + m.attn.bias();
    const double beta = m.attn.affinity();
    std::vector<double> logits(members.size());
    for (std::size_t j = 0; j < members.size(); ++j) {
        int u = members[j];
        if (u < 0 || u >= (int)m.emb.num_users)
            throw Error("unknown user id " + std::to_string(u));
        const auto p = m.emb.user(u);
        logits[j] = dot(m.attn.proj_member(), p) + shared + beta * dot(p, q);
    }
    return logits;
}

MemberWeightVector attention_weights(const Model& m, const data::Group& g, int item) {
    if (g.members.empty()) throw Error("attention over empty group");
    MemberWeightVector w;
    w.group_id = g.id;
    w.weights = member_logits(m, g.members, item);
    softmax_inplace(w.weights);
    return w;
}

MemberWeightVector weight_profile(const Model& m, const data::Group& g,
                                  std::span<const int> items) {
    if (g.members.empty()) throw Error("attention over empty group");
    MemberWeightVector w;
    w.group_id = g.id;
    const std::size_t n = g.members.size();
    if (items.empty()) {
        w.weights.assign(n, 1.0 / (double)n);
        return w;
    }
    w.weights.assign(n, 0.0);
    for (int item : items) {
        auto l = member_logits(m, g.members, item);
        softmax_inplace(l);
        for (std::size_t j = 0; j < n; ++j) w.weights[j] += l[j];
    }
    for (double& x : w.weights) x /= (double)items.size();
    return w;
}

std::vector<double> aggregate_group(const std::vector<std::span<const double>>& member_embs,
                                    const MemberWeightVector& w) {
    if (member_embs.size() != w.weights.size())
        throw Error("aggregate_group: weight/embedding length mismatch");
    if (member_embs.empty()) throw Error("aggregate_group: empty group");
    std::vector<double> out(member_embs[0].size(), 0.0);
    for (std::size_t j = 0; j < member_embs.size(); ++j)
        axpy(w.weights[j], member_embs[j], out);
    return out;
}

double score(std::span<const double> p, std::span<const double> q) {
    if (p.size() != q.size()) throw Error("score: dimension mismatch");
    return dot(p, q);
}

void ModelGrads::resize_like(const Model& m) {
    user_mat.assign(m.emb.user_mat.size(), 0.0);
    item_mat.assign(m.emb.item_mat.size(), 0.0);
    attn.assign(m.attn.theta.size(), 0.0);
}

void ModelGrads::zero() {
    std::fill(user_mat.begin(), user_mat.end(), 0.0);
    std::fill(item_mat.begin(), item_mat.end(), 0.0);
    std::fill(attn.begin(), attn.end(), 0.0);
}

namespace {

std::span<double> user_grad(ModelGrads& g, const Model& m, int u) {
    return {&g.user_mat[(std::size_t)u * m.emb.dim], m.emb.dim};
}
std::span<double> item_grad(ModelGrads& g, const Model& m, int i) {
    return {&g.item_mat[(std::size_t)i * m.emb.dim], m.emb.dim};
}

}  // namespace

double group_loss(const Model& m, std::span<const GroupBatchEntry> batch, ModelGrads& grads) {
    if (batch.empty()) throw Error("group_loss: empty batch");
    const std::size_t d = m.emb.dim;
    const double inv_b = 1.0 / (double)batch.size();
    const double beta = m.attn.affinity();
    double total = 0.0;

    for (const auto& entry : batch) {
        if (entry.negatives.empty()) throw Error("group_loss: entry without negatives");
        const auto& members = entry.group->members;
        const std::size_t n = members.size();
        std::vector<int> cands;
        cands.reserve(1 + entry.negatives.size());
        cands.push_back(entry.positive);
        cands.insert(cands.end(), entry.negatives.begin(), entry.negatives.end());
        const std::size_t nc = cands.size();

        std::vector<double> scores(nc);
        // per-candidate attention state, kept for the backward pass
        std::vector<std::vector<double>> weights(nc), group_emb(nc);

        if (entry.mode == AggMode::Leader) {
            const auto pl = m.emb.user(members[entry.leader_index]);
            for (std::size_t c = 0; c < nc; ++c) scores[c] = dot(pl, m.emb.item(cands[c]));
        } else {
            for (std::size_t c = 0; c < nc; ++c) {
                auto w = member_logits(m, members, cands[c]);
                softmax_inplace(w);
                std::vector<double> pg(d, 0.0);
                for (std::size_t j = 0; j < n; ++j) axpy(w[j], m.emb.user(members[j]), pg);
                scores[c] = dot(pg, m.emb.item(cands[c]));
                weights[c] = std::move(w);
                group_emb[c] = std::move(pg);
            }
        }

        std::vector<double> sigma = scores;
        softmax_inplace(sigma);
        total += -std::log(std::max(sigma[0], 1e-300));

        for (std::size_t c = 0; c < nc; ++c) {
            const double e = inv_b * (sigma[c] - (c == 0 ? 1.0 : 0.0));
            const auto q = m.emb.item(cands[c]);
            auto gq = item_grad(grads, m, cands[c]);

            if (entry.mode == AggMode::Leader) {
                const int leader = members[entry.leader_index];
                axpy(e, m.emb.user(leader), gq);
                axpy(e, q, user_grad(grads, m, leader));
                continue;
            }

            const auto& w = weights[c];
            const auto& pg = group_emb[c];
            // a_j = q . (p_j - p_g); dL/dlogit_j = e * w_j * a_j
            std::vector<double> a(n);
            double wa_sum = 0.0, wa_dot_pq = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                const auto p = m.emb.user(members[j]);
                a[j] = dot(q, p) - dot(q, std::span<const double>(pg));
                wa_sum += w[j] * a[j];
                wa_dot_pq += w[j] * a[j] * dot(p, q);
            }

            // item gradient: direct p_g plus the attention path
            axpy(e, std::span<const double>(pg), gq);
            for (std::size_t j = 0; j < n; ++j) {
                const auto p = m.emb.user(members[j]);
                const double coef = e * beta * w[j] * dot(p, q);
                axpy(coef, p, gq);
                axpy(-coef, std::span<const double>(pg), gq);
            }

            // member gradients: aggregation weight plus the logit path
            const auto vm = m.attn.proj_member();
            for (std::size_t j = 0; j < n; ++j) {
                auto gp = user_grad(grads, m, members[j]);
                const double dl = e * w[j] * a[j];
                axpy(e * w[j], q, gp);
                axpy(dl, vm, gp);
                axpy(dl * beta, q, gp);
            }

            // attention parameters
            std::span<double> ga(grads.attn);
            for (std::size_t j = 0; j < n; ++j) {
                const double dl = e * w[j] * a[j];
                axpy(dl, m.emb.user(members[j]), ga.subspan(0, d));
            }
            axpy(e * wa_sum, q, ga.subspan(d, d));   // proj_item; wa_sum is 0 analytically
            ga[2 * d] += e * wa_sum;                 // bias
            ga[2 * d + 1] += e * wa_dot_pq;          // affinity
        }
    }
    return total * inv_b;
}

double user_loss(const Model& m, std::span<const UserBatchEntry> batch, ModelGrads& grads) {
    if (batch.empty()) throw Error("user_loss: empty batch");
    const double inv_b = 1.0 / (double)batch.size();
    double total = 0.0;
    for (const auto& entry : batch) {
        if (entry.negatives.empty()) throw Error("user_loss: entry without negatives");
        const auto p = m.emb.user(entry.user);
        std::vector<int> cands;
        cands.reserve(1 + entry.negatives.size());
        cands.push_back(entry.positive);
        cands.insert(cands.end(), entry.negatives.begin(), entry.negatives.end());

        std::vector<double> sigma(cands.size());
        for (std::size_t c = 0; c < cands.size(); ++c) sigma[c] = dot(p, m.emb.item(cands[c]));
        softmax_inplace(sigma);
        total += -std::log(std::max(sigma[0], 1e-300));

        auto gp = user_grad(grads, m, entry.user);
        for (std::size_t c = 0; c < cands.size(); ++c) {
            const double e = inv_b * (sigma[c] - (c == 0 ? 1.0 : 0.0));
            axpy(e, m.emb.item(cands[c]), gp);
            axpy(e, p, item_grad(grads, m, cands[c]));
        }
    }
    return total * inv_b;
}

double profile_dominance(const Model& m, const data::Group& g, std::span<const int> items) {
    auto w = weight_profile(m, g, items);
    return rules::dominance(w.weights);
}

void add_profile_dominance_grad(const Model& m, const data::Group& g,
                                std::span<const int> items, double coeff, ModelGrads& grads) {
    if (items.empty() || g.members.size() < 2) return;
    const std::size_t n = g.members.size();
    const std::size_t d = m.emb.dim;

    auto profile = weight_profile(m, g, items);
    std::size_t mx = 0;
    for (std::size_t j = 1; j < n; ++j)
        if (profile.weights[j] > profile.weights[mx]) mx = j;
    const double wmax = profile.weights[mx];

    // eta as a function of the max profile weight; zero slope in the capped
    // and clamped-saturated regions
    const double mu_raw = (1.0 - wmax) / (double)(n - 1);
    double deta;
    if (rules::dominance(profile.weights) >= rules::kDominanceCap) {
        deta = 0.0;
    } else if (mu_raw >= rules::kMeanRestClamp) {
        deta = (double)(n - 1) / ((1.0 - wmax) * (1.0 - wmax));
    } else {
        deta = 1.0 / rules::kMeanRestClamp;
    }
    const double c0 = coeff * deta / (double)items.size();

    std::span<double> ga(grads.attn);
    for (int item : items) {
        auto w = member_logits(m, g.members, item);
        softmax_inplace(w);
        const auto q = m.emb.item(item);
        for (std::size_t j = 0; j < n; ++j) {
            // d wbar_max / d logit_j for this item
            const double dw = w[mx] * ((j == mx ? 1.0 : 0.0) - w[j]);
            const auto p = m.emb.user(g.members[j]);
            axpy(c0 * dw, p, ga.subspan(0, d));
            ga[2 * d] += c0 * dw;
            ga[2 * d + 1] += c0 * dw * dot(p, q);
        }
    }
}

}  // namespace dali::model
