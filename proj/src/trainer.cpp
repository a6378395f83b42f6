#include "dali/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>

#include "dali/mathutil.hpp"
#include "json.hpp"

namespace dali::train {

void TrainConfig::validate() const {
    if (batch_size < 1) throw Error("batch_size must be >= 1");
    if (joint_epochs < 1) throw Error("joint_epochs must be >= 1");
    if (pretrain_epochs < 0) throw Error("pretrain_epochs must be >= 0");
    if (dim < 1) throw Error("dim must be >= 1");
    if (negatives < 1) throw Error("negatives per positive must be >= 1");
    if (wl.collab_samples < 1) throw Error("weight-loss K must be >= 1");
    if (wl.margin <= 0) throw Error("weight-loss margin must be > 0");
}

double dominance(const model::MemberWeightVector& w) { return rules::dominance(w.weights); }

std::optional<double> collab_benchmark(std::span<const double> collab_etas, int k,
                                       std::uint64_t seed) {
    if (collab_etas.empty()) return std::nullopt;
    std::vector<double> pool(collab_etas.begin(), collab_etas.end());
    std::mt19937_64 rng(seed);
    const std::size_t take = std::min<std::size_t>((std::size_t)k, pool.size());
    double sum = 0.0;
    for (std::size_t j = 0; j < take; ++j) {
        std::uniform_int_distribution<std::size_t> pick(j, pool.size() - 1);
        std::swap(pool[j], pool[pick(rng)]);
        sum += pool[j];
    }
    return sum / (double)take;
}

double weight_loss(std::span<const double> leadership_etas, std::optional<double> xi,
                   double margin) {
    if (!xi || leadership_etas.empty()) return 0.0;
    double sum = 0.0;
    for (double eta : leadership_etas) sum += std::max(0.0, margin - (eta - *xi));
    return sum / (double)leadership_etas.size();
}

double total_loss(double l_group, double l_weight) {
    if (!std::isfinite(l_group) || !std::isfinite(l_weight))
        throw Error("total_loss: non-finite input");
    return l_group + l_weight;
}

// ---------------------------------------------------------------------------

Trainer::Trainer(const data::Dataset& ds, const data::DatasetSplit& split, TrainConfig cfg)
    : ds_(ds), split_(split), cfg_(cfg) {
    cfg_.validate();
    model_ = model::init_model(ds.num_users, ds.num_items, (std::size_t)cfg_.dim,
                               mix_seed(cfg_.seed, 1));
    mlp_ = neural::init_mlp(rules::FeatureVector::kCount, (std::size_t)cfg_.mlp_h1,
                            (std::size_t)cfg_.mlp_h2, mix_seed(cfg_.seed, 2));
    // square-root batch-scaling rule for the adaptive optimizer; cfg.lr is
    // calibrated at the default batch size of 32
    const double lr_eff = cfg_.lr * std::sqrt((double)cfg_.batch_size / 32.0);
    opt_user_ = model::Adam(model_.emb.user_mat.size(), {lr_eff});
    opt_item_ = model::Adam(model_.emb.item_mat.size(), {lr_eff});
    opt_attn_ = model::Adam(model_.attn.theta.size(), {lr_eff});
    opt_mlp_ = model::Adam(mlp_.theta.size(), {cfg_.disc_lr});
    grads_.resize_like(model_);
    items_by_group_ = ds.items_by_group();
    items_by_user_ = ds.items_by_user();
}

void Trainer::pretrain() {
    std::vector<std::pair<int, int>> pairs = ds_.user_item.entries;
    for (int e = 1; e <= cfg_.pretrain_epochs; ++e) {
        std::mt19937_64 shuffle_rng(mix_seed(cfg_.seed, 100 + e));
        std::mt19937_64 neg_rng(mix_seed(cfg_.seed, 200 + e));
        std::shuffle(pairs.begin(), pairs.end(), shuffle_rng);

        for (std::size_t at = 0; at < pairs.size(); at += cfg_.batch_size) {
            const std::size_t end = std::min(at + cfg_.batch_size, pairs.size());
            std::vector<model::UserBatchEntry> batch;
            for (std::size_t k = at; k < end; ++k) {
                model::UserBatchEntry ent;
                ent.user = pairs[k].first;
                ent.positive = pairs[k].second;
                ent.negatives = data::negative_sample(ds_, ent.user, false,
                                                      (std::size_t)cfg_.negatives, neg_rng());
                batch.push_back(std::move(ent));
            }
            grads_.zero();
            model::user_loss(model_, batch, grads_);
            opt_user_.step(model_.emb.user_mat, grads_.user_mat);
            opt_item_.step(model_.emb.item_mat, grads_.item_mat);
            opt_attn_.step(model_.attn.theta, grads_.attn);
        }
    }

    // freeze per-feature standardization on the train-split weight profiles
    std::vector<rules::FeatureVector> sample;
    for (int gid : split_.train_groups) {
        const auto& items = items_by_group_[gid];
        if (items.empty()) continue;
        sample.push_back(
            rules::extract_features(model::weight_profile(model_, ds_.groups[gid], items)));
    }
    if (!sample.empty()) stats_.fit(sample);
}

Trainer::Decision Trainer::decide(const data::Group& g, const rules::RuleSet& rs,
                                  double gamma_value,
                                  std::span<const int> profile_items) const {
    auto profile = model::weight_profile(model_, g, profile_items);
    Decision d;
    d.leader_index = (int)fusion::argmax_weight(profile.weights);

    if (cfg_.ablate_discriminator) {
        d.fused.group_id = g.id;
        d.fused.final_label = GroupLabel::Collaborative;
        d.fused.path = fusion::GroupDecision::Path::Consistent;
        d.fused.gamma_used = gamma_value;
        d.fused.fused = {0.0, 1.0};
        d.fused.neural = {0.0, 1.0};
        return d;
    }

    auto sym = rules::classify_symbolic(rs, profile);
    if (sym.singleton_bypass) {
        d.fused.group_id = g.id;
        d.fused.symbolic = sym;
        d.fused.neural = {1.0, 0.0};
        d.fused.gamma_used = gamma_value;
        d.fused.fused = {1.0, 0.0};
        d.fused.final_label = GroupLabel::Leadership;
        d.fused.path = fusion::GroupDecision::Path::Consistent;
        return d;
    }
    const auto features = rules::extract_features(profile);
    const auto x = stats_.apply(features);
    neural::MlpCache cache;
    const ProbPair neural = neural::mlp_forward(mlp_, x, cache);
    d.fused = fusion::fuse_with_gamma(g.id, sym, neural, gamma_value);
    return d;
}

fusion::GroupDecision Trainer::classify_group(const data::Group& g, const rules::RuleSet& rs,
                                              double gamma_value,
                                              std::span<const int> profile_items) const {
    return decide(g, rs, gamma_value, profile_items).fused;
}

std::vector<int> Trainer::rank_candidates(const data::Group& g, GroupLabel label,
                                          int leader_index,
                                          std::span<const int> candidates) const {
    std::vector<std::pair<double, int>> scored;
    scored.reserve(candidates.size());
    if (label == GroupLabel::Leadership) {
        const auto pl = model_.emb.user(g.members[leader_index]);
        for (int item : candidates) scored.emplace_back(dot(pl, model_.emb.item(item)), item);
    } else {
        std::vector<std::span<const double>> member_embs;
        for (int u : g.members) member_embs.push_back(model_.emb.user(u));
        for (int item : candidates) {
            auto w = model::attention_weights(model_, g, item);
            auto pg = model::aggregate_group(member_embs, w);
            scored.emplace_back(dot(std::span<const double>(pg), model_.emb.item(item)), item);
        }
    }
    std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
    });
    std::vector<int> ranked;
    ranked.reserve(scored.size());
    for (const auto& [s, item] : scored) ranked.push_back(item);
    return ranked;
}

MetricsReport Trainer::evaluate(std::span<const int> group_ids, const rules::RuleSet& rs,
                                double gamma_value) const {
    MetricsReport rep;
    int evaluated = 0;
    for (int gid : group_ids) {
        const auto& items = items_by_group_[gid];
        if (items.empty()) {
            ++rep.skipped_groups;
            continue;
        }
        const int heldout = items.back();
        std::vector<int> rest(items.begin(), items.end() - 1);

        const auto decision = decide(ds_.groups[gid], rs, gamma_value, rest);
        auto negatives = data::negative_sample(ds_, gid, true, (std::size_t)cfg_.eval_negatives,
                                               mix_seed(cfg_.seed, 0xE7A1000ULL + gid));
        std::vector<int> candidates;
        candidates.reserve(negatives.size() + 1);
        candidates.push_back(heldout);
        candidates.insert(candidates.end(), negatives.begin(), negatives.end());

        auto ranked = rank_candidates(ds_.groups[gid], decision.fused.final_label,
                                      decision.leader_index, candidates);
        rep.hr5 += hit_ratio(ranked, heldout, 5);
        rep.hr10 += hit_ratio(ranked, heldout, 10);
        rep.ndcg5 += ndcg_at_k(ranked, heldout, 5);
        rep.ndcg10 += ndcg_at_k(ranked, heldout, 10);
        ++evaluated;
    }
    if (evaluated > 0) {
        rep.hr5 /= evaluated;
        rep.hr10 /= evaluated;
        rep.ndcg5 /= evaluated;
        rep.ndcg10 /= evaluated;
    }
    return rep;
}

void Trainer::add_user_metrics(MetricsReport& rep) const {
    int evaluated = 0;
    double hr5 = 0, hr10 = 0, n5 = 0, n10 = 0;
    for (int u = 0; u < ds_.num_users; ++u) {
        const auto& items = items_by_user_[u];
        if (items.empty()) continue;
        const int heldout = items.back();
        auto negatives = data::negative_sample(ds_, u, false, (std::size_t)cfg_.eval_negatives,
                                               mix_seed(cfg_.seed, 0x55E2000ULL + u));
        std::vector<std::pair<double, int>> scored;
        const auto p = model_.emb.user(u);
        scored.emplace_back(dot(p, model_.emb.item(heldout)), heldout);
        for (int item : negatives) scored.emplace_back(dot(p, model_.emb.item(item)), item);
        std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
            if (a.first != b.first) return a.first > b.first;
            return a.second < b.second;
        });
        std::vector<int> ranked;
        for (const auto& [s, item] : scored) ranked.push_back(item);
        hr5 += hit_ratio(ranked, heldout, 5);
        hr10 += hit_ratio(ranked, heldout, 10);
        n5 += ndcg_at_k(ranked, heldout, 5);
        n10 += ndcg_at_k(ranked, heldout, 10);
        ++evaluated;
    }
    if (evaluated > 0) {
        rep.user_hr5 = hr5 / evaluated;
        rep.user_hr10 = hr10 / evaluated;
        rep.user_ndcg5 = n5 / evaluated;
        rep.user_ndcg10 = n10 / evaluated;
    }
}

double Trainer::fused_accuracy(const rules::RuleSet& rs) const {
    int total = 0, hit = 0;
    for (const auto& g : ds_.groups) {
        if (!g.planted) continue;
        const auto decision = decide(g, rs, 0.0, items_by_group_[g.id]);
        if (decision.fused.final_label == g.planted->label) ++hit;
        ++total;
    }
    return total ? (double)hit / total : 0.0;
}

std::vector<EpochRecord> Trainer::joint_train(repo::RuleRepository& repo,
                                              agent::AgentClient& agent_client,
                                              agent::TriggerConfig& trig,
                                              agent::AgentJournal* journal) {
    std::vector<EpochRecord> history;

    std::vector<std::pair<int, int>> group_pairs;
    for (int gid : split_.train_groups)
        for (int item : items_by_group_[gid]) group_pairs.emplace_back(gid, item);
    std::vector<std::pair<int, int>> user_pairs = ds_.user_item.entries;
    std::vector<int> train_sorted = split_.train_groups;
    std::sort(train_sorted.begin(), train_sorted.end());

    // post-commit guard: user-metric regression forces a rollback
    struct CommitGuard {
        bool active = false;
        repo::SemVer version;
        repo::SemVer parent;
        double user_ndcg_at_commit = 0.0;
    } guard;

    const long long perf_base =
        repo.perf_log().empty() ? 0 : repo.perf_log().back().epoch;

    for (int e = 1; e <= cfg_.joint_epochs; ++e) {
        const double gamma_t =
            fusion::gamma({(long long)(e - 1), (long long)cfg_.joint_epochs});

        // per-epoch decisions over the training groups
        std::vector<Decision> decisions(ds_.groups.size());
        for (int gid : train_sorted)
            decisions[gid] =
                decide(ds_.groups[gid], repo.active().rules, gamma_t, items_by_group_[gid]);

        std::mt19937_64 shuffle_rng(mix_seed(cfg_.seed, 1000 + e));
        std::mt19937_64 neg_rng(mix_seed(cfg_.seed, 2000 + e));
        std::mt19937_64 xi_rng(mix_seed(cfg_.seed, 3000 + e));
        std::shuffle(group_pairs.begin(), group_pairs.end(), shuffle_rng);
        std::shuffle(user_pairs.begin(), user_pairs.end(), shuffle_rng);

        double group_ce_sum = 0, user_ce_sum = 0, lw_sum = 0;
        std::size_t group_batches = 0, user_batches = 0;

        for (std::size_t at = 0; at < group_pairs.size(); at += cfg_.batch_size) {
            const std::size_t end = std::min(at + cfg_.batch_size, group_pairs.size());
            std::vector<model::GroupBatchEntry> batch;
            std::vector<int> batch_gids;
            for (std::size_t k = at; k < end; ++k) {
                const int gid = group_pairs[k].first;
                model::GroupBatchEntry ent;
                ent.group = &ds_.groups[gid];
                ent.positive = group_pairs[k].second;
                ent.negatives = data::negative_sample(ds_, gid, true,
                                                      (std::size_t)cfg_.negatives, neg_rng());
                ent.mode = decisions[gid].fused.final_label == GroupLabel::Leadership
                               ? model::AggMode::Leader
                               : model::AggMode::Attention;
                ent.leader_index = decisions[gid].leader_index;
                batch.push_back(std::move(ent));
                if (std::find(batch_gids.begin(), batch_gids.end(), gid) == batch_gids.end())
                    batch_gids.push_back(gid);
            }

            grads_.zero();
            group_ce_sum += model::group_loss(model_, batch, grads_);
            ++group_batches;

            // dominance weight loss over this batch's groups
            std::vector<int> leaders;
            std::vector<double> leader_etas, collab_etas;
            for (int gid : batch_gids) {
                const double eta =
                    model::profile_dominance(model_, ds_.groups[gid], items_by_group_[gid]);
                if (decisions[gid].fused.final_label == GroupLabel::Leadership) {
                    leaders.push_back(gid);
                    leader_etas.push_back(eta);
                } else {
                    collab_etas.push_back(eta);
                }
            }
            const auto xi = collab_benchmark(collab_etas, cfg_.wl.collab_samples, xi_rng());
            const double lw = weight_loss(leader_etas, xi, cfg_.wl.margin);
            lw_sum += lw;
            if (xi && !leaders.empty()) {
                const double coeff = -1.0 / (double)leaders.size();
                for (std::size_t j = 0; j < leaders.size(); ++j) {
                    if (cfg_.wl.margin - (leader_etas[j] - *xi) > 0.0)
                        model::add_profile_dominance_grad(model_, ds_.groups[leaders[j]],
                                                          items_by_group_[leaders[j]], coeff,
                                                          grads_);
                }
            }

            opt_user_.step(model_.emb.user_mat, grads_.user_mat);
            opt_item_.step(model_.emb.item_mat, grads_.item_mat);
            opt_attn_.step(model_.attn.theta, grads_.attn);
        }

        for (std::size_t at = 0; at < user_pairs.size(); at += cfg_.batch_size) {
            const std::size_t end = std::min(at + cfg_.batch_size, user_pairs.size());
            std::vector<model::UserBatchEntry> batch;
            for (std::size_t k = at; k < end; ++k) {
                model::UserBatchEntry ent;
                ent.user = user_pairs[k].first;
                ent.positive = user_pairs[k].second;
                ent.negatives = data::negative_sample(ds_, ent.user, false,
                                                      (std::size_t)cfg_.negatives, neg_rng());
                batch.push_back(std::move(ent));
            }
            grads_.zero();
            user_ce_sum += model::user_loss(model_, batch, grads_);
            ++user_batches;
            opt_user_.step(model_.emb.user_mat, grads_.user_mat);
            opt_item_.step(model_.emb.item_mat, grads_.item_mat);
            opt_attn_.step(model_.attn.theta, grads_.attn);
        }

        // discriminator training: planted labels when present, else the
        // epoch's fused labels
        if (!cfg_.ablate_discriminator) {
            for (int pass = 0; pass < cfg_.disc_passes; ++pass) {
                std::vector<int> order = train_sorted;
                std::mt19937_64 disc_rng(mix_seed(cfg_.seed, 4000 + e * 8 + pass));
                std::shuffle(order.begin(), order.end(), disc_rng);
                for (std::size_t at = 0; at < order.size(); at += cfg_.batch_size) {
                    const std::size_t end = std::min(at + cfg_.batch_size, order.size());
                    std::vector<double> grad(mlp_.theta.size(), 0.0);
                    int used = 0;
                    for (std::size_t k = at; k < end; ++k) {
                        const int gid = order[k];
                        const auto& g = ds_.groups[gid];
                        if (g.members.size() < 2) continue;
                        auto profile =
                            model::weight_profile(model_, g, items_by_group_[gid]);
                        const auto x = stats_.apply(rules::extract_features(profile));
                        neural::MlpCache cache;
                        neural::mlp_forward(mlp_, x, cache);
                        const GroupLabel target =
                            g.planted ? g.planted->label : decisions[gid].fused.final_label;
                        auto gvec = neural::mlp_backward(mlp_, target, cache);
                        for (std::size_t j = 0; j < grad.size(); ++j) grad[j] += gvec[j];
                        ++used;
                    }
                    if (!used) continue;
                    for (double& v : grad) v /= (double)used;
                    opt_mlp_.step(mlp_.theta, grad);
                    ++mlp_.revision;
                }
            }
        }

        // validation snapshot at the epoch's operating point
        MetricsReport rep = evaluate(split_.valid_groups, repo.active().rules, gamma_t);
        add_user_metrics(rep);
        rep.epoch = e;
        const double group_ce = group_batches ? group_ce_sum / group_batches : 0.0;
        const double user_ce = user_batches ? user_ce_sum / user_batches : 0.0;
        const double lw_mean = group_batches ? lw_sum / group_batches : 0.0;
        rep.weight_loss = lw_mean;
        rep.loss = total_loss(group_ce + user_ce, lw_mean);

        repo::PerfRecord perf;
        perf.epoch = perf_base + e;
        perf.group_ndcg10 = rep.ndcg10;
        perf.group_hr10 = rep.hr10;
        perf.user_ndcg10 = rep.user_ndcg10;
        perf.loss = rep.loss;
        perf.active_version = repo.active().version;
        repo.append_perf(perf);

        for (int gid : train_sorted) {
            const auto& g = ds_.groups[gid];
            auto profile = model::weight_profile(model_, g, items_by_group_[gid]);
            repo::CaseRecord rec;
            rec.features = rules::extract_features(profile);
            rec.label = g.planted ? g.planted->label : decisions[gid].fused.final_label;
            rec.source = g.planted ? "synthetic-truth" : "fused-decision";
            rec.epoch = perf.epoch;
            repo.add_case(rec);
        }

        // at most one repository action per epoch
        if (!cfg_.ablate_discriminator) {
            bool acted = false;
            if (guard.active && repo.active().version == guard.version) {
                const double drop = guard.user_ndcg_at_commit - rep.user_ndcg10;
                if (drop > trig.user_rollback_threshold) {
                    repo.rollback(guard.parent,
                                  "user_ndcg10 regression " + std::to_string(drop) +
                                      " after commit " + guard.version.str(),
                                  perf.epoch);
                    guard.active = false;
                    acted = true;
                    if (journal)
                        journal->log("outcome", "post-commit rollback to " + guard.parent.str(),
                                     perf.epoch);
                }
            } else if (guard.active) {
                guard.active = false;  // version changed some other way
            }

            if (!acted) {
                auto event = agent::detect_drift(repo.perf_log(), trig);
                if (event) {
                    agent::ReplayFn replay = [&](const rules::RuleSet& rs) {
                        return evaluate(split_.valid_groups, rs, gamma_t).ndcg10;
                    };
                    try {
                        auto res = agent::evolve(repo, *event, agent_client, trig, replay,
                                                 perf.epoch, journal);
                        if (res.outcome == agent::EvolveOutcome::Committed) {
                            guard.active = true;
                            guard.version = *res.version;
                            guard.parent = *repo.active().parent;
                            guard.user_ndcg_at_commit = rep.user_ndcg10;
                        }
                    } catch (const Error& err) {
                        if (journal) journal->log("evolve_error", err.what(), perf.epoch);
                    }
                }
            }
        }

        EpochRecord row;
        row.metrics = rep;
        row.gamma = gamma_t;
        row.active_version = repo.active().version.str();
        history.push_back(std::move(row));
    }
    return history;
}

void Trainer::dump_decisions(const std::filesystem::path& path,
                             std::span<const int> group_ids, const rules::RuleSet& rs,
                             double gamma_value) const {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw Error("cannot write " + path.string());
    for (int gid : group_ids) {
        const auto d = decide(ds_.groups[gid], rs, gamma_value, items_by_group_[gid]);
        nlohmann::json trace = nlohmann::json::array();
        for (const auto& t : d.fused.symbolic.trace)
            trace.push_back({{"rule", t.rule},
                             {"matched", t.matched},
                             {"div_by_zero", t.div_by_zero}});
        nlohmann::json j{
            {"group_id", gid},
            {"final_label", to_string(d.fused.final_label)},
            {"path",
             d.fused.path == fusion::GroupDecision::Path::Consistent ? "consistent" : "fused"},
            {"gamma", d.fused.gamma_used},
            {"fused", {d.fused.fused.leadership, d.fused.fused.collaborative}},
            {"neural", {d.fused.neural.leadership, d.fused.neural.collaborative}},
            {"symbolic",
             {d.fused.symbolic.prob.leadership, d.fused.symbolic.prob.collaborative}},
            {"matched_rule", d.fused.symbolic.matched_rule.value_or("")},
            {"trace", trace}};
        out << j.dump() << "\n";
    }
}

}  // namespace dali::train
