#pragma once

#include <optional>
#include <string>

#include "dali/adam.hpp"
#include "dali/agent.hpp"
#include "dali/dataset.hpp"
#include "dali/fusion.hpp"
#include "dali/metrics.hpp"
#include "dali/mlp.hpp"
#include "dali/model.hpp"

namespace dali::train {

struct WeightLossConfig {
    int collab_samples = 5;  // K
    double margin = 0.5;     // delta
};

struct TrainConfig {
    int pretrain_epochs = 5;
    int joint_epochs = 20;  // t_max
    int batch_size = 32;
    double lr = 0.001;
    int dim = 32;
    int negatives = 4;
    std::uint64_t seed = 42;
    WeightLossConfig wl;
    bool ablate_discriminator = false;  // pure attention aggregation everywhere
    double disc_lr = 0.01;
    int disc_passes = 3;
    int mlp_h1 = 16;
    int mlp_h2 = 8;
    int eval_negatives = 100;

    void validate() const;
};

// eta of Eq-style dominance; same clamp/cap as feature extraction
double dominance(const model::MemberWeightVector& w);

// Mean dominance over min(K, available) collaborative-group etas sampled
// without replacement; nullopt when there is nothing to sample.
std::optional<double> collab_benchmark(std::span<const double> collab_etas, int k,
                                       std::uint64_t seed);

// Hinge penalty over leadership-group etas: mean of max(0, margin - (eta - xi)).
// Zero when xi is undefined or no leadership groups exist.
double weight_loss(std::span<const double> leadership_etas, std::optional<double> xi,
                   double margin);

double total_loss(double l_group, double l_weight);

struct EpochRecord {
    MetricsReport metrics;
    double gamma = 0.0;
    std::string active_version;
};

class Trainer {
public:
    Trainer(const data::Dataset& ds, const data::DatasetSplit& split, TrainConfig cfg);

    // Phase 1: user-level preference modeling only; feature standardization
    // statistics are frozen at the end.
    void pretrain();

    // Phase 2: dual-channel joint optimization with the closed rule loop.
    std::vector<EpochRecord> joint_train(repo::RuleRepository& repo,
                                         agent::AgentClient& agent_client,
                                         agent::TriggerConfig& trig,
                                         agent::AgentJournal* journal);

    fusion::GroupDecision classify_group(const data::Group& g, const rules::RuleSet& rs,
                                         double gamma_value,
                                         std::span<const int> profile_items) const;

    // Leave-one-out ranking over the given groups with eval_negatives seeded
    // negatives per group.
    MetricsReport evaluate(std::span<const int> group_ids, const rules::RuleSet& rs,
                           double gamma_value) const;
    void add_user_metrics(MetricsReport& rep) const;

    // fraction of planted labels the fused decision reproduces at gamma 0
    double fused_accuracy(const rules::RuleSet& rs) const;

    void dump_decisions(const std::filesystem::path& path, std::span<const int> group_ids,
                        const rules::RuleSet& rs, double gamma_value) const;

    const model::Model& model() const { return model_; }
    model::Model& model() { return model_; }
    const neural::MlpParams& mlp() const { return mlp_; }
    neural::MlpParams& mlp() { return mlp_; }
    const rules::FeatureStats& feature_stats() const { return stats_; }
    rules::FeatureStats& feature_stats() { return stats_; }
    const TrainConfig& config() const { return cfg_; }

private:
    struct Decision {
        fusion::GroupDecision fused;
        int leader_index = 0;
    };

    Decision decide(const data::Group& g, const rules::RuleSet& rs, double gamma_value,
                    std::span<const int> profile_items) const;
    std::vector<int> rank_candidates(const data::Group& g, GroupLabel label, int leader_index,
                                     std::span<const int> candidates) const;

    const data::Dataset& ds_;
    data::DatasetSplit split_;
    TrainConfig cfg_;
    model::Model model_;
    neural::MlpParams mlp_;
    rules::FeatureStats stats_;
    model::Adam opt_user_, opt_item_, opt_attn_, opt_mlp_;
    model::ModelGrads grads_;
    std::vector<std::vector<int>> items_by_group_;
    std::vector<std::vector<int>> items_by_user_;
};

}  // namespace dali::train
