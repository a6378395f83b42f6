// Acceptance suite: one pass/fail line per criterion, nonzero exit when any
// criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>

#include "dali/agent.hpp"
#include "dali/checkpoint.hpp"
#include "dali/fusion.hpp"
#include "dali/metrics.hpp"
#include "dali/synthetic.hpp"
#include "dali/trainer.hpp"
#include "perf_fixtures.hpp"
#include "rule_corpus.hpp"

using namespace dali;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;
std::vector<std::string> g_notes;

double now_s() {
    using clock = std::chrono::steady_clock;
    return std::chrono::duration<double>(clock::now().time_since_epoch()).count();
}

void report(int id, const std::string& what, bool pass, double seconds) {
    std::printf("[%s] criterion %d: %s (%.2fs)\n", pass ? "PASS" : "FAIL", id, what.c_str(),
                seconds);
    if (!pass) ++g_failures;
}

bool close(double a, double b, double tol = 1e-9) { return std::abs(a - b) <= tol; }

model::MemberWeightVector mw(std::vector<double> w) {
    model::MemberWeightVector v;
    v.weights = std::move(w);
    return v;
}

// ---------------------------------------------------------------------------
// 1. formula unit suite
// ---------------------------------------------------------------------------
void criterion_1() {
    const double t0 = now_s();
    bool ok = true;

    ok &= close(fusion::gamma({0, 100}), 1.0);
    ok &= close(fusion::gamma({50, 100}), 0.5);
    ok &= close(fusion::gamma({150, 100}), 0.0);

    ok &= close(train::dominance(mw({0.7, 0.1, 0.1, 0.1})), 6.0);
    ok &= close(train::dominance(mw({0.5, 0.5})), 0.0);
    ok &= close(train::dominance(mw({0.9, 0.1})), 8.0);

    auto xi = train::collab_benchmark(std::vector<double>{0.0, 0.2, 0.4}, 3, 1);
    ok &= xi.has_value() && close(*xi, 0.2);
    auto xi2 = train::collab_benchmark(std::vector<double>{0.3, 0.5}, 5, 1);
    ok &= xi2.has_value() && close(*xi2, 0.4);
    ok &= !train::collab_benchmark({}, 5, 1).has_value();

    // hinge on delta = eta - xi
    ok &= close(train::weight_loss(std::vector<double>{6.0}, 0.2, 0.5), 0.0);
    ok &= close(train::weight_loss(std::vector<double>{0.2}, 0.1, 0.5), 0.4);
    ok &= close(train::weight_loss({}, 0.1, 0.5), 0.0);

    ok &= close(train::total_loss(1.0, 0.4), 1.4);
    ok &= close(train::total_loss(2.25, 0.0), 2.25);

    std::vector<int> ranked(20);
    std::iota(ranked.begin(), ranked.end(), 0);
    ok &= train::hit_ratio(ranked, 0, 5) == 1;
    ok &= train::hit_ratio(ranked, 5, 5) == 0;
    ok &= train::hit_ratio(ranked, 99, 5) == 0;
    ok &= close(train::ndcg_at_k(ranked, 0, 10), 1.0);
    ok &= close(train::ndcg_at_k(ranked, 2, 10), 0.5);
    ok &= close(train::ndcg_at_k(ranked, 10, 10), 0.0);

    const double dt = now_s() - t0;
    ok &= dt < 1.0;
    report(1, "formula unit suite, exact values under 1s", ok, dt);
}

// ---------------------------------------------------------------------------
// 2. gradient checks vs central finite differences
// ---------------------------------------------------------------------------
bool fd_check_group_loss(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    const std::size_t d = 2 + (std::size_t)(rng() % 3);  // <= 4
    auto m = model::init_model(4, 6, d, rng());
    for (double& x : m.emb.user_mat) x *= 30.0;
    for (double& x : m.emb.item_mat) x *= 30.0;

    data::Group g1, g2;
    g1.id = 0;
    g1.members = {0, 1, 2, 3};
    g2.id = 1;
    g2.members = {1, 3};
    std::vector<model::GroupBatchEntry> batch(2);
    batch[0].group = &g1;
    batch[0].positive = (int)(rng() % 3);
    batch[0].negatives = {3, 4};
    batch[0].mode = model::AggMode::Attention;
    batch[1].group = &g2;
    batch[1].positive = 5;
    batch[1].negatives = {(int)(rng() % 4)};
    batch[1].mode = rng() % 2 ? model::AggMode::Leader : model::AggMode::Attention;
    batch[1].leader_index = (int)(rng() % 2);

    model::ModelGrads grads;
    grads.resize_like(m);
    model::group_loss(m, batch, grads);

    auto loss = [&] {
        model::ModelGrads scratch;
        scratch.resize_like(m);
        return model::group_loss(m, batch, scratch);
    };
    const double eps = 1e-5;
    auto check_block = [&](std::vector<double>& params, const std::vector<double>& grad) {
        for (std::size_t i = 0; i < params.size(); ++i) {
            const double saved = params[i];
            params[i] = saved + eps;
            const double lp = loss();
            params[i] = saved - eps;
            const double lm = loss();
            params[i] = saved;
            const double fd = (lp - lm) / (2 * eps);
            const double rel =
                std::abs(grad[i] - fd) / std::max({std::abs(grad[i]), std::abs(fd), 1e-6});
            if (rel >= 1e-4) return false;
        }
        return true;
    };
    return check_block(m.emb.user_mat, grads.user_mat) &&
           check_block(m.emb.item_mat, grads.item_mat) &&
           check_block(m.attn.theta, grads.attn);
}

bool fd_check_mlp(std::uint64_t seed, bool& usable) {
    std::mt19937_64 rng(seed);
    neural::MlpParams p = neural::init_mlp(8, 16, 8, rng());
    for (double& v : p.theta) v *= 4.0;
    std::vector<double> x(8);
    for (double& v : x) v = std::uniform_real_distribution<double>(-2.0, 2.0)(rng);
    const GroupLabel target = rng() % 2 ? GroupLabel::Leadership : GroupLabel::Collaborative;

    neural::MlpCache cache;
    neural::mlp_forward(p, x, cache);
    const double eps = 1e-5;
    // finite differences are invalid on a ReLU kink
    usable = std::none_of(cache.z1.begin(), cache.z1.end(),
                          [&](double z) { return std::abs(z) < 100 * eps; });
    if (!usable) return true;

    auto grad = neural::mlp_backward(p, target, cache);
    auto loss = [&] {
        neural::MlpCache c;
        auto out = neural::mlp_forward(p, x, c);
        return -std::log(target == GroupLabel::Leadership ? out.leadership
                                                          : out.collaborative);
    };
    for (std::size_t i = 0; i < p.theta.size(); ++i) {
        const double saved = p.theta[i];
        p.theta[i] = saved + eps;
        const double lp = loss();
        p.theta[i] = saved - eps;
        const double lm = loss();
        p.theta[i] = saved;
        const double fd = (lp - lm) / (2 * eps);
        const double rel =
            std::abs(grad[i] - fd) / std::max({std::abs(grad[i]), std::abs(fd), 1e-6});
        if (rel >= 1e-4) return false;
    }
    return true;
}

void criterion_2() {
    const double t0 = now_s();
    bool ok = true;
    for (int k = 0; k < 100; ++k) ok &= fd_check_group_loss(10'000 + k);

    int tested = 0;
    for (int k = 0; tested < 100 && k < 400; ++k) {
        bool usable = false;
        ok &= fd_check_mlp(20'000 + k, usable);
        if (usable) ++tested;
    }
    ok &= tested >= 100;

    const double dt = now_s() - t0;
    ok &= dt < 30.0;
    report(2, "group_loss and mlp_backward match finite differences on 100+ instances",
           ok, dt);
}

// ---------------------------------------------------------------------------
// 3. metric oracle
// ---------------------------------------------------------------------------
void criterion_3() {
    const double t0 = now_s();
    bool ok = true;

    // exhaustive brute-force comparison on every ranking of up to 7 items
    for (int n = 1; n <= 7 && ok; ++n) {
        std::vector<int> ranked(n);
        std::iota(ranked.begin(), ranked.end(), 0);
        std::sort(ranked.begin(), ranked.end());
        do {
            for (int truth = 0; truth < n; ++truth) {
                for (int k = 1; k <= n; ++k) {
                    int oracle_hit = 0;
                    double oracle_gain = 0.0;
                    for (int r = 0; r < n; ++r) {
                        if (ranked[r] == truth && r + 1 <= k) {
                            oracle_hit = 1;
                            oracle_gain = 1.0 / std::log2((double)r + 2.0);
                        }
                    }
                    ok &= train::hit_ratio(ranked, truth, k) == oracle_hit;
                    ok &= train::ndcg_at_k(ranked, truth, k) == oracle_gain;
                }
            }
        } while (std::next_permutation(ranked.begin(), ranked.end()) && ok);
    }

    // random scorer over 101 candidates: E[HR@10] = 10/101
    std::mt19937_64 rng(7777);
    const int trials = 1000;
    double hits = 0;
    for (int t = 0; t < trials; ++t) {
        std::vector<std::pair<double, int>> scored;
        for (int c = 0; c < 101; ++c)
            scored.emplace_back(std::uniform_real_distribution<double>(0, 1)(rng), c);
        std::sort(scored.begin(), scored.end(),
                  [](const auto& a, const auto& b) { return a.first > b.first; });
        std::vector<int> ranked;
        for (const auto& [s, c] : scored) ranked.push_back(c);
        hits += train::hit_ratio(ranked, 0, 10);
    }
    const double mean = hits / trials;
    ok &= std::abs(mean - 0.099) < 0.03;
    g_notes.push_back("criterion 3: random-scorer HR@10 mean " + std::to_string(mean));

    report(3, "HR/NDCG match the brute-force oracle; random scorer near 10/101", ok,
           now_s() - t0);
}

// ---------------------------------------------------------------------------
// 4. rule engine properties
// ---------------------------------------------------------------------------
void criterion_4() {
    const double t0 = now_s();
    bool ok = true;

    // 50-rule corpus round trip
    auto corpus = rules::parse_rules(kRuleCorpus);
    ok &= corpus.rules.size() == 50;
    for (const auto& r : corpus.rules) {
        auto back = rules::parse_rule(rules::format_rule(r));
        ok &= rules::equal(back, r);
    }
    ok &= rules::canonical_text(rules::parse_rules(rules::canonical_text(corpus))) ==
          rules::canonical_text(corpus);

    // fingerprint stability across save/load
    const fs::path dir = fs::temp_directory_path() / "dali_acceptance_repo";
    fs::remove_all(dir);
    auto repo = repo::RuleRepository::with_seed_rules();
    repo.commit(corpus, repo::Bump::Minor, "corpus", "human", 1);
    const std::string fp = repo.active().fingerprint;
    repo.save(dir);
    auto loaded = repo::RuleRepository::load(dir);
    ok &= loaded.active().fingerprint == fp;
    ok &= repo::fingerprint(loaded.active().rules) == fp;

    // rollback restores fingerprint-equal behavior
    loaded.rollback(repo::SemVer{0, 1, 0}, "acceptance", 2);
    ok &= loaded.active().fingerprint == loaded.versions()[0].fingerprint;
    std::mt19937_64 rng(5150);
    for (int t = 0; t < 50; ++t) {
        const int n = 2 + (int)(rng() % 5);
        std::vector<double> w(n);
        double sum = 0;
        for (double& x : w) {
            x = std::uniform_real_distribution<double>(0.01, 1.0)(rng);
            sum += x;
        }
        for (double& x : w) x /= sum;
        auto f = rules::extract_features(mw(w));
        auto a = rules::classify_features(loaded.versions()[0].rules, f);
        auto b = rules::classify_features(loaded.active().rules, f);
        ok &= a.label == b.label && a.prob.leadership == b.prob.leadership &&
              a.matched_rule == b.matched_rule;
    }

    // perf log rejects non-monotone epochs
    repo::PerfRecord p;
    p.epoch = 5;
    p.active_version = loaded.active().version;
    loaded.append_perf(p);
    bool threw = false;
    try {
        p.epoch = 5;
        loaded.append_perf(p);
    } catch (const Error&) {
        threw = true;
    }
    ok &= threw;

    // append-only survival across an arbitrary API sequence
    loaded.save(dir);
    auto snapshot = repo::RuleRepository::load(dir);
    auto mutated = repo::RuleRepository::load(dir);
    mutated.commit(rules::parse_rules(
                       "RULE extra: IF entropy > 1 THEN Collaborative CONF 0.7 PRI 3\n"),
                   repo::Bump::Minor, "extra", "agent", 6);
    p.epoch = 9;
    mutated.append_perf(p);
    mutated.rollback(repo::SemVer{0, 1, 0}, "again", 10);
    repo::CaseRecord c;
    c.features = rules::extract_features(mw({0.6, 0.4}));
    mutated.add_case(c);
    mutated.save(dir);
    auto relived = repo::RuleRepository::load(dir);
    for (const auto& v : snapshot.versions()) {
        const auto* found = relived.find(v.version);
        ok &= found && found->fingerprint == v.fingerprint &&
              rules::canonical_text(found->rules) == rules::canonical_text(v.rules) &&
              found->created_at == v.created_at;
    }
    for (std::size_t k = 0; k < snapshot.perf_log().size(); ++k) {
        ok &= relived.perf_log()[k].epoch == snapshot.perf_log()[k].epoch;
        ok &= relived.perf_log()[k].group_ndcg10 == snapshot.perf_log()[k].group_ndcg10;
    }
    fs::remove_all(dir);

    report(4, "parser round-trip, fingerprints, rollback equality, append-only log", ok,
           now_s() - t0);
}

// ---------------------------------------------------------------------------
// 5. case-study trajectory replay
// ---------------------------------------------------------------------------
void criterion_5() {
    const double t0 = now_s();
    bool ok = true;
    agent::TriggerConfig cfg;

    auto log = case_study_log();
    std::vector<std::pair<long long, agent::DriftKind>> fired;
    for (std::size_t upto = 1; upto <= log.size(); ++upto) {
        std::span<const repo::PerfRecord> prefix(log.data(), upto);
        if (auto ev = agent::detect_drift(prefix, cfg)) fired.emplace_back(ev->epoch, ev->kind);
    }
    ok &= fired.size() == 3;
    ok &= fired.size() == 3 && fired[0] == std::pair{2LL, agent::DriftKind::AbruptDrop};
    ok &= fired.size() == 3 && fired[1] == std::pair{6LL, agent::DriftKind::SustainedDecline};
    ok &= fired.size() == 3 && fired[2] == std::pair{8LL, agent::DriftKind::Deadlock};

    auto flat = flat_log();
    for (std::size_t upto = 1; upto <= flat.size(); ++upto) {
        std::span<const repo::PerfRecord> prefix(flat.data(), upto);
        ok &= !agent::detect_drift(prefix, cfg).has_value();
    }

    const double dt = now_s() - t0;
    ok &= dt < 1.0;
    report(5, "reported deltas fire AbruptDrop / SustainedDecline / Deadlock; flat log quiet",
           ok, dt);
}

// ---------------------------------------------------------------------------
// 6 & 7. end-to-end synthetic experiment and batch-size sweep
// ---------------------------------------------------------------------------
struct RunResult {
    std::vector<train::EpochRecord> history;
    train::MetricsReport test;
    double fused_accuracy = 0.0;
    std::size_t versions = 0;
};

RunResult run_experiment(const data::Dataset& ds, const data::DatasetSplit& split,
                         int batch_size, bool ablate) {
    train::TrainConfig cfg;
    cfg.pretrain_epochs = 5;
    cfg.joint_epochs = 20;
    cfg.dim = 32;
    cfg.seed = 42;
    cfg.batch_size = batch_size;
    cfg.ablate_discriminator = ablate;

    train::Trainer t(ds, split, cfg);
    t.pretrain();
    auto repo = repo::RuleRepository::with_seed_rules();
    agent::ScriptedAgent agent;
    agent::TriggerConfig trig;
    RunResult r;
    r.history = t.joint_train(repo, agent, trig, nullptr);
    r.test = t.evaluate(split.test_groups, repo.active().rules, 0.0);
    t.add_user_metrics(r.test);
    r.fused_accuracy = t.fused_accuracy(repo.active().rules);
    r.versions = repo.versions().size();
    return r;
}

bool same_history(const std::vector<train::EpochRecord>& a,
                  const std::vector<train::EpochRecord>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t e = 0; e < a.size(); ++e) {
        const auto& x = a[e].metrics;
        const auto& y = b[e].metrics;
        if (x.loss != y.loss || x.weight_loss != y.weight_loss || x.hr5 != y.hr5 ||
            x.hr10 != y.hr10 || x.ndcg5 != y.ndcg5 || x.ndcg10 != y.ndcg10 ||
            x.user_ndcg10 != y.user_ndcg10 || a[e].gamma != b[e].gamma ||
            a[e].active_version != b[e].active_version)
            return false;
    }
    return true;
}

void criteria_6_and_7() {
    double t0 = now_s();

    data::SynthConfig scfg;
    scfg.num_groups = 200;
    scfg.leadership_fraction = 0.5;
    auto ds = data::generate_synthetic(scfg, 7);
    auto split = data::split_groups(ds, 0.6, 0.2, 0.2, 42);

    auto dali = run_experiment(ds, split, 32, false);
    auto dali_again = run_experiment(ds, split, 32, false);
    auto ablated = run_experiment(ds, split, 32, true);

    const bool acc_ok = dali.fused_accuracy >= 0.90;
    const bool hr_gap_ok = dali.test.hr5 - ablated.test.hr5 >= 0.02;
    const bool ndcg_gap_ok = dali.test.ndcg5 - ablated.test.ndcg5 >= 0.02;
    const bool deterministic = same_history(dali.history, dali_again.history) &&
                               dali.test.hr5 == dali_again.test.hr5 &&
                               dali.fused_accuracy == dali_again.fused_accuracy;
    const double dt6 = now_s() - t0;
    const bool time_ok = dt6 < 300.0;

    char buf[512];
    std::snprintf(buf, sizeof(buf),
                  "criterion 6: accuracy=%.4f; hr5 %.4f vs %.4f (gap %+.4f); ndcg5 %.4f "
                  "vs %.4f (gap %+.4f); rule versions=%zu",
                  dali.fused_accuracy, dali.test.hr5, ablated.test.hr5,
                  dali.test.hr5 - ablated.test.hr5, dali.test.ndcg5, ablated.test.ndcg5,
                  dali.test.ndcg5 - ablated.test.ndcg5, dali.versions);
    g_notes.push_back(buf);
    report(6,
           "planted-truth experiment: accuracy >= 0.90, DALI beats ablated by >= 0.02, "
           "deterministic, under 5 min",
           acc_ok && hr_gap_ok && ndcg_gap_ok && deterministic && time_ok, dt6);

    t0 = now_s();
    auto b16 = run_experiment(ds, split, 16, false);
    auto b256 = run_experiment(ds, split, 256, false);
    const bool small_ok = dali.test.ndcg5 >= b16.test.ndcg5;
    const bool large_ok = dali.test.ndcg5 >= b256.test.ndcg5 - 0.01;
    std::snprintf(buf, sizeof(buf), "criterion 7: ndcg5 bs16=%.4f bs32=%.4f bs256=%.4f",
                  b16.test.ndcg5, dali.test.ndcg5, b256.test.ndcg5);
    g_notes.push_back(buf);
    report(7, "batch sweep peaks at 32 within tolerance", small_ok && large_ok,
           now_s() - t0);
}

// ---------------------------------------------------------------------------
// 8. degradation with an unreachable LLM endpoint
// ---------------------------------------------------------------------------
void criterion_8() {
    const double t0 = now_s();
    bool ok = true;

    setenv("DALI_LLM_ENDPOINT", "http://127.0.0.1:1/v1/chat/completions", 1);
    setenv("DALI_LLM_TIMEOUT_MS", "2000", 1);

    data::SynthConfig scfg;
    scfg.num_groups = 40;
    scfg.leadership_fraction = 0.5;
    auto ds = data::generate_synthetic(scfg, 9);
    auto split = data::split_groups(ds, 0.6, 0.2, 0.2, 9);

    train::TrainConfig cfg;
    cfg.pretrain_epochs = 2;
    cfg.joint_epochs = 6;
    cfg.dim = 16;
    cfg.seed = 9;

    const fs::path dir = fs::temp_directory_path() / "dali_acceptance_llm";
    fs::remove_all(dir);
    fs::create_directories(dir);

    try {
        train::Trainer t(ds, split, cfg);
        t.pretrain();
        auto repo = repo::RuleRepository::with_seed_rules();
        agent::AgentJournal journal(dir / "agent_log.jsonl");
        auto client = agent::make_agent("llm");
        agent::TriggerConfig trig;
        auto history = t.joint_train(repo, *client, trig, &journal);
        ok &= history.size() == 6;
        // every evolve degraded to NoChange: the repository never moved
        ok &= repo.versions().size() == 1;
        ok &= repo.rollbacks().empty();
    } catch (const std::exception& e) {
        g_notes.push_back(std::string("criterion 8: unexpected crash: ") + e.what());
        ok = false;
    }

    int transport_errors = 0;
    std::ifstream in(dir / "agent_log.jsonl");
    std::string line;
    while (std::getline(in, line))
        if (line.find("transport_error") != std::string::npos) ++transport_errors;
    ok &= transport_errors >= 1;
    g_notes.push_back("criterion 8: transport errors logged: " +
                      std::to_string(transport_errors));

    unsetenv("DALI_LLM_ENDPOINT");
    unsetenv("DALI_LLM_TIMEOUT_MS");
    fs::remove_all(dir);

    const double dt = now_s() - t0;
    ok &= dt < 120.0;
    report(8, "llm agent with unreachable endpoint degrades to NoChange, errors logged",
           ok, dt);
}

}  // namespace

int main() {
    criterion_1();
    criterion_2();
    criterion_3();
    criterion_4();
    criterion_5();
    criteria_6_and_7();
    criterion_8();

    for (const auto& n : g_notes) std::printf("  note: %s\n", n.c_str());
    if (g_failures == 0) {
        std::printf("all acceptance criteria passed\n");
        return 0;
    }
    std::printf("%d criterion(s) failed\n", g_failures);
    return 1;
}
