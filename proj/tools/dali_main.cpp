// dali -- synthetic data, training, evaluation and rule-repository tooling
// for the dual-stream leadership-identification recommender.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>

#include "CLI11.hpp"
#include "json.hpp"
#include "dali/checkpoint.hpp"
#include "dali/drift.hpp"
#include "dali/synthetic.hpp"
#include "dali/trainer.hpp"

namespace fs = std::filesystem;
using namespace dali;

namespace {

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return buf;
}

void write_history(const fs::path& path, const std::vector<train::EpochRecord>& history) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw Error("cannot write " + path.string());
    out << "epoch,loss,l_weight,group_hr5,group_hr10,group_ndcg5,group_ndcg10,"
           "user_hr5,user_hr10,user_ndcg5,user_ndcg10,active_version,gamma\n";
    for (const auto& row : history) {
        const auto& m = row.metrics;
        out << m.epoch << ',' << fmt(m.loss) << ',' << fmt(m.weight_loss) << ','
            << fmt(m.hr5) << ',' << fmt(m.hr10) << ',' << fmt(m.ndcg5) << ','
            << fmt(m.ndcg10) << ',' << fmt(m.user_hr5) << ',' << fmt(m.user_hr10) << ','
            << fmt(m.user_ndcg5) << ',' << fmt(m.user_ndcg10) << ',' << row.active_version
            << ',' << fmt(row.gamma) << '\n';
    }
}

void print_metrics(const train::MetricsReport& m) {
    std::cout << "group  hr@5=" << fmt(m.hr5) << " hr@10=" << fmt(m.hr10)
              << " ndcg@5=" << fmt(m.ndcg5) << " ndcg@10=" << fmt(m.ndcg10)
              << " (skipped " << m.skipped_groups << ")\n";
    std::cout << "user   hr@5=" << fmt(m.user_hr5) << " hr@10=" << fmt(m.user_hr10)
              << " ndcg@5=" << fmt(m.user_ndcg5) << " ndcg@10=" << fmt(m.user_ndcg10) << "\n";
}

repo::RuleRepository open_or_seed_repo(const fs::path& dir) {
    if (fs::exists(dir / "versions.jsonl")) return repo::RuleRepository::load(dir);
    auto repo = repo::RuleRepository::with_seed_rules();
    repo.save(dir);
    return repo;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"DALI: dual-stream adaptive leadership identification for group "
                 "recommendation"};
    app.require_subcommand(1);

    // synth ------------------------------------------------------------
    auto* synth = app.add_subcommand("synth", "generate a synthetic dataset with planted "
                                              "group types");
    data::SynthConfig synth_cfg;
    std::uint64_t synth_seed = 7;
    std::string synth_out;
    synth->add_option("--groups", synth_cfg.num_groups, "number of groups");
    synth->add_option("--users", synth_cfg.num_users, "number of users (0 = 5x groups)");
    synth->add_option("--items", synth_cfg.num_items, "number of items (0 = 4x groups)");
    synth->add_option("--leader-frac", synth_cfg.leadership_fraction,
                      "fraction of groups with a planted leader");
    synth->add_option("--group-size-min", synth_cfg.group_size_min, "minimum group size");
    synth->add_option("--group-size-max", synth_cfg.group_size_max, "maximum group size");
    synth->add_option("--items-min", synth_cfg.items_per_entity_min,
                      "minimum interactions per entity");
    synth->add_option("--items-max", synth_cfg.items_per_entity_max,
                      "maximum interactions per entity");
    synth->add_option("--seed", synth_seed, "random seed");
    std::string synth_config;
    synth->add_option("--config", synth_config,
                      "flat key=value config file; explicit flags win");
    synth->add_option("--out", synth_out, "output dataset directory")->required();

    // train ------------------------------------------------------------
    auto* tr = app.add_subcommand("train", "pretrain and jointly train on a dataset");
    std::string train_data, train_out = "out", train_repo, train_agent = "scripted";
    train::TrainConfig tcfg;
    tr->add_option("--data", train_data, "dataset directory")->required();
    tr->add_option("--out", train_out, "output directory");
    tr->add_option("--repo", train_repo, "rule repository directory (default <out>/repo)");
    tr->add_option("--seed", tcfg.seed, "random seed");
    tr->add_option("--epochs", tcfg.joint_epochs, "joint-training epochs");
    tr->add_option("--pretrain-epochs", tcfg.pretrain_epochs, "pretraining epochs");
    tr->add_option("--batch-size", tcfg.batch_size, "batch size");
    tr->add_option("--dim", tcfg.dim, "embedding dimension");
    tr->add_option("--lr", tcfg.lr, "learning rate");
    tr->add_option("--delta", tcfg.wl.margin, "dominance margin delta");
    tr->add_option("--bench-k", tcfg.wl.collab_samples, "collaborative benchmark sample K");
    tr->add_option("--agent", train_agent, "rule agent: scripted or llm")
        ->check(CLI::IsMember({"scripted", "llm"}));

    // eval -------------------------------------------------------------
    auto* ev = app.add_subcommand("eval", "evaluate a checkpoint on the test split");
    std::string eval_data, eval_model, eval_repo, eval_out;
    std::uint64_t eval_seed = 42;
    ev->add_option("--data", eval_data, "dataset directory")->required();
    ev->add_option("--model", eval_model, "model checkpoint path")->required();
    ev->add_option("--repo", eval_repo, "rule repository directory")->required();
    ev->add_option("--out", eval_out, "directory for the decision audit dump");
    ev->add_option("--seed", eval_seed, "split seed used at training time");

    // rules-list / rules-show / rules-rollback ---------------------------
    auto* rlist = app.add_subcommand("rules-list", "list rule versions");
    std::string repo_dir;
    rlist->add_option("--repo", repo_dir, "rule repository directory")->required();

    auto* rshow = app.add_subcommand("rules-show", "print a version's rules");
    std::string show_repo, show_version;
    rshow->add_option("--repo", show_repo, "rule repository directory")->required();
    rshow->add_option("--to", show_version, "version to show (default active)");

    auto* rroll = app.add_subcommand("rules-rollback", "restore an earlier rule version");
    std::string roll_repo, roll_to;
    rroll->add_option("--repo", roll_repo, "rule repository directory")->required();
    rroll->add_option("--to", roll_to, "target version")->required();

    // agent-replay -------------------------------------------------------
    auto* replay = app.add_subcommand("agent-replay",
                                      "re-run drift detection over a stored perf log");
    std::string perf_path;
    replay->add_option("--perf", perf_path, "perf_log.jsonl path")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help
        app.exit(e);
        return 2;
    }

    try {
        if (*synth) {
            if (!synth_config.empty()) {
                std::ifstream in(synth_config);
                if (!in) throw Error("missing file: " + synth_config);
                std::string line;
                int ln = 0;
                while (std::getline(in, line)) {
                    ++ln;
                    if (line.empty() || line[0] == '#') continue;
                    auto eq = line.find('=');
                    if (eq == std::string::npos)
                        throw Error(synth_config + ":" + std::to_string(ln) +
                                    ": expected key=value");
                    std::string key = line.substr(0, eq);
                    const std::string value = line.substr(eq + 1);
                    std::replace(key.begin(), key.end(), '_', '-');
                    const std::string flag = "--" + key;
                    auto* opt = synth->get_option_no_throw(flag);
                    if (!opt)
                        throw Error(synth_config + ":" + std::to_string(ln) +
                                    ": unknown key '" + key + "'");
                    if (opt->count() == 0) opt->add_result(value);
                }
                // re-run conversion with the file-provided values
                for (auto* opt : synth->get_options())
                    if (opt->count() > 0) opt->run_callback();
            }
            auto ds = data::generate_synthetic(synth_cfg, synth_seed);
            data::save_dataset(ds, synth_out);
            std::cout << "wrote " << ds.groups.size() << " groups, " << ds.num_users
                      << " users, " << ds.num_items << " items to " << synth_out << "\n";
            return 0;
        }

        if (*tr) {
            const fs::path out_dir = train_out;
            const fs::path repo_dir2 = train_repo.empty() ? out_dir / "repo" : fs::path(train_repo);
            fs::create_directories(out_dir);

            auto ds = data::load_dataset(train_data);
            auto split = data::split_groups(ds, 0.6, 0.2, 0.2, tcfg.seed);
            auto repo = open_or_seed_repo(repo_dir2);

            train::Trainer trainer(ds, split, tcfg);
            trainer.pretrain();

            agent::AgentJournal journal(repo_dir2 / "agent_log.jsonl");
            auto client = agent::make_agent(train_agent);
            agent::TriggerConfig trig;
            auto history = trainer.joint_train(repo, *client, trig, &journal);

            repo.save(repo_dir2);
            write_history(out_dir / "history.csv", history);
            train::Checkpoint ck{trainer.model(), trainer.mlp(), trainer.feature_stats(),
                                 tcfg.seed};
            save_checkpoint(ck, out_dir / "model.json");

            auto rep = trainer.evaluate(split.test_groups, repo.active().rules, 0.0);
            trainer.add_user_metrics(rep);
            std::cout << "test split:\n";
            print_metrics(rep);
            trainer.dump_decisions(out_dir / "decisions.jsonl", split.test_groups,
                                   repo.active().rules, 0.0);
            return 0;
        }

        if (*ev) {
            auto ds = data::load_dataset(eval_data);
            auto split = data::split_groups(ds, 0.6, 0.2, 0.2, eval_seed);
            auto ck = train::load_checkpoint(eval_model);
            auto repo = repo::RuleRepository::load(eval_repo);

            train::TrainConfig cfg;
            cfg.dim = (int)ck.model.emb.dim;
            cfg.seed = eval_seed;
            train::Trainer trainer(ds, split, cfg);
            trainer.model() = ck.model;
            trainer.mlp() = ck.mlp;
            trainer.feature_stats() = ck.stats;

            auto rep = trainer.evaluate(split.test_groups, repo.active().rules, 0.0);
            trainer.add_user_metrics(rep);
            std::cout << "test split:\n";
            print_metrics(rep);
            if (trainer.fused_accuracy(repo.active().rules) > 0 &&
                std::any_of(ds.groups.begin(), ds.groups.end(),
                            [](const data::Group& g) { return g.planted.has_value(); }))
                std::cout << "fused-label accuracy vs planted: "
                          << fmt(trainer.fused_accuracy(repo.active().rules)) << "\n";
            if (!eval_out.empty()) {
                fs::create_directories(eval_out);
                trainer.dump_decisions(fs::path(eval_out) / "decisions.jsonl",
                                       split.test_groups, repo.active().rules, 0.0);
            }
            return 0;
        }

        if (*rlist) {
            auto repo = repo::RuleRepository::load(repo_dir);
            for (const auto& v : repo.versions())
                std::cout << v.version.str() << "  " << v.fingerprint.substr(0, 12) << "  "
                          << v.author << "  epoch " << v.created_at << "  "
                          << v.change_context << "\n";
            return 0;
        }

        if (*rshow) {
            auto repo = repo::RuleRepository::load(show_repo);
            const repo::RuleVersion* v = &repo.active();
            if (!show_version.empty()) {
                v = repo.find(repo::SemVer::parse(show_version));
                if (!v) throw Error("unknown version " + show_version);
            }
            std::cout << "# version " << v->version.str() << " (" << v->fingerprint << ")\n"
                      << rules::canonical_text(v->rules);
            return 0;
        }

        if (*rroll) {
            auto repo = repo::RuleRepository::load(roll_repo);
            const long long epoch =
                repo.perf_log().empty() ? 0 : repo.perf_log().back().epoch;
            auto log = repo.rollback(repo::SemVer::parse(roll_to), "manual rollback", epoch, "human");
            repo.save(roll_repo);
            std::cout << "rolled back " << log.from_version.str() << " -> "
                      << log.to_version.str() << " (new active "
                      << repo.active().version.str() << ")\n";
            return 0;
        }

        if (*replay) {
            std::ifstream in(perf_path);
            if (!in) throw Error("missing file: " + perf_path);
            std::vector<repo::PerfRecord> log;
            agent::TriggerConfig trig;
            std::string line;
            int fired = 0;
            while (std::getline(in, line)) {
                if (line.empty()) continue;
                auto j = nlohmann::json::parse(line);
                repo::PerfRecord p;
                p.epoch = j.at("epoch").get<long long>();
                p.group_ndcg10 = j.at("group_ndcg10").get<double>();
                p.group_hr10 = j.value("group_hr10", 0.0);
                p.user_ndcg10 = j.at("user_ndcg10").get<double>();
                p.loss = j.at("loss").get<double>();
                log.push_back(p);
                if (auto ev2 = agent::detect_drift(log, trig)) {
                    std::cout << "epoch " << ev2->epoch << ": " << to_string(ev2->kind)
                              << " (group_delta=" << fmt(ev2->group_delta)
                              << ", user_delta=" << fmt(ev2->user_delta)
                              << ", loss_delta=" << fmt(ev2->loss_delta) << ")\n";
                    ++fired;
                }
            }
            std::cout << fired << " drift event(s)\n";
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
