// Acceptance suite: one pass/fail line per criterion, exit code = number of
// failures. Heavier end-to-end checks (7, 8) run on seed-fixed synthetic
// corpora with small model configurations.

#include <chrono>
#include <cmath>
#include <functional>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "helpers.hpp"
#include "taesar/checkpoint.hpp"
#include "taesar/evaluation.hpp"
#include "taesar/synthgen.hpp"
#include "taesar/transformer.hpp"

using namespace taesar;
using namespace taesar::testing;

namespace {

struct Criterion {
    int id;
    std::string name;
    std::function<void(std::ostream &)> body; // throws on failure
};

void require(bool cond, const std::string & what) {
    if (!cond) {
        throw std::runtime_error(what);
    }
}

// --------------------------------------------------------------- criterion 1

void criterion_info_theory(std::ostream & log) {
    auto d4 = [](std::vector<double> p) {
        return distribution_from_probs(std::move(p), {1, 2, 3, 4});
    };
    require(std::abs(entropy_confidence(d4({0.25, 0.25, 0.25, 0.25}))) <= 1e-9,
            "uniform confidence != 0");
    require(std::abs(entropy_confidence(d4({1, 0, 0, 0})) - 1.0) <= 1e-9,
            "one-hot confidence != 1");
    require(std::abs(entropy_confidence(d4({0.5, 0.5, 0, 0})) - 0.5) <= 1e-9,
            "half-mass confidence != 0.5");

    Distribution p = distribution_from_probs({0.5, 0.5}, {1, 2});
    Distribution q = distribution_from_probs({1.0, 0.0}, {1, 2});
    Distribution e1 = distribution_from_probs({1.0, 0.0}, {1, 2});
    Distribution e2 = distribution_from_probs({0.0, 1.0}, {1, 2});
    require(jsd(p, p) <= 1e-12, "jsd(p,p) != 0");
    require(std::abs(jsd(e1, e2) - std::log(2.0)) <= 1e-12, "jsd(e1,e2) != ln 2");

    // Independent oracle: brute-force symmetric KL against the mixture.
    double oracle = 0.0;
    for (size_t i = 0; i < 2; ++i) {
        const double m = 0.5 * (p.probs[i] + q.probs[i]);
        if (p.probs[i] > 0) oracle += 0.5 * p.probs[i] * std::log(p.probs[i] / m);
        if (q.probs[i] > 0) oracle += 0.5 * q.probs[i] * std::log(q.probs[i] / m);
    }
    require(std::abs(jsd(p, q) - oracle) <= 1e-12, "jsd disagrees with KL oracle");
    require(std::abs(jsd(p, q) - 0.21576) <= 1e-4, "jsd hand value != 0.21576");
    log << "hand jsd=" << jsd(p, q);
}

// --------------------------------------------------------------- criterion 2

void criterion_dsp_pairs(std::ostream & log) {
    // Exhaustive: every 2-domain pattern of length 8 (256 patterns), checked
    // for both domains, plus all shorter patterns.
    DomainCatalog cat2 = toy_catalog(1, 1); // T = {1}, S1 = {2}
    int64_t checked = 0;
    for (int len = 1; len <= 8; ++len) {
        for (int mask = 0; mask < (1 << len); ++mask) {
            std::vector<ItemIndex> items(len);
            for (int i = 0; i < len; ++i) {
                items[i] = (mask >> i) & 1 ? 2 : 1;
            }
            MergedSequence seq = make_seq(1, items);
            for (DomainIndex d = 0; d < 2; ++d) {
                require(extract_dsp_pairs(seq, d, cat2) == dsp_oracle(seq, d, cat2),
                        "exhaustive pattern mismatch");
                ++checked;
            }
        }
    }

    DomainCatalog cat4 = toy_catalog(3, 8);
    std::mt19937_64 rng(2024);
    for (int trial = 0; trial < 1000; ++trial) {
        const int len = 1 + static_cast<int>(rng() % 30);
        MergedSequence seq = random_seq(trial + 1, cat4, len, rng);
        for (DomainIndex d = 0; d < cat4.num_domains(); ++d) {
            require(extract_dsp_pairs(seq, d, cat4) == dsp_oracle(seq, d, cat4),
                    "random sequence mismatch");
            ++checked;
        }
    }
    log << checked << " pattern/domain cases";
}

// --------------------------------------------------------------- criterion 3

void criterion_gradient_check(std::ostream & log) {
    DomainCatalog cat = toy_catalog(1, 10); // |V| = 20
    PredictorConfig cfg;
    cfg.hidden_size = 8;
    cfg.layers = 1;
    cfg.heads = 1;
    cfg.inner_size = 8;
    cfg.dropout = 0.0;
    cfg.max_len = 12;
    Net<double> net(cat.num_items(), cfg);
    net.init(99);

    std::mt19937_64 rng(31);
    std::vector<TrainItem> batch;
    for (int b = 0; b < 3; ++b) {
        TrainItem item;
        for (int i = 0; i < 8; ++i) {
            item.seq.push_back(static_cast<ItemIndex>(1 + rng() % 20));
        }
        for (int i = 0; i + 1 < 8; i += 2) {
            item.targets.emplace_back(i, item.seq[i + 1]);
        }
        batch.push_back(std::move(item));
    }
    // epsilon 1e-4 keeps central-difference roundoff below the tolerance for
    // the smallest-magnitude gradients in the sample (~1e-6).
    auto report = gradient_check(net, batch, 1e-4, 1e-4, 200, 7);
    require(report.checked >= 200, "fewer than 200 parameters sampled");
    require(report.max_rel_err < 1e-4, "max relative error too large");
    log << "max_rel_err=" << report.max_rel_err << " over " << report.checked
        << " params";
}

// --------------------------------------------------------------- criterion 4

void criterion_memorization(std::ostream & log) {
    DomainCatalog cat = toy_catalog(1, 50); // |V| = 100
    std::vector<MergedSequence> seqs;
    for (int u = 0; u < 20; ++u) {
        std::vector<ItemIndex> items(12);
        for (int i = 0; i < 12; ++i) {
            items[i] = static_cast<ItemIndex>((u * 5 + i) % 100) + 1;
        }
        seqs.push_back(make_seq(u + 1, items));
    }

    PredictorConfig cfg;
    cfg.hidden_size = 32;
    cfg.layers = 1;
    cfg.heads = 2;
    cfg.inner_size = 64;
    cfg.dropout = 0.0;
    cfg.max_len = 12;
    cfg.lr = 3e-3;
    cfg.batch_size = 4;
    cfg.seed = 11;

    // Initial loss of the fresh near-uniform model.
    TransformerModelF model(cat.num_items(), cfg, cat.fingerprint(), Role::Base);
    model.net().init(cfg.seed);
    auto items = next_item_tasks(seqs, cfg.max_len);
    Net<float>::Cache cache;
    double init_loss = 0.0;
    int64_t n_targets = 0;
    for (const auto & item : items) {
        init_loss += model.net().loss_only(item, cache);
        n_targets += static_cast<int64_t>(item.targets.size());
    }
    init_loss /= static_cast<double>(n_targets);
    require(std::abs(init_loss - std::log(100.0)) <= 0.2,
            "initial loss not within 0.2 of ln(100)");

    TrainControl control;
    control.epochs = 200;
    control.early_stopping = false;
    TrainingReport report = train(model.net(), items, {}, control);
    double final_loss = report.epochs.back().train_loss;
    double best_loss = final_loss;
    for (const auto & e : report.epochs) {
        best_loss = std::min(best_loss, e.train_loss);
    }
    require(best_loss < 0.1, "failed to memorize the cycle corpus (loss " +
                                 std::to_string(best_loss) + ")");
    log << "init_loss=" << init_loss << " (ln|V|=" << std::log(100.0)
        << "), best_loss=" << best_loss << " after " << report.stopping_epoch
        << " epochs";
}

// --------------------------------------------------------------- criterion 5

void criterion_regeneration_invariants(std::ostream & log) {
    DomainCatalog cat = toy_catalog(2, 30); // T:1-30, S1:31-60, S2:61-90
    std::mt19937_64 rng(501);
    std::vector<MergedSequence> seqs;
    for (int u = 1; u <= 1000; ++u) {
        seqs.push_back(random_seq(u, cat, 5 + static_cast<int>(rng() % 26), rng));
    }
    MarkovModel base = fit_markov(seqs, cat, 1.0);
    MarkovModel target = fit_markov_dsp(seqs, cat, 0, 1.0);
    MarkovModel s1 = fit_markov_dsp(seqs, cat, 1, 1.0);
    MarkovModel s2 = fit_markov_dsp(seqs, cat, 2, 1.0);
    DecodingModels models;
    models.base = &base;
    models.target_expert = &target;
    models.source_experts = {nullptr, &s1, &s2};

    RegenerationConfig cfg;
    cfg.seed = 77;
    RegenerationResult a = regenerate_corpus(seqs, models, cat, cfg);
    RegenerationResult b = regenerate_corpus(seqs, models, cat, cfg);

    // Byte-level determinism of the full mapping artifact.
    auto pa = temp_path("accept_map_a.csv");
    auto pb = temp_path("accept_map_b.csv");
    write_mapping_csv(a.records, cat, pa.string());
    write_mapping_csv(b.records, cat, pb.string());
    require(slurp(pa) == slurp(pb), "mapping not byte-identical across runs");
    require(a.regenerated == b.regenerated, "sequences differ across runs");

    int64_t replaced = 0, discarded = 0, kept = 0;
    size_t rec_idx = 0;
    for (size_t s = 0; s < seqs.size(); ++s) {
        // Reconstruct the expected output from the source sequence plus the
        // decision trace, then compare verbatim.
        MergedSequence expected;
        expected.user = seqs[s].user;
        for (size_t pos = 0; pos < seqs[s].events.size(); ++pos) {
            const Interaction & ev = seqs[s].events[pos];
            if (cat.is_target_item(ev.item)) {
                expected.events.push_back(ev);
                ++kept;
                continue;
            }
            require(rec_idx < a.records.size(), "missing mapping record");
            const MappingRecord & rec = a.records[rec_idx++];
            require(rec.user == seqs[s].user &&
                        rec.position == static_cast<int>(pos) &&
                        rec.source_item == ev.item,
                    "mapping record misaligned");
            if (rec.decision == DecisionKind::Replace) {
                expected.events.push_back({rec.target_item, ev.timestamp});
                require(cat.is_target_item(rec.target_item),
                        "replacement outside target vocabulary");
                ++replaced;
            } else {
                require(rec.decision == DecisionKind::Discard,
                        "unexpected keep decision on a source item");
                ++discarded;
            }
            const double ln2 = std::log(2.0);
            const auto & w = rec.weights;
            require(w.alpha_g >= 0.0 && w.alpha_g <= 1.0 && w.alpha_l >= 0.0 &&
                        w.alpha_l <= 1.0,
                    "alpha outside [0,1]");
            require(w.beta_g >= 0.0 && w.beta_g <= ln2 + 1e-12 && w.beta_l >= 0.0 &&
                        w.beta_l <= ln2 + 1e-12,
                    "beta outside [0, ln 2]");
        }
        require(a.regenerated[s] == expected, "output disagrees with decision trace");
        for (const auto & ev : a.regenerated[s].events) {
            require(cat.is_target_item(ev.item), "non-target item in output");
        }
    }
    require(rec_idx == a.records.size(), "extra mapping records");
    log << "kept=" << kept << " replaced=" << replaced << " discarded=" << discarded
        << " degenerate=" << a.degenerate_count;
}

// --------------------------------------------------------------- criterion 6

void criterion_metric_oracle(std::ostream & log) {
    std::mt19937_64 rng(606);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 500; ++trial) {
        const int n = 2 + static_cast<int>(rng() % 49); // |candidates| <= 50
        std::vector<ItemIndex> cands(n);
        for (int i = 0; i < n; ++i) cands[i] = i + 1;
        std::vector<double> scores(n);
        for (auto & s : scores) {
            s = (rng() % 5 == 0) ? 0.25 : u(rng);
        }
        const ItemIndex target = static_cast<ItemIndex>(1 + rng() % n);
        require(rank_from_scores(scores, cands, target) ==
                    rank_oracle(scores, cands, target),
                "rank disagrees with full-sort oracle");
    }

    // Closed forms through the evaluation harness: geometric distribution
    // puts item k exactly at rank k.
    DomainCatalog cat = toy_catalog(1, 15);
    std::vector<double> probs(cat.num_items());
    double sum = 0.0;
    for (size_t i = 0; i < probs.size(); ++i) {
        probs[i] = std::pow(0.8, static_cast<double>(i));
        sum += probs[i];
    }
    for (auto & p : probs) p /= sum;
    FixedPredictor model(full_vocab_dist(cat, probs), cat.fingerprint());
    auto one = [&](ItemIndex label, const std::vector<int> & ks) {
        EvalInstance inst;
        inst.user = 1;
        inst.context = {1};
        inst.label = label;
        inst.label_domain = cat.target();
        return evaluate_flat(model, {inst}, cat.target_items(), ks);
    };
    RankingMetrics r1 = one(1, {10});
    require(std::abs(r1.at_k(10).hit_rate - 1.0) < 1e-12 &&
                std::abs(r1.at_k(10).ndcg - 1.0) < 1e-12 &&
                std::abs(r1.at_k(10).mrr - 1.0) < 1e-12,
            "rank-1 closed form");
    RankingMetrics r3 = one(3, {10});
    require(std::abs(r3.at_k(10).ndcg - 0.5) < 1e-12 &&
                std::abs(r3.at_k(10).mrr - 1.0 / 3.0) < 1e-12 &&
                std::abs(r3.at_k(10).hit_rate - 1.0) < 1e-12,
            "rank-3 closed form");
    RankingMetrics r11 = one(11, {10, 20});
    require(r11.at_k(10).hit_rate == 0.0 && r11.at_k(10).ndcg == 0.0 &&
                r11.at_k(10).mrr == 0.0 && std::abs(r11.at_k(20).hit_rate - 1.0) < 1e-12,
            "rank-11 closed form");
    log << "500 random + 3 closed-form cases";
}

// --------------------------------------------------------------- criterion 7

PredictorConfig desk_config(uint64_t seed) {
    PredictorConfig cfg;
    cfg.hidden_size = 32;
    cfg.layers = 1;
    cfg.heads = 2;
    cfg.inner_size = 32;
    cfg.dropout = 0.1;
    cfg.max_len = 64;
    cfg.lr = 3e-3;
    cfg.batch_size = 32;
    cfg.seed = seed;
    return cfg;
}

void criterion_planted_structure(std::ostream & log) {
    // Anti-correlated source domains (per-domain cluster shifts): mixed-domain
    // histories carry systematically misleading transitions, the regime the
    // regeneration pipeline is meant to repair. Transfer accuracy is scored in
    // the latent (shift-corrected) frame against the planted oracle.
    GeneratorSpec spec;
    spec.n_source_domains = 3;
    spec.n_clusters = 5;
    spec.items_per_domain_per_cluster = 15;
    spec.n_users = 1200;
    spec.min_length = 15;
    spec.max_length = 40;
    spec.transfer_rate = 0.5;
    spec.within_cluster_coherence = 0.9;
    spec.noise_rate = 0.05;
    spec.domain_cluster_shift = {0, 1, 2, 3};
    spec.seed = 7;
    SyntheticCorpus synth = generate(spec);

    RegenerationConfig regen_cfg;
    regen_cfg.seed = 7;
    ComparisonReport report = run_comparison(synth.corpus, regen_cfg, desk_config(42),
                                             {1, 2, 3}, /*pipeline_epochs=*/6,
                                             /*downstream_epochs=*/6);

    TransferAccuracy acc =
        oracle_transfer_accuracy(report.mappings, synth.oracle, synth.corpus.catalog);
    const double hr_regen = report.mean_metric("regenerated", 10, &MetricsAtK::hit_rate);
    const double hr_mixed = report.mean_metric("naive-mixed", 10, &MetricsAtK::hit_rate);
    const double hr_orig = report.mean_metric("original", 10, &MetricsAtK::hit_rate);
    log << "transfer_acc=" << acc.accuracy << " (chance 0.20, discard_frac="
        << acc.discard_fraction << "), HR@10 orig=" << hr_orig
        << " mixed=" << hr_mixed << " regen=" << hr_regen;
    require(acc.n_replaced > 0, "no replacements produced");
    require(acc.accuracy >= 0.60, "transfer accuracy below 0.60");
    require(hr_regen >= hr_mixed, "regenerated HR@10 below naive-mixed");
}

// --------------------------------------------------------------- criterion 8

void criterion_gradient_conflict(std::ostream & log) {
    GeneratorSpec spec;
    spec.n_source_domains = 1;
    spec.n_clusters = 5;
    spec.items_per_domain_per_cluster = 6;
    spec.n_users = 300;
    spec.min_length = 15;
    spec.max_length = 30;
    spec.transfer_rate = 0.5;
    spec.within_cluster_coherence = 0.95;
    spec.noise_rate = 0.02;
    spec.domain_cluster_shift = {0, 2}; // anti-correlated planted transitions
    spec.seed = 88;
    SyntheticCorpus synth = generate(spec);

    PredictorConfig cfg = desk_config(13);
    cfg.dropout = 0.0;
    TrainControl control;
    control.epochs = 3;
    control.early_stopping = false;
    auto model = train_base<float>(synth.corpus.merged, synth.corpus.catalog, cfg, {},
                                   nullptr, control);

    // Matrix contract on the per-domain grouping.
    auto matrix = gradient_conflict(*model, synth.corpus, 128, 5);
    require(matrix.labels.size() == 2, "expected a 2x2 matrix");
    for (size_t i = 0; i < 2; ++i) {
        require(std::abs(matrix.cosine[i][i] - 1.0) <= 1e-6, "diagonal not 1");
        for (size_t j = 0; j < 2; ++j) {
            require(matrix.cosine[i][j] == matrix.cosine[j][i], "not symmetric");
        }
    }

    // Directional claim: split each domain into halves; within-domain mean
    // cosine must exceed cross-domain mean cosine.
    const auto & cat = synth.corpus.catalog;
    std::vector<std::pair<std::string, std::vector<TrainItem>>> groups;
    for (DomainIndex d = 0; d < cat.num_domains(); ++d) {
        auto items = dsp_tasks(synth.corpus.merged, cat, d, cfg.max_len, nullptr);
        require(items.size() >= 2, "too few DSP tasks");
        std::vector<TrainItem> first(items.begin(), items.begin() + items.size() / 2);
        std::vector<TrainItem> second(items.begin() + items.size() / 2, items.end());
        groups.emplace_back(cat.name(d) + "/a", std::move(first));
        groups.emplace_back(cat.name(d) + "/b", std::move(second));
    }
    auto split_matrix = gradient_conflict(*model, groups);
    const double within =
        0.5 * (split_matrix.cosine[0][1] + split_matrix.cosine[2][3]);
    const double cross = 0.25 * (split_matrix.cosine[0][2] + split_matrix.cosine[0][3] +
                                 split_matrix.cosine[1][2] + split_matrix.cosine[1][3]);
    log << "within=" << within << " cross=" << cross;
    require(within > cross, "within-domain alignment does not exceed cross-domain");
}

// --------------------------------------------------------------- criterion 9

void criterion_ablation_wiring(std::ostream & log) {
    DomainCatalog cat = toy_catalog(2, 5);
    std::mt19937_64 rng(909);
    std::vector<MergedSequence> seqs;
    for (int u = 1; u <= 50; ++u) {
        seqs.push_back(random_seq(u, cat, 8 + static_cast<int>(rng() % 10), rng));
    }
    // Attention experts, deliberately lightly trained: DSP-fitted Markov
    // experts have disjoint supports (every off-domain item sits exactly at
    // the smoothing floor), which makes the global discard gate structurally
    // inert. Lightly trained nets leak mass across domains, so the trace
    // contains both gate outcomes.
    PredictorConfig cfg;
    cfg.hidden_size = 16;
    cfg.layers = 1;
    cfg.heads = 2;
    cfg.inner_size = 16;
    cfg.dropout = 0.0;
    cfg.max_len = 20;
    cfg.lr = 3e-3;
    cfg.batch_size = 8;
    cfg.seed = 5;
    TrainControl control;
    control.epochs = 8;
    control.early_stopping = false;
    auto base = train_base<float>(seqs, cat, cfg, {}, nullptr, control);
    AdaptOptions adapt_opts;
    adapt_opts.epochs = 6;
    adapt_opts.early_stopping = false;
    adapt_opts.holdout_validation = false;
    auto target = adapt_domain(*base, seqs, cat, 0, cfg, adapt_opts);
    auto s1 = adapt_domain(*base, seqs, cat, 1, cfg, adapt_opts);
    auto s2 = adapt_domain(*base, seqs, cat, 2, cfg, adapt_opts);
    DecodingModels models;
    models.base = base.get();
    models.target_expert = target.get();
    models.source_experts = {nullptr, s1.get(), s2.get()};

    RegenerationConfig full_cfg;
    full_cfg.seed = 3;
    RegenerationResult full = regenerate_corpus(seqs, models, cat, full_cfg);
    require(!full.records.empty(), "fixture produced no source positions");

    auto aligned = [&](const RegenerationResult & other) {
        require(other.records.size() == full.records.size(), "trace length differs");
        for (size_t i = 0; i < full.records.size(); ++i) {
            require(other.records[i].user == full.records[i].user &&
                        other.records[i].position == full.records[i].position &&
                        other.records[i].source_item == full.records[i].source_item,
                    "trace positions differ");
        }
    };
    auto is_context_free = [&](const MappingRecord & r) { return r.position == 0; };

    // w/o SDE: the beta terms vanish; alpha_g is untouched.
    RegenerationConfig no_sde = full_cfg;
    no_sde.use_source_expert = false;
    RegenerationResult r_sde = regenerate_corpus(seqs, models, cat, no_sde);
    aligned(r_sde);
    bool full_has_beta = false;
    for (size_t i = 0; i < full.records.size(); ++i) {
        const auto & f = full.records[i];
        const auto & o = r_sde.records[i];
        require(o.weights.beta_g == 0.0 && o.weights.beta_l == 0.0,
                "w/o SDE still carries beta");
        if (!is_context_free(f)) {
            require(std::abs(o.weights.alpha_g - f.weights.alpha_g) <= 1e-12,
                    "w/o SDE changed alpha_g");
            full_has_beta = full_has_beta || f.weights.beta_g > 0.0;
        }
    }
    require(full_has_beta, "full config never used the source expert");

    // w/o GCS: no gate, so every position with context becomes a replacement;
    // positions the full config already replaced keep the same target item.
    RegenerationConfig no_gcs = full_cfg;
    no_gcs.use_global = false;
    RegenerationResult r_gcs = regenerate_corpus(seqs, models, cat, no_gcs);
    aligned(r_gcs);
    int rescued = 0;
    for (size_t i = 0; i < full.records.size(); ++i) {
        const auto & f = full.records[i];
        const auto & o = r_gcs.records[i];
        if (is_context_free(f)) {
            require(o.decision == DecisionKind::Discard, "context-free position kept");
            continue;
        }
        require(o.decision == DecisionKind::Replace, "w/o GCS still discards");
        if (f.decision == DecisionKind::Replace) {
            require(o.target_item == f.target_item,
                    "w/o GCS changed an existing replacement");
        } else {
            ++rescued;
        }
    }
    require(rescued > 0, "gate never fired in the full config");

    // w/o LCS: the discard gate is untouched; replacements come from the
    // global score and the local weights stay unset.
    RegenerationConfig no_lcs = full_cfg;
    no_lcs.use_local = false;
    RegenerationResult r_lcs = regenerate_corpus(seqs, models, cat, no_lcs);
    aligned(r_lcs);
    for (size_t i = 0; i < full.records.size(); ++i) {
        const auto & f = full.records[i];
        const auto & o = r_lcs.records[i];
        require((o.decision == DecisionKind::Discard) ==
                    (f.decision == DecisionKind::Discard),
                "w/o LCS changed the discard set");
        if (!is_context_free(o)) {
            require(std::abs(o.weights.alpha_g - f.weights.alpha_g) <= 1e-12 &&
                        std::abs(o.weights.beta_g - f.weights.beta_g) <= 1e-12,
                    "w/o LCS changed global weights");
            require(o.weights.alpha_l == 0.0 && o.weights.beta_l == 0.0,
                    "w/o LCS set local weights");
        }
        if (o.decision == DecisionKind::Replace) {
            require(cat.is_target_item(o.target_item), "replacement outside target vocab");
        }
    }
    log << full.records.size() << " trace positions, " << rescued
        << " gate-rescued under w/o GCS";
}

} // namespace

int main() {
    const std::vector<Criterion> criteria = {
        {1, "information-theory suite", criterion_info_theory},
        {2, "dsp pair extraction vs brute-force oracle", criterion_dsp_pairs},
        {3, "finite-difference gradient check", criterion_gradient_check},
        {4, "memorization and initial loss", criterion_memorization},
        {5, "regeneration invariants", criterion_regeneration_invariants},
        {6, "ranking metric oracle", criterion_metric_oracle},
        {7, "planted-structure end-to-end", criterion_planted_structure},
        {8, "gradient-conflict diagnostic", criterion_gradient_conflict},
        {9, "ablation trace wiring", criterion_ablation_wiring},
    };

    int failures = 0;
    for (const auto & c : criteria) {
        std::ostringstream detail;
        const auto t0 = std::chrono::steady_clock::now();
        bool ok = true;
        std::string error;
        try {
            c.body(detail);
        } catch (const std::exception & e) {
            ok = false;
            error = e.what();
        }
        const auto dt = std::chrono::duration<double>(
                            std::chrono::steady_clock::now() - t0)
                            .count();
        std::cout << (ok ? "PASS" : "FAIL") << " criterion " << c.id << " (" << c.name
                  << ") [" << std::fixed << std::setprecision(1) << dt << "s]";
        std::cout.unsetf(std::ios::fixed);
        if (!detail.str().empty()) {
            std::cout << " — " << detail.str();
        }
        if (!ok) {
            std::cout << " — " << error;
            ++failures;
        }
        std::cout << std::endl;
    }
    return failures;
}
