// Pipeline orchestrator: every stage of the regeneration pipeline as a
// subcommand driven by one key=value run-configuration file, with
// deterministic seeds and per-stage manifests.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "taesar/checkpoint.hpp"
#include "taesar/contrastive.hpp"
#include "taesar/evaluation.hpp"
#include "taesar/io.hpp"
#include "taesar/synthgen.hpp"
#include "taesar/transformer.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace taesar;

namespace {

class RunConfig {
public:
    void load_file(const std::string & path) {
        std::ifstream in(path);
        if (!in) {
            throw config_error("BadConfig: cannot open config file " + path);
        }
        std::string line;
        int line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            if (line.empty() || line[0] == '#') {
                continue;
            }
            auto eq = line.find('=');
            if (eq == std::string::npos) {
                throw config_error("BadConfig: " + path + ":" + std::to_string(line_no) +
                                   ": expected key=value");
            }
            values_[line.substr(0, eq)] = line.substr(eq + 1);
        }
    }

    // Command-line overrides win over file values.
    void apply_overrides(const std::vector<std::string> & overrides) {
        for (const auto & kv : overrides) {
            auto eq = kv.find('=');
            if (eq == std::string::npos) {
                throw config_error("BadConfig: override '" + kv + "' is not key=value");
            }
            values_[kv.substr(0, eq)] = kv.substr(eq + 1);
        }
    }

    bool has(const std::string & key) const { return values_.count(key) > 0; }

    std::string str(const std::string & key) const {
        auto it = values_.find(key);
        if (it == values_.end()) {
            throw config_error("BadConfig: missing required key '" + key + "'");
        }
        return it->second;
    }

    std::string str(const std::string & key, const std::string & fallback) const {
        auto it = values_.find(key);
        return it == values_.end() ? fallback : it->second;
    }

    int64_t integer(const std::string & key, int64_t fallback) const {
        auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        try {
            return std::stoll(it->second);
        } catch (const std::exception &) {
            throw config_error("BadConfig: bad integer for '" + key + "'");
        }
    }

    double real(const std::string & key, double fallback) const {
        auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        try {
            return std::stod(it->second);
        } catch (const std::exception &) {
            throw config_error("BadConfig: bad number for '" + key + "'");
        }
    }

    bool boolean(const std::string & key, bool fallback) const {
        auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        if (it->second == "true" || it->second == "1") return true;
        if (it->second == "false" || it->second == "0") return false;
        throw config_error("BadConfig: bad boolean for '" + key + "'");
    }

    std::vector<uint64_t> seed_list(const std::string & key,
                                    std::vector<uint64_t> fallback) const {
        auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        std::vector<uint64_t> out;
        std::stringstream ss(it->second);
        std::string tok;
        while (std::getline(ss, tok, ',')) {
            if (!tok.empty()) out.push_back(std::stoull(tok));
        }
        return out;
    }

    std::vector<int> int_list(const std::string & key, std::vector<int> fallback) const {
        auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        std::vector<int> out;
        std::stringstream ss(it->second);
        std::string tok;
        while (std::getline(ss, tok, ',')) {
            if (!tok.empty()) out.push_back(std::stoi(tok));
        }
        return out;
    }

    // Canonical sorted key=value text; its hash identifies the effective run.
    std::string canonical() const {
        std::string out;
        for (const auto & [k, v] : values_) {
            out += k;
            out += '=';
            out += v;
            out += '\n';
        }
        return out;
    }

    uint64_t hash() const {
        uint64_t h = 0xcbf29ce484222325ULL;
        for (char c : canonical()) {
            h ^= static_cast<unsigned char>(c);
            h *= 0x100000001b3ULL;
        }
        return h;
    }

    const std::map<std::string, std::string> & values() const { return values_; }

private:
    std::map<std::string, std::string> values_;
};

PredictorConfig predictor_config_of(const RunConfig & rc) {
    PredictorConfig cfg;
    cfg.hidden_size = static_cast<int>(rc.integer("hidden_size", cfg.hidden_size));
    cfg.layers = static_cast<int>(rc.integer("layers", cfg.layers));
    cfg.heads = static_cast<int>(rc.integer("heads", cfg.heads));
    cfg.inner_size = static_cast<int>(rc.integer("inner_size", cfg.inner_size));
    cfg.dropout = rc.real("dropout", cfg.dropout);
    cfg.max_len = static_cast<int>(rc.integer("max_len", cfg.max_len));
    cfg.lr = rc.real("lr", cfg.lr);
    cfg.max_epochs = static_cast<int>(rc.integer("epochs", cfg.max_epochs));
    cfg.patience = static_cast<int>(rc.integer("patience", cfg.patience));
    cfg.batch_size = static_cast<int>(rc.integer("batch_size", cfg.batch_size));
    cfg.seed = static_cast<uint64_t>(rc.integer("seed", 42));
    cfg.validate();
    return cfg;
}

RegenerationConfig regen_config_of(const RunConfig & rc) {
    RegenerationConfig cfg;
    cfg.use_source_expert = rc.boolean("use_sde", true);
    cfg.use_global = rc.boolean("use_gcs", true);
    cfg.use_local = rc.boolean("use_lcs", true);
    const std::string mode = rc.str("weight_mode", "adaptive");
    if (mode == "adaptive") {
        cfg.weight_mode = WeightMode::Adaptive;
    } else if (mode == "fixed") {
        cfg.weight_mode = WeightMode::Fixed;
    } else {
        throw config_error("BadConfig: weight_mode must be adaptive or fixed");
    }
    cfg.fixed_alpha = rc.real("fixed_alpha", cfg.fixed_alpha);
    cfg.fixed_beta = rc.real("fixed_beta", cfg.fixed_beta);
    const std::string policy = rc.str("discard_policy", "compact");
    if (policy == "compact") {
        cfg.discard_policy = DiscardPolicy::Compact;
    } else if (policy == "placeholder") {
        cfg.discard_policy = DiscardPolicy::PlaceholderToken;
    } else {
        throw config_error("BadConfig: discard_policy must be compact or placeholder");
    }
    cfg.sample_replacement = rc.boolean("sample_replacement", false);
    cfg.temperature = rc.real("temperature", 1.0);
    cfg.min_output_length = static_cast<int>(rc.integer("min_output_length", 3));
    cfg.seed = static_cast<uint64_t>(rc.integer("seed", 7));
    cfg.validate();
    return cfg;
}

// Table-3 style ablation presets expand to flag sets before the stage runs.
void apply_ablation_preset(RunConfig & rc) {
    const std::string preset = rc.str("ablation", "full");
    std::vector<std::string> expanded;
    if (preset == "full") {
        return;
    } else if (preset == "w/o-DSA") {
        expanded = {"from_base=false"};
    } else if (preset == "DSA-w/o-DSP") {
        expanded = {"use_dsp=false"};
    } else if (preset == "DSP-w/o-SDE") {
        expanded = {"use_sde=false"};
    } else if (preset == "DSP-w/o-GCS") {
        expanded = {"use_gcs=false"};
    } else if (preset == "DSP-w/o-LCS") {
        expanded = {"use_lcs=false"};
    } else {
        throw config_error("BadConfig: unknown ablation preset '" + preset + "'");
    }
    rc.apply_overrides(expanded);
}

Corpus load_corpus(const RunConfig & rc) {
    return ingest(rc.str("corpus"), rc.str("catalog"),
                  static_cast<int>(rc.integer("max_len", 128)));
}

fs::path out_dir(const RunConfig & rc) {
    fs::path dir = rc.str("out", "out");
    fs::create_directories(dir);
    return dir;
}

void write_manifest(const RunConfig & rc, const std::string & stage,
                    const fs::path & dir, const std::vector<std::string> & outputs) {
    json m;
    m["stage"] = stage;
    m["config_hash"] = rc.hash();
    m["seed"] = rc.integer("seed", 42);
    m["config"] = json::object();
    for (const auto & [k, v] : rc.values()) {
        m["config"][k] = v;
    }
    m["outputs"] = outputs;
    std::ofstream out(dir / ("manifest_" + stage + ".json"));
    out << m.dump(2) << '\n';
}

std::vector<MergedSequence> train_split_of(const Corpus & corpus) {
    return leave_one_out_split(corpus).train;
}

int cmd_synth(RunConfig & rc) {
    GeneratorSpec spec = rc.has("spec") ? read_generator_spec(rc.str("spec"))
                                        : GeneratorSpec{};
    if (rc.has("seed")) {
        spec.seed = static_cast<uint64_t>(rc.integer("seed", 7));
    }
    SyntheticCorpus synth = generate(spec);
    fs::path dir = out_dir(rc);
    export_corpus(synth.corpus, (dir / "events.tsv").string());
    export_catalog(synth.corpus.catalog, (dir / "catalog.tsv").string());
    write_oracle_csv(synth.oracle, synth.corpus.catalog, (dir / "oracle.csv").string());
    write_manifest(rc, "synth", dir, {"events.tsv", "catalog.tsv", "oracle.csv"});
    std::cout << "synth: " << synth.corpus.merged.size() << " users, "
              << synth.corpus.catalog.num_items() << " items\n";
    return 0;
}

int cmd_pretrain(RunConfig & rc) {
    Corpus corpus = load_corpus(rc);
    PredictorConfig cfg = predictor_config_of(rc);
    LeaveOneOutSplit split = leave_one_out_split(corpus);
    fs::path dir = out_dir(rc);

    TrainControl control;
    control.epochs = static_cast<int>(rc.integer("epochs", 0));
    control.early_stopping = rc.boolean("early_stop", true);
    TrainingReport report;
    const std::string backend = rc.str("backend", "transformer");
    if (backend == "markov") {
        MarkovModel model = fit_markov(split.train, corpus.catalog,
                                       rc.real("markov_smoothing", 1.0));
        save_checkpoint(model, (dir / "base.ckpt").string());
    } else {
        auto model = train_base<float>(split.train, corpus.catalog, cfg,
                                       control.early_stopping ? split.validation
                                                              : std::vector<EvalInstance>{},
                                       &report, control);
        save_checkpoint(*model, (dir / "base.ckpt").string());
        write_training_report_csv(report, (dir / "pretrain_report.csv").string());
    }
    write_manifest(rc, "pretrain", dir, {"base.ckpt"});
    std::cout << "pretrain: stopped at epoch " << report.stopping_epoch << "\n";
    return 0;
}

int cmd_adapt(RunConfig & rc) {
    apply_ablation_preset(rc);
    Corpus corpus = load_corpus(rc);
    PredictorConfig cfg = predictor_config_of(rc);
    DomainIndex domain = corpus.catalog.domain_index(rc.str("domain"));
    fs::path dir = out_dir(rc);
    const std::string backend = rc.str("backend", "transformer");
    auto train_seqs = train_split_of(corpus);
    const std::string ckpt_name = "expert_" + corpus.catalog.name(domain) + ".ckpt";
    if (backend == "markov") {
        MarkovModel model = fit_markov_dsp(train_seqs, corpus.catalog, domain,
                                           rc.real("markov_smoothing", 1.0));
        save_checkpoint(model, (dir / ckpt_name).string());
    } else {
        auto base = load_transformer_checkpoint(
            rc.str("base_checkpoint", (dir / "base.ckpt").string()), corpus.catalog);
        AdaptOptions options;
        options.from_base = rc.boolean("from_base", true);
        options.use_dsp = rc.boolean("use_dsp", true);
        options.epochs = static_cast<int>(rc.integer("adapt_epochs", -1));
        options.early_stopping = rc.boolean("early_stop", true);
        options.holdout_validation = options.early_stopping;
        TrainingReport report;
        auto model = adapt_domain(*base, train_seqs, corpus.catalog, domain, cfg,
                                  options, &report);
        save_checkpoint(*model, (dir / ckpt_name).string());
        write_training_report_csv(
            report, (dir / ("adapt_" + corpus.catalog.name(domain) + "_report.csv")).string());
    }
    write_manifest(rc, "adapt_" + corpus.catalog.name(domain), dir, {ckpt_name});
    std::cout << "adapt: wrote " << ckpt_name << "\n";
    return 0;
}

void export_embeddings(const TransformerModelF & model, const DomainCatalog & catalog,
                       const std::string & path) {
    std::ofstream out(path);
    const int H = model.net().config().hidden_size;
    out << "item_id,domain_id";
    for (int h = 1; h <= H; ++h) {
        out << ",h" << h;
    }
    out << '\n';
    for (ItemIndex item = 1; item <= catalog.num_items(); ++item) {
        out << catalog.raw_id(item) << ',' << catalog.name(catalog.domain_of(item));
        const float * row = model.net().embedding_row(item);
        for (int h = 0; h < H; ++h) {
            out << ',' << row[h];
        }
        out << '\n';
    }
}

int cmd_regenerate(RunConfig & rc) {
    apply_ablation_preset(rc);
    Corpus corpus = load_corpus(rc);
    RegenerationConfig regen_cfg = regen_config_of(rc);
    fs::path dir = out_dir(rc);
    fs::path model_dir = rc.str("model_dir", dir.string());

    auto base = load_checkpoint((model_dir / "base.ckpt").string(), corpus.catalog);
    auto target = load_checkpoint(
        (model_dir / ("expert_" + corpus.catalog.name(corpus.catalog.target()) + ".ckpt"))
            .string(),
        corpus.catalog);
    DecodingModels models;
    models.base = base.get();
    models.target_expert = target.get();
    models.source_experts.assign(corpus.catalog.num_domains(), nullptr);
    std::vector<std::unique_ptr<Predictor>> experts;
    for (DomainIndex d = 0; d < corpus.catalog.num_domains(); ++d) {
        if (d == corpus.catalog.target() || !regen_cfg.use_source_expert) {
            continue;
        }
        experts.push_back(load_checkpoint(
            (model_dir / ("expert_" + corpus.catalog.name(d) + ".ckpt")).string(),
            corpus.catalog));
        models.source_experts[d] = experts.back().get();
    }

    auto train_seqs = train_split_of(corpus);
    RegenerationResult result = regenerate_corpus(train_seqs, models, corpus.catalog,
                                                  regen_cfg);
    std::vector<MergedSequence> composed = compose_dataset(
        result.regenerated, train_seqs, corpus.catalog, regen_cfg.min_output_length);

    Corpus regen_out{corpus.catalog, result.regenerated};
    export_corpus(regen_out, (dir / "regenerated_events.tsv").string());
    std::ofstream composed_out(dir / "composed_events.tsv");
    for (const auto & seq : composed) {
        for (const auto & ev : seq.events) {
            composed_out << seq.user << '\t' << corpus.catalog.raw_id(ev.item) << '\t'
                         << corpus.catalog.name(corpus.catalog.domain_of(ev.item)) << '\t'
                         << ev.timestamp << '\n';
        }
    }
    write_mapping_csv(result.records, corpus.catalog, (dir / "mapping.csv").string());
    if (auto * tf = dynamic_cast<const TransformerModelF *>(base.get())) {
        export_embeddings(*tf, corpus.catalog, (dir / "embeddings.csv").string());
    }
    write_manifest(rc, "regenerate", dir,
                   {"regenerated_events.tsv", "composed_events.tsv", "mapping.csv"});
    std::cout << "regenerate: " << result.regenerated.size() << " sequences, "
              << result.degenerate_count << " degenerate\n";
    if (result.degenerate_count > 0) {
        std::cout << "warning: DegenerateOutput for " << result.degenerate_count
                  << " sequences\n";
    }
    return 0;
}

int cmd_evaluate(RunConfig & rc) {
    Corpus corpus = load_corpus(rc);
    fs::path dir = out_dir(rc);
    auto model = load_checkpoint(rc.str("checkpoint", (dir / "base.ckpt").string()),
                                 corpus.catalog);
    LeaveOneOutSplit split = leave_one_out_split(corpus);
    std::vector<int> ks = rc.int_list("ks", {10, 20});

    // Domain-specific test sets, each ranked against its domain's full
    // vocabulary (never sampled).
    std::map<DomainIndex, RankingMetrics> metrics;
    std::map<DomainIndex, std::vector<EvalInstance>> by_domain;
    for (const auto & inst : split.test) {
        by_domain[inst.label_domain].push_back(inst);
    }
    for (const auto & [domain, instances] : by_domain) {
        metrics[domain] = evaluate_flat(*model, instances,
                                        corpus.catalog.items_of(domain), ks);
    }
    write_metrics_csv(metrics, corpus.catalog, (dir / "metrics.csv").string());
    write_manifest(rc, "evaluate", dir, {"metrics.csv"});
    for (const auto & [domain, m] : metrics) {
        std::cout << corpus.catalog.name(domain) << ": HR@10 " << m.at_k(10).hit_rate
                  << " NG@10 " << m.at_k(10).ndcg << " MRR@10 " << m.at_k(10).mrr
                  << " (" << m.n_instances << " instances)\n";
    }
    return 0;
}

int cmd_compare(RunConfig & rc) {
    apply_ablation_preset(rc);
    Corpus corpus = load_corpus(rc);
    fs::path dir = out_dir(rc);
    ComparisonReport report = run_comparison(
        corpus, regen_config_of(rc), predictor_config_of(rc),
        rc.seed_list("seeds", {1, 2, 3}),
        static_cast<int>(rc.integer("pipeline_epochs", 0)),
        static_cast<int>(rc.integer("downstream_epochs", 0)));
    write_comparison_csv(report, (dir / "comparison.csv").string());
    write_comparison_markdown(report, (dir / "comparison.md").string());
    write_manifest(rc, "compare", dir, {"comparison.csv", "comparison.md"});
    std::cout << "compare: mean HR@10 original "
              << report.mean_metric("original", 10, &MetricsAtK::hit_rate)
              << ", naive-mixed "
              << report.mean_metric("naive-mixed", 10, &MetricsAtK::hit_rate)
              << ", regenerated "
              << report.mean_metric("regenerated", 10, &MetricsAtK::hit_rate) << "\n";
    return 0;
}

int cmd_stats(RunConfig & rc) {
    Corpus corpus = load_corpus(rc);
    fs::path dir = out_dir(rc);
    DatasetStats stats = dataset_stats(corpus.merged);
    write_stats_csv(stats, (dir / "stats.csv").string());
    write_manifest(rc, "stats", dir, {"stats.csv"});
    std::cout << "stats: " << stats.n_users << " users, " << stats.n_items << " items, "
              << stats.n_interactions << " interactions, avg length " << stats.avg_length
              << "\n";
    return 0;
}

int cmd_conflict(RunConfig & rc) {
    Corpus corpus = load_corpus(rc);
    fs::path dir = out_dir(rc);
    auto model = load_transformer_checkpoint(
        rc.str("checkpoint", (dir / "base.ckpt").string()), corpus.catalog);
    GradientConflictMatrix matrix = gradient_conflict(
        *model, corpus, static_cast<int>(rc.integer("conflict_batch", 256)),
        static_cast<uint64_t>(rc.integer("seed", 42)));
    write_conflict_csv(matrix, (dir / "conflict.csv").string());
    write_manifest(rc, "conflict", dir, {"conflict.csv"});
    std::cout << "conflict: wrote " << matrix.labels.size() << "x"
              << matrix.labels.size() << " matrix\n";
    return 0;
}

} // namespace

int main(int argc, char ** argv) {
    CLI::App app{"taesar: target-aligned sequential regeneration pipeline"};
    app.require_subcommand(1);

    std::string config_path;
    std::vector<std::string> overrides;
    app.add_option("--config", config_path, "run configuration file (key=value lines)");
    app.add_option("--set", overrides, "override config values, key=value")
        ->take_all();

    std::map<std::string, int (*)(RunConfig &)> commands = {
        {"synth", cmd_synth},         {"pretrain", cmd_pretrain},
        {"adapt", cmd_adapt},         {"regenerate", cmd_regenerate},
        {"evaluate", cmd_evaluate},   {"compare", cmd_compare},
        {"stats", cmd_stats},         {"conflict", cmd_conflict},
    };
    for (const auto & [name, fn] : commands) {
        app.add_subcommand(name)->fallthrough();
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError & e) {
        return app.exit(e) == 0 ? 0 : 2;
    }

    try {
        RunConfig rc;
        if (!config_path.empty()) {
            rc.load_file(config_path);
        }
        rc.apply_overrides(overrides);
        for (const auto & [name, fn] : commands) {
            if (app.got_subcommand(name)) {
                return fn(rc);
            }
        }
        throw config_error("BadConfig: no subcommand");
    } catch (const Error & e) {
        std::cerr << "error: " << e.what() << "\n";
        return static_cast<int>(e.code());
    } catch (const std::exception & e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
