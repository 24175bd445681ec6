#include "taesar/evaluation.hpp"

namespace taesar {

namespace {

struct ArmContexts {
    std::vector<EvalInstance> mixed;
    std::vector<EvalInstance> target_only;
    std::vector<EvalInstance> regenerated;
};

} // namespace

ComparisonReport run_comparison(const Corpus & corpus,
                                const RegenerationConfig & regen_config,
                                const PredictorConfig & predictor_config,
                                const std::vector<uint64_t> & seeds,
                                int pipeline_epochs, int downstream_epochs) {
    if (seeds.size() < 3) {
        throw config_error("BadConfig: run_comparison requires at least 3 seeds");
    }
    regen_config.validate();
    predictor_config.validate();
    const DomainCatalog & catalog = corpus.catalog;

    LeaveOneOutSplit split = leave_one_out_split(corpus);
    if (split.train.empty()) {
        throw data_error("EmptyInput: no trainable sequences after leave-one-out split");
    }

    // Pipeline models are trained once on the train split; the per-seed loop
    // below only retrains the downstream predictors.
    TrainControl pipeline_control;
    pipeline_control.epochs = pipeline_epochs;
    pipeline_control.early_stopping = false;
    auto base = train_base<float>(split.train, catalog, predictor_config, {}, nullptr,
                                  pipeline_control);

    AdaptOptions adapt_options;
    adapt_options.epochs = pipeline_epochs > 0 ? pipeline_epochs : -1;
    adapt_options.holdout_validation = false;
    adapt_options.early_stopping = false;

    auto target_expert = adapt_domain(*base, split.train, catalog, catalog.target(),
                                      predictor_config, adapt_options);
    std::vector<std::unique_ptr<TransformerModelF>> source_experts(catalog.num_domains());
    DecodingModels models;
    models.base = base.get();
    models.target_expert = target_expert.get();
    models.source_experts.assign(catalog.num_domains(), nullptr);
    for (DomainIndex d = 0; d < catalog.num_domains(); ++d) {
        if (d == catalog.target() || !regen_config.use_source_expert) {
            continue;
        }
        source_experts[d] = adapt_domain(*base, split.train, catalog, d, predictor_config,
                                         adapt_options);
        models.source_experts[d] = source_experts[d].get();
    }

    RegenerationResult regen = regenerate_corpus(split.train, models, catalog, regen_config);
    std::vector<MergedSequence> composed =
        compose_dataset(regen.regenerated, split.train, catalog,
                        regen_config.min_output_length);

    std::vector<MergedSequence> target_only_train;
    for (const auto & seq : split.train) {
        UserSequence sub = domain_subsequence(seq, catalog.target(), catalog);
        if (!sub.events.empty()) {
            target_only_train.push_back(MergedSequence{seq.user, std::move(sub.events)});
        }
    }

    // Target-labelled test instances; each arm sees the context in its own
    // training representation.
    ArmContexts contexts;
    for (const auto & seq : corpus.merged) {
        const size_t n = seq.events.size();
        if (n < 3) {
            continue;
        }
        const ItemIndex label = seq.events[n - 1].item;
        if (catalog.domain_of(label) != catalog.target()) {
            continue;
        }
        MergedSequence ctx_seq;
        ctx_seq.user = seq.user;
        ctx_seq.events.assign(seq.events.begin(), seq.events.end() - 1);

        std::vector<ItemIndex> mixed = items_of_sequence(ctx_seq);
        UserSequence target_sub = domain_subsequence(ctx_seq, catalog.target(), catalog);
        RegeneratedSequence regen_ctx =
            regenerate_sequence(ctx_seq, models, catalog, regen_config);

        if (target_sub.events.empty() || regen_ctx.sequence.events.empty()) {
            continue;
        }
        EvalInstance inst;
        inst.user = seq.user;
        inst.label = label;
        inst.label_domain = catalog.target();

        inst.context = mixed;
        contexts.mixed.push_back(inst);
        inst.context = items_of_sequence(MergedSequence{seq.user, target_sub.events});
        contexts.target_only.push_back(inst);
        inst.context = items_of_sequence(regen_ctx.sequence);
        contexts.regenerated.push_back(inst);
    }
    if (contexts.mixed.empty()) {
        throw data_error("EmptyTestSet: no target-domain test instances");
    }

    ComparisonReport report;
    report.mappings = regen.records;
    report.degenerate_count = regen.degenerate_count;
    int64_t source_positions = 0;
    for (const auto & seq : split.train) {
        for (const auto & ev : seq.events) {
            if (!catalog.is_target_item(ev.item)) {
                ++source_positions;
            }
        }
    }
    report.transfer_context_positions =
        static_cast<double>(source_positions) / static_cast<double>(split.train.size());

    const std::vector<ItemIndex> & candidates = catalog.target_items();
    TrainControl downstream_control;
    downstream_control.epochs = downstream_epochs;
    downstream_control.early_stopping = false;

    struct Arm {
        const char * name;
        const std::vector<MergedSequence> * data;
        const std::vector<EvalInstance> * instances;
    };
    const Arm arms[] = {
        {"original", &target_only_train, &contexts.target_only},
        {"naive-mixed", &split.train, &contexts.mixed},
        {"regenerated", &composed, &contexts.regenerated},
    };

    for (uint64_t seed : seeds) {
        for (const Arm & arm : arms) {
            PredictorConfig cfg = predictor_config;
            cfg.seed = seed;
            auto model = train_base<float>(*arm.data, catalog, cfg, {}, nullptr,
                                           downstream_control);
            ComparisonRow row;
            row.arm = arm.name;
            row.seed = seed;
            row.metrics = evaluate_flat(*model, *arm.instances, candidates);
            report.rows.push_back(std::move(row));
        }
    }
    return report;
}

} // namespace taesar
