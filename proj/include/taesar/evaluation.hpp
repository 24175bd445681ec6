#pragma once

#include <map>

#include "taesar/contrastive.hpp"
#include "taesar/predictor.hpp"
#include "taesar/transformer.hpp"

namespace taesar {

struct MetricsAtK {
    int k = 10;
    double hit_rate = 0.0;
    double ndcg = 0.0;
    double mrr = 0.0;
};

struct RankingMetrics {
    std::vector<MetricsAtK> at;  // one entry per requested k
    int64_t n_instances = 0;

    const MetricsAtK & at_k(int k) const {
        for (const auto & m : at) {
            if (m.k == k) return m;
        }
        throw config_error("BadConfig: metrics not computed for requested k");
    }
};

// 1-based rank of `target` among `scores` (aligned with `candidates`,
// ascending ids). Ties break by ascending item id.
int rank_from_scores(std::span<const double> scores,
                     std::span<const ItemIndex> candidates, ItemIndex target);

// Full-ranking rank: candidates are scored with the model's next-item
// log-probabilities; the candidate set is never sampled.
int rank_of_target(const Predictor & model, std::span<const ItemIndex> context,
                   ItemIndex target, std::span<const ItemIndex> candidates);

// Metrics per label domain over leave-one-out instances.
std::map<DomainIndex, RankingMetrics> evaluate(const Predictor & model,
                                               const std::vector<EvalInstance> & instances,
                                               const std::vector<ItemIndex> & candidates,
                                               const std::vector<int> & ks = {10, 20});

RankingMetrics evaluate_flat(const Predictor & model,
                             const std::vector<EvalInstance> & instances,
                             const std::vector<ItemIndex> & candidates,
                             const std::vector<int> & ks = {10, 20});

void write_metrics_csv(const std::map<DomainIndex, RankingMetrics> & metrics,
                       const DomainCatalog & catalog, const std::string & path);

// ---------------------------------------------------------------------------
// Gradient-conflict diagnostic
// ---------------------------------------------------------------------------

struct GradientConflictMatrix {
    std::vector<std::string> labels;
    std::vector<std::vector<double>> cosine; // square, symmetric, unit diagonal
};

// Cosine similarity between the per-group mean loss-gradient directions of one
// model. Groups are arbitrary labelled instance sets; the corpus overload
// groups DSP-pair positions by domain.
GradientConflictMatrix gradient_conflict(
    TransformerModelF & model,
    const std::vector<std::pair<std::string, std::vector<TrainItem>>> & groups);

GradientConflictMatrix gradient_conflict(TransformerModelF & model, const Corpus & corpus,
                                         int max_items_per_domain, uint64_t seed);

void write_conflict_csv(const GradientConflictMatrix & matrix, const std::string & path);

// ---------------------------------------------------------------------------
// Downstream comparison runner
// ---------------------------------------------------------------------------

struct ComparisonRow {
    std::string arm;    // "original", "naive-mixed", "regenerated"
    uint64_t seed = 0;
    RankingMetrics metrics;
};

struct ComparisonReport {
    std::vector<ComparisonRow> rows;
    double transfer_context_positions = 0.0; // mean source-item count per sequence
    std::vector<MappingRecord> mappings;
    int degenerate_count = 0;

    double mean_metric(const std::string & arm, int k,
                       double MetricsAtK::* field) const;
};

// Trains downstream predictors on (a) original target-only data, (b) naively
// merged mixed data and (c) the composed regenerated dataset, then evaluates
// all three on the target-domain leave-one-out test labels.
ComparisonReport run_comparison(const Corpus & corpus,
                                const RegenerationConfig & regen_config,
                                const PredictorConfig & predictor_config,
                                const std::vector<uint64_t> & seeds,
                                int pipeline_epochs = 0,
                                int downstream_epochs = 0);

void write_comparison_csv(const ComparisonReport & report, const std::string & path);
void write_comparison_markdown(const ComparisonReport & report, const std::string & path);

} // namespace taesar
