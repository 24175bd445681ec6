#pragma once

#include <optional>
#include <random>

#include "taesar/predictor.hpp"

namespace taesar {

// Position-specific decoding weights. Adaptive mode derives alpha from the
// target expert's entropy and beta from the base/source-expert divergence.
struct ContrastiveWeights {
    double alpha_g = 0.0;
    double beta_g = 0.0;
    double alpha_l = 0.0;
    double beta_l = 0.0;
};

enum class DecisionKind : uint8_t {
    Keep = 0,     // item already in the target vocabulary
    Replace = 1,
    Discard = 2,
};

std::string decision_name(DecisionKind kind);

struct TransformDecision {
    DecisionKind kind = DecisionKind::Discard;
    ItemIndex item = kPaddingItem;   // replacement target item (Replace only)
    double local_score = 0.0;
};

enum class WeightMode : uint8_t { Adaptive = 0, Fixed = 1 };
enum class DiscardPolicy : uint8_t { Compact = 0, PlaceholderToken = 1 };

struct RegenerationConfig {
    bool use_source_expert = true;  // Table-3 style "SDE" toggle
    bool use_global = true;         // "GCS"
    bool use_local = true;          // "LCS"
    WeightMode weight_mode = WeightMode::Adaptive;
    double fixed_alpha = 0.5;
    double fixed_beta = 0.5 * 0.6931471805599453; // midpoint of [0, ln 2]
    DiscardPolicy discard_policy = DiscardPolicy::Compact;
    bool sample_replacement = false; // default: deterministic argmax
    double temperature = 1.0;
    int min_output_length = 3;
    uint64_t seed = 7;

    void validate() const {
        if (!use_global && !use_local) {
            throw config_error("BadConfig: at least one of use_global/use_local required");
        }
        if (weight_mode == WeightMode::Fixed &&
            (fixed_alpha < 0.0 || fixed_beta < 0.0)) {
            throw config_error("BadConfig: fixed weights must be nonnegative");
        }
        if (sample_replacement && !(temperature > 0.0)) {
            throw config_error("BadConfig: sampling temperature must be positive");
        }
    }
};

struct MappingRecord {
    UserId user = 0;
    int position = 0;               // 0-based position in the original sequence
    ItemIndex source_item = kPaddingItem;
    DecisionKind decision = DecisionKind::Discard;
    ItemIndex target_item = kPaddingItem;
    ContrastiveWeights weights;
    ItemIndex global_argmax = kPaddingItem;
    ItemIndex local_argmax = kPaddingItem;
};

// Elementwise alpha * log p_T - beta * log p_S over a common support. With
// with_source = false the beta term is dropped.
std::vector<double> contrastive_score(const Distribution & p_target,
                                      const Distribution & p_source,
                                      double alpha, double beta, bool with_source);

// The model triple consulted at each decoded position. `source_experts[k]`
// holds the expert of catalog domain k (nullptr for the target slot and for
// missing experts).
struct DecodingModels {
    const Predictor * base = nullptr;
    const Predictor * target_expert = nullptr;
    std::vector<const Predictor *> source_experts;
};

// Transform-or-discard decision for one source-domain item. The prefix is the
// original mixed history before the item's position.
TransformDecision decide(std::span<const ItemIndex> prefix, ItemIndex source_item,
                         const DecodingModels & models, const DomainCatalog & catalog,
                         const RegenerationConfig & config, MappingRecord * record,
                         std::mt19937_64 * sampler = nullptr);

struct RegeneratedSequence {
    MergedSequence sequence;            // only target-domain items
    std::vector<MappingRecord> records;
    bool degenerate = false;            // every position discarded
};

RegeneratedSequence regenerate_sequence(const MergedSequence & seq,
                                        const DecodingModels & models,
                                        const DomainCatalog & catalog,
                                        const RegenerationConfig & config);

struct RegenerationResult {
    std::vector<MergedSequence> regenerated;     // aligned with input order
    std::vector<MappingRecord> records;
    int degenerate_count = 0;
};

RegenerationResult regenerate_corpus(const std::vector<MergedSequence> & seqs,
                                     const DecodingModels & models,
                                     const DomainCatalog & catalog,
                                     const RegenerationConfig & config);

// The composed dataset: regenerated sequences plus the untouched original
// target-domain sequences. Per-user duplicates and too-short regenerations
// contribute once.
std::vector<MergedSequence> compose_dataset(const std::vector<MergedSequence> & regenerated,
                                            const std::vector<MergedSequence> & original,
                                            const DomainCatalog & catalog,
                                            int min_length = 3);

void write_mapping_csv(const std::vector<MappingRecord> & records,
                       const DomainCatalog & catalog, const std::string & path);

} // namespace taesar
