#include "taesar/contrastive.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <unordered_map>

namespace taesar {

std::string decision_name(DecisionKind kind) {
    switch (kind) {
        case DecisionKind::Keep: return "keep";
        case DecisionKind::Replace: return "replace";
        case DecisionKind::Discard: return "discard";
    }
    return "unknown";
}

std::vector<double> contrastive_score(const Distribution & p_target,
                                      const Distribution & p_source,
                                      double alpha, double beta, bool with_source) {
    if (!(std::isfinite(alpha) && std::isfinite(beta) && alpha >= 0.0 && beta >= 0.0)) {
        throw numeric_error("BadWeights: contrastive weights must be finite and nonnegative");
    }
    std::vector<double> score(p_target.size());
    if (with_source) {
        if (!p_target.same_support(p_source)) {
            throw numeric_error("SupportMismatch: contrastive score over different supports");
        }
        for (size_t i = 0; i < score.size(); ++i) {
            score[i] = alpha * p_target.logprobs[i] - beta * p_source.logprobs[i];
        }
    } else {
        for (size_t i = 0; i < score.size(); ++i) {
            score[i] = alpha * p_target.logprobs[i];
        }
    }
    return score;
}

namespace {

// Argmax with ties broken by ascending item id (first index wins).
size_t argmax_index(const std::vector<double> & score) {
    size_t best = 0;
    for (size_t i = 1; i < score.size(); ++i) {
        if (score[i] > score[best]) {
            best = i;
        }
    }
    return best;
}

size_t sample_index(const std::vector<double> & score, double temperature,
                    std::mt19937_64 & rng) {
    std::vector<double> w(score.size());
    double mx = *std::max_element(score.begin(), score.end());
    double sum = 0.0;
    for (size_t i = 0; i < score.size(); ++i) {
        w[i] = std::exp((score[i] - mx) / temperature);
        sum += w[i];
    }
    std::uniform_real_distribution<double> u(0.0, sum);
    double r = u(rng);
    for (size_t i = 0; i < w.size(); ++i) {
        r -= w[i];
        if (r <= 0.0) {
            return i;
        }
    }
    return w.size() - 1;
}

double confidence_or_one(const Distribution & dist) {
    return dist.size() < 2 ? 1.0 : entropy_confidence(dist);
}

} // namespace

TransformDecision decide(std::span<const ItemIndex> prefix, ItemIndex source_item,
                         const DecodingModels & models, const DomainCatalog & catalog,
                         const RegenerationConfig & config, MappingRecord * record,
                         std::mt19937_64 * sampler) {
    config.validate();
    if (catalog.is_target_item(source_item)) {
        throw data_error("BadInput: decide called on a target-domain item");
    }
    if (!models.target_expert || !models.base) {
        throw data_error("MissingExpert: target expert and base model are required");
    }
    const DomainIndex source_domain = catalog.domain_of(source_item);
    const Predictor * source_expert = nullptr;
    if (config.use_source_expert) {
        if (static_cast<size_t>(source_domain) >= models.source_experts.size() ||
            models.source_experts[source_domain] == nullptr) {
            throw data_error("MissingExpert: no expert for domain '" +
                             catalog.name(source_domain) + "'");
        }
        source_expert = models.source_experts[source_domain];
    }

    const Distribution p_target = models.target_expert->predict_next(prefix);
    Distribution p_source, p_base;
    if (config.use_source_expert) {
        p_source = source_expert->predict_next(prefix);
        p_base = models.base->predict_next(prefix);
    }

    ContrastiveWeights w;
    if (config.weight_mode == WeightMode::Adaptive) {
        w.alpha_g = entropy_confidence(p_target);
        w.beta_g = config.use_source_expert ? jsd(p_base, p_source) : 0.0;
    } else {
        w.alpha_g = config.fixed_alpha;
        w.beta_g = config.use_source_expert ? config.fixed_beta : 0.0;
    }

    TransformDecision decision;
    ItemIndex global_argmax = kPaddingItem;
    std::vector<double> global;
    if (config.use_global || !config.use_local) {
        global = contrastive_score(p_target, p_source, w.alpha_g, w.beta_g,
                                   config.use_source_expert);
        global_argmax = p_target.support[argmax_index(global)];
    }
    if (config.use_global && !catalog.is_target_item(global_argmax)) {
        decision.kind = DecisionKind::Discard;
        if (record) {
            record->decision = DecisionKind::Discard;
            record->target_item = kPaddingItem;
            record->weights = w;
            record->global_argmax = global_argmax;
            record->local_argmax = kPaddingItem;
            record->source_item = source_item;
        }
        return decision;
    }

    const auto & target_items = catalog.target_items();
    ItemIndex local_argmax = kPaddingItem;
    if (config.use_local) {
        const Distribution pt_local = restrict_renormalize(p_target, target_items);
        Distribution ps_local, pm_local;
        if (config.use_source_expert) {
            ps_local = restrict_renormalize(p_source, target_items);
            pm_local = restrict_renormalize(p_base, target_items);
        }
        if (config.weight_mode == WeightMode::Adaptive) {
            w.alpha_l = confidence_or_one(pt_local);
            w.beta_l = config.use_source_expert ? jsd(pm_local, ps_local) : 0.0;
        } else {
            w.alpha_l = config.fixed_alpha;
            w.beta_l = config.use_source_expert ? config.fixed_beta : 0.0;
        }
        std::vector<double> local = contrastive_score(pt_local, ps_local, w.alpha_l,
                                                      w.beta_l, config.use_source_expert);
        size_t idx;
        if (config.sample_replacement && sampler) {
            idx = sample_index(local, config.temperature, *sampler);
        } else {
            idx = argmax_index(local);
        }
        local_argmax = target_items[idx];
        decision.kind = DecisionKind::Replace;
        decision.item = local_argmax;
        decision.local_score = local[idx];
    } else {
        // "w/o LCS": the replacement is the global score's best target item.
        double best = -std::numeric_limits<double>::infinity();
        ItemIndex best_item = kPaddingItem;
        for (size_t i = 0; i < global.size(); ++i) {
            if (!catalog.is_target_item(p_target.support[i])) {
                continue;
            }
            if (global[i] > best) {
                best = global[i];
                best_item = p_target.support[i];
            }
        }
        if (best_item == kPaddingItem) {
            throw numeric_error("EmptyTargetVocab: no target item available for replacement");
        }
        decision.kind = DecisionKind::Replace;
        decision.item = best_item;
        decision.local_score = best;
        local_argmax = best_item;
    }

    if (record) {
        record->source_item = source_item;
        record->decision = decision.kind;
        record->target_item = decision.item;
        record->weights = w;
        record->global_argmax = global_argmax;
        record->local_argmax = local_argmax;
    }
    return decision;
}

RegeneratedSequence regenerate_sequence(const MergedSequence & seq,
                                        const DecodingModels & models,
                                        const DomainCatalog & catalog,
                                        const RegenerationConfig & config) {
    config.validate();
    std::mt19937_64 sampler(config.seed ^ static_cast<uint64_t>(seq.user) * 0x9e3779b97f4a7c15ULL);

    RegeneratedSequence out;
    out.sequence.user = seq.user;
    std::vector<ItemIndex> prefix;
    prefix.reserve(seq.events.size());
    bool any_kept = false;
    for (size_t pos = 0; pos < seq.events.size(); ++pos) {
        const Interaction & ev = seq.events[pos];
        if (catalog.is_target_item(ev.item)) {
            out.sequence.events.push_back(ev);
            any_kept = true;
        } else {
            MappingRecord record;
            record.user = seq.user;
            record.position = static_cast<int>(pos);
            record.source_item = ev.item;
            TransformDecision decision;
            if (prefix.empty()) {
                // No context to decode from; nothing supports a transformation.
                decision.kind = DecisionKind::Discard;
                record.decision = DecisionKind::Discard;
            } else {
                decision = decide(prefix, ev.item, models, catalog, config, &record,
                                  &sampler);
            }
            out.records.push_back(record);
            if (decision.kind == DecisionKind::Replace) {
                out.sequence.events.push_back({decision.item, ev.timestamp});
                any_kept = true;
            } else if (config.discard_policy == DiscardPolicy::PlaceholderToken) {
                out.sequence.events.push_back({kPaddingItem, ev.timestamp});
            }
        }
        // Decoding context is always the original mixed prefix.
        prefix.push_back(ev.item);
    }
    out.degenerate = !any_kept;
    return out;
}

RegenerationResult regenerate_corpus(const std::vector<MergedSequence> & seqs,
                                     const DecodingModels & models,
                                     const DomainCatalog & catalog,
                                     const RegenerationConfig & config) {
    RegenerationResult result;
    result.regenerated.reserve(seqs.size());
    for (const auto & seq : seqs) {
        RegeneratedSequence r = regenerate_sequence(seq, models, catalog, config);
        if (r.degenerate) {
            ++result.degenerate_count;
        }
        result.regenerated.push_back(std::move(r.sequence));
        result.records.insert(result.records.end(), r.records.begin(), r.records.end());
    }
    return result;
}

std::vector<MergedSequence> compose_dataset(const std::vector<MergedSequence> & regenerated,
                                            const std::vector<MergedSequence> & original,
                                            const DomainCatalog & catalog,
                                            int min_length) {
    std::unordered_map<UserId, const MergedSequence *> regen_of;
    for (const auto & seq : regenerated) {
        regen_of[seq.user] = &seq;
    }
    std::vector<MergedSequence> out;
    for (const auto & orig : original) {
        UserSequence target_sub = domain_subsequence(orig, catalog.target(), catalog);
        MergedSequence target_seq{orig.user, std::move(target_sub.events)};

        const MergedSequence * regen = nullptr;
        if (auto it = regen_of.find(orig.user); it != regen_of.end()) {
            regen = it->second;
        }
        const bool regen_usable = regen != nullptr &&
            static_cast<int>(regen->events.size()) >= min_length &&
            !(regen->events == target_seq.events);
        if (regen_usable) {
            out.push_back(*regen);
        }
        if (!target_seq.events.empty()) {
            out.push_back(std::move(target_seq));
        }
    }
    return out;
}

void write_mapping_csv(const std::vector<MappingRecord> & records,
                       const DomainCatalog & catalog, const std::string & path) {
    std::ofstream out(path);
    if (!out) {
        throw data_error("ParseError: cannot open " + path + " for writing");
    }
    out << "user_id,position,source_item,decision,target_item,alpha_g,beta_g,alpha_l,beta_l\n";
    for (const auto & r : records) {
        out << r.user << ',' << r.position << ',' << catalog.raw_id(r.source_item) << ','
            << decision_name(r.decision) << ',';
        if (r.decision == DecisionKind::Replace) {
            out << catalog.raw_id(r.target_item);
        }
        out << ',' << r.weights.alpha_g << ',' << r.weights.beta_g << ','
            << r.weights.alpha_l << ',' << r.weights.beta_l << '\n';
    }
}

} // namespace taesar
