#include "taesar/markov.hpp"

#include <cmath>

namespace taesar {

std::string role_name(Role role) {
    switch (role) {
        case Role::Base: return "base";
        case Role::TargetExpert: return "target_expert";
        case Role::SourceExpert: return "source_expert";
    }
    return "unknown";
}

MarkovModel::MarkovModel(ItemIndex vocab, double smoothing, uint64_t catalog_fingerprint,
                         Role role, std::string domain_name)
    : vocab_(vocab), smoothing_(smoothing), fingerprint_(catalog_fingerprint),
      role_(role), domain_name_(std::move(domain_name)) {
    if (!(smoothing > 0.0)) {
        throw config_error("BadConfig: Markov smoothing must be positive");
    }
    if (vocab < 1) {
        throw config_error("BadConfig: Markov vocabulary must be non-empty");
    }
}

void MarkovModel::add_transition(ItemIndex from, ItemIndex to, double weight) {
    counts_[from][to] += weight;
    totals_[from] += weight;
}

Distribution MarkovModel::predict_next(std::span<const ItemIndex> prefix) const {
    if (prefix.empty()) {
        throw data_error("EmptyInput: predict_next with empty prefix");
    }
    const ItemIndex last = prefix.back();
    const double denom_total = [&] {
        auto it = totals_.find(last);
        return it == totals_.end() ? 0.0 : it->second;
    }();
    const double denom = denom_total + smoothing_ * static_cast<double>(vocab_);

    std::vector<double> probs(vocab_, smoothing_ / denom);
    auto row = counts_.find(last);
    if (row != counts_.end()) {
        for (const auto & [to, c] : row->second) {
            probs[to - 1] = (c + smoothing_) / denom;
        }
    }
    std::vector<ItemIndex> support(vocab_);
    for (ItemIndex i = 0; i < vocab_; ++i) {
        support[i] = i + 1;
    }
    return distribution_from_probs(std::move(probs), std::move(support));
}

MarkovModel fit_markov(const std::vector<MergedSequence> & sequences,
                       const DomainCatalog & catalog, double smoothing, Role role) {
    MarkovModel model(catalog.num_items(), smoothing, catalog.fingerprint(), role);
    for (const auto & seq : sequences) {
        for (size_t i = 0; i + 1 < seq.events.size(); ++i) {
            model.add_transition(seq.events[i].item, seq.events[i + 1].item);
        }
    }
    return model;
}

MarkovModel fit_markov_dsp(const std::vector<MergedSequence> & sequences,
                           const DomainCatalog & catalog, DomainIndex domain,
                           double smoothing) {
    Role role = domain == catalog.target() ? Role::TargetExpert : Role::SourceExpert;
    MarkovModel model(catalog.num_items(), smoothing, catalog.fingerprint(), role,
                      catalog.name(domain));
    for (const auto & seq : sequences) {
        for (const auto & [i, t] : extract_dsp_pairs(seq, domain, catalog)) {
            model.add_transition(seq.events[i].item, seq.events[t].item);
        }
    }
    return model;
}

} // namespace taesar
