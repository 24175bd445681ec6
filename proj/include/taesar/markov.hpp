#pragma once

#include <unordered_map>

#include "taesar/predictor.hpp"

namespace taesar {

// Order-1 smoothed transition model. Exactly computable, used as a test oracle
// and as a fast fallback backend:
//   P(v | ..., last) = (count(last -> v) + s) / (count(last -> .) + s * |V|)
class MarkovModel : public Predictor {
public:
    MarkovModel(ItemIndex vocab, double smoothing, uint64_t catalog_fingerprint,
                Role role = Role::Base, std::string domain_name = "");

    void add_transition(ItemIndex from, ItemIndex to, double weight = 1.0);

    Distribution predict_next(std::span<const ItemIndex> prefix) const override;
    Role role() const override { return role_; }
    uint64_t catalog_fingerprint() const override { return fingerprint_; }
    ItemIndex vocab_size() const override { return vocab_; }
    const std::string & domain_name() const { return domain_name_; }
    double smoothing() const { return smoothing_; }

    // Exposed for serialization.
    const std::unordered_map<ItemIndex, std::unordered_map<ItemIndex, double>> & counts() const {
        return counts_;
    }

private:
    ItemIndex vocab_;
    double smoothing_;
    uint64_t fingerprint_;
    Role role_;
    std::string domain_name_;
    std::unordered_map<ItemIndex, std::unordered_map<ItemIndex, double>> counts_;
    std::unordered_map<ItemIndex, double> totals_;
};

// Counts consecutive transitions of the merged sequences.
MarkovModel fit_markov(const std::vector<MergedSequence> & sequences,
                       const DomainCatalog & catalog, double smoothing,
                       Role role = Role::Base);

// Counts (x_i -> x_t) over the domain's DSP pairs; yields distributions
// concentrated on the domain's vocabulary.
MarkovModel fit_markov_dsp(const std::vector<MergedSequence> & sequences,
                           const DomainCatalog & catalog, DomainIndex domain,
                           double smoothing);

} // namespace taesar
