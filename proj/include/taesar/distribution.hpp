#pragma once

#include <span>
#include <vector>

#include "taesar/corpus.hpp"

namespace taesar {

// A probability vector over an explicit item support (ascending dense ids).
struct Distribution {
    std::vector<ItemIndex> support;
    std::vector<double> probs;
    std::vector<double> logprobs;

    size_t size() const { return support.size(); }
    bool same_support(const Distribution & other) const { return support == other.support; }

    void validate() const; // nonnegative, sums to 1 (1e-9), logprobs consistent
};

// Normalizes `logits` (aligned with `support`) into a distribution via softmax.
Distribution distribution_from_logits(std::span<const double> logits,
                                      std::vector<ItemIndex> support);

Distribution distribution_from_probs(std::vector<double> probs,
                                     std::vector<ItemIndex> support);

// Shannon entropy, natural log, 0*log 0 = 0.
double shannon_entropy(const Distribution & dist);

// 1 - H/ln(n): 1 for one-hot, 0 for uniform. Requires support size >= 2.
double entropy_confidence(const Distribution & dist);

// Jensen-Shannon divergence, natural log, in [0, ln 2]. Requires a common
// support.
double jsd(const Distribution & p, const Distribution & q);

// Restrict to `subset` (ascending) and renormalize to sum 1.
Distribution restrict_renormalize(const Distribution & dist,
                                  const std::vector<ItemIndex> & subset);

} // namespace taesar
