#include "taesar/distribution.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace taesar {

void Distribution::validate() const {
    if (support.size() != probs.size() || support.size() != logprobs.size()) {
        throw numeric_error("BadDistribution: support/probs/logprobs size mismatch");
    }
    double sum = 0.0;
    for (double p : probs) {
        if (!(p >= 0.0) || !std::isfinite(p)) {
            throw numeric_error("BadDistribution: negative or non-finite probability");
        }
        sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9) {
        throw numeric_error("BadDistribution: probabilities sum to " + std::to_string(sum));
    }
}

Distribution distribution_from_logits(std::span<const double> logits,
                                      std::vector<ItemIndex> support) {
    if (logits.size() != support.size() || support.empty()) {
        throw numeric_error("BadDistribution: logits/support size mismatch");
    }
    Distribution d;
    d.support = std::move(support);
    d.probs.resize(logits.size());
    d.logprobs.resize(logits.size());
    double max_l = *std::max_element(logits.begin(), logits.end());
    double sum = 0.0;
    for (size_t i = 0; i < logits.size(); ++i) {
        sum += std::exp(logits[i] - max_l);
    }
    double log_z = max_l + std::log(sum);
    for (size_t i = 0; i < logits.size(); ++i) {
        d.logprobs[i] = logits[i] - log_z;
        d.probs[i] = std::exp(d.logprobs[i]);
    }
    return d;
}

Distribution distribution_from_probs(std::vector<double> probs,
                                     std::vector<ItemIndex> support) {
    Distribution d;
    d.support = std::move(support);
    d.probs = std::move(probs);
    d.logprobs.resize(d.probs.size());
    for (size_t i = 0; i < d.probs.size(); ++i) {
        d.logprobs[i] = d.probs[i] > 0.0 ? std::log(d.probs[i])
                                         : -std::numeric_limits<double>::infinity();
    }
    d.validate();
    return d;
}

double shannon_entropy(const Distribution & dist) {
    double h = 0.0;
    for (double p : dist.probs) {
        if (p > 0.0) {
            h -= p * std::log(p);
        }
    }
    return std::max(h, 0.0);
}

double entropy_confidence(const Distribution & dist) {
    const size_t n = dist.size();
    if (n < 2) {
        throw numeric_error("DegenerateSupport: entropy_confidence needs support size >= 2");
    }
    double alpha = 1.0 - shannon_entropy(dist) / std::log(static_cast<double>(n));
    return std::clamp(alpha, 0.0, 1.0);
}

double jsd(const Distribution & p, const Distribution & q) {
    if (!p.same_support(q)) {
        throw numeric_error("SupportMismatch: jsd over different supports");
    }
    double div = 0.0;
    for (size_t i = 0; i < p.size(); ++i) {
        const double pi = p.probs[i];
        const double qi = q.probs[i];
        const double mi = 0.5 * (pi + qi);
        if (pi > 0.0) {
            div += 0.5 * pi * std::log(pi / mi);
        }
        if (qi > 0.0) {
            div += 0.5 * qi * std::log(qi / mi);
        }
    }
    return std::clamp(div, 0.0, std::log(2.0));
}

Distribution restrict_renormalize(const Distribution & dist,
                                  const std::vector<ItemIndex> & subset) {
    if (subset.empty()) {
        throw numeric_error("EmptyTargetVocab: restriction to empty support");
    }
    Distribution out;
    out.support = subset;
    out.probs.reserve(subset.size());
    size_t j = 0;
    double sum = 0.0;
    for (ItemIndex item : subset) {
        while (j < dist.size() && dist.support[j] < item) {
            ++j;
        }
        if (j >= dist.size() || dist.support[j] != item) {
            throw numeric_error("SupportMismatch: restriction item not in support");
        }
        out.probs.push_back(dist.probs[j]);
        sum += dist.probs[j];
    }
    out.logprobs.resize(out.probs.size());
    if (sum <= 0.0) {
        // Degenerate restriction: fall back to uniform over the subset.
        const double u = 1.0 / static_cast<double>(out.probs.size());
        for (size_t i = 0; i < out.probs.size(); ++i) {
            out.probs[i] = u;
            out.logprobs[i] = std::log(u);
        }
        return out;
    }
    for (size_t i = 0; i < out.probs.size(); ++i) {
        out.probs[i] /= sum;
        out.logprobs[i] = out.probs[i] > 0.0 ? std::log(out.probs[i])
                                             : -std::numeric_limits<double>::infinity();
    }
    return out;
}

} // namespace taesar
