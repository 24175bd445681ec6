#pragma once

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "taesar/contrastive.hpp"
#include "taesar/corpus.hpp"
#include "taesar/markov.hpp"

namespace taesar::testing {

// Catalog "T" (target) + "S1".."Sn", each with `items_per_domain` contiguous
// raw ids starting at 1, so dense index == raw id.
inline DomainCatalog toy_catalog(int n_sources, int items_per_domain) {
    std::vector<std::pair<std::string, bool>> domains;
    domains.emplace_back("T", true);
    for (int s = 1; s <= n_sources; ++s) {
        domains.emplace_back("S" + std::to_string(s), false);
    }
    std::vector<std::vector<int64_t>> vocab(domains.size());
    int64_t raw = 1;
    for (auto & v : vocab) {
        for (int i = 0; i < items_per_domain; ++i) {
            v.push_back(raw++);
        }
    }
    return DomainCatalog(domains, vocab);
}

inline MergedSequence make_seq(UserId user, const std::vector<ItemIndex> & items) {
    MergedSequence seq;
    seq.user = user;
    for (size_t i = 0; i < items.size(); ++i) {
        seq.events.push_back({items[i], static_cast<int64_t>(i + 1)});
    }
    return seq;
}

// Uniformly random mixed sequence over the catalog's full vocabulary.
inline MergedSequence random_seq(UserId user, const DomainCatalog & catalog, int length,
                                 std::mt19937_64 & rng) {
    std::uniform_int_distribution<ItemIndex> pick(1, catalog.num_items());
    std::vector<ItemIndex> items(length);
    for (auto & it : items) {
        it = pick(rng);
    }
    return make_seq(user, items);
}

// Predictor returning one fixed distribution regardless of prefix.
class FixedPredictor : public Predictor {
public:
    FixedPredictor(Distribution dist, uint64_t fingerprint, Role role = Role::Base)
        : dist_(std::move(dist)), fingerprint_(fingerprint), role_(role) {}

    Distribution predict_next(std::span<const ItemIndex>) const override { return dist_; }
    Role role() const override { return role_; }
    uint64_t catalog_fingerprint() const override { return fingerprint_; }
    ItemIndex vocab_size() const override { return static_cast<ItemIndex>(dist_.size()); }

private:
    Distribution dist_;
    uint64_t fingerprint_;
    Role role_;
};

inline Distribution full_vocab_dist(const DomainCatalog & catalog,
                                    const std::vector<double> & probs) {
    return distribution_from_probs(probs, catalog.all_items());
}

inline std::filesystem::path temp_path(const std::string & name) {
    return std::filesystem::temp_directory_path() / ("taesar_test_" + name);
}

inline std::string slurp(const std::filesystem::path & path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Brute-force DSP oracle: all (i, t), both in-domain, t > i, no in-domain j
// strictly between.
inline std::vector<std::pair<int, int>> dsp_oracle(const MergedSequence & seq,
                                                   DomainIndex domain,
                                                   const DomainCatalog & catalog) {
    const int n = static_cast<int>(seq.events.size());
    std::vector<std::pair<int, int>> pairs;
    for (int i = 0; i < n; ++i) {
        if (catalog.domain_of(seq.events[i].item) != domain) continue;
        for (int t = i + 1; t < n; ++t) {
            if (catalog.domain_of(seq.events[t].item) != domain) continue;
            bool blocked = false;
            for (int j = i + 1; j < t; ++j) {
                if (catalog.domain_of(seq.events[j].item) == domain) {
                    blocked = true;
                    break;
                }
            }
            if (!blocked) {
                pairs.emplace_back(i, t);
            }
        }
    }
    return pairs;
}

// Full-sort ranking oracle: sort candidates by (score desc, id asc), find target.
inline int rank_oracle(const std::vector<double> & scores,
                       const std::vector<ItemIndex> & candidates, ItemIndex target) {
    std::vector<size_t> order(candidates.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        if (scores[a] != scores[b]) return scores[a] > scores[b];
        return candidates[a] < candidates[b];
    });
    for (size_t r = 0; r < order.size(); ++r) {
        if (candidates[order[r]] == target) {
            return static_cast<int>(r) + 1;
        }
    }
    return -1;
}

} // namespace taesar::testing
