#include "taesar/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace taesar {

static uint64_t fnv1a(uint64_t h, const void * data, size_t n) {
    const auto * p = static_cast<const unsigned char *>(data);
    for (size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

DomainCatalog::DomainCatalog(std::vector<std::pair<std::string, bool>> domains,
                             std::vector<std::vector<int64_t>> items_per_domain) {
    if (domains.empty()) {
        throw data_error("EmptyInput: catalog has no domains");
    }
    if (domains.size() != items_per_domain.size()) {
        throw data_error("BadCatalog: domain count does not match vocabulary count");
    }
    int n_targets = 0;
    for (size_t d = 0; d < domains.size(); ++d) {
        names_.push_back(domains[d].first);
        if (domains[d].second) {
            target_ = static_cast<DomainIndex>(d);
            ++n_targets;
        }
    }
    if (n_targets != 1) {
        throw data_error("BadCatalog: exactly one target domain required");
    }
    if (domains.size() < 2) {
        throw data_error("BadCatalog: at least one source domain required");
    }
    std::set<std::string> seen_names(names_.begin(), names_.end());
    if (seen_names.size() != names_.size()) {
        throw data_error("BadCatalog: duplicate domain name");
    }

    items_of_.resize(names_.size());
    for (size_t d = 0; d < items_per_domain.size(); ++d) {
        auto raw = items_per_domain[d];
        std::sort(raw.begin(), raw.end());
        raw.erase(std::unique(raw.begin(), raw.end()), raw.end());
        for (int64_t r : raw) {
            if (dense_of_.count(r)) {
                throw data_error("UnknownItemDomain: item " + std::to_string(r) +
                                 " appears in more than one domain");
            }
            ItemIndex dense = static_cast<ItemIndex>(raw_ids_.size()) + 1;
            raw_ids_.push_back(r);
            dense_of_[r] = dense;
            domain_of_.push_back(static_cast<DomainIndex>(d));
            items_of_[d].push_back(dense);
        }
    }

    uint64_t h = 0xcbf29ce484222325ULL;
    for (size_t d = 0; d < names_.size(); ++d) {
        h = fnv1a(h, names_[d].data(), names_[d].size());
        char tag = (static_cast<DomainIndex>(d) == target_) ? 'T' : 'S';
        h = fnv1a(h, &tag, 1);
        for (ItemIndex it : items_of_[d]) {
            int64_t r = raw_ids_[it - 1];
            h = fnv1a(h, &r, sizeof(r));
        }
    }
    fingerprint_ = h;
}

std::optional<DomainIndex> DomainCatalog::find_domain(const std::string & name) const {
    for (size_t d = 0; d < names_.size(); ++d) {
        if (names_[d] == name) {
            return static_cast<DomainIndex>(d);
        }
    }
    return std::nullopt;
}

DomainIndex DomainCatalog::domain_index(const std::string & name) const {
    auto d = find_domain(name);
    if (!d) {
        throw data_error("UnknownDomain: " + name);
    }
    return *d;
}

DomainIndex DomainCatalog::domain_of(ItemIndex item) const {
    if (item < 1 || item > num_items()) {
        throw data_error("UnknownItem: dense index " + std::to_string(item));
    }
    return domain_of_[item - 1];
}

std::optional<ItemIndex> DomainCatalog::dense_of(int64_t raw) const {
    auto it = dense_of_.find(raw);
    if (it == dense_of_.end()) {
        return std::nullopt;
    }
    return it->second;
}

std::vector<ItemIndex> DomainCatalog::all_items() const {
    std::vector<ItemIndex> out(num_items());
    for (ItemIndex i = 1; i <= num_items(); ++i) {
        out[i - 1] = i;
    }
    return out;
}

MergedSequence interleave(const std::vector<UserSequence> & per_domain) {
    size_t total = 0;
    for (const auto & s : per_domain) {
        total += s.events.size();
    }
    if (total == 0) {
        throw data_error("EmptyInput: interleave of empty sequences");
    }
    UserId user = 0;
    bool have_user = false;
    for (const auto & s : per_domain) {
        if (s.events.empty()) {
            continue;
        }
        if (have_user && s.user != user) {
            throw data_error("MixedUsers: interleave inputs belong to different users");
        }
        user = s.user;
        have_user = true;
    }

    // Sort key: (timestamp, domain, intra-sequence position).
    struct Keyed {
        Interaction ev;
        DomainIndex domain;
        size_t pos;
    };
    std::vector<Keyed> all;
    all.reserve(total);
    for (const auto & s : per_domain) {
        for (size_t i = 0; i < s.events.size(); ++i) {
            all.push_back({s.events[i], s.domain, i});
        }
    }
    std::stable_sort(all.begin(), all.end(), [](const Keyed & a, const Keyed & b) {
        if (a.ev.timestamp != b.ev.timestamp) return a.ev.timestamp < b.ev.timestamp;
        if (a.domain != b.domain) return a.domain < b.domain;
        return a.pos < b.pos;
    });

    MergedSequence out;
    out.user = user;
    out.events.reserve(total);
    for (const auto & k : all) {
        out.events.push_back(k.ev);
    }
    return out;
}

UserSequence domain_subsequence(const MergedSequence & seq, DomainIndex domain,
                                const DomainCatalog & catalog) {
    UserSequence out;
    out.user = seq.user;
    out.domain = domain;
    for (const auto & ev : seq.events) {
        if (catalog.domain_of(ev.item) == domain) {
            out.events.push_back(ev);
        }
    }
    return out;
}

std::vector<ItemIndex> items_of_sequence(const MergedSequence & seq) {
    std::vector<ItemIndex> out;
    out.reserve(seq.events.size());
    for (const auto & ev : seq.events) {
        out.push_back(ev.item);
    }
    return out;
}

std::vector<std::pair<int, int>> extract_dsp_pairs(const MergedSequence & seq,
                                                   DomainIndex domain,
                                                   const DomainCatalog & catalog) {
    if (domain < 0 || domain >= catalog.num_domains()) {
        throw data_error("UnknownDomain: index " + std::to_string(domain));
    }
    std::vector<std::pair<int, int>> pairs;
    int prev = -1;
    for (int i = 0; i < static_cast<int>(seq.events.size()); ++i) {
        if (catalog.domain_of(seq.events[i].item) != domain) {
            continue;
        }
        if (prev >= 0) {
            pairs.emplace_back(prev, i);
        }
        prev = i;
    }
    return pairs;
}

LeaveOneOutSplit leave_one_out_split(const Corpus & corpus) {
    LeaveOneOutSplit split;
    for (const auto & seq : corpus.merged) {
        const size_t n = seq.events.size();
        if (n < 3) {
            split.too_short.push_back(seq.user);
            continue;
        }
        MergedSequence train;
        train.user = seq.user;
        train.events.assign(seq.events.begin(), seq.events.end() - 2);
        split.train.push_back(std::move(train));

        EvalInstance valid;
        valid.user = seq.user;
        for (size_t i = 0; i + 2 < n; ++i) {
            valid.context.push_back(seq.events[i].item);
        }
        valid.label = seq.events[n - 2].item;
        valid.label_domain = corpus.catalog.domain_of(valid.label);
        split.validation.push_back(std::move(valid));

        EvalInstance test;
        test.user = seq.user;
        for (size_t i = 0; i + 1 < n; ++i) {
            test.context.push_back(seq.events[i].item);
        }
        test.label = seq.events[n - 1].item;
        test.label_domain = corpus.catalog.domain_of(test.label);
        split.test.push_back(std::move(test));
    }
    return split;
}

DatasetStats dataset_stats(const std::vector<MergedSequence> & sequences) {
    if (sequences.empty()) {
        throw data_error("EmptyInput: dataset_stats over zero sequences");
    }
    DatasetStats st;
    std::unordered_map<ItemIndex, int64_t> counts;
    for (const auto & seq : sequences) {
        st.n_users += 1;
        st.n_interactions += static_cast<int64_t>(seq.events.size());
        st.length_histogram[static_cast<int>(seq.events.size())] += 1;
        for (const auto & ev : seq.events) {
            counts[ev.item] += 1;
        }
    }
    if (st.n_interactions == 0) {
        throw data_error("EmptyInput: dataset_stats over zero interactions");
    }
    st.item_frequency.assign(counts.begin(), counts.end());
    std::sort(st.item_frequency.begin(), st.item_frequency.end(),
              [](const auto & a, const auto & b) {
                  if (a.second != b.second) return a.second > b.second;
                  return a.first < b.first;
              });
    st.n_items = static_cast<int64_t>(st.item_frequency.size());
    st.avg_length = static_cast<double>(st.n_interactions) / static_cast<double>(st.n_users);

    // Rank bands: ceil(0.1*n) head items, up to ceil(0.5*n) mid, rest tail.
    const int64_t n = st.n_items;
    const int64_t top_end = static_cast<int64_t>(std::ceil(0.1 * static_cast<double>(n)));
    const int64_t mid_end = static_cast<int64_t>(std::ceil(0.5 * static_cast<double>(n)));
    int64_t top = 0, mid = 0, tail = 0;
    for (int64_t i = 0; i < n; ++i) {
        int64_t c = st.item_frequency[i].second;
        if (i < top_end) {
            top += c;
        } else if (i < mid_end) {
            mid += c;
        } else {
            tail += c;
        }
    }
    st.share_top10 = static_cast<double>(top) / static_cast<double>(st.n_interactions);
    st.share_mid40 = static_cast<double>(mid) / static_cast<double>(st.n_interactions);
    st.share_tail50 = static_cast<double>(tail) / static_cast<double>(st.n_interactions);
    return st;
}

} // namespace taesar
