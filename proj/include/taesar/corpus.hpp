#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "taesar/errors.hpp"

namespace taesar {

// Dense item index: 0 is the padding/null item, real items are 1..num_items().
using ItemIndex = int32_t;
using UserId = int64_t;
using DomainIndex = int32_t;

constexpr ItemIndex kPaddingItem = 0;

// The universe of domains and the partition of the item vocabulary.
// Domain order is the catalog order (used for timestamp tie-breaking);
// exactly one domain is the target.
class DomainCatalog {
public:
    DomainCatalog() = default;

    // domains: (name, is_target) in catalog order; items: per-domain raw ids.
    DomainCatalog(std::vector<std::pair<std::string, bool>> domains,
                  std::vector<std::vector<int64_t>> items_per_domain);

    int num_domains() const { return static_cast<int>(names_.size()); }
    int num_sources() const { return num_domains() - 1; }
    ItemIndex num_items() const { return static_cast<ItemIndex>(raw_ids_.size()); }
    DomainIndex target() const { return target_; }

    const std::string & name(DomainIndex d) const { return names_.at(d); }
    std::optional<DomainIndex> find_domain(const std::string & name) const;
    DomainIndex domain_index(const std::string & name) const; // throws UnknownDomain

    DomainIndex domain_of(ItemIndex item) const;
    bool is_target_item(ItemIndex item) const { return domain_of(item) == target_; }
    int64_t raw_id(ItemIndex item) const { return raw_ids_.at(item - 1); }
    std::optional<ItemIndex> dense_of(int64_t raw) const;

    // Items of one domain, ascending dense index.
    const std::vector<ItemIndex> & items_of(DomainIndex d) const { return items_of_.at(d); }
    const std::vector<ItemIndex> & target_items() const { return items_of_.at(target_); }

    // All real items, ascending dense index (1..num_items).
    std::vector<ItemIndex> all_items() const;

    // Binds models to a vocabulary; any change in domains or items changes it.
    uint64_t fingerprint() const { return fingerprint_; }

private:
    std::vector<std::string> names_;
    DomainIndex target_ = 0;
    std::vector<int64_t> raw_ids_;             // raw_ids_[dense-1]
    std::unordered_map<int64_t, ItemIndex> dense_of_;
    std::vector<DomainIndex> domain_of_;       // per dense item
    std::vector<std::vector<ItemIndex>> items_of_;
    uint64_t fingerprint_ = 0;
};

struct Interaction {
    ItemIndex item = kPaddingItem;
    int64_t timestamp = 0;

    bool operator==(const Interaction &) const = default;
};

// One user's events within a single domain, sorted by timestamp.
struct UserSequence {
    UserId user = 0;
    DomainIndex domain = 0;
    std::vector<Interaction> events;
};

// One user's chronologically interleaved events across all domains.
struct MergedSequence {
    UserId user = 0;
    std::vector<Interaction> events;

    bool operator==(const MergedSequence &) const = default;
};

struct Corpus {
    DomainCatalog catalog;
    std::vector<MergedSequence> merged; // sorted by user id, unique users
};

// Timestamp-stable merge of one user's per-domain sequences. Ties break by
// catalog domain order, then by intra-sequence position.
MergedSequence interleave(const std::vector<UserSequence> & per_domain);

// Extract the in-domain subsequence of a merged sequence (inverse of interleave
// for one domain).
UserSequence domain_subsequence(const MergedSequence & seq, DomainIndex domain,
                                const DomainCatalog & catalog);

std::vector<ItemIndex> items_of_sequence(const MergedSequence & seq);

// All (i, t) index pairs, 0-based, with seq[i] and seq[t] in `domain` and no
// in-domain event strictly between them. Sorted by i.
std::vector<std::pair<int, int>> extract_dsp_pairs(const MergedSequence & seq,
                                                   DomainIndex domain,
                                                   const DomainCatalog & catalog);

// A single next-item evaluation instance.
struct EvalInstance {
    UserId user = 0;
    std::vector<ItemIndex> context;
    ItemIndex label = kPaddingItem;
    DomainIndex label_domain = 0;
};

struct LeaveOneOutSplit {
    std::vector<MergedSequence> train;   // last two events removed
    std::vector<EvalInstance> validation;
    std::vector<EvalInstance> test;
    std::vector<UserId> too_short;       // excluded users (length < 3)
};

LeaveOneOutSplit leave_one_out_split(const Corpus & corpus);

struct DatasetStats {
    std::vector<std::pair<ItemIndex, int64_t>> item_frequency; // sorted descending by count
    double share_top10 = 0.0;  // interaction share of top ~10% items by frequency
    double share_mid40 = 0.0;
    double share_tail50 = 0.0;
    std::map<int, int64_t> length_histogram;
    int64_t n_users = 0;
    int64_t n_items = 0;        // distinct observed items
    int64_t n_interactions = 0;
    double avg_length = 0.0;
};

DatasetStats dataset_stats(const std::vector<MergedSequence> & sequences);

} // namespace taesar
