#pragma once

#include "taesar/contrastive.hpp"
#include "taesar/corpus.hpp"

namespace taesar {

// Deterministic synthetic multi-domain corpus with planted latent interest
// clusters shared across domains.
struct GeneratorSpec {
    int n_source_domains = 3;            // plus one target domain
    int n_clusters = 5;
    int items_per_domain_per_cluster = 10;
    int n_users = 1000;
    int min_length = 20;
    int max_length = 60;
    double transfer_rate = 0.4;          // P(next event switches domain)
    double within_cluster_coherence = 0.9;
    double noise_rate = 0.05;            // P(uniformly random item in the domain)
    // Optional per-domain cluster shift (size n_source_domains + 1, target
    // first). A nonzero shift makes a domain emit items of cluster
    // (c + shift) mod n_clusters, planting anti-correlated transitions.
    std::vector<int> domain_cluster_shift;
    uint64_t seed = 7;

    void validate() const {
        if (n_source_domains < 1 || n_clusters < 1 || items_per_domain_per_cluster < 1 ||
            n_users < 1 || min_length < 1 || max_length < min_length) {
            throw config_error("InvalidSpec: generator counts out of range");
        }
        auto prob = [](double p) { return p >= 0.0 && p <= 1.0; };
        if (!prob(transfer_rate) || !prob(within_cluster_coherence) || !prob(noise_rate)) {
            throw config_error("InvalidSpec: generator probabilities must be in [0,1]");
        }
        if (!domain_cluster_shift.empty() &&
            static_cast<int>(domain_cluster_shift.size()) != n_source_domains + 1) {
            throw config_error("InvalidSpec: domain_cluster_shift size mismatch");
        }
    }
};

// Ground-truth cluster of each generated item, by dense index.
struct OracleMapping {
    std::vector<int> cluster_of; // cluster_of[dense-1]
    int n_clusters = 0;
    // Planted per-domain cluster shift (target first); empty means all zero.
    std::vector<int> domain_shift;

    int cluster(ItemIndex item) const {
        if (item < 1 || item > static_cast<ItemIndex>(cluster_of.size())) {
            throw data_error("UnknownItem: item outside generated vocabulary");
        }
        return cluster_of[item - 1];
    }

    // Cluster in the user-preference frame: the item's emitted cluster minus
    // its domain's planted shift. With no shift this equals cluster().
    int latent_cluster(ItemIndex item, const DomainCatalog & catalog) const;
};

struct SyntheticCorpus {
    Corpus corpus;
    OracleMapping oracle;
};

SyntheticCorpus generate(const GeneratorSpec & spec);

struct TransferAccuracy {
    double accuracy = 0.0;      // within-cluster fraction of Replace decisions
    int64_t n_replaced = 0;
    int64_t n_discarded = 0;
    double discard_fraction = 0.0;
};

// Fraction of Replace decisions whose target item matches the source item's
// planted latent cluster (shift-corrected, so anti-correlated domains score
// the preference-preserving replacement as correct). Discards are excluded
// from the accuracy and reported separately.
TransferAccuracy oracle_transfer_accuracy(const std::vector<MappingRecord> & mappings,
                                          const OracleMapping & oracle,
                                          const DomainCatalog & catalog);

void write_oracle_csv(const OracleMapping & oracle, const DomainCatalog & catalog,
                      const std::string & path);
OracleMapping read_oracle_csv(const DomainCatalog & catalog, const std::string & path);

// Reads a GeneratorSpec from a key=value file.
GeneratorSpec read_generator_spec(const std::string & path);

} // namespace taesar
