#include "taesar/synthgen.hpp"

#include <charconv>
#include <fstream>
#include <random>

namespace taesar {

SyntheticCorpus generate(const GeneratorSpec & spec) {
    spec.validate();
    const int n_domains = spec.n_source_domains + 1; // target is domain 0
    const int C = spec.n_clusters;
    const int per_cell = spec.items_per_domain_per_cluster;

    std::vector<std::pair<std::string, bool>> domains;
    domains.emplace_back("T", true);
    for (int s = 1; s <= spec.n_source_domains; ++s) {
        domains.emplace_back("S" + std::to_string(s), false);
    }

    // Items are laid out cell by cell: domain-major, cluster-minor, raw ids
    // 1..N in that order, so dense index == raw id.
    std::vector<std::vector<int64_t>> vocab(n_domains);
    std::vector<int> cluster_of;
    int64_t next_raw = 1;
    for (int d = 0; d < n_domains; ++d) {
        for (int c = 0; c < C; ++c) {
            for (int i = 0; i < per_cell; ++i) {
                vocab[d].push_back(next_raw++);
                cluster_of.push_back(c);
            }
        }
    }

    SyntheticCorpus out;
    out.corpus.catalog = DomainCatalog(domains, vocab);
    out.oracle.cluster_of = std::move(cluster_of);
    out.oracle.n_clusters = C;
    out.oracle.domain_shift = spec.domain_cluster_shift;

    auto item_in_cell = [&](int d, int c, int i) -> ItemIndex {
        return static_cast<ItemIndex>(static_cast<int64_t>(d) * C * per_cell +
                                      static_cast<int64_t>(c) * per_cell + i + 1);
    };
    auto shift_of = [&](int d) {
        return spec.domain_cluster_shift.empty() ? 0 : spec.domain_cluster_shift[d];
    };

    for (int u = 0; u < spec.n_users; ++u) {
        // Per-user derived seed keeps generation order-independent.
        std::mt19937_64 rng(spec.seed * 0x9e3779b97f4a7c15ULL +
                            static_cast<uint64_t>(u) + 1);
        std::uniform_real_distribution<double> coin(0.0, 1.0);
        std::uniform_int_distribution<int> pick_cluster(0, C - 1);
        std::uniform_int_distribution<int> pick_item(0, per_cell - 1);
        std::uniform_int_distribution<int> pick_len(spec.min_length, spec.max_length);

        const int preferred = pick_cluster(rng);
        const int len = pick_len(rng);
        int domain = 0; // start in the target domain

        MergedSequence seq;
        seq.user = u + 1;
        for (int t = 0; t < len; ++t) {
            if (t > 0 && coin(rng) < spec.transfer_rate && n_domains > 1) {
                std::uniform_int_distribution<int> pick_other(0, n_domains - 2);
                int other = pick_other(rng);
                domain = other >= domain ? other + 1 : other;
            }
            ItemIndex item;
            if (coin(rng) < spec.noise_rate) {
                std::uniform_int_distribution<int> any(0, C * per_cell - 1);
                int flat = any(rng);
                item = item_in_cell(domain, flat / per_cell, flat % per_cell);
            } else {
                int cluster = coin(rng) < spec.within_cluster_coherence ? preferred
                                                                        : pick_cluster(rng);
                cluster = ((cluster + shift_of(domain)) % C + C) % C;
                item = item_in_cell(domain, cluster, pick_item(rng));
            }
            seq.events.push_back({item, t + 1});
        }
        out.corpus.merged.push_back(std::move(seq));
    }
    return out;
}

int OracleMapping::latent_cluster(ItemIndex item, const DomainCatalog & catalog) const {
    const int c = cluster(item);
    if (domain_shift.empty()) {
        return c;
    }
    const DomainIndex d = catalog.domain_of(item);
    if (static_cast<size_t>(d) >= domain_shift.size() || n_clusters < 1) {
        throw data_error("UnknownItem: oracle shift does not cover domain " +
                         catalog.name(d));
    }
    return ((c - domain_shift[d]) % n_clusters + n_clusters) % n_clusters;
}

TransferAccuracy oracle_transfer_accuracy(const std::vector<MappingRecord> & mappings,
                                          const OracleMapping & oracle,
                                          const DomainCatalog & catalog) {
    TransferAccuracy acc;
    int64_t within = 0;
    for (const auto & r : mappings) {
        if (r.decision == DecisionKind::Discard) {
            ++acc.n_discarded;
            continue;
        }
        if (r.decision != DecisionKind::Replace) {
            continue;
        }
        ++acc.n_replaced;
        if (oracle.latent_cluster(r.source_item, catalog) ==
            oracle.latent_cluster(r.target_item, catalog)) {
            ++within;
        }
    }
    if (acc.n_replaced > 0) {
        acc.accuracy = static_cast<double>(within) / static_cast<double>(acc.n_replaced);
    }
    const int64_t total = acc.n_replaced + acc.n_discarded;
    if (total > 0) {
        acc.discard_fraction = static_cast<double>(acc.n_discarded) /
                               static_cast<double>(total);
    }
    return acc;
}

void write_oracle_csv(const OracleMapping & oracle, const DomainCatalog & catalog,
                      const std::string & path) {
    std::ofstream out(path);
    if (!out) {
        throw data_error("ParseError: cannot open " + path + " for writing");
    }
    out << "item_id,cluster_id\n";
    if (!oracle.domain_shift.empty()) {
        out << "# domain_shift=";
        for (size_t i = 0; i < oracle.domain_shift.size(); ++i) {
            out << (i ? "," : "") << oracle.domain_shift[i];
        }
        out << '\n';
    }
    for (ItemIndex item = 1; item <= static_cast<ItemIndex>(oracle.cluster_of.size());
         ++item) {
        out << catalog.raw_id(item) << ',' << oracle.cluster_of[item - 1] << '\n';
    }
}

OracleMapping read_oracle_csv(const DomainCatalog & catalog, const std::string & path) {
    std::ifstream in(path);
    if (!in) {
        throw data_error("ParseError: cannot open oracle file " + path);
    }
    OracleMapping oracle;
    oracle.cluster_of.assign(catalog.num_items(), -1);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.rfind("# domain_shift=", 0) == 0) {
            std::string v = line.substr(std::string("# domain_shift=").size());
            size_t start = 0;
            while (start <= v.size()) {
                size_t comma = v.find(',', start);
                int s = 0;
                const char * b = v.data() + start;
                const char * e = v.data() + (comma == std::string::npos ? v.size() : comma);
                if (std::from_chars(b, e, s).ec != std::errc()) {
                    throw data_error("ParseError: " + path + ":" + std::to_string(line_no));
                }
                oracle.domain_shift.push_back(s);
                if (comma == std::string::npos) break;
                start = comma + 1;
            }
            continue;
        }
        if (line.empty() || line == "item_id,cluster_id" || line[0] == '#') {
            continue;
        }
        auto comma = line.find(',');
        if (comma == std::string::npos) {
            throw data_error("ParseError: " + path + ":" + std::to_string(line_no));
        }
        int64_t raw = 0;
        int cluster = 0;
        auto r1 = std::from_chars(line.data(), line.data() + comma, raw);
        auto r2 = std::from_chars(line.data() + comma + 1, line.data() + line.size(), cluster);
        if (r1.ec != std::errc() || r2.ec != std::errc()) {
            throw data_error("ParseError: " + path + ":" + std::to_string(line_no));
        }
        auto dense = catalog.dense_of(raw);
        if (!dense) {
            throw data_error("UnknownItem: oracle item " + std::to_string(raw));
        }
        oracle.cluster_of[*dense - 1] = cluster;
        oracle.n_clusters = std::max(oracle.n_clusters, cluster + 1);
    }
    for (int c : oracle.cluster_of) {
        if (c < 0) {
            throw data_error("ParseError: oracle file does not cover the vocabulary");
        }
    }
    return oracle;
}

GeneratorSpec read_generator_spec(const std::string & path) {
    std::ifstream in(path);
    if (!in) {
        throw config_error("BadConfig: cannot open generator spec " + path);
    }
    GeneratorSpec spec;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') {
            continue;
        }
        auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw config_error("BadConfig: " + path + ":" + std::to_string(line_no) +
                               ": expected key=value");
        }
        std::string key = line.substr(0, eq);
        std::string value = line.substr(eq + 1);
        try {
            if (key == "n_source_domains") spec.n_source_domains = std::stoi(value);
            else if (key == "n_clusters") spec.n_clusters = std::stoi(value);
            else if (key == "items_per_domain_per_cluster")
                spec.items_per_domain_per_cluster = std::stoi(value);
            else if (key == "n_users") spec.n_users = std::stoi(value);
            else if (key == "min_length") spec.min_length = std::stoi(value);
            else if (key == "max_length") spec.max_length = std::stoi(value);
            else if (key == "transfer_rate") spec.transfer_rate = std::stod(value);
            else if (key == "within_cluster_coherence")
                spec.within_cluster_coherence = std::stod(value);
            else if (key == "noise_rate") spec.noise_rate = std::stod(value);
            else if (key == "seed") spec.seed = std::stoull(value);
            else if (key == "domain_cluster_shift") {
                spec.domain_cluster_shift.clear();
                size_t start = 0;
                while (start <= value.size()) {
                    size_t comma = value.find(',', start);
                    std::string tok = value.substr(start, comma == std::string::npos
                                                              ? std::string::npos
                                                              : comma - start);
                    if (!tok.empty()) {
                        spec.domain_cluster_shift.push_back(std::stoi(tok));
                    }
                    if (comma == std::string::npos) break;
                    start = comma + 1;
                }
            } else {
                throw config_error("BadConfig: unknown generator key '" + key + "'");
            }
        } catch (const Error &) {
            throw;
        } catch (const std::exception &) {
            throw config_error("BadConfig: " + path + ":" + std::to_string(line_no) +
                               ": bad value for '" + key + "'");
        }
    }
    spec.validate();
    return spec;
}

} // namespace taesar
