#include "taesar/io.hpp"

#include "taesar/predictor.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

namespace taesar {

namespace {

std::vector<std::string> split_tabs(const std::string & line) {
    std::vector<std::string> out;
    size_t start = 0;
    while (true) {
        size_t tab = line.find('\t', start);
        if (tab == std::string::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, tab - start));
        start = tab + 1;
    }
    return out;
}

int64_t parse_i64(const std::string & s, const std::string & path, int line_no,
                  const char * what) {
    int64_t v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size()) {
        throw data_error("ParseError: " + path + ":" + std::to_string(line_no) +
                         ": bad " + what + " '" + s + "'");
    }
    return v;
}

struct RawEvent {
    UserId user;
    int64_t item;
    DomainIndex domain;
    int64_t timestamp;
};

} // namespace

Corpus ingest(const std::string & events_path, const std::string & catalog_path,
              int max_len) {
    std::ifstream cat_in(catalog_path);
    if (!cat_in) {
        throw data_error("ParseError: cannot open catalog file " + catalog_path);
    }
    std::vector<std::pair<std::string, bool>> domains;
    std::string line;
    int line_no = 0;
    while (std::getline(cat_in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') {
            continue;
        }
        auto cols = split_tabs(line);
        if (cols.size() != 2 || (cols[1] != "target" && cols[1] != "source")) {
            throw data_error("ParseError: " + catalog_path + ":" + std::to_string(line_no) +
                             ": expected 'domain<TAB>target|source'");
        }
        domains.emplace_back(cols[0], cols[1] == "target");
    }
    if (domains.empty()) {
        throw data_error("EmptyInput: catalog file " + catalog_path + " has no domains");
    }

    std::map<std::string, DomainIndex> domain_idx;
    for (size_t d = 0; d < domains.size(); ++d) {
        domain_idx[domains[d].first] = static_cast<DomainIndex>(d);
    }

    std::ifstream ev_in(events_path);
    if (!ev_in) {
        throw data_error("ParseError: cannot open event file " + events_path);
    }
    std::vector<RawEvent> events;
    std::map<int64_t, DomainIndex> item_domain;
    line_no = 0;
    while (std::getline(ev_in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') {
            continue;
        }
        auto cols = split_tabs(line);
        if (cols.size() != 4) {
            throw data_error("ParseError: " + events_path + ":" + std::to_string(line_no) +
                             ": expected 4 tab-separated fields, got " +
                             std::to_string(cols.size()));
        }
        RawEvent ev;
        ev.user = parse_i64(cols[0], events_path, line_no, "user id");
        ev.item = parse_i64(cols[1], events_path, line_no, "item id");
        auto dit = domain_idx.find(cols[2]);
        if (dit == domain_idx.end()) {
            throw data_error("ParseError: " + events_path + ":" + std::to_string(line_no) +
                             ": unknown domain '" + cols[2] + "'");
        }
        ev.domain = dit->second;
        ev.timestamp = parse_i64(cols[3], events_path, line_no, "timestamp");
        if (ev.timestamp < 0) {
            throw data_error("ParseError: " + events_path + ":" + std::to_string(line_no) +
                             ": negative timestamp");
        }
        auto [it, inserted] = item_domain.emplace(ev.item, ev.domain);
        if (!inserted && it->second != ev.domain) {
            throw data_error("UnknownItemDomain: item " + std::to_string(ev.item) +
                             " appears under domains '" + domains[it->second].first +
                             "' and '" + cols[2] + "'");
        }
        events.push_back(ev);
    }
    if (events.empty()) {
        throw data_error("EmptyInput: event file " + events_path + " has no records");
    }

    std::vector<std::vector<int64_t>> vocab(domains.size());
    for (const auto & [item, d] : item_domain) {
        vocab[d].push_back(item);
    }
    DomainCatalog catalog(domains, vocab);

    // Group per (user, domain), keeping file order within each group, then
    // interleave per user.
    std::map<UserId, std::vector<UserSequence>> per_user;
    for (const auto & ev : events) {
        auto & seqs = per_user[ev.user];
        if (seqs.empty()) {
            seqs.resize(domains.size());
            for (size_t d = 0; d < domains.size(); ++d) {
                seqs[d].user = ev.user;
                seqs[d].domain = static_cast<DomainIndex>(d);
            }
        }
        seqs[ev.domain].events.push_back({*catalog.dense_of(ev.item), ev.timestamp});
    }

    Corpus corpus;
    corpus.catalog = std::move(catalog);
    for (auto & [user, seqs] : per_user) {
        for (auto & s : seqs) {
            std::stable_sort(s.events.begin(), s.events.end(),
                             [](const Interaction & a, const Interaction & b) {
                                 return a.timestamp < b.timestamp;
                             });
        }
        MergedSequence merged = interleave(seqs);
        if (max_len > 0 && static_cast<int>(merged.events.size()) > max_len) {
            merged.events.erase(merged.events.begin(),
                                merged.events.end() - max_len);
        }
        corpus.merged.push_back(std::move(merged));
    }
    return corpus;
}

void export_corpus(const Corpus & corpus, const std::string & events_path) {
    std::ofstream out(events_path);
    if (!out) {
        throw data_error("ParseError: cannot open " + events_path + " for writing");
    }
    for (const auto & seq : corpus.merged) {
        for (const auto & ev : seq.events) {
            out << seq.user << '\t' << corpus.catalog.raw_id(ev.item) << '\t'
                << corpus.catalog.name(corpus.catalog.domain_of(ev.item)) << '\t'
                << ev.timestamp << '\n';
        }
    }
}

void export_catalog(const DomainCatalog & catalog, const std::string & catalog_path) {
    std::ofstream out(catalog_path);
    if (!out) {
        throw data_error("ParseError: cannot open " + catalog_path + " for writing");
    }
    for (DomainIndex d = 0; d < catalog.num_domains(); ++d) {
        out << catalog.name(d) << '\t' << (d == catalog.target() ? "target" : "source")
            << '\n';
    }
}

void write_stats_csv(const DatasetStats & stats, const std::string & path) {
    std::ofstream out(path);
    if (!out) {
        throw data_error("ParseError: cannot open " + path + " for writing");
    }
    out << "section,key,value\n";
    out << "totals,n_users," << stats.n_users << '\n';
    out << "totals,n_items," << stats.n_items << '\n';
    out << "totals,n_interactions," << stats.n_interactions << '\n';
    out << "totals,avg_length," << stats.avg_length << '\n';
    out << "longtail,share_top10," << stats.share_top10 << '\n';
    out << "longtail,share_mid40," << stats.share_mid40 << '\n';
    out << "longtail,share_tail50," << stats.share_tail50 << '\n';
    for (const auto & [len, count] : stats.length_histogram) {
        out << "length_histogram," << len << ',' << count << '\n';
    }
    for (size_t rank = 0; rank < stats.item_frequency.size(); ++rank) {
        out << "item_frequency," << (rank + 1) << ',' << stats.item_frequency[rank].second
            << '\n';
    }
}

void write_training_report_csv(const TrainingReport & report, const std::string & path) {
    std::ofstream out(path);
    if (!out) {
        throw data_error("ParseError: cannot open " + path + " for writing");
    }
    out << "epoch,train_loss,valid_metric\n";
    for (const auto & rec : report.epochs) {
        out << rec.epoch << ',' << rec.train_loss << ',' << rec.valid_metric << '\n';
    }
    out << "# stopping_epoch=" << report.stopping_epoch << '\n';
}

} // namespace taesar
