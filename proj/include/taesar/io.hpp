#pragma once

#include <string>

#include "taesar/corpus.hpp"

namespace taesar {

// Event record file: one `user<TAB>item<TAB>domain<TAB>timestamp` per line,
// `#` comment lines allowed. Catalog sidecar: `domain<TAB>target|source` per
// line, order defining catalog domain order. Item vocabularies are collected
// from the event file; an item seen under two domains is an error.

// max_len > 0 truncates each merged sequence to its most recent max_len events.
Corpus ingest(const std::string & events_path, const std::string & catalog_path,
              int max_len = 128);

void export_corpus(const Corpus & corpus, const std::string & events_path);
void export_catalog(const DomainCatalog & catalog, const std::string & catalog_path);

void write_stats_csv(const DatasetStats & stats, const std::string & path);

} // namespace taesar
