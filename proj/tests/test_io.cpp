#include <doctest.h>

#include "helpers.hpp"
#include "taesar/io.hpp"
#include "taesar/predictor.hpp"

using namespace taesar;
using namespace taesar::testing;

namespace {

void write_file(const std::filesystem::path & path, const std::string & text) {
    std::ofstream out(path);
    out << text;
}

} // namespace

TEST_CASE("ingest parses events and export round-trips byte-identically") {
    auto events = temp_path("events.tsv");
    auto catalog = temp_path("catalog.tsv");
    write_file(catalog, "T\ttarget\nS1\tsource\n");
    write_file(events,
               "# comment\n"
               "1\t100\tT\t3\n"
               "1\t200\tS1\t1\n"
               "2\t100\tT\t5\n"
               "1\t101\tT\t2\n");
    Corpus corpus = ingest(events.string(), catalog.string());
    CHECK(corpus.catalog.num_domains() == 2);
    CHECK(corpus.catalog.num_items() == 3);
    REQUIRE(corpus.merged.size() == 2);
    // User 1 ordered by timestamp: 200(S1,t1), 101(T,t2), 100(T,t3).
    CHECK(corpus.merged[0].user == 1);
    CHECK(corpus.catalog.raw_id(corpus.merged[0].events[0].item) == 200);
    CHECK(corpus.catalog.raw_id(corpus.merged[0].events[1].item) == 101);

    auto events2 = temp_path("events_rt.tsv");
    auto catalog2 = temp_path("catalog_rt.tsv");
    export_corpus(corpus, events2.string());
    export_catalog(corpus.catalog, catalog2.string());
    Corpus again = ingest(events2.string(), catalog2.string());
    auto events3 = temp_path("events_rt2.tsv");
    auto catalog3 = temp_path("catalog_rt2.tsv");
    export_corpus(again, events3.string());
    export_catalog(again.catalog, catalog3.string());
    CHECK(slurp(events2) == slurp(events3));
    CHECK(slurp(catalog2) == slurp(catalog3));
    CHECK(corpus.catalog.fingerprint() == again.catalog.fingerprint());
}

TEST_CASE("ingest truncates to the most recent max_len events") {
    auto events = temp_path("events_trunc.tsv");
    auto catalog = temp_path("catalog_trunc.tsv");
    write_file(catalog, "T\ttarget\nS1\tsource\n");
    std::string text;
    for (int t = 1; t <= 10; ++t) {
        text += "1\t" + std::to_string(t % 2 == 0 ? 100 : 200) + "\t" +
                (t % 2 == 0 ? "T" : "S1") + "\t" + std::to_string(t) + "\n";
    }
    write_file(events, text);
    Corpus corpus = ingest(events.string(), catalog.string(), 4);
    REQUIRE(corpus.merged.size() == 1);
    CHECK(corpus.merged[0].events.size() == 4);
    CHECK(corpus.merged[0].events.back().timestamp == 10);
    CHECK(corpus.merged[0].events.front().timestamp == 7);
}

TEST_CASE("ingest error taxonomy") {
    auto events = temp_path("events_err.tsv");
    auto catalog = temp_path("catalog_err.tsv");

    write_file(catalog, "T\ttarget\nS1\tsource\n");
    write_file(events, "1\t100\tT\n");
    CHECK_THROWS_WITH_AS(ingest(events.string(), catalog.string()),
                         doctest::Contains("ParseError"), Error);

    write_file(events, "1\t100\tX\t1\n");
    CHECK_THROWS_WITH_AS(ingest(events.string(), catalog.string()),
                         doctest::Contains("unknown domain"), Error);

    write_file(events, "1\t100\tT\t1\n2\t100\tS1\t1\n");
    CHECK_THROWS_WITH_AS(ingest(events.string(), catalog.string()),
                         doctest::Contains("UnknownItemDomain"), Error);

    write_file(events, "");
    CHECK_THROWS_WITH_AS(ingest(events.string(), catalog.string()),
                         doctest::Contains("EmptyInput"), Error);

    write_file(events, "1\t100\tT\t1\n");
    write_file(catalog, "T\tneither\n");
    CHECK_THROWS_AS(ingest(events.string(), catalog.string()), Error);
}

TEST_CASE("training report csv") {
    TrainingReport report;
    report.epochs.push_back({1, 4.5, 0.1});
    report.epochs.push_back({2, 3.25, 0.25});
    report.stopping_epoch = 2;
    auto path = temp_path("report.csv");
    write_training_report_csv(report, path.string());
    std::string text = slurp(path);
    CHECK(text.find("epoch,train_loss,valid_metric\n") == 0);
    CHECK(text.find("2,3.25,0.25") != std::string::npos);
    CHECK(text.find("stopping_epoch=2") != std::string::npos);
}

TEST_CASE("stats csv sections") {
    std::vector<MergedSequence> seqs{make_seq(1, {1, 2, 1})};
    DatasetStats st = dataset_stats(seqs);
    auto path = temp_path("stats.csv");
    write_stats_csv(st, path.string());
    std::string text = slurp(path);
    CHECK(text.find("section,key,value") == 0);
    CHECK(text.find("totals,n_interactions,3") != std::string::npos);
    CHECK(text.find("length_histogram,3,1") != std::string::npos);
}
