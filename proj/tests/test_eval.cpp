#include <doctest.h>

#include <algorithm>
#include <string>
#include <vector>

#include "masq/core.hpp"
#include "masq/eval.hpp"
#include "support.hpp"

using namespace masq;
using masq::test::Rng;
using masq::test::TempDir;
using masq::test::read_text;
using masq::test::write_text;

namespace {

Annotation ann(std::string doc, std::size_t start, std::size_t end, const EntityType& type,
               std::string text = "x") {
    return Annotation{std::move(doc), Span{start, end}, type, std::move(text)};
}

}  // namespace

// Expected ratios were hand-computed from the raw counts before this module
// was written: 13/21, 13/17, 41/48, 82/89.
TEST_CASE("metrics match the hand-computed reference values") {
    MetricsReport first = compute_metrics(13, 0, 8);
    CHECK(first.precision == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(first.recall == doctest::Approx(0.6190476190476191).epsilon(1e-12));
    CHECK(first.f1 == doctest::Approx(0.7647058823529412).epsilon(1e-12));

    MetricsReport second = compute_metrics(41, 0, 7);
    CHECK(second.precision == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(second.recall == doctest::Approx(0.8541666666666666).epsilon(1e-12));
    CHECK(second.f1 == doctest::Approx(0.9213483146067416).epsilon(1e-12));
}

TEST_CASE("degenerate denominators default to one") {
    MetricsReport empty = compute_metrics(0, 0, 0);
    CHECK(empty.precision == 1.0);
    CHECK(empty.recall == 1.0);
    CHECK(empty.f1 == 1.0);

    MetricsReport no_preds = compute_metrics(0, 0, 21);
    CHECK(no_preds.precision == 1.0);  // nothing predicted, nothing wrong
    CHECK(no_preds.recall == 0.0);
    CHECK(no_preds.f1 == 0.0);

    MetricsReport all_wrong = compute_metrics(0, 21, 0);
    CHECK(all_wrong.precision == 0.0);
    CHECK(all_wrong.recall == 1.0);
    CHECK(all_wrong.f1 == 0.0);

    MetricsReport perfect = compute_metrics(17, 0, 0);
    CHECK(perfect.precision == 1.0);
    CHECK(perfect.recall == 1.0);
    CHECK(perfect.f1 == 1.0);
}

TEST_CASE("counts pass through the report") {
    MetricsReport report = compute_metrics(3, 2, 1);
    CHECK(report.tp == 3);
    CHECK(report.fp == 2);
    CHECK(report.fn == 1);
    CHECK(report.precision == doctest::Approx(0.6));
    CHECK(report.recall == doctest::Approx(0.75));
}

TEST_CASE("matching is strict on document, span, and type") {
    std::vector<Annotation> gold = {ann("a.txt", 5, 13, types::ip_address)};

    MatchCounts exact = match_detections(gold, {ann("a.txt", 5, 13, types::ip_address)});
    CHECK(exact.tp == 1);
    CHECK(exact.fp == 0);
    CHECK(exact.fn == 0);

    // Partial overlap is a miss on both sides.
    MatchCounts shifted = match_detections(gold, {ann("a.txt", 5, 12, types::ip_address)});
    CHECK(shifted.tp == 0);
    CHECK(shifted.fp == 1);
    CHECK(shifted.fn == 1);

    MatchCounts wrong_type = match_detections(gold, {ann("a.txt", 5, 13, types::hostname)});
    CHECK(wrong_type.tp == 0);
    CHECK(wrong_type.fp == 1);
    CHECK(wrong_type.fn == 1);

    MatchCounts wrong_doc = match_detections(gold, {ann("b.txt", 5, 13, types::ip_address)});
    CHECK(wrong_doc.tp == 0);
    CHECK(wrong_doc.fp == 1);
    CHECK(wrong_doc.fn == 1);
}

TEST_CASE("each gold row matches at most one prediction") {
    std::vector<Annotation> gold = {ann("a.txt", 5, 13, types::ip_address)};
    std::vector<Annotation> pred = {ann("a.txt", 5, 13, types::ip_address),
                                    ann("a.txt", 5, 13, types::ip_address)};
    MatchCounts counts = match_detections(gold, pred);
    CHECK(counts.tp == 1);
    CHECK(counts.fp == 1);
    CHECK(counts.fn == 0);
}

TEST_CASE("overlapping gold spans in one document are rejected") {
    std::vector<Annotation> overlapping = {ann("a.txt", 5, 13, types::ip_address),
                                           ann("a.txt", 10, 20, types::hostname)};
    try {
        match_detections(overlapping, {});
        FAIL("should have thrown");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::OverlappingGold);
    }

    // Touching spans and same spans in different documents are fine.
    std::vector<Annotation> touching = {ann("a.txt", 5, 13, types::ip_address),
                                        ann("a.txt", 13, 20, types::hostname),
                                        ann("b.txt", 5, 13, types::ip_address)};
    MatchCounts counts = match_detections(touching, {});
    CHECK(counts.fn == 3);
}

TEST_CASE("per-type metrics split the same strict matching") {
    std::vector<Annotation> gold = {ann("a.txt", 0, 8, types::ip_address),
                                    ann("a.txt", 10, 25, types::hostname),
                                    ann("b.txt", 0, 8, types::ip_address)};
    std::vector<Annotation> pred = {ann("a.txt", 0, 8, types::ip_address),
                                    ann("a.txt", 10, 25, types::email),
                                    ann("b.txt", 0, 8, types::ip_address)};

    auto per_type = per_type_metrics(gold, pred);
    REQUIRE(per_type.count("IP_ADDRESS") == 1);
    CHECK(per_type["IP_ADDRESS"].tp == 2);
    CHECK(per_type["IP_ADDRESS"].fp == 0);
    CHECK(per_type["IP_ADDRESS"].fn == 0);

    REQUIRE(per_type.count("HOSTNAME") == 1);
    CHECK(per_type["HOSTNAME"].tp == 0);
    CHECK(per_type["HOSTNAME"].fn == 1);

    REQUIRE(per_type.count("EMAIL") == 1);
    CHECK(per_type["EMAIL"].fp == 1);
}

TEST_CASE("annotation files round-trip") {
    TempDir dir;
    auto path = dir / "gold.ndjson";
    std::vector<Annotation> rows = {ann("a.txt", 5, 13, types::ip_address, "10.0.0.1"),
                                    ann("b.txt", 0, 7, types::hostname, "x.y.com")};
    write_annotations(path, rows);

    auto loaded = load_annotations(path);
    REQUIRE(loaded.size() == 2);
    CHECK(loaded[0].doc_id == "a.txt");
    CHECK(loaded[0].span == Span{5, 13});
    CHECK(loaded[0].entity_type == types::ip_address);
    CHECK(loaded[0].text == "10.0.0.1");
    CHECK(loaded[1].doc_id == "b.txt");

    std::string raw = read_text(path);
    CHECK(raw.find("\"doc\"") != std::string::npos);
    CHECK(raw.find("\"start\"") != std::string::npos);
    CHECK(raw.find("\"type\"") != std::string::npos);
}

TEST_CASE("corrupt annotation lines are rejected with their line number") {
    TempDir dir;
    auto path = dir / "bad.ndjson";

    write_text(path, "{\"doc\":\"a\",\"start\":0,\"end\":3,\"type\":\"EMAIL\",\"text\":\"x\"}\n"
                     "not json\n");
    try {
        load_annotations(path);
        FAIL("should have thrown");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::CorruptRecordLine);
        CHECK(std::string(e.what()).find(":2") != std::string::npos);
    }

    write_text(path, "{\"doc\":\"a\",\"start\":5,\"end\":3,\"type\":\"EMAIL\",\"text\":\"x\"}\n");
    CHECK_THROWS_AS(load_annotations(path), Error);

    write_text(path, "{\"doc\":\"a\",\"start\":-1,\"end\":3,\"type\":\"EMAIL\",\"text\":\"x\"}\n");
    CHECK_THROWS_AS(load_annotations(path), Error);

    write_text(path, "{\"doc\":\"a\",\"start\":0,\"end\":3,\"type\":\"WHAT\",\"text\":\"x\"}\n");
    CHECK_THROWS_AS(load_annotations(path), Error);

    write_text(path, "{\"doc\":\"a\",\"start\":0,\"end\":3,\"text\":\"x\"}\n");
    CHECK_THROWS_AS(load_annotations(path), Error);

    CHECK_THROWS_AS(load_annotations(dir / "missing.ndjson"), Error);
}

namespace {

struct Scenario {
    std::vector<Annotation> gold;
    std::vector<Annotation> pred;
    std::size_t expected_tp = 0;
};

Scenario random_scenario(Rng& rng) {
    static const std::vector<EntityType> type_pool = {types::ip_address, types::email,
                                                      types::hostname, types::hash};
    Scenario s;
    std::size_t docs = rng.between(1, 3);
    for (std::size_t d = 0; d < docs; ++d) {
        std::string doc = "doc" + std::to_string(d) + ".txt";
        std::size_t cursor = 0;
        std::size_t rows = rng.between(0, 6);
        for (std::size_t i = 0; i < rows; ++i) {
            std::size_t start = cursor + rng.between(1, 5);
            std::size_t end = start + rng.between(1, 12);
            cursor = end;
            s.gold.push_back(ann(doc, start, end, rng.pick(type_pool)));
        }
    }
    for (const Annotation& g : s.gold) {
        if (rng.chance(0.7)) {
            s.pred.push_back(g);
            ++s.expected_tp;
        }
    }
    std::size_t extras = rng.between(0, 4);
    for (std::size_t i = 0; i < extras; ++i) {
        // Far beyond any gold span, so never an accidental match.
        std::size_t start = 100000 + i * 50;
        s.pred.push_back(ann("doc0.txt", start, start + 5, rng.pick(type_pool)));
    }
    // Shuffle predictions in place; matching must not care about order.
    for (std::size_t i = s.pred.size(); i > 1; --i) {
        std::size_t j = rng.below(i);
        std::swap(s.pred[i - 1], s.pred[j]);
    }
    return s;
}

}  // namespace

TEST_CASE("counts conserve gold and prediction totals") {
    Rng rng(0xeba1feed);
    for (int round = 0; round < 50; ++round) {
        Scenario s = random_scenario(rng);
        MatchCounts counts = match_detections(s.gold, s.pred);
        CHECK(counts.tp == s.expected_tp);
        CHECK(counts.tp + counts.fn == s.gold.size());
        CHECK(counts.tp + counts.fp == s.pred.size());

        MetricsReport report = compute_metrics(counts.tp, counts.fp, counts.fn);
        CHECK(report.precision >= 0.0);
        CHECK(report.precision <= 1.0);
        CHECK(report.recall >= 0.0);
        CHECK(report.recall <= 1.0);
        CHECK(report.f1 >= 0.0);
        CHECK(report.f1 <= 1.0);
        // The harmonic mean sits between the smaller component and the
        // arithmetic mean.
        double lo = std::min(report.precision, report.recall);
        double mean = (report.precision + report.recall) / 2.0;
        CHECK(report.f1 >= lo - 1e-12);
        CHECK(report.f1 <= mean + 1e-12);
    }
}
