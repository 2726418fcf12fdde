#include <doctest.h>

#include <set>

#include "kgval/datasets.hpp"
#include "kgval/error.hpp"
#include "paths.hpp"

using namespace kgval;

namespace {

std::vector<DatasetRecord> numbered(int n) {
    std::string text;
    for (int i = 1; i <= n; ++i) text += "s" + std::to_string(i) + "\tr\to\t" + std::to_string(i % 2) + "\n";
    return parse_dataset(text, DatasetFormat::Tsv, "nums");
}

std::vector<std::string> ids(const std::vector<DatasetRecord>& rs) {
    std::vector<std::string> out;
    for (const auto& r : rs) out.push_back(r.record_id);
    return out;
}

}  // namespace

TEST_SUITE("datasets") {

TEST_CASE("TSV records") {
    const auto rs = parse_dataset(
        "alabama_crimson_tide\tteamplayssport\tamerican football\t1\r\n\n"
        "anaheim_ducks\tteamplaysport\tfootball\t0\n",
        DatasetFormat::Tsv, "fb");
    REQUIRE(rs.size() == 2);
    CHECK(rs[0].triple == Triple("alabama_crimson_tide", {"teamplayssport"}, "american football", true));
    CHECK(rs[1].triple.gold_label() == false);
    CHECK(rs[0].record_id == "fb:1");
    CHECK(rs[1].record_id == "fb:3");
    CHECK(rs[1].dataset_name == "fb");
}

TEST_CASE("TSV arity and label errors") {
    try {
        parse_dataset("a\tb\tc\t1\na\tb\tc\n", DatasetFormat::Tsv, "x");
        FAIL("expected MalformedRecord");
    } catch (const MalformedRecord& e) {
        CHECK(e.line() == 2);
        CHECK(e.why() == "expected 4 fields");
    }
    CHECK_THROWS_AS(parse_dataset("a\tb\tc\tyes\n", DatasetFormat::Tsv, "x"), MalformedRecord);
    CHECK_THROWS_AS(parse_dataset("\tb\tc\t1\n", DatasetFormat::Tsv, "x"), MalformedRecord);
}

TEST_CASE("JSONL records") {
    const auto rs = parse_dataset(
        R"({"predicted_subject_name":"Q","predicted_relation":["r1","r2"],"predicted_object_name":"o","label":true})"
        "\n"
        R"({"predicted_subject_name":"Q","predicted_relation":"r","predicted_object_name":"o","label":0})"
        "\n"
        R"({"predicted_subject_name":"Q","predicted_relation":"r","predicted_object_name":"o","label":"1"})",
        DatasetFormat::Jsonl, "j");
    REQUIRE(rs.size() == 3);
    CHECK(rs[0].triple.relations() == std::vector<std::string>{"r1", "r2"});
    CHECK(rs[0].triple.gold_label() == true);
    CHECK(rs[1].triple.gold_label() == false);
    CHECK(rs[2].triple.gold_label() == true);
    CHECK_THROWS_AS(parse_dataset(R"({"predicted_subject_name":"Q"})", DatasetFormat::Jsonl, "j"),
                    MalformedRecord);
    CHECK_THROWS_AS(parse_dataset("not json", DatasetFormat::Jsonl, "j"), MalformedRecord);
}

TEST_CASE("format names and file loading") {
    CHECK(dataset_format_from_string("tsv") == DatasetFormat::Tsv);
    CHECK(dataset_format_from_string("jsonl") == DatasetFormat::Jsonl);
    CHECK_THROWS_AS(dataset_format_from_string("csv"), UnknownFormat);
    const auto rs = load_dataset(testing_support::fixture("golden/golden20.tsv"), DatasetFormat::Tsv);
    CHECK(rs.size() == 20);
    CHECK(rs.front().dataset_name == "golden20");
    CHECK_THROWS_AS(load_dataset("/nonexistent/file.tsv", DatasetFormat::Tsv), Error);
}

TEST_CASE("sampling saturates, is deterministic and order-preserving") {
    const auto hundred = numbered(100);
    CHECK(sample_subset(hundred, 150) == hundred);
    CHECK(sample_subset(hundred, 100) == hundred);
    CHECK(sample_subset(hundred, 10, 7) == sample_subset(hundred, 10, 7));
    CHECK(sample_subset(hundred, 10, 7) != sample_subset(hundred, 10, 8));

    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        const auto s = sample_subset(hundred, 17, seed);
        REQUIRE(s.size() == 17);
        // Subsequence of the input: strictly increasing positions.
        std::size_t pos = 0;
        for (const auto& r : s) {
            while (pos < hundred.size() && !(hundred[pos] == r)) ++pos;
            REQUIRE(pos < hundred.size());
            ++pos;
        }
        const auto picked = ids(s);
        CHECK(std::set<std::string>(picked.begin(), picked.end()).size() == 17);
    }
}

TEST_CASE("sampling golden output") {
    CHECK(ids(sample_subset(numbered(10), 3, 7)) == std::vector<std::string>{"nums:3", "nums:5", "nums:6"});
}

TEST_CASE("sampling is roughly uniform") {
    const auto ten = numbered(10);
    std::vector<int> hits(10, 0);
    for (std::uint64_t seed = 0; seed < 4000; ++seed) {
        for (const auto& r : sample_subset(ten, 3, seed)) ++hits[std::stoi(r.record_id.substr(5)) - 1];
    }
    for (int h : hits) CHECK(h == doctest::Approx(1200).epsilon(0.12));
}

TEST_CASE("balanced sampling") {
    const auto hundred = numbered(100);
    const auto s = sample_balanced(hundred, 11, 3);
    REQUIRE(s.size() == 11);
    int pos = 0;
    for (const auto& r : s) pos += *r.triple.gold_label() ? 1 : 0;
    CHECK(pos == 6);
    CHECK(sample_balanced(hundred, 11, 3) == s);
}

}
