#include <catch_amalgamated.hpp>

#include "toxtopic/csv.hpp"

using namespace toxtopic;

TEST_CASE("plain and quoted fields") {
    const auto recs = csv::parse("a,b,c\n1,\"x, y\",\"he said \"\"hi\"\"\"\n");
    REQUIRE(recs.size() == 2);
    CHECK(recs[1].fields == std::vector<std::string>{"1", "x, y", "he said \"hi\""});
}

TEST_CASE("CRLF, missing final newline, embedded newline") {
    const auto recs = csv::parse("h1,h2\r\n\"multi\nline\",2\r\nlast,3");
    REQUIRE(recs.size() == 3);
    CHECK(recs[1].fields[0] == "multi\nline");
    CHECK(recs[2].line == 4);
    CHECK(recs[2].fields == std::vector<std::string>{"last", "3"});
}

TEST_CASE("empty fields survive") {
    const auto recs = csv::parse(",,\n");
    REQUIRE(recs.size() == 1);
    CHECK(recs[0].fields == std::vector<std::string>{"", "", ""});
}

TEST_CASE("malformed quoting is rejected") {
    CHECK_THROWS_AS(csv::parse("\"open,1\n"), ValidationError);
    CHECK_THROWS_AS(csv::parse("ab\"c\",1\n"), ValidationError);
    CHECK_THROWS_AS(csv::parse("\"ab\"c,1\n"), ValidationError);
}

TEST_CASE("escape then parse round-trips awkward fields") {
    const std::vector<std::string> fields{"plain", "with,comma", "with \"quote\"", "two\nlines", ""};
    const auto recs = csv::parse(csv::join_row(fields));
    REQUIRE(recs.size() == 1);
    CHECK(recs[0].fields == fields);
}
