#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>

#include "ipg/taxonomy.hpp"
#include "ipg/utf8.hpp"

using namespace ipg;
using namespace ipg::taxonomy;

namespace {

PhraseTaxonomy tiny() {
  PhraseTaxonomy tax;
  tax.add("snow", "winter-scenes", {"p1", "p2"});
  tax.add("snow", "cold-rivers", {"p3"});
  tax.add("frost", "winter-scenes", {"p1"});
  tax.add("moon", "night-sky", {"q1", "q2", "q3"});
  tax.add("ice", "frozen-lakes", {"p2"});
  tax.add("ice", "glaciers", {"p2", "p8"});  // p2 shared across ice's themes
  return tax;
}

imageinfo::ImageTags tags_of(std::initializer_list<std::pair<const char*, double>> list) {
  imageinfo::ImageTags t;
  for (auto& [name, conf] : list) t.tags.push_back({name, conf});
  return t;
}

}  // namespace

TEST_CASE("retrieval returns the indexed themes' phrases in order") {
  auto tax = tiny();
  auto hits = tax.retrieve("snow");
  REQUIRE(hits.size() == 3);
  CHECK(hits[0].phrase == "p1");
  CHECK(hits[0].theme == "winter-scenes");
  CHECK(hits[1].phrase == "p2");
  CHECK(hits[2].phrase == "p3");
  CHECK(hits[2].theme == "cold-rivers");
  CHECK(hits[2].keyword == "snow");

  CHECK(tax.retrieve("unknown-keyword").empty());
}

TEST_CASE("retrieval deduplicates phrases shared between themes") {
  auto tax = tiny();
  auto hits = tax.retrieve("ice");
  // Brute-force union of frozen-lakes {p2} and glaciers {p2, p8}.
  std::set<std::string> expected = {"p2", "p8"};
  std::set<std::string> got;
  for (const auto& h : hits) CHECK(got.insert(h.phrase).second);  // no duplicates
  CHECK(got == expected);
  // First occurrence wins, so p2 reports frozen-lakes.
  CHECK(hits[0].phrase == "p2");
  CHECK(hits[0].theme == "frozen-lakes");
}

TEST_CASE("keyword selection: single tag fills at most one line") {
  auto tax = tiny();
  auto set = select_line_keywords(tags_of({{"moon", 0.9}}), tax, 5);
  REQUIRE(set.entries.size() == 1);
  CHECK(set.entries[0].phrase == "q1");
  CHECK(set.entries[0].keyword == "moon");
}

TEST_CASE("keyword selection prefers fresh themes before repeating one") {
  auto tax = tiny();
  // Both tags index winter-scenes; snow also reaches cold-rivers.
  auto set = select_line_keywords(tags_of({{"snow", 0.9}, {"frost", 0.8}}), tax, 5);
  REQUIRE(set.entries.size() == 3);
  CHECK(set.entries[0].theme == "winter-scenes");
  CHECK(set.entries[0].phrase == "p1");
  // The second pick must leave winter-scenes alone even though frost's p1
  // copy scores 0.8 > 0.9/2.
  CHECK(set.entries[1].theme == "cold-rivers");
  CHECK(set.entries[1].phrase == "p3");
  // Once no fresh theme is left, frost may revisit winter-scenes.
  CHECK(set.entries[2].keyword == "frost");
  CHECK(set.entries[2].phrase == "p2");
}

TEST_CASE("a second tag reuses a theme only when nothing fresh remains") {
  PhraseTaxonomy tax;
  tax.add("snow", "winter-scenes", {"w1", "w2"});
  tax.add("frost", "winter-scenes", {"w1", "w2"});
  auto set = select_line_keywords(tags_of({{"snow", 0.9}, {"frost", 0.8}}), tax, 5);
  REQUIRE(set.entries.size() == 2);
  CHECK(set.entries[0].keyword == "snow");
  CHECK(set.entries[0].phrase == "w1");
  // frost repeats the exhausted theme with the repetition penalty applied.
  CHECK(set.entries[1].keyword == "frost");
  CHECK(set.entries[1].phrase == "w2");
}

TEST_CASE("keyword selection scoring matches the hand-run greedy on 3 tags") {
  auto tax = tiny();
  auto tags = tags_of({{"snow", 0.9}, {"moon", 0.85}, {"ice", 0.5}});
  auto set = select_line_keywords(tags, tax, 5);
  REQUIRE(set.entries.size() == 4);
  // confidence/(1 + theme uses), fresh themes first, input order on ties:
  //   p1 (winter-scenes 0.9), p3 (cold-rivers 0.9), q1 (night-sky 0.85),
  //   p2 (frozen-lakes 0.5; beats glaciers' p8 copy by input order).
  CHECK(set.entries[0].phrase == "p1");
  CHECK(set.entries[1].phrase == "p3");
  CHECK(set.entries[2].phrase == "q1");
  CHECK(set.entries[3].phrase == "p2");
  CHECK(set.entries[3].theme == "frozen-lakes");
}

TEST_CASE("phrases longer than the line are excluded") {
  PhraseTaxonomy tax;
  tax.add("story", "long-phrases", {"abcdef", "ok"});
  auto set = select_line_keywords(tags_of({{"story", 0.9}}), tax, 5);
  REQUIRE(set.entries.size() == 1);
  CHECK(set.entries[0].phrase == "ok");

  PhraseTaxonomy only_long;
  only_long.add("story", "long-phrases", {"abcdef"});
  CHECK(select_line_keywords(tags_of({{"story", 0.9}}), only_long, 5).entries.empty());
}

TEST_CASE("selection is deterministic under fixed input order") {
  auto tax = tiny();
  auto tags = tags_of({{"snow", 0.9}, {"moon", 0.9}, {"ice", 0.9}});
  auto a = select_line_keywords(tags, tax, 5);
  auto b = select_line_keywords(tags, tax, 5);
  REQUIRE(a.entries.size() == b.entries.size());
  for (size_t i = 0; i < a.entries.size(); ++i) CHECK(a.entries[i].phrase == b.entries[i].phrase);
  // Equal scores resolve by input order.
  CHECK(a.entries[0].theme == "winter-scenes");
  CHECK(a.entries[1].theme == "cold-rivers");
  CHECK(a.entries[2].theme == "night-sky");
  CHECK(a.entries[3].theme == "frozen-lakes");
}

TEST_CASE("the bundled taxonomy fixture loads and retrieves") {
  auto tax = PhraseTaxonomy::load(std::string(IPG_DATA_DIR) + "/taxonomy_sample.tsv");
  CHECK(tax.theme_count() >= 20);
  auto hits = tax.retrieve("snow");
  REQUIRE(!hits.empty());
  CHECK(hits[0].phrase == "雪");

  for (const auto& h : tax.retrieve("moon")) CHECK(utf8::length(h.phrase) <= 2);
}

TEST_CASE("taxonomy rejects malformed rows") {
  auto path = std::filesystem::temp_directory_path() / "ipg_bad_tax.tsv";
  {
    std::ofstream out(path);
    out << "keyword-without-tabs\n";
  }
  CHECK_THROWS_AS(PhraseTaxonomy::load(path.string()), InputError);
  std::filesystem::remove(path);
}
