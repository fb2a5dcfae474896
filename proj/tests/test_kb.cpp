// Copyright 2026 The nspm Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <doctest.h>

#include <algorithm>
#include <map>
#include <sstream>

#include "nspm/kb_catalog.hpp"
#include "nspm/util.hpp"

using namespace nspm;
using namespace nspm::kb;

namespace {

const std::string kDbr = "http://dbpedia.org/resource/";
const std::string kDbo = "http://dbpedia.org/ontology/";

std::string iri(const std::string& s) { return "<" + s + ">"; }

std::string stmt(const std::string& s, std::string_view p, const std::string& o) {
  return iri(s) + " " + iri(std::string(p)) + " " + o + " .\n";
}

}  // namespace

TEST_CASE("label statement parses into a literal triple") {
  auto r = parse_ntriples_string(
      "<http://dbpedia.org/resource/Inception> "
      "<http://www.w3.org/2000/01/rdf-schema#label> \"Inception\"@en .");
  REQUIRE(r.triples.size() == 1);
  const auto& t = r.triples[0];
  CHECK(t.subject == Term::iri(kDbr + "Inception"));
  CHECK(t.predicate == kRdfsLabel);
  CHECK(t.object == Term::literal("Inception", "en"));
}

TEST_CASE("empty input, comments and blank lines") {
  CHECK(parse_ntriples_string("").triples.empty());
  CHECK(parse_ntriples_string("# only a comment\n\n   \n").triples.empty());
}

TEST_CASE("missing object is malformed on its line") {
  try {
    parse_ntriples_string("<a> <b> .");
    FAIL("accepted");
  } catch (const MalformedLine& e) {
    CHECK(e.line() == 1);
    CHECK(e.code() == "kb.MalformedLine");
  }
  auto text = "# header\n" + stmt("http://x/a", kRdfsLabel, "\"A\"") + "garbage line\n";
  try {
    parse_ntriples_string(text);
    FAIL("accepted");
  } catch (const MalformedLine& e) {
    CHECK(e.line() == 3);
  }
  auto lenient = parse_ntriples_string(text + stmt("http://x/b", kRdfsLabel, "\"B\""), {true});
  CHECK(lenient.triples.size() == 2);
  CHECK(lenient.skipped_lines == 1);
}

TEST_CASE("literal escapes, datatypes and blank nodes") {
  auto r = parse_ntriples_string(
      "_:b1 <http://x/p> \"say \\\"hi\\\"\\n\\ttab \\\\ \\u00e9\" .\n"
      "<http://x/s> <http://x/p> \"42\"^^<http://www.w3.org/2001/XMLSchema#integer> .\n");
  REQUIRE(r.triples.size() == 2);
  CHECK(r.triples[0].subject == Term::blank("b1"));
  CHECK(r.triples[0].object.value == "say \"hi\"\n\ttab \\ \xc3\xa9");
  CHECK(r.triples[1].object.datatype == "http://www.w3.org/2001/XMLSchema#integer");
  CHECK_THROWS_AS(parse_ntriples_string("<http://x/s> \"lit\" <http://x/o> ."), MalformedLine);
  CHECK_THROWS_AS(parse_ntriples_string("<relative> <http://x/p> <http://x/o> ."), MalformedLine);
}

TEST_CASE("write and parse round-trip") {
  std::vector<Triple> ts{
      {Term::iri(kDbr + "A"), std::string(kRdfsLabel), Term::literal("quote \" and \\ and\nline", "en")},
      {Term::blank("n0"), "http://x/p", Term::literal("7", "", "http://www.w3.org/2001/XMLSchema#integer")},
      {Term::iri(kDbr + "A"), std::string(kRdfType), Term::iri(kDbo + "Film")},
  };
  std::ostringstream out;
  write_ntriples(out, ts);
  CHECK(parse_ntriples_string(out.str()).triples == ts);
}

TEST_CASE("catalog restricted to a class") {
  std::string nt = stmt(kDbr + "Inception", kRdfsLabel, "\"Inception\"@en") +
                   stmt(kDbr + "Inception", kRdfType, iri(kDbo + "Film"));
  auto triples = parse_ntriples_string(nt).triples;
  CatalogOptions film;
  film.target_class = kDbo + "Film";
  auto cat = build_catalog(triples, film);
  CHECK(cat.size() == 1);
  CHECK(cat.at(kDbr + "Inception").preferred_label() == "Inception");
  CHECK(cat.members(kDbo + "Film") == std::vector<std::string>{kDbr + "Inception"});
  CatalogOptions city;
  city.target_class = kDbo + "City";
  try {
    build_catalog(triples, city);
    FAIL("accepted");
  } catch (const Error& e) {
    CHECK(e.code() == "kb.EmptyCatalog");
  }
}

TEST_CASE("label preference: English, then untagged, then lexicographic") {
  std::string nt = stmt("http://x/e", kRdfsLabel, "\"Zeta\"@de") +
                   stmt("http://x/e", kRdfsLabel, "\"  beta \"") +
                   stmt("http://x/e", kRdfsLabel, "\"Alpha\"@EN") +
                   stmt("http://x/e", kRdfsLabel, "\"Gamma\"@en");
  auto cat = build_catalog(parse_ntriples_string(nt).triples);
  CHECK(cat.at("http://x/e").labels == std::vector<std::string>{"Alpha", "Gamma", "beta", "Zeta"});
}

TEST_CASE("degree ranking breaks ties by URI") {
  // Degrees: c = 5, a = 2, b = 2.
  std::string nt;
  for (auto s : {"a", "b", "c"}) nt += stmt(std::string("http://x/") + s, kRdfsLabel, "\"l\"");
  nt += stmt("http://x/c", "http://x/p", iri("http://x/a"));
  nt += stmt("http://x/c", "http://x/p", iri("http://x/b"));
  nt += stmt("http://x/c", "http://x/q", iri("http://x/z"));
  nt += stmt("http://x/y", "http://x/q", iri("http://x/c"));
  auto triples = parse_ntriples_string(nt).triples;
  auto cat = build_catalog(triples);
  CHECK(cat.at("http://x/c").rank == 1);
  CHECK(cat.at("http://x/a").rank == 2);
  CHECK(cat.at("http://x/b").rank == 3);
}

TEST_CASE("degree ranking agrees with a brute-force sort") {
  Rng rng(17);
  for (int round = 0; round < 20; ++round) {
    std::vector<Triple> ts;
    std::vector<std::string> uris;
    for (int i = 0; i < 12; ++i) uris.push_back("http://x/e" + std::to_string(i));
    for (int k = 0; k < 40; ++k) {
      ts.push_back({Term::iri(uris[rng.index(uris.size())]), "http://x/p",
                    Term::iri(uris[rng.index(uris.size())])});
    }
    auto ranks = rank_by_degree(ts, uris);
    std::map<std::string, int> degree;
    for (const auto& u : uris) {
      for (const auto& t : ts) {
        degree[u] += (t.subject.value == u) + (t.object.is_iri() && t.object.value == u);
      }
    }
    std::vector<std::string> order = uris;
    std::sort(order.begin(), order.end(), [&](const auto& a, const auto& b) {
      return degree[a] != degree[b] ? degree[a] > degree[b] : a < b;
    });
    for (std::size_t i = 0; i < order.size(); ++i) {
      CHECK(ranks.at(order[i]) == static_cast<std::int64_t>(i + 1));
    }
  }
  CHECK_THROWS_AS(rank_by_degree({}, {}), Error);
}

TEST_CASE("ranking file overrides degree order") {
  std::string nt;
  for (auto s : {"a", "b", "c", "d"}) nt += stmt(std::string("http://x/") + s, kRdfsLabel, "\"l\"");
  auto cat = build_catalog(parse_ntriples_string(nt).triples);
  std::istringstream rank_file("http://x/d\t1\nhttp://x/c\t2\nhttp://x/unknown\t3\n");
  auto ranked = load_ranking(rank_file, cat);
  CHECK(ranked.entities()[0].uri == "http://x/d");
  CHECK(ranked.entities()[1].uri == "http://x/c");
  CHECK(ranked.entities()[2].uri == "http://x/a");
  CHECK(ranked.entities()[3].rank == 4);
  std::istringstream strict_file("http://x/unknown\t1\n");
  CHECK_THROWS_AS(load_ranking(strict_file, cat, {true}), Error);
}

TEST_CASE("catalog TSV round-trip and entity lists") {
  std::string nt = stmt(kDbr + "A", kRdfsLabel, "\"Alpha\"") + stmt(kDbr + "A", kRdfType, iri(kDbo + "Film")) +
                   stmt(kDbr + "B", kRdfsLabel, "\"Beta\"") + stmt(kDbr + "A", "http://x/p", iri(kDbr + "B"));
  auto triples = parse_ntriples_string(nt).triples;
  auto cat = build_catalog(triples);
  std::stringstream tsv;
  write_catalog_tsv(tsv, cat);
  auto back = read_catalog_tsv(tsv);
  REQUIRE(back.size() == cat.size());
  for (std::size_t i = 0; i < cat.size(); ++i) CHECK(back.entities()[i] == cat.entities()[i]);

  std::istringstream list("# keep one\n" + kDbr + "B\n");
  CatalogOptions opts;
  opts.entity_list = read_entity_list(list);
  auto only_b = build_catalog(triples, opts);
  CHECK(only_b.size() == 1);
  CHECK(only_b.find(kDbr + "A") == nullptr);
  CHECK_THROWS_AS(cat.at("http://nope"), Error);
}
