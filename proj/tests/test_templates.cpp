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

#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "nspm/template_engine.hpp"
#include "nspm/util.hpp"

using namespace nspm;
using namespace nspm::gen;

namespace {

const std::string kDbr = "http://dbpedia.org/resource/";
const std::string kFilm = "http://dbpedia.org/ontology/Film";
const std::string kPerson = "http://dbpedia.org/ontology/Person";

const char* kT1 = "t1\tdbo:Film\twho directed <A>\tSELECT ?x WHERE { <A> dbo:director ?x }\n";

std::vector<QueryTemplate> templates(const std::string& tsv) {
  std::istringstream in(tsv);
  return parse_templates(in);
}

kb::EntityCatalog catalog(const std::vector<std::tuple<std::string, std::string, std::string>>& rows) {
  std::vector<kb::Triple> ts;
  for (const auto& [local, label, cls] : rows) {
    ts.push_back({kb::Term::iri(kDbr + local), std::string(kb::kRdfsLabel), kb::Term::literal(label, "en")});
    ts.push_back({kb::Term::iri(kDbr + local), std::string(kb::kRdfType), kb::Term::iri(cls)});
  }
  return kb::build_catalog(ts);
}

std::string code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return "";
}

std::vector<EncodedPair> unique_pairs(std::size_t n) {
  std::vector<EncodedPair> out;
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back({codec::TokenSeq({"q" + std::to_string(i)}), codec::TokenSeq({"dbr_X"}), "t", {}});
  }
  return out;
}

}  // namespace

TEST_CASE("template file parsing") {
  auto ts = templates(kT1);
  REQUIRE(ts.size() == 1);
  CHECK(ts[0].placeholder_count() == 1);
  CHECK(ts[0].placeholder_classes.at("A") == kFilm);

  auto two = templates("p\tdbo:Film;dbo:Person\tdid <B> star in <A>\tASK WHERE { <A> dbo:starring <B> }\n");
  CHECK(two[0].placeholder_classes == std::map<std::string, std::string>{{"A", kFilm}, {"B", kPerson}});

  CHECK(code_of([] { templates("t1\tdbo:Film\twho directed <A>\tSELECT ?x WHERE { dbr:X dbo:director ?x }\n"); }) ==
        "gen.PlaceholderMismatch");
  CHECK(code_of([] { templates("t1\tdbo:Film\twho directed <A>\tSELECT ?x WHERE { <A> dbo:director }\n"); }) ==
        "gen.BadPattern");
  CHECK(code_of([] { templates("t1\tdbo:Film\twho directed <A>\n"); }) == "gen.BadTemplate");
}

TEST_CASE("inverse-rank frequency") {
  CHECK(entity_frequency(1, 6) == 6);
  CHECK(entity_frequency(2, 6) == 3);
  CHECK(entity_frequency(3, 6) == 2);
  CHECK(entity_frequency(1, 1) == 1);
  CHECK(entity_frequency(100, 6) == 1);
  CHECK(entity_frequency(4, 10) == 3);  // 2.5 rounds up
  for (std::int64_t k = 1; k <= 30; ++k) {
    for (std::int64_t r = 1; r <= 60; ++r) {
      double exact = static_cast<double>(k) / static_cast<double>(r);
      auto expected = std::max<std::int64_t>(1, static_cast<std::int64_t>(std::floor(exact + 0.5)));
      CHECK(entity_frequency(r, k) == expected);
      CHECK(entity_frequency(r + 1, k) <= entity_frequency(r, k));
    }
  }
}

TEST_CASE("one template, one entity, v3") {
  auto cat = catalog({{"Inception", "Inception", kFilm}});
  GeneratorConfig cfg;
  cfg.top_entity_count = 1;
  auto pairs = instantiate(templates(kT1), cat, cfg);
  REQUIRE(pairs.size() == 1);
  CHECK(pairs[0].nl.str() == "who directed inception");
  CHECK(pairs[0].query.str() == "select var_x where brack_open dbr_Inception dbo_director var_x brack_close");
  CHECK(pairs[0].entity_uris == std::vector<std::string>{kDbr + "Inception"});
}

TEST_CASE("counts follow rank for K = 6") {
  auto cat = catalog({{"A", "Alpha", kFilm}, {"B", "Beta", kFilm}, {"C", "Gamma", kFilm}});
  GeneratorConfig cfg;
  cfg.top_entity_count = 6;
  auto pairs = instantiate(templates(kT1), cat, cfg);
  CHECK(pairs.size() == 11);
  std::map<std::string, int> per_entity;
  for (const auto& p : pairs) ++per_entity[p.entity_uris.at(0)];
  std::map<std::string, int> expected;
  for (const auto& e : cat.entities()) expected[e.uri] = e.rank == 1 ? 6 : e.rank == 2 ? 3 : 2;
  CHECK(per_entity == expected);
}

TEST_CASE("multi-placeholder templates are skipped below v2") {
  auto cat = catalog({{"A", "Alpha", kFilm}, {"P", "Pat", kPerson}, {"Q", "Quinn", kPerson}});
  auto ts = templates(std::string(kT1) +
                      "p\tdbo:Film;dbo:Person\tdid <B> star in <A>\tASK WHERE { <A> dbo:starring <B> }\n");
  GeneratorConfig cfg;
  cfg.top_entity_count = 3;
  cfg.allow_multi_placeholder = false;
  cfg.preset = codec::PresetId::kV1;
  auto single = instantiate(ts, cat, cfg);
  CHECK(single.size() == 3);
  for (const auto& p : single) CHECK(p.template_id == "t1");
  cfg.allow_multi_placeholder = true;
  cfg.preset = codec::PresetId::kV3;
  auto multi = instantiate(ts, cat, cfg);
  std::multiset<std::string> seconds;
  for (const auto& p : multi) {
    if (p.template_id == "p") seconds.insert(p.entity_uris.at(1));
  }
  // Slot B cycles through the person class.
  CHECK(seconds.size() == 3);
  CHECK(seconds.count(kDbr + "P") >= 1);
  CHECK(seconds.count(kDbr + "Q") >= 1);
}

TEST_CASE("generator config follows the preset ladder") {
  GeneratorConfig cfg;
  cfg.preset = codec::PresetId::kV4;
  CHECK(code_of([&] { validate(cfg); }) == "gen.BadConfig");
  cfg.direct_translations = true;
  CHECK_NOTHROW(validate(cfg));
  cfg.preset = codec::PresetId::kV1;
  CHECK(code_of([&] { validate(cfg); }) == "gen.BadConfig");
  cfg = {};
  cfg.top_entity_count = 0;
  CHECK(code_of([&] { validate(cfg); }) == "gen.BadConfig");
  auto cat = catalog({{"A", "Alpha", kPerson}});
  CHECK(code_of([&] { instantiate(templates(kT1), cat, GeneratorConfig{}); }) == "gen.NoEligibleEntities");
}

TEST_CASE("direct entity translations") {
  auto cat = catalog({{"Inception", "Inception", kFilm}, {"Berlin", "Berlin", kFilm}, {"Q", "???", kFilm}});
  auto d = direct_translations(cat, codec::preset(codec::PresetId::kV4));
  CHECK(d.skipped == 1);
  REQUIRE(d.pairs.size() == 2);
  std::set<std::string> got;
  for (const auto& p : d.pairs) {
    CHECK(p.is_direct());
    got.insert(p.nl.str() + " -> " + p.query.str());
  }
  CHECK(got == std::set<std::string>{"inception -> dbr_Inception", "berlin -> dbr_Berlin"});
  CHECK_THROWS_AS(direct_translations(cat, codec::preset(codec::PresetId::kV1_1)), Error);
}

TEST_CASE("split sizes and the floor rule") {
  auto s10 = split_dataset(unique_pairs(10), {80, 10, 10}, 1);
  CHECK(s10.train.size() == 8);
  CHECK(s10.dev.size() == 1);
  CHECK(s10.test.size() == 1);
  auto s4 = split_dataset(unique_pairs(4), {50, 50, 0}, 1);
  CHECK(s4.train.size() == 2);
  CHECK(s4.dev.size() == 2);
  CHECK(s4.test.empty());
  CHECK(code_of([] { split_dataset(unique_pairs(5), {80, 10, 10}, 1); }) == "gen.TooSmall");
  CHECK(code_of([] { parse_ratios("80:10"); }) == "gen.BadRatios");
  CHECK(code_of([] { split_dataset(unique_pairs(5), {80, 10, 11}, 1); }) == "gen.BadRatios");
  CHECK(split_dataset(unique_pairs(50), parse_ratios("80:10:10"), 3) ==
        split_dataset(unique_pairs(50), parse_ratios("80:10:10"), 3));
}

TEST_CASE("duplicate questions land in one partition") {
  Rng rng(5);
  for (int round = 0; round < 20; ++round) {
    auto pairs = unique_pairs(100);
    pairs[98].nl = pairs[7].nl;
    for (int k = 0; k < 10; ++k) pairs[rng.index(100)].nl = pairs[rng.index(100)].nl;
    auto s = split_dataset(pairs, {80, 10, 10}, static_cast<std::uint64_t>(round));
    std::map<std::string, std::set<int>> where;
    std::set<std::string> all;
    for (const auto& p : pairs) all.insert(p.nl.str());
    int part = 0;
    std::set<std::string> seen;
    for (const auto* idx : {&s.train, &s.dev, &s.test}) {
      for (auto i : *idx) {
        where[pairs[i].nl.str()].insert(part);
        seen.insert(pairs[i].nl.str());
      }
      ++part;
    }
    for (const auto& [nl, parts] : where) CHECK(parts.size() == 1);
    CHECK(seen == all);
    std::size_t distinct = all.size();
    CHECK(s.test.size() == distinct / 10);
    CHECK(s.dev.size() == distinct / 10);
  }
}

TEST_CASE("direct pairs stay in train") {
  auto pairs = unique_pairs(20);
  for (int i = 0; i < 5; ++i) {
    pairs.push_back({codec::TokenSeq({"e" + std::to_string(i)}), codec::TokenSeq({"dbr_E"}),
                     std::string(kDirectTemplateId), {}});
  }
  auto s = split_dataset(pairs, {80, 10, 10}, 9);
  CHECK(s.test.size() == 2);
  CHECK(s.dev.size() == 2);
  CHECK(s.train.size() == 21);
  for (auto i : s.test) CHECK_FALSE(pairs[i].is_direct());
}

TEST_CASE("dataset directory round-trip") {
  std::vector<std::tuple<std::string, std::string, std::string>> rows;
  for (int i = 0; i < 12; ++i) rows.emplace_back("F" + std::to_string(i), "Film " + std::to_string(i), kFilm);
  auto cat = catalog(rows);
  GeneratorConfig cfg;
  cfg.top_entity_count = 6;
  Dataset ds;
  ds.pairs = instantiate(templates(kT1), cat, cfg);
  auto dir = std::filesystem::temp_directory_path() / "nspm_test_dataset";
  std::filesystem::remove_all(dir);
  write_dataset(dir.string(), ds);
  auto back = read_dataset(dir.string());
  CHECK(back.pairs == ds.pairs);
  CHECK_FALSE(back.split.has_value());
  ds.split = split_dataset(ds.pairs, {80, 10, 10}, 1);
  write_dataset(dir.string(), ds);
  back = read_dataset(dir.string());
  CHECK(back.split == ds.split);
  CHECK(back.partition("test").size() == ds.split->test.size());
  std::ifstream nl(dir / "data.nl");
  std::string first;
  std::getline(nl, first);
  CHECK(first == ds.pairs[0].nl.str());
  std::filesystem::remove_all(dir);
}

TEST_CASE("bundled movie data meets the generator invariants") {
  std::ifstream nt(std::string(NSPM_DATA_DIR) + "/movies.nt");
  std::ifstream tsv(std::string(NSPM_DATA_DIR) + "/movies_templates.tsv");
  REQUIRE(nt.good());
  auto ts = parse_templates(tsv);
  std::size_t one = 0, two = 0;
  for (const auto& t : ts) (t.placeholder_count() == 1 ? one : two)++;
  CHECK(one == 20);
  CHECK(two == 4);
  auto cat = kb::build_catalog(kb::parse_ntriples(nt).triples);
  CHECK(cat.size() >= 500);
  GeneratorConfig cfg;
  cfg.preset = codec::PresetId::kV1_1;
  auto pairs = instantiate(ts, cat, cfg);
  std::map<std::pair<std::string, std::string>, std::int64_t> counts;
  for (const auto& p : pairs) {
    CHECK_NOTHROW(codec::decode_sequence(p.query, codec::preset(cfg.preset)));
    CHECK(p.query.str().find("<A>") == std::string::npos);
    CHECK(p.query.str().find("<B>") == std::string::npos);
    ++counts[{p.template_id, p.entity_uris.at(0)}];
  }
  // Monotone in rank within every template.
  for (const auto& t : ts) {
    std::vector<std::pair<std::int64_t, std::int64_t>> rank_count;
    for (const auto& [key, n] : counts) {
      if (key.first == t.id) rank_count.emplace_back(cat.at(key.second).rank, n);
    }
    std::sort(rank_count.begin(), rank_count.end());
    for (std::size_t i = 1; i < rank_count.size(); ++i) {
      CHECK(rank_count[i].second <= rank_count[i - 1].second);
    }
  }
}
