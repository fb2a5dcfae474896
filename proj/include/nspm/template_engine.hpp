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

// Dataset generator: question/query templates are instantiated with ranked
// catalog entities, encoded under a codec preset and split into partitions
// whose natural-language questions never overlap.

#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "nspm/kb_catalog.hpp"
#include "nspm/sparql_codec.hpp"

namespace nspm::gen {

inline constexpr std::string_view kDirectTemplateId = "direct";

struct QueryTemplate {
  std::string id;
  std::string nl_pattern;
  std::string sparql_pattern;
  // Placeholder letter ("A", "B") -> class IRI.
  std::map<std::string, std::string> placeholder_classes;

  std::size_t placeholder_count() const { return placeholder_classes.size(); }
};

struct EncodedPair {
  codec::TokenSeq nl;
  codec::TokenSeq query;
  std::string template_id;
  std::vector<std::string> entity_uris;

  bool is_direct() const { return template_id == kDirectTemplateId; }
  friend bool operator==(const EncodedPair&, const EncodedPair&) = default;
};

struct GeneratorConfig {
  codec::PresetId preset = codec::PresetId::kV3;
  bool allow_multi_placeholder = true;
  bool direct_translations = false;
  // Copies of a rank-1 entity per template slot.
  std::int64_t top_entity_count = 10;
  std::optional<std::size_t> max_pairs;
  std::uint64_t seed = 0;
};

// Throws gen.BadConfig when the flags break the preset ladder.
void validate(const GeneratorConfig& config);

// Columns: id, classes (';'-separated, one per placeholder in letter order),
// NL pattern, SPARQL pattern. '#' lines are comments.
std::vector<QueryTemplate> parse_templates(std::istream& tsv);

// max(1, round(K / rank)), rounding halves up.
std::int64_t entity_frequency(std::int64_t rank, std::int64_t top_count);

std::vector<EncodedPair> instantiate(const std::vector<QueryTemplate>& templates,
                                     const kb::EntityCatalog& catalog,
                                     const GeneratorConfig& config);

struct DirectTranslations {
  std::vector<EncodedPair> pairs;
  std::size_t skipped = 0;
};

// One (label, entity-token) pair per entity; needs a merged-token preset.
DirectTranslations direct_translations(const kb::EntityCatalog& catalog,
                                       const codec::CodecPreset& preset);

struct Ratios {
  int train = 80;
  int dev = 10;
  int test = 10;
};

// Parses "80:10:10".
Ratios parse_ratios(std::string_view text);

// Line indices into the pair list, each ascending.
struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> dev;
  std::vector<std::size_t> test;
  friend bool operator==(const Split&, const Split&) = default;
};

// Groups pairs by NL string and assigns whole groups to partitions. Sizes are
// counted in distinct questions: floor(N * ratio / 100) for dev and test, the
// remainder to train. Train keeps every copy of its groups; dev and test keep
// one representative per question. Groups made only of direct translations
// always go to train.
Split split_dataset(const std::vector<EncodedPair>& pairs, Ratios ratios,
                    std::uint64_t seed);

struct Dataset {
  codec::PresetId preset = codec::PresetId::kV3;
  std::vector<EncodedPair> pairs;
  std::optional<Split> split;

  std::vector<EncodedPair> partition(std::string_view name) const;
};

// data.nl, data.ql, meta.jsonl, dataset.json and split.{train,dev,test}.idx.
void write_dataset(const std::string& dir, const Dataset& dataset);
Dataset read_dataset(const std::string& dir);

// "dbo:Film" or a full IRI -> full IRI.
std::string expand_class(std::string_view text);

}  // namespace nspm::gen
