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

// Knowledge-base ingestion: a line-oriented N-Triples reader and the ranked
// entity catalog the dataset generator draws from.

#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "nspm/error.hpp"

namespace nspm::kb {

inline constexpr std::string_view kRdfsLabel =
    "http://www.w3.org/2000/01/rdf-schema#label";
inline constexpr std::string_view kRdfType =
    "http://www.w3.org/1999/02/22-rdf-syntax-ns#type";

struct Term {
  enum class Kind { kIri, kBlank, kLiteral };

  Kind kind = Kind::kIri;
  // IRI text, blank-node label (without "_:"), or literal lexical form.
  std::string value;
  std::string language;  // literals only, may be empty
  std::string datatype;  // literals only, may be empty

  static Term iri(std::string v) { return {Kind::kIri, std::move(v), {}, {}}; }
  static Term blank(std::string v) {
    return {Kind::kBlank, std::move(v), {}, {}};
  }
  static Term literal(std::string v, std::string lang = {},
                      std::string type = {}) {
    return {Kind::kLiteral, std::move(v), std::move(lang), std::move(type)};
  }

  bool is_iri() const { return kind == Kind::kIri; }
  bool is_literal() const { return kind == Kind::kLiteral; }

  friend bool operator==(const Term&, const Term&) = default;
};

struct Triple {
  Term subject;
  std::string predicate;
  Term object;

  friend bool operator==(const Triple&, const Triple&) = default;
};

struct ParseOptions {
  // Skip and count malformed lines instead of aborting on the first one.
  bool lenient = false;
};

struct ParseResult {
  std::vector<Triple> triples;
  std::size_t skipped_lines = 0;
};

// Thrown with the 1-based line number as position.
class MalformedLine : public PositionedError {
 public:
  MalformedLine(std::size_t line_no, const std::string& why);
  std::size_t line() const noexcept { return position(); }
};

ParseResult parse_ntriples(std::istream& in, ParseOptions options = {});
ParseResult parse_ntriples_string(std::string_view text,
                                  ParseOptions options = {});

// Serializes one statement per line; parse_ntriples reads it back unchanged.
void write_ntriples(std::ostream& out, const std::vector<Triple>& triples);
std::string format_term(const Term& term);

struct EntityRecord {
  std::string uri;
  std::vector<std::string> labels;  // preferred label first
  std::set<std::string> classes;
  std::int64_t rank = 1;

  const std::string& preferred_label() const { return labels.front(); }
  friend bool operator==(const EntityRecord&, const EntityRecord&) = default;
};

// Immutable after construction; safe to share read-only across threads.
class EntityCatalog {
 public:
  // Ranks must already be a dense permutation of 1..N.
  explicit EntityCatalog(std::vector<EntityRecord> records);

  std::size_t size() const { return by_rank_.size(); }
  bool empty() const { return by_rank_.empty(); }

  // Records ordered by (rank, uri).
  const std::vector<EntityRecord>& entities() const { return by_rank_; }
  const EntityRecord* find(std::string_view uri) const;
  const EntityRecord& at(std::string_view uri) const;

  // Members of a class ordered by (rank, uri); empty when unknown.
  const std::vector<std::string>& members(std::string_view class_iri) const;
  const std::map<std::string, std::vector<std::string>, std::less<>>&
  class_index() const {
    return class_index_;
  }

 private:
  std::vector<EntityRecord> by_rank_;
  std::unordered_map<std::string, std::size_t> position_;
  std::map<std::string, std::vector<std::string>, std::less<>> class_index_;
};

struct CatalogOptions {
  std::string label_predicate{kRdfsLabel};
  std::string type_predicate{kRdfType};
  std::optional<std::string> target_class;
  // When set, only these subjects qualify (manual entity list).
  std::optional<std::set<std::string>> entity_list;
};

EntityCatalog build_catalog(const std::vector<Triple>& triples,
                            const CatalogOptions& options = {});

// Dense ranks 1..N by descending (in + out) degree, ties by ascending URI.
std::map<std::string, std::int64_t> rank_by_degree(
    const std::vector<Triple>& triples,
    const std::vector<std::string>& entity_uris);

struct RankingOptions {
  // Unknown URIs raise UnknownEntity instead of being ignored.
  bool strict = false;
};

// Listed entities come first in file-rank order, the rest keep their
// relative order; the result is re-densified to 1..N.
EntityCatalog load_ranking(std::istream& tsv, const EntityCatalog& catalog,
                           RankingOptions options = {});

// `uri<TAB>rank<TAB>preferred_label<TAB>classes(;-separated)`
void write_catalog_tsv(std::ostream& out, const EntityCatalog& catalog);
// Reads the export format back. Only the preferred label survives export.
EntityCatalog read_catalog_tsv(std::istream& in);

// One URI per line, '#' comments allowed.
std::set<std::string> read_entity_list(std::istream& in);

}  // namespace nspm::kb
