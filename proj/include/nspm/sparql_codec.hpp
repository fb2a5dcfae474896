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

// SPARQL subset: a text parser and canonical printer, plus the reversible
// token encodings (presets v1 through v4) the sequence model is trained on.
//
// Supported grammar:
//
//   query   := SELECT [DISTINCT] (COUNT(?v) | ?v+) [WHERE] { body }
//              [ORDER BY (ASC|DESC)(?v)] [LIMIT n]
//            | ASK [WHERE] { body }
//   body    := triple (. triple)* FILTER(?v op literal)*
//   term    := prefixed-name | ?variable | literal
//
// Prefixes are restricted to dbr, dbo, dbp, rdf, rdfs and foaf.

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "nspm/error.hpp"

namespace nspm::codec {

struct PrefixedName {
  std::string prefix;
  std::string local;  // escaped form, as written in a query
  friend bool operator==(const PrefixedName&, const PrefixedName&) = default;
};

struct Variable {
  std::string name;  // without '?'
  friend bool operator==(const Variable&, const Variable&) = default;
};

struct Literal {
  enum class Kind { kNumber, kString };
  Kind kind = Kind::kNumber;
  // Numbers keep their lexical form; strings hold the text between quotes.
  std::string lexical;
  std::string language;
  friend bool operator==(const Literal&, const Literal&) = default;
};

using PatternTerm = std::variant<PrefixedName, Variable, Literal>;

struct TriplePattern {
  PatternTerm subject;
  PatternTerm predicate;
  PatternTerm object;
  friend bool operator==(const TriplePattern&, const TriplePattern&) = default;
};

enum class Comparator { kLt, kGt, kEq, kLeq, kGeq, kNeq };

struct Filter {
  Variable variable;
  Comparator op = Comparator::kEq;
  Literal value;
  friend bool operator==(const Filter&, const Filter&) = default;
};

enum class QueryForm { kSelect, kAsk };
enum class SortDirection { kAsc, kDesc };

struct OrderBy {
  SortDirection direction = SortDirection::kAsc;
  Variable variable;
  friend bool operator==(const OrderBy&, const OrderBy&) = default;
};

struct QueryAst {
  QueryForm form = QueryForm::kSelect;
  bool distinct = false;
  std::optional<Variable> count_var;
  std::vector<Variable> projection;
  std::vector<TriplePattern> patterns;
  std::vector<Filter> filters;
  std::optional<OrderBy> order;
  std::optional<std::int64_t> limit;
  friend bool operator==(const QueryAst&, const QueryAst&) = default;
};

enum class PresetId { kV1, kV1_1, kV2_1, kV3, kV4 };

struct CodecPreset {
  PresetId id;
  std::string_view name;
  // Prefix and local name as two tokens ("dbr Inception").
  bool split_uris;
  // Merged structural tokens: var_x, brack_open, sep_dot, dbr_Xxx, ...
  bool merged_tokens;
  // Serialized sequences collapse runs of whitespace before splitting.
  bool whitespace_fix;
  // Keywords must be lowercase when decoding; otherwise matched
  // case-insensitively.
  bool lowercase_keywords;
};

const CodecPreset& preset(PresetId id);
// Accepts "v1", "v1.1", "v2.1", "v3", "v4". Throws codec.UnknownPreset.
const CodecPreset& preset(std::string_view id);
std::optional<PresetId> parse_preset_id(std::string_view id);
const std::vector<PresetId>& all_presets();

// A non-empty list of whitespace-free, non-empty tokens.
class TokenSeq {
 public:
  TokenSeq() = default;
  // Throws codec.BadToken if a token is empty or contains whitespace.
  explicit TokenSeq(std::vector<std::string> tokens);

  const std::vector<std::string>& tokens() const { return tokens_; }
  std::size_t size() const { return tokens_.size(); }
  bool empty() const { return tokens_.empty(); }
  const std::string& operator[](std::size_t i) const { return tokens_[i]; }
  auto begin() const { return tokens_.begin(); }
  auto end() const { return tokens_.end(); }

  // Single-space joined.
  std::string str() const;

  friend bool operator==(const TokenSeq&, const TokenSeq&) = default;

 private:
  std::vector<std::string> tokens_;
};

// Splits a serialized sequence line. Without the preset's whitespace fix a
// doubled separator yields an empty token, which is rejected.
TokenSeq parse_sequence_line(std::string_view line, const CodecPreset& preset);

class SyntaxError : public PositionedError {
 public:
  SyntaxError(std::size_t position, std::string expected,
              const std::string& found);
  const std::string& expected() const { return expected_; }

 private:
  std::string expected_;
};

class DecodeError : public PositionedError {
 public:
  DecodeError(std::size_t position, std::string token,
              const std::string& why);
  const std::string& token() const { return token_; }

 private:
  std::string token_;
};

QueryAst parse_sparql(std::string_view text);
std::string print_sparql(const QueryAst& ast);

// Empty optional when the AST satisfies the subset invariants, otherwise the
// reason it does not.
std::optional<std::string> validation_error(const QueryAst& ast);

TokenSeq encode_query(const QueryAst& ast, const CodecPreset& preset);
QueryAst decode_sequence(const TokenSeq& tokens, const CodecPreset& preset);

// Lowercases ASCII, strips ?!.,'" and splits on whitespace.
// Throws codec.EmptyQuestion when nothing survives.
TokenSeq tokenize_nl(std::string_view text);

// Term-level helpers shared with the generator and the interpreter.
bool is_known_prefix(std::string_view prefix);
std::string_view prefix_namespace(std::string_view prefix);
bool is_valid_local_name(std::string_view local);
bool is_valid_variable_name(std::string_view name);
// dbr:Foo -> "http://dbpedia.org/resource/Foo" (escapes removed).
std::string expand_prefixed_name(const PrefixedName& name);
// Inverse of expand_prefixed_name for IRIs under a known namespace; characters
// outside the local-name alphabet are escaped or percent-encoded.
std::optional<PrefixedName> compact_iri(std::string_view iri);
std::string format_term(const PatternTerm& term);
// Tokens of a single term under a preset ("dbr_Inception" or "dbr Inception").
std::vector<std::string> encode_term(const PatternTerm& term,
                                     const CodecPreset& preset);
// A literal token as emitted by the encoders (number or quoted string).
bool is_literal_token(std::string_view token);
// `math_gt` style under merged presets, `>` style otherwise.
bool is_comparator_token(std::string_view token, bool merged);

}  // namespace nspm::codec
