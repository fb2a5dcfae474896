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

#include "nspm/sparql_codec.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <set>

namespace nspm::codec {

namespace {

struct PrefixEntry {
  std::string_view prefix;
  std::string_view ns;
};

constexpr std::array<PrefixEntry, 6> kPrefixes{{
    {"dbr", "http://dbpedia.org/resource/"},
    {"dbo", "http://dbpedia.org/ontology/"},
    {"dbp", "http://dbpedia.org/property/"},
    {"rdf", "http://www.w3.org/1999/02/22-rdf-syntax-ns#"},
    {"rdfs", "http://www.w3.org/2000/01/rdf-schema#"},
    {"foaf", "http://xmlns.com/foaf/0.1/"},
}};

constexpr std::array<CodecPreset, 5> kPresets{{
    {PresetId::kV1, "v1", true, false, false, false},
    {PresetId::kV1_1, "v1.1", true, false, false, true},
    {PresetId::kV2_1, "v2.1", true, false, true, true},
    {PresetId::kV3, "v3", false, true, true, true},
    {PresetId::kV4, "v4", false, true, true, true},
}};

constexpr std::string_view kLocalEscapable = "_~.-!$&'()*+,;=/?#@%";

bool is_plain_local_char(unsigned char c) {
  return std::isalnum(c) || c == '_' || c == '-' || c == '%' || c >= 0x80;
}

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' ||
         c == '\v';
}

bool is_number_lexical(std::string_view s) {
  std::size_t i = 0;
  if (i < s.size() && (s[i] == '+' || s[i] == '-')) ++i;
  std::size_t digits = 0;
  while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) {
    ++i;
    ++digits;
  }
  if (digits == 0) return false;
  if (i == s.size()) return true;
  if (s[i] != '.') return false;
  ++i;
  std::size_t frac = 0;
  while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) {
    ++i;
    ++frac;
  }
  return frac > 0 && i == s.size();
}

bool is_valid_language(std::string_view lang) {
  if (lang.empty()) return false;
  bool seg_start = true;
  std::size_t seg_len = 0;
  for (std::size_t i = 0; i < lang.size(); ++i) {
    char c = lang[i];
    if (c == '-') {
      if (seg_len == 0 || i == 0) return false;
      seg_start = false;
      seg_len = 0;
      continue;
    }
    bool ok = seg_start ? std::isalpha(static_cast<unsigned char>(c))
                        : std::isalnum(static_cast<unsigned char>(c));
    if (!ok) return false;
    ++seg_len;
  }
  return seg_len > 0;
}

bool is_valid_string_content(std::string_view s) {
  return std::none_of(s.begin(), s.end(), [](char c) {
    return is_space(c) || c == '"' || c == '\\';
  });
}

bool is_valid_literal(const Literal& lit) {
  if (lit.kind == Literal::Kind::kNumber) {
    return lit.language.empty() && is_number_lexical(lit.lexical);
  }
  return is_valid_string_content(lit.lexical) &&
         (lit.language.empty() || is_valid_language(lit.language));
}

std::string format_literal(const Literal& lit) {
  if (lit.kind == Literal::Kind::kNumber) return lit.lexical;
  std::string out = "\"" + lit.lexical + "\"";
  if (!lit.language.empty()) out += "@" + lit.language;
  return out;
}

// Parses `"content"` or `"content"@lang` as produced by format_literal.
std::optional<Literal> parse_string_token(std::string_view tok) {
  if (tok.size() < 2 || tok.front() != '"') return std::nullopt;
  auto close = tok.find('"', 1);
  if (close == std::string_view::npos) return std::nullopt;
  Literal lit{Literal::Kind::kString, std::string(tok.substr(1, close - 1)),
              {}};
  auto rest = tok.substr(close + 1);
  if (!rest.empty()) {
    if (rest.front() != '@') return std::nullopt;
    lit.language = std::string(rest.substr(1));
  }
  if (!is_valid_literal(lit)) return std::nullopt;
  return lit;
}

std::string_view comparator_text(Comparator op) {
  switch (op) {
    case Comparator::kLt: return "<";
    case Comparator::kGt: return ">";
    case Comparator::kEq: return "=";
    case Comparator::kLeq: return "<=";
    case Comparator::kGeq: return ">=";
    case Comparator::kNeq: return "!=";
  }
  return "=";
}

std::string_view comparator_token(Comparator op) {
  switch (op) {
    case Comparator::kLt: return "math_lt";
    case Comparator::kGt: return "math_gt";
    case Comparator::kEq: return "math_eq";
    case Comparator::kLeq: return "math_leq";
    case Comparator::kGeq: return "math_geq";
    case Comparator::kNeq: return "math_neq";
  }
  return "math_eq";
}

constexpr std::array<Comparator, 6> kComparators{
    Comparator::kLt,  Comparator::kGt,  Comparator::kEq,
    Comparator::kLeq, Comparator::kGeq, Comparator::kNeq};

std::optional<Comparator> comparator_from(std::string_view tok, bool merged) {
  for (Comparator c : kComparators) {
    if ((merged ? comparator_token(c) : comparator_text(c)) == tok) return c;
  }
  return std::nullopt;
}

std::string lower_ascii(std::string_view s) {
  std::string out(s);
  for (char& c : out) {
    c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  return out;
}

void collect_vars(const PatternTerm& t, std::set<std::string>& out) {
  if (auto* v = std::get_if<Variable>(&t)) out.insert(v->name);
}

std::optional<std::string> term_error(const PatternTerm& t) {
  if (auto* p = std::get_if<PrefixedName>(&t)) {
    if (!is_known_prefix(p->prefix)) return "unknown prefix " + p->prefix;
    if (!is_valid_local_name(p->local)) return "bad local name " + p->local;
  } else if (auto* v = std::get_if<Variable>(&t)) {
    if (!is_valid_variable_name(v->name)) return "bad variable " + v->name;
  } else if (!is_valid_literal(std::get<Literal>(t))) {
    return "bad literal";
  }
  return std::nullopt;
}

}  // namespace

// ---------------------------------------------------------------------------
// Presets and token sequences

const CodecPreset& preset(PresetId id) {
  for (const auto& p : kPresets) {
    if (p.id == id) return p;
  }
  return kPresets.front();
}

std::optional<PresetId> parse_preset_id(std::string_view id) {
  for (const auto& p : kPresets) {
    if (p.name == id) return p.id;
  }
  return std::nullopt;
}

const CodecPreset& preset(std::string_view id) {
  auto parsed = parse_preset_id(id);
  if (!parsed) {
    throw Error(ErrorKind::kInvalidArgument, "codec.UnknownPreset",
                "unknown codec preset '" + std::string(id) + "'");
  }
  return preset(*parsed);
}

const std::vector<PresetId>& all_presets() {
  static const std::vector<PresetId> kAll{PresetId::kV1, PresetId::kV1_1,
                                          PresetId::kV2_1, PresetId::kV3,
                                          PresetId::kV4};
  return kAll;
}

TokenSeq::TokenSeq(std::vector<std::string> tokens)
    : tokens_(std::move(tokens)) {
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    const auto& t = tokens_[i];
    if (t.empty() || std::any_of(t.begin(), t.end(), is_space)) {
      throw PositionedError(ErrorKind::kData, "codec.BadToken", i,
                            "token " + std::to_string(i) +
                                " is empty or contains whitespace");
    }
  }
}

std::string TokenSeq::str() const {
  std::string out;
  for (const auto& t : tokens_) {
    if (!out.empty()) out.push_back(' ');
    out += t;
  }
  return out;
}

TokenSeq parse_sequence_line(std::string_view line,
                             const CodecPreset& preset) {
  while (!line.empty() && (line.back() == '\n' || line.back() == '\r')) {
    line.remove_suffix(1);
  }
  std::vector<std::string> tokens;
  if (preset.whitespace_fix) {
    std::size_t i = 0;
    while (i < line.size()) {
      while (i < line.size() && is_space(line[i])) ++i;
      std::size_t start = i;
      while (i < line.size() && !is_space(line[i])) ++i;
      if (i > start) tokens.emplace_back(line.substr(start, i - start));
    }
    return TokenSeq(std::move(tokens));
  }
  if (line.empty()) return {};
  std::size_t start = 0;
  while (true) {
    auto pos = line.find(' ', start);
    tokens.emplace_back(line.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return TokenSeq(std::move(tokens));
}

SyntaxError::SyntaxError(std::size_t position, std::string expected,
                         const std::string& found)
    : PositionedError(ErrorKind::kParse, "codec.SyntaxError", position,
                      "at " + std::to_string(position) + ": expected " +
                          expected + ", found " +
                          (found.empty() ? "end of input" : "'" + found + "'")),
      expected_(std::move(expected)) {}

DecodeError::DecodeError(std::size_t position, std::string token,
                         const std::string& why)
    : PositionedError(ErrorKind::kParse, "codec.DecodeError", position,
                      "token " + std::to_string(position) +
                          (token.empty() ? " (end)" : " '" + token + "'") +
                          ": " + why),
      token_(std::move(token)) {}

// ---------------------------------------------------------------------------
// Term helpers

bool is_known_prefix(std::string_view prefix) {
  return std::any_of(kPrefixes.begin(), kPrefixes.end(),
                     [&](const PrefixEntry& e) { return e.prefix == prefix; });
}

std::string_view prefix_namespace(std::string_view prefix) {
  for (const auto& e : kPrefixes) {
    if (e.prefix == prefix) return e.ns;
  }
  return {};
}

bool is_valid_local_name(std::string_view local) {
  if (local.empty()) return false;
  for (std::size_t i = 0; i < local.size(); ++i) {
    unsigned char c = static_cast<unsigned char>(local[i]);
    if (c == '\\') {
      if (i + 1 >= local.size() ||
          kLocalEscapable.find(local[i + 1]) == std::string_view::npos) {
        return false;
      }
      ++i;
      continue;
    }
    if (!is_plain_local_char(c)) return false;
  }
  return true;
}

bool is_valid_variable_name(std::string_view name) {
  if (name.empty()) return false;
  unsigned char first = static_cast<unsigned char>(name.front());
  if (!std::isalpha(first) && first != '_') return false;
  return std::all_of(name.begin(), name.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
  });
}

std::string expand_prefixed_name(const PrefixedName& name) {
  std::string out(prefix_namespace(name.prefix));
  for (std::size_t i = 0; i < name.local.size(); ++i) {
    if (name.local[i] == '\\' && i + 1 < name.local.size()) ++i;
    out.push_back(name.local[i]);
  }
  return out;
}

std::optional<PrefixedName> compact_iri(std::string_view iri) {
  const PrefixEntry* best = nullptr;
  for (const auto& e : kPrefixes) {
    if (iri.starts_with(e.ns) && (best == nullptr || e.ns.size() > best->ns.size())) {
      best = &e;
    }
  }
  if (best == nullptr || iri.size() == best->ns.size()) return std::nullopt;
  std::string local;
  static constexpr char kHex[] = "0123456789ABCDEF";
  for (char ch : iri.substr(best->ns.size())) {
    unsigned char c = static_cast<unsigned char>(ch);
    if (is_plain_local_char(c)) {
      local.push_back(ch);
    } else if (kLocalEscapable.find(ch) != std::string_view::npos) {
      local.push_back('\\');
      local.push_back(ch);
    } else {
      local.push_back('%');
      local.push_back(kHex[c >> 4]);
      local.push_back(kHex[c & 0xF]);
    }
  }
  return PrefixedName{std::string(best->prefix), std::move(local)};
}

std::string format_term(const PatternTerm& term) {
  if (auto* p = std::get_if<PrefixedName>(&term)) {
    return p->prefix + ":" + p->local;
  }
  if (auto* v = std::get_if<Variable>(&term)) return "?" + v->name;
  return format_literal(std::get<Literal>(term));
}

std::vector<std::string> encode_term(const PatternTerm& term,
                                     const CodecPreset& preset) {
  if (auto* p = std::get_if<PrefixedName>(&term)) {
    if (preset.split_uris) return {p->prefix, p->local};
    return {p->prefix + "_" + p->local};
  }
  if (auto* v = std::get_if<Variable>(&term)) {
    return {(preset.merged_tokens ? "var_" : "?") + v->name};
  }
  return {format_literal(std::get<Literal>(term))};
}

bool is_literal_token(std::string_view token) {
  return is_number_lexical(token) || parse_string_token(token).has_value();
}

bool is_comparator_token(std::string_view token, bool merged) {
  return comparator_from(token, merged).has_value();
}

// ---------------------------------------------------------------------------
// Validation

std::optional<std::string> validation_error(const QueryAst& ast) {
  if (ast.patterns.empty()) return "query has no triple patterns";
  std::set<std::string> bound;
  for (const auto& tp : ast.patterns) {
    for (const auto* t : {&tp.subject, &tp.predicate, &tp.object}) {
      if (auto err = term_error(*t)) return err;
      collect_vars(*t, bound);
    }
    if (std::holds_alternative<Literal>(tp.subject)) {
      return "literal in subject position";
    }
    if (std::holds_alternative<Literal>(tp.predicate)) {
      return "literal in predicate position";
    }
  }
  auto check_var = [&](const Variable& v) -> std::optional<std::string> {
    if (!is_valid_variable_name(v.name)) return "bad variable " + v.name;
    if (!bound.contains(v.name)) return "variable ?" + v.name + " is unbound";
    return std::nullopt;
  };
  if (ast.form == QueryForm::kAsk) {
    if (ast.distinct || ast.count_var || !ast.projection.empty() ||
        ast.order || ast.limit) {
      return "ASK takes no projection or solution modifiers";
    }
  } else {
    if (ast.count_var.has_value() == !ast.projection.empty()) {
      return "SELECT needs either COUNT or a projection";
    }
    if (ast.count_var) {
      if (auto err = check_var(*ast.count_var)) return err;
    }
    for (const auto& v : ast.projection) {
      if (auto err = check_var(v)) return err;
    }
    if (ast.order) {
      if (auto err = check_var(ast.order->variable)) return err;
    }
    if (ast.limit && *ast.limit <= 0) return "LIMIT must be positive";
  }
  for (const auto& f : ast.filters) {
    if (auto err = check_var(f.variable)) return err;
    if (!is_valid_literal(f.value)) return "bad filter literal";
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Text parser

namespace {

class TextParser {
 public:
  explicit TextParser(std::string_view text) : s_(text) { advance(); }

  QueryAst parse() {
    QueryAst ast;
    if (keyword("SELECT")) {
      ast.form = QueryForm::kSelect;
      next();
      if (keyword("DISTINCT")) {
        ast.distinct = true;
        next();
      }
      if (keyword("COUNT")) {
        next();
        expect_punct("(");
        ast.count_var = expect_var();
        expect_punct(")");
      } else {
        while (cur_.kind == Kind::kVar) {
          ast.projection.push_back(Variable{cur_.text});
          next();
        }
        if (ast.projection.empty()) fail("variable or COUNT");
      }
    } else if (keyword("ASK")) {
      ast.form = QueryForm::kAsk;
      next();
    } else {
      fail("SELECT or ASK");
    }
    if (keyword("WHERE")) next();
    expect_punct("{");
    parse_body(ast);
    expect_punct("}");
    if (ast.form == QueryForm::kSelect) {
      if (keyword("ORDER")) {
        next();
        if (!keyword("BY")) fail("BY");
        next();
        OrderBy order;
        if (keyword("ASC") || keyword("DESC")) {
          order.direction =
              keyword("ASC") ? SortDirection::kAsc : SortDirection::kDesc;
          next();
          expect_punct("(");
          order.variable = expect_var();
          expect_punct(")");
        } else {
          order.variable = expect_var();
        }
        ast.order = order;
      }
      if (keyword("LIMIT")) {
        next();
        std::int64_t n = 0;
        if (cur_.kind != Kind::kNumber ||
            std::from_chars(cur_.text.data(), cur_.text.data() + cur_.text.size(), n)
                    .ptr != cur_.text.data() + cur_.text.size() ||
            n <= 0) {
          fail("positive integer");
        }
        ast.limit = n;
        next();
      }
    }
    if (cur_.kind != Kind::kEnd) fail("end of query");
    if (auto err = validation_error(ast)) {
      throw SyntaxError(s_.size(), "valid query (" + *err + ")", "");
    }
    return ast;
  }

 private:
  enum class Kind { kWord, kVar, kPName, kNumber, kString, kPunct, kEnd };
  struct Lexeme {
    Kind kind = Kind::kEnd;
    std::string text;
    std::string extra;  // prefixed-name local part or literal language
    std::size_t pos = 0;
  };

  [[noreturn]] void fail(const std::string& expected) const {
    throw SyntaxError(cur_.pos, expected, cur_.text);
  }

  bool keyword(std::string_view kw) const {
    return cur_.kind == Kind::kWord && lower_ascii(cur_.text) == lower_ascii(kw);
  }

  void next() { advance(); }

  void expect_punct(std::string_view p) {
    if (cur_.kind != Kind::kPunct || cur_.text != p) fail("'" + std::string(p) + "'");
    next();
  }

  Variable expect_var() {
    if (cur_.kind != Kind::kVar) fail("variable");
    Variable v{cur_.text};
    next();
    return v;
  }

  void parse_body(QueryAst& ast) {
    bool need_separator = false;
    while (true) {
      if (cur_.kind == Kind::kPunct && cur_.text == "}") return;
      if (cur_.kind == Kind::kPunct && cur_.text == ".") {
        if (!need_separator) fail("triple pattern");
        need_separator = false;
        next();
        continue;
      }
      if (keyword("FILTER")) {
        next();
        ast.filters.push_back(parse_filter());
        need_separator = false;
        continue;
      }
      if (keyword("UNION") || keyword("OPTIONAL") || keyword("MINUS") ||
          keyword("GRAPH") || keyword("BIND") || keyword("VALUES") ||
          keyword("SERVICE") || keyword("SELECT")) {
        fail("triple pattern (" + cur_.text + " is outside the subset)");
      }
      if (cur_.kind == Kind::kPunct && cur_.text == "{") {
        fail("triple pattern (nested groups are outside the subset)");
      }
      if (need_separator) fail("'.' or '}'");
      TriplePattern tp;
      tp.subject = parse_term(false);
      tp.predicate = parse_term(true);
      tp.object = parse_term(false);
      if (std::holds_alternative<Literal>(tp.subject)) {
        throw SyntaxError(subject_pos_, "subject term", "literal");
      }
      if (std::holds_alternative<Literal>(tp.predicate)) {
        throw SyntaxError(predicate_pos_, "predicate term", "literal");
      }
      ast.patterns.push_back(std::move(tp));
      need_separator = true;
    }
  }

  PatternTerm parse_term(bool predicate) {
    (predicate ? predicate_pos_ : subject_pos_) = cur_.pos;
    Lexeme lx = cur_;
    switch (lx.kind) {
      case Kind::kVar:
        next();
        return Variable{lx.text};
      case Kind::kPName:
        next();
        return PrefixedName{lx.text, lx.extra};
      case Kind::kNumber:
        next();
        return Literal{Literal::Kind::kNumber, lx.text, {}};
      case Kind::kString:
        next();
        return Literal{Literal::Kind::kString, lx.text, lx.extra};
      case Kind::kWord:
        if (predicate && lx.text == "a") {
          next();
          return PrefixedName{"rdf", "type"};
        }
        break;
      default:
        break;
    }
    fail("term");
  }

  Filter parse_filter() {
    expect_punct("(");
    Filter f;
    f.variable = expect_var();
    if (cur_.kind != Kind::kPunct) fail("comparator");
    auto op = comparator_from(cur_.text, false);
    if (!op) fail("comparator");
    f.op = *op;
    next();
    if (cur_.kind == Kind::kNumber) {
      f.value = Literal{Literal::Kind::kNumber, cur_.text, {}};
    } else if (cur_.kind == Kind::kString) {
      f.value = Literal{Literal::Kind::kString, cur_.text, cur_.extra};
    } else {
      fail("literal");
    }
    next();
    expect_punct(")");
    return f;
  }

  void advance() {
    while (i_ < s_.size() && is_space(s_[i_])) ++i_;
    cur_ = Lexeme{};
    cur_.pos = i_;
    if (i_ >= s_.size()) {
      cur_.kind = Kind::kEnd;
      return;
    }
    char c = s_[i_];
    unsigned char uc = static_cast<unsigned char>(c);
    if (c == '?' || c == '$') {
      std::size_t start = ++i_;
      while (i_ < s_.size() &&
             (std::isalnum(static_cast<unsigned char>(s_[i_])) || s_[i_] == '_')) {
        ++i_;
      }
      cur_.kind = Kind::kVar;
      cur_.text = std::string(s_.substr(start, i_ - start));
      if (!is_valid_variable_name(cur_.text)) fail("variable name");
      return;
    }
    if (c == '"') {
      auto close = s_.find('"', i_ + 1);
      if (close == std::string_view::npos) fail("closing quote");
      cur_.kind = Kind::kString;
      cur_.text = std::string(s_.substr(i_ + 1, close - i_ - 1));
      if (!is_valid_string_content(cur_.text)) {
        fail("string literal without whitespace or escapes");
      }
      i_ = close + 1;
      if (i_ < s_.size() && s_[i_] == '@') {
        std::size_t start = ++i_;
        while (i_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[i_])) ||
                                  s_[i_] == '-')) {
          ++i_;
        }
        cur_.extra = std::string(s_.substr(start, i_ - start));
        if (!is_valid_language(cur_.extra)) fail("language tag");
      } else if (s_.substr(i_, 2) == "^^") {
        fail("plain literal (datatypes are outside the subset)");
      }
      return;
    }
    if (std::isdigit(uc) || ((c == '+' || c == '-') && i_ + 1 < s_.size() &&
                             std::isdigit(static_cast<unsigned char>(s_[i_ + 1])))) {
      std::size_t start = i_++;
      while (i_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[i_]))) ++i_;
      if (i_ + 1 < s_.size() && s_[i_] == '.' &&
          std::isdigit(static_cast<unsigned char>(s_[i_ + 1]))) {
        ++i_;
        while (i_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[i_]))) ++i_;
      }
      cur_.kind = Kind::kNumber;
      cur_.text = std::string(s_.substr(start, i_ - start));
      return;
    }
    if (std::isalpha(uc)) {
      std::size_t start = i_;
      while (i_ < s_.size() && std::isalnum(static_cast<unsigned char>(s_[i_]))) ++i_;
      std::string word(s_.substr(start, i_ - start));
      if (i_ < s_.size() && s_[i_] == ':') {
        if (!is_known_prefix(word)) {
          throw SyntaxError(start, "known prefix", word);
        }
        std::size_t lstart = ++i_;
        while (i_ < s_.size()) {
          unsigned char lc = static_cast<unsigned char>(s_[i_]);
          if (lc == '\\' && i_ + 1 < s_.size() &&
              kLocalEscapable.find(s_[i_ + 1]) != std::string_view::npos) {
            i_ += 2;
          } else if (is_plain_local_char(lc)) {
            ++i_;
          } else {
            break;
          }
        }
        cur_.kind = Kind::kPName;
        cur_.text = word;
        cur_.extra = std::string(s_.substr(lstart, i_ - lstart));
        if (cur_.extra.empty()) fail("local name");
        return;
      }
      cur_.kind = Kind::kWord;
      cur_.text = word;
      return;
    }
    if (c == '<') {
      if (i_ + 1 < s_.size() && s_[i_ + 1] == '=') {
        cur_ = {Kind::kPunct, "<=", {}, i_};
        i_ += 2;
        return;
      }
      // Angle-bracket IRIs are rejected; a bare '<' is a comparator.
      if (i_ + 1 < s_.size() && !is_space(s_[i_ + 1])) {
        fail("prefixed name (IRIs in angle brackets are not supported)");
      }
      cur_ = {Kind::kPunct, "<", {}, i_++};
      return;
    }
    if (c == '>' || c == '!') {
      if (i_ + 1 < s_.size() && s_[i_ + 1] == '=') {
        cur_ = {Kind::kPunct, std::string(1, c) + "=", {}, i_};
        i_ += 2;
        return;
      }
      if (c == '!') fail("'!='");
      cur_ = {Kind::kPunct, ">", {}, i_++};
      return;
    }
    if (c == '{' || c == '}' || c == '.' || c == '(' || c == ')' || c == '=') {
      cur_ = {Kind::kPunct, std::string(1, c), {}, i_++};
      return;
    }
    cur_.text = std::string(1, c);
    fail("token");
  }

  std::string_view s_;
  std::size_t i_ = 0;
  Lexeme cur_;
  std::size_t subject_pos_ = 0;
  std::size_t predicate_pos_ = 0;
};

}  // namespace

QueryAst parse_sparql(std::string_view text) { return TextParser(text).parse(); }

std::string print_sparql(const QueryAst& ast) {
  std::string out;
  if (ast.form == QueryForm::kAsk) {
    out = "ASK";
  } else {
    out = "SELECT";
    if (ast.distinct) out += " DISTINCT";
    if (ast.count_var) out += " COUNT(?" + ast.count_var->name + ")";
    for (const auto& v : ast.projection) out += " ?" + v.name;
  }
  out += " WHERE {";
  for (std::size_t i = 0; i < ast.patterns.size(); ++i) {
    const auto& tp = ast.patterns[i];
    out += i == 0 ? " " : " . ";
    out += format_term(tp.subject) + " " + format_term(tp.predicate) + " " +
           format_term(tp.object);
  }
  for (const auto& f : ast.filters) {
    out += " FILTER(?" + f.variable.name + " " +
           std::string(comparator_text(f.op)) + " " + format_literal(f.value) +
           ")";
  }
  out += " }";
  if (ast.order) {
    out += ast.order->direction == SortDirection::kAsc ? " ORDER BY ASC(?"
                                                        : " ORDER BY DESC(?";
    out += ast.order->variable.name + ")";
  }
  if (ast.limit) out += " LIMIT " + std::to_string(*ast.limit);
  return out;
}

// ---------------------------------------------------------------------------
// Encoding

TokenSeq encode_query(const QueryAst& ast, const CodecPreset& preset) {
  if (auto err = validation_error(ast)) {
    throw Error(ErrorKind::kData, "codec.UnsupportedConstruct", *err);
  }
  const bool merged = preset.merged_tokens;
  std::vector<std::string> out;
  auto add_term = [&](const PatternTerm& t) {
    for (auto& tok : encode_term(t, preset)) out.push_back(std::move(tok));
  };
  auto var_tok = [&](const Variable& v) {
    return (merged ? "var_" : "?") + v.name;
  };

  if (ast.form == QueryForm::kAsk) {
    out.emplace_back("ask");
  } else {
    out.emplace_back("select");
    if (ast.distinct) out.emplace_back("distinct");
    if (ast.count_var) {
      if (merged) {
        out.emplace_back("agg_count");
        out.push_back(var_tok(*ast.count_var));
      } else {
        out.insert(out.end(), {"count", "(", var_tok(*ast.count_var), ")"});
      }
    }
    for (const auto& v : ast.projection) out.push_back(var_tok(v));
  }
  out.emplace_back("where");
  out.emplace_back(merged ? "brack_open" : "{");
  for (std::size_t i = 0; i < ast.patterns.size(); ++i) {
    if (i > 0) out.emplace_back(merged ? "sep_dot" : ".");
    add_term(ast.patterns[i].subject);
    add_term(ast.patterns[i].predicate);
    add_term(ast.patterns[i].object);
  }
  for (const auto& f : ast.filters) {
    if (merged) {
      out.insert(out.end(), {"filter", var_tok(f.variable),
                             std::string(comparator_token(f.op)),
                             format_literal(f.value)});
    } else {
      out.insert(out.end(), {"filter", "(", var_tok(f.variable),
                             std::string(comparator_text(f.op)),
                             format_literal(f.value), ")"});
    }
  }
  out.emplace_back(merged ? "brack_close" : "}");
  if (ast.order) {
    bool asc = ast.order->direction == SortDirection::kAsc;
    if (merged) {
      out.emplace_back(asc ? "ord_asc" : "ord_desc");
      out.push_back(var_tok(ast.order->variable));
    } else {
      out.insert(out.end(), {"order", "by", asc ? "asc" : "desc", "(",
                             var_tok(ast.order->variable), ")"});
    }
  }
  if (ast.limit) {
    out.emplace_back("limit");
    out.push_back(std::to_string(*ast.limit));
  }
  return TokenSeq(std::move(out));
}

// ---------------------------------------------------------------------------
// Decoding

namespace {

class SequenceDecoder {
 public:
  SequenceDecoder(const TokenSeq& tokens, const CodecPreset& preset)
      : t_(tokens.tokens()), p_(preset) {}

  QueryAst decode() {
    if (t_.empty()) throw DecodeError(0, "", "empty sequence");
    QueryAst ast;
    if (is_kw("select")) {
      ++i_;
      if (is_kw("distinct")) {
        ast.distinct = true;
        ++i_;
      }
      if (is_kw(p_.merged_tokens ? "agg_count" : "count")) {
        ++i_;
        if (!p_.merged_tokens) expect("(");
        ast.count_var = expect_var();
        if (!p_.merged_tokens) expect(")");
      } else {
        while (auto v = peek_var()) {
          ast.projection.push_back(*v);
          ++i_;
        }
        if (ast.projection.empty()) fail("expected a variable or count");
      }
    } else if (is_kw("ask")) {
      ast.form = QueryForm::kAsk;
      ++i_;
    } else {
      fail("expected select or ask");
    }
    expect_kw("where");
    expect(p_.merged_tokens ? "brack_open" : "{");
    const std::string_view sep = p_.merged_tokens ? "sep_dot" : ".";
    const std::string_view close = p_.merged_tokens ? "brack_close" : "}";
    ast.patterns.push_back(read_triple());
    while (at(sep)) {
      ++i_;
      ast.patterns.push_back(read_triple());
    }
    while (is_kw("filter")) {
      ++i_;
      ast.filters.push_back(read_filter());
    }
    expect(close);
    if (ast.form == QueryForm::kSelect) {
      if (p_.merged_tokens && (is_kw("ord_asc") || is_kw("ord_desc"))) {
        OrderBy o;
        o.direction = is_kw("ord_asc") ? SortDirection::kAsc : SortDirection::kDesc;
        ++i_;
        o.variable = expect_var();
        ast.order = o;
      } else if (!p_.merged_tokens && is_kw("order")) {
        ++i_;
        expect_kw("by");
        OrderBy o;
        if (is_kw("asc")) {
          o.direction = SortDirection::kAsc;
        } else if (is_kw("desc")) {
          o.direction = SortDirection::kDesc;
        } else {
          fail("expected asc or desc");
        }
        ++i_;
        expect("(");
        o.variable = expect_var();
        expect(")");
        ast.order = o;
      }
      if (is_kw("limit")) {
        ++i_;
        std::int64_t n = 0;
        const std::string tok = current();
        auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), n);
        if (tok.empty() || !std::isdigit(static_cast<unsigned char>(tok[0])) ||
            ec != std::errc() || ptr != tok.data() + tok.size() || n <= 0) {
          fail("expected a positive integer");
        }
        ast.limit = n;
        ++i_;
      }
    }
    if (i_ != t_.size()) fail("expected end of sequence");
    if (auto err = validation_error(ast)) {
      throw DecodeError(t_.size(), "", *err);
    }
    return ast;
  }

 private:
  std::string current() const { return i_ < t_.size() ? t_[i_] : std::string(); }

  [[noreturn]] void fail(const std::string& why) const {
    throw DecodeError(i_, current(), why);
  }

  bool at(std::string_view tok) const { return i_ < t_.size() && t_[i_] == tok; }

  bool is_kw(std::string_view kw) const {
    if (i_ >= t_.size()) return false;
    if (p_.lowercase_keywords) return t_[i_] == kw;
    return lower_ascii(t_[i_]) == kw;
  }

  void expect(std::string_view tok) {
    if (!at(tok)) fail("expected " + std::string(tok));
    ++i_;
  }

  void expect_kw(std::string_view kw) {
    if (!is_kw(kw)) fail("expected " + std::string(kw));
    ++i_;
  }

  std::optional<Variable> peek_var() const {
    if (i_ >= t_.size()) return std::nullopt;
    std::string_view tok = t_[i_];
    std::string_view marker = p_.merged_tokens ? "var_" : "?";
    if (!tok.starts_with(marker)) return std::nullopt;
    auto name = tok.substr(marker.size());
    if (!is_valid_variable_name(name)) return std::nullopt;
    return Variable{std::string(name)};
  }

  Variable expect_var() {
    auto v = peek_var();
    if (!v) fail("expected a variable");
    ++i_;
    return *v;
  }

  Literal expect_literal() {
    const std::string tok = current();
    if (is_number_lexical(tok)) {
      ++i_;
      return Literal{Literal::Kind::kNumber, tok, {}};
    }
    if (auto lit = parse_string_token(tok)) {
      ++i_;
      return *lit;
    }
    fail("expected a literal");
  }

  PatternTerm read_term() {
    if (i_ >= t_.size()) fail("expected a term");
    if (auto v = peek_var()) {
      ++i_;
      return *v;
    }
    const std::string& tok = t_[i_];
    if (p_.split_uris) {
      if (is_known_prefix(tok)) {
        if (i_ + 1 >= t_.size()) {
          ++i_;
          fail("expected a local name after prefix");
        }
        const std::string& local = t_[i_ + 1];
        if (!is_valid_local_name(local)) {
          ++i_;
          fail("invalid local name");
        }
        i_ += 2;
        return PrefixedName{tok, local};
      }
    } else {
      auto us = tok.find('_');
      if (us != std::string::npos && is_known_prefix(std::string_view(tok).substr(0, us))) {
        auto local = tok.substr(us + 1);
        if (!is_valid_local_name(local)) fail("invalid local name");
        ++i_;
        return PrefixedName{tok.substr(0, us), local};
      }
    }
    if (is_number_lexical(tok) || tok.front() == '"') return expect_literal();
    fail("expected a term");
  }

  TriplePattern read_triple() {
    TriplePattern tp;
    std::size_t start = i_;
    tp.subject = read_term();
    if (std::holds_alternative<Literal>(tp.subject)) {
      i_ = start;
      fail("literal cannot be a subject");
    }
    start = i_;
    tp.predicate = read_term();
    if (std::holds_alternative<Literal>(tp.predicate)) {
      i_ = start;
      fail("literal cannot be a predicate");
    }
    tp.object = read_term();
    return tp;
  }

  Filter read_filter() {
    Filter f;
    if (!p_.merged_tokens) expect("(");
    f.variable = expect_var();
    auto op = comparator_from(current(), p_.merged_tokens);
    if (!op) fail("expected a comparator");
    f.op = *op;
    ++i_;
    f.value = expect_literal();
    if (!p_.merged_tokens) expect(")");
    return f;
  }

  const std::vector<std::string>& t_;
  const CodecPreset& p_;
  std::size_t i_ = 0;
};

}  // namespace

QueryAst decode_sequence(const TokenSeq& tokens, const CodecPreset& preset) {
  return SequenceDecoder(tokens, preset).decode();
}

TokenSeq tokenize_nl(std::string_view text) {
  static constexpr std::string_view kStripped = "?!.,'\"";
  std::vector<std::string> tokens;
  std::string cur;
  for (char c : text) {
    if (kStripped.find(c) != std::string_view::npos) continue;
    if (is_space(c)) {
      if (!cur.empty()) tokens.push_back(std::move(cur));
      cur.clear();
      continue;
    }
    cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  if (!cur.empty()) tokens.push_back(std::move(cur));
  if (tokens.empty()) {
    throw Error(ErrorKind::kData, "codec.EmptyQuestion",
                "question has no tokens after normalization");
  }
  return TokenSeq(std::move(tokens));
}

}  // namespace nspm::codec
