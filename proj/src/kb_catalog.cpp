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

#include "nspm/kb_catalog.hpp"

#include <algorithm>
#include <charconv>
#include <istream>
#include <ostream>
#include <sstream>

namespace nspm::kb {

MalformedLine::MalformedLine(std::size_t line_no, const std::string& why)
    : PositionedError(ErrorKind::kParse, "kb.MalformedLine", line_no,
                      "line " + std::to_string(line_no) + ": " + why) {}

namespace {

class LineCursor {
 public:
  explicit LineCursor(std::string_view line) : s_(line) {}

  void skip_ws() {
    while (i_ < s_.size() && (s_[i_] == ' ' || s_[i_] == '\t')) ++i_;
  }
  bool done() const { return i_ >= s_.size(); }
  char peek() const { return done() ? '\0' : s_[i_]; }
  bool consume(char c) {
    if (peek() != c) return false;
    ++i_;
    return true;
  }

  // Returns false on malformed input; `err` explains why.
  bool read_term(Term& out, bool allow_literal, bool allow_blank,
                 std::string& err) {
    skip_ws();
    char c = peek();
    if (c == '<') return read_iri(out, err);
    if (c == '_' && allow_blank) return read_blank(out, err);
    if (c == '"' && allow_literal) return read_literal(out, err);
    err = done() ? "missing term" : std::string("unexpected '") + c + "'";
    return false;
  }

 private:
  static bool is_absolute_iri(std::string_view v) {
    auto colon = v.find(':');
    if (colon == std::string_view::npos || colon == 0) return false;
    if (!std::isalpha(static_cast<unsigned char>(v[0]))) return false;
    for (std::size_t k = 1; k < colon; ++k) {
      unsigned char ch = static_cast<unsigned char>(v[k]);
      if (!std::isalnum(ch) && ch != '+' && ch != '-' && ch != '.') {
        return false;
      }
    }
    return true;
  }

  bool read_iri(Term& out, std::string& err) {
    ++i_;  // '<'
    std::string v;
    while (!done() && peek() != '>') {
      char ch = s_[i_++];
      if (ch == ' ' || ch == '\t' || ch == '"' || ch == '<') {
        err = "illegal character in IRI";
        return false;
      }
      if (ch == '\\') {
        if (!read_unicode_escape(v, err)) return false;
        continue;
      }
      v.push_back(ch);
    }
    if (!consume('>')) {
      err = "unterminated IRI";
      return false;
    }
    if (!is_absolute_iri(v)) {
      err = "IRI is not absolute: " + v;
      return false;
    }
    out = Term::iri(std::move(v));
    return true;
  }

  bool read_blank(Term& out, std::string& err) {
    if (s_.substr(i_, 2) != "_:") {
      err = "bad blank node";
      return false;
    }
    i_ += 2;
    std::string v;
    while (!done()) {
      unsigned char ch = static_cast<unsigned char>(peek());
      if (std::isalnum(ch) || ch == '_' || ch == '-' || ch == '.' ||
          ch >= 0x80) {
        v.push_back(static_cast<char>(ch));
        ++i_;
      } else {
        break;
      }
    }
    while (!v.empty() && v.back() == '.') {
      v.pop_back();
      --i_;
    }
    if (v.empty()) {
      err = "empty blank node label";
      return false;
    }
    out = Term::blank(std::move(v));
    return true;
  }

  static void append_utf8(std::string& out, std::uint32_t cp) {
    if (cp < 0x80) {
      out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
      out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
      out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
      out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
  }

  // After a backslash inside an IRI: only \uXXXX and \UXXXXXXXX.
  bool read_unicode_escape(std::string& out, std::string& err) {
    char kind = peek();
    std::size_t n = kind == 'u' ? 4 : kind == 'U' ? 8 : 0;
    if (n == 0 || i_ + 1 + n > s_.size()) {
      err = "bad escape";
      return false;
    }
    std::uint32_t cp = 0;
    auto first = s_.data() + i_ + 1;
    auto [ptr, ec] = std::from_chars(first, first + n, cp, 16);
    if (ec != std::errc() || ptr != first + n || cp > 0x10FFFF) {
      err = "bad unicode escape";
      return false;
    }
    append_utf8(out, cp);
    i_ += 1 + n;
    return true;
  }

  bool read_literal(Term& out, std::string& err) {
    ++i_;  // opening quote
    std::string v;
    bool closed = false;
    while (!done()) {
      char ch = s_[i_++];
      if (ch == '"') {
        closed = true;
        break;
      }
      if (ch != '\\') {
        v.push_back(ch);
        continue;
      }
      if (done()) break;
      char e = peek();
      switch (e) {
        case '"': v.push_back('"'); ++i_; break;
        case '\\': v.push_back('\\'); ++i_; break;
        case 'n': v.push_back('\n'); ++i_; break;
        case 't': v.push_back('\t'); ++i_; break;
        case 'r': v.push_back('\r'); ++i_; break;
        case 'b': v.push_back('\b'); ++i_; break;
        case 'f': v.push_back('\f'); ++i_; break;
        case '\'': v.push_back('\''); ++i_; break;
        case 'u':
        case 'U':
          if (!read_unicode_escape(v, err)) return false;
          break;
        default:
          err = std::string("unknown escape \\") + e;
          return false;
      }
    }
    if (!closed) {
      err = "unterminated literal";
      return false;
    }
    std::string lang, type;
    if (consume('@')) {
      while (!done()) {
        unsigned char ch = static_cast<unsigned char>(peek());
        if (!std::isalnum(ch) && ch != '-') break;
        lang.push_back(static_cast<char>(ch));
        ++i_;
      }
      if (lang.empty()) {
        err = "empty language tag";
        return false;
      }
    } else if (peek() == '^') {
      if (s_.substr(i_, 2) != "^^") {
        err = "bad datatype marker";
        return false;
      }
      i_ += 2;
      Term dt;
      if (peek() != '<' || !read_iri(dt, err)) {
        if (err.empty()) err = "datatype must be an IRI";
        return false;
      }
      type = dt.value;
    }
    out = Term::literal(std::move(v), std::move(lang), std::move(type));
    return true;
  }

  std::string_view s_;
  std::size_t i_ = 0;
};

bool is_blank_line(std::string_view line) {
  for (char c : line) {
    if (c == '#') return true;
    if (c != ' ' && c != '\t' && c != '\r') return false;
  }
  return true;
}

// Returns an empty string on success, otherwise the reason.
std::string parse_statement(std::string_view line, Triple& out) {
  LineCursor cur(line);
  std::string err;
  Term s, p, o;
  if (!cur.read_term(s, false, true, err)) return "subject: " + err;
  if (!cur.read_term(p, false, false, err)) return "predicate: " + err;
  if (!cur.read_term(o, true, true, err)) return "object: " + err;
  cur.skip_ws();
  if (!cur.consume('.')) return "missing terminating '.'";
  cur.skip_ws();
  if (!cur.done() && cur.peek() != '#' && cur.peek() != '\r') {
    return "trailing characters";
  }
  out = Triple{std::move(s), std::move(p.value), std::move(o)};
  return {};
}

std::string escape_literal(std::string_view v) {
  std::string out;
  out.reserve(v.size() + 2);
  for (char c : v) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      case '\r': out += "\\r"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

std::string trim(std::string_view s) {
  auto is_space = [](char c) {
    return c == ' ' || c == '\t' || c == '\r' || c == '\n';
  };
  std::size_t b = 0, e = s.size();
  while (b < e && is_space(s[b])) ++b;
  while (e > b && is_space(s[e - 1])) --e;
  return std::string(s.substr(b, e - b));
}

int language_preference(std::string_view lang) {
  std::string lower;
  for (char c : lang) lower.push_back(static_cast<char>(std::tolower(
      static_cast<unsigned char>(c))));
  if (lower == "en") return 0;
  if (lower.empty()) return 1;
  return 2;
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    auto pos = s.find(sep, start);
    out.emplace_back(s.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

bool parse_positive(std::string_view text, std::int64_t& out) {
  if (text.empty()) return false;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  return ec == std::errc() && ptr == text.data() + text.size() && out > 0;
}

void check_dense(const std::vector<EntityRecord>& records) {
  std::vector<std::int64_t> ranks;
  ranks.reserve(records.size());
  for (const auto& r : records) ranks.push_back(r.rank);
  std::sort(ranks.begin(), ranks.end());
  for (std::size_t k = 0; k < ranks.size(); ++k) {
    if (ranks[k] != static_cast<std::int64_t>(k + 1)) {
      throw Error(ErrorKind::kData, "kb.BadRank",
                  "catalog ranks are not a permutation of 1..N");
    }
  }
}

}  // namespace

ParseResult parse_ntriples(std::istream& in, ParseOptions options) {
  ParseResult result;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (is_blank_line(line)) continue;
    Triple t;
    std::string err = parse_statement(line, t);
    if (!err.empty()) {
      if (options.lenient) {
        ++result.skipped_lines;
        continue;
      }
      throw MalformedLine(line_no, err);
    }
    result.triples.push_back(std::move(t));
  }
  return result;
}

ParseResult parse_ntriples_string(std::string_view text, ParseOptions options) {
  std::istringstream in{std::string(text)};
  return parse_ntriples(in, options);
}

std::string format_term(const Term& term) {
  switch (term.kind) {
    case Term::Kind::kIri:
      return "<" + term.value + ">";
    case Term::Kind::kBlank:
      return "_:" + term.value;
    case Term::Kind::kLiteral: {
      std::string out = "\"" + escape_literal(term.value) + "\"";
      if (!term.language.empty()) {
        out += "@" + term.language;
      } else if (!term.datatype.empty()) {
        out += "^^<" + term.datatype + ">";
      }
      return out;
    }
  }
  return {};
}

void write_ntriples(std::ostream& out, const std::vector<Triple>& triples) {
  for (const auto& t : triples) {
    out << format_term(t.subject) << ' ' << '<' << t.predicate << "> "
        << format_term(t.object) << " .\n";
  }
}

EntityCatalog::EntityCatalog(std::vector<EntityRecord> records)
    : by_rank_(std::move(records)) {
  check_dense(by_rank_);
  std::sort(by_rank_.begin(), by_rank_.end(),
            [](const EntityRecord& a, const EntityRecord& b) {
              return std::tie(a.rank, a.uri) < std::tie(b.rank, b.uri);
            });
  for (std::size_t k = 0; k < by_rank_.size(); ++k) {
    const auto& r = by_rank_[k];
    if (r.labels.empty() || r.labels.front().empty()) {
      throw Error(ErrorKind::kData, "kb.BadCatalog",
                  "entity without label: " + r.uri);
    }
    if (!position_.emplace(r.uri, k).second) {
      throw Error(ErrorKind::kData, "kb.BadCatalog",
                  "duplicate entity: " + r.uri);
    }
    for (const auto& c : r.classes) class_index_[c].push_back(r.uri);
  }
}

const EntityRecord* EntityCatalog::find(std::string_view uri) const {
  auto it = position_.find(std::string(uri));
  return it == position_.end() ? nullptr : &by_rank_[it->second];
}

const EntityRecord& EntityCatalog::at(std::string_view uri) const {
  const EntityRecord* r = find(uri);
  if (r == nullptr) {
    throw Error(ErrorKind::kData, "kb.UnknownEntity",
                "unknown entity: " + std::string(uri));
  }
  return *r;
}

const std::vector<std::string>& EntityCatalog::members(
    std::string_view class_iri) const {
  static const std::vector<std::string> kNone;
  auto it = class_index_.find(class_iri);
  return it == class_index_.end() ? kNone : it->second;
}

std::map<std::string, std::int64_t> rank_by_degree(
    const std::vector<Triple>& triples,
    const std::vector<std::string>& entity_uris) {
  if (entity_uris.empty()) {
    throw Error(ErrorKind::kInvalidArgument, "kb.EmptyInput",
                "rank_by_degree needs at least one entity");
  }
  std::unordered_map<std::string, std::int64_t> degree;
  for (const auto& u : entity_uris) degree.emplace(u, 0);
  for (const auto& t : triples) {
    if (t.subject.is_iri()) {
      if (auto it = degree.find(t.subject.value); it != degree.end()) {
        ++it->second;
      }
    }
    if (t.object.is_iri()) {
      if (auto it = degree.find(t.object.value); it != degree.end()) {
        ++it->second;
      }
    }
  }
  std::vector<std::pair<std::int64_t, std::string>> order;
  order.reserve(degree.size());
  for (auto& [uri, d] : degree) order.emplace_back(-d, uri);
  std::sort(order.begin(), order.end());
  std::map<std::string, std::int64_t> ranks;
  for (std::size_t k = 0; k < order.size(); ++k) {
    ranks[order[k].second] = static_cast<std::int64_t>(k + 1);
  }
  return ranks;
}

EntityCatalog build_catalog(const std::vector<Triple>& triples,
                            const CatalogOptions& options) {
  struct Candidate {
    std::vector<std::pair<int, std::string>> labels;
    std::set<std::string> classes;
  };
  std::map<std::string, Candidate> candidates;
  for (const auto& t : triples) {
    if (!t.subject.is_iri()) continue;
    if (t.predicate == options.label_predicate && t.object.is_literal()) {
      std::string label = trim(t.object.value);
      if (label.empty()) continue;
      candidates[t.subject.value].labels.emplace_back(
          language_preference(t.object.language), std::move(label));
    } else if (t.predicate == options.type_predicate && t.object.is_iri()) {
      candidates[t.subject.value].classes.insert(t.object.value);
    }
  }

  std::vector<EntityRecord> records;
  std::vector<std::string> uris;
  for (auto& [uri, c] : candidates) {
    if (c.labels.empty()) continue;
    if (options.target_class && !c.classes.contains(*options.target_class)) {
      continue;
    }
    if (options.entity_list && !options.entity_list->contains(uri)) continue;
    std::sort(c.labels.begin(), c.labels.end());
    EntityRecord r;
    r.uri = uri;
    for (auto& [pref, label] : c.labels) {
      if (std::find(r.labels.begin(), r.labels.end(), label) ==
          r.labels.end()) {
        r.labels.push_back(std::move(label));
      }
    }
    r.classes = std::move(c.classes);
    uris.push_back(uri);
    records.push_back(std::move(r));
  }
  if (records.empty()) {
    throw Error(ErrorKind::kData, "kb.EmptyCatalog",
                "no entity qualifies for the catalog");
  }
  auto ranks = rank_by_degree(triples, uris);
  for (auto& r : records) r.rank = ranks.at(r.uri);
  return EntityCatalog(std::move(records));
}

EntityCatalog load_ranking(std::istream& tsv, const EntityCatalog& catalog,
                           RankingOptions options) {
  std::map<std::string, std::int64_t> listed;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(tsv, line)) {
    ++line_no;
    if (is_blank_line(line)) continue;
    auto fields = split(trim(line), '\t');
    std::int64_t rank = 0;
    if (fields.size() != 2 || !parse_positive(trim(fields[1]), rank)) {
      throw PositionedError(ErrorKind::kData, "kb.BadRank", line_no,
                            "line " + std::to_string(line_no) +
                                ": expected uri<TAB>positive-integer rank");
    }
    std::string uri = trim(fields[0]);
    if (catalog.find(uri) == nullptr) {
      if (options.strict) {
        throw Error(ErrorKind::kData, "kb.UnknownEntity",
                    "ranking names unknown entity: " + uri);
      }
      continue;
    }
    listed[uri] = rank;
  }

  // (group, key, uri): listed entities sort by file rank, the rest by their
  // previous rank.
  std::vector<std::tuple<int, std::int64_t, std::string>> order;
  for (const auto& r : catalog.entities()) {
    auto it = listed.find(r.uri);
    if (it != listed.end()) {
      order.emplace_back(0, it->second, r.uri);
    } else {
      order.emplace_back(1, r.rank, r.uri);
    }
  }
  std::sort(order.begin(), order.end());
  std::vector<EntityRecord> records;
  records.reserve(order.size());
  for (std::size_t k = 0; k < order.size(); ++k) {
    EntityRecord r = catalog.at(std::get<2>(order[k]));
    r.rank = static_cast<std::int64_t>(k + 1);
    records.push_back(std::move(r));
  }
  return EntityCatalog(std::move(records));
}

void write_catalog_tsv(std::ostream& out, const EntityCatalog& catalog) {
  for (const auto& r : catalog.entities()) {
    out << r.uri << '\t' << r.rank << '\t' << r.preferred_label() << '\t';
    bool first = true;
    for (const auto& c : r.classes) {
      if (!first) out << ';';
      out << c;
      first = false;
    }
    out << '\n';
  }
}

EntityCatalog read_catalog_tsv(std::istream& in) {
  std::vector<EntityRecord> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (is_blank_line(line)) continue;
    auto fields = split(line, '\t');
    EntityRecord r;
    if (fields.size() != 4 || fields[0].empty() ||
        !parse_positive(fields[1], r.rank) || trim(fields[2]).empty()) {
      throw PositionedError(ErrorKind::kParse, "kb.BadCatalog", line_no,
                            "catalog line " + std::to_string(line_no) +
                                " is malformed");
    }
    r.uri = fields[0];
    r.labels.push_back(trim(fields[2]));
    if (!fields[3].empty()) {
      for (auto& c : split(fields[3], ';')) {
        if (!c.empty()) r.classes.insert(std::move(c));
      }
    }
    records.push_back(std::move(r));
  }
  if (records.empty()) {
    throw Error(ErrorKind::kData, "kb.EmptyCatalog", "catalog file is empty");
  }
  return EntityCatalog(std::move(records));
}

std::set<std::string> read_entity_list(std::istream& in) {
  std::set<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    if (is_blank_line(line)) continue;
    std::string uri = trim(line);
    if (uri.size() >= 2 && uri.front() == '<' && uri.back() == '>') {
      uri = uri.substr(1, uri.size() - 2);
    }
    out.insert(std::move(uri));
  }
  return out;
}

}  // namespace nspm::kb
