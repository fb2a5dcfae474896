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

#include "nspm/interpreter.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <optional>
#include <set>

#include <json.hpp>

namespace nspm::interp {

using codec::CodecPreset;
using codec::TokenSeq;

std::string_view action_name(ActionKind kind) {
  switch (kind) {
    case ActionKind::kTruncatedAfterEos: return "truncated_after_eos";
    case ActionKind::kDroppedUnknown: return "dropped_unknown";
    case ActionKind::kInsertedKeyword: return "inserted_keyword";
    case ActionKind::kBalancedBracket: return "balanced_bracket";
    case ActionKind::kDroppedFragment: return "dropped_fragment";
    case ActionKind::kDroppedMisplaced: return "dropped_misplaced";
  }
  return "unknown";
}

namespace {

constexpr std::string_view kEos = "</s>";
constexpr std::array<std::string_view, 3> kReserved{"<pad>", "<s>", "<unk>"};

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

// Surface tokens of the structural keywords under one preset.
struct Lexicon {
  explicit Lexicon(const CodecPreset& p) : preset(p), merged(p.merged_tokens) {
    open = merged ? "brack_open" : "{";
    close = merged ? "brack_close" : "}";
    dot = merged ? "sep_dot" : ".";
  }

  bool kw(std::string_view tok, std::string_view word) const {
    return preset.lowercase_keywords ? tok == word : lower(tok) == word;
  }

  bool is_keyword(std::string_view tok) const {
    static constexpr std::array<std::string_view, 12> kMerged{
        "select", "ask", "distinct", "agg_count", "where", "brack_open",
        "brack_close", "sep_dot", "filter", "ord_asc", "ord_desc", "limit"};
    static constexpr std::array<std::string_view, 15> kPlain{
        "select", "ask", "distinct", "count", "where", "{", "}", ".",
        "(", ")", "filter", "order", "by", "asc", "desc"};
    if (merged) {
      for (auto w : kMerged) {
        if (kw(tok, w)) return true;
      }
      return codec::is_comparator_token(tok, true);
    }
    for (auto w : kPlain) {
      if (kw(tok, w)) return true;
    }
    return kw(tok, "limit") || codec::is_comparator_token(tok, false);
  }

  std::optional<std::string> var_name(std::string_view tok) const {
    std::string_view marker = merged ? "var_" : "?";
    if (!tok.starts_with(marker)) return std::nullopt;
    auto name = tok.substr(marker.size());
    if (!codec::is_valid_variable_name(name)) return std::nullopt;
    return std::string(name);
  }

  bool is_merged_term(std::string_view tok) const {
    auto us = tok.find('_');
    return us != std::string_view::npos &&
           codec::is_known_prefix(tok.substr(0, us)) &&
           codec::is_valid_local_name(tok.substr(us + 1));
  }

  // Could this token take part in some valid sequence of the preset?
  bool known(std::string_view tok) const {
    if (is_keyword(tok) || var_name(tok) || codec::is_literal_token(tok)) return true;
    if (preset.split_uris) {
      return codec::is_known_prefix(tok) || codec::is_valid_local_name(tok);
    }
    return is_merged_term(tok);
  }

  const CodecPreset& preset;
  bool merged;
  std::string open, close, dot;
};

enum class It {
  kForm, kDistinct, kCount, kVar, kWhere, kOpen, kClose, kDot,
  kTerm, kLit, kFilter, kOrder, kLimit, kStray
};

struct Item {
  It type;
  std::size_t begin;
  std::size_t len;
  std::string var;  // kVar, kCount, kFilter, kOrder
};

bool positive_int(std::string_view tok) {
  if (tok.empty() || !std::isdigit(static_cast<unsigned char>(tok[0]))) return false;
  std::int64_t n = 0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), n);
  return ec == std::errc() && ptr == tok.data() + tok.size() && n > 0;
}

std::vector<Item> lex(const std::vector<std::string>& t, const Lexicon& lx) {
  std::vector<Item> items;
  std::size_t i = 0;
  auto at = [&](std::size_t k) -> std::string_view {
    return k < t.size() ? std::string_view(t[k]) : std::string_view();
  };
  while (i < t.size()) {
    std::string_view tok = t[i];
    Item it{It::kStray, i, 1, {}};
    if (lx.kw(tok, "select") || lx.kw(tok, "ask")) {
      it.type = It::kForm;
    } else if (lx.kw(tok, "distinct")) {
      it.type = It::kDistinct;
    } else if (lx.merged && lx.kw(tok, "agg_count") && lx.var_name(at(i + 1))) {
      it = {It::kCount, i, 2, *lx.var_name(at(i + 1))};
    } else if (!lx.merged && lx.kw(tok, "count") && at(i + 1) == "(" &&
               lx.var_name(at(i + 2)) && at(i + 3) == ")") {
      it = {It::kCount, i, 4, *lx.var_name(at(i + 2))};
    } else if (auto v = lx.var_name(tok)) {
      it = {It::kVar, i, 1, *v};
    } else if (lx.kw(tok, "where")) {
      it.type = It::kWhere;
    } else if (tok == lx.open) {
      it.type = It::kOpen;
    } else if (tok == lx.close) {
      it.type = It::kClose;
    } else if (tok == lx.dot) {
      it.type = It::kDot;
    } else if (lx.merged && lx.kw(tok, "filter") && lx.var_name(at(i + 1)) &&
               codec::is_comparator_token(at(i + 2), true) &&
               codec::is_literal_token(at(i + 3))) {
      it = {It::kFilter, i, 4, *lx.var_name(at(i + 1))};
    } else if (!lx.merged && lx.kw(tok, "filter") && at(i + 1) == "(" &&
               lx.var_name(at(i + 2)) &&
               codec::is_comparator_token(at(i + 3), false) &&
               codec::is_literal_token(at(i + 4)) && at(i + 5) == ")") {
      it = {It::kFilter, i, 6, *lx.var_name(at(i + 2))};
    } else if (lx.merged && (lx.kw(tok, "ord_asc") || lx.kw(tok, "ord_desc")) &&
               lx.var_name(at(i + 1))) {
      it = {It::kOrder, i, 2, *lx.var_name(at(i + 1))};
    } else if (!lx.merged && lx.kw(tok, "order") && lx.kw(at(i + 1), "by") &&
               (lx.kw(at(i + 2), "asc") || lx.kw(at(i + 2), "desc")) &&
               at(i + 3) == "(" && lx.var_name(at(i + 4)) && at(i + 5) == ")") {
      it = {It::kOrder, i, 6, *lx.var_name(at(i + 4))};
    } else if (lx.kw(tok, "limit") && positive_int(at(i + 1))) {
      it = {It::kLimit, i, 2, {}};
    } else if (lx.preset.split_uris && codec::is_known_prefix(tok) &&
               i + 1 < t.size() && codec::is_valid_local_name(at(i + 1))) {
      it = {It::kTerm, i, 2, {}};
    } else if (!lx.preset.split_uris && lx.is_merged_term(tok)) {
      it.type = It::kTerm;
    } else if (codec::is_literal_token(tok)) {
      it.type = It::kLit;
    }
    items.push_back(std::move(it));
    i += items.back().len;
  }
  return items;
}

struct Decision {
  bool keep = false;
  ActionKind drop_kind = ActionKind::kDroppedMisplaced;
};

struct Insert {
  std::string token;
  ActionKind kind;
};

class Repairer {
 public:
  Repairer(std::vector<std::string> tokens, const Lexicon& lx)
      : t_(std::move(tokens)), lx_(lx), items_(lex(t_, lx)),
        dec_(items_.size()), ins_(items_.size() + 1) {}

  // Returns the repaired tokens and appends actions with running positions.
  std::vector<std::string> run(std::vector<RepairAction>& actions) {
    structure();
    std::vector<std::string> out;
    for (std::size_t k = 0; k <= items_.size(); ++k) {
      for (const auto& ins : ins_[k]) {
        actions.push_back({ins.kind, ins.token, out.size(), true});
        out.push_back(ins.token);
      }
      if (k == items_.size()) break;
      const Item& it = items_[k];
      for (std::size_t j = it.begin; j < it.begin + it.len; ++j) {
        if (dec_[k].keep) {
          out.push_back(t_[j]);
        } else {
          actions.push_back({dec_[k].drop_kind, t_[j], out.size(), false});
        }
      }
    }
    return out;
  }

 private:
  void keep(std::size_t k) { dec_[k].keep = true; }

  void drop(std::size_t k, ActionKind kind = ActionKind::kDroppedMisplaced) {
    dec_[k].keep = false;
    It type = items_[k].type;
    dec_[k].drop_kind = (type == It::kOpen || type == It::kClose) &&
                                kind == ActionKind::kDroppedMisplaced
                            ? ActionKind::kBalancedBracket
                            : kind;
  }

  void insert(std::size_t before, std::string token, ActionKind kind) {
    ins_[before].push_back({std::move(token), kind});
  }

  It type(std::size_t k) const { return items_[k].type; }

  std::optional<std::size_t> find(std::size_t from, std::set<It> types) const {
    for (std::size_t k = from; k < items_.size(); ++k) {
      if (types.contains(items_[k].type)) return k;
    }
    return std::nullopt;
  }

  void structure() {
    const std::size_t n = items_.size();
    for (std::size_t k = 0; k < n; ++k) drop(k);

    auto form = find(0, {It::kForm});
    if (!form) throw Unrepairable("no query form token");
    keep(*form);
    const bool select = lx_.kw(t_[items_[*form].begin], "select");

    // Head: up to the first where or opening bracket, or failing those the
    // first item that can only belong to the body.
    std::size_t hb = n;
    if (auto b = find(*form + 1, {It::kWhere, It::kOpen})) {
      hb = *b;
    } else if (auto b2 = find(*form + 1, {It::kTerm, It::kLit, It::kDot,
                                          It::kFilter, It::kClose, It::kOrder,
                                          It::kLimit})) {
      hb = *b2;
    }
    std::optional<std::size_t> distinct, count;
    std::vector<std::size_t> head_vars;
    if (select) {
      for (std::size_t k = *form + 1; k < hb; ++k) {
        bool have_head = count || !head_vars.empty();
        if (type(k) == It::kDistinct && !distinct && !have_head) {
          distinct = k;
        } else if (type(k) == It::kCount && !have_head) {
          count = k;
        } else if (type(k) == It::kVar && !count) {
          head_vars.push_back(k);
        }
      }
    }

    std::size_t body_start;
    if (hb < n && type(hb) == It::kWhere) {
      keep(hb);
      if (hb + 1 < n && type(hb + 1) == It::kOpen) {
        keep(hb + 1);
        body_start = hb + 2;
      } else {
        insert(hb + 1, lx_.open, ActionKind::kInsertedKeyword);
        body_start = hb + 1;
      }
    } else if (hb < n && type(hb) == It::kOpen) {
      insert(hb, "where", ActionKind::kInsertedKeyword);
      keep(hb);
      body_start = hb + 1;
    } else {
      insert(hb, "where", ActionKind::kInsertedKeyword);
      insert(hb, lx_.open, ActionKind::kInsertedKeyword);
      body_start = hb;
    }

    // Body: triples per dot-separated segment, filters after the last one.
    std::size_t body_end = find(body_start, {It::kClose, It::kOrder, It::kLimit})
                               .value_or(n);
    std::vector<std::array<std::size_t, 3>> triples;
    std::vector<std::size_t> partial, dots, filters;
    auto flush = [&] {
      for (auto k : partial) drop(k, ActionKind::kDroppedFragment);
      partial.clear();
    };
    for (std::size_t k = body_start; k < body_end; ++k) {
      switch (type(k)) {
        case It::kTerm:
        case It::kVar:
        case It::kLit:
          if (partial.size() < 2 && type(k) == It::kLit) break;
          partial.push_back(k);
          if (partial.size() == 3) {
            triples.push_back({partial[0], partial[1], partial[2]});
            partial.clear();
          }
          break;
        case It::kDot:
          dots.push_back(k);
          flush();
          break;
        case It::kFilter:
          filters.push_back(k);
          break;
        default:
          break;
      }
    }
    flush();
    if (triples.empty()) throw Unrepairable("no complete triple pattern");

    std::set<std::string> bound;
    for (std::size_t j = 0; j < triples.size(); ++j) {
      for (auto k : triples[j]) {
        keep(k);
        if (type(k) == It::kVar) bound.insert(items_[k].var);
      }
      if (j == 0) continue;
      auto lo = triples[j - 1][2], hi = triples[j][0];
      auto dot = std::find_if(dots.begin(), dots.end(),
                              [&](std::size_t d) { return d > lo && d < hi; });
      if (dot != dots.end()) {
        keep(*dot);
      } else {
        insert(hi, lx_.dot, ActionKind::kInsertedKeyword);
      }
    }
    for (auto k : filters) {
      if (k > triples.back()[2] && bound.contains(items_[k].var)) keep(k);
    }

    if (select) {
      bool have_head = false;
      if (count && bound.contains(items_[*count].var)) {
        keep(*count);
        have_head = true;
      }
      for (auto k : head_vars) {
        if (bound.contains(items_[k].var)) {
          keep(k);
          have_head = true;
        }
      }
      if (!have_head) throw Unrepairable("no bound variable to select");
      if (distinct) keep(*distinct);
    }

    std::size_t mods = body_end;
    if (body_end < n && type(body_end) == It::kClose) {
      keep(body_end);
      mods = body_end + 1;
    } else {
      insert(body_end, lx_.close, ActionKind::kBalancedBracket);
    }
    if (!select) return;
    int state = 0;
    for (std::size_t k = mods; k < n; ++k) {
      if (type(k) == It::kOrder && state == 0 && bound.contains(items_[k].var)) {
        keep(k);
        state = 1;
      } else if (type(k) == It::kLimit && state <= 1) {
        keep(k);
        state = 2;
      }
    }
  }

  std::vector<std::string> t_;
  const Lexicon& lx_;
  std::vector<Item> items_;
  std::vector<Decision> dec_;
  std::vector<std::vector<Insert>> ins_;
};

bool decodes(const TokenSeq& tokens, const CodecPreset& preset) {
  try {
    codec::decode_sequence(tokens, preset);
    return true;
  } catch (const Error&) {
    return false;
  }
}

}  // namespace

RepairReport repair_sequence(const TokenSeq& tokens, const CodecPreset& preset) {
  if (decodes(tokens, preset)) return {{}, tokens};
  RepairReport report;
  std::vector<std::string> work = tokens.tokens();

  auto eos = std::find(work.begin(), work.end(), kEos);
  if (eos != work.end()) {
    report.actions.push_back({ActionKind::kTruncatedAfterEos, std::string(kEos),
                              static_cast<std::size_t>(eos - work.begin()), false});
    work.erase(eos, work.end());
  }

  Lexicon lx(preset);
  std::vector<std::string> kept;
  for (auto& tok : work) {
    bool reserved = std::find(kReserved.begin(), kReserved.end(), tok) != kReserved.end();
    if (reserved || !lx.known(tok)) {
      report.actions.push_back({ActionKind::kDroppedUnknown, tok, kept.size(), false});
    } else {
      kept.push_back(std::move(tok));
    }
  }

  Repairer repairer(std::move(kept), lx);
  report.repaired = TokenSeq(repairer.run(report.actions));
  // A failure here is a defect in the rules above, not bad input.
  codec::decode_sequence(report.repaired, preset);
  return report;
}

TokenSeq apply_actions(const TokenSeq& tokens,
                       const std::vector<RepairAction>& actions) {
  std::vector<std::string> work = tokens.tokens();
  for (const auto& a : actions) {
    bool ok = a.inserted ? a.position <= work.size()
                         : a.position < work.size() && work[a.position] == a.token;
    if (!ok) {
      throw Error(ErrorKind::kInvalidArgument, "interp.BadAction",
                  "action does not apply at position " + std::to_string(a.position));
    }
    if (a.kind == ActionKind::kTruncatedAfterEos) {
      work.erase(work.begin() + static_cast<std::ptrdiff_t>(a.position), work.end());
    } else if (a.inserted) {
      work.insert(work.begin() + static_cast<std::ptrdiff_t>(a.position), a.token);
    } else {
      work.erase(work.begin() + static_cast<std::ptrdiff_t>(a.position));
    }
  }
  return TokenSeq(std::move(work));
}

Interpretation interpret(const TokenSeq& tokens, const CodecPreset& preset) {
  if (tokens.empty()) throw Unrepairable("empty sequence");
  Interpretation out;
  out.report = repair_sequence(tokens, preset);
  out.sparql = codec::print_sparql(codec::decode_sequence(out.report.repaired, preset));
  return out;
}

std::string report_json(const RepairReport& report) {
  nlohmann::ordered_json j;
  j["actions"] = nlohmann::ordered_json::array();
  for (const auto& a : report.actions) {
    j["actions"].push_back({{"kind", action_name(a.kind)},
                            {"token", a.token},
                            {"position", a.position},
                            {"inserted", a.inserted}});
  }
  j["repaired"] = report.repaired.str();
  return j.dump();
}

}  // namespace nspm::interp
