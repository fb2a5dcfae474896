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

#include "nspm/template_engine.hpp"

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <istream>
#include <set>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

#include "nspm/util.hpp"

namespace nspm::gen {

namespace {

using nlohmann::json;

std::vector<std::string> split_on(std::string_view s, char sep) {
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

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

// Placeholder letters in a pattern, e.g. {"A", "B"}.
std::set<std::string> placeholders_in(std::string_view s) {
  std::set<std::string> out;
  for (std::size_t i = 0; i + 2 < s.size(); ++i) {
    if (s[i] == '<' && std::isupper(static_cast<unsigned char>(s[i + 1])) &&
        s[i + 2] == '>') {
      out.insert(std::string(1, s[i + 1]));
    }
  }
  return out;
}

std::string substitute(std::string_view pattern,
                       const std::map<std::string, std::string>& values) {
  std::string out;
  for (std::size_t i = 0; i < pattern.size(); ++i) {
    if (pattern[i] == '<' && i + 2 < pattern.size() && pattern[i + 2] == '>') {
      auto it = values.find(std::string(1, pattern[i + 1]));
      if (it != values.end()) {
        out += it->second;
        i += 2;
        continue;
      }
    }
    out.push_back(pattern[i]);
  }
  return out;
}

Error template_error(std::string code, const std::string& id,
                     const std::string& why) {
  return Error(ErrorKind::kData, "gen." + code, "template " + id + ": " + why);
}

struct Slot {
  const kb::EntityRecord* entity;
  codec::PrefixedName name;
};

std::optional<Slot> slot_for(const kb::EntityCatalog& catalog,
                             const std::string& uri) {
  const kb::EntityRecord& r = catalog.at(uri);
  auto name = codec::compact_iri(r.uri);
  if (!name) return std::nullopt;
  return Slot{&r, std::move(*name)};
}

std::vector<Slot> eligible(const kb::EntityCatalog& catalog,
                           const QueryTemplate& t, const std::string& letter) {
  const std::string& cls = t.placeholder_classes.at(letter);
  std::vector<Slot> out;
  for (const auto& uri : catalog.members(cls)) {
    if (auto s = slot_for(catalog, uri)) out.push_back(std::move(*s));
  }
  if (out.empty()) {
    throw Error(ErrorKind::kData, "gen.NoEligibleEntities",
                "template " + t.id + ": no entity of class " + cls);
  }
  return out;
}

std::string format_indices(const std::vector<std::size_t>& idx) {
  std::string out;
  for (auto i : idx) out += std::to_string(i) + "\n";
  return out;
}

std::vector<std::size_t> parse_indices(const std::string& path,
                                       std::size_t limit) {
  std::vector<std::size_t> out;
  for (const auto& line : read_lines(path)) {
    if (line.empty()) continue;
    std::size_t v = 0;
    auto [ptr, ec] = std::from_chars(line.data(), line.data() + line.size(), v);
    if (ec != std::errc() || ptr != line.data() + line.size() || v >= limit) {
      throw Error(ErrorKind::kParse, "gen.BadDataset",
                  "bad index '" + line + "' in " + path);
    }
    out.push_back(v);
  }
  return out;
}

}  // namespace

std::string expand_class(std::string_view text) {
  std::string s = trim(text);
  if (s.size() >= 2 && s.front() == '<' && s.back() == '>') {
    return s.substr(1, s.size() - 2);
  }
  auto colon = s.find(':');
  if (colon != std::string::npos && codec::is_known_prefix(s.substr(0, colon))) {
    return codec::expand_prefixed_name(
        {s.substr(0, colon), s.substr(colon + 1)});
  }
  return s;
}

void validate(const GeneratorConfig& config) {
  if (config.top_entity_count < 1) {
    throw Error(ErrorKind::kInvalidArgument, "gen.BadConfig",
                "top entity count must be at least 1");
  }
  const auto& p = codec::preset(config.preset);
  if (config.preset == codec::PresetId::kV4 && !config.direct_translations) {
    throw Error(ErrorKind::kInvalidArgument, "gen.BadConfig",
                "preset v4 implies direct entity translations");
  }
  if (config.direct_translations && !p.merged_tokens) {
    throw Error(ErrorKind::kInvalidArgument, "gen.BadConfig",
                "direct translations need a merged-token preset (v3/v4)");
  }
  if (config.max_pairs && *config.max_pairs == 0) {
    throw Error(ErrorKind::kInvalidArgument, "gen.BadConfig",
                "max pairs must be positive");
  }
}

std::vector<QueryTemplate> parse_templates(std::istream& tsv) {
  std::vector<QueryTemplate> out;
  std::set<std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(tsv, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::string trimmed = trim(line);
    if (trimmed.empty() || trimmed.front() == '#') continue;
    auto cols = split_on(line, '\t');
    if (cols.size() != 4) {
      throw PositionedError(ErrorKind::kParse, "gen.BadTemplate", line_no,
                            "template line " + std::to_string(line_no) +
                                ": expected 4 tab-separated columns");
    }
    QueryTemplate t;
    t.id = trim(cols[0]);
    t.nl_pattern = trim(cols[2]);
    t.sparql_pattern = trim(cols[3]);
    if (t.id.empty() || !seen.insert(t.id).second) {
      throw template_error("BadTemplate", t.id, "missing or duplicate id");
    }
    auto nl_ph = placeholders_in(t.nl_pattern);
    auto ql_ph = placeholders_in(t.sparql_pattern);
    if (nl_ph != ql_ph) {
      throw template_error("PlaceholderMismatch", t.id,
                           "NL and SPARQL placeholders differ");
    }
    if (nl_ph.empty() || nl_ph.size() > 2) {
      throw template_error("PlaceholderMismatch", t.id,
                           "templates need one or two placeholders");
    }
    std::vector<std::string> classes;
    for (auto& c : split_on(cols[1], ';')) {
      if (!trim(c).empty()) classes.push_back(expand_class(c));
    }
    if (classes.size() != nl_ph.size()) {
      throw template_error("PlaceholderMismatch", t.id,
                           "one class per placeholder expected");
    }
    std::size_t k = 0;
    for (const auto& letter : nl_ph) t.placeholder_classes[letter] = classes[k++];

    std::map<std::string, std::string> probe;
    for (const auto& letter : nl_ph) probe[letter] = "dbr:Probe_" + letter;
    try {
      codec::parse_sparql(substitute(t.sparql_pattern, probe));
    } catch (const codec::SyntaxError& e) {
      throw template_error("BadPattern", t.id, e.what());
    }
    out.push_back(std::move(t));
  }
  return out;
}

std::int64_t entity_frequency(std::int64_t rank, std::int64_t top_count) {
  if (rank < 1 || top_count < 1) {
    throw Error(ErrorKind::kInvalidArgument, "gen.BadConfig",
                "rank and top count must be positive");
  }
  // round(K / rank) with halves rounded up, in integers.
  std::int64_t rounded = (2 * top_count + rank) / (2 * rank);
  return std::max<std::int64_t>(1, rounded);
}

std::vector<EncodedPair> instantiate(const std::vector<QueryTemplate>& templates,
                                     const kb::EntityCatalog& catalog,
                                     const GeneratorConfig& config) {
  validate(config);
  if (templates.empty()) {
    throw Error(ErrorKind::kInvalidArgument, "gen.NoTemplates",
                "no templates to instantiate");
  }
  if (catalog.empty()) {
    throw Error(ErrorKind::kInvalidArgument, "kb.EmptyCatalog",
                "catalog is empty");
  }
  const auto& preset = codec::preset(config.preset);
  std::vector<EncodedPair> out;

  auto emit = [&](const QueryTemplate& t, const std::vector<const Slot*>& slots) {
    std::map<std::string, std::string> labels, names;
    std::vector<std::string> uris;
    std::size_t k = 0;
    for (const auto& [letter, cls] : t.placeholder_classes) {
      labels[letter] = slots[k]->entity->preferred_label();
      names[letter] = slots[k]->name.prefix + ":" + slots[k]->name.local;
      uris.push_back(slots[k]->entity->uri);
      ++k;
    }
    auto ast = codec::parse_sparql(substitute(t.sparql_pattern, names));
    out.push_back(EncodedPair{codec::tokenize_nl(substitute(t.nl_pattern, labels)),
                              codec::encode_query(ast, preset), t.id,
                              std::move(uris)});
  };

  for (const auto& t : templates) {
    if (t.placeholder_count() == 2 && !config.allow_multi_placeholder) continue;
    auto letters = t.placeholder_classes;
    auto first = eligible(catalog, t, letters.begin()->first);
    if (t.placeholder_count() == 1) {
      for (const auto& a : first) {
        auto n = entity_frequency(a.entity->rank, config.top_entity_count);
        for (std::int64_t c = 0; c < n; ++c) emit(t, {&a});
      }
      continue;
    }
    auto second = eligible(catalog, t, std::next(letters.begin())->first);
    std::size_t cursor = 0;
    for (const auto& a : first) {
      auto n = entity_frequency(a.entity->rank, config.top_entity_count);
      for (std::int64_t c = 0; c < n; ++c) {
        const Slot* b = &second[cursor++ % second.size()];
        if (b->entity == a.entity && second.size() > 1) {
          b = &second[cursor++ % second.size()];
        }
        emit(t, {&a, b});
      }
    }
  }

  Rng rng(mix64(config.seed ^ 0x67656E6572617465ULL));
  rng.shuffle(out);
  if (config.max_pairs && out.size() > *config.max_pairs) {
    out.resize(*config.max_pairs);
  }
  return out;
}

DirectTranslations direct_translations(const kb::EntityCatalog& catalog,
                                       const codec::CodecPreset& preset) {
  if (!preset.merged_tokens) {
    throw Error(ErrorKind::kInvalidArgument, "gen.BadConfig",
                "direct translations need a merged-token preset (v3/v4)");
  }
  DirectTranslations out;
  for (const auto& r : catalog.entities()) {
    auto name = codec::compact_iri(r.uri);
    std::optional<codec::TokenSeq> nl;
    try {
      nl = codec::tokenize_nl(r.preferred_label());
    } catch (const Error&) {
    }
    if (!name || !nl) {
      ++out.skipped;
      continue;
    }
    out.pairs.push_back(EncodedPair{
        std::move(*nl), codec::TokenSeq(codec::encode_term(*name, preset)),
        std::string(kDirectTemplateId), {r.uri}});
  }
  return out;
}

Ratios parse_ratios(std::string_view text) {
  auto parts = split_on(text, ':');
  Ratios r;
  int* fields[] = {&r.train, &r.dev, &r.test};
  bool ok = parts.size() == 3;
  for (std::size_t i = 0; ok && i < 3; ++i) {
    auto s = trim(parts[i]);
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), *fields[i]);
    ok = !s.empty() && ec == std::errc() && ptr == s.data() + s.size();
  }
  if (!ok) {
    throw Error(ErrorKind::kInvalidArgument, "gen.BadRatios",
                "ratios must look like 80:10:10");
  }
  return r;
}

Split split_dataset(const std::vector<EncodedPair>& pairs, Ratios ratios,
                    std::uint64_t seed) {
  if (ratios.train < 0 || ratios.dev < 0 || ratios.test < 0 ||
      ratios.train + ratios.dev + ratios.test != 100) {
    throw Error(ErrorKind::kInvalidArgument, "gen.BadRatios",
                "ratios must be non-negative and sum to 100");
  }
  struct Group {
    std::string nl;
    std::vector<std::size_t> members;
    bool has_template_pair = false;
  };
  std::vector<Group> groups;
  std::unordered_map<std::string, std::size_t> by_nl;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    std::string nl = pairs[i].nl.str();
    auto [it, fresh] = by_nl.emplace(nl, groups.size());
    if (fresh) groups.push_back(Group{nl, {}, false});
    Group& g = groups[it->second];
    g.members.push_back(i);
    g.has_template_pair |= !pairs[i].is_direct();
  }

  std::vector<std::pair<std::uint64_t, std::size_t>> order;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    if (groups[g].has_template_pair) {
      order.emplace_back(mix64(seed ^ fnv1a64(groups[g].nl)), g);
    }
  }
  std::sort(order.begin(), order.end(), [&](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first < b.first;
    return groups[a.second].nl < groups[b.second].nl;
  });

  const std::size_t n = order.size();
  const std::size_t n_test = n * static_cast<std::size_t>(ratios.test) / 100;
  const std::size_t n_dev = n * static_cast<std::size_t>(ratios.dev) / 100;
  const std::size_t n_train = n - n_test - n_dev;
  if ((ratios.train > 0 && n_train == 0) || (ratios.dev > 0 && n_dev == 0) ||
      (ratios.test > 0 && n_test == 0)) {
    throw Error(ErrorKind::kData, "gen.TooSmall",
                std::to_string(n) + " distinct questions are too few for " +
                    std::to_string(ratios.train) + ":" +
                    std::to_string(ratios.dev) + ":" +
                    std::to_string(ratios.test));
  }

  auto representative = [&](const Group& g) {
    for (auto i : g.members) {
      if (!pairs[i].is_direct()) return i;
    }
    return g.members.front();
  };
  Split split;
  for (std::size_t k = 0; k < n; ++k) {
    const Group& g = groups[order[k].second];
    if (k < n_test) {
      split.test.push_back(representative(g));
    } else if (k < n_test + n_dev) {
      split.dev.push_back(representative(g));
    } else {
      split.train.insert(split.train.end(), g.members.begin(), g.members.end());
    }
  }
  for (const auto& g : groups) {
    if (!g.has_template_pair) {
      split.train.insert(split.train.end(), g.members.begin(), g.members.end());
    }
  }
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.dev.begin(), split.dev.end());
  std::sort(split.test.begin(), split.test.end());
  return split;
}

std::vector<EncodedPair> Dataset::partition(std::string_view name) const {
  if (name == "all") return pairs;
  if (!split) {
    throw Error(ErrorKind::kData, "gen.NoSplit", "dataset has not been split");
  }
  const std::vector<std::size_t>* idx = nullptr;
  if (name == "train") idx = &split->train;
  if (name == "dev") idx = &split->dev;
  if (name == "test") idx = &split->test;
  if (idx == nullptr) {
    throw Error(ErrorKind::kInvalidArgument, "gen.BadPartition",
                "unknown partition " + std::string(name));
  }
  std::vector<EncodedPair> out;
  out.reserve(idx->size());
  for (auto i : *idx) out.push_back(pairs.at(i));
  return out;
}

void write_dataset(const std::string& dir, const Dataset& dataset) {
  std::string nl, ql, meta;
  for (const auto& p : dataset.pairs) {
    nl += p.nl.str() + "\n";
    ql += p.query.str() + "\n";
    json m = {{"template_id", p.template_id}, {"entity_uris", p.entity_uris}};
    meta += m.dump() + "\n";
  }
  json manifest = {
      {"preset", std::string(codec::preset(dataset.preset).name)},
      {"pairs", dataset.pairs.size()},
  };
  if (dataset.split) {
    manifest["split"] = {{"train", dataset.split->train.size()},
                         {"dev", dataset.split->dev.size()},
                         {"test", dataset.split->test.size()}};
  }
  write_file_atomic(dir + "/data.nl", nl);
  write_file_atomic(dir + "/data.ql", ql);
  write_file_atomic(dir + "/meta.jsonl", meta);
  if (dataset.split) {
    write_file_atomic(dir + "/split.train.idx", format_indices(dataset.split->train));
    write_file_atomic(dir + "/split.dev.idx", format_indices(dataset.split->dev));
    write_file_atomic(dir + "/split.test.idx", format_indices(dataset.split->test));
  }
  write_file_atomic(dir + "/dataset.json", manifest.dump(2) + "\n");
}

Dataset read_dataset(const std::string& dir) {
  Dataset ds;
  json manifest;
  try {
    manifest = json::parse(read_file(dir + "/dataset.json"));
    ds.preset = codec::preset(manifest.at("preset").get<std::string>()).id;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kParse, "gen.BadDataset",
                "bad dataset.json in " + dir + ": " + e.what());
  }
  const auto& preset = codec::preset(ds.preset);
  auto nl = read_lines(dir + "/data.nl");
  auto ql = read_lines(dir + "/data.ql");
  auto meta = read_lines(dir + "/meta.jsonl");
  if (nl.size() != ql.size() || nl.size() != meta.size()) {
    throw Error(ErrorKind::kParse, "gen.BadDataset",
                "data.nl, data.ql and meta.jsonl are not line-aligned in " + dir);
  }
  ds.pairs.reserve(nl.size());
  for (std::size_t i = 0; i < nl.size(); ++i) {
    EncodedPair p;
    p.nl = codec::parse_sequence_line(nl[i], codec::preset(codec::PresetId::kV3));
    p.query = codec::parse_sequence_line(ql[i], preset);
    try {
      auto m = json::parse(meta[i]);
      p.template_id = m.at("template_id").get<std::string>();
      p.entity_uris = m.at("entity_uris").get<std::vector<std::string>>();
    } catch (const json::exception& e) {
      throw Error(ErrorKind::kParse, "gen.BadDataset",
                  "meta.jsonl line " + std::to_string(i + 1) + ": " + e.what());
    }
    ds.pairs.push_back(std::move(p));
  }
  namespace fs = std::filesystem;
  if (fs::exists(dir + "/split.train.idx")) {
    Split s;
    s.train = parse_indices(dir + "/split.train.idx", ds.pairs.size());
    s.dev = parse_indices(dir + "/split.dev.idx", ds.pairs.size());
    s.test = parse_indices(dir + "/split.test.idx", ds.pairs.size());
    ds.split = std::move(s);
  }
  return ds;
}

}  // namespace nspm::gen
