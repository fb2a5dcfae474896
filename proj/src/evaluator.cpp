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

#include "nspm/evaluator.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

#include "nspm/interpreter.hpp"

namespace nspm::eval {

using codec::TokenSeq;

namespace {

void check_lengths(std::size_t a, std::size_t b) {
  if (a != b) {
    throw Error(ErrorKind::kInvalidArgument, "eval.LengthMismatch",
                "got " + std::to_string(a) + " candidates for " +
                    std::to_string(b) + " references");
  }
  if (a == 0) {
    throw Error(ErrorKind::kInvalidArgument, "eval.Empty", "nothing to score");
  }
}

std::unordered_map<std::string, std::size_t> ngrams(const TokenSeq& s,
                                                    std::size_t n) {
  std::unordered_map<std::string, std::size_t> out;
  for (std::size_t i = 0; i + n <= s.size(); ++i) {
    std::string key;
    for (std::size_t j = i; j < i + n; ++j) {
      key += s[j];
      key += '\x1f';
    }
    ++out[key];
  }
  return out;
}

// dbr entities replaced by one placeholder, so two queries that differ only
// in which resource they name print identically.
std::string entity_shape(codec::QueryAst ast) {
  auto mask = [](codec::PatternTerm& t) {
    if (auto* p = std::get_if<codec::PrefixedName>(&t); p && p->prefix == "dbr") {
      p->local = "ENTITY";
    }
  };
  for (auto& tp : ast.patterns) {
    mask(tp.subject);
    mask(tp.predicate);
    mask(tp.object);
  }
  return codec::print_sparql(ast);
}

}  // namespace

double bleu_corpus(const std::vector<TokenSeq>& candidates,
                   const std::vector<TokenSeq>& references) {
  check_lengths(candidates.size(), references.size());
  std::size_t c = 0, r = 0;
  double log_sum = 0.0;
  for (std::size_t n = 1; n <= 4; ++n) {
    std::size_t matched = 0, total = 0;
    for (std::size_t k = 0; k < candidates.size(); ++k) {
      auto cand = ngrams(candidates[k], n);
      auto ref = ngrams(references[k], n);
      for (const auto& [g, count] : cand) {
        total += count;
        auto it = ref.find(g);
        if (it != ref.end()) matched += std::min(count, it->second);
      }
    }
    if (matched == 0) return 0.0;
    log_sum += 0.25 * std::log(static_cast<double>(matched) / static_cast<double>(total));
  }
  for (std::size_t k = 0; k < candidates.size(); ++k) {
    c += candidates[k].size();
    r += references[k].size();
  }
  double bp = c > r ? 1.0 : std::exp(1.0 - static_cast<double>(r) / static_cast<double>(c));
  return bp * std::exp(log_sum);
}

std::optional<std::string> canonicalize(std::string_view sparql) {
  try {
    return codec::print_sparql(codec::parse_sparql(sparql));
  } catch (const Error&) {
    return std::nullopt;
  }
}

double exact_match_accuracy(const std::vector<std::string>& predictions,
                            const std::vector<std::string>& golds) {
  check_lengths(predictions.size(), golds.size());
  std::size_t matches = 0;
  for (std::size_t k = 0; k < predictions.size(); ++k) {
    auto p = canonicalize(predictions[k]);
    auto g = canonicalize(golds[k]);
    if (p && *p == g.value_or(golds[k])) ++matches;
  }
  return static_cast<double>(matches) / static_cast<double>(predictions.size());
}

std::string_view error_class_name(ErrorClass c) {
  switch (c) {
    case ErrorClass::kNone: return "none";
    case ErrorClass::kOov: return "oov";
    case ErrorClass::kEntityCollision: return "entity_collision_suspect";
    case ErrorClass::kStructural: return "structural";
  }
  return "none";
}

EvalReport evaluate(const nn::Seq2SeqModel& model,
                    const std::vector<gen::EncodedPair>& test,
                    const codec::CodecPreset& preset,
                    std::size_t max_decode_len) {
  if (test.empty()) {
    throw Error(ErrorKind::kInvalidArgument, "eval.Empty", "test set is empty");
  }
  EvalReport report;
  report.n = test.size();
  std::vector<TokenSeq> cands, refs;
  std::size_t matches = 0;
  for (const auto& pair : test) {
    ExampleResult ex;
    ex.nl = pair.nl;
    ex.gold = pair.query;
    ex.predicted = nn::translate(model, pair.nl, max_decode_len);
    auto gold_ast = codec::decode_sequence(pair.query, preset);
    ex.gold_sparql = codec::print_sparql(gold_ast);

    std::optional<codec::QueryAst> pred_ast;
    try {
      auto res = interp::interpret(ex.predicted, preset);
      ex.repair_actions = res.report.actions.size();
      ex.predicted_sparql = res.sparql;
      pred_ast = codec::decode_sequence(res.report.repaired, preset);
    } catch (const interp::Unrepairable&) {
    }
    ex.match = ex.predicted_sparql && *ex.predicted_sparql == ex.gold_sparql;
    if (ex.match) {
      ++matches;
    } else if (!pred_ast) {
      ex.error = ErrorClass::kStructural;
    } else {
      bool oov = false;
      for (const auto& t : ex.predicted) oov |= t == nn::Vocab::kUnkToken;
      for (const auto& t : pair.nl) oov |= !model.source_vocab().contains(t);
      for (const auto& t : pair.query) oov |= !model.target_vocab().contains(t);
      if (oov) {
        ex.error = ErrorClass::kOov;
      } else if (entity_shape(*pred_ast) == entity_shape(gold_ast)) {
        ex.error = ErrorClass::kEntityCollision;
      } else {
        ex.error = ErrorClass::kStructural;
      }
    }
    if (ex.error != ErrorClass::kNone) ++report.errors_by_class[ex.error];
    cands.push_back(ex.predicted);
    refs.push_back(ex.gold);
    report.per_example.push_back(std::move(ex));
  }
  report.bleu = bleu_corpus(cands, refs);
  report.accuracy = static_cast<double>(matches) / static_cast<double>(report.n);
  return report;
}

std::string report_json(const EvalReport& report, std::string_view encoding) {
  nlohmann::ordered_json j;
  j["encoding"] = encoding;
  j["accuracy_kind"] = "syntactic exact match on canonical query strings";
  j["n"] = report.n;
  j["bleu"] = report.bleu;
  j["accuracy"] = report.accuracy;
  auto& errs = j["errors_by_class"];
  for (auto c : {ErrorClass::kOov, ErrorClass::kEntityCollision, ErrorClass::kStructural}) {
    auto it = report.errors_by_class.find(c);
    errs[std::string(error_class_name(c))] = it == report.errors_by_class.end() ? 0 : it->second;
  }
  j["per_example"] = nlohmann::ordered_json::array();
  for (const auto& ex : report.per_example) {
    nlohmann::ordered_json e;
    e["nl"] = ex.nl.str();
    e["gold"] = ex.gold.str();
    e["predicted"] = ex.predicted.str();
    e["gold_sparql"] = ex.gold_sparql;
    e["predicted_sparql"] = ex.predicted_sparql ? nlohmann::ordered_json(*ex.predicted_sparql)
                                                : nlohmann::ordered_json(nullptr);
    e["match"] = ex.match;
    e["repair_actions"] = ex.repair_actions;
    e["error_class"] = error_class_name(ex.error);
    j["per_example"].push_back(std::move(e));
  }
  return j.dump(2) + "\n";
}

std::optional<int> convergence_epoch(const std::vector<nn::CurvePoint>& curve,
                                     double tolerance) {
  std::optional<double> final;
  for (auto it = curve.rbegin(); it != curve.rend(); ++it) {
    if (it->dev_bleu) {
      final = it->dev_bleu;
      break;
    }
  }
  if (!final) return std::nullopt;
  for (const auto& p : curve) {
    if (p.dev_bleu && std::abs(*p.dev_bleu - *final) <= tolerance) return p.epoch;
  }
  return std::nullopt;
}

namespace {

std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

std::string runtime_text(double seconds) {
  auto total = static_cast<long long>(std::llround(seconds));
  char buf[32];
  std::snprintf(buf, sizeof buf, "%lld:%02lld:%02lld", total / 3600,
                (total / 60) % 60, total % 60);
  return buf;
}

}  // namespace

std::string format_table(const std::vector<TableRow>& rows) {
  std::vector<std::vector<std::string>> cells{
      {"Encoding", "Test BLEU", "Accuracy", "Runtime", "Convergence",
       "Mean query len"}};
  for (const auto& r : rows) {
    if (!r.error.empty()) {
      cells.push_back({r.encoding, "failed: " + r.error, "", "", "", ""});
      continue;
    }
    cells.push_back({
        r.encoding,
        r.bleu ? fmt("%.2f%%", 100.0 * *r.bleu) : "-",
        r.accuracy ? fmt("%.2f%%", 100.0 * *r.accuracy) : "-",
        r.runtime_seconds ? runtime_text(*r.runtime_seconds) : "-",
        r.convergence ? "epoch " + std::to_string(*r.convergence) : "-",
        r.mean_query_length ? fmt("%.2f", *r.mean_query_length) : "-",
    });
  }
  std::vector<std::size_t> width(cells[0].size(), 0);
  for (const auto& row : cells) {
    for (std::size_t i = 0; i < row.size(); ++i) width[i] = std::max(width[i], row[i].size());
  }
  std::ostringstream out;
  for (std::size_t k = 0; k < cells.size(); ++k) {
    for (std::size_t i = 0; i < cells[k].size(); ++i) {
      if (i > 0) out << " | ";
      out << cells[k][i] << std::string(width[i] - cells[k][i].size(), ' ');
    }
    out << '\n';
    if (k == 0) {
      for (std::size_t i = 0; i < width.size(); ++i) {
        if (i > 0) out << "-+-";
        out << std::string(width[i], '-');
      }
      out << '\n';
    }
  }
  return out.str();
}

}  // namespace nspm::eval
