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

// BLEU, exact-match accuracy and evaluation reports.

#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "nspm/learner.hpp"
#include "nspm/sparql_codec.hpp"
#include "nspm/template_engine.hpp"

namespace nspm::eval {

// Corpus BLEU-4, uniform weights, no smoothing. Throws eval.LengthMismatch
// on unequal lists and eval.Empty on no pairs.
double bleu_corpus(const std::vector<codec::TokenSeq>& candidates,
                   const std::vector<codec::TokenSeq>& references);

// parse_sparql then print_sparql; nullopt when the text does not parse.
std::optional<std::string> canonicalize(std::string_view sparql);

// Unparseable predictions count as mismatches.
double exact_match_accuracy(const std::vector<std::string>& predictions,
                            const std::vector<std::string>& golds);

enum class ErrorClass { kNone, kOov, kEntityCollision, kStructural };
std::string_view error_class_name(ErrorClass c);

struct ExampleResult {
  codec::TokenSeq nl;
  codec::TokenSeq gold;
  codec::TokenSeq predicted;  // raw learner output
  std::string gold_sparql;
  std::optional<std::string> predicted_sparql;  // nullopt when unrepairable
  bool match = false;
  std::size_t repair_actions = 0;
  ErrorClass error = ErrorClass::kNone;
};

struct EvalReport {
  double bleu = 0.0;
  double accuracy = 0.0;
  std::size_t n = 0;
  std::vector<ExampleResult> per_example;
  std::map<ErrorClass, std::size_t> errors_by_class;
};

// Translates, interprets and scores every pair. BLEU is computed on raw
// token sequences, accuracy on canonical query strings.
EvalReport evaluate(const nn::Seq2SeqModel& model,
                    const std::vector<gen::EncodedPair>& test,
                    const codec::CodecPreset& preset,
                    std::size_t max_decode_len = 60);

std::string report_json(const EvalReport& report, std::string_view encoding);

// First recorded epoch whose dev BLEU lies within `tolerance` of the final
// recorded value.
std::optional<int> convergence_epoch(const std::vector<nn::CurvePoint>& curve,
                                     double tolerance = 0.005);

struct TableRow {
  std::string encoding;
  std::optional<double> bleu;
  std::optional<double> accuracy;
  std::optional<double> runtime_seconds;
  std::optional<int> convergence;
  std::optional<double> mean_query_length;
  std::string error;  // non-empty for a failed row
};

std::string format_table(const std::vector<TableRow>& rows);

}  // namespace nspm::eval
