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

// End-to-end orchestration shared by the C API and the command line:
// ingest -> generate -> split -> train -> evaluate, plus preset ablations.

#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "nspm/evaluator.hpp"
#include "nspm/kb_catalog.hpp"
#include "nspm/learner.hpp"
#include "nspm/template_engine.hpp"

namespace nspm::pipeline {

// One row of the encoding ladder: a codec preset plus generator switches.
struct PresetRow {
  std::string_view name;
  codec::PresetId codec;
  bool multi_placeholder;
  bool direct_translations;
};

const std::vector<PresetRow>& preset_rows();
// Throws cli.UnknownPreset.
const PresetRow& preset_row(std::string_view name);

struct PipelineConfig {
  std::string triples;
  std::string templates;
  std::string ranking;      // optional, empty when unused
  std::string entity_list;  // optional
  std::string target_class; // optional
  std::string label_predicate{kb::kRdfsLabel};
  std::string type_predicate{kb::kRdfType};
  std::string out = "run";
  std::string preset = "v3";
  std::uint64_t seed = 0;
  gen::Ratios ratios;
  std::int64_t top_entity_count = 10;
  std::optional<std::size_t> max_pairs;
  int min_count = 1;
  nn::ModelConfig model;
  nn::TrainConfig train;
};

// Defaults with the data directory's movie subset filled in.
PipelineConfig default_config(const std::string& data_dir);

// `key = value` assignment; throws cli.BadConfig on unknown keys or values.
void apply_setting(PipelineConfig& config, std::string_view key, std::string_view value);
// Flat key/value text: one `key = value` per line, '#' comments.
void apply_config_text(PipelineConfig& config, std::string_view text);
std::vector<std::string> config_keys();
// Every setting as text, keyed like apply_setting; feeding the pairs back
// through apply_setting reproduces the configuration.
std::map<std::string, std::string> describe(const PipelineConfig& config);

// Stages. Each is usable on its own.
kb::EntityCatalog ingest(const PipelineConfig& config);
gen::Dataset generate(const PipelineConfig& config, const kb::EntityCatalog& catalog);
void split(gen::Dataset& dataset, const PipelineConfig& config);

struct TrainOutcome {
  nn::Seq2SeqModel model;
  std::vector<nn::CurvePoint> curve;
};
// Vocabularies from the train partition, then training with dev BLEU.
TrainOutcome train(const gen::Dataset& dataset, const PipelineConfig& config,
                   std::ostream* log = nullptr);

struct RunResult {
  eval::EvalReport report;
  std::vector<nn::CurvePoint> curve;
  double seconds = 0.0;
  double mean_query_length = 0.0;
  std::size_t train_size = 0, dev_size = 0, test_size = 0;
};

// Writes catalog.tsv, dataset/, model.json, curve.csv, report.json and
// table.txt under config.out; wall-clock goes to timing.json only, so every
// other artifact is reproducible byte for byte.
RunResult run_pipeline(const PipelineConfig& config, std::ostream* log = nullptr);

// One pipeline per preset under out/<preset>/; a failing row is reported
// and the others continue. Writes out/ablation.txt.
std::vector<eval::TableRow> run_ablation(const PipelineConfig& config,
                                         const std::vector<std::string>& presets,
                                         std::ostream* log = nullptr);

eval::TableRow table_row(std::string_view preset, const RunResult& result);

}  // namespace nspm::pipeline
