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

#include "nspm/pipeline.hpp"

#include <charconv>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "nspm/util.hpp"

namespace nspm::pipeline {

namespace fs = std::filesystem;

const std::vector<PresetRow>& preset_rows() {
  using codec::PresetId;
  static const std::vector<PresetRow> rows{
      {"v1", PresetId::kV1, false, false},    {"v1.1", PresetId::kV1_1, false, false},
      {"v2", PresetId::kV1_1, true, false},   {"v2.1", PresetId::kV2_1, true, false},
      {"v3", PresetId::kV3, true, false},     {"v4", PresetId::kV4, true, true},
  };
  return rows;
}

const PresetRow& preset_row(std::string_view name) {
  for (const auto& r : preset_rows()) {
    if (r.name == name) return r;
  }
  throw Error(ErrorKind::kInvalidArgument, "cli.UnknownPreset",
              "unknown preset " + std::string(name) + " (expected v1, v1.1, v2, v2.1, v3 or v4)");
}

PipelineConfig default_config(const std::string& data_dir) {
  PipelineConfig c;
  c.triples = (fs::path(data_dir) / "movies.nt").string();
  c.templates = (fs::path(data_dir) / "movies_templates.tsv").string();
  return c;
}

namespace {

[[noreturn]] void bad(std::string_view key, std::string_view value, std::string_view why) {
  throw Error(ErrorKind::kInvalidArgument, "cli.BadConfig",
              std::string(key) + " = " + std::string(value) + ": " + std::string(why));
}

template <typename T>
T number(std::string_view key, std::string_view value) {
  T out{};
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (value.empty() || ec != std::errc() || ptr != value.data() + value.size()) {
    bad(key, value, "not a number");
  }
  return out;
}

bool boolean(std::string_view key, std::string_view value) {
  if (value == "true" || value == "1" || value == "on" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "off" || value == "no") return false;
  bad(key, value, "expected true or false");
}

std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

using Setter = void (*)(PipelineConfig&, std::string_view, std::string_view);

const std::map<std::string, Setter, std::less<>>& setters() {
  static const std::map<std::string, Setter, std::less<>> m{
      {"triples", [](PipelineConfig& c, auto, auto v) { c.triples = v; }},
      {"templates", [](PipelineConfig& c, auto, auto v) { c.templates = v; }},
      {"ranking", [](PipelineConfig& c, auto, auto v) { c.ranking = v; }},
      {"entity_list", [](PipelineConfig& c, auto, auto v) { c.entity_list = v; }},
      {"target_class", [](PipelineConfig& c, auto, auto v) { c.target_class = v; }},
      {"label_predicate", [](PipelineConfig& c, auto, auto v) { c.label_predicate = v; }},
      {"type_predicate", [](PipelineConfig& c, auto, auto v) { c.type_predicate = v; }},
      {"out", [](PipelineConfig& c, auto, auto v) { c.out = v; }},
      {"preset", [](PipelineConfig& c, auto, auto v) {
         c.preset = std::string(preset_row(v).name);
       }},
      {"seed", [](PipelineConfig& c, auto k, auto v) { c.seed = number<std::uint64_t>(k, v); }},
      {"ratios", [](PipelineConfig& c, auto, auto v) { c.ratios = gen::parse_ratios(v); }},
      {"top_entity_count", [](PipelineConfig& c, auto k, auto v) {
         c.top_entity_count = number<std::int64_t>(k, v);
       }},
      {"max_pairs", [](PipelineConfig& c, auto k, auto v) {
         if (v == "none") {
           c.max_pairs.reset();
         } else {
           c.max_pairs = number<std::size_t>(k, v);
         }
       }},
      {"min_count", [](PipelineConfig& c, auto k, auto v) { c.min_count = number<int>(k, v); }},
      {"embed_dim", [](PipelineConfig& c, auto k, auto v) { c.model.embed_dim = number<int>(k, v); }},
      {"hidden_dim", [](PipelineConfig& c, auto k, auto v) { c.model.hidden_dim = number<int>(k, v); }},
      {"num_layers", [](PipelineConfig& c, auto k, auto v) { c.model.num_layers = number<int>(k, v); }},
      {"dropout", [](PipelineConfig& c, auto k, auto v) { c.model.dropout = number<double>(k, v); }},
      {"bidirectional", [](PipelineConfig& c, auto k, auto v) { c.model.bidirectional = boolean(k, v); }},
      {"epochs", [](PipelineConfig& c, auto k, auto v) { c.train.epochs = number<int>(k, v); }},
      {"batch_size", [](PipelineConfig& c, auto k, auto v) { c.train.batch_size = number<int>(k, v); }},
      {"learning_rate", [](PipelineConfig& c, auto k, auto v) {
         c.train.learning_rate = number<double>(k, v);
       }},
      {"optimizer", [](PipelineConfig& c, auto k, auto v) {
         if (v == "adam") {
           c.train.optimizer = nn::Optimizer::kAdam;
         } else if (v == "sgd") {
           c.train.optimizer = nn::Optimizer::kSgd;
         } else {
           bad(k, v, "expected adam or sgd");
         }
       }},
      {"grad_clip_norm", [](PipelineConfig& c, auto k, auto v) {
         c.train.grad_clip_norm = number<double>(k, v);
       }},
      {"eval_every", [](PipelineConfig& c, auto k, auto v) { c.train.eval_every = number<int>(k, v); }},
      {"max_decode_len", [](PipelineConfig& c, auto k, auto v) {
         c.train.max_decode_len = number<std::size_t>(k, v);
       }},
  };
  return m;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIo, "io.OpenFailed", "cannot open " + path);
  return in;
}

std::vector<nn::TrainingPair> training_pairs(const std::vector<gen::EncodedPair>& pairs) {
  std::vector<nn::TrainingPair> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) out.push_back({p.nl, p.query});
  return out;
}

}  // namespace

void apply_setting(PipelineConfig& config, std::string_view key, std::string_view value) {
  auto it = setters().find(key);
  if (it == setters().end()) bad(key, value, "unknown key");
  if (value.empty() && key != "ranking" && key != "entity_list" && key != "target_class") {
    bad(key, value, "empty value");
  }
  it->second(config, key, value);
}

void apply_config_text(PipelineConfig& config, std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw PositionedError(ErrorKind::kParse, "cli.BadConfig", line_no,
                            "config line " + std::to_string(line_no) + ": expected key = value");
    }
    apply_setting(config, trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
  }
}

std::vector<std::string> config_keys() {
  std::vector<std::string> out;
  for (const auto& [k, v] : setters()) out.push_back(k);
  return out;
}

std::map<std::string, std::string> describe(const PipelineConfig& c) {
  auto num = [](auto v) {
    std::ostringstream o;
    o.precision(17);
    o << v;
    return o.str();
  };
  auto ratios = std::to_string(c.ratios.train) + ":" + std::to_string(c.ratios.dev) + ":" +
                std::to_string(c.ratios.test);
  return {
      {"triples", c.triples},
      {"templates", c.templates},
      {"ranking", c.ranking},
      {"entity_list", c.entity_list},
      {"target_class", c.target_class},
      {"label_predicate", c.label_predicate},
      {"type_predicate", c.type_predicate},
      {"out", c.out},
      {"preset", c.preset},
      {"seed", std::to_string(c.seed)},
      {"ratios", ratios},
      {"top_entity_count", std::to_string(c.top_entity_count)},
      {"max_pairs", c.max_pairs ? std::to_string(*c.max_pairs) : "none"},
      {"min_count", std::to_string(c.min_count)},
      {"embed_dim", std::to_string(c.model.embed_dim)},
      {"hidden_dim", std::to_string(c.model.hidden_dim)},
      {"num_layers", std::to_string(c.model.num_layers)},
      {"dropout", num(c.model.dropout)},
      {"bidirectional", c.model.bidirectional ? "true" : "false"},
      {"epochs", std::to_string(c.train.epochs)},
      {"batch_size", std::to_string(c.train.batch_size)},
      {"learning_rate", num(c.train.learning_rate)},
      {"optimizer", c.train.optimizer == nn::Optimizer::kAdam ? "adam" : "sgd"},
      {"grad_clip_norm", num(c.train.grad_clip_norm)},
      {"eval_every", std::to_string(c.train.eval_every)},
      {"max_decode_len", std::to_string(c.train.max_decode_len)},
  };
}

kb::EntityCatalog ingest(const PipelineConfig& config) {
  auto in = open_in(config.triples);
  auto triples = kb::parse_ntriples(in).triples;
  kb::CatalogOptions opts;
  opts.label_predicate = config.label_predicate;
  opts.type_predicate = config.type_predicate;
  if (!config.target_class.empty()) opts.target_class = gen::expand_class(config.target_class);
  if (!config.entity_list.empty()) {
    auto list = open_in(config.entity_list);
    opts.entity_list = kb::read_entity_list(list);
  }
  auto catalog = kb::build_catalog(triples, opts);
  if (!config.ranking.empty()) {
    auto rank = open_in(config.ranking);
    catalog = kb::load_ranking(rank, catalog);
  }
  return catalog;
}

gen::Dataset generate(const PipelineConfig& config, const kb::EntityCatalog& catalog) {
  const PresetRow& row = preset_row(config.preset);
  auto in = open_in(config.templates);
  auto templates = gen::parse_templates(in);
  gen::GeneratorConfig g;
  g.preset = row.codec;
  g.allow_multi_placeholder = row.multi_placeholder;
  g.direct_translations = row.direct_translations;
  g.top_entity_count = config.top_entity_count;
  g.max_pairs = config.max_pairs;
  g.seed = config.seed;
  gen::Dataset ds;
  ds.preset = row.codec;
  ds.pairs = gen::instantiate(templates, catalog, g);
  if (row.direct_translations) {
    auto direct = gen::direct_translations(catalog, codec::preset(row.codec));
    ds.pairs.insert(ds.pairs.end(), direct.pairs.begin(), direct.pairs.end());
  }
  return ds;
}

void split(gen::Dataset& dataset, const PipelineConfig& config) {
  dataset.split = gen::split_dataset(dataset.pairs, config.ratios, config.seed);
}

TrainOutcome train(const gen::Dataset& dataset, const PipelineConfig& config, std::ostream* log) {
  auto train_pairs = dataset.partition("train");
  auto dev_pairs = dataset.partition("dev");
  std::vector<codec::TokenSeq> src, tgt;
  for (const auto& p : train_pairs) {
    src.push_back(p.nl);
    tgt.push_back(p.query);
  }
  nn::Seq2SeqModel model(nn::Vocab::build(src, config.min_count),
                         nn::Vocab::build(tgt, config.min_count), config.model,
                         config.seed, dataset.preset);
  nn::TrainConfig tc = config.train;
  tc.seed = config.seed;
  auto curve = nn::train(model, training_pairs(train_pairs), training_pairs(dev_pairs), tc,
                         [&](const nn::CurvePoint& p) {
                           if (log == nullptr) return;
                           *log << "epoch " << p.epoch << " loss " << p.train_loss;
                           if (p.dev_bleu) *log << " dev_bleu " << *p.dev_bleu;
                           *log << '\n' << std::flush;
                         });
  return {std::move(model), std::move(curve)};
}

eval::TableRow table_row(std::string_view preset, const RunResult& result) {
  eval::TableRow row;
  row.encoding = std::string(preset);
  row.bleu = result.report.bleu;
  row.accuracy = result.report.accuracy;
  row.runtime_seconds = result.seconds;
  row.convergence = eval::convergence_epoch(result.curve);
  row.mean_query_length = result.mean_query_length;
  return row;
}

RunResult run_pipeline(const PipelineConfig& config, std::ostream* log) {
  const auto start = std::chrono::steady_clock::now();
  const PresetRow& row = preset_row(config.preset);
  fs::create_directories(config.out);
  const fs::path out(config.out);

  auto catalog = ingest(config);
  {
    std::ostringstream tsv;
    kb::write_catalog_tsv(tsv, catalog);
    write_file_atomic((out / "catalog.tsv").string(), tsv.str());
  }
  if (log != nullptr) *log << "catalog: " << catalog.size() << " entities\n";

  auto dataset = generate(config, catalog);
  split(dataset, config);
  gen::write_dataset((out / "dataset").string(), dataset);

  RunResult result;
  result.train_size = dataset.split->train.size();
  result.dev_size = dataset.split->dev.size();
  result.test_size = dataset.split->test.size();
  std::size_t query_tokens = 0, queries = 0;
  for (const auto& p : dataset.pairs) {
    if (p.is_direct()) continue;
    query_tokens += p.query.size();
    ++queries;
  }
  result.mean_query_length = queries ? static_cast<double>(query_tokens) / static_cast<double>(queries) : 0.0;
  if (log != nullptr) {
    *log << "dataset: " << dataset.pairs.size() << " pairs, split " << result.train_size << '/'
         << result.dev_size << '/' << result.test_size << '\n';
  }

  auto trained = train(dataset, config, log);
  nn::save_model(trained.model, (out / "model.json").string());
  write_file_atomic((out / "curve.csv").string(), nn::format_curve_csv(trained.curve));
  result.curve = trained.curve;

  const auto& preset = codec::preset(row.codec);
  result.report = eval::evaluate(trained.model, dataset.partition("test"), preset,
                                 config.train.max_decode_len);
  write_file_atomic((out / "report.json").string(), eval::report_json(result.report, row.name));

  eval::TableRow table = table_row(row.name, result);
  table.runtime_seconds.reset();
  write_file_atomic((out / "table.txt").string(), eval::format_table({table}));

  result.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  nlohmann::ordered_json timing{{"preset", row.name}, {"wall_clock_seconds", result.seconds}};
  write_file_atomic((out / "timing.json").string(), timing.dump() + "\n");
  return result;
}

std::vector<eval::TableRow> run_ablation(const PipelineConfig& config,
                                         const std::vector<std::string>& presets,
                                         std::ostream* log) {
  if (presets.size() < 2) {
    throw Error(ErrorKind::kInvalidArgument, "cli.BadConfig", "ablation needs at least two presets");
  }
  for (const auto& p : presets) preset_row(p);
  std::vector<eval::TableRow> rows;
  for (const auto& p : presets) {
    PipelineConfig c = config;
    c.preset = p;
    c.out = (fs::path(config.out) / p).string();
    if (log != nullptr) *log << "== " << p << '\n';
    try {
      rows.push_back(table_row(p, run_pipeline(c, log)));
    } catch (const Error& e) {
      eval::TableRow failed;
      failed.encoding = p;
      failed.error = e.code() + ": " + e.what();
      rows.push_back(std::move(failed));
    }
  }
  fs::create_directories(config.out);
  write_file_atomic((fs::path(config.out) / "ablation.txt").string(), eval::format_table(rows));
  return rows;
}

}  // namespace nspm::pipeline
