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

// nspm command line. Talks to the library only through the C interface.

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "nspm/nspm.h"

#ifndef NSPM_DATA_DIR
#define NSPM_DATA_DIR "data"
#endif

namespace {

// Domain failure, reported as `error<TAB>code<TAB>message` with exit 1.
struct Failure {
  std::string code;
  std::string message;
};

void check(nspm_status s) {
  if (s != NSPM_OK) throw Failure{nspm_last_error_code(), nspm_last_error()};
}

std::string take(char* s) {
  std::string out = s ? s : "";
  nspm_string_free(s);
  return out;
}

template <typename T, void (*Free)(T*)>
struct Handle {
  T* p = nullptr;
  Handle() = default;
  Handle(const Handle&) = delete;
  Handle& operator=(const Handle&) = delete;
  ~Handle() { Free(p); }
};

using Config = Handle<nspm_config, nspm_config_free>;
using Catalog = Handle<nspm_catalog, nspm_catalog_free>;
using Dataset = Handle<nspm_dataset, nspm_dataset_free>;
using Model = Handle<nspm_model, nspm_model_free>;

void write_text(const std::string& path, const std::string& text) {
  std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    out << text;
    if (!out) throw Failure{"io.WriteFailed", "cannot write " + path};
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    throw Failure{"io.WriteFailed", "cannot rename onto " + path};
  }
}

void log_line(const char* line, void*) { std::cerr << line << '\n'; }

const std::vector<std::string> kPresets{"v1", "v1.1", "v2", "v2.1", "v3", "v4"};

// Settings shared by every subcommand: --config, --seed and --set, plus
// named flags that map one-to-one onto configuration keys.
struct Common {
  std::string config_file;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> sets;
  std::map<std::string, std::string> flags;

  void attach(CLI::App* app, const std::vector<std::pair<std::string, std::string>>& keys) {
    app->add_option("--config", config_file, "flat key = value configuration file")
        ->check(CLI::ExistingFile);
    app->add_option("--seed", seed, "random seed (falls back to NSPM_SEED)");
    app->add_option("--set", sets, "override any configuration key: key=value")
        ->type_name("KEY=VALUE");
    for (const auto& [key, help] : keys) {
      std::string flag = "--" + key;
      for (auto& c : flag) {
        if (c == '_') c = '-';
      }
      auto* opt = app->add_option_function<std::string>(
          flag, [this, key = key](const std::string& v) { flags[key] = v; }, help);
      if (key == "preset") opt->check(CLI::IsMember(kPresets));
    }
  }

  void build(Config& cfg) const {
    check(nspm_config_new(NSPM_DATA_DIR, &cfg.p));
    nspm_config_set_log(cfg.p, log_line, nullptr);
    if (const char* env = std::getenv("NSPM_SEED"); env != nullptr && *env != '\0') {
      check(nspm_config_set(cfg.p, "seed", env));
    }
    if (!config_file.empty()) check(nspm_config_load_file(cfg.p, config_file.c_str()));
    // A bad value on the command line is a usage error, not a domain one.
    auto set_arg = [&](const std::string& k, const std::string& v) {
      if (nspm_config_set(cfg.p, k.c_str(), v.c_str()) != NSPM_OK) {
        throw CLI::ValidationError(k, nspm_last_error());
      }
    };
    for (const auto& [k, v] : flags) set_arg(k, v);
    for (const auto& kv : sets) {
      auto eq = kv.find('=');
      if (eq == std::string::npos) throw CLI::ValidationError("--set", "expected KEY=VALUE");
      set_arg(kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (seed) check(nspm_config_set(cfg.p, "seed", std::to_string(*seed).c_str()));
  }
};

const std::vector<std::pair<std::string, std::string>> kIngestKeys{
    {"triples", "N-Triples file"},
    {"templates", "template TSV"},
    {"target_class", "restrict the catalog to one class"},
    {"ranking", "ranking TSV overriding degree ranks"},
    {"entity_list", "file with the entity URIs to keep"},
    {"label_predicate", "label predicate IRI"},
    {"type_predicate", "type predicate IRI"},
};
const std::vector<std::pair<std::string, std::string>> kGenerateKeys{
    {"preset", "encoding preset"},
    {"top_entity_count", "copies generated for the top-ranked entity"},
    {"max_pairs", "cap on generated pairs"},
};
const std::vector<std::pair<std::string, std::string>> kSplitKeys{
    {"ratios", "train:dev:test percentages"},
};
const std::vector<std::pair<std::string, std::string>> kTrainKeys{
    {"embed_dim", "embedding size"},
    {"hidden_dim", "LSTM state size"},
    {"num_layers", "stacked LSTM layers"},
    {"dropout", "dropout rate"},
    {"bidirectional", "bidirectional encoder (true/false)"},
    {"epochs", "training epochs"},
    {"batch_size", "minibatch size"},
    {"learning_rate", "optimizer step size"},
    {"optimizer", "adam or sgd"},
    {"grad_clip_norm", "global gradient norm cap, 0 disables"},
    {"eval_every", "epochs between dev BLEU measurements"},
    {"max_decode_len", "greedy decoding bound"},
    {"min_count", "vocabulary frequency threshold"},
};

std::vector<std::pair<std::string, std::string>> concat(
    std::initializer_list<const std::vector<std::pair<std::string, std::string>>*> parts) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto* p : parts) out.insert(out.end(), p->begin(), p->end());
  return out;
}

int run(int argc, char** argv) {
  CLI::App app{"Neural SPARQL Machine toolkit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(nspm_version()));

  // ingest
  Common ingest_c;
  std::string ingest_out = "catalog.tsv";
  auto* ingest = app.add_subcommand("ingest", "build a ranked entity catalog from N-Triples");
  ingest_c.attach(ingest, kIngestKeys);
  ingest->add_option("--out", ingest_out, "catalog TSV to write");

  // generate
  Common gen_c;
  std::string gen_catalog, gen_out = "dataset";
  auto* generate = app.add_subcommand("generate", "instantiate templates into a dataset");
  gen_c.attach(generate, concat({&kIngestKeys, &kGenerateKeys, &kSplitKeys}));
  generate->add_option("--catalog", gen_catalog, "catalog TSV (default: ingest the triples)");
  generate->add_option("--out", gen_out, "dataset directory");
  bool gen_split = false;
  generate->add_flag("--split", gen_split, "split right away");

  // split
  Common split_c;
  std::string split_dataset, split_out;
  auto* split = app.add_subcommand("split", "partition a dataset into train/dev/test");
  split_c.attach(split, kSplitKeys);
  split->add_option("--dataset", split_dataset, "dataset directory")->required();
  split->add_option("--out", split_out, "output directory (default: in place)");

  // train
  Common train_c;
  std::string train_dataset, train_out = "model.json", train_curve;
  auto* train = app.add_subcommand("train", "train the translator on a split dataset");
  train_c.attach(train, kTrainKeys);
  train->add_option("--dataset", train_dataset, "split dataset directory")->required();
  train->add_option("--out", train_out, "checkpoint to write");
  train->add_option("--curve", train_curve, "learning-curve CSV to write");

  // translate
  std::string tr_model, tr_input;
  bool tr_repair = false, tr_tokens = false;
  auto* translate = app.add_subcommand("translate", "translate questions into SPARQL");
  translate->add_option("--model", tr_model, "checkpoint")->required();
  translate->add_option("--input", tr_input, "question file (default: standard input)");
  translate->add_flag("--repair", tr_repair, "repair output with the interpreter; reports go to stderr");
  translate->add_flag("--tokens", tr_tokens, "print raw token sequences instead of SPARQL");

  // eval
  std::string ev_model, ev_dataset, ev_partition = "test", ev_out;
  auto* evalc = app.add_subcommand("eval", "score a checkpoint on a dataset partition");
  evalc->add_option("--model", ev_model, "checkpoint")->required();
  evalc->add_option("--dataset", ev_dataset, "split dataset directory")->required();
  evalc->add_option("--partition", ev_partition, "train, dev, test or all")
      ->check(CLI::IsMember({"train", "dev", "test", "all"}));
  evalc->add_option("--out", ev_out, "report JSON to write (default: stdout)");

  // pipeline
  Common pipe_c;
  auto* pipe = app.add_subcommand("pipeline", "ingest, generate, split, train and evaluate");
  pipe_c.attach(pipe, concat({&kIngestKeys, &kGenerateKeys, &kSplitKeys, &kTrainKeys}));
  pipe->add_option_function<std::string>(
      "--out", [&](const std::string& v) { pipe_c.flags["out"] = v; }, "output directory");

  // ablation
  Common abl_c;
  std::vector<std::string> abl_presets{"v1", "v1.1", "v2", "v2.1", "v3", "v4"};
  auto* abl = app.add_subcommand("ablation", "run the pipeline per preset and tabulate");
  abl_c.attach(abl, concat({&kIngestKeys, &kSplitKeys, &kTrainKeys}));
  abl->add_option("--presets", abl_presets, "presets to compare")
      ->delimiter(',')
      ->check(CLI::IsMember(kPresets));
  abl->add_option_function<std::string>(
      "--out", [&](const std::string& v) { abl_c.flags["out"] = v; }, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (*ingest) {
      Config cfg;
      ingest_c.build(cfg);
      Catalog cat;
      check(nspm_catalog_ingest(cfg.p, &cat.p));
      check(nspm_catalog_write(cat.p, ingest_out.c_str()));
      std::cerr << "catalog: " << nspm_catalog_size(cat.p) << " entities -> " << ingest_out << '\n';
    } else if (*generate) {
      Config cfg;
      gen_c.build(cfg);
      Catalog cat;
      if (gen_catalog.empty()) {
        check(nspm_catalog_ingest(cfg.p, &cat.p));
      } else {
        check(nspm_catalog_read(gen_catalog.c_str(), &cat.p));
      }
      Dataset ds;
      check(nspm_dataset_generate(cfg.p, cat.p, &ds.p));
      if (gen_split) check(nspm_dataset_split(ds.p, cfg.p));
      check(nspm_dataset_write(ds.p, gen_out.c_str()));
      std::size_t n = 0;
      check(nspm_dataset_partition_size(ds.p, "all", &n));
      std::cerr << "dataset: " << n << " pairs -> " << gen_out << '\n';
    } else if (*split) {
      Config cfg;
      split_c.build(cfg);
      Dataset ds;
      check(nspm_dataset_read(split_dataset.c_str(), &ds.p));
      check(nspm_dataset_split(ds.p, cfg.p));
      const std::string out = split_out.empty() ? split_dataset : split_out;
      check(nspm_dataset_write(ds.p, out.c_str()));
      std::size_t a = 0, b = 0, c = 0;
      check(nspm_dataset_partition_size(ds.p, "train", &a));
      check(nspm_dataset_partition_size(ds.p, "dev", &b));
      check(nspm_dataset_partition_size(ds.p, "test", &c));
      std::cerr << "split: " << a << '/' << b << '/' << c << " -> " << out << '\n';
    } else if (*train) {
      Config cfg;
      train_c.build(cfg);
      Dataset ds;
      check(nspm_dataset_read(train_dataset.c_str(), &ds.p));
      Model m;
      char* curve = nullptr;
      check(nspm_model_train(ds.p, cfg.p, &m.p, &curve));
      std::string csv = take(curve);
      check(nspm_model_save(m.p, train_out.c_str()));
      if (!train_curve.empty()) write_text(train_curve, csv);
    } else if (*translate) {
      Model m;
      check(nspm_model_load(tr_model.c_str(), &m.p));
      std::ifstream file;
      if (!tr_input.empty()) {
        file.open(tr_input);
        if (!file) throw Failure{"io.OpenFailed", "cannot open " + tr_input};
      }
      std::istream& in = tr_input.empty() ? std::cin : file;
      std::string line;
      bool failed = false;
      while (std::getline(in, line)) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        char *sparql = nullptr, *tokens = nullptr, *report = nullptr;
        nspm_status s = nspm_model_translate(m.p, line.c_str(), tr_repair ? 1 : 0, &sparql,
                                             &tokens, &report);
        if (s != NSPM_OK) {
          failed = true;
          std::cout << '\n';
          std::cerr << "error\t" << nspm_last_error_code() << '\t' << nspm_last_error() << '\n';
          continue;
        }
        std::string text = take(sparql), raw = take(tokens), rep = take(report);
        std::cout << (tr_tokens ? raw : text) << '\n';
        if (tr_repair) std::cerr << rep << '\n';
      }
      return failed ? 1 : 0;
    } else if (*evalc) {
      Model m;
      check(nspm_model_load(ev_model.c_str(), &m.p));
      Dataset ds;
      check(nspm_dataset_read(ev_dataset.c_str(), &ds.p));
      char* report = nullptr;
      double bleu = 0, acc = 0;
      check(nspm_model_evaluate(m.p, ds.p, ev_partition.c_str(), &report, &bleu, &acc));
      std::string text = take(report);
      if (ev_out.empty()) {
        std::cout << text;
      } else {
        write_text(ev_out, text);
      }
      std::cerr << "bleu " << bleu << " accuracy " << acc << '\n';
    } else if (*pipe) {
      Config cfg;
      pipe_c.build(cfg);
      char* summary = nullptr;
      check(nspm_pipeline_run(cfg.p, &summary));
      std::cout << take(summary) << '\n';
    } else if (*abl) {
      Config cfg;
      abl_c.build(cfg);
      std::string list;
      for (const auto& p : abl_presets) list += (list.empty() ? "" : ",") + p;
      char* table = nullptr;
      check(nspm_ablation_run(cfg.p, list.c_str(), &table));
      std::cout << take(table);
    }
  } catch (const Failure& f) {
    std::cerr << "error\t" << f.code << '\t' << f.message << '\n';
    return f.code == "cli.UnknownPreset" ? 2 : 1;
  } catch (const CLI::Error& e) {
    std::cerr << "error\tcli.Usage\t" << e.what() << '\n';
    return 2;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) { return run(argc, argv); }
