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

#include "nspm/nspm.h"

#include <cstring>
#include <fstream>
#include <new>
#include <sstream>
#include <streambuf>

#include <json.hpp>

#include "nspm/interpreter.hpp"
#include "nspm/pipeline.hpp"
#include "nspm/util.hpp"

using namespace nspm;

struct nspm_config {
  pipeline::PipelineConfig config;
  nspm_log_fn log = nullptr;
  void* log_user = nullptr;
};

struct nspm_catalog {
  kb::EntityCatalog catalog;
};

struct nspm_dataset {
  gen::Dataset dataset;
};

struct nspm_model {
  nn::Seq2SeqModel model;
};

namespace {

thread_local std::string g_error;
thread_local std::string g_code;

nspm_status status_of(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInvalidArgument: return NSPM_ERR_INVALID_ARGUMENT;
    case ErrorKind::kIo: return NSPM_ERR_IO;
    case ErrorKind::kParse: return NSPM_ERR_PARSE;
    case ErrorKind::kData: return NSPM_ERR_DATA;
    case ErrorKind::kModel: return NSPM_ERR_MODEL;
    case ErrorKind::kNumeric: return NSPM_ERR_NUMERIC;
  }
  return NSPM_ERR_INTERNAL;
}

nspm_status fail(nspm_status s, std::string code, std::string msg) {
  g_code = std::move(code);
  g_error = std::move(msg);
  return s;
}

// Runs `body`, translating exceptions into status codes.
template <typename F>
nspm_status guarded(F&& body) {
  g_error.clear();
  g_code.clear();
  try {
    body();
    return NSPM_OK;
  } catch (const Error& e) {
    return fail(status_of(e.kind()), e.code(), e.what());
  } catch (const std::bad_alloc&) {
    return fail(NSPM_ERR_INTERNAL, "internal.OutOfMemory", "out of memory");
  } catch (const std::exception& e) {
    return fail(NSPM_ERR_INTERNAL, "internal.Unexpected", e.what());
  }
}

#define NSPM_REQUIRE(cond, what)                                                  \
  do {                                                                            \
    if (!(cond)) return fail(NSPM_ERR_INVALID_ARGUMENT, "api.NullArgument", what); \
  } while (0)

char* dup(std::string_view s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out == nullptr) throw std::bad_alloc();
  std::memcpy(out, s.data(), s.size());
  out[s.size()] = '\0';
  return out;
}

void put(char** out, std::string_view s) {
  if (out != nullptr) *out = dup(s);
}

// Forwards complete lines to the configured callback.
class LogBuf : public std::streambuf {
 public:
  LogBuf(nspm_log_fn fn, void* user) : fn_(fn), user_(user) {}
  ~LogBuf() override {
    if (!line_.empty()) fn_(line_.c_str(), user_);
  }

 protected:
  int overflow(int ch) override {
    if (ch == traits_type::eof()) return 0;
    if (ch == '\n') {
      fn_(line_.c_str(), user_);
      line_.clear();
    } else {
      line_.push_back(static_cast<char>(ch));
    }
    return ch;
  }

 private:
  nspm_log_fn fn_;
  void* user_;
  std::string line_;
};

template <typename F>
void with_log(const nspm_config* cfg, F&& body) {
  if (cfg->log == nullptr) {
    body(static_cast<std::ostream*>(nullptr));
    return;
  }
  LogBuf buf(cfg->log, cfg->log_user);
  std::ostream os(&buf);
  body(&os);
}

const codec::CodecPreset& codec_preset(const char* name) {
  // Accepts both codec presets and ladder rows (v2 is codec v1.1).
  if (auto id = codec::parse_preset_id(name)) return codec::preset(*id);
  return codec::preset(pipeline::preset_row(name).codec);
}

}  // namespace

extern "C" {

const char* nspm_version(void) { return "0.1.0"; }
const char* nspm_last_error(void) { return g_error.c_str(); }
const char* nspm_last_error_code(void) { return g_code.c_str(); }
void nspm_string_free(char* s) { std::free(s); }

nspm_status nspm_config_new(const char* data_dir, nspm_config** out) {
  NSPM_REQUIRE(out != nullptr, "out is null");
  return guarded([&] {
    auto* c = new nspm_config;
    if (data_dir != nullptr) c->config = pipeline::default_config(data_dir);
    *out = c;
  });
}

nspm_status nspm_config_set(nspm_config* cfg, const char* key, const char* value) {
  NSPM_REQUIRE(cfg != nullptr && key != nullptr && value != nullptr, "null argument");
  return guarded([&] { pipeline::apply_setting(cfg->config, key, value); });
}

nspm_status nspm_config_load_file(nspm_config* cfg, const char* path) {
  NSPM_REQUIRE(cfg != nullptr && path != nullptr, "null argument");
  return guarded([&] { pipeline::apply_config_text(cfg->config, read_file(path)); });
}

nspm_status nspm_config_get(const nspm_config* cfg, const char* key, char** value) {
  NSPM_REQUIRE(cfg != nullptr && key != nullptr && value != nullptr, "null argument");
  return guarded([&] {
    auto all = pipeline::describe(cfg->config);
    auto it = all.find(key);
    if (it == all.end()) {
      throw Error(ErrorKind::kInvalidArgument, "cli.BadConfig", std::string("unknown key ") + key);
    }
    *value = dup(it->second);
  });
}

void nspm_config_set_log(nspm_config* cfg, nspm_log_fn fn, void* user) {
  if (cfg == nullptr) return;
  cfg->log = fn;
  cfg->log_user = user;
}

void nspm_config_free(nspm_config* cfg) { delete cfg; }

nspm_status nspm_catalog_ingest(const nspm_config* cfg, nspm_catalog** out) {
  NSPM_REQUIRE(cfg != nullptr && out != nullptr, "null argument");
  return guarded([&] { *out = new nspm_catalog{pipeline::ingest(cfg->config)}; });
}

nspm_status nspm_catalog_read(const char* path, nspm_catalog** out) {
  NSPM_REQUIRE(path != nullptr && out != nullptr, "null argument");
  return guarded([&] {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::kIo, "io.OpenFailed", std::string("cannot open ") + path);
    *out = new nspm_catalog{kb::read_catalog_tsv(in)};
  });
}

nspm_status nspm_catalog_write(const nspm_catalog* cat, const char* path) {
  NSPM_REQUIRE(cat != nullptr && path != nullptr, "null argument");
  return guarded([&] {
    std::ostringstream os;
    kb::write_catalog_tsv(os, cat->catalog);
    write_file_atomic(path, os.str());
  });
}

size_t nspm_catalog_size(const nspm_catalog* cat) { return cat ? cat->catalog.size() : 0; }
void nspm_catalog_free(nspm_catalog* cat) { delete cat; }

nspm_status nspm_dataset_generate(const nspm_config* cfg, const nspm_catalog* cat,
                                  nspm_dataset** out) {
  NSPM_REQUIRE(cfg != nullptr && cat != nullptr && out != nullptr, "null argument");
  return guarded([&] { *out = new nspm_dataset{pipeline::generate(cfg->config, cat->catalog)}; });
}

nspm_status nspm_dataset_split(nspm_dataset* ds, const nspm_config* cfg) {
  NSPM_REQUIRE(ds != nullptr && cfg != nullptr, "null argument");
  return guarded([&] { pipeline::split(ds->dataset, cfg->config); });
}

nspm_status nspm_dataset_read(const char* dir, nspm_dataset** out) {
  NSPM_REQUIRE(dir != nullptr && out != nullptr, "null argument");
  return guarded([&] { *out = new nspm_dataset{gen::read_dataset(dir)}; });
}

nspm_status nspm_dataset_write(const nspm_dataset* ds, const char* dir) {
  NSPM_REQUIRE(ds != nullptr && dir != nullptr, "null argument");
  return guarded([&] { gen::write_dataset(dir, ds->dataset); });
}

nspm_status nspm_dataset_partition_size(const nspm_dataset* ds, const char* name, size_t* out) {
  NSPM_REQUIRE(ds != nullptr && name != nullptr && out != nullptr, "null argument");
  return guarded([&] { *out = ds->dataset.partition(name).size(); });
}

void nspm_dataset_free(nspm_dataset* ds) { delete ds; }

nspm_status nspm_model_train(const nspm_dataset* ds, const nspm_config* cfg, nspm_model** out,
                             char** curve_csv) {
  NSPM_REQUIRE(ds != nullptr && cfg != nullptr && out != nullptr, "null argument");
  return guarded([&] {
    with_log(cfg, [&](std::ostream* log) {
      auto trained = pipeline::train(ds->dataset, cfg->config, log);
      put(curve_csv, nn::format_curve_csv(trained.curve));
      *out = new nspm_model{std::move(trained.model)};
    });
  });
}

nspm_status nspm_model_save(const nspm_model* model, const char* path) {
  NSPM_REQUIRE(model != nullptr && path != nullptr, "null argument");
  return guarded([&] { nn::save_model(model->model, path); });
}

nspm_status nspm_model_load(const char* path, nspm_model** out) {
  NSPM_REQUIRE(path != nullptr && out != nullptr, "null argument");
  return guarded([&] { *out = new nspm_model{nn::load_model(path)}; });
}

nspm_status nspm_model_translate(const nspm_model* model, const char* question, int repair,
                                 char** sparql, char** tokens, char** report_json) {
  NSPM_REQUIRE(model != nullptr && question != nullptr, "null argument");
  return guarded([&] {
    const auto& preset = codec::preset(model->model.preset());
    auto raw = nn::translate(model->model, codec::tokenize_nl(question));
    std::string text;
    std::string report;
    if (repair != 0) {
      auto res = interp::interpret(raw, preset);
      text = res.sparql;
      report = interp::report_json(res.report);
    } else {
      text = codec::print_sparql(codec::decode_sequence(raw, preset));
    }
    put(tokens, raw.str());
    put(sparql, text);
    put(report_json, report);
  });
}

nspm_status nspm_model_evaluate(const nspm_model* model, const nspm_dataset* ds,
                                const char* partition, char** report_json, double* bleu,
                                double* accuracy) {
  NSPM_REQUIRE(model != nullptr && ds != nullptr && partition != nullptr, "null argument");
  return guarded([&] {
    const auto& preset = codec::preset(ds->dataset.preset);
    auto report = eval::evaluate(model->model, ds->dataset.partition(partition), preset);
    put(report_json, eval::report_json(report, preset.name));
    if (bleu != nullptr) *bleu = report.bleu;
    if (accuracy != nullptr) *accuracy = report.accuracy;
  });
}

void nspm_model_free(nspm_model* model) { delete model; }

nspm_status nspm_pipeline_run(const nspm_config* cfg, char** summary_json) {
  NSPM_REQUIRE(cfg != nullptr, "null argument");
  return guarded([&] {
    with_log(cfg, [&](std::ostream* log) {
      auto r = pipeline::run_pipeline(cfg->config, log);
      nlohmann::ordered_json j{
          {"preset", cfg->config.preset},
          {"out", cfg->config.out},
          {"bleu", r.report.bleu},
          {"accuracy", r.report.accuracy},
          {"n", r.report.n},
          {"train", r.train_size},
          {"dev", r.dev_size},
          {"test", r.test_size},
          {"mean_query_length", r.mean_query_length},
          {"seconds", r.seconds},
      };
      put(summary_json, j.dump());
    });
  });
}

nspm_status nspm_ablation_run(const nspm_config* cfg, const char* presets, char** table) {
  NSPM_REQUIRE(cfg != nullptr && presets != nullptr, "null argument");
  return guarded([&] {
    std::vector<std::string> list;
    std::stringstream ss(presets);
    std::string item;
    while (std::getline(ss, item, ',')) {
      if (!item.empty()) list.push_back(item);
    }
    with_log(cfg, [&](std::ostream* log) {
      auto rows = pipeline::run_ablation(cfg->config, list, log);
      put(table, eval::format_table(rows));
    });
  });
}

nspm_status nspm_encode_query(const char* sparql, const char* preset, char** tokens) {
  NSPM_REQUIRE(sparql != nullptr && preset != nullptr && tokens != nullptr, "null argument");
  return guarded([&] {
    *tokens = dup(codec::encode_query(codec::parse_sparql(sparql), codec_preset(preset)).str());
  });
}

nspm_status nspm_decode_sequence(const char* tokens, const char* preset, char** sparql) {
  NSPM_REQUIRE(tokens != nullptr && preset != nullptr && sparql != nullptr, "null argument");
  return guarded([&] {
    const auto& p = codec_preset(preset);
    *sparql = dup(codec::print_sparql(codec::decode_sequence(codec::parse_sequence_line(tokens, p), p)));
  });
}

nspm_status nspm_interpret(const char* tokens, const char* preset, char** sparql,
                           char** report_json) {
  NSPM_REQUIRE(tokens != nullptr && preset != nullptr, "null argument");
  return guarded([&] {
    const auto& p = codec_preset(preset);
    auto res = interp::interpret(codec::parse_sequence_line(tokens, p), p);
    put(sparql, res.sparql);
    put(report_json, interp::report_json(res.report));
  });
}

}  // extern "C"
