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

#include <doctest.h>

#include <cstring>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "nspm/nspm.h"

extern "C" int nspm_c_roundtrip(void);

namespace fs = std::filesystem;

namespace {

struct Str {
  char* p = nullptr;
  ~Str() { nspm_string_free(p); }
  std::string s() const { return p ? p : ""; }
};

template <typename T, void (*F)(T*)>
struct Handle {
  T* p = nullptr;
  ~Handle() { F(p); }
};

using Config = Handle<nspm_config, nspm_config_free>;
using Catalog = Handle<nspm_catalog, nspm_catalog_free>;
using Dataset = Handle<nspm_dataset, nspm_dataset_free>;
using Model = Handle<nspm_model, nspm_model_free>;

void set(nspm_config* c, const char* k, const char* v) { REQUIRE(nspm_config_set(c, k, v) == NSPM_OK); }

}  // namespace

TEST_CASE("header is usable from C") { CHECK(nspm_c_roundtrip() == 1); }

TEST_CASE("codec and interpreter entry points") {
  Str tokens;
  REQUIRE(nspm_encode_query("SELECT ?a WHERE { dbr:Inception dbo:director ?a }", "v1", &tokens.p) == NSPM_OK);
  CHECK(tokens.s() == "select ?a where { dbr Inception dbo director ?a }");

  Str sparql, report;
  REQUIRE(nspm_interpret("select var_a where brack_open dbr_Inception dbo_director var_a", "v3", &sparql.p,
                         &report.p) == NSPM_OK);
  CHECK(sparql.s() == "SELECT ?a WHERE { dbr:Inception dbo:director ?a }");
  auto j = nlohmann::json::parse(report.s());
  CHECK(j["actions"].size() == 1);

  Str none;
  CHECK(nspm_interpret("brack_open brack_close", "v3", &none.p, nullptr) == NSPM_ERR_DATA);
  CHECK(std::string(nspm_last_error_code()) == "interp.Unrepairable");
  CHECK(none.p == nullptr);

  Str bad;
  CHECK(nspm_decode_sequence("select var_a brack_close", "v3", &bad.p) == NSPM_ERR_PARSE);
  CHECK(std::strlen(nspm_last_error()) > 0);
  CHECK(nspm_encode_query("SELECT ?a WHERE { dbr:A dbo:b ?a }", "v9", &bad.p) != NSPM_OK);
  CHECK(nspm_encode_query(nullptr, "v3", &bad.p) == NSPM_ERR_INVALID_ARGUMENT);
  CHECK(std::string(nspm_last_error_code()) == "api.NullArgument");
  REQUIRE(nspm_decode_sequence("select var_a where brack_open dbr_A dbo_b var_a brack_close", "v3", &bad.p) ==
          NSPM_OK);
  CHECK(std::string(nspm_last_error_code()).empty());
}

TEST_CASE("configuration") {
  Config c;
  REQUIRE(nspm_config_new(NSPM_DATA_DIR, &c.p) == NSPM_OK);
  set(c.p, "epochs", "3");
  Str v;
  REQUIRE(nspm_config_get(c.p, "epochs", &v.p) == NSPM_OK);
  CHECK(v.s() == "3");
  CHECK(nspm_config_set(c.p, "nope", "1") == NSPM_ERR_INVALID_ARGUMENT);
  CHECK(std::string(nspm_last_error_code()) == "cli.BadConfig");
  CHECK(nspm_config_load_file(c.p, "/nonexistent/config.txt") == NSPM_ERR_IO);
  CHECK(std::string(nspm_version()) == "0.1.0");
}

TEST_CASE("stages through opaque handles") {
  auto root = fs::temp_directory_path() / "nspm_test_c_api";
  fs::remove_all(root);
  fs::create_directories(root);

  Config c;
  REQUIRE(nspm_config_new(NSPM_DATA_DIR, &c.p) == NSPM_OK);
  for (auto [k, v] : std::vector<std::pair<const char*, const char*>>{
           {"max_pairs", "200"}, {"embed_dim", "8"}, {"hidden_dim", "8"}, {"num_layers", "1"}, {"epochs", "2"}}) {
    set(c.p, k, v);
  }
  std::vector<std::string> lines;
  nspm_config_set_log(
      c.p, [](const char* line, void* user) { static_cast<std::vector<std::string>*>(user)->push_back(line); },
      &lines);

  Catalog cat;
  REQUIRE(nspm_catalog_ingest(c.p, &cat.p) == NSPM_OK);
  CHECK(nspm_catalog_size(cat.p) >= 500);
  auto cat_path = (root / "catalog.tsv").string();
  REQUIRE(nspm_catalog_write(cat.p, cat_path.c_str()) == NSPM_OK);
  Catalog back;
  REQUIRE(nspm_catalog_read(cat_path.c_str(), &back.p) == NSPM_OK);
  CHECK(nspm_catalog_size(back.p) == nspm_catalog_size(cat.p));

  Dataset ds;
  REQUIRE(nspm_dataset_generate(c.p, cat.p, &ds.p) == NSPM_OK);
  std::size_t n = 0, train = 0, dev = 0, test = 0;
  REQUIRE(nspm_dataset_partition_size(ds.p, "all", &n) == NSPM_OK);
  CHECK(n == 200);
  CHECK(nspm_dataset_partition_size(ds.p, "train", &train) != NSPM_OK);
  REQUIRE(nspm_dataset_split(ds.p, c.p) == NSPM_OK);
  nspm_dataset_partition_size(ds.p, "train", &train);
  nspm_dataset_partition_size(ds.p, "dev", &dev);
  nspm_dataset_partition_size(ds.p, "test", &test);
  CHECK(dev > 0);
  CHECK(test > 0);
  CHECK(train + dev + test <= n);
  auto ds_dir = (root / "dataset").string();
  REQUIRE(nspm_dataset_write(ds.p, ds_dir.c_str()) == NSPM_OK);
  Dataset ds2;
  REQUIRE(nspm_dataset_read(ds_dir.c_str(), &ds2.p) == NSPM_OK);

  Model m;
  Str curve;
  REQUIRE(nspm_model_train(ds2.p, c.p, &m.p, &curve.p) == NSPM_OK);
  CHECK(curve.s().rfind("epoch,dev_bleu,train_loss\n", 0) == 0);
  CHECK(lines.size() >= 2);
  auto model_path = (root / "model.json").string();
  REQUIRE(nspm_model_save(m.p, model_path.c_str()) == NSPM_OK);
  Model loaded;
  REQUIRE(nspm_model_load(model_path.c_str(), &loaded.p) == NSPM_OK);

  Str s1, t1, r1, s2, t2;
  auto st = nspm_model_translate(m.p, "Who directed Inception?", 1, &s1.p, &t1.p, &r1.p);
  CHECK((st == NSPM_OK || st == NSPM_ERR_DATA));
  nspm_model_translate(loaded.p, "Who directed Inception?", 1, &s2.p, &t2.p, nullptr);
  CHECK(t1.s() == t2.s());
  CHECK(s1.s() == s2.s());

  Str rep;
  double bleu = -1, acc = -1;
  REQUIRE(nspm_model_evaluate(m.p, ds2.p, "test", &rep.p, &bleu, &acc) == NSPM_OK);
  CHECK(bleu >= 0.0);
  CHECK(acc >= 0.0);
  CHECK(nlohmann::json::parse(rep.s())["n"] == test);
  CHECK(nspm_model_evaluate(m.p, ds2.p, "bogus", nullptr, nullptr, nullptr) != NSPM_OK);

  std::string bad_model = (root / "bad.json").string();
  { std::FILE* f = std::fopen(bad_model.c_str(), "w"); std::fputs("{\"format\": 1}", f); std::fclose(f); }
  Model broken;
  CHECK(nspm_model_load(bad_model.c_str(), &broken.p) != NSPM_OK);
  CHECK(std::string(nspm_last_error_code()) == "learner.CorruptCheckpoint");

  set(c.p, "out", (root / "run").string().c_str());
  Str summary;
  REQUIRE(nspm_pipeline_run(c.p, &summary.p) == NSPM_OK);
  auto sj = nlohmann::json::parse(summary.s());
  CHECK(sj["preset"] == "v3");
  CHECK(fs::exists(root / "run" / "report.json"));

  set(c.p, "out", (root / "abl").string().c_str());
  Str table;
  REQUIRE(nspm_ablation_run(c.p, "v1,v3", &table.p) == NSPM_OK);
  CHECK(table.s().find("v1") != std::string::npos);
  CHECK(nspm_ablation_run(c.p, "v3", &table.p) != NSPM_OK);
  fs::remove_all(root);
}
