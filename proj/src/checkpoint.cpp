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

// Checkpoint serialization.

#include <json.hpp>

#include "nspm/learner.hpp"

namespace nspm::nn {

namespace {

constexpr std::string_view kFormat = "nspm-seq2seq";
constexpr int kVersion = 1;

using Json = nlohmann::ordered_json;

[[noreturn]] void corrupt(const std::string& why) {
  throw Error(ErrorKind::kModel, "learner.CorruptCheckpoint", why);
}

}  // namespace

std::string serialize_model(const Seq2SeqModel& model) {
  const auto& c = model.config();
  Json j;
  j["format"] = kFormat;
  j["version"] = kVersion;
  Json& meta = j["meta"];
  meta["embed_dim"] = c.embed_dim;
  meta["hidden_dim"] = c.hidden_dim;
  meta["num_layers"] = c.num_layers;
  meta["dropout"] = c.dropout;
  meta["bidirectional"] = c.bidirectional;
  meta["preset"] = codec::preset(model.preset()).name;
  meta["seed"] = model.seed();
  meta["source_vocab"] = model.source_vocab().tokens();
  meta["target_vocab"] = model.target_vocab().tokens();
  Json& params = j["params"];
  params = Json::object();
  for (const auto& p : model.parameters()) {
    Json entry;
    entry["shape"] = {p.value.rows(), p.value.cols()};
    entry["data"] = std::vector<double>(p.value.data(), p.value.data() + p.value.size());
    params[p.name] = std::move(entry);
  }
  return j.dump() + "\n";
}

Seq2SeqModel deserialize_model(std::string_view text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::exception& e) {
    corrupt(std::string("not a JSON document: ") + e.what());
  }
  try {
    if (j.at("format") != kFormat) corrupt("unexpected format tag");
    if (j.at("version") != kVersion) corrupt("unsupported version");
    const Json& meta = j.at("meta");
    ModelConfig c;
    c.embed_dim = meta.at("embed_dim").get<int>();
    c.hidden_dim = meta.at("hidden_dim").get<int>();
    c.num_layers = meta.at("num_layers").get<int>();
    c.dropout = meta.at("dropout").get<double>();
    c.bidirectional = meta.at("bidirectional").get<bool>();
    auto preset = codec::parse_preset_id(meta.at("preset").get<std::string>());
    if (!preset) corrupt("unknown preset");
    auto seed = meta.at("seed").get<std::uint64_t>();
    Vocab src = Vocab::from_tokens(meta.at("source_vocab").get<std::vector<std::string>>());
    Vocab tgt = Vocab::from_tokens(meta.at("target_vocab").get<std::vector<std::string>>());

    // Fresh model only to obtain the expected names and shapes.
    std::vector<NamedParameter> params;
    try {
      params = Seq2SeqModel(src, tgt, c, seed, *preset).parameters();
    } catch (const Error& e) {
      corrupt(std::string("bad dimensions: ") + e.what());
    }
    const Json& stored = j.at("params");
    if (!stored.is_object() || stored.size() != params.size()) {
      corrupt("parameter list does not match the declared dimensions");
    }
    for (auto& p : params) {
      if (!stored.contains(p.name)) corrupt("missing parameter " + p.name);
      const Json& entry = stored.at(p.name);
      auto shape = entry.at("shape").get<std::vector<long long>>();
      if (shape.size() != 2 || shape[0] != p.value.rows() || shape[1] != p.value.cols()) {
        corrupt("shape mismatch for " + p.name);
      }
      auto data = entry.at("data").get<std::vector<double>>();
      if (static_cast<long long>(data.size()) != p.value.size()) {
        corrupt("data length mismatch for " + p.name);
      }
      std::copy(data.begin(), data.end(), p.value.data());
    }
    return Seq2SeqModel(std::move(src), std::move(tgt), c, seed, *preset,
                        std::move(params));
  } catch (const Json::exception& e) {
    corrupt(std::string("malformed checkpoint: ") + e.what());
  }
}

void save_model(const Seq2SeqModel& model, const std::string& path) {
  write_file_atomic(path, serialize_model(model));
}

Seq2SeqModel load_model(const std::string& path) {
  return deserialize_model(read_file(path));
}

}  // namespace nspm::nn
