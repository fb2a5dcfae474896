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

// Sequence-to-sequence translator: stacked LSTM encoder and decoder without
// attention, trained with teacher forcing and decoded greedily. Gradients are
// computed by hand-written backpropagation through time in 64-bit floats.

#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "nspm/error.hpp"
#include "nspm/sparql_codec.hpp"
#include "nspm/util.hpp"

namespace nspm::nn {

using Matrix = Eigen::MatrixXd;

class Vocab {
 public:
  static constexpr int kPad = 0;
  static constexpr int kBos = 1;
  static constexpr int kEos = 2;
  static constexpr int kUnk = 3;
  static constexpr std::string_view kPadToken = "<pad>";
  static constexpr std::string_view kBosToken = "<s>";
  static constexpr std::string_view kEosToken = "</s>";
  static constexpr std::string_view kUnkToken = "<unk>";

  // Only the four reserved entries.
  Vocab();

  // Tokens seen at least `min_count` times, by descending count then
  // lexicographically, after the reserved slots.
  static Vocab build(const std::vector<codec::TokenSeq>& sequences,
                     int min_count = 1);
  // Index-ordered token list as stored in a checkpoint. The first four
  // entries must be the reserved tokens.
  static Vocab from_tokens(std::vector<std::string> tokens);

  int lookup(std::string_view token) const;
  bool contains(std::string_view token) const;
  const std::string& token(int index) const { return tokens_.at(index); }
  std::size_t size() const { return tokens_.size(); }
  const std::vector<std::string>& tokens() const { return tokens_; }

  std::vector<int> encode(const codec::TokenSeq& seq) const;

  friend bool operator==(const Vocab& a, const Vocab& b) {
    return a.tokens_ == b.tokens_;
  }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
};

struct ModelConfig {
  int embed_dim = 128;
  int hidden_dim = 128;
  int num_layers = 2;
  double dropout = 0.2;
  bool bidirectional = false;
};

struct NamedParameter {
  std::string name;
  Matrix value;
};

// One training example as vocabulary indices (no BOS/EOS).
struct IndexedPair {
  std::vector<int> source;
  std::vector<int> target;
};

class Seq2SeqModel;
Seq2SeqModel deserialize_model(std::string_view text);

class Seq2SeqModel {
 public:
  // Weights uniform in [-0.08, 0.08], LSTM biases 0 except the forget gate
  // (1), output bias 0.
  Seq2SeqModel(Vocab source, Vocab target, ModelConfig config,
               std::uint64_t seed, codec::PresetId preset = codec::PresetId::kV3);

  const Vocab& source_vocab() const { return source_; }
  const Vocab& target_vocab() const { return target_; }
  const ModelConfig& config() const { return config_; }
  codec::PresetId preset() const { return preset_; }
  std::uint64_t seed() const { return seed_; }

  std::vector<NamedParameter>& parameters() { return params_; }
  const std::vector<NamedParameter>& parameters() const { return params_; }
  std::size_t parameter_count() const;
  const Matrix& parameter(std::string_view name) const;

  IndexedPair index(const codec::TokenSeq& source,
                    const codec::TokenSeq& target) const;

  friend bool operator==(const Seq2SeqModel& a, const Seq2SeqModel& b);

 private:
  friend Seq2SeqModel deserialize_model(std::string_view text);
  Seq2SeqModel(Vocab source, Vocab target, ModelConfig config,
               std::uint64_t seed, codec::PresetId preset,
               std::vector<NamedParameter> params);

  Vocab source_;
  Vocab target_;
  ModelConfig config_;
  std::uint64_t seed_;
  codec::PresetId preset_;
  std::vector<NamedParameter> params_;
};

// Gradients aligned with Seq2SeqModel::parameters().
using Gradients = std::vector<Matrix>;

Gradients zero_gradients(const Seq2SeqModel& model);

struct LossResult {
  double loss = 0.0;       // mean cross-entropy per non-PAD target position
  std::size_t tokens = 0;  // non-PAD target positions, EOS included
};

// Cross-entropy of the batch under teacher forcing. When `grads` is given it
// receives the gradient of the returned mean loss. `dropout_rng` is consumed
// only when `train_mode` is set and the dropout rate is positive.
// Throws learner.NumericOverflow if the loss is not finite.
LossResult forward_loss(const Seq2SeqModel& model,
                        const std::vector<IndexedPair>& batch, bool train_mode,
                        Rng* dropout_rng, Gradients* grads);

// Per-position output distributions for a single teacher-forced example
// (target_len + 1 columns, each summing to one).
Matrix output_distributions(const Seq2SeqModel& model, const IndexedPair& pair);

// Greedy decoding from BOS until EOS or `max_len` tokens.
codec::TokenSeq translate(const Seq2SeqModel& model, const codec::TokenSeq& nl,
                          std::size_t max_len = 60);
// Same, with indices in and out; unknown ids are treated as UNK.
std::vector<int> translate_indices(const Seq2SeqModel& model,
                                   const std::vector<int>& source,
                                   std::size_t max_len = 60);

enum class Optimizer { kAdam, kSgd };

struct TrainConfig {
  int epochs = 10;
  int batch_size = 32;
  double learning_rate = 1e-3;
  Optimizer optimizer = Optimizer::kAdam;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  // Global-norm clipping threshold; non-positive disables clipping.
  double grad_clip_norm = 5.0;
  std::uint64_t seed = 0;
  // Epochs between dev-BLEU measurements; the last epoch is always measured.
  int eval_every = 1;
  std::size_t max_decode_len = 60;
};

struct CurvePoint {
  int epoch = 0;
  std::optional<double> dev_bleu;
  double train_loss = 0.0;
  friend bool operator==(const CurvePoint&, const CurvePoint&) = default;
};

struct TrainingPair {
  codec::TokenSeq nl;
  codec::TokenSeq query;
};

using EpochCallback = std::function<void(const CurvePoint&)>;

// Adam or SGD over seeded minibatches. The returned curve has one entry per
// epoch; dev BLEU is filled every `eval_every` epochs and at the last epoch.
std::vector<CurvePoint> train(Seq2SeqModel& model,
                              const std::vector<TrainingPair>& train_set,
                              const std::vector<TrainingPair>& dev_set,
                              const TrainConfig& config,
                              const EpochCallback& on_epoch = {});

// Applies one optimizer update from already computed gradients; exposed for
// tests of the update rule.
class OptimizerState {
 public:
  OptimizerState(const Seq2SeqModel& model, const TrainConfig& config);
  void step(Seq2SeqModel& model, Gradients& grads);
  // Global L2 norm before clipping of the last step.
  double last_norm() const { return last_norm_; }

 private:
  TrainConfig config_;
  std::vector<Matrix> m_;
  std::vector<Matrix> v_;
  std::int64_t t_ = 0;
  double last_norm_ = 0.0;
};

double global_norm(const Gradients& grads);

// Curve as CSV: `epoch,dev_bleu,train_loss`; dev_bleu empty when not measured.
std::string format_curve_csv(const std::vector<CurvePoint>& curve);

// Structured text checkpoint (JSON): meta with dimensions, preset, seed and
// vocabularies; params with shapes and flat column-major arrays.
void save_model(const Seq2SeqModel& model, const std::string& path);
std::string serialize_model(const Seq2SeqModel& model);
// Throws learner.CorruptCheckpoint on malformed or inconsistent content.
Seq2SeqModel load_model(const std::string& path);
Seq2SeqModel deserialize_model(std::string_view text);

}  // namespace nspm::nn
