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

// Optimizers and the epoch loop.

#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "nspm/evaluator.hpp"
#include "nspm/learner.hpp"

namespace nspm::nn {

double global_norm(const Gradients& grads) {
  double sq = 0.0;
  for (const auto& g : grads) sq += g.squaredNorm();
  return std::sqrt(sq);
}

OptimizerState::OptimizerState(const Seq2SeqModel& model, const TrainConfig& config)
    : config_(config) {
  if (config_.optimizer == Optimizer::kAdam) {
    m_ = zero_gradients(model);
    v_ = zero_gradients(model);
  }
}

void OptimizerState::step(Seq2SeqModel& model, Gradients& grads) {
  auto& params = model.parameters();
  if (grads.size() != params.size()) {
    throw Error(ErrorKind::kInvalidArgument, "learner.BadGradients",
                "gradient list does not match the model");
  }
  last_norm_ = global_norm(grads);
  if (!std::isfinite(last_norm_)) {
    throw Error(ErrorKind::kNumeric, "learner.NumericOverflow",
                "gradient norm is not finite");
  }
  if (config_.grad_clip_norm > 0.0 && last_norm_ > config_.grad_clip_norm) {
    const double scale = config_.grad_clip_norm / last_norm_;
    for (auto& g : grads) g *= scale;
  }
  const double lr = config_.learning_rate;
  if (config_.optimizer == Optimizer::kSgd) {
    for (std::size_t i = 0; i < params.size(); ++i) params[i].value -= lr * grads[i];
    return;
  }
  ++t_;
  const double b1 = config_.beta1, b2 = config_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    m_[i] = b1 * m_[i] + (1.0 - b1) * grads[i];
    v_[i] = b2 * v_[i] + (1.0 - b2) * grads[i].cwiseProduct(grads[i]);
    params[i].value.array() -=
        lr * (m_[i].array() / c1) / ((v_[i].array() / c2).sqrt() + config_.epsilon);
  }
}

namespace {

void check(const TrainConfig& c) {
  if (c.epochs < 1 || c.batch_size < 1 || !(c.learning_rate > 0.0) ||
      c.eval_every < 1 || c.max_decode_len < 1 || !(c.beta1 >= 0.0 && c.beta1 < 1.0) ||
      !(c.beta2 >= 0.0 && c.beta2 < 1.0) || !(c.epsilon > 0.0)) {
    throw Error(ErrorKind::kInvalidArgument, "learner.BadConfig",
                "training settings must be positive");
  }
}

}  // namespace

std::vector<CurvePoint> train(Seq2SeqModel& model,
                              const std::vector<TrainingPair>& train_set,
                              const std::vector<TrainingPair>& dev_set,
                              const TrainConfig& config,
                              const EpochCallback& on_epoch) {
  check(config);
  if (train_set.empty()) {
    throw Error(ErrorKind::kInvalidArgument, "learner.EmptyDataset",
                "training set is empty");
  }
  std::vector<IndexedPair> indexed;
  indexed.reserve(train_set.size());
  for (const auto& p : train_set) indexed.push_back(model.index(p.nl, p.query));

  Rng order_rng(config.seed ^ 0x73687566666c65ULL);
  Rng dropout_rng(config.seed ^ 0x64726f706f7574ULL);
  OptimizerState opt(model, config);
  std::vector<std::size_t> order(indexed.size());
  std::iota(order.begin(), order.end(), 0);
  const auto batch = static_cast<std::size_t>(config.batch_size);

  std::vector<CurvePoint> curve;
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    order_rng.shuffle(order);
    double loss_sum = 0.0;
    std::size_t tokens = 0;
    for (std::size_t start = 0; start < order.size(); start += batch) {
      std::vector<IndexedPair> mb;
      for (std::size_t k = start; k < std::min(order.size(), start + batch); ++k) {
        mb.push_back(indexed[order[k]]);
      }
      Gradients grads = zero_gradients(model);
      LossResult r = forward_loss(model, mb, true, &dropout_rng, &grads);
      loss_sum += r.loss * static_cast<double>(r.tokens);
      tokens += r.tokens;
      opt.step(model, grads);
    }
    CurvePoint point;
    point.epoch = epoch;
    point.train_loss = loss_sum / static_cast<double>(tokens);
    if (!dev_set.empty() &&
        (epoch % config.eval_every == 0 || epoch == config.epochs)) {
      std::vector<codec::TokenSeq> cands, refs;
      for (const auto& p : dev_set) {
        cands.push_back(translate(model, p.nl, config.max_decode_len));
        refs.push_back(p.query);
      }
      point.dev_bleu = eval::bleu_corpus(cands, refs);
    }
    curve.push_back(point);
    if (on_epoch) on_epoch(point);
  }
  return curve;
}

std::string format_curve_csv(const std::vector<CurvePoint>& curve) {
  std::ostringstream out;
  out << "epoch,dev_bleu,train_loss\n";
  char buf[64];
  for (const auto& p : curve) {
    out << p.epoch << ',';
    if (p.dev_bleu) {
      std::snprintf(buf, sizeof buf, "%.6f", *p.dev_bleu);
      out << buf;
    }
    std::snprintf(buf, sizeof buf, "%.6f", p.train_loss);
    out << ',' << buf << '\n';
  }
  return out.str();
}

}  // namespace nspm::nn
