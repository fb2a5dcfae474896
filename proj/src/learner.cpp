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

#include "nspm/learner.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace nspm::nn {

using RowVec = Eigen::RowVectorXd;

// ---------------------------------------------------------------------------
// Vocab

Vocab::Vocab()
    : tokens_{std::string(kPadToken), std::string(kBosToken),
              std::string(kEosToken), std::string(kUnkToken)} {
  for (int i = 0; i < 4; ++i) index_.emplace(tokens_[i], i);
}

Vocab Vocab::build(const std::vector<codec::TokenSeq>& sequences,
                   int min_count) {
  std::map<std::string, std::int64_t> counts;
  for (const auto& seq : sequences) {
    for (const auto& tok : seq) ++counts[tok];
  }
  std::vector<std::pair<std::int64_t, std::string>> order;
  for (auto& [tok, n] : counts) {
    if (n >= min_count) order.emplace_back(-n, tok);
  }
  std::sort(order.begin(), order.end());
  Vocab v;
  for (auto& [neg, tok] : order) {
    if (v.index_.contains(tok)) continue;
    v.index_.emplace(tok, static_cast<int>(v.tokens_.size()));
    v.tokens_.push_back(tok);
  }
  return v;
}

Vocab Vocab::from_tokens(std::vector<std::string> tokens) {
  Vocab reserved;
  if (tokens.size() < 4 ||
      !std::equal(reserved.tokens_.begin(), reserved.tokens_.end(),
                  tokens.begin())) {
    throw Error(ErrorKind::kModel, "learner.CorruptCheckpoint",
                "vocabulary does not start with the reserved tokens");
  }
  Vocab v;
  v.tokens_ = std::move(tokens);
  v.index_.clear();
  for (std::size_t i = 0; i < v.tokens_.size(); ++i) {
    if (!v.index_.emplace(v.tokens_[i], static_cast<int>(i)).second) {
      throw Error(ErrorKind::kModel, "learner.CorruptCheckpoint",
                  "duplicate vocabulary entry " + v.tokens_[i]);
    }
  }
  return v;
}

int Vocab::lookup(std::string_view token) const {
  auto it = index_.find(std::string(token));
  return it == index_.end() ? kUnk : it->second;
}

bool Vocab::contains(std::string_view token) const {
  return index_.contains(std::string(token));
}

std::vector<int> Vocab::encode(const codec::TokenSeq& seq) const {
  std::vector<int> out;
  out.reserve(seq.size());
  for (const auto& t : seq) out.push_back(lookup(t));
  return out;
}

// ---------------------------------------------------------------------------
// Parameter layout

namespace {

struct LstmIndex {
  std::size_t wx, wh, b;
};

struct Layout {
  std::size_t src_embed = 0;
  std::size_t tgt_embed = 0;
  std::vector<LstmIndex> enc_fwd;
  std::vector<LstmIndex> enc_bwd;
  std::vector<std::size_t> bridge_h;
  std::vector<std::size_t> bridge_c;
  std::vector<LstmIndex> dec;
  std::size_t out_w = 0;
  std::size_t out_b = 0;
};

struct Shape {
  std::string name;
  Eigen::Index rows, cols;
};

std::vector<Shape> shapes_for(const ModelConfig& c, std::size_t vs,
                              std::size_t vt, Layout* layout) {
  const Eigen::Index e = c.embed_dim, h = c.hidden_dim;
  std::vector<Shape> out;
  Layout l;
  auto add = [&](std::string name, Eigen::Index r, Eigen::Index cols) {
    out.push_back({std::move(name), r, cols});
    return out.size() - 1;
  };
  auto add_lstm = [&](const std::string& prefix, int layer) {
    const std::string p = prefix + ".l" + std::to_string(layer);
    const Eigen::Index in = layer == 0 ? e : h;
    LstmIndex idx;
    idx.wx = add(p + ".wx", 4 * h, in);
    idx.wh = add(p + ".wh", 4 * h, h);
    idx.b = add(p + ".b", 4 * h, 1);
    return idx;
  };
  l.src_embed = add("src_embed", static_cast<Eigen::Index>(vs), e);
  l.tgt_embed = add("tgt_embed", static_cast<Eigen::Index>(vt), e);
  for (int k = 0; k < c.num_layers; ++k) l.enc_fwd.push_back(add_lstm("enc", k));
  if (c.bidirectional) {
    for (int k = 0; k < c.num_layers; ++k) {
      l.enc_bwd.push_back(add_lstm("enc_bwd", k));
    }
    for (int k = 0; k < c.num_layers; ++k) {
      l.bridge_h.push_back(add("bridge.l" + std::to_string(k) + ".h", h, 2 * h));
      l.bridge_c.push_back(add("bridge.l" + std::to_string(k) + ".c", h, 2 * h));
    }
  }
  for (int k = 0; k < c.num_layers; ++k) l.dec.push_back(add_lstm("dec", k));
  l.out_w = add("out.w", h, static_cast<Eigen::Index>(vt));
  l.out_b = add("out.b", static_cast<Eigen::Index>(vt), 1);
  if (layout != nullptr) *layout = std::move(l);
  return out;
}

void check_config(const ModelConfig& c) {
  if (c.embed_dim <= 0 || c.hidden_dim <= 0 || c.num_layers <= 0 ||
      c.dropout < 0.0 || c.dropout >= 1.0) {
    throw Error(ErrorKind::kInvalidArgument, "learner.BadConfig",
                "model dimensions must be positive and dropout in [0, 1)");
  }
}

Matrix sigmoid(const Matrix& z) {
  return (1.0 / (1.0 + (-z.array()).exp())).matrix();
}

}  // namespace

// ---------------------------------------------------------------------------
// Model

Seq2SeqModel::Seq2SeqModel(Vocab source, Vocab target, ModelConfig config,
                           std::uint64_t seed, codec::PresetId preset)
    : source_(std::move(source)),
      target_(std::move(target)),
      config_(config),
      seed_(seed),
      preset_(preset) {
  check_config(config_);
  Layout layout;
  auto shapes = shapes_for(config_, source_.size(), target_.size(), &layout);
  Rng rng(mix64(seed ^ 0x696E6974ULL));
  for (const auto& s : shapes) {
    Matrix m(s.rows, s.cols);
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = rng.uniform(-0.08, 0.08);
    }
    params_.push_back({s.name, std::move(m)});
  }
  const Eigen::Index h = config_.hidden_dim;
  auto reset_bias = [&](const LstmIndex& idx) {
    Matrix& b = params_[idx.b].value;
    b.setZero();
    b.block(h, 0, h, 1).setOnes();
  };
  for (const auto& idx : layout.enc_fwd) reset_bias(idx);
  for (const auto& idx : layout.enc_bwd) reset_bias(idx);
  for (const auto& idx : layout.dec) reset_bias(idx);
  params_[layout.out_b].value.setZero();
}

Seq2SeqModel::Seq2SeqModel(Vocab source, Vocab target, ModelConfig config,
                           std::uint64_t seed, codec::PresetId preset,
                           std::vector<NamedParameter> params)
    : source_(std::move(source)),
      target_(std::move(target)),
      config_(config),
      seed_(seed),
      preset_(preset),
      params_(std::move(params)) {
  check_config(config_);
}

std::size_t Seq2SeqModel::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += static_cast<std::size_t>(p.value.size());
  return n;
}

const Matrix& Seq2SeqModel::parameter(std::string_view name) const {
  for (const auto& p : params_) {
    if (p.name == name) return p.value;
  }
  throw Error(ErrorKind::kInvalidArgument, "learner.UnknownParameter",
              "no parameter named " + std::string(name));
}

IndexedPair Seq2SeqModel::index(const codec::TokenSeq& source,
                                const codec::TokenSeq& target) const {
  return {source_.encode(source), target_.encode(target)};
}

bool operator==(const Seq2SeqModel& a, const Seq2SeqModel& b) {
  if (!(a.source_ == b.source_) || !(a.target_ == b.target_)) return false;
  const auto& ca = a.config_;
  const auto& cb = b.config_;
  if (ca.embed_dim != cb.embed_dim || ca.hidden_dim != cb.hidden_dim ||
      ca.num_layers != cb.num_layers || ca.dropout != cb.dropout ||
      ca.bidirectional != cb.bidirectional || a.preset_ != b.preset_ ||
      a.seed_ != b.seed_ || a.params_.size() != b.params_.size()) {
    return false;
  }
  for (std::size_t i = 0; i < a.params_.size(); ++i) {
    const auto& pa = a.params_[i];
    const auto& pb = b.params_[i];
    if (pa.name != pb.name || pa.value.rows() != pb.value.rows() ||
        pa.value.cols() != pb.value.cols() ||
        !std::equal(pa.value.data(), pa.value.data() + pa.value.size(),
                    pb.value.data())) {
      return false;
    }
  }
  return true;
}

Gradients zero_gradients(const Seq2SeqModel& model) {
  Gradients g;
  g.reserve(model.parameters().size());
  for (const auto& p : model.parameters()) {
    g.push_back(Matrix::Zero(p.value.rows(), p.value.cols()));
  }
  return g;
}

// ---------------------------------------------------------------------------
// LSTM layer

namespace {

struct LstmWeights {
  const Matrix& wx;
  const Matrix& wh;
  const Matrix& b;
};

struct LstmGrads {
  Matrix* wx;
  Matrix* wh;
  Matrix* b;
};

// Cached activations of one layer over a sequence.
struct LstmTrace {
  std::vector<Matrix> x, h_prev, c_prev, i, f, g, o, tc;
  std::vector<RowVec> mask;
};

struct StepOut {
  Matrix i, f, g, o, c, tc, h;
};

StepOut lstm_cell(const LstmWeights& w, const Matrix& x, const Matrix& h_prev,
                  const Matrix& c_prev) {
  const Eigen::Index hd = w.wh.cols();
  Matrix gates = w.wx * x + w.wh * h_prev;
  gates.colwise() += w.b.col(0);
  StepOut s;
  s.i = sigmoid(gates.topRows(hd));
  s.f = sigmoid(gates.middleRows(hd, hd));
  s.g = gates.middleRows(2 * hd, hd).array().tanh().matrix();
  s.o = sigmoid(gates.bottomRows(hd));
  s.c = (s.f.array() * c_prev.array() + s.i.array() * s.g.array()).matrix();
  s.tc = s.c.array().tanh().matrix();
  s.h = (s.o.array() * s.tc.array()).matrix();
  return s;
}

// Columns with mask 0 carry the previous state through unchanged.
void blend(Matrix& next, const Matrix& prev, const RowVec& mask) {
  if ((mask.array() == 1.0).all()) return;
  for (Eigen::Index b = 0; b < mask.size(); ++b) {
    if (mask(b) == 0.0) next.col(b) = prev.col(b);
  }
}

// Runs the layer over all steps; returns per-step outputs and final state.
std::vector<Matrix> lstm_forward(const LstmWeights& w,
                                 const std::vector<Matrix>& xs,
                                 const std::vector<RowVec>& masks, Matrix h,
                                 Matrix c, LstmTrace* trace, Matrix* h_last,
                                 Matrix* c_last) {
  std::vector<Matrix> hs;
  hs.reserve(xs.size());
  for (std::size_t t = 0; t < xs.size(); ++t) {
    StepOut s = lstm_cell(w, xs[t], h, c);
    Matrix h_next = s.h;
    Matrix c_next = s.c;
    blend(h_next, h, masks[t]);
    blend(c_next, c, masks[t]);
    if (trace != nullptr) {
      trace->x.push_back(xs[t]);
      trace->h_prev.push_back(h);
      trace->c_prev.push_back(c);
      trace->i.push_back(std::move(s.i));
      trace->f.push_back(std::move(s.f));
      trace->g.push_back(std::move(s.g));
      trace->o.push_back(std::move(s.o));
      trace->tc.push_back(std::move(s.tc));
      trace->mask.push_back(masks[t]);
    }
    h = std::move(h_next);
    c = std::move(c_next);
    hs.push_back(h);
  }
  if (h_last != nullptr) *h_last = h;
  if (c_last != nullptr) *c_last = c;
  return hs;
}

// Backpropagation through time for one layer. `dhs` holds gradients on the
// per-step outputs (may be null), (dh, dc) the gradient on the final state.
// Returns gradients on the inputs; (dh, dc) end up holding the gradient on
// the initial state.
std::vector<Matrix> lstm_backward(const LstmWeights& w, const LstmTrace& tr,
                                  const std::vector<Matrix>* dhs, Matrix& dh,
                                  Matrix& dc, const LstmGrads& grads) {
  const std::size_t steps = tr.x.size();
  const Eigen::Index hd = w.wh.cols();
  std::vector<Matrix> dxs(steps);
  for (std::size_t s = steps; s-- > 0;) {
    if (dhs != nullptr) dh += (*dhs)[s];
    const RowVec& m = tr.mask[s];
    const bool all_on = (m.array() == 1.0).all();
    Matrix dh_pass, dc_pass;
    if (!all_on) {
      RowVec off = (1.0 - m.array()).matrix();
      dh_pass = (dh.array().rowwise() * off.array()).matrix();
      dc_pass = (dc.array().rowwise() * off.array()).matrix();
      dh = (dh.array().rowwise() * m.array()).matrix();
      dc = (dc.array().rowwise() * m.array()).matrix();
    }
    const auto& i = tr.i[s].array();
    const auto& f = tr.f[s].array();
    const auto& g = tr.g[s].array();
    const auto& o = tr.o[s].array();
    const auto& tc = tr.tc[s].array();

    Eigen::ArrayXXd dct = dc.array() + dh.array() * o * (1.0 - tc * tc);
    Matrix dgates(4 * hd, dh.cols());
    dgates.topRows(hd) = (dct * g * i * (1.0 - i)).matrix();
    dgates.middleRows(hd, hd) = (dct * tr.c_prev[s].array() * f * (1.0 - f)).matrix();
    dgates.middleRows(2 * hd, hd) = (dct * i * (1.0 - g * g)).matrix();
    dgates.bottomRows(hd) = (dh.array() * tc * o * (1.0 - o)).matrix();

    grads.wx->noalias() += dgates * tr.x[s].transpose();
    grads.wh->noalias() += dgates * tr.h_prev[s].transpose();
    *grads.b += dgates.rowwise().sum();

    dxs[s] = w.wx.transpose() * dgates;
    Matrix dh_prev = w.wh.transpose() * dgates;
    Matrix dc_prev = (dct * f).matrix();
    if (!all_on) {
      dh_prev += dh_pass;
      dc_prev += dc_pass;
    }
    dh = std::move(dh_prev);
    dc = std::move(dc_prev);
  }
  return dxs;
}

Matrix dropout_mask(Eigen::Index rows, Eigen::Index cols, double rate,
                    Rng& rng) {
  Matrix m(rows, cols);
  const double keep = 1.0 / (1.0 - rate);
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < rows; ++i) {
      m(i, j) = rng.uniform() < rate ? 0.0 : keep;
    }
  }
  return m;
}

// Teacher-forced computation over one batch, with enough state kept to run
// the backward pass.
class BatchGraph {
 public:
  BatchGraph(const Seq2SeqModel& model, const std::vector<IndexedPair>& batch,
             bool train_mode, Rng* rng)
      : model_(model),
        cfg_(model.config()),
        batch_size_(static_cast<Eigen::Index>(batch.size())) {
    shapes_for(cfg_, model.source_vocab().size(), model.target_vocab().size(),
               &layout_);
    dropout_ = train_mode && cfg_.dropout > 0.0 ? cfg_.dropout : 0.0;
    if (dropout_ > 0.0 && rng == nullptr) {
      throw Error(ErrorKind::kInvalidArgument, "learner.BadConfig",
                  "training mode with dropout needs a random stream");
    }
    rng_ = rng;
    prepare(batch);
  }

  LossResult forward() {
    encode();
    decode();
    return {loss_, tokens_};
  }

  const std::vector<Matrix>& probabilities() const { return probs_; }

  void backward(Gradients& grads) {
    const Eigen::Index hd = cfg_.hidden_dim;
    const int layers = cfg_.num_layers;
    const Matrix& out_w = param(layout_.out_w);

    // Output projection and softmax.
    std::vector<std::vector<Matrix>> dh_ext(layers,
                                            std::vector<Matrix>(dec_steps_));
    for (std::size_t t = 0; t < dec_steps_; ++t) {
      Matrix dlogits = probs_[t];
      for (Eigen::Index b = 0; b < batch_size_; ++b) {
        if (dec_mask_[t](b) == 0.0) {
          dlogits.col(b).setZero();
        } else {
          dlogits(dec_out_[t][b], b) -= 1.0;
        }
      }
      dlogits /= static_cast<double>(tokens_);
      grads[layout_.out_w].noalias() += dec_top_[t] * dlogits.transpose();
      grads[layout_.out_b] += dlogits.rowwise().sum();
      dh_ext[layers - 1][t] = out_w * dlogits;
    }

    // Decoder stack, top layer first.
    std::vector<Matrix> dh0(layers), dc0(layers);
    for (int k = layers - 1; k >= 0; --k) {
      Matrix dh = Matrix::Zero(hd, batch_size_);
      Matrix dc = Matrix::Zero(hd, batch_size_);
      auto dxs = lstm_backward(weights(layout_.dec[k]), dec_trace_[k],
                               &dh_ext[k], dh, dc, grad_refs(grads, layout_.dec[k]));
      dh0[k] = std::move(dh);
      dc0[k] = std::move(dc);
      for (std::size_t t = 0; t < dec_steps_; ++t) {
        Matrix dx = apply_mask(dxs[t], dec_drop_[k][t]);
        if (k > 0) {
          dh_ext[k - 1][t] = std::move(dx);
        } else {
          scatter(grads[layout_.tgt_embed], dec_in_[t], dx);
        }
      }
    }

    // Bridge back to the encoder final states.
    std::vector<Matrix> dh_f(layers), dc_f(layers), dh_b(layers), dc_b(layers);
    for (int k = 0; k < layers; ++k) {
      if (!cfg_.bidirectional) {
        dh_f[k] = dh0[k];
        dc_f[k] = dc0[k];
        continue;
      }
      const Matrix& bh = param(layout_.bridge_h[k]);
      const Matrix& bc = param(layout_.bridge_c[k]);
      grads[layout_.bridge_h[k]].noalias() += dh0[k] * cat_h_[k].transpose();
      grads[layout_.bridge_c[k]].noalias() += dc0[k] * cat_c_[k].transpose();
      Matrix dcat_h = bh.transpose() * dh0[k];
      Matrix dcat_c = bc.transpose() * dc0[k];
      dh_f[k] = dcat_h.topRows(hd);
      dh_b[k] = dcat_h.bottomRows(hd);
      dc_f[k] = dcat_c.topRows(hd);
      dc_b[k] = dcat_c.bottomRows(hd);
    }

    std::vector<Matrix> d_emb(enc_steps_,
                              Matrix::Zero(cfg_.embed_dim, batch_size_));
    backward_encoder(grads, layout_.enc_fwd, enc_trace_, enc_drop_, dh_f, dc_f,
                     d_emb, false);
    if (cfg_.bidirectional) {
      backward_encoder(grads, layout_.enc_bwd, bwd_trace_, bwd_drop_, dh_b,
                       dc_b, d_emb, true);
    }
    for (std::size_t t = 0; t < enc_steps_; ++t) {
      scatter(grads[layout_.src_embed], src_ids_[t],
              apply_mask(d_emb[t], emb_drop_[t]));
    }
  }

 private:
  const Matrix& param(std::size_t idx) const {
    return model_.parameters()[idx].value;
  }

  LstmWeights weights(const LstmIndex& idx) const {
    return {param(idx.wx), param(idx.wh), param(idx.b)};
  }

  static LstmGrads grad_refs(Gradients& g, const LstmIndex& idx) {
    return {&g[idx.wx], &g[idx.wh], &g[idx.b]};
  }

  static Matrix apply_mask(const Matrix& m, const Matrix& mask) {
    if (mask.size() == 0) return m;
    return (m.array() * mask.array()).matrix();
  }

  Matrix next_mask(Eigen::Index rows) {
    if (dropout_ <= 0.0) return {};
    return dropout_mask(rows, batch_size_, dropout_, *rng_);
  }

  Matrix embed(const Matrix& table, const std::vector<int>& ids) const {
    Matrix x(table.cols(), batch_size_);
    for (Eigen::Index b = 0; b < batch_size_; ++b) {
      x.col(b) = table.row(ids[b]).transpose();
    }
    return x;
  }

  void scatter(Matrix& table_grad, const std::vector<int>& ids,
               const Matrix& dx) const {
    for (Eigen::Index b = 0; b < batch_size_; ++b) {
      table_grad.row(ids[b]) += dx.col(b).transpose();
    }
  }

  void prepare(const std::vector<IndexedPair>& batch) {
    std::size_t src_len = 1, tgt_len = 0;
    for (const auto& p : batch) {
      src_len = std::max(src_len, p.source.size());
      tgt_len = std::max(tgt_len, p.target.size());
    }
    const int vs = static_cast<int>(model_.source_vocab().size());
    const int vt = static_cast<int>(model_.target_vocab().size());
    auto clamp = [](int id, int n) { return id >= 0 && id < n ? id : Vocab::kUnk; };
    enc_steps_ = src_len;
    dec_steps_ = tgt_len + 1;
    src_ids_.assign(enc_steps_, std::vector<int>(batch.size(), Vocab::kPad));
    src_mask_.assign(enc_steps_, RowVec::Zero(batch_size_));
    dec_in_.assign(dec_steps_, std::vector<int>(batch.size(), Vocab::kPad));
    dec_out_.assign(dec_steps_, std::vector<int>(batch.size(), Vocab::kPad));
    dec_mask_.assign(dec_steps_, RowVec::Zero(batch_size_));
    for (std::size_t b = 0; b < batch.size(); ++b) {
      const auto& p = batch[b];
      for (std::size_t t = 0; t < p.source.size(); ++t) {
        src_ids_[t][b] = clamp(p.source[t], vs);
        src_mask_[t](static_cast<Eigen::Index>(b)) = 1.0;
      }
      for (std::size_t t = 0; t <= p.target.size(); ++t) {
        dec_in_[t][b] = t == 0 ? Vocab::kBos : clamp(p.target[t - 1], vt);
        dec_out_[t][b] = t < p.target.size() ? clamp(p.target[t], vt) : Vocab::kEos;
        dec_mask_[t](static_cast<Eigen::Index>(b)) = 1.0;
        ++tokens_;
      }
    }
  }

  // Runs one encoder stack; `reverse` feeds the sequence back to front.
  void run_encoder(const std::vector<LstmIndex>& stack,
                   std::vector<LstmTrace>& traces,
                   std::vector<std::vector<Matrix>>& drops, bool reverse,
                   std::vector<Matrix>& h_final, std::vector<Matrix>& c_final) {
    const Eigen::Index hd = cfg_.hidden_dim;
    const int layers = cfg_.num_layers;
    traces.assign(layers, {});
    drops.assign(layers, {});
    h_final.assign(layers, {});
    c_final.assign(layers, {});
    std::vector<Matrix> inputs(enc_steps_);
    std::vector<RowVec> masks(enc_steps_);
    for (std::size_t t = 0; t < enc_steps_; ++t) {
      std::size_t src_t = reverse ? enc_steps_ - 1 - t : t;
      inputs[t] = emb_x_[src_t];
      masks[t] = src_mask_[src_t];
    }
    for (int k = 0; k < layers; ++k) {
      if (k > 0) {
        drops[k].resize(enc_steps_);
        for (std::size_t t = 0; t < enc_steps_; ++t) {
          drops[k][t] = next_mask(hd);
          inputs[t] = apply_mask(inputs[t], drops[k][t]);
        }
      }
      inputs = lstm_forward(weights(stack[k]), inputs, masks,
                            Matrix::Zero(hd, batch_size_),
                            Matrix::Zero(hd, batch_size_), &traces[k],
                            &h_final[k], &c_final[k]);
    }
  }

  void encode() {
    const Matrix& table = param(layout_.src_embed);
    emb_x_.resize(enc_steps_);
    emb_drop_.resize(enc_steps_);
    for (std::size_t t = 0; t < enc_steps_; ++t) {
      emb_drop_[t] = next_mask(cfg_.embed_dim);
      emb_x_[t] = apply_mask(embed(table, src_ids_[t]), emb_drop_[t]);
    }
    run_encoder(layout_.enc_fwd, enc_trace_, enc_drop_, false, h_fwd_, c_fwd_);
    if (cfg_.bidirectional) {
      run_encoder(layout_.enc_bwd, bwd_trace_, bwd_drop_, true, h_bwd_, c_bwd_);
    }
  }

  void decode() {
    const Eigen::Index hd = cfg_.hidden_dim;
    const int layers = cfg_.num_layers;
    std::vector<Matrix> h0(layers), c0(layers);
    cat_h_.assign(layers, {});
    cat_c_.assign(layers, {});
    for (int k = 0; k < layers; ++k) {
      if (!cfg_.bidirectional) {
        h0[k] = h_fwd_[k];
        c0[k] = c_fwd_[k];
        continue;
      }
      cat_h_[k].resize(2 * hd, batch_size_);
      cat_h_[k] << h_fwd_[k], h_bwd_[k];
      cat_c_[k].resize(2 * hd, batch_size_);
      cat_c_[k] << c_fwd_[k], c_bwd_[k];
      h0[k] = param(layout_.bridge_h[k]) * cat_h_[k];
      c0[k] = param(layout_.bridge_c[k]) * cat_c_[k];
    }

    const Matrix& table = param(layout_.tgt_embed);
    dec_trace_.assign(layers, {});
    dec_drop_.assign(layers, std::vector<Matrix>(dec_steps_));
    std::vector<Matrix> inputs(dec_steps_);
    for (std::size_t t = 0; t < dec_steps_; ++t) {
      dec_drop_[0][t] = next_mask(cfg_.embed_dim);
      inputs[t] = apply_mask(embed(table, dec_in_[t]), dec_drop_[0][t]);
    }
    for (int k = 0; k < layers; ++k) {
      if (k > 0) {
        for (std::size_t t = 0; t < dec_steps_; ++t) {
          dec_drop_[k][t] = next_mask(hd);
          inputs[t] = apply_mask(inputs[t], dec_drop_[k][t]);
        }
      }
      inputs = lstm_forward(weights(layout_.dec[k]), inputs, dec_mask_, h0[k],
                            c0[k], &dec_trace_[k], nullptr, nullptr);
    }
    dec_top_ = std::move(inputs);

    const Matrix& out_w = param(layout_.out_w);
    const Matrix& out_b = param(layout_.out_b);
    probs_.resize(dec_steps_);
    double total = 0.0;
    for (std::size_t t = 0; t < dec_steps_; ++t) {
      Matrix logits = out_w.transpose() * dec_top_[t];
      logits.colwise() += out_b.col(0);
      RowVec max = logits.colwise().maxCoeff();
      logits.rowwise() -= max;
      Matrix e = logits.array().exp().matrix();
      RowVec sum = e.colwise().sum();
      e.array().rowwise() /= sum.array();
      for (Eigen::Index b = 0; b < batch_size_; ++b) {
        if (dec_mask_[t](b) == 0.0) continue;
        // log softmax from the shifted logits for accuracy
        total -= logits(dec_out_[t][b], b) - std::log(sum(b));
      }
      probs_[t] = std::move(e);
    }
    loss_ = tokens_ > 0 ? total / static_cast<double>(tokens_) : 0.0;
    if (!std::isfinite(loss_)) {
      throw Error(ErrorKind::kNumeric, "learner.NumericOverflow",
                  "loss is not finite");
    }
  }

  void backward_encoder(Gradients& grads, const std::vector<LstmIndex>& stack,
                        const std::vector<LstmTrace>& traces,
                        const std::vector<std::vector<Matrix>>& drops,
                        std::vector<Matrix>& dh_final,
                        std::vector<Matrix>& dc_final,
                        std::vector<Matrix>& d_emb, bool reverse) {
    const int layers = cfg_.num_layers;
    std::vector<Matrix> ext;
    bool has_ext = false;
    for (int k = layers - 1; k >= 0; --k) {
      auto dxs = lstm_backward(weights(stack[k]), traces[k],
                               has_ext ? &ext : nullptr, dh_final[k],
                               dc_final[k], grad_refs(grads, stack[k]));
      if (k > 0) {
        for (std::size_t t = 0; t < enc_steps_; ++t) {
          dxs[t] = apply_mask(dxs[t], drops[k][t]);
        }
        ext = std::move(dxs);
        has_ext = true;
      } else {
        for (std::size_t t = 0; t < enc_steps_; ++t) {
          std::size_t src_t = reverse ? enc_steps_ - 1 - t : t;
          d_emb[src_t] += dxs[t];
        }
      }
    }
  }

  const Seq2SeqModel& model_;
  const ModelConfig& cfg_;
  Eigen::Index batch_size_;
  Layout layout_;
  double dropout_ = 0.0;
  Rng* rng_ = nullptr;

  std::size_t enc_steps_ = 0, dec_steps_ = 0, tokens_ = 0;
  std::vector<std::vector<int>> src_ids_, dec_in_, dec_out_;
  std::vector<RowVec> src_mask_, dec_mask_;

  std::vector<Matrix> emb_x_, emb_drop_;
  std::vector<LstmTrace> enc_trace_, bwd_trace_, dec_trace_;
  std::vector<std::vector<Matrix>> enc_drop_, bwd_drop_, dec_drop_;
  std::vector<Matrix> h_fwd_, c_fwd_, h_bwd_, c_bwd_, cat_h_, cat_c_;
  std::vector<Matrix> dec_top_, probs_;
  double loss_ = 0.0;
};

}  // namespace

LossResult forward_loss(const Seq2SeqModel& model,
                        const std::vector<IndexedPair>& batch, bool train_mode,
                        Rng* dropout_rng, Gradients* grads) {
  if (batch.empty()) {
    throw Error(ErrorKind::kInvalidArgument, "learner.EmptyBatch",
                "batch is empty");
  }
  BatchGraph graph(model, batch, train_mode, dropout_rng);
  LossResult r = graph.forward();
  if (grads != nullptr) {
    if (grads->size() != model.parameters().size()) *grads = zero_gradients(model);
    graph.backward(*grads);
  }
  return r;
}

Matrix output_distributions(const Seq2SeqModel& model, const IndexedPair& pair) {
  BatchGraph graph(model, {pair}, false, nullptr);
  graph.forward();
  const auto& probs = graph.probabilities();
  Matrix out(model.target_vocab().size(), static_cast<Eigen::Index>(probs.size()));
  for (std::size_t t = 0; t < probs.size(); ++t) {
    out.col(static_cast<Eigen::Index>(t)) = probs[t].col(0);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Greedy decoding

std::vector<int> translate_indices(const Seq2SeqModel& model,
                                   const std::vector<int>& source,
                                   std::size_t max_len) {
  const auto& cfg = model.config();
  Layout layout;
  shapes_for(cfg, model.source_vocab().size(), model.target_vocab().size(),
             &layout);
  const auto& params = model.parameters();
  auto w = [&](const LstmIndex& idx) {
    return LstmWeights{params[idx.wx].value, params[idx.wh].value,
                       params[idx.b].value};
  };
  const Eigen::Index hd = cfg.hidden_dim;
  const int layers = cfg.num_layers;
  const int vs = static_cast<int>(model.source_vocab().size());
  const Matrix& src_table = params[layout.src_embed].value;

  std::vector<Matrix> xs;
  for (int id : source) {
    int safe = id >= 0 && id < vs ? id : Vocab::kUnk;
    xs.push_back(src_table.row(safe).transpose());
  }
  std::vector<RowVec> masks(xs.size(), RowVec::Ones(1));
  auto run_stack = [&](const std::vector<LstmIndex>& stack,
                       std::vector<Matrix> inputs, std::vector<Matrix>& hf,
                       std::vector<Matrix>& cf) {
    hf.assign(layers, Matrix::Zero(hd, 1));
    cf.assign(layers, Matrix::Zero(hd, 1));
    for (int k = 0; k < layers; ++k) {
      inputs = lstm_forward(w(stack[k]), inputs, masks, Matrix::Zero(hd, 1),
                            Matrix::Zero(hd, 1), nullptr, &hf[k], &cf[k]);
    }
  };
  std::vector<Matrix> h, c;
  run_stack(layout.enc_fwd, xs, h, c);
  if (cfg.bidirectional) {
    std::vector<Matrix> hb, cb;
    run_stack(layout.enc_bwd, std::vector<Matrix>(xs.rbegin(), xs.rend()), hb, cb);
    for (int k = 0; k < layers; ++k) {
      Matrix cat_h(2 * hd, 1), cat_c(2 * hd, 1);
      cat_h << h[k], hb[k];
      cat_c << c[k], cb[k];
      h[k] = params[layout.bridge_h[k]].value * cat_h;
      c[k] = params[layout.bridge_c[k]].value * cat_c;
    }
  }

  const Matrix& tgt_table = params[layout.tgt_embed].value;
  const Matrix& out_w = params[layout.out_w].value;
  const Matrix& out_b = params[layout.out_b].value;
  std::vector<int> out;
  int prev = Vocab::kBos;
  while (out.size() < max_len) {
    Matrix x = tgt_table.row(prev).transpose();
    for (int k = 0; k < layers; ++k) {
      StepOut s = lstm_cell(w(layout.dec[k]), x, h[k], c[k]);
      h[k] = s.h;
      c[k] = s.c;
      x = s.h;
    }
    Eigen::VectorXd logits = out_w.transpose() * x + out_b;
    Eigen::Index best = 0;
    logits.maxCoeff(&best);
    int id = static_cast<int>(best);
    if (id == Vocab::kEos) break;
    out.push_back(id);
    prev = id;
  }
  return out;
}

codec::TokenSeq translate(const Seq2SeqModel& model, const codec::TokenSeq& nl,
                          std::size_t max_len) {
  auto ids = translate_indices(model, model.source_vocab().encode(nl), max_len);
  std::vector<std::string> tokens;
  tokens.reserve(ids.size());
  for (int id : ids) {
    if (id == Vocab::kPad || id == Vocab::kBos) continue;
    tokens.push_back(model.target_vocab().token(id));
  }
  return codec::TokenSeq(std::move(tokens));
}

}  // namespace nspm::nn
