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

// Acceptance run: one PASS/FAIL line per criterion. Tolerances and budgets
// are pinned below. Usage: acceptance [--only N[,N...]] [--workdir DIR]

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include "nspm/evaluator.hpp"
#include "nspm/interpreter.hpp"
#include "nspm/learner.hpp"
#include "nspm/pipeline.hpp"
#include "nspm/util.hpp"
#include "query_gen.hpp"

using namespace nspm;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

// 1
constexpr int kRoundTripQueries = 1000;
constexpr double kRoundTripSeconds = 10.0;
// 2
constexpr int kShorteningQueries = 100;
// 3
constexpr int kGradSeeds = 10;
constexpr double kGradTolerance = 1e-4;
constexpr double kGradStep = 1e-5;
constexpr double kGradSeconds = 60.0;
// 4 and 11
constexpr std::size_t kOverfitPairs = 50;
constexpr int kOverfitEpochs = 500;
constexpr int kOverfitEvalEvery = 50;
constexpr double kOverfitExact = 0.95;
constexpr double kOverfitToken = 0.99;
constexpr double kOverfitSeconds = 300.0;
// 5
constexpr std::uint64_t kTrendSeed = 42;
const char* kTrendSettings =
    "embed_dim = 64\n"
    "hidden_dim = 64\n"
    "num_layers = 2\n"
    "dropout = 0.2\n"
    "epochs = 40\n"
    "learning_rate = 0.003\n"
    "eval_every = 5\n";
// 6
constexpr double kBleuTolerance = 1e-6;
// 7
constexpr std::size_t kSplitPairs = 1000;
// 9
constexpr int kFuzzSequences = 100000;
constexpr std::size_t kFuzzMaxLen = 30;
// 10: the full pipeline at reduced size, run twice through the CLI.
const char* kDeterminismSettings =
    "max_pairs = 1500\n"
    "embed_dim = 32\n"
    "hidden_dim = 32\n"
    "epochs = 3\n";

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

pipeline::PipelineConfig movie_config() { return pipeline::default_config(NSPM_DATA_DIR); }

// ---------------------------------------------------------------------------

Outcome codec_round_trip() {
  auto t0 = Clock::now();
  Rng rng(1);
  std::size_t failures = 0, total = 0;
  const codec::PresetId presets[] = {codec::PresetId::kV1, codec::PresetId::kV1_1, codec::PresetId::kV2_1,
                                     codec::PresetId::kV3};
  for (auto id : presets) {
    const auto& p = codec::preset(id);
    for (int i = 0; i < kRoundTripQueries; ++i) {
      auto q = testing::random_query(rng);
      ++total;
      try {
        if (codec::decode_sequence(codec::encode_query(q, p), p) != q) ++failures;
      } catch (const Error&) {
        ++failures;
      }
    }
  }
  double secs = seconds_since(t0);
  return {failures == 0 && secs < kRoundTripSeconds,
          std::to_string(total - failures) + "/" + std::to_string(total) + " round-trip, " + fmt("%.2fs", secs)};
}

Outcome sequence_shortening() {
  Rng rng(2);
  int n = 0, shorter = 0;
  double sum1 = 0, sum3 = 0;
  while (n < kShorteningQueries) {
    auto q = testing::random_query(rng);
    if (!testing::has_prefixed_name(q)) continue;
    ++n;
    auto l1 = codec::encode_query(q, codec::preset(codec::PresetId::kV1)).size();
    auto l3 = codec::encode_query(q, codec::preset(codec::PresetId::kV3)).size();
    sum1 += static_cast<double>(l1);
    sum3 += static_cast<double>(l3);
    shorter += l3 < l1;
  }
  return {shorter == n, std::to_string(shorter) + "/" + std::to_string(n) + " shorter, mean " +
                            fmt("%.2f", sum3 / n) + " vs " + fmt("%.2f", sum1 / n) + " tokens"};
}

Outcome gradient_check() {
  auto t0 = Clock::now();
  double worst = 0.0;
  for (int s = 0; s < kGradSeeds; ++s) {
    Rng data(100 + s);
    auto vocab = [] { return nn::Vocab::from_tokens({"<pad>", "<s>", "</s>", "<unk>", "a", "b"}); };
    nn::Seq2SeqModel model(vocab(), vocab(), {4, 3, 1, 0.0, false}, static_cast<std::uint64_t>(s));
    std::vector<nn::IndexedPair> batch;
    for (int b = 0; b < 3; ++b) {
      nn::IndexedPair p;
      for (std::size_t k = 1 + data.index(4); k > 0; --k) p.source.push_back(3 + static_cast<int>(data.index(3)));
      for (std::size_t k = data.index(4); k > 0; --k) p.target.push_back(3 + static_cast<int>(data.index(3)));
      batch.push_back(p);
    }
    nn::Gradients g = nn::zero_gradients(model);
    nn::forward_loss(model, batch, false, nullptr, &g);
    auto& params = model.parameters();
    for (std::size_t k = 0; k < params.size(); ++k) {
      auto& w = params[k].value;
      for (Eigen::Index i = 0; i < w.size(); ++i) {
        const double orig = w.data()[i];
        w.data()[i] = orig + kGradStep;
        const double up = nn::forward_loss(model, batch, false, nullptr, nullptr).loss;
        w.data()[i] = orig - kGradStep;
        const double down = nn::forward_loss(model, batch, false, nullptr, nullptr).loss;
        w.data()[i] = orig;
        const double numeric = (up - down) / (2 * kGradStep);
        const double analytic = g[k].data()[i];
        const double denom = std::max({std::abs(numeric), std::abs(analytic), 1e-6});
        worst = std::max(worst, std::abs(numeric - analytic) / denom);
      }
    }
  }
  double secs = seconds_since(t0);
  return {worst < kGradTolerance && secs < kGradSeconds,
          "max relative error " + fmt("%.3g", worst) + " over " + std::to_string(kGradSeeds) + " seeds, " +
              fmt("%.2fs", secs)};
}

// Shared by criteria 4 and 11.
struct OverfitRun {
  std::vector<gen::EncodedPair> pairs;
  std::vector<nn::CurvePoint> curve;
  double exact = 0.0, token = 0.0, seconds = 0.0;
  std::string csv;
};

const OverfitRun& overfit_run() {
  static const OverfitRun run = [] {
    OverfitRun r;
    auto cfg = movie_config();
    cfg.max_pairs = kOverfitPairs;
    cfg.seed = 4;
    auto cat = pipeline::ingest(cfg);
    r.pairs = pipeline::generate(cfg, cat).pairs;
    std::vector<codec::TokenSeq> src, tgt;
    std::vector<nn::TrainingPair> data;
    for (const auto& p : r.pairs) {
      src.push_back(p.nl);
      tgt.push_back(p.query);
      data.push_back({p.nl, p.query});
    }
    auto t0 = Clock::now();
    nn::Seq2SeqModel model(nn::Vocab::build(src), nn::Vocab::build(tgt), {32, 64, 2, 0.0, false}, 4);
    nn::TrainConfig tc;
    tc.epochs = kOverfitEpochs;
    tc.batch_size = 10;
    tc.learning_rate = 0.003;
    tc.seed = 4;
    tc.eval_every = kOverfitEvalEvery;
    r.curve = nn::train(model, data, data, tc);
    r.csv = nn::format_curve_csv(r.curve);
    std::size_t exact = 0, right = 0, positions = 0;
    for (const auto& p : data) {
      auto out = nn::translate(model, p.nl);
      exact += out == p.query;
      // Gold tokens plus the closing EOS, compared position by position.
      std::vector<std::string> gold = p.query.tokens(), pred = out.tokens();
      gold.push_back("</s>");
      if (pred.size() < p.query.size() + 1) pred.push_back("</s>");
      for (std::size_t i = 0; i < gold.size(); ++i) right += i < pred.size() && pred[i] == gold[i];
      positions += gold.size();
    }
    r.seconds = seconds_since(t0);
    r.exact = static_cast<double>(exact) / static_cast<double>(data.size());
    r.token = static_cast<double>(right) / static_cast<double>(positions);
    return r;
  }();
  return run;
}

Outcome overfit() {
  const auto& r = overfit_run();
  bool ok = r.pairs.size() == kOverfitPairs && r.exact >= kOverfitExact && r.token >= kOverfitToken &&
            r.seconds < kOverfitSeconds;
  return {ok, "exact " + fmt("%.3f", r.exact) + ", token " + fmt("%.4f", r.token) + " on " +
                  std::to_string(r.pairs.size()) + " pairs after " + std::to_string(r.curve.size()) + " epochs, " +
                  fmt("%.1fs", r.seconds)};
}

Outcome table_trend(const fs::path& work) {
  std::map<std::string, double> acc, bleu;
  std::size_t entities = 0;
  std::ostringstream sizes;
  for (const char* preset : {"v1", "v2"}) {
    auto cfg = movie_config();
    pipeline::apply_config_text(cfg, kTrendSettings);
    cfg.preset = preset;
    cfg.seed = kTrendSeed;
    cfg.out = (work / "trend" / preset).string();
    entities = pipeline::ingest(cfg).size();
    auto r = pipeline::run_pipeline(cfg);
    acc[preset] = r.report.accuracy;
    bleu[preset] = r.report.bleu;
    sizes << " " << preset << " " << r.train_size << "/" << r.dev_size << "/" << r.test_size;
  }
  bool ok = entities >= 500 && acc["v2"] > acc["v1"];
  return {ok, "accuracy v1 " + fmt("%.4f", acc["v1"]) + " -> v2 " + fmt("%.4f", acc["v2"]) + ", BLEU " +
                  fmt("%.4f", bleu["v1"]) + " -> " + fmt("%.4f", bleu["v2"]) + ", " + std::to_string(entities) +
                  " entities, split" + sizes.str()};
}

Outcome bleu_oracle() {
  auto s = [](const std::string& t) { return codec::parse_sequence_line(t, codec::preset(codec::PresetId::kV3)); };
  double got = eval::bleu_corpus({s("a b c d f")}, {s("a b c d e")});
  double same = eval::bleu_corpus({s("a b c d e"), s("x y z w")}, {s("a b c d e"), s("x y z w")});
  bool ok = std::abs(got - std::pow(0.2, 0.25)) < kBleuTolerance && same == 1.0;
  return {ok, "bleu " + fmt("%.9f", got) + " vs " + fmt("%.9f", std::pow(0.2, 0.25)) + ", identical " +
                  fmt("%.1f", same)};
}

Outcome split_contract() {
  auto cfg = movie_config();
  auto cat = pipeline::ingest(cfg);
  auto all = pipeline::generate(cfg, cat).pairs;
  std::vector<gen::EncodedPair> pairs;
  std::set<std::string> seen;
  for (const auto& p : all) {
    if (pairs.size() < kSplitPairs && seen.insert(p.nl.str()).second) pairs.push_back(p);
  }
  if (pairs.size() < kSplitPairs) return {false, "only " + std::to_string(pairs.size()) + " distinct questions"};
  auto s = gen::split_dataset(pairs, {80, 10, 10}, 42);
  auto nl_set = [&](const std::vector<std::size_t>& idx) {
    std::set<std::string> out;
    for (auto i : idx) out.insert(pairs[i].nl.str());
    return out;
  };
  auto tr = nl_set(s.train), dv = nl_set(s.dev), te = nl_set(s.test);
  std::size_t overlap = 0;
  for (const auto& q : te) overlap += tr.count(q) + dv.count(q);
  for (const auto& q : dv) overlap += tr.count(q);
  bool sizes = s.train.size() == 800 && s.dev.size() == 100 && s.test.size() == 100;
  bool covers = tr.size() + dv.size() + te.size() == kSplitPairs;
  return {sizes && overlap == 0 && covers, "sizes " + std::to_string(s.train.size()) + "/" +
                                               std::to_string(s.dev.size()) + "/" + std::to_string(s.test.size()) +
                                               ", " + std::to_string(overlap) + " shared questions"};
}

Outcome inverse_rank() {
  auto cfg = movie_config();
  auto cat = pipeline::ingest(cfg);
  std::ifstream tsv(cfg.templates);
  auto templates = gen::parse_templates(tsv);
  gen::GeneratorConfig gc;
  gc.top_entity_count = 6;
  gc.allow_multi_placeholder = false;
  gc.preset = codec::PresetId::kV1_1;
  auto pairs = gen::instantiate(templates, cat, gc);
  std::map<std::string, std::map<std::int64_t, std::int64_t>> counts;  // template -> rank -> count
  for (const auto& p : pairs) ++counts[p.template_id][cat.at(p.entity_uris.at(0)).rank];

  // Ranks 1..3 among the entities of each template's class.
  std::size_t checked = 0, wrong_top = 0, violations = 0;
  const std::int64_t expected[] = {6, 3, 2};
  for (const auto& [id, by_rank] : counts) {
    for (std::int64_t r = 1; r <= 3; ++r) {
      if (!by_rank.count(r)) continue;
      ++checked;
      wrong_top += by_rank.at(r) != expected[r - 1];
    }
    std::int64_t prev = std::numeric_limits<std::int64_t>::max();
    for (const auto& [rank, n] : by_rank) {
      violations += n > prev;
      prev = n;
    }
  }
  // A catalog whose only entities hold ranks 1..3, one template.
  std::vector<kb::Triple> ts;
  for (const char* e : {"A", "B", "C"}) {
    std::string uri = std::string("http://dbpedia.org/resource/") + e;
    ts.push_back({kb::Term::iri(uri), std::string(kb::kRdfsLabel), kb::Term::literal(e, "en")});
    ts.push_back({kb::Term::iri(uri), std::string(kb::kRdfType), kb::Term::iri("http://dbpedia.org/ontology/Film")});
  }
  std::istringstream one("t1\tdbo:Film\twho directed <A>\tSELECT ?x WHERE { <A> dbo:director ?x }\n");
  auto small = kb::build_catalog(ts);
  std::map<std::int64_t, std::int64_t> small_counts;
  for (const auto& p : gen::instantiate(gen::parse_templates(one), small, gc)) {
    ++small_counts[small.at(p.entity_uris.at(0)).rank];
  }
  bool small_ok = small_counts == std::map<std::int64_t, std::int64_t>{{1, 6}, {2, 3}, {3, 2}};
  return {small_ok && wrong_top == 0 && checked > 0 && violations == 0,
          "counts " + std::to_string(small_counts[1]) + "/" + std::to_string(small_counts[2]) + "/" +
              std::to_string(small_counts[3]) + ", " + std::to_string(checked) + " top-rank checks, " +
              std::to_string(violations) + " monotonicity violations over " + std::to_string(cat.size()) +
              " entities"};
}

Outcome interpreter_fuzz() {
  auto cfg = movie_config();
  auto cat = pipeline::ingest(cfg);
  auto ds = pipeline::generate(cfg, cat);
  std::vector<codec::TokenSeq> queries;
  for (const auto& p : ds.pairs) queries.push_back(p.query);
  auto vocab = nn::Vocab::build(queries);
  std::vector<std::string> tokens(vocab.tokens().begin() + 3, vocab.tokens().end());  // UNK and data tokens
  tokens.push_back("</s>");
  const auto& v3 = codec::preset(codec::PresetId::kV3);
  // Uniform draws almost never contain a query form, so every other sequence
  // leans on the structural tokens to exercise the repair paths.
  std::vector<std::string> structural;
  for (const auto& t : tokens) {
    if (t.find("dbr_") != 0) structural.push_back(t);
  }
  Rng rng(9);
  std::size_t repaired = 0, unrepairable = 0, errors = 0;
  for (int i = 0; i < kFuzzSequences; ++i) {
    std::vector<std::string> t;
    for (std::size_t n = 1 + rng.index(kFuzzMaxLen); n > 0; --n) {
      const auto& pool = i % 2 == 1 && rng.uniform() < 0.6 ? structural : tokens;
      t.push_back(pool[rng.index(pool.size())]);
    }
    try {
      auto res = interp::interpret(codec::TokenSeq(t), v3);
      codec::parse_sparql(res.sparql);
      codec::decode_sequence(res.report.repaired, v3);
      ++repaired;
    } catch (const interp::Unrepairable&) {
      ++unrepairable;
    } catch (const std::exception&) {
      ++errors;
    }
  }
  return {errors == 0, std::to_string(repaired) + " repaired, " + std::to_string(unrepairable) + " unrepairable, " +
                           std::to_string(errors) + " decode errors over " + std::to_string(tokens.size()) +
                           " tokens (" + std::to_string(structural.size()) + " non-entity)"};
}

int shell(const std::string& cmd) {
  int st = std::system(cmd.c_str());
  return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
}

Outcome determinism(const fs::path& work) {
  auto dir = work / "determinism";
  fs::remove_all(dir);
  fs::create_directories(dir);
  write_file_atomic((dir / "run.cfg").string(), kDeterminismSettings);
  for (const char* run : {"run1", "run2"}) {
    std::string cmd = std::string(NSPM_CLI) + " pipeline --preset v3 --seed 42 --config " +
                      (dir / "run.cfg").string() + " --out " + (dir / run).string() + " > /dev/null 2>&1";
    if (int rc = shell(cmd); rc != 0) return {false, std::string(run) + " exited with " + std::to_string(rc)};
  }
  std::size_t files = 0, differ = 0;
  for (const auto& e : fs::recursive_directory_iterator(dir / "run1")) {
    if (!e.is_regular_file() || e.path().filename() == "timing.json") continue;
    ++files;
    auto other = dir / "run2" / fs::relative(e.path(), dir / "run1");
    if (!fs::exists(other) || read_file(e.path().string()) != read_file(other.string())) ++differ;
  }
  bool has_core = fs::exists(dir / "run1" / "model.json") && fs::exists(dir / "run1" / "report.json") &&
                  fs::exists(dir / "run1" / "dataset" / "data.ql");
  return {differ == 0 && files > 0 && has_core,
          std::to_string(files) + " artifacts compared, " + std::to_string(differ) + " differ"};
}

Outcome curve_shape() {
  const auto& r = overfit_run();
  // Parse the CSV without the writer's help.
  std::istringstream in(r.csv);
  std::string line;
  std::getline(in, line);
  bool well_formed = line == "epoch,dev_bleu,train_loss";
  std::vector<double> bleus;
  int expected_epoch = 1;
  while (std::getline(in, line)) {
    std::vector<std::string> f;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) f.push_back(cell);
    if (line.back() == ',') f.push_back("");
    if (f.size() != 3 || std::stoi(f[0]) != expected_epoch++) {
      well_formed = false;
      break;
    }
    double loss = std::stod(f[2]);
    well_formed &= std::isfinite(loss) && loss >= 0;
    if (!f[1].empty()) {
      double b = std::stod(f[1]);
      well_formed &= b >= 0.0 && b <= 1.0;
      bleus.push_back(b);
    }
  }
  well_formed &= expected_epoch - 1 == static_cast<int>(r.curve.size()) && bleus.size() >= 2;
  if (!well_formed) return {false, "curve CSV is malformed"};
  return {bleus.back() >= bleus.front(), "dev BLEU " + fmt("%.4f", bleus.front()) + " at first record -> " +
                                             fmt("%.4f", bleus.back()) + " at last, " +
                                             std::to_string(bleus.size()) + " records"};
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> only;
  fs::path work = fs::temp_directory_path() / "nspm_acceptance";
  for (int i = 1; i < argc; ++i) {
    std::string a = argv[i];
    if (a == "--only" && i + 1 < argc) {
      std::stringstream ss(argv[++i]);
      std::string n;
      while (std::getline(ss, n, ',')) only.insert(std::stoi(n));
    } else if (a == "--workdir" && i + 1 < argc) {
      work = argv[++i];
    } else {
      std::cerr << "usage: acceptance [--only N[,N...]] [--workdir DIR]\n";
      return 2;
    }
  }
  fs::create_directories(work);

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"codec round-trip", codec_round_trip},
      {"sequence shortening", sequence_shortening},
      {"gradient check", gradient_check},
      {"overfit memorization", overfit},
      {"encoding trend v2 > v1", [&] { return table_trend(work); }},
      {"BLEU oracle", bleu_oracle},
      {"split contract", split_contract},
      {"inverse-rank frequency", inverse_rank},
      {"interpreter fuzz", interpreter_fuzz},
      {"determinism", [&] { return determinism(work); }},
      {"learning curve shape", curve_shape},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    int n = static_cast<int>(i + 1);
    if (!only.empty() && !only.count(n)) continue;
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("%s %2d %-24s %s\n", o.pass ? "PASS" : "FAIL", n, criteria[i].first.c_str(), o.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
