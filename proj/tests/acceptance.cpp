// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. Everything runs from the bundled fixtures with pinned tolerances.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <string>
#include <vector>

#include "ipg/checkpoint.hpp"
#include "ipg/corpus.hpp"
#include "ipg/decode.hpp"
#include "ipg/evalinfo.hpp"
#include "ipg/imageinfo.hpp"
#include "ipg/model.hpp"
#include "ipg/neuralcore.hpp"
#include "ipg/prosody.hpp"
#include "ipg/utf8.hpp"
#include "test_util.hpp"

using namespace ipg;
using corpus::MaskedSample;
using corpus::TrainingSample;
using corpus::Vocabulary;

namespace {

const std::string kData = IPG_DATA_DIR;
int g_failures = 0;

void report(int number, const char* title, bool ok, double seconds, const std::string& detail) {
  std::printf("%s criterion %2d (%6.2f s): %s%s%s\n", ok ? "PASS" : "FAIL", number, seconds,
              title, detail.empty() ? "" : " -- ", detail.c_str());
  std::fflush(stdout);
  if (!ok) ++g_failures;
}

void run_criterion(int number, const char* title,
                   const std::function<bool(std::string&)>& body) {
  auto start = std::chrono::steady_clock::now();
  std::string detail;
  bool ok = false;
  try {
    ok = body(detail);
  } catch (const std::exception& e) {
    detail = std::string("exception: ") + e.what();
  }
  double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  report(number, title, ok, seconds, detail);
}

model::ModelConfig toy_config(int vocab, int embed, int hidden, int line_len = 5,
                              bool abstract_on = true) {
  model::ModelConfig c;
  c.vocab_size = vocab;
  c.embed_dim = embed;
  c.hidden_dim = hidden;
  c.line_len = line_len;
  c.use_abstract = abstract_on;
  c.dropout = 0.0;
  return c;
}

MaskedSample random_sample(Rng& rng, int vocab, int line_len, int prefix_lines) {
  MaskedSample s;
  s.line_index = prefix_lines + 1;
  for (int l = 0; l < prefix_lines; ++l) {
    if (l > 0) s.input_ids.push_back(Vocabulary::kLineSep);
    for (int j = 0; j < line_len; ++j)
      s.input_ids.push_back(Vocabulary::kNumReserved +
                            static_cast<int>(rng.below(vocab - Vocabulary::kNumReserved)));
  }
  if (prefix_lines > 0) s.input_ids.push_back(Vocabulary::kLineSep);
  s.kept_start = 1;
  s.kept_len = 2;
  for (int j = 0; j < line_len; ++j) {
    int tok = Vocabulary::kNumReserved +
              static_cast<int>(rng.below(vocab - Vocabulary::kNumReserved));
    s.target_ids.push_back(tok);
    bool kept = j >= s.kept_start && j < s.kept_start + s.kept_len;
    s.input_ids.push_back(kept ? tok : Vocabulary::kMask);
  }
  return s;
}

std::vector<double> random_vec(Rng& rng, size_t n) {
  std::vector<double> v(n);
  for (auto& x : v) x = rng.uniform(-1.0, 1.0);
  return v;
}

// --------------------------------------------------------------------------
// 1. Gradient correctness
// --------------------------------------------------------------------------

bool criterion1(std::string& detail) {
  double worst = 0.0;
  for (uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed);

    {  // gru_cell
      nn::ParamStore<double> store;
      auto gru = nn::make_gru(store, "g.", 6, 6);
      for (auto& [name, p] : store.entries()) p.value.init_uniform(rng, 0.5);
      auto x = random_vec(rng, 6), h_prev = random_vec(rng, 6), w = random_vec(rng, 6);
      auto compute = [&] {
        nn::GruStepCache<double> cache;
        std::vector<double> h(6), dx(6, 0), dh(6, 0);
        nn::gru_forward(gru, x.data(), h_prev.data(), h.data(), &cache);
        double loss = 0;
        for (int i = 0; i < 6; ++i) loss += w[i] * h[i];
        nn::gru_backward(gru, cache, w.data(), dx.data(), dh.data());
        return loss;
      };
      worst = std::max(worst, testutil::fd_check_params(store, compute));
    }

    {  // bigru_encode
      nn::ParamStore<double> store;
      auto fwd = nn::make_gru(store, "f.", 3, 4);
      auto bwd = nn::make_gru(store, "b.", 3, 4);
      for (auto& [name, p] : store.entries()) p.value.init_uniform(rng, 0.5);
      std::vector<std::vector<double>> seq, w;
      for (int t = 0; t < 4; ++t) {
        seq.push_back(random_vec(rng, 3));
        w.push_back(random_vec(rng, 8));
      }
      auto compute = [&] {
        nn::BiGruCache<double> cache;
        auto H = nn::bigru_forward(fwd, bwd, seq, &cache);
        double loss = 0;
        for (size_t t = 0; t < H.size(); ++t)
          for (int i = 0; i < 8; ++i) loss += w[t][i] * H[t][i];
        nn::bigru_backward(fwd, bwd, cache, w);
        return loss;
      };
      worst = std::max(worst, testutil::fd_check_params(store, compute));
    }

    {  // attention
      nn::ParamStore<double> store;
      auto attn = nn::make_attn(store, "a.", 4, 4, 6);
      for (auto& [name, p] : store.entries()) p.value.init_uniform(rng, 0.5);
      std::vector<std::vector<double>> H;
      for (int t = 0; t < 4; ++t) H.push_back(random_vec(rng, 6));
      auto s = random_vec(rng, 4), w = random_vec(rng, 6);
      auto compute = [&] {
        auto ctx = nn::attn_begin(attn, H);
        auto c = nn::attn_forward(attn, ctx, H, s.data(), true);
        double loss = 0;
        for (int i = 0; i < 6; ++i) loss += w[i] * c[i];
        std::vector<double> ds(4, 0);
        std::vector<std::vector<double>> dH(4, std::vector<double>(6, 0));
        nn::attn_backward(attn, ctx, H, 0, w.data(), ds.data(), dH);
        return loss;
      };
      worst = std::max(worst, testutil::fd_check_params(store, compute));
    }

    {  // softmax_xent via a parameterized logit vector
      nn::ParamStore<double> store;
      auto& logits = store.add("logits", {9});
      logits.init_uniform(rng, 2.0);
      int target = static_cast<int>(rng.below(9));
      auto compute = [&] {
        std::vector<double> grad(9);
        double loss = nn::softmax_xent(store.value("logits").data(), 9, target, grad.data());
        for (int i = 0; i < 9; ++i) store.grad("logits").v[i] += grad[i];
        return loss;
      };
      worst = std::max(worst, testutil::fd_check_params(store, compute));
    }

    {  // full forward pass, toy dims from the fixture spec
      auto m = model::InfillModel<double>::create(toy_config(12, 8, 12), seed + 1000);
      auto sample = random_sample(rng, 12, 5, static_cast<int>(seed % 4));
      AbstractLabels labels;
      labels.set(Aspect::Season, static_cast<int>(seed % 5));
      Rng drng(0);
      auto compute = [&] { return model::backprop_sample(m, sample, labels, 1.0, drng, false); };
      worst = std::max(worst, testutil::fd_check_params(m.params, compute));
    }
  }
  char buf[96];
  std::snprintf(buf, sizeof(buf), "max relative error %.3g (tolerance 1e-4, 20 seeds)", worst);
  detail = buf;
  return worst < 1e-4;
}

// --------------------------------------------------------------------------
// 2. Beam-search oracle
// --------------------------------------------------------------------------

bool criterion2(std::string& detail) {
  int agreed = 0;
  const int cases = 50;
  for (int k = 0; k < cases; ++k) {
    Rng rng(k * 7 + 1);
    auto m = model::InfillModel<double>::create(toy_config(11, 6, 8), k + 1);

    decode::PlacementTemplate tpl;
    tpl.masked_line.assign(3, Vocabulary::kMask);
    int fpos = static_cast<int>(rng.below(3));
    int ftok = Vocabulary::kNumReserved + static_cast<int>(rng.below(5));
    tpl.masked_line[fpos] = ftok;
    tpl.forced = {{fpos, ftok}};

    AbstractLabels labels;
    labels.set(Aspect::Season, static_cast<int>(rng.below(5)));

    auto cands = decode::constrained_beam_search(m, {}, tpl, labels, 125);

    // Exhaustive enumeration over all constraint-respecting sequences.
    auto enc = model::encode(m, tpl.masked_line, labels);
    std::vector<int> best_ids, seq(3);
    double best_score = -std::numeric_limits<double>::infinity();
    std::function<void(int, double, std::vector<double>)> walk =
        [&](int pos, double score, std::vector<double> state) {
          if (pos == 3) {
            if (score > best_score || (score == best_score && seq < best_ids)) {
              best_score = score;
              best_ids = seq;
            }
            return;
          }
          std::vector<double> lp;
          int prev = pos == 0 ? Vocabulary::kBos : seq[pos - 1];
          auto next = model::decode_step(m, enc, prev, state, lp);
          if (tpl.masked_line[pos] != Vocabulary::kMask) {
            seq[pos] = tpl.masked_line[pos];
            walk(pos + 1, score + lp[seq[pos]], next);
          } else {
            for (int tok = Vocabulary::kNumReserved; tok < 11; ++tok) {
              seq[pos] = tok;
              walk(pos + 1, score + lp[tok], next);
            }
          }
        };
    walk(0, 0.0, enc.s0);

    if (!cands.empty() && cands[0].ids == best_ids &&
        std::abs(cands[0].logprob - best_score) < 1e-9)
      ++agreed;
  }
  detail = std::to_string(agreed) + "/" + std::to_string(cases) +
           " cases agree with exhaustive search (score tolerance 1e-9)";
  return agreed == cases;
}

// --------------------------------------------------------------------------
// 3. Keyword-presence guarantee
// --------------------------------------------------------------------------

bool criterion3(std::string& detail) {
  int lines_checked = 0, lines_ok = 0;
  int request_count = 0;
  for (int line_len : {5, 7}) {
    for (int rep = 0; rep < 100; ++rep) {
      Rng rng(rep * 13 + line_len);
      corpus::Vocabulary vocab;
      for (char c = 'a'; c <= 'n'; ++c) vocab.add(std::string(1, c));
      auto m = model::InfillModel<float>::create(
          toy_config(vocab.size(), 6, 8, line_len), rep * 2 + line_len);

      decode::GenerationRequest req;
      req.line_len = line_len;
      req.beam_size = 5;
      req.labels.set(Aspect::Season, static_cast<int>(rng.below(5)));
      for (int i = 0; i < 4; ++i) {
        int klen = 1 + static_cast<int>(rng.below(line_len));
        std::string kw;
        for (int k = 0; k < klen; ++k)
          kw += vocab.token(Vocabulary::kNumReserved +
                            static_cast<int>(rng.below(vocab.size() - Vocabulary::kNumReserved)));
        req.keywords[i] = kw;
      }
      ++request_count;
      auto result = decode::generate_poem(req, m, vocab);
      for (int i = 0; i < 4; ++i) {
        ++lines_checked;
        auto kw = utf8::chars(req.keywords[i]);
        const auto& diag = result.per_line[i];
        bool ok = diag.offset + static_cast<int>(kw.size()) <= line_len;
        for (size_t k = 0; ok && k < kw.size(); ++k)
          ok = result.poem.lines[i][diag.offset + k] == kw[k];
        if (ok) ++lines_ok;
      }
    }
  }
  detail = std::to_string(lines_ok) + "/" + std::to_string(lines_checked) + " lines over " +
           std::to_string(request_count) + " requests carry the keyword at the reported offset";
  return lines_ok == lines_checked && request_count == 200;
}

// --------------------------------------------------------------------------
// 4. Dimensional accounting
// --------------------------------------------------------------------------

bool criterion4(std::string& detail) {
  model::ModelConfig paper;
  paper.vocab_size = 100;
  paper.embed_dim = 1024;
  bool ok = paper.input_dim() == 1039;

  auto desk = toy_config(40, 64, 32);
  ok = ok && desk.input_dim() == 79;

  // And the embedding actually materializes at that width.
  auto m = model::InfillModel<float>::create(desk, 1);
  std::vector<float> e(desk.input_dim(), -1.f);
  AbstractLabels labels;
  model::abstract_embed(m, 7, labels, e.data());
  double onehot_sum = 0;
  for (int i = 0; i < 15; ++i) onehot_sum += e[i];
  ok = ok && onehot_sum == 3.0;

  detail = "1024 -> " + std::to_string(paper.input_dim()) + ", 64 -> " +
           std::to_string(desk.input_dim());
  return ok;
}

// --------------------------------------------------------------------------
// 5. Overfit capacity on the 50-poem fixture
// --------------------------------------------------------------------------

bool criterion5(std::string& detail) {
  auto records = corpus::load_poems(kData + "/poems_50.jsonl");
  auto lexicon = corpus::SegmentLexicon::load(kData + "/lexicon_sample.txt");
  auto rules = corpus::RuleClassifier::load(kData + "/rules_sample.json");
  auto vocab = corpus::build_vocab(records);

  std::vector<TrainingSample> data;
  for (auto& rec : records) {
    rec.labels = corpus::label_poem(rec.poem, rules);
    for (auto& ms : corpus::make_masked_samples(rec, lexicon, vocab))
      data.push_back({std::move(ms), rec.labels});
  }

  auto config = toy_config(vocab.size(), 32, 64);
  auto m = model::InfillModel<float>::create(config, 7);
  model::TrainOptions opt;
  opt.lr = 1e-3;
  opt.batch = 16;
  opt.epochs = 300;
  opt.seed = 7;
  opt.target_loss = 0.15;  // early stop well under the 0.3 bound
  auto result = model::train(m, data, data, opt);

  double final_loss = result.history.empty() ? 1e9 : result.history.back().train_loss;
  bool loss_ok = !result.aborted && final_loss < 0.3;

  // Re-infill every training line from its first kept word at the true
  // offset, teacher prefix, beam 5.
  int exact = 0, total = 0;
  for (const auto& rec : records) {
    std::vector<std::vector<int>> prefix;
    for (int i = 0; i < 4; ++i) {
      std::vector<int> target;
      for (const auto& ch : rec.poem.lines[i]) target.push_back(vocab.id(ch));
      auto spans = corpus::segment_line(rec.poem.lines[i], lexicon);

      decode::PlacementTemplate tpl;
      tpl.masked_line.assign(5, Vocabulary::kMask);
      tpl.offset = spans[0].start;
      for (int k = 0; k < spans[0].len; ++k) {
        tpl.masked_line[spans[0].start + k] = target[spans[0].start + k];
        tpl.forced.emplace_back(spans[0].start + k, target[spans[0].start + k]);
      }
      auto cands = decode::constrained_beam_search(m, prefix, tpl, rec.labels, 5);
      ++total;
      if (!cands.empty() && cands[0].ids == target) ++exact;
      prefix.push_back(target);
    }
  }
  double rate = static_cast<double>(exact) / total;

  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "train loss %.4f after %zu epochs (< 0.3); re-infill %d/%d = %.1f%% (>= 90%%)",
                final_loss, result.history.size(), exact, total, 100.0 * rate);
  detail = buf;
  return loss_ok && rate >= 0.90;
}

// --------------------------------------------------------------------------
// 6. Abstract-conditioning ablation analogue
// --------------------------------------------------------------------------

bool criterion6(std::string& detail) {
  // Synthetic task: the season label alone determines the line. Each season
  // owns five distinct characters, so free-running generation cannot infer
  // the season from the input (which is always the same masked line).
  corpus::Vocabulary vocab;
  std::vector<std::vector<int>> season_lines(5);
  for (int s = 0; s < 5; ++s)
    for (int j = 0; j < 5; ++j)
      season_lines[s].push_back(vocab.add("c" + std::to_string(s) + std::to_string(j)));

  auto make_sample = [&](int season) {
    TrainingSample ts;
    ts.masked.line_index = 1;
    ts.masked.input_ids.assign(5, Vocabulary::kMask);
    ts.masked.target_ids = season_lines[season];
    ts.labels.set(Aspect::Season, season);
    return ts;
  };
  std::vector<TrainingSample> data;
  for (int copy = 0; copy < 20; ++copy)
    for (int s = 0; s < 5; ++s) data.push_back(make_sample(s));

  auto eval_accuracy = [&](auto& m) {
    int hit = 0;
    for (int s = 0; s < 5; ++s) {
      decode::PlacementTemplate tpl;
      tpl.masked_line.assign(5, Vocabulary::kMask);
      AbstractLabels labels;
      labels.set(Aspect::Season, s);
      auto cands = decode::constrained_beam_search(m, {}, tpl, labels, 1);
      if (!cands.empty() && cands[0].ids == season_lines[s]) ++hit;
    }
    return hit / 5.0;
  };

  model::TrainOptions opt;
  opt.lr = 3e-3;
  opt.batch = 20;
  opt.epochs = 120;
  opt.seed = 5;

  auto with = model::InfillModel<float>::create(toy_config(vocab.size(), 8, 16), 11);
  model::train(with, data, data, opt);
  double acc_with = eval_accuracy(with);

  auto without =
      model::InfillModel<float>::create(toy_config(vocab.size(), 8, 16, 5, false), 11);
  model::train(without, data, data, opt);
  double acc_without = eval_accuracy(without);

  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "with labels %.0f%%, without %.0f%% (chance 20%%, need 100%% vs 20+-10, gap >= 50)",
                100 * acc_with, 100 * acc_without);
  detail = buf;
  return acc_with == 1.0 && std::abs(acc_without - 0.2) <= 0.10 &&
         (acc_with - acc_without) >= 0.5;
}

// --------------------------------------------------------------------------
// 7. Corpus construction
// --------------------------------------------------------------------------

bool criterion7(std::string& detail) {
  auto records = corpus::load_poems(kData + "/poems_10.jsonl");
  auto lexicon = corpus::SegmentLexicon::load(kData + "/lexicon_sample.txt");
  auto vocab = corpus::build_vocab(records);

  size_t expected = 0, got = 0;
  bool roundtrip_ok = true;
  for (const auto& rec : records) {
    auto samples = corpus::make_masked_samples(rec, lexicon, vocab);
    got += samples.size();
    for (const auto& line : rec.poem.lines)
      expected += corpus::segment_line(line, lexicon).size() + 1;
    for (const auto& s : samples) {
      std::vector<int> line(s.input_ids.end() - 5, s.input_ids.end());
      for (int j = 0; j < 5; ++j)
        if (line[j] == Vocabulary::kMask) line[j] = s.target_ids[j];
      roundtrip_ok = roundtrip_ok && line == s.target_ids;
    }
  }

  auto s1 = corpus::split_corpus(records, {0.8, 0.1, 0.1}, 99);
  auto s2 = corpus::split_corpus(records, {0.8, 0.1, 0.1}, 99);
  bool split_ok = s1.train.size() == 8 && s1.valid.size() == 1 && s1.test.size() == 1;
  bool deterministic = s1.train.size() == s2.train.size();
  for (size_t i = 0; deterministic && i < s1.train.size(); ++i)
    deterministic = s1.train[i].id == s2.train[i].id;

  // And vocabulary determinism across a rebuild.
  auto vocab2 = corpus::build_vocab(records);
  bool vocab_ok = vocab.size() == vocab2.size();
  for (int i = 0; vocab_ok && i < vocab.size(); ++i) vocab_ok = vocab.token(i) == vocab2.token(i);

  char buf[160];
  std::snprintf(buf, sizeof(buf), "%zu samples (= sum(words+1) %zu), split 8/1/1, round-trip %s",
                got, expected, roundtrip_ok ? "exact" : "BROKEN");
  detail = buf;
  return got == expected && roundtrip_ok && split_ok && deterministic && vocab_ok;
}

// --------------------------------------------------------------------------
// 8. INFO metric
// --------------------------------------------------------------------------

bool criterion8(std::string& detail) {
  auto labels_of = [](const char* s, const char* t, const char* w) {
    AbstractLabels l;
    l.set(Aspect::Season, s);
    l.set(Aspect::Time, t);
    l.set(Aspect::Weather, w);
    return l;
  };

  // Ten hand-constructed pairs. Comparable aspects: season 9 (6 match),
  // time 7 (3 match), weather 4 (4 match). Pooled: 13/20.
  std::vector<std::pair<AbstractLabels, AbstractLabels>> pairs;
  auto add = [&](AbstractLabels poem, AbstractLabels image) { pairs.emplace_back(poem, image); };
  add(labels_of("winter", "night", "snowy"), labels_of("winter", "night", "snowy"));      // 3/3
  add(labels_of("spring", "daytime", "rainy"), labels_of("spring", "nightfall", "rainy")); // 2/3
  add(labels_of("summer", "daytime", "sunshine"), labels_of("autumn", "daytime", "other")); // 1/2
  add(labels_of("autumn", "night", "cloudy"), labels_of("autumn", "other", "cloudy"));    // 2/2
  add(labels_of("winter", "nightfall", "snowy"), labels_of("summer", "night", "other"));  // 0/2
  add(labels_of("spring", "daytime", "rainy"), labels_of("other", "other", "other"));     // skip 3
  add(labels_of("summer", "night", "sunshine"), labels_of("summer", "daytime", "other")); // 1/2
  add(labels_of("autumn", "daytime", "cloudy"), labels_of("winter", "daytime", "other")); // 1/2
  add(labels_of("winter", "night", "snowy"), labels_of("winter", "other", "snowy"));      // 2/2
  add(labels_of("spring", "nightfall", "rainy"), labels_of("spring", "night", "other"));  // 1/2

  auto r = evalinfo::info_score(pairs);
  bool counts_ok = r.total_compared() == 20 && r.total_matched() == 13 && r.skipped_other == 10;
  bool rates_ok = r.overall() && std::abs(*r.overall() - 13.0 / 20.0) < 1e-12;
  rates_ok = rates_ok && r.rate(Aspect::Season) &&
             std::abs(*r.rate(Aspect::Season) - 6.0 / 9.0) < 1e-12;
  rates_ok =
      rates_ok && r.rate(Aspect::Time) && std::abs(*r.rate(Aspect::Time) - 3.0 / 7.0) < 1e-12;
  rates_ok = rates_ok && r.rate(Aspect::Weather) &&
             std::abs(*r.rate(Aspect::Weather) - 4.0 / 4.0) < 1e-12;

  // Threshold rule boundaries.
  imageinfo::AspectDistribution d;
  d.probs[0] = {0.79, 0.11, 0.06, 0.04};
  d.probs[1] = {0.95, 0.03, 0.02};
  d.probs[2] = {0.80, 0.10, 0.05, 0.05};
  auto th = imageinfo::apply_threshold(d, 0.8);
  bool threshold_ok = th.is_other(Aspect::Season) && th.name(Aspect::Time) == "daytime" &&
                      th.name(Aspect::Weather) == "sunshine";

  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "pooled 13/20, season 6/9, time 3/7, weather 4/4; 0.79 -> other, 0.95/0.80 -> category");
  detail = buf;
  return counts_ok && rates_ok && threshold_ok;
}

// --------------------------------------------------------------------------
// 9. Prosody fixture
// --------------------------------------------------------------------------

bool criterion9(std::string& detail) {
  auto tones = prosody::ToneDict::load(kData + "/tones_sample.tsv");
  auto rhymes = prosody::RhymeDict::load(kData + "/rhymes_sample.tsv");
  auto pattern = prosody::TonalPattern::load(kData + "/patterns/wuyan_a.txt");

  prosody::Poem poem;
  poem.line_len = 5;
  {
    std::ifstream in(kData + "/poem_valid.txt");
    std::string line;
    while (std::getline(in, line))
      if (!line.empty()) poem.lines.push_back(utf8::chars(line));
  }

  auto base = prosody::analyze(poem, pattern, tones, rhymes);
  bool base_ok = base.rhyme_ok && base.tone_violations.empty();

  // Inject a single tone violation at every definite slot in turn; the
  // report must locate exactly that position.
  int injected = 0, located = 0;
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 5; ++j) {
      auto req = pattern.rows[i][j];
      if (req == prosody::ToneReq::Any) continue;
      prosody::Poem mutated = poem;
      mutated.lines[i][j] = req == prosody::ToneReq::Ping ? "月" : "风";  // Ze / Ping
      ++injected;
      auto rep = prosody::check_tones(mutated, pattern, tones);
      if (rep.tone_violations.size() == 1 && rep.tone_violations[0].line == i &&
          rep.tone_violations[0].pos == j)
        ++located;
    }
  }

  // A rhyme break with clean tones: line 4 ends on the right tone class but
  // the wrong rhyme group.
  prosody::Poem rhyme_broken = poem;
  rhyme_broken.lines[3][4] = "风";  // Ping tone, "eng" group
  auto rep = prosody::analyze(rhyme_broken, pattern, tones, rhymes);
  bool rhyme_detect = !rep.rhyme_ok && rep.tone_violations.empty();

  char buf[120];
  std::snprintf(buf, sizeof(buf), "fixture conformant; %d/%d injected violations located exactly",
                located, injected);
  detail = buf;
  return base_ok && injected == located && injected >= 15 && rhyme_detect;
}

// --------------------------------------------------------------------------
// 10. Checkpoint round-trip and error classes
// --------------------------------------------------------------------------

bool criterion10(std::string& detail) {
  namespace fs = std::filesystem;
  auto path = (fs::temp_directory_path() / "ipg_acceptance_ckpt.bin").string();

  auto config = toy_config(24, 10, 12);
  auto m = model::InfillModel<float>::create(config, 314);
  model::save_checkpoint(m, path);
  auto loaded = model::load_checkpoint(path);

  bool bitwise = loaded.config.to_json() == m.config.to_json();
  for (const auto& [name, p] : m.params.entries()) {
    bitwise = bitwise && loaded.params.has(name);
    if (!bitwise) break;
    const auto& q = loaded.params.value(name);
    bitwise = bitwise && q.shape == p.value.shape &&
              std::memcmp(q.data(), p.value.data(), q.size() * sizeof(float)) == 0;
  }

  std::ifstream in(path, std::ios::binary);
  std::string good((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  in.close();

  auto expect_kind = [&](const std::string& bytes, CheckpointError::Kind kind) {
    std::ofstream out(path, std::ios::binary);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.close();
    try {
      model::load_checkpoint(path);
    } catch (const CheckpointError& e) {
      return e.kind() == kind;
    } catch (...) {
    }
    return false;
  };

  std::string bad_magic = good;
  bad_magic[0] = 'Z';
  std::string bad_version = good;
  bad_version[4] = 9;
  std::string flipped = good;
  flipped[good.size() / 2] ^= 0x10;

  bool errors_ok = expect_kind(bad_magic, CheckpointError::Kind::BadMagic) &&
                   expect_kind(bad_version, CheckpointError::Kind::BadVersion) &&
                   expect_kind(good.substr(0, good.size() - 50), CheckpointError::Kind::Truncated) &&
                   expect_kind(flipped, CheckpointError::Kind::DigestMismatch);

  // Shape mismatch against a differently sized vocabulary.
  bool shape_ok = false;
  try {
    auto other = toy_config(48, 10, 12);
    nn::ParamStore<float> store = std::move(loaded.params);
    model::InfillModel<float>::adopt(other, std::move(store));
  } catch (const CheckpointError& e) {
    shape_ok = e.kind() == CheckpointError::Kind::ShapeMismatch;
  }

  fs::remove(path);
  detail = std::string("round-trip ") + (bitwise ? "bitwise-exact" : "BROKEN") +
           "; magic/version/truncation/digest/shape errors all classified";
  return bitwise && errors_ok && shape_ok;
}

}  // namespace

int main() {
  std::printf("acceptance suite (fixtures: %s)\n", kData.c_str());
  run_criterion(1, "gradient correctness vs finite differences", criterion1);
  run_criterion(2, "constrained beam equals exhaustive search at saturation", criterion2);
  run_criterion(3, "keyword presence at the reported offset", criterion3);
  run_criterion(4, "abstract embedding dimensional accounting", criterion4);
  run_criterion(5, "overfit capacity and re-infilling on the 50-poem fixture", criterion5);
  run_criterion(6, "abstract-conditioning ablation separates from chance", criterion6);
  run_criterion(7, "masked corpus construction and splits", criterion7);
  run_criterion(8, "INFO metric rates and threshold boundaries", criterion8);
  run_criterion(9, "prosody validation on the bundled fixture", criterion9);
  run_criterion(10, "checkpoint round-trip and rejection classes", criterion10);

  if (g_failures == 0) {
    std::printf("all 10 criteria passed\n");
    return 0;
  }
  std::printf("%d criteria FAILED\n", g_failures);
  return 1;
}
