// Command-line front end: corpus building, training, generation, prosody
// validation and INFO evaluation over the library modules.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ipg/checkpoint.hpp"
#include "ipg/corpus.hpp"
#include "ipg/decode.hpp"
#include "ipg/digest.hpp"
#include "ipg/evalinfo.hpp"
#include "ipg/imageinfo.hpp"
#include "ipg/kernels.hpp"
#include "ipg/model.hpp"
#include "ipg/prosody.hpp"
#include "ipg/taxonomy.hpp"
#include "ipg/utf8.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace ipg;

namespace {

constexpr const char* kVersion = "0.1.0";

// Exit codes: 0 success, 1 domain failure, 2 usage/input error, 3 runtime abort.
constexpr int kExitOk = 0;
constexpr int kExitDomain = 1;
constexpr int kExitUsage = 2;
constexpr int kExitAbort = 3;

struct Timer {
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
};

json manifest_base(const std::string& command, uint64_t seed,
                   const std::vector<std::string>& inputs) {
  json m;
  m["command"] = command;
  m["version"] = kVersion;
  m["seed"] = seed;
  json digests = json::object();
  for (const auto& path : inputs) digests[path] = sha256_file_hex(path);
  m["inputs"] = digests;
  return m;
}

void write_manifest(const json& m, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write manifest: " + path);
  out << m.dump(2) << "\n";
}

std::string csv_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void require_file(const std::string& path, const char* flag) {
  if (!fs::exists(path)) throw InputError(std::string(flag) + " file not found: " + path);
}

// ---------------------------------------------------------------------------
// build-corpus
// ---------------------------------------------------------------------------

struct BuildCorpusArgs {
  std::string poems, rules, lexicon, out;
  int samples_per_line = -1;
  uint64_t seed = 0;
};

int cmd_build_corpus(const BuildCorpusArgs& a) {
  Timer timer;
  require_file(a.poems, "--poems");
  require_file(a.rules, "--rules");
  require_file(a.lexicon, "--lexicon");
  auto records = corpus::load_poems(a.poems);
  if (records.empty()) throw InputError("poem corpus is empty: " + a.poems);
  auto rules = corpus::RuleClassifier::load(a.rules);
  auto lexicon = corpus::SegmentLexicon::load(a.lexicon);

  auto vocab = corpus::build_vocab(records);
  for (auto& rec : records) rec.labels = corpus::label_poem(rec.poem, rules);

  auto split = corpus::split_corpus(records, {0.8, 0.1, 0.1}, a.seed);

  Rng subsample_rng(Rng(a.seed).fork(2).next());
  auto make_set = [&](const std::vector<corpus::PoemRecord>& recs) {
    std::vector<corpus::TrainingSample> out;
    for (const auto& rec : recs) {
      auto samples = corpus::make_masked_samples(rec, lexicon, vocab);
      if (a.samples_per_line < 0) {
        for (auto& s : samples) out.push_back({std::move(s), rec.labels});
        continue;
      }
      // Subsample kept-word samples per line; fully-masked ones always stay.
      for (int line = 1; line <= prosody::kLineCount; ++line) {
        std::vector<corpus::MaskedSample> word_samples;
        for (auto& s : samples)
          if (s.line_index == line && s.kept_len > 0) word_samples.push_back(s);
        subsample_rng.shuffle(word_samples);
        if (static_cast<int>(word_samples.size()) > a.samples_per_line)
          word_samples.resize(a.samples_per_line);
        for (auto& s : word_samples) out.push_back({std::move(s), rec.labels});
        for (auto& s : samples)
          if (s.line_index == line && s.kept_len == 0) out.push_back({s, rec.labels});
      }
    }
    return out;
  };

  fs::create_directories(a.out);
  vocab.save(a.out + "/vocab.txt");
  corpus::save_samples(make_set(split.train), a.out + "/samples_train.jsonl");
  corpus::save_samples(make_set(split.valid), a.out + "/samples_valid.jsonl");
  corpus::save_samples(make_set(split.test), a.out + "/samples_test.jsonl");

  json splits;
  auto ids = [](const std::vector<corpus::PoemRecord>& recs) {
    std::vector<std::string> v;
    for (const auto& r : recs) v.push_back(r.id);
    return v;
  };
  splits["train"] = ids(split.train);
  splits["valid"] = ids(split.valid);
  splits["test"] = ids(split.test);
  {
    std::ofstream out(a.out + "/splits.json", std::ios::binary);
    out << splits.dump(2) << "\n";
  }

  auto manifest = manifest_base("build-corpus", a.seed, {a.poems, a.rules, a.lexicon});
  manifest["config"] = {{"samples_per_line", a.samples_per_line}};
  manifest["outputs"] = {a.out + "/vocab.txt", a.out + "/samples_train.jsonl",
                         a.out + "/samples_valid.jsonl", a.out + "/samples_test.jsonl",
                         a.out + "/splits.json"};
  manifest["timing_s"] = timer.seconds();
  write_manifest(manifest, a.out + "/manifest.json");

  std::cout << "vocab " << vocab.size() << " tokens ("
            << vocab.size() - corpus::Vocabulary::kNumReserved << " characters + "
            << corpus::Vocabulary::kNumReserved << " reserved); poems " << records.size()
            << " split " << split.train.size() << "/" << split.valid.size() << "/"
            << split.test.size() << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// train
// ---------------------------------------------------------------------------

struct TrainArgs {
  std::string corpus_dir, config, out;
  std::string ablate;
  uint64_t seed = 0;
  int threads = 1;
  int epochs_override = -1;
};

model::TrainOptions train_options_from_config(const std::string& path) {
  model::TrainOptions opt;
  std::ifstream in(path);
  if (!in) throw InputError("cannot open config file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw InputError("malformed config JSON " + path + ": " + e.what());
  }
  if (j.contains("train")) {
    const auto& t = j["train"];
    opt.lr = t.value("lr", opt.lr);
    opt.batch = t.value("batch", opt.batch);
    opt.epochs = t.value("epochs", opt.epochs);
    opt.weight_decay = t.value("weight_decay", opt.weight_decay);
    opt.clip_norm = t.value("clip_norm", opt.clip_norm);
    opt.target_loss = t.value("target_loss", opt.target_loss);
  }
  return opt;
}

int cmd_train(const TrainArgs& a) {
  Timer timer;
  kernels::set_threads(a.threads);
  require_file(a.corpus_dir + "/vocab.txt", "--corpus");
  require_file(a.config, "--config");

  auto vocab = corpus::Vocabulary::load(a.corpus_dir + "/vocab.txt");
  auto train_set = corpus::load_samples(a.corpus_dir + "/samples_train.jsonl");
  auto valid_set = corpus::load_samples(a.corpus_dir + "/samples_valid.jsonl");
  if (train_set.empty()) throw InputError("no training samples in " + a.corpus_dir);

  auto config = model::ModelConfig::load(a.config);
  config.vocab_size = vocab.size();
  config.line_len = static_cast<int>(train_set.front().masked.target_ids.size());
  if (a.ablate == "abstract")
    config.use_abstract = false;
  else if (a.ablate == "infilling")
    config.use_infilling = false;
  else if (!a.ablate.empty())
    throw InputError("unknown ablation: " + a.ablate + " (expected abstract or infilling)");
  config.validate();

  if (!config.use_infilling) {
    for (auto& s : train_set) s.masked = model::strip_infilling(s.masked);
    for (auto& s : valid_set) s.masked = model::strip_infilling(s.masked);
  }

  auto opt = train_options_from_config(a.config);
  opt.seed = a.seed;
  opt.verbose = true;
  if (a.epochs_override > 0) opt.epochs = a.epochs_override;

  auto m = model::InfillModel<float>::create(config, a.seed);
  auto result = model::train(m, train_set, valid_set, opt);

  model::save_checkpoint(m, a.out);
  {
    std::ofstream hist(a.out + ".history.csv", std::ios::binary);
    hist << "epoch,train_loss,valid_loss\n";
    for (const auto& row : result.history)
      hist << row.epoch << "," << csv_double(row.train_loss) << ","
           << csv_double(row.valid_loss) << "\n";
  }
  auto manifest = manifest_base("train", a.seed,
                                {a.corpus_dir + "/vocab.txt",
                                 a.corpus_dir + "/samples_train.jsonl",
                                 a.corpus_dir + "/samples_valid.jsonl", a.config});
  manifest["config"] = json::parse(config.to_json());
  manifest["train"] = {{"lr", opt.lr},           {"batch", opt.batch},
                       {"epochs", opt.epochs},   {"weight_decay", opt.weight_decay},
                       {"clip_norm", opt.clip_norm}, {"target_loss", opt.target_loss},
                       {"threads", a.threads}};
  manifest["outputs"] = {a.out, a.out + ".history.csv"};
  manifest["timing_s"] = timer.seconds();
  manifest["best_epoch"] = result.best_epoch;
  manifest["best_valid"] = result.best_valid;
  manifest["aborted"] = result.aborted;
  write_manifest(manifest, a.out + ".manifest.json");

  if (result.aborted) {
    std::cerr << "training aborted: " << result.abort_reason
              << " (kept the best checkpoint so far)\n";
    return kExitAbort;
  }
  std::cout << "trained " << result.history.size() << " epochs; best valid "
            << result.best_valid << " at epoch " << result.best_epoch << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// generate
// ---------------------------------------------------------------------------

struct GenerateArgs {
  std::string ckpt, vocab;
  std::string tags, keywords, taxonomy;
  std::string image, tags_endpoint, tags_token;
  std::string labels_file;
  std::string season = "other", time = "other", weather = "other";
  std::string prosody;  // tones,rhymes,pattern
  double prosody_weight = 1.0;
  int beam = 0;
  bool as_json = false;
  uint64_t seed = 0;
  int threads = 1;
};

std::pair<model::InfillModel<float>, corpus::Vocabulary> load_model_and_vocab(
    const std::string& ckpt, const std::string& vocab_path) {
  auto m = model::load_checkpoint(ckpt);
  auto vocab = corpus::Vocabulary::load(vocab_path);
  if (vocab.size() != m.config.vocab_size)
    throw CheckpointError(CheckpointError::Kind::ShapeMismatch,
                          "checkpoint vocab_size " + std::to_string(m.config.vocab_size) +
                              " does not match vocabulary file with " +
                              std::to_string(vocab.size()) + " tokens");
  return {std::move(m), std::move(vocab)};
}

AbstractLabels labels_from_args(const GenerateArgs& a) {
  if (!a.labels_file.empty()) return imageinfo::load_labels(a.labels_file);
  if (a.season != "other" || a.time != "other" || a.weather != "other") {
    AbstractLabels l;
    l.set(Aspect::Season, a.season);
    l.set(Aspect::Time, a.time);
    l.set(Aspect::Weather, a.weather);
    return l;
  }
  if (!a.image.empty()) {
    // Demo classifier path: labels read off the raster, thresholded.
    auto raster = imageinfo::load_image(a.image);
    return imageinfo::apply_threshold(imageinfo::heuristic_classify(raster));
  }
  return AbstractLabels{};
}

int cmd_generate(const GenerateArgs& a) {
  kernels::set_threads(a.threads);
  require_file(a.ckpt, "--ckpt");
  require_file(a.vocab, "--vocab");
  if (!a.tags.empty()) require_file(a.tags, "--tags");
  if (!a.taxonomy.empty()) require_file(a.taxonomy, "--taxonomy");
  if (!a.labels_file.empty()) require_file(a.labels_file, "--labels");
  if (!a.image.empty()) require_file(a.image, "--image");
  auto [m, vocab] = load_model_and_vocab(a.ckpt, a.vocab);

  decode::GenerationRequest req;
  req.line_len = m.config.line_len;
  req.beam_size = a.beam > 0 ? a.beam : m.config.beam_size;
  req.labels = labels_from_args(a);

  if (!a.keywords.empty()) {
    // Comma-separated, up to 4, empty entries leave a line keyword-less.
    std::vector<std::string> parts;
    std::string cur;
    for (char ch : a.keywords) {
      if (ch == ',') {
        parts.push_back(cur);
        cur.clear();
      } else {
        cur.push_back(ch);
      }
    }
    parts.push_back(cur);
    if (parts.size() > 4) throw InputError("--keywords takes at most 4 comma-separated phrases");
    for (size_t i = 0; i < parts.size(); ++i) req.keywords[i] = parts[i];
  } else {
    imageinfo::ImageTags tags;
    bool have_tags = false;
    if (!a.tags.empty()) {
      tags = imageinfo::load_tags(a.tags);
      have_tags = true;
    } else if (!a.image.empty()) {
      // Remote tagger, endpoint/token from flags or the environment.
      std::string endpoint = a.tags_endpoint;
      std::string token = a.tags_token;
      if (endpoint.empty())
        if (const char* env = std::getenv("IPG_TAG_ENDPOINT")) endpoint = env;
      if (token.empty())
        if (const char* env = std::getenv("IPG_TAG_TOKEN")) token = env;
      if (!endpoint.empty()) {
        tags = imageinfo::fetch_tags_http(endpoint, a.image, token);
        have_tags = true;
      }
    }
    if (have_tags) {
      if (a.taxonomy.empty()) throw InputError("image tags require --taxonomy");
      auto tax = taxonomy::PhraseTaxonomy::load(a.taxonomy);
      auto set = taxonomy::select_line_keywords(tags, tax, req.line_len);
      for (size_t i = 0; i < set.entries.size(); ++i) req.keywords[i] = set.entries[i].phrase;
    }
  }

  decode::ProsodySettings prosody_settings;
  if (!a.prosody.empty()) {
    auto c1 = a.prosody.find(',');
    auto c2 = c1 == std::string::npos ? std::string::npos : a.prosody.find(',', c1 + 1);
    if (c2 == std::string::npos)
      throw InputError("--prosody expects tonefile,rhymefile,patternfile");
    prosody_settings.tones = prosody::ToneDict::load(a.prosody.substr(0, c1));
    prosody_settings.rhymes = prosody::RhymeDict::load(a.prosody.substr(c1 + 1, c2 - c1 - 1));
    prosody_settings.pattern = prosody::TonalPattern::load(a.prosody.substr(c2 + 1));
    prosody_settings.weight = a.prosody_weight;
    req.prosody = &prosody_settings;
  }

  auto result = decode::generate_poem(req, m, vocab);
  for (const auto& line : result.poem.line_strings()) std::cout << line << "\n";
  if (a.as_json) {
    auto j = json::parse(result.to_json());
    j["manifest"] = manifest_base("generate", a.seed, {a.ckpt, a.vocab});
    std::cout << j.dump() << "\n";
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// evaluate
// ---------------------------------------------------------------------------

struct EvaluateArgs {
  std::string ckpt, vocab, manifest, rules, taxonomy, out;
  bool strict = false;
  int beam = 0;
  uint64_t seed = 0;
  int threads = 1;
};

int cmd_evaluate(const EvaluateArgs& a) {
  Timer timer;
  kernels::set_threads(a.threads);
  require_file(a.ckpt, "--ckpt");
  require_file(a.vocab, "--vocab");
  require_file(a.manifest, "--images-manifest");
  require_file(a.rules, "--rules");
  require_file(a.taxonomy, "--taxonomy");
  auto [m, vocab] = load_model_and_vocab(a.ckpt, a.vocab);
  auto rules = corpus::RuleClassifier::load(a.rules);
  auto tax = taxonomy::PhraseTaxonomy::load(a.taxonomy);

  std::ifstream in(a.manifest);
  if (!in) throw InputError("cannot open images manifest: " + a.manifest);

  std::vector<prosody::Poem> poems;
  std::vector<AbstractLabels> image_labels;
  int skipped_rows = 0;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    json row;
    try {
      row = json::parse(line);
    } catch (const json::exception& e) {
      throw InputError(a.manifest + ":" + std::to_string(lineno) + ": malformed row: " +
                       e.what());
    }
    if (!row.contains("labels") && !row.contains("labels_file")) {
      std::cerr << "warning: row " << lineno << " (" << row.value("id", "?")
                << ") has no labels; skipped\n";
      ++skipped_rows;
      continue;
    }

    imageinfo::ImageTags tags;
    if (row.contains("tags_file")) {
      tags = imageinfo::load_tags(row["tags_file"].get<std::string>());
    } else if (row.contains("tags")) {
      for (const auto& t : row["tags"])
        tags.tags.push_back({t.at("tag").get<std::string>(), t.at("confidence").get<double>()});
    }

    AbstractLabels labels;
    if (row.contains("labels_file")) {
      labels = imageinfo::load_labels(row["labels_file"].get<std::string>());
    } else {
      const auto& l = row["labels"];
      labels.set(Aspect::Season, l.value("season", "other"));
      labels.set(Aspect::Time, l.value("time", "other"));
      labels.set(Aspect::Weather, l.value("weather", "other"));
    }

    decode::GenerationRequest req;
    req.line_len = m.config.line_len;
    req.beam_size = a.beam > 0 ? a.beam : m.config.beam_size;
    req.labels = labels;
    auto set = taxonomy::select_line_keywords(tags, tax, req.line_len);
    for (size_t i = 0; i < set.entries.size(); ++i) {
      bool in_vocab = true;
      for (const auto& ch : utf8::chars(set.entries[i].phrase))
        in_vocab = in_vocab && vocab.contains(ch);
      if (in_vocab) req.keywords[i] = set.entries[i].phrase;
    }

    poems.push_back(decode::generate_poem(req, m, vocab).poem);
    image_labels.push_back(labels);
  }
  if (poems.empty()) throw InputError("images manifest has no usable rows: " + a.manifest);

  auto result = evalinfo::evaluate_run(poems, image_labels, rules);
  json out_json = json::parse(result.to_json(a.strict));
  out_json["rows"] = static_cast<int>(poems.size());
  out_json["skipped_rows"] = skipped_rows;

  {
    std::ofstream out(a.out, std::ios::binary);
    if (!out) throw InputError("cannot write result: " + a.out);
    out << out_json.dump(2) << "\n";
  }
  auto manifest =
      manifest_base("evaluate", a.seed, {a.ckpt, a.vocab, a.manifest, a.rules, a.taxonomy});
  manifest["outputs"] = {a.out};
  manifest["timing_s"] = timer.seconds();
  write_manifest(manifest, a.out + ".manifest.json");

  std::cout << out_json.dump(2) << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// validate
// ---------------------------------------------------------------------------

struct ValidateArgs {
  std::string poem, tones, rhymes, pattern;
};

int cmd_validate(const ValidateArgs& a) {
  require_file(a.poem, "--poem");
  require_file(a.tones, "--tones");
  require_file(a.rhymes, "--rhymes");
  require_file(a.pattern, "--pattern");
  std::ifstream in(a.poem);
  if (!in) throw InputError("cannot open poem file: " + a.poem);
  prosody::Poem poem;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    poem.lines.push_back(utf8::chars(line));
  }
  if (poem.lines.empty()) throw InputError("poem file is empty: " + a.poem);
  poem.line_len = static_cast<int>(poem.lines[0].size());
  poem.validate();

  auto tones = prosody::ToneDict::load(a.tones);
  auto rhymes = prosody::RhymeDict::load(a.rhymes);
  auto pattern = prosody::TonalPattern::load(a.pattern);

  auto report = prosody::analyze(poem, pattern, tones, rhymes);
  std::cout << "rhyme: " << (report.rhyme_ok ? "ok" : "FAIL") << "\n";
  std::cout << "tone violations: " << report.tone_violations.size() << "\n";
  for (const auto& v : report.tone_violations)
    std::cout << "  line " << v.line + 1 << " char " << v.pos + 1 << ": expected "
              << prosody::tone_req_name(v.expected) << ", found " << prosody::tone_name(v.found)
              << "\n";
  std::cout << "unknown tones: " << report.unknown_count << "\n";
  std::cout << "score: " << prosody::prosody_score(report) << "\n";
  return report.conformant() ? kExitOk : kExitDomain;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"quatrain generation toolkit: infilling seq2seq with scene conditioning"};
  app.require_subcommand(1);

  BuildCorpusArgs bc;
  auto* sub_bc = app.add_subcommand("build-corpus", "build the fill-in-the-blank corpus");
  sub_bc->add_option("--poems", bc.poems, "poem corpus JSONL")->required();
  sub_bc->add_option("--rules", bc.rules, "rule classifier JSON")->required();
  sub_bc->add_option("--lexicon", bc.lexicon, "segmentation lexicon")->required();
  sub_bc->add_option("--out", bc.out, "output directory")->required();
  sub_bc->add_option("--samples-per-line", bc.samples_per_line,
                     "random kept-word samples per line (-1 = all)");
  sub_bc->add_option("--seed", bc.seed, "random seed");

  TrainArgs tr;
  auto* sub_tr = app.add_subcommand("train", "train the infilling model");
  sub_tr->add_option("--corpus", tr.corpus_dir, "corpus directory from build-corpus")->required();
  sub_tr->add_option("--config", tr.config, "model/train config JSON")->required();
  sub_tr->add_option("--out", tr.out, "checkpoint output path")->required();
  sub_tr->add_option("--ablate", tr.ablate, "drop a component: abstract | infilling");
  sub_tr->add_option("--seed", tr.seed, "random seed");
  sub_tr->add_option("--threads", tr.threads, "worker threads for the kernels");
  sub_tr->add_option("--epochs", tr.epochs_override, "override the config epoch count");

  GenerateArgs gen;
  auto* sub_gen = app.add_subcommand("generate", "generate a quatrain");
  sub_gen->add_option("--ckpt", gen.ckpt, "model checkpoint")->required();
  sub_gen->add_option("--vocab", gen.vocab, "vocabulary file")->required();
  sub_gen->add_option("--tags", gen.tags, "image tags JSON");
  sub_gen->add_option("--image", gen.image, "image file (PPM P6 or PNG)");
  sub_gen->add_option("--tags-endpoint", gen.tags_endpoint,
                      "HTTP tagging service (or IPG_TAG_ENDPOINT)");
  sub_gen->add_option("--tags-token", gen.tags_token,
                      "bearer token for the tagging service (or IPG_TAG_TOKEN)");
  sub_gen->add_option("--keywords", gen.keywords, "up to 4 comma-separated keywords");
  sub_gen->add_option("--taxonomy", gen.taxonomy, "phrase taxonomy TSV");
  sub_gen->add_option("--labels", gen.labels_file, "abstract labels JSON");
  sub_gen->add_option("--season", gen.season, "season label");
  sub_gen->add_option("--time", gen.time, "time label");
  sub_gen->add_option("--weather", gen.weather, "weather label");
  sub_gen->add_option("--prosody", gen.prosody, "tonefile,rhymefile,patternfile");
  sub_gen->add_option("--prosody-weight", gen.prosody_weight, "ranking penalty weight");
  sub_gen->add_option("--beam", gen.beam, "beam size override");
  sub_gen->add_flag("--json", gen.as_json, "print diagnostics JSON");
  sub_gen->add_option("--seed", gen.seed, "random seed (recorded in the manifest)");
  sub_gen->add_option("--threads", gen.threads, "worker threads for the kernels");

  EvaluateArgs ev;
  auto* sub_ev = app.add_subcommand("evaluate", "generate per manifest row and score INFO");
  sub_ev->add_option("--ckpt", ev.ckpt, "model checkpoint")->required();
  sub_ev->add_option("--vocab", ev.vocab, "vocabulary file")->required();
  sub_ev->add_option("--images-manifest", ev.manifest, "JSONL of {id, tags, labels}")->required();
  sub_ev->add_option("--rules", ev.rules, "rule classifier JSON")->required();
  sub_ev->add_option("--taxonomy", ev.taxonomy, "phrase taxonomy TSV")->required();
  sub_ev->add_option("--out", ev.out, "result JSON path")->required();
  sub_ev->add_flag("--strict-all3", ev.strict, "also report the all-aspects-match rate");
  sub_ev->add_option("--beam", ev.beam, "beam size override");
  sub_ev->add_option("--seed", ev.seed, "random seed (recorded in the manifest)");
  sub_ev->add_option("--threads", ev.threads, "worker threads for the kernels");

  ValidateArgs va;
  auto* sub_va = app.add_subcommand("validate", "check a poem against prosody rules");
  sub_va->add_option("--poem", va.poem, "poem file, one line per row")->required();
  sub_va->add_option("--tones", va.tones, "tone dictionary TSV")->required();
  sub_va->add_option("--rhymes", va.rhymes, "rhyme dictionary TSV")->required();
  sub_va->add_option("--pattern", va.pattern, "tonal pattern file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (sub_bc->parsed()) return cmd_build_corpus(bc);
    if (sub_tr->parsed()) return cmd_train(tr);
    if (sub_gen->parsed()) return cmd_generate(gen);
    if (sub_ev->parsed()) return cmd_evaluate(ev);
    if (sub_va->parsed()) return cmd_validate(va);
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const CheckpointError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const TagServiceError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitDomain;
  } catch (const NumericError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitAbort;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitAbort;
  }
  return kExitUsage;
}
