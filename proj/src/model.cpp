#include "ipg/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <numeric>

#include <json.hpp>

namespace ipg::model {

using corpus::MaskedSample;
using corpus::TrainingSample;
using corpus::Vocabulary;
using nlohmann::json;

void ModelConfig::validate() const {
  if (vocab_size <= Vocabulary::kNumReserved)
    throw InputError("vocab_size must exceed the reserved token count");
  if (embed_dim <= 0 || hidden_dim <= 0) throw InputError("embed_dim and hidden_dim must be positive");
  for (int d : aspect_dims)
    if (d != kAspectDim) throw InputError("aspect one-hot dims are fixed at 5");
  if (dropout < 0.0 || dropout >= 1.0) throw InputError("dropout must be in [0, 1)");
  if (beam_size < 1) throw InputError("beam_size must be at least 1");
  if (line_len != 5 && line_len != 7) throw InputError("line_len must be 5 or 7");
}

std::string ModelConfig::to_json() const {
  json j;
  // Informational: pins the recurrent-cell convention this store was trained
  // under. Ignored on load.
  j["cell"] = "gru: z=sig(Wz x+Uz h+bz), r=sig(Wr x+Ur h+br), "
              "c=tanh(Wc x+Uc(r*h)+bc), h'=(1-z)*h+z*c";
  j["vocab_size"] = vocab_size;
  j["embed_dim"] = embed_dim;
  j["hidden_dim"] = hidden_dim;
  j["aspect_dims"] = aspect_dims;
  j["use_abstract"] = use_abstract;
  j["use_infilling"] = use_infilling;
  j["dropout"] = dropout;
  j["beam_size"] = beam_size;
  j["line_len"] = line_len;
  return j.dump();
}

namespace {

ModelConfig config_from_json_obj(const json& j) {
  if (!j.is_object()) throw InputError("model config must be a JSON object");
  ModelConfig c;
  try {
    c.vocab_size = j.value("vocab_size", c.vocab_size);
    c.embed_dim = j.value("embed_dim", c.embed_dim);
    c.hidden_dim = j.value("hidden_dim", c.hidden_dim);
    if (j.contains("aspect_dims")) {
      auto a = j.at("aspect_dims").get<std::vector<int>>();
      if (a.size() != kNumAspects) throw InputError("aspect_dims must have 3 entries");
      std::copy(a.begin(), a.end(), c.aspect_dims.begin());
    }
    c.use_abstract = j.value("use_abstract", c.use_abstract);
    c.use_infilling = j.value("use_infilling", c.use_infilling);
    c.dropout = j.value("dropout", c.dropout);
    c.beam_size = j.value("beam_size", c.beam_size);
    c.line_len = j.value("line_len", c.line_len);
  } catch (const json::exception& e) {
    throw InputError(std::string("bad model config: ") + e.what());
  }
  return c;
}

}  // namespace

ModelConfig ModelConfig::from_json(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw InputError(std::string("malformed config JSON: ") + e.what());
  }
  return config_from_json_obj(j);
}

ModelConfig ModelConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open config file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw InputError("malformed config JSON " + path + ": " + e.what());
  }
  if (j.is_object() && j.contains("model")) return config_from_json_obj(j["model"]);
  return config_from_json_obj(j);
}

namespace {

template <typename T>
std::map<std::string, std::vector<size_t>> expected_shapes(const ModelConfig& c) {
  const size_t h = c.hidden_dim, e = c.embed_dim, v = c.vocab_size;
  const size_t in = c.input_dim();
  std::map<std::string, std::vector<size_t>> shapes;
  shapes["embed"] = {v, e};
  for (const std::string& prefix : {std::string("enc_fwd."), std::string("enc_bwd.")}) {
    for (const std::string& gate :
         {std::string("update."), std::string("reset."), std::string("cand.")}) {
      shapes[prefix + gate + "w"] = {h, in};
      shapes[prefix + gate + "u"] = {h, h};
      shapes[prefix + gate + "b"] = {h};
    }
  }
  for (const std::string& gate :
       {std::string("update."), std::string("reset."), std::string("cand.")}) {
    shapes["dec." + gate + "w"] = {h, e + 2 * h};
    shapes["dec." + gate + "u"] = {h, h};
    shapes["dec." + gate + "b"] = {h};
  }
  shapes["attn.w"] = {h, h};
  shapes["attn.u"] = {h, 2 * h};
  shapes["attn.v"] = {h};
  shapes["init.w"] = {h, h};
  shapes["init.b"] = {h};
  shapes["out.w"] = {v, 3 * h};
  shapes["out.b"] = {v};
  return shapes;
}

bool is_bias_name(const std::string& name) {
  return name.size() > 2 && name.compare(name.size() - 2, 2, ".b") == 0;
}

}  // namespace

template <typename T>
InfillModel<T> InfillModel<T>::create(const ModelConfig& config, uint64_t seed) {
  config.validate();
  InfillModel<T> m;
  m.config = config;
  for (const auto& [name, shape] : expected_shapes<T>(config)) m.params.add(name, shape);

  // Uniform(-0.08, 0.08) everywhere except biases, drawn in sorted-name order
  // so a fixed seed always produces the same parameters.
  Rng rng(seed);
  for (auto& [name, p] : m.params.entries())
    if (!is_bias_name(name)) p.value.init_uniform(rng, 0.08);
  return m;
}

template <typename T>
InfillModel<T> InfillModel<T>::adopt(const ModelConfig& config, nn::ParamStore<T>&& store) {
  config.validate();
  auto expected = expected_shapes<T>(config);
  if (store.entries().size() != expected.size())
    throw CheckpointError(CheckpointError::Kind::ShapeMismatch,
                          "parameter count does not match the config");
  for (const auto& [name, shape] : expected) {
    if (!store.has(name))
      throw CheckpointError(CheckpointError::Kind::ShapeMismatch, "missing parameter: " + name);
    if (store.value(name).shape != shape)
      throw CheckpointError(CheckpointError::Kind::ShapeMismatch,
                            "parameter shape mismatch for " + name);
  }
  InfillModel<T> m;
  m.config = config;
  m.params = std::move(store);
  return m;
}

template <typename T>
void abstract_embed(InfillModel<T>& m, int token_id, const AbstractLabels& labels, T* out) {
  const auto& c = m.config;
  if (token_id < 0 || token_id >= c.vocab_size)
    throw Error("token id out of vocabulary: " + std::to_string(token_id));
  size_t off = 0;
  if (c.use_abstract) {
    for (int a = 0; a < kNumAspects; ++a) {
      for (int k = 0; k < c.aspect_dims[a]; ++k) out[off + k] = T(0);
      out[off + labels.idx[a]] = T(1);
      off += c.aspect_dims[a];
    }
  }
  const T* row = m.params.value("embed").data() + static_cast<size_t>(token_id) * c.embed_dim;
  std::copy(row, row + c.embed_dim, out + off);
}

namespace {

// Encoder pass shared by training, evaluation and decoding: abstract-embeds
// every input token, runs the bidirectional GRU and projects the initial
// decoder state.
template <typename T>
struct EncoderRun {
  std::vector<std::vector<T>> inputs;
  std::vector<std::vector<uint8_t>> masks;
  nn::BiGruCache<T> cache;
  std::vector<std::vector<T>> H;
  std::vector<T> hb;  // backward GRU final state (position 0, second half)
  std::vector<T> s0;
};

template <typename T>
EncoderRun<T> run_encoder(InfillModel<T>& m, const ModelRefs<T>& r, const std::vector<int>& ids,
                          const AbstractLabels& labels, double rate, Rng* rng, bool keep_cache) {
  if (ids.empty()) throw Error("encoder input sequence is empty");
  const auto& c = m.config;
  const size_t in_dim = c.input_dim(), h = c.hidden_dim;
  EncoderRun<T> run;
  run.inputs.assign(ids.size(), std::vector<T>(in_dim));
  run.masks.resize(ids.size());
  for (size_t t = 0; t < ids.size(); ++t) {
    abstract_embed(m, ids[t], labels, run.inputs[t].data());
    if (rate > 0) nn::dropout_forward(run.inputs[t].data(), in_dim, rate, *rng, run.masks[t]);
  }
  run.H = nn::bigru_forward(r.enc_fwd, r.enc_bwd, run.inputs, keep_cache ? &run.cache : nullptr);

  run.hb.assign(run.H[0].begin() + h, run.H[0].end());
  std::vector<T> pre(h);
  nn::affine_forward(r.init_proj, run.hb.data(), pre.data());
  run.s0.resize(h);
  for (size_t i = 0; i < h; ++i)
    run.s0[i] = static_cast<T>(std::tanh(static_cast<double>(pre[i])));
  return run;
}

}  // namespace

template <typename T>
ForwardStats forward(InfillModel<T>& m, const MaskedSample& sample, const AbstractLabels& labels,
                     bool want_probs) {
  auto r = bind_refs(m);
  const auto& c = m.config;
  const size_t h = c.hidden_dim, e = c.embed_dim, v = c.vocab_size;
  const auto& tgt = sample.target_ids;
  if (tgt.empty()) throw Error("sample has an empty target");

  auto enc = run_encoder(m, r, sample.input_ids, labels, 0.0, nullptr, false);
  auto attn_ctx = nn::attn_begin(r.attn, enc.H);

  ForwardStats stats;
  std::vector<T> s = enc.s0, snew(h), u(e + 2 * h), o(3 * h), logits(v), eprev(e);
  for (size_t mstep = 0; mstep < tgt.size(); ++mstep) {
    int prev = mstep == 0 ? Vocabulary::kBos : tgt[mstep - 1];
    const T* row = r.embed->data() + static_cast<size_t>(prev) * e;
    std::copy(row, row + e, eprev.begin());
    auto cvec = nn::attn_forward(r.attn, attn_ctx, enc.H, s.data(), false);
    std::copy(eprev.begin(), eprev.end(), u.begin());
    std::copy(cvec.begin(), cvec.end(), u.begin() + e);
    nn::gru_forward(r.dec, u.data(), s.data(), snew.data(),
                    static_cast<nn::GruStepCache<T>*>(nullptr));
    std::copy(snew.begin(), snew.end(), o.begin());
    std::copy(cvec.begin(), cvec.end(), o.begin() + h);
    nn::affine_forward(r.out_proj, o.data(), logits.data());
    stats.loss += nn::softmax_xent(logits.data(), v, tgt[mstep], static_cast<T*>(nullptr));
    if (want_probs) {
      std::vector<double> lp(v);
      nn::log_softmax(logits.data(), v, lp.data());
      for (double& x : lp) x = std::exp(x);
      stats.step_probs.push_back(std::move(lp));
    }
    s.swap(snew);
  }
  stats.loss /= static_cast<double>(tgt.size());
  return stats;
}

template <typename T>
double backprop_sample(InfillModel<T>& m, const MaskedSample& sample, const AbstractLabels& labels,
                       double scale, Rng& dropout_rng, bool use_dropout) {
  auto r = bind_refs(m);
  const auto& c = m.config;
  const size_t h = c.hidden_dim, e = c.embed_dim, v = c.vocab_size;
  const size_t in_dim = c.input_dim();
  const auto& tgt = sample.target_ids;
  if (tgt.empty()) throw Error("sample has an empty target");
  const double rate = use_dropout ? c.dropout : 0.0;

  auto enc = run_encoder(m, r, sample.input_ids, labels, rate, &dropout_rng, true);
  auto attn_ctx = nn::attn_begin(r.attn, enc.H);
  const size_t n = enc.H.size();
  const size_t steps = tgt.size();

  std::vector<nn::GruStepCache<T>> dec_caches(steps);
  std::vector<std::vector<T>> states(steps + 1);
  std::vector<std::vector<T>> contexts(steps), o_drop(steps), dlogits(steps);
  std::vector<std::vector<uint8_t>> o_masks(steps), eprev_masks(steps);
  states[0] = enc.s0;

  double total_loss = 0.0;
  std::vector<T> u(e + 2 * h), logits(v);
  for (size_t mstep = 0; mstep < steps; ++mstep) {
    int prev = mstep == 0 ? Vocabulary::kBos : tgt[mstep - 1];
    std::vector<T> eprev(e);
    const T* row = r.embed->data() + static_cast<size_t>(prev) * e;
    std::copy(row, row + e, eprev.begin());
    if (rate > 0) nn::dropout_forward(eprev.data(), e, rate, dropout_rng, eprev_masks[mstep]);

    contexts[mstep] =
        nn::attn_forward(r.attn, attn_ctx, enc.H, states[mstep].data(), true);
    std::copy(eprev.begin(), eprev.end(), u.begin());
    std::copy(contexts[mstep].begin(), contexts[mstep].end(), u.begin() + e);

    states[mstep + 1].resize(h);
    nn::gru_forward(r.dec, u.data(), states[mstep].data(), states[mstep + 1].data(),
                    &dec_caches[mstep]);

    auto& o = o_drop[mstep];
    o.resize(3 * h);
    std::copy(states[mstep + 1].begin(), states[mstep + 1].end(), o.begin());
    std::copy(contexts[mstep].begin(), contexts[mstep].end(), o.begin() + h);
    if (rate > 0) nn::dropout_forward(o.data(), 3 * h, rate, dropout_rng, o_masks[mstep]);

    nn::affine_forward(r.out_proj, o.data(), logits.data());
    dlogits[mstep].resize(v);
    total_loss += nn::softmax_xent(logits.data(), v, tgt[mstep], dlogits[mstep].data());
  }
  const double per_char = total_loss / static_cast<double>(steps);

  // Backward; the differentiated objective is scale * mean per-character
  // cross-entropy.
  const T gscale = static_cast<T>(scale / static_cast<double>(steps));
  std::vector<std::vector<T>> dH(n, std::vector<T>(2 * h, T(0)));
  std::vector<T> ds_next(h, T(0)), dO(3 * h), du(e + 2 * h), dc(2 * h), ds_total(h), ds_prev(h);
  for (size_t mstep = steps; mstep-- > 0;) {
    for (T& g : dlogits[mstep]) g *= gscale;
    std::fill(dO.begin(), dO.end(), T(0));
    nn::affine_backward(r.out_proj, o_drop[mstep].data(), dlogits[mstep].data(), dO.data());
    if (rate > 0) nn::dropout_backward(dO.data(), 3 * h, rate, o_masks[mstep]);

    ds_total = ds_next;
    for (size_t i = 0; i < h; ++i) ds_total[i] += dO[i];
    std::fill(dc.begin(), dc.end(), T(0));
    for (size_t i = 0; i < 2 * h; ++i) dc[i] += dO[h + i];

    std::fill(du.begin(), du.end(), T(0));
    std::fill(ds_prev.begin(), ds_prev.end(), T(0));
    nn::gru_backward(r.dec, dec_caches[mstep], ds_total.data(), du.data(), ds_prev.data());

    if (rate > 0) nn::dropout_backward(du.data(), e, rate, eprev_masks[mstep]);
    int prev = mstep == 0 ? Vocabulary::kBos : tgt[mstep - 1];
    T* grow = r.embed_grad->data() + static_cast<size_t>(prev) * e;
    for (size_t i = 0; i < e; ++i) grow[i] += du[i];
    for (size_t i = 0; i < 2 * h; ++i) dc[i] += du[e + i];

    nn::attn_backward(r.attn, attn_ctx, enc.H, mstep, dc.data(), ds_prev.data(), dH);
    ds_next.swap(ds_prev);
  }

  // Initial-state projection: s0 = tanh(W hb + b).
  std::vector<T> dpre(h), dhb(h, T(0));
  for (size_t i = 0; i < h; ++i) dpre[i] = ds_next[i] * (T(1) - enc.s0[i] * enc.s0[i]);
  nn::affine_backward(r.init_proj, enc.hb.data(), dpre.data(), dhb.data());
  for (size_t i = 0; i < h; ++i) dH[0][h + i] += dhb[i];

  auto dinputs = nn::bigru_backward(r.enc_fwd, r.enc_bwd, enc.cache, dH);
  const size_t onehot_off = c.use_abstract ? static_cast<size_t>(c.abstract_dim()) : 0;
  for (size_t t = 0; t < n; ++t) {
    if (rate > 0) nn::dropout_backward(dinputs[t].data(), in_dim, rate, enc.masks[t]);
    T* grow = r.embed_grad->data() + static_cast<size_t>(sample.input_ids[t]) * e;
    for (size_t i = 0; i < e; ++i) grow[i] += dinputs[t][onehot_off + i];
  }
  return per_char;
}

template <typename T>
double evaluate_loss(InfillModel<T>& m, const std::vector<TrainingSample>& samples) {
  if (samples.empty()) throw Error("cannot evaluate an empty sample set");
  double sum = 0.0;
  for (const auto& s : samples) sum += forward(m, s.masked, s.labels, false).loss;
  return sum / static_cast<double>(samples.size());
}

template <typename T>
TrainResult train(InfillModel<T>& m, const std::vector<TrainingSample>& train_set,
                  const std::vector<TrainingSample>& valid_set, const TrainOptions& opt) {
  if (train_set.empty()) throw InputError("training set is empty");
  if (opt.batch < 1) throw InputError("batch size must be at least 1");

  nn::AdamHyper hyper;
  hyper.lr = opt.lr;
  hyper.weight_decay = opt.weight_decay;
  hyper.clip_norm = opt.clip_norm;
  nn::Adam<T> adam(hyper);

  Rng root(opt.seed);
  Rng shuffle_rng = root.fork(1);
  const bool use_dropout = m.config.dropout > 0.0;

  TrainResult result;
  std::map<std::string, nn::Tensor<T>> best;
  auto snapshot = [&] {
    best.clear();
    for (const auto& [name, p] : m.params.entries()) best[name] = p.value;
  };
  auto restore = [&] {
    for (auto& [name, p] : m.params.entries()) p.value = best.at(name);
  };
  snapshot();

  std::vector<size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), size_t(0));

  for (int epoch = 1; epoch <= opt.epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    double loss_sum = 0.0;
    size_t seen = 0;
    bool diverged = false;

    for (size_t start = 0; start < order.size() && !diverged; start += opt.batch) {
      const size_t end = std::min(order.size(), start + static_cast<size_t>(opt.batch));
      const double inv = 1.0 / static_cast<double>(end - start);
      double batch_loss = 0.0;
      for (size_t k = start; k < end; ++k) {
        const auto& s = train_set[order[k]];
        // One dropout stream per (epoch, sample), independent of batch layout.
        Rng drng = root.fork((static_cast<uint64_t>(epoch) << 32) | order[k]);
        batch_loss += backprop_sample(m, s.masked, s.labels, inv, drng, use_dropout) * inv;
      }
      if (!std::isfinite(batch_loss)) {
        diverged = true;
        result.abort_reason = "non-finite training loss";
        break;
      }
      try {
        adam.step(m.params);
      } catch (const NumericError& e) {
        diverged = true;
        result.abort_reason = e.what();
        break;
      }
      loss_sum += batch_loss * static_cast<double>(end - start);
      seen += end - start;
    }

    if (diverged) {
      restore();
      result.aborted = true;
      break;
    }

    EpochStats st;
    st.epoch = epoch;
    st.train_loss = loss_sum / static_cast<double>(seen);
    st.valid_loss = valid_set.empty() ? st.train_loss : evaluate_loss(m, valid_set);
    result.history.push_back(st);
    if (opt.verbose)
      std::cerr << "epoch " << epoch << " train " << st.train_loss << " valid " << st.valid_loss
                << "\n";

    if (st.valid_loss < result.best_valid) {
      result.best_valid = st.valid_loss;
      result.best_epoch = epoch;
      snapshot();
    }
    if (opt.target_loss > 0 && st.train_loss < opt.target_loss) break;
  }

  restore();  // leave the model at the best-validation parameters
  return result;
}

template <typename T>
EncoderContext<T> encode(InfillModel<T>& m, const std::vector<int>& input_ids,
                         const AbstractLabels& labels) {
  auto r = bind_refs(m);
  auto run = run_encoder(m, r, input_ids, labels, 0.0, nullptr, false);
  EncoderContext<T> ctx;
  ctx.H = std::move(run.H);
  ctx.attn_ctx = nn::attn_begin(r.attn, ctx.H);
  ctx.s0 = std::move(run.s0);
  return ctx;
}

template <typename T>
std::vector<T> decode_step(InfillModel<T>& m, EncoderContext<T>& enc, int prev_token,
                           const std::vector<T>& s_prev, std::vector<double>& logprobs_out) {
  auto r = bind_refs(m);
  const auto& c = m.config;
  const size_t h = c.hidden_dim, e = c.embed_dim, v = c.vocab_size;

  std::vector<T> u(e + 2 * h), o(3 * h), logits(v), snew(h);
  const T* row = r.embed->data() + static_cast<size_t>(prev_token) * e;
  std::copy(row, row + e, u.begin());
  auto cvec = nn::attn_forward(r.attn, enc.attn_ctx, enc.H, s_prev.data(), false);
  std::copy(cvec.begin(), cvec.end(), u.begin() + e);
  nn::gru_forward(r.dec, u.data(), s_prev.data(), snew.data(),
                  static_cast<nn::GruStepCache<T>*>(nullptr));
  std::copy(snew.begin(), snew.end(), o.begin());
  std::copy(cvec.begin(), cvec.end(), o.begin() + h);
  nn::affine_forward(r.out_proj, o.data(), logits.data());
  logprobs_out.resize(v);
  nn::log_softmax(logits.data(), v, logprobs_out.data());
  return snew;
}

corpus::MaskedSample strip_infilling(const corpus::MaskedSample& sample) {
  corpus::MaskedSample out = sample;
  const size_t line = out.target_ids.size();
  if (out.input_ids.size() <= line) {
    out.input_ids = {Vocabulary::kBos};  // first line: nothing to condition on
  } else {
    out.input_ids.resize(out.input_ids.size() - line - 1);  // drop masked line + separator
  }
  out.kept_start = 0;
  out.kept_len = 0;
  return out;
}

template struct InfillModel<float>;
template struct InfillModel<double>;

template void abstract_embed(InfillModel<float>&, int, const AbstractLabels&, float*);
template void abstract_embed(InfillModel<double>&, int, const AbstractLabels&, double*);
template ForwardStats forward(InfillModel<float>&, const MaskedSample&, const AbstractLabels&,
                              bool);
template ForwardStats forward(InfillModel<double>&, const MaskedSample&, const AbstractLabels&,
                              bool);
template double backprop_sample(InfillModel<float>&, const MaskedSample&, const AbstractLabels&,
                                double, Rng&, bool);
template double backprop_sample(InfillModel<double>&, const MaskedSample&, const AbstractLabels&,
                                double, Rng&, bool);
template double evaluate_loss(InfillModel<float>&, const std::vector<TrainingSample>&);
template double evaluate_loss(InfillModel<double>&, const std::vector<TrainingSample>&);
template TrainResult train(InfillModel<float>&, const std::vector<TrainingSample>&,
                           const std::vector<TrainingSample>&, const TrainOptions&);
template TrainResult train(InfillModel<double>&, const std::vector<TrainingSample>&,
                           const std::vector<TrainingSample>&, const TrainOptions&);
template EncoderContext<float> encode(InfillModel<float>&, const std::vector<int>&,
                                      const AbstractLabels&);
template EncoderContext<double> encode(InfillModel<double>&, const std::vector<int>&,
                                       const AbstractLabels&);
template std::vector<float> decode_step(InfillModel<float>&, EncoderContext<float>&, int,
                                        const std::vector<float>&, std::vector<double>&);
template std::vector<double> decode_step(InfillModel<double>&, EncoderContext<double>&, int,
                                         const std::vector<double>&, std::vector<double>&);

}  // namespace ipg::model
