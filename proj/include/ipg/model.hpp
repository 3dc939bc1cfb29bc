#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "ipg/corpus.hpp"
#include "ipg/labels.hpp"
#include "ipg/neuralcore.hpp"

namespace ipg::model {

/// Model hyperparameters. Defaults follow the full-scale setup; tests and the
/// bundled fixtures use much smaller dims via config files.
struct ModelConfig {
  int vocab_size = 0;
  int embed_dim = 1024;
  int hidden_dim = 1024;
  std::array<int, kNumAspects> aspect_dims = {kAspectDim, kAspectDim, kAspectDim};
  bool use_abstract = true;
  bool use_infilling = true;
  double dropout = 0.5;
  int beam_size = 5;
  int line_len = 5;

  int abstract_dim() const { return aspect_dims[0] + aspect_dims[1] + aspect_dims[2]; }
  /// Encoder input width: the abstract one-hots are prepended to every
  /// character embedding when use_abstract is on.
  int input_dim() const { return embed_dim + (use_abstract ? abstract_dim() : 0); }

  void validate() const;
  std::string to_json() const;
  static ModelConfig from_json(const std::string& json_text);
  /// Reads {"model": {...}} or a bare config object from a file.
  static ModelConfig load(const std::string& path);
};

/// The infilling encoder-decoder. Parameters live in a ParamStore keyed by
/// role; helper refs are re-bound on use so the model stays copyable.
template <typename T>
struct InfillModel {
  ModelConfig config;
  nn::ParamStore<T> params;

  static InfillModel create(const ModelConfig& config, uint64_t seed);
  /// Binds an existing store (e.g. loaded from a checkpoint) and verifies
  /// shapes against the config.
  static InfillModel adopt(const ModelConfig& config, nn::ParamStore<T>&& store);
};

/// Non-owning views of every submodule, bound against a model's store.
template <typename T>
struct ModelRefs {
  nn::Tensor<T>*embed, *embed_grad;
  nn::GruRefs<T> enc_fwd, enc_bwd, dec;
  nn::AttnRefs<T> attn;
  nn::AffineRefs<T> init_proj, out_proj;
};

template <typename T>
ModelRefs<T> bind_refs(InfillModel<T>& m) {
  const auto& c = m.config;
  const size_t h = c.hidden_dim, e = c.embed_dim, v = c.vocab_size;
  ModelRefs<T> r;
  r.embed = &m.params.value("embed");
  r.embed_grad = &m.params.grad("embed");
  r.enc_fwd = nn::bind_gru(m.params, "enc_fwd.", c.input_dim(), h);
  r.enc_bwd = nn::bind_gru(m.params, "enc_bwd.", c.input_dim(), h);
  r.dec = nn::bind_gru(m.params, "dec.", e + 2 * h, h);
  r.attn = nn::bind_attn(m.params, "attn.", h, h, 2 * h);
  r.init_proj = nn::bind_affine(m.params, "init.", h, h);
  r.out_proj = nn::bind_affine(m.params, "out.", v, 3 * h);
  return r;
}

/// Writes the abstract-information embedding [v1; v2; v3; e(token)] of one
/// token into `out` (config.input_dim() wide). Plain e(token) when
/// use_abstract is off.
template <typename T>
void abstract_embed(InfillModel<T>& m, int token_id, const AbstractLabels& labels, T* out);

struct ForwardStats {
  double loss = 0.0;  // per-target-character cross-entropy
  std::vector<std::vector<double>> step_probs;  // line_len x vocab when requested
};

/// Teacher-forced forward pass (no dropout). Probabilities are filled only
/// when want_probs is set.
template <typename T>
ForwardStats forward(InfillModel<T>& m, const corpus::MaskedSample& sample,
                     const AbstractLabels& labels, bool want_probs = false);

/// Forward + backward for one sample; gradients are scaled by `scale` and
/// accumulated into the store. Dropout masks come from `dropout_rng` when
/// training dropout is active. Returns the per-character loss.
template <typename T>
double backprop_sample(InfillModel<T>& m, const corpus::MaskedSample& sample,
                       const AbstractLabels& labels, double scale, Rng& dropout_rng,
                       bool use_dropout);

struct TrainOptions {
  double lr = 1e-3;
  int batch = 256;
  int epochs = 10;
  uint64_t seed = 0;
  double weight_decay = 1e-5;
  double clip_norm = 5.0;
  double target_loss = -1.0;  // stop early once the epoch training loss drops below
  bool verbose = false;
};

struct EpochStats {
  int epoch = 0;
  double train_loss = 0.0;
  double valid_loss = 0.0;
};

struct TrainResult {
  std::vector<EpochStats> history;
  bool aborted = false;
  std::string abort_reason;
  int best_epoch = -1;
  double best_valid = std::numeric_limits<double>::infinity();
};

/// Mini-batch Adam training with per-epoch validation; the model is left at
/// the best-validation parameters. On divergence the best parameters so far
/// are restored and `aborted` is set.
template <typename T>
TrainResult train(InfillModel<T>& m, const std::vector<corpus::TrainingSample>& train_set,
                  const std::vector<corpus::TrainingSample>& valid_set, const TrainOptions& opt);

/// Mean per-character loss over a sample set, dropout off.
template <typename T>
double evaluate_loss(InfillModel<T>& m, const std::vector<corpus::TrainingSample>& samples);

// ---------------------------------------------------------------------------
// Incremental decoding interface used by beam search.
// ---------------------------------------------------------------------------

template <typename T>
struct EncoderContext {
  std::vector<std::vector<T>> H;
  nn::AttnSeqCache<T> attn_ctx;
  std::vector<T> s0;
};

/// Runs the encoder over `input_ids` with the given labels attached.
template <typename T>
EncoderContext<T> encode(InfillModel<T>& m, const std::vector<int>& input_ids,
                         const AbstractLabels& labels);

/// One decoder step. Returns the next recurrent state and fills
/// `logprobs_out` (vocab-sized, natural log).
template <typename T>
std::vector<T> decode_step(InfillModel<T>& m, EncoderContext<T>& enc, int prev_token,
                           const std::vector<T>& s_prev, std::vector<double>& logprobs_out);

// The training corpus for the no-infilling ablation: the encoder sees only
// the previous lines (BOS alone for the first line), the target is unchanged.
corpus::MaskedSample strip_infilling(const corpus::MaskedSample& sample);

extern template struct InfillModel<float>;
extern template struct InfillModel<double>;

}  // namespace ipg::model
