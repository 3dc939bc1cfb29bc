#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "ipg/kernels.hpp"
#include "ipg/tensor.hpp"

namespace ipg::nn {

inline double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  double e = std::exp(x);
  return e / (1.0 + e);
}

// ---------------------------------------------------------------------------
// GRU cell
//   z = sigmoid(Wz x + Uz h + bz)
//   r = sigmoid(Wr x + Ur h + br)
//   hc = tanh(Wc x + Uc (r*h) + bc)
//   h' = (1-z)*h + z*hc
// ---------------------------------------------------------------------------

template <typename T>
struct GruRefs {
  Tensor<T>*wz, *uz, *bz, *wr, *ur, *br, *wc, *uc, *bc;
  Tensor<T>*gwz, *guz, *gbz, *gwr, *gur, *gbr, *gwc, *guc, *gbc;
  size_t in_dim = 0, hidden = 0;
};

template <typename T>
GruRefs<T> bind_gru(ParamStore<T>& store, const std::string& prefix, size_t in_dim,
                    size_t hidden) {
  GruRefs<T> p;
  p.in_dim = in_dim;
  p.hidden = hidden;
  auto get = [&](const char* name) -> Tensor<T>* { return &store.value(prefix + name); };
  auto getg = [&](const char* name) -> Tensor<T>* { return &store.grad(prefix + name); };
  p.wz = get("update.w"); p.uz = get("update.u"); p.bz = get("update.b");
  p.wr = get("reset.w");  p.ur = get("reset.u");  p.br = get("reset.b");
  p.wc = get("cand.w");   p.uc = get("cand.u");   p.bc = get("cand.b");
  p.gwz = getg("update.w"); p.guz = getg("update.u"); p.gbz = getg("update.b");
  p.gwr = getg("reset.w");  p.gur = getg("reset.u");  p.gbr = getg("reset.b");
  p.gwc = getg("cand.w");   p.guc = getg("cand.u");   p.gbc = getg("cand.b");
  if (p.wz->rows() != hidden || p.wz->cols() != in_dim || p.uz->cols() != hidden)
    throw Error("GRU parameter shapes do not match dims for prefix " + prefix);
  return p;
}

template <typename T>
GruRefs<T> make_gru(ParamStore<T>& store, const std::string& prefix, size_t in_dim,
                    size_t hidden) {
  store.add(prefix + "update.w", {hidden, in_dim});
  store.add(prefix + "update.u", {hidden, hidden});
  store.add(prefix + "update.b", {hidden});
  store.add(prefix + "reset.w", {hidden, in_dim});
  store.add(prefix + "reset.u", {hidden, hidden});
  store.add(prefix + "reset.b", {hidden});
  store.add(prefix + "cand.w", {hidden, in_dim});
  store.add(prefix + "cand.u", {hidden, hidden});
  store.add(prefix + "cand.b", {hidden});
  return bind_gru(store, prefix, in_dim, hidden);
}

template <typename T>
struct GruStepCache {
  std::vector<T> x, h_prev, z, r, hc, rh;
};

/// h_out = GRU(x, h_prev). h_out may not alias h_prev. When `cache` is given
/// the intermediates needed by gru_backward are recorded.
template <typename T>
void gru_forward(const GruRefs<T>& p, const T* x, const T* h_prev, T* h_out,
                 GruStepCache<T>* cache) {
  const size_t h = p.hidden, in = p.in_dim;
  std::vector<T> z(h), r(h), hc(h), rh(h);

  kernels::matvec(p.wz->data(), x, z.data(), h, in);
  kernels::matvec_acc(p.uz->data(), h_prev, z.data(), h, h);
  for (size_t i = 0; i < h; ++i) z[i] = static_cast<T>(sigmoid(static_cast<double>(z[i] + p.bz->v[i])));

  kernels::matvec(p.wr->data(), x, r.data(), h, in);
  kernels::matvec_acc(p.ur->data(), h_prev, r.data(), h, h);
  for (size_t i = 0; i < h; ++i) r[i] = static_cast<T>(sigmoid(static_cast<double>(r[i] + p.br->v[i])));

  for (size_t i = 0; i < h; ++i) rh[i] = r[i] * h_prev[i];
  kernels::matvec(p.wc->data(), x, hc.data(), h, in);
  kernels::matvec_acc(p.uc->data(), rh.data(), hc.data(), h, h);
  for (size_t i = 0; i < h; ++i) hc[i] = static_cast<T>(std::tanh(static_cast<double>(hc[i] + p.bc->v[i])));

  for (size_t i = 0; i < h; ++i) h_out[i] = (T(1) - z[i]) * h_prev[i] + z[i] * hc[i];

  if (cache) {
    cache->x.assign(x, x + in);
    cache->h_prev.assign(h_prev, h_prev + h);
    cache->z = std::move(z);
    cache->r = std::move(r);
    cache->hc = std::move(hc);
    cache->rh = std::move(rh);
  }
}

/// Accumulates parameter gradients for one step and adds the input gradients
/// into dx_acc (may be null) and dh_prev_acc.
template <typename T>
void gru_backward(const GruRefs<T>& p, const GruStepCache<T>& cache, const T* dh, T* dx_acc,
                  T* dh_prev_acc) {
  const size_t h = p.hidden, in = p.in_dim;
  std::vector<T> da_z(h), da_r(h), da_c(h), drh(h, T(0));

  for (size_t i = 0; i < h; ++i) {
    const T z = cache.z[i], hc = cache.hc[i], hp = cache.h_prev[i];
    const T dhc = dh[i] * z;
    const T dz = dh[i] * (hc - hp);
    dh_prev_acc[i] += dh[i] * (T(1) - z);
    da_c[i] = dhc * (T(1) - hc * hc);
    da_z[i] = dz * z * (T(1) - z);
  }

  kernels::ger_acc(da_c.data(), cache.x.data(), p.gwc->data(), h, in);
  kernels::ger_acc(da_c.data(), cache.rh.data(), p.guc->data(), h, h);
  for (size_t i = 0; i < h; ++i) p.gbc->v[i] += da_c[i];

  kernels::matvec_t_acc(p.uc->data(), da_c.data(), drh.data(), h, h);
  for (size_t i = 0; i < h; ++i) {
    const T r = cache.r[i];
    const T dr = drh[i] * cache.h_prev[i];
    dh_prev_acc[i] += drh[i] * r;
    da_r[i] = dr * r * (T(1) - r);
  }

  kernels::ger_acc(da_r.data(), cache.x.data(), p.gwr->data(), h, in);
  kernels::ger_acc(da_r.data(), cache.h_prev.data(), p.gur->data(), h, h);
  kernels::ger_acc(da_z.data(), cache.x.data(), p.gwz->data(), h, in);
  kernels::ger_acc(da_z.data(), cache.h_prev.data(), p.guz->data(), h, h);
  for (size_t i = 0; i < h; ++i) {
    p.gbr->v[i] += da_r[i];
    p.gbz->v[i] += da_z[i];
  }

  if (dx_acc) {
    kernels::matvec_t_acc(p.wz->data(), da_z.data(), dx_acc, h, in);
    kernels::matvec_t_acc(p.wr->data(), da_r.data(), dx_acc, h, in);
    kernels::matvec_t_acc(p.wc->data(), da_c.data(), dx_acc, h, in);
  }
  kernels::matvec_t_acc(p.uz->data(), da_z.data(), dh_prev_acc, h, h);
  kernels::matvec_t_acc(p.ur->data(), da_r.data(), dh_prev_acc, h, h);
}

// ---------------------------------------------------------------------------
// Bidirectional GRU encoder: h_t = [fwd_t ; bwd_t], both directions starting
// from zero states. The backward direction's final state is its output at
// position 0.
// ---------------------------------------------------------------------------

template <typename T>
struct BiGruCache {
  std::vector<GruStepCache<T>> fwd, bwd;
};

template <typename T>
std::vector<std::vector<T>> bigru_forward(const GruRefs<T>& fwd, const GruRefs<T>& bwd,
                                          const std::vector<std::vector<T>>& inputs,
                                          BiGruCache<T>* cache) {
  if (inputs.empty()) throw Error("bigru_forward: empty input sequence");
  const size_t n = inputs.size(), h = fwd.hidden;
  if (cache) {
    cache->fwd.resize(n);
    cache->bwd.resize(n);
  }
  std::vector<std::vector<T>> out(n, std::vector<T>(2 * h));

  std::vector<T> state(h, T(0)), next(h);
  for (size_t t = 0; t < n; ++t) {
    gru_forward(fwd, inputs[t].data(), state.data(), next.data(), cache ? &cache->fwd[t] : nullptr);
    std::copy(next.begin(), next.end(), out[t].begin());
    state.swap(next);
  }
  std::fill(state.begin(), state.end(), T(0));
  for (size_t t = n; t-- > 0;) {
    gru_forward(bwd, inputs[t].data(), state.data(), next.data(), cache ? &cache->bwd[t] : nullptr);
    std::copy(next.begin(), next.end(), out[t].begin() + h);
    state.swap(next);
  }
  return out;
}

/// dH holds per-position gradients on the concatenated states. Returns the
/// gradients on the inputs.
template <typename T>
std::vector<std::vector<T>> bigru_backward(const GruRefs<T>& fwd, const GruRefs<T>& bwd,
                                           const BiGruCache<T>& cache,
                                           const std::vector<std::vector<T>>& dH) {
  const size_t n = dH.size(), h = fwd.hidden;
  std::vector<std::vector<T>> dx(n, std::vector<T>(fwd.in_dim, T(0)));

  std::vector<T> dstate(h, T(0)), dprev(h);
  for (size_t t = n; t-- > 0;) {
    for (size_t i = 0; i < h; ++i) dstate[i] += dH[t][i];
    std::fill(dprev.begin(), dprev.end(), T(0));
    gru_backward(fwd, cache.fwd[t], dstate.data(), dx[t].data(), dprev.data());
    dstate.swap(dprev);
  }
  std::fill(dstate.begin(), dstate.end(), T(0));
  for (size_t t = 0; t < n; ++t) {
    for (size_t i = 0; i < h; ++i) dstate[i] += dH[t][h + i];
    std::fill(dprev.begin(), dprev.end(), T(0));
    gru_backward(bwd, cache.bwd[t], dstate.data(), dx[t].data(), dprev.data());
    dstate.swap(dprev);
  }
  return dx;
}

// ---------------------------------------------------------------------------
// Additive attention: e_t = v . tanh(W s_prev + U h_t), alpha = softmax(e),
// c = sum_t alpha_t h_t. U h_t is precomputed once per sequence.
// ---------------------------------------------------------------------------

template <typename T>
struct AttnRefs {
  Tensor<T>*w, *u, *v;
  Tensor<T>*gw, *gu, *gv;
  size_t att = 0, dec_h = 0, enc_h = 0;  // enc_h = encoder state width (2*hidden)
};

template <typename T>
AttnRefs<T> bind_attn(ParamStore<T>& store, const std::string& prefix, size_t att, size_t dec_h,
                      size_t enc_h) {
  AttnRefs<T> p;
  p.att = att;
  p.dec_h = dec_h;
  p.enc_h = enc_h;
  p.w = &store.value(prefix + "w");
  p.u = &store.value(prefix + "u");
  p.v = &store.value(prefix + "v");
  p.gw = &store.grad(prefix + "w");
  p.gu = &store.grad(prefix + "u");
  p.gv = &store.grad(prefix + "v");
  if (p.w->rows() != att || p.w->cols() != dec_h || p.u->cols() != enc_h || p.v->size() != att)
    throw Error("attention parameter shapes do not match dims for prefix " + prefix);
  return p;
}

template <typename T>
AttnRefs<T> make_attn(ParamStore<T>& store, const std::string& prefix, size_t att, size_t dec_h,
                      size_t enc_h) {
  store.add(prefix + "w", {att, dec_h});
  store.add(prefix + "u", {att, enc_h});
  store.add(prefix + "v", {att});
  return bind_attn(store, prefix, att, dec_h, enc_h);
}

template <typename T>
struct AttnSeqCache {
  std::vector<std::vector<T>> uh;  // N x att, U h_t, fixed per sequence
  struct Step {
    std::vector<T> s_prev;
    std::vector<T> alpha;
    std::vector<std::vector<T>> tanh_t;  // N x att
  };
  std::vector<Step> steps;
};

template <typename T>
AttnSeqCache<T> attn_begin(const AttnRefs<T>& p, const std::vector<std::vector<T>>& H) {
  if (H.empty()) throw Error("attention over an empty encoder sequence");
  AttnSeqCache<T> ctx;
  ctx.uh.assign(H.size(), std::vector<T>(p.att));
  for (size_t t = 0; t < H.size(); ++t)
    kernels::matvec(p.u->data(), H[t].data(), ctx.uh[t].data(), p.att, p.enc_h);
  return ctx;
}

/// One attention query. Returns the context vector; fills alpha_out when
/// non-null. With record=true the step is cached for attn_backward.
template <typename T>
std::vector<T> attn_forward(const AttnRefs<T>& p, AttnSeqCache<T>& ctx,
                            const std::vector<std::vector<T>>& H, const T* s_prev, bool record,
                            std::vector<T>* alpha_out = nullptr) {
  const size_t n = H.size();
  std::vector<T> ws(p.att);
  kernels::matvec(p.w->data(), s_prev, ws.data(), p.att, p.dec_h);

  std::vector<std::vector<T>> tanh_t(n, std::vector<T>(p.att));
  std::vector<double> e(n);
  for (size_t t = 0; t < n; ++t) {
    double dot = 0.0;
    for (size_t i = 0; i < p.att; ++i) {
      T th = static_cast<T>(std::tanh(static_cast<double>(ws[i] + ctx.uh[t][i])));
      tanh_t[t][i] = th;
      dot += static_cast<double>(p.v->v[i]) * static_cast<double>(th);
    }
    e[t] = dot;
  }

  double mx = *std::max_element(e.begin(), e.end());
  double denom = 0.0;
  std::vector<T> alpha(n);
  for (size_t t = 0; t < n; ++t) denom += std::exp(e[t] - mx);
  for (size_t t = 0; t < n; ++t) alpha[t] = static_cast<T>(std::exp(e[t] - mx) / denom);

  std::vector<T> c(p.enc_h, T(0));
  for (size_t t = 0; t < n; ++t)
    for (size_t i = 0; i < p.enc_h; ++i) c[i] += alpha[t] * H[t][i];

  if (alpha_out) *alpha_out = alpha;
  if (record) {
    typename AttnSeqCache<T>::Step step;
    step.s_prev.assign(s_prev, s_prev + p.dec_h);
    step.alpha = std::move(alpha);
    step.tanh_t = std::move(tanh_t);
    ctx.steps.push_back(std::move(step));
  }
  return c;
}

/// Backward for recorded step `step_idx`: accumulates parameter gradients,
/// ds_prev_acc and the per-position encoder gradients dH_acc.
template <typename T>
void attn_backward(const AttnRefs<T>& p, const AttnSeqCache<T>& ctx,
                   const std::vector<std::vector<T>>& H, size_t step_idx, const T* dc,
                   T* ds_prev_acc, std::vector<std::vector<T>>& dH_acc) {
  const auto& step = ctx.steps[step_idx];
  const size_t n = H.size();

  std::vector<T> dalpha(n);
  for (size_t t = 0; t < n; ++t) {
    double dot = 0.0;
    for (size_t i = 0; i < p.enc_h; ++i) {
      dH_acc[t][i] += step.alpha[t] * dc[i];
      dot += static_cast<double>(H[t][i]) * static_cast<double>(dc[i]);
    }
    dalpha[t] = static_cast<T>(dot);
  }

  double s = 0.0;
  for (size_t t = 0; t < n; ++t) s += static_cast<double>(step.alpha[t]) * static_cast<double>(dalpha[t]);

  std::vector<T> sum_dpre(p.att, T(0));
  std::vector<T> dpre(p.att);
  for (size_t t = 0; t < n; ++t) {
    const T de = static_cast<T>(static_cast<double>(step.alpha[t]) *
                                (static_cast<double>(dalpha[t]) - s));
    for (size_t i = 0; i < p.att; ++i) {
      const T th = step.tanh_t[t][i];
      p.gv->v[i] += de * th;
      dpre[i] = de * p.v->v[i] * (T(1) - th * th);
      sum_dpre[i] += dpre[i];
    }
    kernels::ger_acc(dpre.data(), H[t].data(), p.gu->data(), p.att, p.enc_h);
    kernels::matvec_t_acc(p.u->data(), dpre.data(), dH_acc[t].data(), p.att, p.enc_h);
  }
  kernels::ger_acc(sum_dpre.data(), step.s_prev.data(), p.gw->data(), p.att, p.dec_h);
  kernels::matvec_t_acc(p.w->data(), sum_dpre.data(), ds_prev_acc, p.att, p.dec_h);
}

// ---------------------------------------------------------------------------
// Affine layer
// ---------------------------------------------------------------------------

template <typename T>
struct AffineRefs {
  Tensor<T>*w, *b, *gw, *gb;
  size_t out = 0, in = 0;
};

template <typename T>
AffineRefs<T> bind_affine(ParamStore<T>& store, const std::string& prefix, size_t out, size_t in) {
  AffineRefs<T> p;
  p.out = out;
  p.in = in;
  p.w = &store.value(prefix + "w");
  p.b = &store.value(prefix + "b");
  p.gw = &store.grad(prefix + "w");
  p.gb = &store.grad(prefix + "b");
  if (p.w->rows() != out || p.w->cols() != in || p.b->size() != out)
    throw Error("affine parameter shapes do not match dims for prefix " + prefix);
  return p;
}

template <typename T>
AffineRefs<T> make_affine(ParamStore<T>& store, const std::string& prefix, size_t out, size_t in) {
  store.add(prefix + "w", {out, in});
  store.add(prefix + "b", {out});
  return bind_affine(store, prefix, out, in);
}

template <typename T>
void affine_forward(const AffineRefs<T>& p, const T* x, T* y) {
  kernels::matvec(p.w->data(), x, y, p.out, p.in);
  for (size_t i = 0; i < p.out; ++i) y[i] += p.b->v[i];
}

template <typename T>
void affine_backward(const AffineRefs<T>& p, const T* x, const T* dy, T* dx_acc) {
  kernels::ger_acc(dy, x, p.gw->data(), p.out, p.in);
  for (size_t i = 0; i < p.out; ++i) p.gb->v[i] += dy[i];
  if (dx_acc) kernels::matvec_t_acc(p.w->data(), dy, dx_acc, p.out, p.in);
}

// ---------------------------------------------------------------------------
// Softmax + cross-entropy, and log-softmax for scoring
// ---------------------------------------------------------------------------

/// loss = -log softmax(logits)[target]; writes softmax(logits) - onehot into
/// dlogits when non-null. Max-subtraction keeps everything finite.
template <typename T>
double softmax_xent(const T* logits, size_t n, int target, T* dlogits) {
  if (target < 0 || static_cast<size_t>(target) >= n)
    throw Error("cross-entropy target out of range: " + std::to_string(target));
  double mx = static_cast<double>(logits[0]);
  for (size_t i = 1; i < n; ++i) mx = std::max(mx, static_cast<double>(logits[i]));
  double denom = 0.0;
  for (size_t i = 0; i < n; ++i) denom += std::exp(static_cast<double>(logits[i]) - mx);
  double loss = std::log(denom) - (static_cast<double>(logits[target]) - mx);
  if (dlogits) {
    for (size_t i = 0; i < n; ++i) {
      double p = std::exp(static_cast<double>(logits[i]) - mx) / denom;
      dlogits[i] = static_cast<T>(p - (static_cast<int>(i) == target ? 1.0 : 0.0));
    }
  }
  return loss;
}

/// out[i] = log softmax(logits)[i], computed in double.
template <typename T>
void log_softmax(const T* logits, size_t n, double* out) {
  double mx = static_cast<double>(logits[0]);
  for (size_t i = 1; i < n; ++i) mx = std::max(mx, static_cast<double>(logits[i]));
  double denom = 0.0;
  for (size_t i = 0; i < n; ++i) denom += std::exp(static_cast<double>(logits[i]) - mx);
  double lse = std::log(denom) + mx;
  for (size_t i = 0; i < n; ++i) out[i] = static_cast<double>(logits[i]) - lse;
}

// ---------------------------------------------------------------------------
// Inverted dropout with an explicit mask so the backward pass replays it.
// ---------------------------------------------------------------------------

template <typename T>
void dropout_forward(T* x, size_t n, double rate, Rng& rng, std::vector<uint8_t>& mask_out) {
  mask_out.resize(n);
  if (rate <= 0.0) {
    std::fill(mask_out.begin(), mask_out.end(), uint8_t(1));
    return;
  }
  const T scale = static_cast<T>(1.0 / (1.0 - rate));
  for (size_t i = 0; i < n; ++i) {
    bool keep = rng.uniform() >= rate;
    mask_out[i] = keep ? 1 : 0;
    x[i] = keep ? x[i] * scale : T(0);
  }
}

template <typename T>
void dropout_backward(T* dx, size_t n, double rate, const std::vector<uint8_t>& mask) {
  if (rate <= 0.0) return;
  const T scale = static_cast<T>(1.0 / (1.0 - rate));
  for (size_t i = 0; i < n; ++i) dx[i] = mask[i] ? dx[i] * scale : T(0);
}

}  // namespace ipg::nn
