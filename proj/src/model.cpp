#include "detmask/model.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>

#include "detmask/error.hpp"
#include "detmask/rng.hpp"

namespace detmask {

void ModelConfig::validate() const {
  if (d < 2) throw Error("model dimension d must be >= 2");
  if (vocab_size < 4) throw Error("vocab_size must be >= 4");
  if (hidden < 1) throw Error("hidden width must be >= 1");
  if (max_len < 1) throw Error("max_len must be >= 1");
  if (lambda_con < 0 || lambda_cls < 0) throw Error("loss weights must be >= 0");
}

std::size_t TensorInfo::size() const {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>());
}

std::vector<TensorInfo> parameter_layout(const ModelConfig& c) {
  const std::vector<std::pair<std::string, std::vector<std::size_t>>> shapes = {
      {"tok_emb", {c.vocab_size, c.d}}, {"pos_emb", {c.max_len, c.d}},
      {"ln1_g", {c.d}},                 {"ln1_b", {c.d}},
      {"wq", {c.d, c.d}},               {"wk", {c.d, c.d}},
      {"wv", {c.d, c.d}},               {"wo", {c.d, c.d}},
      {"ln2_g", {c.d}},                 {"ln2_b", {c.d}},
      {"w1", {c.d, c.hidden}},          {"b1", {c.hidden}},
      {"w2", {c.hidden, c.d}},          {"b2", {c.d}},
      {"lnf_g", {c.d}},                 {"lnf_b", {c.d}},
      {"lm_bias", {c.vocab_size}},      {"cls_w", {c.d, 3}},
  };
  std::vector<TensorInfo> layout;
  std::size_t offset = 0;
  for (const auto& [name, shape] : shapes) {
    TensorInfo info{name, shape, offset};
    offset += info.size();
    layout.push_back(std::move(info));
  }
  return layout;
}

const TensorInfo& ModelState::tensor(std::string_view name) const {
  for (const auto& t : layout)
    if (t.name == name) return t;
  throw Error("unknown tensor " + std::string(name));
}

std::span<double> ModelState::view(std::string_view name) {
  const auto& t = tensor(name);
  return {params.data() + t.offset, t.size()};
}

std::span<const double> ModelState::view(std::string_view name) const {
  const auto& t = tensor(name);
  return {params.data() + t.offset, t.size()};
}

ModelState zero_state(const ModelConfig& config) {
  config.validate();
  ModelState state;
  state.config = config;
  state.layout = parameter_layout(config);
  const auto& last = state.layout.back();
  state.params.assign(last.offset + last.size(), 0.0);
  return state;
}

ModelState init(const ModelConfig& config) {
  auto state = zero_state(config);
  Rng rng(splitmix64(config.seed));
  // Box-Muller on the raw engine keeps the stream identical across standard
  // library implementations.
  auto normal = [&] {
    const double u1 = 1.0 - uniform_unit(rng);
    const double u2 = uniform_unit(rng);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  };
  for (const auto& t : state.layout) {
    const bool gain = t.name.ends_with("_g");
    const bool bias = t.name.ends_with("_b") || t.name == "b1" || t.name == "b2" ||
                      t.name == "lm_bias";
    for (std::size_t i = 0; i < t.size(); ++i)
      state.params[t.offset + i] = gain ? 1.0 : bias ? 0.0 : 0.02 * normal();
  }
  return state;
}

namespace {

constexpr double kNormEps = 1e-5;

template <typename T>
struct Slices {
  T* tok;
  T* pos;
  T* ln1_g;
  T* ln1_b;
  T* wq;
  T* wk;
  T* wv;
  T* wo;
  T* ln2_g;
  T* ln2_b;
  T* w1;
  T* b1;
  T* w2;
  T* b2;
  T* lnf_g;
  T* lnf_b;
  T* lm_bias;
  T* cls;

  Slices(T* base, const std::vector<TensorInfo>& layout) {
    T** fields[] = {&tok, &pos, &ln1_g, &ln1_b, &wq, &wk, &wv, &wo, &ln2_g,
                    &ln2_b, &w1, &b1, &w2, &b2, &lnf_g, &lnf_b, &lm_bias, &cls};
    for (std::size_t i = 0; i < layout.size(); ++i) *fields[i] = base + layout[i].offset;
  }
};

struct Dims {
  std::size_t vocab, d, h, max_len;
  explicit Dims(const ModelConfig& c)
      : vocab(c.vocab_size), d(c.d), h(c.hidden), max_len(c.max_len) {}
};

// Per-row normalised input and inverse standard deviation, kept for backprop.
struct NormCache {
  std::vector<double> xhat;
  std::vector<double> inv_std;
};

void layer_norm(const double* in, std::size_t n, std::size_t d, const double* gain,
                const double* bias, double* out, NormCache& cache) {
  cache.xhat.assign(n * d, 0.0);
  cache.inv_std.assign(n, 0.0);
  for (std::size_t t = 0; t < n; ++t) {
    const double* x = in + t * d;
    double mean = 0.0;
    for (std::size_t j = 0; j < d; ++j) mean += x[j];
    mean /= static_cast<double>(d);
    double var = 0.0;
    for (std::size_t j = 0; j < d; ++j) var += (x[j] - mean) * (x[j] - mean);
    var /= static_cast<double>(d);
    const double inv = 1.0 / std::sqrt(var + kNormEps);
    cache.inv_std[t] = inv;
    for (std::size_t j = 0; j < d; ++j) {
      const double xh = (x[j] - mean) * inv;
      cache.xhat[t * d + j] = xh;
      out[t * d + j] = gain[j] * xh + bias[j];
    }
  }
}

// Accumulates into d_in, d_gain and d_bias.
void layer_norm_backward(const double* d_out, std::size_t n, std::size_t d,
                         const double* gain, const NormCache& cache, double* d_in,
                         double* d_gain, double* d_bias) {
  const double inv_d = 1.0 / static_cast<double>(d);
  for (std::size_t t = 0; t < n; ++t) {
    const double* dy = d_out + t * d;
    const double* xh = &cache.xhat[t * d];
    double sum = 0.0;
    double dot = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      d_gain[j] += dy[j] * xh[j];
      d_bias[j] += dy[j];
      const double g = dy[j] * gain[j];
      sum += g;
      dot += g * xh[j];
    }
    for (std::size_t j = 0; j < d; ++j) {
      const double g = dy[j] * gain[j];
      d_in[t * d + j] += cache.inv_std[t] * (g - sum * inv_d - xh[j] * dot * inv_d);
    }
  }
}

// Pre-norm block: h1 = x + Attn(LN1(x)), r = h1 + FFN(LN2(h1)), out = LNf(r).
struct Activations {
  std::size_t n = 0;
  std::vector<double> x, a, q, k, v, attn, z, h1, c, g, r, out;
  NormCache n1, n2, nf;
  std::vector<char> key_valid;
};

void run_forward(const Slices<const double>& P, const Dims& D,
                 std::span<const TokenId> tokens, Activations& act) {
  const std::size_t n = tokens.size();
  const std::size_t d = D.d;
  const std::size_t h = D.h;
  if (n > D.max_len) throw SequenceTooLong(n, D.max_len);
  for (auto t : tokens) {
    if (t < 0 || static_cast<std::size_t>(t) >= D.vocab)
      throw Error("token id " + std::to_string(t) + " outside vocabulary");
  }
  act.n = n;
  act.x.assign(n * d, 0.0);
  act.a.assign(n * d, 0.0);
  act.q.assign(n * d, 0.0);
  act.k.assign(n * d, 0.0);
  act.v.assign(n * d, 0.0);
  act.attn.assign(n * n, 0.0);
  act.z.assign(n * d, 0.0);
  act.h1.assign(n * d, 0.0);
  act.c.assign(n * d, 0.0);
  act.g.assign(n * h, 0.0);
  act.r.assign(n * d, 0.0);
  act.out.assign(n * d, 0.0);
  act.key_valid.assign(n, 0);

  for (std::size_t t = 0; t < n; ++t) {
    act.key_valid[t] = tokens[t] != Vocabulary::kPad;
    const double* e = P.tok + static_cast<std::size_t>(tokens[t]) * d;
    const double* p = P.pos + t * d;
    for (std::size_t j = 0; j < d; ++j) act.x[t * d + j] = e[j] + p[j];
  }
  layer_norm(act.x.data(), n, d, P.ln1_g, P.ln1_b, act.a.data(), act.n1);
  for (std::size_t t = 0; t < n; ++t) {
    const double* at = &act.a[t * d];
    for (std::size_t i = 0; i < d; ++i) {
      const double ai = at[i];
      const double* rq = P.wq + i * d;
      const double* rk = P.wk + i * d;
      const double* rv = P.wv + i * d;
      for (std::size_t j = 0; j < d; ++j) {
        act.q[t * d + j] += ai * rq[j];
        act.k[t * d + j] += ai * rk[j];
        act.v[t * d + j] += ai * rv[j];
      }
    }
  }

  const double scale = 1.0 / std::sqrt(static_cast<double>(d));
  for (std::size_t t = 0; t < n; ++t) {
    double* row = &act.attn[t * n];
    double peak = -INFINITY;
    for (std::size_t u = 0; u < n; ++u) {
      if (!act.key_valid[u]) continue;
      double s = 0.0;
      for (std::size_t j = 0; j < d; ++j) s += act.q[t * d + j] * act.k[u * d + j];
      row[u] = s * scale;
      peak = std::max(peak, row[u]);
    }
    double sum = 0.0;
    for (std::size_t u = 0; u < n; ++u) {
      if (!act.key_valid[u]) continue;
      row[u] = std::exp(row[u] - peak);
      sum += row[u];
    }
    for (std::size_t u = 0; u < n; ++u) {
      if (act.key_valid[u]) row[u] /= sum;
    }
    for (std::size_t u = 0; u < n; ++u) {
      if (row[u] == 0.0) continue;
      for (std::size_t j = 0; j < d; ++j) act.z[t * d + j] += row[u] * act.v[u * d + j];
    }
  }

  for (std::size_t t = 0; t < n; ++t) {
    for (std::size_t j = 0; j < d; ++j) act.h1[t * d + j] = act.x[t * d + j];
    for (std::size_t i = 0; i < d; ++i) {
      const double zi = act.z[t * d + i];
      const double* row = P.wo + i * d;
      for (std::size_t j = 0; j < d; ++j) act.h1[t * d + j] += zi * row[j];
    }
  }
  layer_norm(act.h1.data(), n, d, P.ln2_g, P.ln2_b, act.c.data(), act.n2);
  for (std::size_t t = 0; t < n; ++t) {
    double* gt = &act.g[t * h];
    for (std::size_t m = 0; m < h; ++m) gt[m] = P.b1[m];
    for (std::size_t j = 0; j < d; ++j) {
      const double cj = act.c[t * d + j];
      const double* row = P.w1 + j * h;
      for (std::size_t m = 0; m < h; ++m) gt[m] += cj * row[m];
    }
    for (std::size_t m = 0; m < h; ++m) gt[m] = std::tanh(gt[m]);
    for (std::size_t j = 0; j < d; ++j) act.r[t * d + j] = act.h1[t * d + j] + P.b2[j];
    for (std::size_t m = 0; m < h; ++m) {
      const double* row = P.w2 + m * d;
      for (std::size_t j = 0; j < d; ++j) act.r[t * d + j] += gt[m] * row[j];
    }
  }
  layer_norm(act.r.data(), n, d, P.lnf_g, P.lnf_b, act.out.data(), act.nf);
}

// d_out: gradient w.r.t. the contextual embeddings [n, d].
void run_backward(const Slices<const double>& P, Slices<double>& G, const Dims& D,
                  std::span<const TokenId> tokens, const Activations& act,
                  const std::vector<double>& d_out) {
  const std::size_t n = act.n;
  const std::size_t d = D.d;
  const std::size_t h = D.h;

  std::vector<double> dr(n * d, 0.0);
  layer_norm_backward(d_out.data(), n, d, P.lnf_g, act.nf, dr.data(), G.lnf_g, G.lnf_b);

  std::vector<double> dh1 = dr;
  std::vector<double> dc(n * d, 0.0);
  std::vector<double> dg(h);
  for (std::size_t t = 0; t < n; ++t) {
    const double* drt = &dr[t * d];
    const double* gt = &act.g[t * h];
    for (std::size_t j = 0; j < d; ++j) G.b2[j] += drt[j];
    for (std::size_t m = 0; m < h; ++m) {
      double acc = 0.0;
      const double* row = P.w2 + m * d;
      double* grow = G.w2 + m * d;
      for (std::size_t j = 0; j < d; ++j) {
        grow[j] += gt[m] * drt[j];
        acc += drt[j] * row[j];
      }
      dg[m] = acc * (1.0 - gt[m] * gt[m]);
    }
    for (std::size_t m = 0; m < h; ++m) G.b1[m] += dg[m];
    for (std::size_t j = 0; j < d; ++j) {
      const double cj = act.c[t * d + j];
      const double* row = P.w1 + j * h;
      double* grow = G.w1 + j * h;
      double acc = 0.0;
      for (std::size_t m = 0; m < h; ++m) {
        grow[m] += cj * dg[m];
        acc += dg[m] * row[m];
      }
      dc[t * d + j] = acc;
    }
  }
  layer_norm_backward(dc.data(), n, d, P.ln2_g, act.n2, dh1.data(), G.ln2_g, G.ln2_b);

  std::vector<double> dx = dh1;
  std::vector<double> dz(n * d, 0.0);
  for (std::size_t t = 0; t < n; ++t) {
    for (std::size_t i = 0; i < d; ++i) {
      const double zi = act.z[t * d + i];
      const double* row = P.wo + i * d;
      double* grow = G.wo + i * d;
      double acc = 0.0;
      for (std::size_t j = 0; j < d; ++j) {
        grow[j] += zi * dh1[t * d + j];
        acc += dh1[t * d + j] * row[j];
      }
      dz[t * d + i] = acc;
    }
  }

  const double scale = 1.0 / std::sqrt(static_cast<double>(d));
  std::vector<double> dq(n * d, 0.0), dk(n * d, 0.0), dv(n * d, 0.0);
  std::vector<double> da(n);
  for (std::size_t t = 0; t < n; ++t) {
    const double* row = &act.attn[t * n];
    double weighted = 0.0;
    for (std::size_t u = 0; u < n; ++u) {
      double acc = 0.0;
      if (row[u] != 0.0) {
        for (std::size_t j = 0; j < d; ++j) {
          acc += dz[t * d + j] * act.v[u * d + j];
          dv[u * d + j] += row[u] * dz[t * d + j];
        }
      }
      da[u] = acc;
      weighted += row[u] * acc;
    }
    for (std::size_t u = 0; u < n; ++u) {
      if (row[u] == 0.0) continue;
      const double ds = row[u] * (da[u] - weighted) * scale;
      for (std::size_t j = 0; j < d; ++j) {
        dq[t * d + j] += ds * act.k[u * d + j];
        dk[u * d + j] += ds * act.q[t * d + j];
      }
    }
  }

  std::vector<double> d_a(n * d, 0.0);
  for (std::size_t t = 0; t < n; ++t) {
    for (std::size_t i = 0; i < d; ++i) {
      const double ai = act.a[t * d + i];
      const double* rq = P.wq + i * d;
      const double* rk = P.wk + i * d;
      const double* rv = P.wv + i * d;
      double* gq = G.wq + i * d;
      double* gk = G.wk + i * d;
      double* gv = G.wv + i * d;
      double acc = 0.0;
      for (std::size_t j = 0; j < d; ++j) {
        gq[j] += ai * dq[t * d + j];
        gk[j] += ai * dk[t * d + j];
        gv[j] += ai * dv[t * d + j];
        acc += dq[t * d + j] * rq[j] + dk[t * d + j] * rk[j] + dv[t * d + j] * rv[j];
      }
      d_a[t * d + i] = acc;
    }
  }
  layer_norm_backward(d_a.data(), n, d, P.ln1_g, act.n1, dx.data(), G.ln1_g, G.ln1_b);

  for (std::size_t t = 0; t < n; ++t) {
    double* ge = G.tok + static_cast<std::size_t>(tokens[t]) * d;
    double* gp = G.pos + t * d;
    for (std::size_t j = 0; j < d; ++j) {
      ge[j] += dx[t * d + j];
      gp[j] += dx[t * d + j];
    }
  }
}

// Softmax of the tied LM head at one position.
// Returns the log partition function so callers can take log-probabilities
// without underflow.
double lm_distribution(const Slices<const double>& P, const Dims& D,
                       const Activations& act, std::size_t pos,
                       std::vector<double>& probs, std::vector<double>* logits = nullptr) {
  probs.resize(D.vocab);
  const double* e = &act.out[pos * D.d];
  double peak = -INFINITY;
  for (std::size_t v = 0; v < D.vocab; ++v) {
    const double* row = P.tok + v * D.d;
    double s = P.lm_bias[v];
    for (std::size_t j = 0; j < D.d; ++j) s += e[j] * row[j];
    probs[v] = s;
    peak = std::max(peak, s);
  }
  if (logits) *logits = probs;
  double sum = 0.0;
  for (auto& p : probs) {
    p = std::exp(p - peak);
    sum += p;
  }
  for (auto& p : probs) p /= sum;
  return peak + std::log(sum);
}

void lm_backward(const Slices<const double>& P, Slices<double>& G, const Dims& D,
                 const Activations& act, std::size_t pos,
                 const std::vector<double>& dlogits, std::vector<double>& d_out) {
  const double* e = &act.out[pos * D.d];
  double* de = &d_out[pos * D.d];
  for (std::size_t v = 0; v < D.vocab; ++v) {
    const double g = dlogits[v];
    if (g == 0.0) continue;
    const double* row = P.tok + v * D.d;
    double* grow = G.tok + v * D.d;
    G.lm_bias[v] += g;
    for (std::size_t j = 0; j < D.d; ++j) {
      de[j] += g * row[j];
      grow[j] += g * e[j];
    }
  }
}

// Posterior over (keep, drop, random); `nll` receives -log y for each class.
std::array<double, 3> class_posterior(const Slices<const double>& P, const Dims& D,
                                      const double* e,
                                      std::array<double, 3>* nll = nullptr) {
  std::array<double, 3> logits{0.0, 0.0, 0.0};
  for (std::size_t i = 0; i < D.d; ++i)
    for (std::size_t c = 0; c < 3; ++c) logits[c] += P.cls[i * 3 + c] * e[i];
  const double peak = std::max({logits[0], logits[1], logits[2]});
  std::array<double, 3> y{};
  double sum = 0.0;
  for (std::size_t c = 0; c < 3; ++c) {
    y[c] = std::exp(logits[c] - peak);
    sum += y[c];
  }
  for (std::size_t c = 0; c < 3; ++c) {
    y[c] /= sum;
    if (nll) (*nll)[c] = peak + std::log(sum) - logits[c];
  }
  return y;
}

struct Workspace {
  Activations act;
  std::vector<double> d_out;
  std::vector<double> probs;
  std::vector<double> logits;
  std::vector<double> dlogits;
};

// Adds the losses of one example to `loss` and, when G is non-null, the
// gradient of the weighted objective scaled by `scale`.
void example_loss(const Slices<const double>& P, Slices<double>* G, const Dims& D,
                  const TrainingExample& ex, const LossWeights& w, double scale,
                  LossBreakdown& loss, Workspace& ws) {
  const auto& positions = ex.keep.positions;
  const auto& targets = ex.keep.targets;
  if (positions.empty()) throw EmptyMaskSet();
  const double inv_m = 1.0 / static_cast<double>(positions.size());
  const bool contrastive = ex.drop.has_value();
  const bool classify = ex.drop.has_value() && ex.random.has_value();

  // variant 0 = keep, 1 = drop, 2 = random
  const MaskedSample* variants[3] = {&ex.keep, ex.drop ? &*ex.drop : nullptr,
                                     ex.random ? &*ex.random : nullptr};
  const std::size_t count = classify ? 3 : (contrastive ? 2 : 1);
  const double cls_norm = 1.0 / (3.0 * static_cast<double>(positions.size()));

  for (std::size_t variant = 0; variant < count; ++variant) {
    const auto& input = variants[variant]->input;
    run_forward(P, D, input, ws.act);
    if (G) ws.d_out.assign(ws.act.n * D.d, 0.0);

    for (std::size_t i = 0; i < positions.size(); ++i) {
      const std::size_t pos = positions[i];
      if (pos >= ws.act.n) throw Error("mask position outside sequence");
      const auto target = static_cast<std::size_t>(targets[i]);
      const bool need_lm = variant == 0 || (variant == 1 && contrastive);
      if (need_lm) {
        const double log_z = lm_distribution(P, D, ws.act, pos, ws.probs, &ws.logits);
        const double pt = ws.probs[target];
        double coef_ce = 0.0;   // multiplies (p - onehot)
        double coef_pt = 0.0;   // multiplies p_t * (onehot - p)
        if (variant == 0) {
          loss.mlm += (log_z - ws.logits[target]) * inv_m;
          coef_ce = w.mlm * inv_m * scale;
          if (contrastive) {
            loss.con -= pt * inv_m;
            coef_pt = -w.con * inv_m * scale;
          }
        } else {
          loss.con += pt * inv_m;
          coef_pt = w.con * inv_m * scale;
        }
        if (G && (coef_ce != 0.0 || coef_pt != 0.0)) {
          ws.dlogits.assign(D.vocab, 0.0);
          for (std::size_t v = 0; v < D.vocab; ++v) {
            const double onehot = v == target ? 1.0 : 0.0;
            ws.dlogits[v] = coef_ce * (ws.probs[v] - onehot) +
                            coef_pt * pt * (onehot - ws.probs[v]);
          }
          lm_backward(P, *G, D, ws.act, pos, ws.dlogits, ws.d_out);
        }
      }
      if (classify) {
        const double* e = &ws.act.out[pos * D.d];
        std::array<double, 3> nll{};
        const auto y = class_posterior(P, D, e, &nll);
        loss.cls += nll[variant] * cls_norm;
        const double coef = w.cls * cls_norm * scale;
        if (G && coef != 0.0) {
          double dl[3];
          for (std::size_t c = 0; c < 3; ++c)
            dl[c] = coef * (y[c] - (c == variant ? 1.0 : 0.0));
          double* de = &ws.d_out[pos * D.d];
          for (std::size_t j = 0; j < D.d; ++j) {
            for (std::size_t c = 0; c < 3; ++c) {
              G->cls[j * 3 + c] += e[j] * dl[c];
              de[j] += P.cls[j * 3 + c] * dl[c];
            }
          }
        }
      }
    }
    if (G) run_backward(P, *G, D, input, ws.act, ws.d_out);
  }
}

}  // namespace

LossWeights total_weights(const ModelConfig& config) {
  return {1.0, config.lambda_con, config.lambda_cls};
}

ForwardOutput forward(const ModelState& state, std::span<const TokenId> tokens) {
  const Slices<const double> P(state.params.data(), state.layout);
  const Dims D(state.config);
  Activations act;
  run_forward(P, D, tokens, act);
  ForwardOutput out;
  out.length = act.n;
  out.d = D.d;
  out.vocab = D.vocab;
  out.embeddings = act.out;
  out.probabilities.resize(act.n * D.vocab);
  std::vector<double> probs;
  for (std::size_t t = 0; t < act.n; ++t) {
    lm_distribution(P, D, act, t, probs);
    std::copy(probs.begin(), probs.end(), out.probabilities.begin() + t * D.vocab);
  }
  return out;
}

double avg_truth_prob(const ForwardOutput& output, std::span<const std::size_t> positions,
                      std::span<const TokenId> targets) {
  if (positions.empty()) throw EmptyMaskSet();
  if (positions.size() != targets.size())
    throw Error("positions and targets differ in length");
  double sum = 0.0;
  for (std::size_t i = 0; i < positions.size(); ++i) {
    if (positions[i] >= output.length) throw Error("mask position outside sequence");
    sum += output.distribution(positions[i])[static_cast<std::size_t>(targets[i])];
  }
  return sum / static_cast<double>(positions.size());
}

LossBreakdown loss_and_grad(const ModelState& state,
                            std::span<const TrainingExample> batch,
                            const LossWeights& weights, std::vector<double>* grad,
                            int threads) {
  const Slices<const double> P(state.params.data(), state.layout);
  const Dims D(state.config);
  const std::size_t n = batch.size();
  if (n == 0) throw EmptyMaskSet();
  const double scale = 1.0 / static_cast<double>(n);

  std::vector<LossBreakdown> parts(n);
  std::vector<std::vector<double>> grads(grad ? n : 0);
  std::vector<std::string> errors(n);

  auto run = [&](std::size_t i, Workspace& ws) {
    try {
      if (grad) {
        grads[i].assign(state.params.size(), 0.0);
        Slices<double> G(grads[i].data(), state.layout);
        example_loss(P, &G, D, batch[i], weights, scale, parts[i], ws);
      } else {
        example_loss(P, nullptr, D, batch[i], weights, scale, parts[i], ws);
      }
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  };

  const long count = static_cast<long>(n);
  if (threads <= 1) {
    Workspace ws;
    for (long i = 0; i < count; ++i) run(static_cast<std::size_t>(i), ws);
  } else {
#pragma omp parallel num_threads(threads)
    {
      Workspace ws;
#pragma omp for schedule(static)
      for (long i = 0; i < count; ++i) run(static_cast<std::size_t>(i), ws);
    }
  }
  for (const auto& e : errors)
    if (!e.empty()) throw Error(e);

  LossBreakdown total;
  for (const auto& p : parts) {
    total.mlm += p.mlm * scale;
    total.con += p.con * scale;
    total.cls += p.cls * scale;
  }
  total.total = total.mlm + state.config.lambda_con * total.con +
                state.config.lambda_cls * total.cls;
  total.objective = weights.mlm * total.mlm + weights.con * total.con +
                    weights.cls * total.cls;

  if (grad) {
    grad->assign(state.params.size(), 0.0);
    for (const auto& g : grads)
      for (std::size_t k = 0; k < g.size(); ++k) (*grad)[k] += g[k];
  }
  return total;
}

LossBreakdown losses(const ModelState& state, const MaskedSample& keep,
                     const MaskedSample& drop, const MaskedSample& random) {
  const TrainingExample ex{keep, drop, random};
  return loss_and_grad(state, std::span(&ex, 1), total_weights(state.config), nullptr);
}

GradCheckResult finite_diff_check(const ModelState& state,
                                  std::span<const TrainingExample> batch,
                                  const LossWeights& weights, double eps,
                                  std::size_t min_coordinates, std::uint64_t seed) {
  if (!(eps > 0.0 && eps <= 1e-3)) throw Error("eps must lie in (0, 1e-3]");
  std::vector<double> analytic;
  const auto base = loss_and_grad(state, batch, weights, &analytic);
  if (!std::isfinite(base.objective)) throw NonFiniteLoss(0);

  std::size_t longest = 1;
  for (const auto& ex : batch) longest = std::max(longest, ex.keep.input.size());

  ModelState probe = state;
  Rng rng(splitmix64(seed ^ 0x5eedULL));
  const std::size_t per_tensor =
      (min_coordinates + state.layout.size() - 1) / state.layout.size();

  GradCheckResult result;
  for (const auto& t : state.layout) {
    std::size_t extent = t.size();
    if (t.name == "pos_emb") extent = std::min(extent, longest * state.config.d);
    for (std::size_t s = 0; s < per_tensor; ++s) {
      const std::size_t k = t.offset + uniform_below(rng, extent);
      const double saved = probe.params[k];
      probe.params[k] = saved + eps;
      const double up = loss_and_grad(probe, batch, weights, nullptr).objective;
      probe.params[k] = saved - eps;
      const double down = loss_and_grad(probe, batch, weights, nullptr).objective;
      probe.params[k] = saved;
      const double numeric = (up - down) / (2.0 * eps);
      const double a = analytic[k];
      const double denom = std::max({std::abs(a), std::abs(numeric), 1e-6});
      const double rel = std::abs(a - numeric) / denom;
      if (!std::isfinite(rel)) throw NonFiniteLoss(0);
      if (rel >= result.max_relative_error) {
        result.max_relative_error = rel;
        result.worst_tensor = t.name;
      }
      ++result.coordinates;
    }
  }
  return result;
}

void train_in_place(ModelState& state, std::span<const TrainingExample> data,
                    const TrainOptions& options) {
  if (options.steps < 1) throw Error("steps must be >= 1");
  if (data.empty()) throw EmptyDataset();
  const std::size_t batch = std::min(options.batch_size, data.size());
  const auto weights = total_weights(state.config);

  Rng rng(splitmix64(state.config.seed ^ 0x7a41ULL));
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::size_t cursor = order.size();

  std::vector<TrainingExample> picked;
  std::vector<double> grad;
  for (long step = 0; step < options.steps; ++step) {
    picked.clear();
    while (picked.size() < batch) {
      if (cursor == order.size()) {
        for (std::size_t i = order.size(); i > 1; --i)
          std::swap(order[i - 1], order[uniform_below(rng, i)]);
        cursor = 0;
      }
      picked.push_back(data[order[cursor++]]);
    }
    const auto loss = loss_and_grad(state, picked, weights, &grad, options.threads);
    if (!std::isfinite(loss.total)) throw NonFiniteLoss(step);
    if (options.on_step) options.on_step(step, loss);
    if (options.lr != 0.0) {
      for (std::size_t k = 0; k < grad.size(); ++k) state.params[k] -= options.lr * grad[k];
    }
  }
}

ModelState train(const ModelConfig& config, std::span<const TrainingExample> data,
                 const TrainOptions& options) {
  auto state = init(config);
  train_in_place(state, data, options);
  return state;
}

std::vector<TokenId> predict_fill(const ModelState& state,
                                  std::span<const TokenId> tokens) {
  const Slices<const double> P(state.params.data(), state.layout);
  const Dims D(state.config);
  Activations act;
  run_forward(P, D, tokens, act);
  std::vector<TokenId> out;
  std::vector<double> probs;
  for (std::size_t t = 0; t < tokens.size(); ++t) {
    if (tokens[t] != Vocabulary::kMask) continue;
    lm_distribution(P, D, act, t, probs);
    std::size_t best = Vocabulary::kFirstContent;
    for (std::size_t v = Vocabulary::kFirstContent + 1; v < probs.size(); ++v)
      if (probs[v] > probs[best]) best = v;
    out.push_back(static_cast<TokenId>(best));
  }
  if (out.empty()) throw NoMask();
  return out;
}

std::vector<double> classify(const ModelState& state, const ForwardOutput& output,
                             std::size_t pos) {
  const Slices<const double> P(state.params.data(), state.layout);
  const Dims D(state.config);
  const auto y = class_posterior(P, D, output.embedding(pos).data());
  return {y.begin(), y.end()};
}

}  // namespace detmask
