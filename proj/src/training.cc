// training.cc

// Copyright 2026  The BTNN Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include "btnn/training.h"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <variant>

#include "btnn/error.h"

namespace btnn {

double StateLoss(double output, int label, double scale) {
  if (label == 0) return output * output;
  const double d = output - 1.0;
  return d * d * scale;
}

std::vector<BatchItem> SampleBatch(std::span<const AlignedSample> samples, int state,
                                   double ratio, std::mt19937_64 &rng) {
  std::vector<BatchItem> pos, neg;
  for (const auto &s : samples) (s.state == state ? pos : neg).push_back({s, s.Label(state)});
  if (pos.empty())
    throw EmptyClassError("state " + std::to_string(state) + " has no positive frames");
  size_t want = static_cast<size_t>(std::llround(ratio * static_cast<double>(pos.size())));
  want = std::min(want, neg.size());
  // Partial Fisher-Yates: the first `want` entries become a uniform sample
  // without replacement.
  for (size_t i = 0; i < want; ++i) {
    std::uniform_int_distribution<size_t> pick(i, neg.size() - 1);
    std::swap(neg[i], neg[pick(rng)]);
  }
  std::vector<BatchItem> batch = std::move(pos);
  batch.insert(batch.end(), neg.begin(), neg.begin() + static_cast<std::ptrdiff_t>(want));
  std::shuffle(batch.begin(), batch.end(), rng);
  return batch;
}

double TrainConfig::ScalePos(int state) const {
  return scale_pos.empty() ? default_scale_pos : scale_pos.at(state);
}

double TrainConfig::NegPosRatio(int state) const {
  return neg_pos_ratio.empty() ? default_neg_pos_ratio : neg_pos_ratio.at(state);
}

void TrainConfig::Validate(int num_states) const {
  if (!scale_pos.empty() && scale_pos.size() != static_cast<size_t>(num_states))
    throw ConfigError("scale_pos needs one entry per state");
  if (!neg_pos_ratio.empty() && neg_pos_ratio.size() != static_cast<size_t>(num_states))
    throw ConfigError("neg_pos_ratio needs one entry per state");
  for (int s = 0; s < num_states; ++s) {
    if (!(ScalePos(s) > 0)) throw ConfigError("scale for state " + std::to_string(s) + " must be > 0");
    if (!(NegPosRatio(s) > 0))
      throw ConfigError("neg/pos ratio for state " + std::to_string(s) + " must be > 0");
  }
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (!(learning_rate >= 0)) throw ConfigError("learning_rate must be >= 0");
}

namespace {

// Double-precision mirror of the float model. Training and gradient checks
// run here; results are rounded back to float once at the end.

struct DenseD {
  int in = 0, out = 0;
  Activation act = Activation::kIdentity;
  std::vector<double> w, b;
};

struct MemD {
  int dim = 0, taps = 1;
  std::vector<std::vector<double>> c;
};

using LayerD = std::variant<DenseD, MemD>;

struct EmbedD {
  int input_dim = 0;
  std::vector<LayerD> layers;
};

struct TailD {
  std::vector<DenseD> layers;
};

DenseD ToDouble(const DenseLayer &l) {
  return {l.in_dim, l.out_dim, l.activation,
          std::vector<double>(l.weights.begin(), l.weights.end()),
          std::vector<double>(l.bias.begin(), l.bias.end())};
}

void CopyBack(const DenseD &d, DenseLayer *l) {
  for (size_t i = 0; i < d.w.size(); ++i) l->weights[i] = static_cast<float>(d.w[i]);
  for (size_t i = 0; i < d.b.size(); ++i) l->bias[i] = static_cast<float>(d.b[i]);
}

EmbedD ToDouble(const EmbeddingNet &net) {
  EmbedD e;
  e.input_dim = net.input_dim;
  for (const auto &layer : net.layers) {
    if (const auto *d = std::get_if<DenseLayer>(&layer)) {
      e.layers.push_back(ToDouble(*d));
    } else {
      const auto &m = std::get<MemoryLayer>(layer);
      MemD md{m.dim, m.taps, {}};
      for (const auto &c : m.coefficients) md.c.emplace_back(c.begin(), c.end());
      e.layers.push_back(std::move(md));
    }
  }
  return e;
}

void CopyBack(const EmbedD &e, EmbeddingNet *net) {
  for (size_t i = 0; i < e.layers.size(); ++i) {
    if (const auto *d = std::get_if<DenseD>(&e.layers[i])) {
      CopyBack(*d, &std::get<DenseLayer>(net->layers[i]));
    } else {
      const auto &md = std::get<MemD>(e.layers[i]);
      auto &m = std::get<MemoryLayer>(net->layers[i]);
      for (int t = 0; t < md.taps; ++t)
        for (int k = 0; k < md.dim; ++k) m.coefficients[t][k] = static_cast<float>(md.c[t][k]);
    }
  }
}

TailD ToDouble(const TailNet &t) {
  TailD d;
  for (const auto &l : t.layers) d.layers.push_back(ToDouble(l));
  return d;
}

void CopyBack(const TailD &d, TailNet *t) {
  for (size_t i = 0; i < d.layers.size(); ++i) CopyBack(d.layers[i], &t->layers[i]);
}

// Zeroed copies used as gradient accumulators.
DenseD ZerosLike(const DenseD &d) {
  return {d.in, d.out, d.act, std::vector<double>(d.w.size()), std::vector<double>(d.b.size())};
}

TailD ZerosLike(const TailD &t) {
  TailD z;
  for (const auto &l : t.layers) z.layers.push_back(ZerosLike(l));
  return z;
}

EmbedD ZerosLike(const EmbedD &e) {
  EmbedD z;
  z.input_dim = e.input_dim;
  for (const auto &layer : e.layers) {
    if (const auto *d = std::get_if<DenseD>(&layer)) {
      z.layers.push_back(ZerosLike(*d));
    } else {
      const auto &m = std::get<MemD>(layer);
      z.layers.push_back(MemD{m.dim, m.taps, std::vector<std::vector<double>>(
                                                  m.taps, std::vector<double>(m.dim))});
    }
  }
  return z;
}

// Visits every parameter in model order.
void ForEachParam(DenseD &d, const std::function<void(double &)> &f) {
  for (double &v : d.w) f(v);
  for (double &v : d.b) f(v);
}

void ForEachParam(TailD &t, const std::function<void(double &)> &f) {
  for (auto &l : t.layers) ForEachParam(l, f);
}

void ForEachParam(EmbedD &e, const std::function<void(double &)> &f) {
  for (auto &layer : e.layers) {
    if (auto *d = std::get_if<DenseD>(&layer)) {
      ForEachParam(*d, f);
    } else {
      for (auto &c : std::get<MemD>(layer).c)
        for (double &v : c) f(v);
    }
  }
}

double ActivationD(Activation a, double x) {
  switch (a) {
    case Activation::kRelu: return x < 0 ? 0 : x;
    case Activation::kSigmoid: return 1.0 / (1.0 + std::exp(-x));
    case Activation::kIdentity: return x;
  }
  return x;
}

// Derivative expressed through the activation output y.
double ActivationGradD(Activation a, double y) {
  switch (a) {
    case Activation::kRelu: return y > 0 ? 1.0 : 0.0;
    case Activation::kSigmoid: return y * (1.0 - y);
    case Activation::kIdentity: return 1.0;
  }
  return 1.0;
}

void DenseForwardD(const DenseD &l, const std::vector<double> &x, std::vector<double> *y) {
  y->resize(l.out);
  for (int r = 0; r < l.out; ++r) {
    double s = l.b[r];
    const double *row = l.w.data() + static_cast<size_t>(r) * l.in;
    for (int c = 0; c < l.in; ++c) s += row[c] * x[c];
    (*y)[r] = ActivationD(l.act, s);
  }
}

// Accumulates parameter gradients into g and returns dL/dx.
std::vector<double> DenseBackwardD(const DenseD &l, const std::vector<double> &x,
                                   const std::vector<double> &y, const std::vector<double> &dy,
                                   DenseD *g) {
  std::vector<double> dx(l.in, 0.0);
  for (int r = 0; r < l.out; ++r) {
    const double dz = dy[r] * ActivationGradD(l.act, y[r]);
    if (dz == 0.0) continue;
    g->b[r] += dz;
    const double *row = l.w.data() + static_cast<size_t>(r) * l.in;
    double *grow = g->w.data() + static_cast<size_t>(r) * l.in;
    for (int c = 0; c < l.in; ++c) {
      grow[c] += dz * x[c];
      dx[c] += dz * row[c];
    }
  }
  return dx;
}

struct TailCache {
  std::vector<std::vector<double>> acts;  // acts[0] = input, acts[i+1] = layer i output
};

double TailForwardD(const TailD &t, const std::vector<double> &x, TailCache *cache) {
  cache->acts.resize(t.layers.size() + 1);
  cache->acts[0] = x;
  for (size_t i = 0; i < t.layers.size(); ++i)
    DenseForwardD(t.layers[i], cache->acts[i], &cache->acts[i + 1]);
  return cache->acts.back()[0];
}

std::vector<double> TailBackwardD(const TailD &t, const TailCache &cache, double dout,
                                  TailD *g) {
  std::vector<double> d{dout};
  for (size_t i = t.layers.size(); i-- > 0;)
    d = DenseBackwardD(t.layers[i], cache.acts[i], cache.acts[i + 1], d, &g->layers[i]);
  return d;
}

// acts[i][t] is the input of layer i at frame t; acts[n][t] the embedding.
struct EmbedCache {
  std::vector<std::vector<std::vector<double>>> acts;
};

void EmbedForwardD(const EmbedD &e, const FrameSequence &frames, size_t num_frames,
                   EmbedCache *cache) {
  const size_t n = e.layers.size();
  cache->acts.assign(n + 1, std::vector<std::vector<double>>(num_frames));
  for (size_t t = 0; t < num_frames; ++t)
    cache->acts[0][t].assign(frames[t].values.begin(), frames[t].values.end());
  for (size_t i = 0; i < n; ++i) {
    auto &in = cache->acts[i];
    auto &out = cache->acts[i + 1];
    if (const auto *d = std::get_if<DenseD>(&e.layers[i])) {
      for (size_t t = 0; t < num_frames; ++t) DenseForwardD(*d, in[t], &out[t]);
    } else {
      const auto &m = std::get<MemD>(e.layers[i]);
      for (size_t t = 0; t < num_frames; ++t) {
        out[t].assign(m.dim, 0.0);
        for (int tap = 0; tap < m.taps && static_cast<size_t>(tap) <= t; ++tap)
          for (int k = 0; k < m.dim; ++k) out[t][k] += m.c[tap][k] * in[t - tap][k];
      }
    }
  }
}

// `dout[t]` is dL/d(embedding at t); gradients accumulate into g.
void EmbedBackwardD(const EmbedD &e, const EmbedCache &cache,
                    std::vector<std::vector<double>> dout, EmbedD *g) {
  const size_t num_frames = dout.size();
  for (size_t i = e.layers.size(); i-- > 0;) {
    const auto &in = cache.acts[i];
    const auto &out = cache.acts[i + 1];
    std::vector<std::vector<double>> din(num_frames);
    if (const auto *d = std::get_if<DenseD>(&e.layers[i])) {
      auto &gd = std::get<DenseD>(g->layers[i]);
      for (size_t t = 0; t < num_frames; ++t) {
        if (dout[t].empty()) continue;
        din[t] = DenseBackwardD(*d, in[t], out[t], dout[t], &gd);
      }
    } else {
      const auto &m = std::get<MemD>(e.layers[i]);
      auto &gm = std::get<MemD>(g->layers[i]);
      for (size_t t = 0; t < num_frames; ++t) {
        if (dout[t].empty()) continue;
        for (int tap = 0; tap < m.taps && static_cast<size_t>(tap) <= t; ++tap) {
          auto &dst = din[t - tap];
          if (dst.empty()) dst.assign(m.dim, 0.0);
          for (int k = 0; k < m.dim; ++k) {
            gm.c[tap][k] += dout[t][k] * in[t - tap][k];
            dst[k] += dout[t][k] * m.c[tap][k];
          }
        }
      }
    }
    dout = std::move(din);
  }
}

double LossGrad(double output, int label, double scale) {
  return label == 0 ? 2.0 * output : 2.0 * (output - 1.0) * scale;
}

// Plain SGD or Adam over a flat parameter view.
class Updater {
 public:
  Updater(Optimizer opt, double lr) : opt_(opt), lr_(lr) {}

  template <typename Params>
  void Step(Params *params, Params *grads, double inv_batch) {
    std::vector<double *> p, g;
    ForEachParam(*params, [&](double &v) { p.push_back(&v); });
    ForEachParam(*grads, [&](double &v) { g.push_back(&v); });
    if (opt_ == Optimizer::kAdam && m_.empty()) {
      m_.assign(p.size(), 0.0);
      v_.assign(p.size(), 0.0);
    }
    ++step_;
    const double bc1 = 1.0 - std::pow(kBeta1, static_cast<double>(step_));
    const double bc2 = 1.0 - std::pow(kBeta2, static_cast<double>(step_));
    for (size_t i = 0; i < p.size(); ++i) {
      const double grad = *g[i] * inv_batch;
      if (opt_ == Optimizer::kSgd) {
        *p[i] -= lr_ * grad;
      } else {
        m_[i] = kBeta1 * m_[i] + (1 - kBeta1) * grad;
        v_[i] = kBeta2 * v_[i] + (1 - kBeta2) * grad * grad;
        *p[i] -= lr_ * (m_[i] / bc1) / (std::sqrt(v_[i] / bc2) + kEps);
      }
      *g[i] = 0.0;
    }
  }

 private:
  static constexpr double kBeta1 = 0.9, kBeta2 = 0.999, kEps = 1e-8;
  Optimizer opt_;
  double lr_;
  std::vector<double> m_, v_;
  int64_t step_ = 0;
};

void CheckFinite(double loss, int epoch, int state) {
  if (!std::isfinite(loss))
    throw TrainingError("loss diverged (" + std::to_string(loss) + ") at epoch " +
                        std::to_string(epoch) + ", state " + std::to_string(state));
}

TrainResult TrainFrozen(const AlignedDataset &dataset, const ModelBundle &bundle,
                        const TrainConfig &config) {
  TrainResult result{bundle, std::vector<std::vector<double>>(bundle.num_states)};
  std::vector<std::vector<std::vector<double>>> embeddings;
  for (const auto &u : dataset.utterances) {
    auto e = EmbedForward(u.frames, bundle.embedding);
    std::vector<std::vector<double>> ed;
    for (const auto &v : e) ed.emplace_back(v.begin(), v.end());
    embeddings.push_back(std::move(ed));
  }
  const auto samples = dataset.Samples();

  for (int s = 0; s < bundle.num_states; ++s) {
    // Independent stream per state so a state's result does not depend on
    // how many other states were trained before it.
    std::mt19937_64 rng(config.rng_seed + 0x9e3779b97f4a7c15ULL * static_cast<uint64_t>(s + 1));
    TailD tail = ToDouble(bundle.tails[s]);
    TailD grad = ZerosLike(tail);
    Updater updater(config.optimizer, config.learning_rate);
    TailCache cache;
    const double scale = config.ScalePos(s);
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
      auto batch = SampleBatch(samples, s, config.NegPosRatio(s), rng);
      double loss_sum = 0.0;
      for (size_t start = 0; start < batch.size(); start += config.batch_size) {
        const size_t end = std::min(batch.size(), start + config.batch_size);
        for (size_t i = start; i < end; ++i) {
          const auto &item = batch[i];
          const double o = TailForwardD(
              tail, embeddings[item.sample.utterance][item.sample.frame], &cache);
          loss_sum += StateLoss(o, item.label, scale);
          TailBackwardD(tail, cache, LossGrad(o, item.label, scale), &grad);
        }
        updater.Step(&tail, &grad, 1.0 / static_cast<double>(end - start));
      }
      const double mean = loss_sum / static_cast<double>(batch.size());
      CheckFinite(mean, epoch, s);
      result.loss_trace[s].push_back(mean);
    }
    CopyBack(tail, &result.bundle.tails[s]);
  }
  return result;
}

struct JointItem {
  AlignedSample sample;
  int state;
  int label;
};

TrainResult TrainJoint(const AlignedDataset &dataset, const ModelBundle &bundle,
                       const TrainConfig &config) {
  TrainResult result{bundle, std::vector<std::vector<double>>(bundle.num_states)};
  std::mt19937_64 rng(config.rng_seed);
  EmbedD embed = ToDouble(bundle.embedding);
  EmbedD embed_grad = ZerosLike(embed);
  Updater embed_updater(config.optimizer, config.learning_rate);
  std::vector<TailD> tails, tail_grads;
  std::vector<Updater> tail_updaters;
  for (const auto &t : bundle.tails) {
    tails.push_back(ToDouble(t));
    tail_grads.push_back(ZerosLike(tails.back()));
    tail_updaters.emplace_back(config.optimizer, config.learning_rate);
  }
  const auto samples = dataset.Samples();
  const int dim = bundle.embedding.OutputDim();

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::vector<JointItem> items;
    for (int s = 0; s < bundle.num_states; ++s)
      for (const auto &b : SampleBatch(samples, s, config.NegPosRatio(s), rng))
        items.push_back({b.sample, s, b.label});
    std::shuffle(items.begin(), items.end(), rng);

    std::vector<double> loss_sum(bundle.num_states, 0.0);
    std::vector<int64_t> loss_count(bundle.num_states, 0);
    for (size_t start = 0; start < items.size(); start += config.batch_size) {
      const size_t end = std::min(items.size(), start + config.batch_size);
      std::map<int64_t, std::vector<size_t>> by_utt;
      for (size_t i = start; i < end; ++i) by_utt[items[i].sample.utterance].push_back(i);
      std::vector<bool> touched(bundle.num_states, false);
      for (const auto &[u, idx] : by_utt) {
        const auto &utt = dataset.utterances[u];
        int64_t last = 0;
        for (size_t i : idx) last = std::max(last, items[i].sample.frame);
        EmbedCache ec;
        EmbedForwardD(embed, utt.frames, static_cast<size_t>(last + 1), &ec);
        std::vector<std::vector<double>> demb(last + 1);
        TailCache tc;
        for (size_t i : idx) {
          const auto &it = items[i];
          const double scale = config.ScalePos(it.state);
          const auto &x = ec.acts.back()[it.sample.frame];
          const double o = TailForwardD(tails[it.state], x, &tc);
          loss_sum[it.state] += StateLoss(o, it.label, scale);
          ++loss_count[it.state];
          auto dx = TailBackwardD(tails[it.state], tc, LossGrad(o, it.label, scale),
                                  &tail_grads[it.state]);
          auto &acc = demb[it.sample.frame];
          if (acc.empty()) acc.assign(dim, 0.0);
          for (int k = 0; k < dim; ++k) acc[k] += dx[k];
          touched[it.state] = true;
        }
        EmbedBackwardD(embed, ec, std::move(demb), &embed_grad);
      }
      const double inv = 1.0 / static_cast<double>(end - start);
      for (int s = 0; s < bundle.num_states; ++s)
        if (touched[s]) tail_updaters[s].Step(&tails[s], &tail_grads[s], inv);
      embed_updater.Step(&embed, &embed_grad, inv);
    }
    for (int s = 0; s < bundle.num_states; ++s) {
      const double mean = loss_count[s] > 0 ? loss_sum[s] / loss_count[s] : 0.0;
      CheckFinite(mean, epoch, s);
      result.loss_trace[s].push_back(mean);
    }
  }
  CopyBack(embed, &result.bundle.embedding);
  for (int s = 0; s < bundle.num_states; ++s) CopyBack(tails[s], &result.bundle.tails[s]);
  return result;
}

double LossAt(const EmbedD &embed, const TailD &tail, const AlignedUtterance &utt,
              int64_t frame, int label, double scale) {
  EmbedCache ec;
  EmbedForwardD(embed, utt.frames, static_cast<size_t>(frame + 1), &ec);
  TailCache tc;
  return StateLoss(TailForwardD(tail, ec.acts.back()[frame], &tc), label, scale);
}

}  // namespace

TrainResult Train(const AlignedDataset &dataset, const ModelBundle &bundle,
                  const TrainConfig &config) {
  bundle.Validate();
  dataset.Validate();
  config.Validate(bundle.num_states);
  if (dataset.num_states != bundle.num_states)
    throw ConfigError("dataset has " + std::to_string(dataset.num_states) +
                      " states, model has " + std::to_string(bundle.num_states));
  for (const auto &u : dataset.utterances)
    for (const auto &f : u.frames)
      if (f.values.size() != static_cast<size_t>(bundle.embedding.input_dim))
        throw ShapeError("utterance " + u.id + " frame dim " + std::to_string(f.values.size()) +
                         " != model input dim " + std::to_string(bundle.embedding.input_dim));
  return config.joint ? TrainJoint(dataset, bundle, config)
                      : TrainFrozen(dataset, bundle, config);
}

ParameterGradients ComputeGradients(const ModelBundle &bundle, const AlignedUtterance &utt,
                                    int64_t frame, int state, double scale) {
  if (frame < 0 || static_cast<size_t>(frame) >= utt.frames.size())
    throw LookupError("frame " + std::to_string(frame) + " outside utterance " + utt.id);
  const TailNet &tail_f = bundle.Tail(state);
  EmbedD embed = ToDouble(bundle.embedding);
  TailD tail = ToDouble(tail_f);
  EmbedD eg = ZerosLike(embed);
  TailD tg = ZerosLike(tail);
  const int label = utt.states.at(frame) == state ? 1 : 0;

  EmbedCache ec;
  EmbedForwardD(embed, utt.frames, static_cast<size_t>(frame + 1), &ec);
  TailCache tc;
  const double o = TailForwardD(tail, ec.acts.back()[frame], &tc);
  auto dx = TailBackwardD(tail, tc, LossGrad(o, label, scale), &tg);
  std::vector<std::vector<double>> demb(frame + 1);
  demb[frame] = std::move(dx);
  EmbedBackwardD(embed, ec, std::move(demb), &eg);

  ParameterGradients out;
  ForEachParam(tg, [&](double &v) { out.tail.push_back(v); });
  ForEachParam(eg, [&](double &v) { out.embedding.push_back(v); });
  return out;
}

double GradientCheck(const ModelBundle &bundle, const AlignedUtterance &utt, int64_t frame,
                     int state, double epsilon, double scale) {
  const ParameterGradients analytic = ComputeGradients(bundle, utt, frame, state, scale);
  EmbedD embed = ToDouble(bundle.embedding);
  TailD tail = ToDouble(bundle.Tail(state));
  const int label = utt.states.at(frame) == state ? 1 : 0;
  constexpr double kFloor = 1e-6;

  double max_err = 0.0;
  auto check = [&](double &param, double a) {
    const double saved = param;
    param = saved + epsilon;
    const double up = LossAt(embed, tail, utt, frame, label, scale);
    param = saved - epsilon;
    const double down = LossAt(embed, tail, utt, frame, label, scale);
    param = saved;
    const double numeric = (up - down) / (2.0 * epsilon);
    const double err =
        std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), kFloor});
    max_err = std::max(max_err, err);
  };
  size_t i = 0;
  ForEachParam(tail, [&](double &p) { check(p, analytic.tail[i++]); });
  i = 0;
  ForEachParam(embed, [&](double &p) { check(p, analytic.embedding[i++]); });
  return max_err;
}

}  // namespace btnn
