#include "zggp/neural/value_net.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "kernels.hpp"
#include "zggp/error.hpp"

namespace zggp {

namespace k = kernels;

// ---------------------------------------------------------------------------
// Configs and layouts

AttentionNetConfig attention_preset(Preset preset, const GameSpec& game) {
  AttentionNetConfig cfg;
  if (preset == Preset::kSmall) {
    cfg.embed_dim = 32;
    cfg.heads = 2;
    cfg.layers = 2;
    cfg.ff_dim = 64;
  }
  cfg.feature_dim = static_cast<std::uint32_t>(game.feature_dim);
  cfg.max_tiles = static_cast<std::uint32_t>(game.tile_count);
  return cfg;
}

ConvNetConfig conv_preset(Preset preset, const GameSpec& game) {
  if (!game.grid) {
    throw Error(ErrorKind::kNoGridTopology,
                game.name + " has no grid; the conv network needs one");
  }
  ConvNetConfig cfg;
  if (preset == Preset::kSmall) {
    cfg.channels = 16;
    cfg.conv_layers = 3;
  }
  cfg.grid_height = static_cast<std::uint32_t>(game.grid->height);
  cfg.grid_width = static_cast<std::uint32_t>(game.grid->width);
  cfg.feature_dim = static_cast<std::uint32_t>(game.feature_dim);
  return cfg;
}

NetConfig make_net_config(Architecture arch, Preset preset,
                          const GameSpec& game) {
  if (arch == Architecture::kAttention) return attention_preset(preset, game);
  return conv_preset(preset, game);
}

Architecture architecture_of(const NetConfig& config) {
  return std::holds_alternative<AttentionNetConfig>(config)
             ? Architecture::kAttention
             : Architecture::kConv;
}

void validate(const NetConfig& config) {
  if (const auto* a = std::get_if<AttentionNetConfig>(&config)) {
    if (a->embed_dim == 0 || a->heads == 0 || a->layers == 0 ||
        a->ff_dim == 0 || a->feature_dim == 0 || a->max_tiles == 0) {
      throw Error(ErrorKind::kInvalidArgument,
                  "attention config fields must be positive");
    }
    if (a->embed_dim % a->heads != 0) {
      throw Error(ErrorKind::kShapeMismatch,
                  "embed_dim must be divisible by heads");
    }
    if (a->positional == PositionalMode::kSinusoidal && a->embed_dim % 2 != 0) {
      throw Error(ErrorKind::kOddDimension,
                  "sinusoidal positions need an even embed_dim");
    }
    if (a->positional != PositionalMode::kSinusoidal &&
        a->positional != PositionalMode::kLearned) {
      throw Error(ErrorKind::kInvalidArgument, "unknown positional mode");
    }
  } else {
    const auto& c = std::get<ConvNetConfig>(config);
    if (c.channels == 0 || c.conv_layers == 0 || c.feature_dim == 0) {
      throw Error(ErrorKind::kInvalidArgument,
                  "conv config fields must be positive");
    }
    if (c.grid_height == 0 || c.grid_width == 0) {
      throw Error(ErrorKind::kNoGridTopology, "conv config without a grid");
    }
    if (c.kernel != 3) {
      throw Error(ErrorKind::kInvalidArgument, "only 3x3 kernels are supported");
    }
  }
}

int input_tiles(const NetConfig& config) {
  if (const auto* a = std::get_if<AttentionNetConfig>(&config)) {
    return static_cast<int>(a->max_tiles);
  }
  const auto& c = std::get<ConvNetConfig>(config);
  return static_cast<int>(c.grid_height * c.grid_width);
}

int input_features(const NetConfig& config) {
  return std::visit([](const auto& c) { return static_cast<int>(c.feature_dim); },
                    config);
}

namespace {

// Parameter indices for the attention layout.
struct AttnIndex {
  static constexpr std::size_t kPerLayer = 16;
  enum LayerSlot : std::size_t {
    kLn1Gain, kLn1Bias, kQw, kQb, kKw, kKb, kVw, kVb, kOw, kOb,
    kLn2Gain, kLn2Bias, kF1w, kF1b, kF2w, kF2b,
  };

  explicit AttnIndex(const AttentionNetConfig& cfg)
      : learned(cfg.positional == PositionalMode::kLearned),
        layer_base(learned ? 3 : 2),
        head_base(layer_base + kPerLayer * cfg.layers) {}

  std::size_t layer(std::size_t l, LayerSlot slot) const {
    return layer_base + l * kPerLayer + slot;
  }

  static constexpr std::size_t kEmbW = 0;
  static constexpr std::size_t kEmbB = 1;
  static constexpr std::size_t kPos = 2;
  bool learned;
  std::size_t layer_base;
  std::size_t head_base;  // hidden.w, hidden.b, out.w, out.b
};

ParamLayout attention_layout(const AttentionNetConfig& cfg) {
  const int d = static_cast<int>(cfg.embed_dim);
  const int ff = static_cast<int>(cfg.ff_dim);
  ParamLayout layout;
  layout.add("embed.weight", {static_cast<int>(cfg.feature_dim), d});
  layout.add("embed.bias", {d});
  if (cfg.positional == PositionalMode::kLearned) {
    layout.add("position.table", {static_cast<int>(cfg.max_tiles), d});
  }
  for (std::uint32_t l = 0; l < cfg.layers; ++l) {
    const std::string p = "layer" + std::to_string(l) + ".";
    layout.add(p + "ln1.gain", {d});
    layout.add(p + "ln1.bias", {d});
    layout.add(p + "attn.q.weight", {d, d});
    layout.add(p + "attn.q.bias", {d});
    layout.add(p + "attn.k.weight", {d, d});
    layout.add(p + "attn.k.bias", {d});
    layout.add(p + "attn.v.weight", {d, d});
    layout.add(p + "attn.v.bias", {d});
    layout.add(p + "attn.out.weight", {d, d});
    layout.add(p + "attn.out.bias", {d});
    layout.add(p + "ln2.gain", {d});
    layout.add(p + "ln2.bias", {d});
    layout.add(p + "ffn.in.weight", {d, ff});
    layout.add(p + "ffn.in.bias", {ff});
    layout.add(p + "ffn.out.weight", {ff, d});
    layout.add(p + "ffn.out.bias", {d});
  }
  layout.add("head.hidden.weight", {d, d});
  layout.add("head.hidden.bias", {d});
  layout.add("head.out.weight", {d, 1});
  layout.add("head.out.bias", {1});
  return layout;
}

ParamLayout conv_layout(const ConvNetConfig& cfg) {
  const int c = static_cast<int>(cfg.channels);
  ParamLayout layout;
  for (std::uint32_t l = 0; l < cfg.conv_layers; ++l) {
    const int in = l == 0 ? static_cast<int>(cfg.feature_dim) : c;
    const std::string p = "conv" + std::to_string(l) + ".";
    layout.add(p + "weight", {3, 3, in, c});
    layout.add(p + "bias", {c});
  }
  layout.add("head.weight", {c, 1});
  layout.add("head.bias", {1});
  return layout;
}

}  // namespace

ParamLayout make_layout(const NetConfig& config) {
  validate(config);
  if (const auto* a = std::get_if<AttentionNetConfig>(&config)) {
    return attention_layout(*a);
  }
  return conv_layout(std::get<ConvNetConfig>(config));
}

template <typename S>
BasicValueNet<S>::BasicValueNet(NetConfig config)
    : config_(config), params_(make_layout(config)) {}

template <typename S>
BasicValueNet<S>::BasicValueNet(NetConfig config, ParamSet<S> params)
    : config_(config), params_(std::move(params)) {
  if (!(params_.layout() == make_layout(config_))) {
    throw Error(ErrorKind::kShapeMismatch,
                "parameter layout does not match the config");
  }
}

ValueNet init_value_net(const NetConfig& config, std::uint64_t seed) {
  ValueNet net(config);
  Rng rng(seed);
  auto& params = net.params();
  const auto& specs = params.layout().specs();
  for (std::size_t i = 0; i < specs.size(); ++i) {
    const ParamSpec& spec = specs[i];
    auto values = params.view(i);
    const bool is_gain = spec.name.ends_with(".gain");
    if (is_gain) {
      std::fill(values.begin(), values.end(), 1.0f);
      continue;
    }
    if (spec.shape.size() < 2) continue;  // biases stay 0
    double fan_in;
    double fan_out;
    if (spec.shape.size() == 4) {  // 3 x 3 x in x out
      const double taps = static_cast<double>(spec.shape[0]) * spec.shape[1];
      fan_in = taps * spec.shape[2];
      fan_out = taps * spec.shape[3];
    } else {
      fan_in = spec.shape[0];
      fan_out = spec.shape[1];
    }
    const double bound = std::sqrt(6.0 / (fan_in + fan_out));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (float& v : values) v = static_cast<float>(dist(rng));
  }
  return net;
}

template <typename S>
Tensor<S> sinusoidal_positions(int tiles, int dim) {
  if (dim % 2 != 0) {
    throw Error(ErrorKind::kOddDimension,
                "sinusoidal positions need an even dimension, got " +
                    std::to_string(dim));
  }
  Tensor<S> table({tiles, dim});
  for (int pos = 0; pos < tiles; ++pos) {
    for (int i = 0; i < dim / 2; ++i) {
      const double angle =
          pos / std::pow(10000.0, (2.0 * i) / static_cast<double>(dim));
      table.at(pos, 2 * i) = static_cast<S>(std::sin(angle));
      table.at(pos, 2 * i + 1) = static_cast<S>(std::cos(angle));
    }
  }
  return table;
}

// ---------------------------------------------------------------------------
// Workspaces

namespace {

template <typename S>
struct AttnBuffers {
  explicit AttnBuffers(const AttentionNetConfig& cfg)
      : cfg(cfg),
        idx(cfg),
        t_max(static_cast<int>(cfg.max_tiles)),
        d(static_cast<int>(cfg.embed_dim)),
        heads(static_cast<int>(cfg.heads)),
        dh(d / heads),
        ff(static_cast<int>(cfg.ff_dim)) {
    const std::size_t td = static_cast<std::size_t>(t_max) * d;
    input.resize(static_cast<std::size_t>(t_max) * cfg.feature_dim);
    slots.resize(t_max);
    if (cfg.positional == PositionalMode::kSinusoidal) {
      sinusoid = sinusoidal_positions<S>(t_max, d).values;
    }
    layers.resize(cfg.layers);
    for (auto& layer : layers) {
      for (auto* v : {&layer.x_in, &layer.xhat1, &layer.a, &layer.q, &layer.k,
                      &layer.v, &layer.o, &layer.x_mid, &layer.xhat2,
                      &layer.b}) {
        v->resize(td);
      }
      layer.rstd1.resize(t_max);
      layer.rstd2.resize(t_max);
      layer.probs.resize(static_cast<std::size_t>(heads) * t_max * t_max);
      layer.u.resize(static_cast<std::size_t>(t_max) * ff);
    }
    x_out.resize(td);
    pool.resize(d);
    z1.resize(d);
    r1.resize(d);
    for (auto* v : {&dx, &dx_mid, &da, &dq, &dk, &dv, &dout_heads, &db_ln}) {
      v->resize(td);
    }
    du.resize(static_cast<std::size_t>(t_max) * ff);
    dp.resize(t_max);
    dpool.resize(d);
    dz1.resize(d);
    r_tmp.resize(static_cast<std::size_t>(t_max) * ff);
  }

  struct Layer {
    std::vector<S> x_in, xhat1, rstd1, a, q, k, v, probs, o, x_mid, xhat2,
        rstd2, b, u;
  };

  AttentionNetConfig cfg;
  AttnIndex idx;
  int t_max, d, heads, dh, ff;
  int tiles = 0;
  std::vector<S> input;
  std::vector<int> slots;
  std::vector<S> sinusoid;
  std::vector<Layer> layers;
  std::vector<S> x_out, pool, z1, r1;
  S y = 0;
  S out = 0;
  // Backward scratch.
  std::vector<S> dx, dx_mid, da, dq, dk, dv, dout_heads, db_ln, du, dp, dpool,
      dz1, r_tmp;
};

template <typename S>
struct ConvBuffers {
  explicit ConvBuffers(const ConvNetConfig& cfg)
      : cfg(cfg),
        h(static_cast<int>(cfg.grid_height)),
        w(static_cast<int>(cfg.grid_width)),
        c(static_cast<int>(cfg.channels)),
        f(static_cast<int>(cfg.feature_dim)) {
    const std::size_t pixels = static_cast<std::size_t>(h) * w;
    acts.resize(cfg.conv_layers + 1);
    pre.resize(cfg.conv_layers);
    acts[0].resize(pixels * f);
    for (std::uint32_t l = 0; l < cfg.conv_layers; ++l) {
      acts[l + 1].resize(pixels * c);
      pre[l].resize(pixels * c);
    }
    pool.resize(c);
    dact.resize(pixels * std::max(c, f));
    dprev.resize(pixels * std::max(c, f));
    dpre.resize(pixels * c);
  }

  ConvNetConfig cfg;
  int h, w, c, f;
  std::vector<std::vector<S>> acts;  // acts[0] = input, acts[l+1] = relu(pre[l])
  std::vector<std::vector<S>> pre;
  std::vector<S> pool;
  S y = 0;
  S out = 0;
  std::vector<S> dact, dprev, dpre;
};

}  // namespace

template <typename S>
struct NetWorkspace<S>::Impl {
  explicit Impl(const NetConfig& config) {
    validate(config);
    if (const auto* a = std::get_if<AttentionNetConfig>(&config)) {
      attn = std::make_unique<AttnBuffers<S>>(*a);
    } else {
      conv = std::make_unique<ConvBuffers<S>>(std::get<ConvNetConfig>(config));
    }
  }
  std::unique_ptr<AttnBuffers<S>> attn;
  std::unique_ptr<ConvBuffers<S>> conv;
};

template <typename S>
NetWorkspace<S>::NetWorkspace(const NetConfig& config)
    : impl_(std::make_unique<Impl>(config)) {}
template <typename S>
NetWorkspace<S>::~NetWorkspace() = default;
template <typename S>
NetWorkspace<S>::NetWorkspace(NetWorkspace&&) noexcept = default;
template <typename S>
NetWorkspace<S>& NetWorkspace<S>::operator=(NetWorkspace&&) noexcept = default;

template <typename S>
std::vector<std::vector<S>> NetWorkspace<S>::attention_weights() const {
  std::vector<std::vector<S>> out;
  if (!impl_->attn) return out;
  const auto& b = *impl_->attn;
  const std::size_t tt = static_cast<std::size_t>(b.tiles) * b.tiles;
  for (const auto& layer : b.layers) {
    for (int hd = 0; hd < b.heads; ++hd) {
      auto first = layer.probs.begin() + static_cast<long>(hd * tt);
      out.emplace_back(first, first + static_cast<long>(tt));
    }
  }
  return out;
}

template <typename S>
std::vector<bool> NetWorkspace<S>::relu_pattern() const {
  std::vector<bool> out;
  auto append = [&out](auto first, auto last) {
    for (; first != last; ++first) out.push_back(*first > S{0});
  };
  if (impl_->attn) {
    const auto& b = *impl_->attn;
    const long used = static_cast<long>(b.tiles) * b.ff;
    for (const auto& layer : b.layers) append(layer.u.begin(), layer.u.begin() + used);
    append(b.z1.begin(), b.z1.end());
  } else {
    for (const auto& pre : impl_->conv->pre) append(pre.begin(), pre.end());
  }
  return out;
}

template <typename S>
std::vector<S> NetWorkspace<S>::conv_feature_map() const {
  if (!impl_->conv) return {};
  return impl_->conv->acts.back();
}

// ---------------------------------------------------------------------------
// Attention network

namespace {

constexpr double kLayerNormEps = 1e-5;

template <typename S>
void layer_norm_forward(const S* x, int rows, int d, const S* gain,
                        const S* bias, S* xhat, S* rstd, S* y) {
  for (int i = 0; i < rows; ++i) {
    const S* xi = x + static_cast<long>(i) * d;
    S sum = 0;
    for (int j = 0; j < d; ++j) sum += xi[j];
    const S mean = sum / d;
    S var = 0;
    for (int j = 0; j < d; ++j) var += (xi[j] - mean) * (xi[j] - mean);
    var /= d;
    const S r = S{1} / std::sqrt(var + static_cast<S>(kLayerNormEps));
    rstd[i] = r;
    S* hi = xhat + static_cast<long>(i) * d;
    S* yi = y + static_cast<long>(i) * d;
    for (int j = 0; j < d; ++j) {
      hi[j] = (xi[j] - mean) * r;
      yi[j] = hi[j] * gain[j] + bias[j];
    }
  }
}

// dx += LayerNorm backward of dy.
template <typename S>
void layer_norm_backward(const S* dy, const S* xhat, const S* rstd, int rows,
                         int d, const S* gain, S* dgain, S* dbias, S* dx) {
  for (int i = 0; i < rows; ++i) {
    const S* dyi = dy + static_cast<long>(i) * d;
    const S* hi = xhat + static_cast<long>(i) * d;
    S mean_g = 0;
    S mean_gh = 0;
    for (int j = 0; j < d; ++j) {
      const S g = dyi[j] * gain[j];
      mean_g += g;
      mean_gh += g * hi[j];
      dgain[j] += dyi[j] * hi[j];
      dbias[j] += dyi[j];
    }
    mean_g /= d;
    mean_gh /= d;
    S* dxi = dx + static_cast<long>(i) * d;
    for (int j = 0; j < d; ++j) {
      dxi[j] += rstd[i] * (dyi[j] * gain[j] - mean_g - hi[j] * mean_gh);
    }
  }
}

template <typename S>
S attention_forward_impl(const BasicValueNet<S>& net, AttnBuffers<S>& b,
                         std::span<const float> encoding, int tiles,
                         std::span<const int> slots) {
  const auto& P = net.params();
  const auto& idx = b.idx;
  const int d = b.d;
  const int fdim = static_cast<int>(b.cfg.feature_dim);
  const int T = tiles;
  b.tiles = T;
  for (std::size_t i = 0; i < static_cast<std::size_t>(T) * fdim; ++i) {
    b.input[i] = static_cast<S>(encoding[i]);
  }
  for (int i = 0; i < T; ++i) b.slots[i] = slots.empty() ? i : slots[i];

  // Tile embedding plus positional rows.
  S* x = b.layers.empty() ? b.x_out.data() : b.layers[0].x_in.data();
  k::affine(b.input.data(), T, fdim, P.ptr(AttnIndex::kEmbW),
            P.ptr(AttnIndex::kEmbB), d, x);
  const S* pos_table = idx.learned ? P.ptr(AttnIndex::kPos) : b.sinusoid.data();
  for (int i = 0; i < T; ++i) {
    k::axpy(S{1}, pos_table + static_cast<long>(b.slots[i]) * d,
            x + static_cast<long>(i) * d, d);
  }

  const S scale = S{1} / std::sqrt(static_cast<S>(b.dh));
  for (std::size_t l = 0; l < b.layers.size(); ++l) {
    auto& L = b.layers[l];
    auto pp = [&](AttnIndex::LayerSlot s) { return P.ptr(idx.layer(l, s)); };
    layer_norm_forward(L.x_in.data(), T, d, pp(AttnIndex::kLn1Gain),
                       pp(AttnIndex::kLn1Bias), L.xhat1.data(), L.rstd1.data(),
                       L.a.data());
    k::affine(L.a.data(), T, d, pp(AttnIndex::kQw), pp(AttnIndex::kQb), d,
              L.q.data());
    k::affine(L.a.data(), T, d, pp(AttnIndex::kKw), pp(AttnIndex::kKb), d,
              L.k.data());
    k::affine(L.a.data(), T, d, pp(AttnIndex::kVw), pp(AttnIndex::kVb), d,
              L.v.data());
    std::fill(L.o.begin(), L.o.begin() + static_cast<long>(T) * d, S{0});
    for (int hd = 0; hd < b.heads; ++hd) {
      const int off = hd * b.dh;
      S* probs = L.probs.data() + static_cast<long>(hd) * T * T;
      for (int i = 0; i < T; ++i) {
        S* row = probs + static_cast<long>(i) * T;
        const S* qi = L.q.data() + static_cast<long>(i) * d + off;
        S max_logit = -std::numeric_limits<S>::infinity();
        for (int j = 0; j < T; ++j) {
          row[j] = k::dot(qi, L.k.data() + static_cast<long>(j) * d + off,
                          b.dh) *
                   scale;
          max_logit = std::max(max_logit, row[j]);
        }
        S total = 0;
        for (int j = 0; j < T; ++j) {
          row[j] = std::exp(row[j] - max_logit);
          total += row[j];
        }
        const S inv = S{1} / total;
        S* oi = L.o.data() + static_cast<long>(i) * d + off;
        for (int j = 0; j < T; ++j) {
          row[j] *= inv;
          k::axpy(row[j], L.v.data() + static_cast<long>(j) * d + off, oi,
                  b.dh);
        }
      }
    }
    // x_mid = x_in + O Wo + bo
    k::affine(L.o.data(), T, d, pp(AttnIndex::kOw), pp(AttnIndex::kOb), d,
              L.x_mid.data());
    for (long i = 0; i < static_cast<long>(T) * d; ++i) L.x_mid[i] += L.x_in[i];
    layer_norm_forward(L.x_mid.data(), T, d, pp(AttnIndex::kLn2Gain),
                       pp(AttnIndex::kLn2Bias), L.xhat2.data(), L.rstd2.data(),
                       L.b.data());
    k::affine(L.b.data(), T, d, pp(AttnIndex::kF1w), pp(AttnIndex::kF1b), b.ff,
              L.u.data());
    for (long i = 0; i < static_cast<long>(T) * b.ff; ++i) {
      b.r_tmp[i] = std::max(L.u[i], S{0});
    }
    S* next = l + 1 < b.layers.size() ? b.layers[l + 1].x_in.data()
                                      : b.x_out.data();
    k::affine(b.r_tmp.data(), T, b.ff, pp(AttnIndex::kF2w), pp(AttnIndex::kF2b),
              d, next);
    for (long i = 0; i < static_cast<long>(T) * d; ++i) next[i] += L.x_mid[i];
  }

  std::fill(b.pool.begin(), b.pool.end(), S{0});
  for (int i = 0; i < T; ++i) {
    k::axpy(S{1}, b.x_out.data() + static_cast<long>(i) * d, b.pool.data(), d);
  }
  for (S& v : b.pool) v /= static_cast<S>(T);
  const std::size_t hb = idx.head_base;
  k::affine(b.pool.data(), 1, d, P.ptr(hb), P.ptr(hb + 1), d, b.z1.data());
  for (int j = 0; j < d; ++j) b.r1[j] = std::max(b.z1[j], S{0});
  b.y = k::dot(b.r1.data(), P.ptr(hb + 2), d) + P.ptr(hb + 3)[0];
  b.out = std::tanh(b.y);
  return b.out;
}

template <typename S>
void attention_backward_impl(const BasicValueNet<S>& net, AttnBuffers<S>& b,
                             S scale_out, std::span<S> grads) {
  const auto& P = net.params();
  const auto& layout = P.layout();
  const auto& idx = b.idx;
  auto G = [&](std::size_t i) { return grads.data() + layout[i].offset; };
  const int d = b.d;
  const int T = b.tiles;
  const long td = static_cast<long>(T) * d;

  const S dy = scale_out * (S{1} - b.out * b.out);
  const std::size_t hb = idx.head_base;
  k::axpy(dy, b.r1.data(), G(hb + 2), d);
  G(hb + 3)[0] += dy;
  const S* w_out = P.ptr(hb + 2);
  for (int j = 0; j < d; ++j) b.dz1[j] = b.z1[j] > S{0} ? w_out[j] * dy : S{0};
  k::affine_backward_params(b.pool.data(), b.dz1.data(), 1, d, d, G(hb),
                            G(hb + 1));
  k::affine_backward_input(b.dz1.data(), P.ptr(hb), 1, d, d, b.dpool.data(),
                           false);
  // dx holds the gradient w.r.t. the current layer output.
  for (int i = 0; i < T; ++i) {
    for (int j = 0; j < d; ++j) b.dx[i * d + j] = b.dpool[j] / S(T);
  }

  const S attn_scale = S{1} / std::sqrt(static_cast<S>(b.dh));
  for (std::size_t li = b.layers.size(); li-- > 0;) {
    auto& L = b.layers[li];
    auto pp = [&](AttnIndex::LayerSlot s) { return P.ptr(idx.layer(li, s)); };
    auto gg = [&](AttnIndex::LayerSlot s) { return G(idx.layer(li, s)); };

    // Feed-forward sublayer; the residual passes dx straight to x_mid.
    for (long i = 0; i < static_cast<long>(T) * b.ff; ++i) {
      b.r_tmp[i] = std::max(L.u[i], S{0});
    }
    k::affine_backward_params(b.r_tmp.data(), b.dx.data(), T, b.ff, d,
                              gg(AttnIndex::kF2w), gg(AttnIndex::kF2b));
    k::affine_backward_input(b.dx.data(), pp(AttnIndex::kF2w), T, b.ff, d,
                             b.du.data(), false);
    for (long i = 0; i < static_cast<long>(T) * b.ff; ++i) {
      if (L.u[i] <= S{0}) b.du[i] = S{0};
    }
    k::affine_backward_params(L.b.data(), b.du.data(), T, d, b.ff,
                              gg(AttnIndex::kF1w), gg(AttnIndex::kF1b));
    k::affine_backward_input(b.du.data(), pp(AttnIndex::kF1w), T, d, b.ff,
                             b.db_ln.data(), false);
    std::copy(b.dx.begin(), b.dx.begin() + td, b.dx_mid.begin());
    layer_norm_backward(b.db_ln.data(), L.xhat2.data(), L.rstd2.data(), T, d,
                        pp(AttnIndex::kLn2Gain), gg(AttnIndex::kLn2Gain),
                        gg(AttnIndex::kLn2Bias), b.dx_mid.data());

    // Attention sublayer.
    k::affine_backward_params(L.o.data(), b.dx_mid.data(), T, d, d,
                              gg(AttnIndex::kOw), gg(AttnIndex::kOb));
    k::affine_backward_input(b.dx_mid.data(), pp(AttnIndex::kOw), T, d, d,
                             b.dout_heads.data(), false);
    std::fill(b.dq.begin(), b.dq.begin() + td, S{0});
    std::fill(b.dk.begin(), b.dk.begin() + td, S{0});
    std::fill(b.dv.begin(), b.dv.begin() + td, S{0});
    for (int hd = 0; hd < b.heads; ++hd) {
      const int off = hd * b.dh;
      const S* probs = L.probs.data() + static_cast<long>(hd) * T * T;
      for (int i = 0; i < T; ++i) {
        const S* row = probs + static_cast<long>(i) * T;
        const S* doi = b.dout_heads.data() + static_cast<long>(i) * d + off;
        S weighted = 0;
        for (int j = 0; j < T; ++j) {
          b.dp[j] = k::dot(doi, L.v.data() + static_cast<long>(j) * d + off,
                           b.dh);
          weighted += row[j] * b.dp[j];
          k::axpy(row[j], doi, b.dv.data() + static_cast<long>(j) * d + off,
                  b.dh);
        }
        const S* qi = L.q.data() + static_cast<long>(i) * d + off;
        S* dqi = b.dq.data() + static_cast<long>(i) * d + off;
        for (int j = 0; j < T; ++j) {
          const S dlogit = row[j] * (b.dp[j] - weighted) * attn_scale;
          k::axpy(dlogit, L.k.data() + static_cast<long>(j) * d + off, dqi,
                  b.dh);
          k::axpy(dlogit, qi, b.dk.data() + static_cast<long>(j) * d + off,
                  b.dh);
        }
      }
    }
    k::affine_backward_params(L.a.data(), b.dq.data(), T, d, d,
                              gg(AttnIndex::kQw), gg(AttnIndex::kQb));
    k::affine_backward_params(L.a.data(), b.dk.data(), T, d, d,
                              gg(AttnIndex::kKw), gg(AttnIndex::kKb));
    k::affine_backward_params(L.a.data(), b.dv.data(), T, d, d,
                              gg(AttnIndex::kVw), gg(AttnIndex::kVb));
    k::affine_backward_input(b.dq.data(), pp(AttnIndex::kQw), T, d, d,
                             b.da.data(), false);
    k::affine_backward_input(b.dk.data(), pp(AttnIndex::kKw), T, d, d,
                             b.da.data(), true);
    k::affine_backward_input(b.dv.data(), pp(AttnIndex::kVw), T, d, d,
                             b.da.data(), true);
    std::copy(b.dx_mid.begin(), b.dx_mid.begin() + td, b.dx.begin());
    layer_norm_backward(b.da.data(), L.xhat1.data(), L.rstd1.data(), T, d,
                        pp(AttnIndex::kLn1Gain), gg(AttnIndex::kLn1Gain),
                        gg(AttnIndex::kLn1Bias), b.dx.data());
  }

  const int fdim = static_cast<int>(b.cfg.feature_dim);
  k::affine_backward_params(b.input.data(), b.dx.data(), T, fdim, d,
                            G(AttnIndex::kEmbW), G(AttnIndex::kEmbB));
  if (idx.learned) {
    S* dpos = G(AttnIndex::kPos);
    for (int i = 0; i < T; ++i) {
      k::axpy(S{1}, b.dx.data() + static_cast<long>(i) * d,
              dpos + static_cast<long>(b.slots[i]) * d, d);
    }
  }
}

// ---------------------------------------------------------------------------
// Convolutional network

template <typename S>
S conv_forward_impl(const BasicValueNet<S>& net, ConvBuffers<S>& b,
                    std::span<const float> encoding) {
  const auto& P = net.params();
  const int h = b.h;
  const int w = b.w;
  const int c = b.c;
  const int pixels = h * w;
  for (std::size_t i = 0; i < b.acts[0].size(); ++i) {
    b.acts[0][i] = static_cast<S>(encoding[i]);
  }
  for (std::uint32_t l = 0; l < b.cfg.conv_layers; ++l) {
    const int cin = l == 0 ? b.f : c;
    const S* weight = P.ptr(2 * l);
    const S* bias = P.ptr(2 * l + 1);
    const S* in = b.acts[l].data();
    S* pre = b.pre[l].data();
    for (int r = 0; r < h; ++r) {
      for (int col = 0; col < w; ++col) {
        S* out = pre + static_cast<long>(r * w + col) * c;
        for (int j = 0; j < c; ++j) out[j] = bias[j];
        for (int ky = 0; ky < 3; ++ky) {
          const int rr = r + ky - 1;
          if (rr < 0 || rr >= h) continue;
          for (int kx = 0; kx < 3; ++kx) {
            const int cc = col + kx - 1;
            if (cc < 0 || cc >= w) continue;
            const S* src = in + static_cast<long>(rr * w + cc) * cin;
            const S* tap = weight + static_cast<long>((ky * 3 + kx) * cin) * c;
            for (int ci = 0; ci < cin; ++ci) {
              if (src[ci] != S{0}) {
                k::axpy(src[ci], tap + static_cast<long>(ci) * c, out, c);
              }
            }
          }
        }
      }
    }
    S* act = b.acts[l + 1].data();
    for (long i = 0; i < static_cast<long>(pixels) * c; ++i) {
      act[i] = std::max(pre[i], S{0});
    }
  }
  std::fill(b.pool.begin(), b.pool.end(), S{0});
  const S* last = b.acts.back().data();
  for (int p = 0; p < pixels; ++p) {
    k::axpy(S{1}, last + static_cast<long>(p) * c, b.pool.data(), c);
  }
  for (S& v : b.pool) v /= static_cast<S>(pixels);
  const std::size_t hb = 2 * b.cfg.conv_layers;
  b.y = k::dot(b.pool.data(), P.ptr(hb), c) + P.ptr(hb + 1)[0];
  b.out = std::tanh(b.y);
  return b.out;
}

template <typename S>
void conv_backward_impl(const BasicValueNet<S>& net, ConvBuffers<S>& b,
                        S scale_out, std::span<S> grads) {
  const auto& P = net.params();
  const auto& layout = P.layout();
  auto G = [&](std::size_t i) { return grads.data() + layout[i].offset; };
  const int h = b.h;
  const int w = b.w;
  const int c = b.c;
  const int pixels = h * w;
  const std::size_t hb = 2 * b.cfg.conv_layers;

  const S dy = scale_out * (S{1} - b.out * b.out);
  k::axpy(dy, b.pool.data(), G(hb), c);
  G(hb + 1)[0] += dy;
  const S* w_head = P.ptr(hb);
  for (int p = 0; p < pixels; ++p) {
    for (int j = 0; j < c; ++j) {
      b.dact[p * c + j] = w_head[j] * dy / static_cast<S>(pixels);
    }
  }
  for (std::uint32_t li = b.cfg.conv_layers; li-- > 0;) {
    const int cin = li == 0 ? b.f : c;
    const S* weight = P.ptr(2 * li);
    S* dweight = G(2 * li);
    S* dbias = G(2 * li + 1);
    const S* pre = b.pre[li].data();
    const S* in = b.acts[li].data();
    for (long i = 0; i < static_cast<long>(pixels) * c; ++i) {
      b.dpre[i] = pre[i] > S{0} ? b.dact[i] : S{0};
    }
    const bool need_input = li > 0;
    if (need_input) {
      std::fill(b.dprev.begin(), b.dprev.begin() + static_cast<long>(pixels) * cin,
                S{0});
    }
    for (int r = 0; r < h; ++r) {
      for (int col = 0; col < w; ++col) {
        const S* g = b.dpre.data() + static_cast<long>(r * w + col) * c;
        for (int j = 0; j < c; ++j) dbias[j] += g[j];
        for (int ky = 0; ky < 3; ++ky) {
          const int rr = r + ky - 1;
          if (rr < 0 || rr >= h) continue;
          for (int kx = 0; kx < 3; ++kx) {
            const int cc = col + kx - 1;
            if (cc < 0 || cc >= w) continue;
            const long src_off = static_cast<long>(rr * w + cc) * cin;
            const long tap_off = static_cast<long>((ky * 3 + kx) * cin) * c;
            for (int ci = 0; ci < cin; ++ci) {
              const S x = in[src_off + ci];
              if (x != S{0}) k::axpy(x, g, dweight + tap_off + ci * c, c);
              if (need_input) {
                b.dprev[src_off + ci] += k::dot(g, weight + tap_off + ci * c, c);
              }
            }
          }
        }
      }
    }
    if (need_input) {
      std::copy(b.dprev.begin(), b.dprev.begin() + static_cast<long>(pixels) * cin,
                b.dact.begin());
    }
  }
}

void check_encoding(const NetConfig& config, std::size_t values, int tiles) {
  const int features = input_features(config);
  if (values != static_cast<std::size_t>(tiles) * features) {
    throw Error(ErrorKind::kShapeMismatch,
                "encoding has " + std::to_string(values) + " values, expected " +
                    std::to_string(tiles) + " x " + std::to_string(features));
  }
  if (const auto* a = std::get_if<AttentionNetConfig>(&config)) {
    if (tiles < 1 || tiles > static_cast<int>(a->max_tiles)) {
      throw Error(ErrorKind::kShapeMismatch,
                  "attention net accepts at most " +
                      std::to_string(a->max_tiles) + " tiles, got " +
                      std::to_string(tiles));
    }
  } else if (tiles != input_tiles(config)) {
    throw Error(ErrorKind::kShapeMismatch,
                "conv net expects " + std::to_string(input_tiles(config)) +
                    " tiles, got " + std::to_string(tiles));
  }
}

}  // namespace

template <typename S>
S forward(const BasicValueNet<S>& net, std::span<const float> encoding,
          int tiles, NetWorkspace<S>& ws, std::span<const int> slots) {
  check_encoding(net.config(), encoding.size(), tiles);
  auto& impl = ws.impl();
  if (impl.attn) {
    if (!slots.empty()) {
      if (static_cast<int>(slots.size()) != tiles) {
        throw Error(ErrorKind::kShapeMismatch, "slot list length != tiles");
      }
      for (int s : slots) {
        if (s < 0 || s >= impl.attn->t_max) {
          throw Error(ErrorKind::kShapeMismatch, "slot index out of range");
        }
      }
    }
    return attention_forward_impl(net, *impl.attn, encoding, tiles, slots);
  }
  if (!impl.conv) {
    throw Error(ErrorKind::kShapeMismatch, "workspace does not match the net");
  }
  return conv_forward_impl(net, *impl.conv, encoding);
}

template <typename S>
void backward(const BasicValueNet<S>& net, NetWorkspace<S>& ws, S scale,
              std::span<S> grads) {
  if (grads.size() != net.params().size()) {
    throw Error(ErrorKind::kShapeMismatch, "gradient buffer size mismatch");
  }
  auto& impl = ws.impl();
  if (impl.attn) {
    attention_backward_impl(net, *impl.attn, scale, grads);
  } else {
    conv_backward_impl(net, *impl.conv, scale, grads);
  }
}

double attention_value_forward(const ValueNet& net, const TileEncoding& enc) {
  if (net.architecture() != Architecture::kAttention) {
    throw Error(ErrorKind::kShapeMismatch, "not an attention network");
  }
  if (enc.features != input_features(net.config())) {
    throw Error(ErrorKind::kShapeMismatch, "feature dimension mismatch");
  }
  NetWorkspace<float> ws(net.config());
  return forward(net, enc.values, enc.tiles, ws);
}

double conv_value_forward(const ValueNet& net, const TileEncoding& enc) {
  if (net.architecture() != Architecture::kConv) {
    throw Error(ErrorKind::kShapeMismatch, "not a conv network");
  }
  if (enc.features != input_features(net.config())) {
    throw Error(ErrorKind::kShapeMismatch, "feature dimension mismatch");
  }
  NetWorkspace<float> ws(net.config());
  return forward(net, enc.values, enc.tiles, ws);
}

double value_forward(const ValueNet& net, const TileEncoding& enc) {
  return net.architecture() == Architecture::kAttention
             ? attention_value_forward(net, enc)
             : conv_value_forward(net, enc);
}

template <typename S>
double loss_and_gradients(const BasicValueNet<S>& net,
                          std::span<const TrainingSample> batch,
                          NetWorkspace<S>& ws, std::span<S> grads) {
  if (batch.empty()) throw Error(ErrorKind::kEmptyBatch, "empty batch");
  if (grads.size() != net.params().size()) {
    throw Error(ErrorKind::kShapeMismatch, "gradient buffer size mismatch");
  }
  std::fill(grads.begin(), grads.end(), S{0});
  const S inv_n = S{1} / static_cast<S>(batch.size());
  double loss = 0.0;
  for (const TrainingSample& sample : batch) {
    const S out = forward(net, sample.encoding.values, sample.encoding.tiles, ws);
    const S err = out - static_cast<S>(sample.target);
    loss += static_cast<double>(err) * static_cast<double>(err);
    backward(net, ws, S{2} * err * inv_n, grads);
  }
  return loss / static_cast<double>(batch.size());
}

template <typename S>
double batch_loss(const BasicValueNet<S>& net,
                  std::span<const TrainingSample> batch, NetWorkspace<S>& ws) {
  if (batch.empty()) throw Error(ErrorKind::kEmptyBatch, "empty batch");
  double loss = 0.0;
  for (const TrainingSample& sample : batch) {
    const double err =
        static_cast<double>(forward(net, sample.encoding.values,
                                    sample.encoding.tiles, ws)) -
        sample.target;
    loss += err * err;
  }
  return loss / static_cast<double>(batch.size());
}

#define ZGGP_INSTANTIATE(S)                                                   \
  template class BasicValueNet<S>;                                            \
  template class NetWorkspace<S>;                                             \
  template Tensor<S> sinusoidal_positions<S>(int, int);                       \
  template S forward<S>(const BasicValueNet<S>&, std::span<const float>, int, \
                        NetWorkspace<S>&, std::span<const int>);              \
  template void backward<S>(const BasicValueNet<S>&, NetWorkspace<S>&, S,     \
                            std::span<S>);                                    \
  template double loss_and_gradients<S>(const BasicValueNet<S>&,              \
                                        std::span<const TrainingSample>,      \
                                        NetWorkspace<S>&, std::span<S>);      \
  template double batch_loss<S>(const BasicValueNet<S>&,                      \
                                std::span<const TrainingSample>,              \
                                NetWorkspace<S>&);

ZGGP_INSTANTIATE(float)
ZGGP_INSTANTIATE(double)

#undef ZGGP_INSTANTIATE

}  // namespace zggp
