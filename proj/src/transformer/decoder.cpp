#include "aop/transformer/decoder.hpp"

#include <algorithm>
#include <cmath>

#include "aop/autodiff/op_counter.hpp"
#include "aop/autodiff/ops.hpp"
#include "aop/errors.hpp"

namespace aop::transformer {

namespace ad = aop::autodiff;

DecoderLayout::DecoderLayout(const ModelConfig& cfg) : cfg_(cfg) {
  cfg_.validate();
  const std::size_t d = cfg.model_dim, a = cfg.attention_depth(), f = cfg.filter;
  for (std::size_t l = 0; l < cfg.layers; ++l) {
    const std::string p = "l" + std::to_string(l) + ".";
    auto attention = [&](const std::string& block) {
      add(p + block + ".wq", {d, a});
      add(p + block + ".wk", {d, a});
      add(p + block + ".wv", {d, a});
      add(p + block + ".wo", {a, d});
    };
    add(p + "ln1.gain", {d});
    add(p + "ln1.bias", {d});
    attention("self");
    add(p + "ln2.gain", {d});
    add(p + "ln2.bias", {d});
    attention("cross");
    add(p + "ln3.gain", {d});
    add(p + "ln3.bias", {d});
    add(p + "ffn.w1", {d, f});
    add(p + "ffn.b1", {f});
    add(p + "ffn.w2", {f, d});
    add(p + "ffn.b2", {d});
  }
  add("ln.gain", {d});
  add("ln.bias", {d});
}

void DecoderLayout::add(const std::string& name, autodiff::Shape shape) {
  const std::size_t n = autodiff::shape_size(shape);
  entries_.push_back({name, std::move(shape), size_, n});
  size_ += n;
}

const DecoderLayout::Entry& DecoderLayout::entry(const std::string& name) const {
  for (const auto& e : entries_) {
    if (e.name == name) return e;
  }
  throw LookupError("no decoder weight named " + name);
}

bool DecoderLayout::operator==(const DecoderLayout& other) const {
  if (size_ != other.size_ || entries_.size() != other.entries_.size()) return false;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const auto &a = entries_[i], &b = other.entries_[i];
    if (a.name != b.name || a.shape != b.shape || a.offset != b.offset) return false;
  }
  return true;
}

DecoderParams::DecoderParams(std::shared_ptr<const DecoderLayout> layout, Tensor flat)
    : layout_(std::move(layout)), flat_(std::move(flat)) {
  if (!layout_) throw ContractError("decoder parameters need a layout");
  if (flat_.rank() != 1 || flat_.size() != layout_->size()) {
    throw DimensionError("flat decoder vector has " + std::to_string(flat_.size()) + " elements, layout needs " +
                         std::to_string(layout_->size()));
  }
}

DecoderParams DecoderParams::initialize(std::shared_ptr<const DecoderLayout> layout, Rng& rng) {
  std::vector<double> values(layout->size(), 0.0);
  for (const auto& e : layout->entries()) {
    const bool gain = e.name.ends_with(".gain");
    if (e.shape.size() == 1) {
      if (gain) std::fill_n(values.begin() + static_cast<std::ptrdiff_t>(e.offset), e.size, 1.0);
      continue;
    }
    const double limit = std::sqrt(6.0 / static_cast<double>(e.shape[0] + e.shape[1]));
    for (std::size_t i = 0; i < e.size; ++i) values[e.offset + i] = rng.uniform(-limit, limit);
  }
  return DecoderParams(layout, Tensor::from_data({layout->size()}, std::move(values), true));
}

DecoderParams DecoderParams::unflatten(std::shared_ptr<const DecoderLayout> layout, std::span<const double> values) {
  const std::size_t n = values.size();
  return DecoderParams(std::move(layout), Tensor::from_data({n}, std::vector<double>(values.begin(), values.end())));
}

std::vector<double> DecoderParams::flatten() const { return {flat_.data().begin(), flat_.data().end()}; }

DecoderWeights DecoderParams::weights() const {
  auto v = [&](const std::string& name) {
    const auto& e = layout_->entry(name);
    return ad::view(flat_, e.offset, e.shape);
  };
  auto norm = [&](const std::string& p) { return NormWeights{v(p + ".gain"), v(p + ".bias")}; };
  auto attention = [&](const std::string& p) {
    return AttentionWeights{v(p + ".wq"), v(p + ".wk"), v(p + ".wv"), v(p + ".wo")};
  };
  DecoderWeights w;
  for (std::size_t l = 0; l < layout_->layers(); ++l) {
    const std::string p = "l" + std::to_string(l) + ".";
    DecoderLayerWeights layer;
    layer.norm_self = norm(p + "ln1");
    layer.self_attention = attention(p + "self");
    layer.norm_cross = norm(p + "ln2");
    layer.cross_attention = attention(p + "cross");
    layer.norm_ffn = norm(p + "ln3");
    layer.ffn = {v(p + "ffn.w1"), v(p + "ffn.b1"), v(p + "ffn.w2"), v(p + "ffn.b2")};
    w.layers.push_back(std::move(layer));
  }
  w.final_norm = norm("ln");
  return w;
}

DecoderParams DecoderParams::operator+(const DecoderParams& other) const {
  if (!(*layout_ == *other.layout_)) throw DimensionError("adding decoders with different layouts");
  return DecoderParams(layout_, ad::add(flat_, other.flat_));
}

DecoderParams DecoderParams::operator*(double s) const { return DecoderParams(layout_, ad::scale(flat_, s)); }

bool DecoderParams::operator==(const DecoderParams& other) const {
  if (!(*layout_ == *other.layout_)) return false;
  const auto a = flat_.data(), b = other.flat_.data();
  return std::equal(a.begin(), a.end(), b.begin(), b.end());
}

namespace {

Tensor decoder_layer(const DecoderLayerWeights& w, const Tensor& y, const Tensor& encoded, const ModelConfig& cfg,
                     Tensor* cross) {
  const double eps = cfg.layer_norm_eps;
  Tensor x = y;
  const Tensor s = apply_norm(x, w.norm_self, eps);
  x = ad::add(x, multi_head_attention(s, s, w.self_attention, cfg, true));
  x = ad::add(x, multi_head_attention(apply_norm(x, w.norm_cross, eps), encoded, w.cross_attention, cfg, false, cross));
  return ad::add(x, feed_forward(apply_norm(x, w.norm_ffn, eps), w.ffn));
}

void check_inputs(const DecoderParams& theta, const Tensor& target, const Tensor& encoded) {
  const std::size_t d = theta.layout().config().model_dim;
  if (target.cols() != d || encoded.cols() != d) throw DimensionError("decoder inputs must have d_model columns");
}

}  // namespace

Tensor decode(const DecoderParams& theta, const Tensor& target_embedded, const Tensor& encoded, DecodeTrace* trace) {
  check_inputs(theta, target_embedded, encoded);
  autodiff::count_decoder_invocation();
  const auto& cfg = theta.layout().config();
  const DecoderWeights w = theta.weights();
  Tensor x = target_embedded;
  Tensor cross;
  for (const auto& layer : w.layers) x = decoder_layer(layer, x, encoded, cfg, &cross);
  if (trace) trace->cross_attention = cross;
  return apply_norm(x, w.final_norm, cfg.layer_norm_eps);
}

Tensor universal_decode(const DecoderParams& theta, const Tensor& target_embedded, const Tensor& encoded,
                        std::size_t hops, DecodeTrace* trace) {
  if (hops < 1) throw ContractError("hops must be >= 1");
  if (theta.layout().layers() != 1) throw ContractError("universal decoding needs a single-layer decoder");
  check_inputs(theta, target_embedded, encoded);
  autodiff::count_decoder_invocation();
  const auto& cfg = theta.layout().config();
  const DecoderWeights w = theta.weights();
  Tensor x = target_embedded;
  Tensor cross;
  for (std::size_t h = 0; h < hops; ++h) x = decoder_layer(w.layers.front(), x, encoded, cfg, &cross);
  if (trace) trace->cross_attention = cross;
  return apply_norm(x, w.final_norm, cfg.layer_norm_eps);
}

}  // namespace aop::transformer
