// Copyright 2026 The PAM Desk Authors
// SPDX-License-Identifier: Apache-2.0

#include "pam/backbone/backbone.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <nlohmann/json.hpp>

#include "pam/errors.hpp"
#include "pam/hash.hpp"
#include "pam/numcore/serialize.hpp"

namespace pam::backbone {

using num::Tape;
using num::Tensor;
using num::Var;

namespace {

constexpr std::size_t kFusionLayers = 2;
constexpr std::size_t kMaxMemoryGrid = 16;

std::uint64_t backbone_seed(std::uint64_t seed) { return hash_words({seed, fnv1a("backbone")}); }

// Average-pools a [G²×D] grid by `factor` in each direction.
Tensor pool_grid(const Tensor& grid_values, std::size_t grid, std::size_t factor) {
  const std::size_t d = grid_values.cols();
  const std::size_t out_grid = grid / factor;
  Tensor out({out_grid * out_grid, d});
  const double inv = 1.0 / static_cast<double>(factor * factor);
  for (std::size_t y = 0; y < grid; ++y)
    for (std::size_t x = 0; x < grid; ++x) {
      const std::size_t dst = (y / factor) * out_grid + x / factor;
      for (std::size_t c = 0; c < d; ++c) out.at(dst, c) += grid_values.at(y * grid + x, c) * inv;
    }
  return out;
}

}  // namespace

Tensor grid_tokens(const ImageGridEmbedding& e) { return e.values; }

std::uint64_t FusedState::checksum() const {
  num::Parameter a("mask", enhanced_mask_tokens, false);
  num::Parameter b("updated", updated_image_embedding.values, false);
  num::Parameter c("pre", pre_ffm_embedding.values, false);
  return num::checksum({&a, &b, &c});
}

TwoWayLayer::TwoWayLayer(const std::string& name, std::size_t dim, num::Rng& rng,
                         bool trainable)
    : self_attn(name + ".self_attn", dim, dim, rng, trainable),
      norm1(name + ".norm1", dim, trainable),
      token_to_image(name + ".token_to_image", dim, dim / 2, rng, trainable),
      norm2(name + ".norm2", dim, trainable),
      mlp(name + ".mlp", dim, 2 * dim, dim, rng, trainable),
      norm3(name + ".norm3", dim, trainable),
      image_to_token(name + ".image_to_token", dim, dim / 2, rng, trainable),
      norm4(name + ".norm4", dim, trainable) {}

void TwoWayLayer::apply(Tape& tape, Var& tokens, Var token_pe, Var& image, Var image_pe) {
  Var q = num::add(tokens, token_pe);
  tokens = norm1(tape, num::add(tokens, self_attn(tape, q, q, tokens)));
  q = num::add(tokens, token_pe);
  Var k = num::add(image, image_pe);
  tokens = norm2(tape, num::add(tokens, token_to_image(tape, q, k, image)));
  tokens = norm3(tape, num::add(tokens, mlp(tape, tokens)));
  q = num::add(tokens, token_pe);
  k = num::add(image, image_pe);
  image = norm4(tape, num::add(image, image_to_token(tape, k, q, tokens)));
}

void TwoWayLayer::collect(num::ParamList& out) {
  self_attn.collect(out);
  norm1.collect(out);
  token_to_image.collect(out);
  norm2.collect(out);
  mlp.collect(out);
  norm3.collect(out);
  image_to_token.collect(out);
  norm4.collect(out);
}

Backbone::Backbone(const ModelConfig& config) : config_(config) {
  config_.validate();
  const std::size_t d = config_.dim;
  num::Rng rng(backbone_seed(config_.seed));
  fourier_basis_ = num::Parameter("backbone.prompt.fourier_basis", num::randn({2, d / 2}, 1.0, rng), false);
  point_embed_ = num::Parameter("backbone.prompt.point", num::randn({1, d}, 1.0, rng), false);
  corner_embed_ = num::Parameter("backbone.prompt.corners", num::randn({2, d}, 1.0, rng), false);
  mask_embed_ = num::Parameter("backbone.prompt.mask", num::randn({1, d}, 1.0, rng), false);
  empty_mask_embed_ = num::Parameter("backbone.prompt.empty_mask", num::randn({1, d}, 1.0, rng), false);
  pixel_embed_ = num::Parameter("backbone.image.pixel_embed", num::randn({3, d}, 1.0, rng), false);
  pixel_bias_ = num::Parameter("backbone.image.pixel_bias", num::randn({d}, 0.1, rng), false);
  mask_tokens_.values =
      num::Parameter("backbone.mask_tokens", num::randn({config_.mask_tokens, d}, 1.0, rng), false);
  memory_attn_ = num::Attention("backbone.memory_attn", d, d / 2, rng, false);
  memory_norm_ = num::LayerNorm("backbone.memory_norm", d, false);
  for (std::size_t i = 0; i < kFusionLayers; ++i) {
    layers_.emplace_back("backbone.fuse" + std::to_string(i), d, rng, false);
  }
  hyper_mlp_ = num::Mlp("backbone.mask_decoder.hyper", d, d, d, rng, false);

  const std::size_t g = config_.grid;
  dense_pe_ = Tensor({g * g, d});
  for (std::size_t y = 0; y < g; ++y)
    for (std::size_t x = 0; x < g; ++x) {
      const Tensor pe = positional_encoding((static_cast<double>(x) + 0.5) / static_cast<double>(g),
                                            (static_cast<double>(y) + 0.5) / static_cast<double>(g));
      std::copy(pe.data().begin(), pe.data().end(), dense_pe_.data().begin() +
                                                        static_cast<std::ptrdiff_t>((y * g + x) * d));
    }
}

Tensor Backbone::positional_encoding(double x, double y) const {
  const std::size_t half = config_.dim / 2;
  Tensor out({1, config_.dim});
  const double cx = 2.0 * x - 1.0, cy = 2.0 * y - 1.0;
  for (std::size_t i = 0; i < half; ++i) {
    const double proj =
        2.0 * std::numbers::pi * (cx * fourier_basis_.value.at(0, i) + cy * fourier_basis_.value.at(1, i));
    out[i] = std::sin(proj);
    out[half + i] = std::cos(proj);
  }
  return out;
}

ImageGridEmbedding Backbone::encode_synthetic(std::uint64_t seed, std::size_t frame_index) const {
  const std::size_t g = config_.grid, d = config_.dim;
  Tensor values({g * g, d});
  for (std::size_t p = 0; p < g * g; ++p)
    for (std::size_t c = 0; c < d; ++c) {
      values.at(p, c) = 2.0 * static_cast<double>(hash_words({seed, p, c}) >> 11) * 0x1.0p-53 - 1.0;
    }
  return ImageGridEmbedding{g, d, std::move(values), frame_index};
}

Tensor Backbone::embed_cells(const std::vector<double>& rgb) const {
  const std::size_t cells = rgb.size() / 3, d = config_.dim;
  Tensor out({cells, d});
  for (std::size_t p = 0; p < cells; ++p)
    for (std::size_t c = 0; c < d; ++c) {
      double s = pixel_bias_.value[c];
      for (std::size_t k = 0; k < 3; ++k) s += rgb[3 * p + k] * pixel_embed_.value.at(k, c);
      out.at(p, c) = std::tanh(s);
    }
  return out;
}

ImageGridEmbedding Backbone::encode_image(const Image& image, std::size_t frame_index) const {
  if (image.width == 0 || image.height == 0) throw InputError("empty image");
  const std::size_t g = config_.grid;
  std::vector<double> rgb(g * g * 3, 0.0);
  for (std::size_t gy = 0; gy < g; ++gy) {
    const std::size_t y0 = gy * image.height / g;
    const std::size_t y1 = std::max(y0 + 1, (gy + 1) * image.height / g);
    for (std::size_t gx = 0; gx < g; ++gx) {
      const std::size_t x0 = gx * image.width / g;
      const std::size_t x1 = std::max(x0 + 1, (gx + 1) * image.width / g);
      double acc[3] = {0, 0, 0};
      for (std::size_t y = y0; y < y1; ++y)
        for (std::size_t x = x0; x < x1; ++x) {
          const Rgb px = image.at(x, y);
          for (std::size_t k = 0; k < 3; ++k) acc[k] += px[k];
        }
      const double n = static_cast<double>((y1 - y0) * (x1 - x0));
      for (std::size_t k = 0; k < 3; ++k) rgb[3 * (gy * g + gx) + k] = acc[k] / n / 127.5 - 1.0;
    }
  }
  return ImageGridEmbedding{g, config_.dim, embed_cells(rgb), frame_index};
}

ImageGridEmbedding Backbone::encode_image_bytes(std::span<const std::uint8_t> png,
                                                std::size_t frame_index) const {
  return encode_image(decode_png(png), frame_index);
}

Tensor Backbone::encode_prompt(const PromptSpec& prompt) const {
  prompt.validate(config_.grid);
  const std::size_t d = config_.dim;
  switch (prompt.kind) {
    case PromptKind::point: {
      Tensor t = positional_encoding(prompt.coords[0], prompt.coords[1]);
      for (std::size_t c = 0; c < d; ++c) t[c] += point_embed_.value[c];
      return t;
    }
    case PromptKind::box: {
      Tensor t({2, d});
      const Tensor tl = positional_encoding(prompt.coords[0], prompt.coords[1]);
      const Tensor br = positional_encoding(prompt.coords[2], prompt.coords[3]);
      for (std::size_t c = 0; c < d; ++c) {
        t.at(0, c) = tl[c] + corner_embed_.value.at(0, c);
        t.at(1, c) = br[c] + corner_embed_.value.at(1, c);
      }
      return t;
    }
    case PromptKind::mask: {
      std::size_t on = 0;
      Tensor pooled({1, d});
      for (std::size_t p = 0; p < prompt.mask.size(); ++p) {
        if (!prompt.mask[p]) continue;
        ++on;
        for (std::size_t c = 0; c < d; ++c) pooled[c] += dense_pe_.at(p, c);
      }
      if (on == 0) return empty_mask_embed_.value;
      for (std::size_t c = 0; c < d; ++c) {
        pooled[c] = pooled[c] / static_cast<double>(on) + mask_embed_.value[c];
      }
      return pooled;
    }
  }
  throw InputError("unknown prompt kind");
}

FusedState Backbone::fuse(const ImageGridEmbedding& image, const Tensor& prompt_tokens,
                          const ImageGridEmbedding* memory) const {
  const std::size_t g = config_.grid, d = config_.dim;
  if (image.grid != g || image.dim != d || image.values.shape() != num::Shape{g * g, d}) {
    throw ShapeError("fuse: image embedding " + num::to_string(image.values.shape()) +
                     " does not match grid " + std::to_string(g) + ", dim " + std::to_string(d));
  }
  if (prompt_tokens.rank() != 2 || prompt_tokens.cols() != d) {
    throw ShapeError("fuse: prompt tokens " + num::to_string(prompt_tokens.shape()) +
                     " do not have dim " + std::to_string(d));
  }
  // Weights are frozen; fusion records on a private tape with no gradient.
  auto& self = const_cast<Backbone&>(*this);
  Tape tape;
  Var pe = tape.constant(dense_pe_);
  Var img = tape.constant(image.values);
  if (memory != nullptr) {
    if (memory->values.shape() != image.values.shape()) {
      throw ShapeError("fuse: memory embedding shape differs from current frame");
    }
    const std::size_t factor = std::max<std::size_t>(1, g / kMaxMemoryGrid);
    Var mem = tape.constant(pool_grid(memory->values, g, factor));
    Var mem_pe = tape.constant(pool_grid(dense_pe_, g, factor));
    Var attended = self.memory_attn_(tape, num::add(img, pe), num::add(mem, mem_pe), mem);
    img = self.memory_norm_(tape, num::add(img, attended));
  }
  Var mask = tape.param(self.mask_tokens_.values);
  Var tokens = num::concat_rows({mask, tape.constant(prompt_tokens)});
  Var token_pe = tokens;
  for (auto& layer : self.layers_) layer.apply(tape, tokens, token_pe, img, pe);

  FusedState out;
  out.enhanced_mask_tokens = num::slice_rows(tokens, 0, config_.mask_tokens).value();
  out.updated_image_embedding = ImageGridEmbedding{g, d, img.value(), image.frame_index};
  out.pre_ffm_embedding = image;
  return out;
}

Tensor Backbone::decode_mask(const FusedState& state) const {
  const std::size_t g = config_.grid, d = config_.dim;
  const Tensor& img = state.updated_image_embedding.values;
  if (img.shape() != num::Shape{g * g, d} || state.enhanced_mask_tokens.cols() != d) {
    throw ShapeError("decode_mask: fused state does not match the backbone config");
  }
  auto& self = const_cast<Backbone&>(*this);
  Tape tape;
  Var first = num::slice_rows(tape.constant(state.enhanced_mask_tokens), 0, 1);
  const Tensor hyper = self.hyper_mlp_(tape, first).value();
  Tensor logits({g, g});
  for (std::size_t p = 0; p < g * g; ++p) {
    double s = 0.0;
    for (std::size_t c = 0; c < d; ++c) s += img.at(p, c) * hyper[c];
    logits[p] = s;
  }
  return logits;
}

num::ParamList Backbone::parameters() {
  num::ParamList out{&fourier_basis_, &point_embed_,  &corner_embed_, &mask_embed_,
                     &empty_mask_embed_, &pixel_embed_, &pixel_bias_,  &mask_tokens_.values};
  memory_attn_.collect(out);
  memory_norm_.collect(out);
  for (auto& l : layers_) l.collect(out);
  hyper_mlp_.collect(out);
  return out;
}

num::ConstParamList Backbone::parameters() const {
  return num::as_const(const_cast<Backbone&>(*this).parameters());
}

std::uint64_t Backbone::checksum() const { return num::checksum(parameters()); }

void Backbone::save(const std::filesystem::path& path) const {
  nlohmann::json header{{"kind", "backbone"},
                        {"grid", config_.grid},
                        {"dim", config_.dim},
                        {"mask_tokens", config_.mask_tokens}};
  num::save_parameters(path, header.dump(), parameters());
}

void Backbone::load(const std::filesystem::path& path) {
  const auto header = nlohmann::json::parse(num::read_parameter_header(path), nullptr, false);
  if (header.is_discarded() || header.value("kind", "") != "backbone" ||
      header.value("grid", 0u) != config_.grid || header.value("dim", 0u) != config_.dim ||
      header.value("mask_tokens", 0u) != config_.mask_tokens) {
    throw ConfigError("backbone weight header does not match config: " + path.string());
  }
  const auto params = parameters();
  num::load_parameters(path, params);
  // The dense positional table is derived from the Fourier basis.
  const std::size_t g = config_.grid, d = config_.dim;
  for (std::size_t y = 0; y < g; ++y)
    for (std::size_t x = 0; x < g; ++x) {
      const Tensor pe = positional_encoding((static_cast<double>(x) + 0.5) / static_cast<double>(g),
                                            (static_cast<double>(y) + 0.5) / static_cast<double>(g));
      for (std::size_t c = 0; c < d; ++c) dense_pe_.at(y * g + x, c) = pe[c];
    }
}

}  // namespace pam::backbone
