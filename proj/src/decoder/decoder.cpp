// Copyright 2026 The PAM Desk Authors
// SPDX-License-Identifier: Apache-2.0

#include "pam/decoder/decoder.hpp"

#include <cmath>
#include <nlohmann/json.hpp>

#include "pam/errors.hpp"
#include "pam/hash.hpp"
#include "pam/numcore/serialize.hpp"
#include "pam/templates.hpp"

namespace pam::decoder {

using num::Tape;
using num::Tensor;
using num::Var;

std::vector<int> encode_text(std::string_view text) {
  std::vector<int> ids;
  ids.reserve(text.size());
  for (char c : text) ids.push_back(static_cast<unsigned char>(c));
  return ids;
}

std::string decode_tokens(const std::vector<int>& ids) {
  std::string out;
  for (int id : ids)
    if (id >= 0 && id < 256) out += static_cast<char>(static_cast<unsigned char>(id));
  return out;
}

bool is_special(int id) { return id >= 256 && id < kVocabSize; }

std::string instruction_text(std::string_view instruction,
                             const std::optional<std::string>& prev_description) {
  std::string out;
  if (prev_description) out += templates::fill(templates::kPrevious, {{"text", *prev_description}});
  out += templates::fill(templates::kInstruction, {{"instruction", std::string(instruction)}});
  return out;
}

std::size_t SequenceLayout::masked_count() const {
  std::size_t n = 0;
  for (bool b : loss_mask) n += b;
  return n;
}

SequenceLayout build_layout(Tensor visual, Tensor semantic, std::string_view instruction,
                            std::optional<std::string> response,
                            std::optional<std::string> prev_description) {
  if (instruction.empty()) throw InputError("build_layout: empty instruction");
  if (visual.rank() != 2 || semantic.rank() != 2 || visual.cols() != semantic.cols()) {
    throw ShapeError("build_layout: visual " + num::to_string(visual.shape()) + " and semantic " +
                     num::to_string(semantic.shape()) + " must be [T×E] with equal E");
  }
  SequenceLayout l;
  l.instruction = instruction_text(instruction, prev_description);
  l.response = std::move(response);

  auto& t = l.tokens;
  t.push_back(kBos);
  l.visual_begin = t.size();
  t.insert(t.end(), visual.rows(), kEmbedded);
  t.push_back(kSep);
  l.semantic_begin = t.size();
  t.insert(t.end(), semantic.rows(), kEmbedded);
  t.push_back(kSep);
  l.instruction_begin = t.size();
  const auto instr = encode_text(l.instruction);
  t.insert(t.end(), instr.begin(), instr.end());
  t.push_back(kSep);
  l.response_begin = t.size();
  if (l.response) {
    const auto resp = encode_text(*l.response);
    t.insert(t.end(), resp.begin(), resp.end());
    t.push_back(kEos);
  }

  l.targets.assign(t.size(), kPad);
  l.loss_mask.assign(t.size(), false);
  for (std::size_t i = 0; i + 1 < t.size(); ++i) {
    l.targets[i] = t[i + 1];
    l.loss_mask[i] = l.response.has_value() && i + 1 >= l.response_begin;
  }
  l.visual = std::move(visual);
  l.semantic = std::move(semantic);
  return l;
}

Tensor sinusoidal_positions(std::size_t offset, std::size_t count, std::size_t dim) {
  Tensor out({count, dim});
  for (std::size_t p = 0; p < count; ++p) {
    const double pos = static_cast<double>(offset + p);
    for (std::size_t i = 0; i < dim / 2; ++i) {
      const double freq = std::pow(10000.0, -2.0 * static_cast<double>(i) / static_cast<double>(dim));
      out.at(p, 2 * i) = std::sin(pos * freq);
      out.at(p, 2 * i + 1) = std::cos(pos * freq);
    }
  }
  return out;
}

Decoder::Decoder(const ModelConfig& config) : config_(config) {
  config_.validate();
  const std::size_t e = config_.embed;
  num::Rng rng(hash_words({config_.seed, fnv1a("decoder")}));
  token_table_ = num::Parameter("decoder.tokens", num::randn({kVocabSize, e}, 0.02, rng));
  for (std::size_t i = 0; i < config_.decoder_layers; ++i) {
    const std::string n = "decoder.block" + std::to_string(i);
    Block b;
    b.ln1 = num::LayerNorm(n + ".ln1", e, true);
    b.q = num::Linear(n + ".q", e, e, rng, true);
    b.k = num::Linear(n + ".k", e, e, rng, true);
    b.v = num::Linear(n + ".v", e, e, rng, true);
    b.o = num::Linear(n + ".o", e, e, rng, true);
    b.ln2 = num::LayerNorm(n + ".ln2", e, true);
    b.mlp = num::Mlp(n + ".mlp", e, 4 * e, e, rng, true);
    blocks_.push_back(std::move(b));
  }
  final_ln_ = num::LayerNorm("decoder.final_ln", e, true);
  head_ = num::Linear("decoder.head", e, kVocabSize, rng, true);
}

void Decoder::check_length(std::size_t length) const {
  if (length > config_.context_limit) {
    throw InputError("sequence length " + std::to_string(length) + " exceeds context limit " +
                     std::to_string(config_.context_limit));
  }
}

Var Decoder::run(Tape& tape, Var x, KvCache* cache) {
  for (std::size_t i = 0; i < blocks_.size(); ++i) {
    Block& b = blocks_[i];
    Var h = b.ln1(tape, x);
    Var q = b.q(tape, h), k = b.k(tape, h), v = b.v(tape, h);
    if (cache) {
      cache->keys.push_back(k.value());
      cache->values.push_back(v.value());
    }
    x = num::add(x, b.o(tape, num::scaled_dot_attention(q, k, v, true)));
    x = num::add(x, b.mlp(tape, b.ln2(tape, x)));
  }
  return head_(tape, final_ln_(tape, x));
}

Var Decoder::embed(Tape& tape, const SequenceLayout& layout, Var visual, Var semantic) {
  const std::size_t e = config_.embed;
  if (visual.value().cols() != e || semantic.value().cols() != e) {
    throw ShapeError("decoder: prefix width must equal embed " + std::to_string(e));
  }
  if (visual.value().rows() != layout.visual.rows() ||
      semantic.value().rows() != layout.semantic.rows()) {
    throw ShapeError("decoder: prefix rows do not match layout");
  }
  check_length(layout.length());
  Var table = tape.param(token_table_);
  std::vector<Var> parts;
  std::vector<int> run_ids;
  auto flush = [&] {
    if (!run_ids.empty()) parts.push_back(num::embedding(table, run_ids));
    run_ids.clear();
  };
  for (std::size_t i = 0; i < layout.tokens.size();) {
    if (layout.tokens[i] != kEmbedded) {
      run_ids.push_back(layout.tokens[i++]);
      continue;
    }
    flush();
    const bool is_visual = i == layout.visual_begin;
    parts.push_back(is_visual ? visual : semantic);
    i += is_visual ? layout.visual.rows() : layout.semantic.rows();
  }
  flush();
  Var x = num::concat_rows(parts);
  return num::add(x, tape.constant(sinusoidal_positions(0, layout.length(), e)));
}

Var Decoder::forward(Tape& tape, const SequenceLayout& layout, Var visual, Var semantic) {
  return run(tape, embed(tape, layout, visual, semantic), nullptr);
}

Var Decoder::forward(Tape& tape, const SequenceLayout& layout) {
  return forward(tape, layout, tape.constant(layout.visual), tape.constant(layout.semantic));
}

Var Decoder::forward_tokens(Tape& tape, const std::vector<int>& ids) {
  if (ids.empty()) throw InputError("decoder: empty token sequence");
  check_length(ids.size());
  for (int id : ids)
    if (id < 0 || id >= kVocabSize) throw InputError("decoder: token id out of range");
  Var x = num::add(num::embedding(tape.param(token_table_), ids),
                   tape.constant(sinusoidal_positions(0, ids.size(), config_.embed)));
  return run(tape, x, nullptr);
}

Var Decoder::loss(Tape& tape, const SequenceLayout& layout, Var visual, Var semantic) {
  if (!layout.response) throw InputError("decoder loss needs a response");
  return num::cross_entropy(forward(tape, layout, visual, semantic), layout.targets,
                            layout.loss_mask);
}

Var Decoder::loss(Tape& tape, const SequenceLayout& layout) {
  return loss(tape, layout, tape.constant(layout.visual), tape.constant(layout.semantic));
}

double Decoder::loss(const SequenceLayout& layout) {
  Tape tape;
  return loss(tape, layout).value().item();
}

namespace {

Tensor append_row(const Tensor& m, const Tensor& row) {
  std::vector<double> data(m.data().begin(), m.data().end());
  data.insert(data.end(), row.data().begin(), row.data().end());
  return Tensor({m.rows() + 1, m.cols()}, std::move(data));
}

int argmax_last_row(const Tensor& logits) {
  const std::size_t r = logits.rows() - 1;
  int best = 0;
  for (std::size_t j = 1; j < logits.cols(); ++j)
    if (logits.at(r, j) > logits.at(r, static_cast<std::size_t>(best))) best = static_cast<int>(j);
  return best;
}

}  // namespace

Tensor Decoder::step(int id, std::size_t position, KvCache& cache) {
  check_length(position + 1);
  Tape tape;
  Var x = num::add(num::embedding(tape.param(token_table_), {id}),
                   tape.constant(sinusoidal_positions(position, 1, config_.embed)));
  for (std::size_t i = 0; i < blocks_.size(); ++i) {
    Block& b = blocks_[i];
    Var h = b.ln1(tape, x);
    Var q = b.q(tape, h);
    cache.keys[i] = append_row(cache.keys[i], b.k(tape, h).value());
    cache.values[i] = append_row(cache.values[i], b.v(tape, h).value());
    Var att = num::scaled_dot_attention(q, tape.constant(cache.keys[i]),
                                        tape.constant(cache.values[i]), false);
    x = num::add(x, b.o(tape, att));
    x = num::add(x, b.mlp(tape, b.ln2(tape, x)));
  }
  return head_(tape, final_ln_(tape, x)).value();
}

Generation Decoder::generate(const SequenceLayout& prompt, std::size_t max_len) {
  if (max_len == 0) throw InputError("generate: max_len must be >= 1");
  if (prompt.response) throw InputError("generate: layout already holds a response");
  Generation g;
  KvCache cache;
  int next = 0;
  {
    Tape tape;
    Var x = embed(tape, prompt, tape.constant(prompt.visual), tape.constant(prompt.semantic));
    next = argmax_last_row(run(tape, x, &cache).value());
  }
  std::size_t position = prompt.length();
  while (true) {
    g.tokens.push_back(next);
    if (next == kEos) {
      g.hit_eos = true;
      break;
    }
    if (g.tokens.size() >= max_len) break;
    const Tensor logits = step(next, position++, cache);
    next = argmax_last_row(logits);
  }
  g.text = decode_tokens(g.tokens);
  return g;
}

num::ParamList Decoder::parameters() {
  num::ParamList out{&token_table_};
  for (Block& b : blocks_) {
    b.ln1.collect(out);
    b.q.collect(out);
    b.k.collect(out);
    b.v.collect(out);
    b.o.collect(out);
    b.ln2.collect(out);
    b.mlp.collect(out);
  }
  final_ln_.collect(out);
  head_.collect(out);
  return out;
}

num::ConstParamList Decoder::parameters() const {
  return num::as_const(const_cast<Decoder&>(*this).parameters());
}

void Decoder::save(const std::filesystem::path& path) const {
  nlohmann::json header{{"kind", "decoder"},
                        {"embed", config_.embed},
                        {"layers", config_.decoder_layers},
                        {"vocab", kVocabSize}};
  num::save_parameters(path, header.dump(), parameters());
}

void Decoder::load(const std::filesystem::path& path) {
  const auto header = nlohmann::json::parse(num::read_parameter_header(path), nullptr, false);
  if (header.is_discarded() || header.value("kind", "") != "decoder" ||
      header.value("embed", 0u) != config_.embed ||
      header.value("layers", 0u) != config_.decoder_layers ||
      header.value("vocab", 0) != kVocabSize) {
    throw ConfigError("decoder weight header does not match config: " + path.string());
  }
  num::load_parameters(path, parameters());
}

}  // namespace pam::decoder
