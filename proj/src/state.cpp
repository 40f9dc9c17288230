// Copyright 2026 The nilmkit Authors
// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "nilm/state.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "nilm/error.hpp"

namespace nilm {

double train_step(NetworkState& state, const Tensor& inputs, const Tensor& targets) {
  ForwardTrace trace;
  const Tensor out = state.network.forward(inputs, trace);
  LossResult loss = loss_eval(state.loss, out, targets);
  if (!std::isfinite(loss.value)) throw DataError("loss is not finite");
  const Gradients grads = state.network.backward(trace, loss.grad);
  state.optimizer.step(state.network, grads);
  return loss.value;
}

std::size_t set_trainable(NetworkState& state, std::string_view selector, bool trainable) {
  return state.network.set_trainable(selector, trainable);
}

namespace {

constexpr char kMagic[8] = {'N', 'I', 'L', 'M', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;

enum class LayerKind : std::uint8_t { conv1d = 0, conv2d = 1, maxpool2d = 2, dense = 3 };

class Writer {
 public:
  explicit Writer(std::ostream& out) : out_(out) {}
  void bytes(const void* p, std::size_t n) {
    out_.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
  }
  void u8(std::uint8_t v) { out_.put(static_cast<char>(v)); }
  void u32(std::uint32_t v) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    bytes(b, 4);
  }
  void u64(std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    bytes(b, 8);
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void str(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    bytes(s.data(), s.size());
  }
  void tensor(const Tensor& t) {
    u32(static_cast<std::uint32_t>(t.rank()));
    for (auto d : t.shape()) u64(d);
    if constexpr (std::endian::native == std::endian::little) {
      bytes(t.data(), t.size() * sizeof(double));
    } else {
      for (double v : t.values()) f64(v);
    }
  }

 private:
  std::ostream& out_;
};

class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}
  void bytes(void* p, std::size_t n) {
    in_.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n) throw DataError("checkpoint: truncated file");
  }
  std::uint8_t u8() {
    unsigned char b;
    bytes(&b, 1);
    return b;
  }
  std::uint32_t u32() {
    unsigned char b[4];
    bytes(b, 4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    unsigned char b[8];
    bytes(b, 8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string str() {
    const std::uint32_t n = u32();
    if (n > (1u << 20)) throw DataError("checkpoint: implausible string length");
    std::string s(n, '\0');
    bytes(s.data(), n);
    return s;
  }
  Tensor tensor() {
    const std::uint32_t rank = u32();
    if (rank == 0) return Tensor();
    if (rank > 8) throw DataError("checkpoint: implausible tensor rank " + std::to_string(rank));
    Shape shape(rank);
    for (auto& d : shape) {
      d = u64();
      if (d == 0 || d > (std::uint64_t{1} << 40)) throw DataError("checkpoint: bad tensor dimension");
    }
    Tensor t(std::move(shape));
    if constexpr (std::endian::native == std::endian::little) {
      bytes(t.data(), t.size() * sizeof(double));
    } else {
      for (auto& v : t.storage()) v = f64();
    }
    return t;
  }
  bool at_end() { return in_.peek() == std::char_traits<char>::eof(); }

 private:
  std::istream& in_;
};

void write_spec(Writer& w, const LayerSpec& spec) {
  if (const auto* c = std::get_if<ConvLayerSpec>(&spec)) {
    w.u8(static_cast<std::uint8_t>(LayerKind::conv1d));
    w.u64(c->in_channels);
    w.u64(c->out_channels);
    w.u64(c->kernel_size);
    w.u64(c->stride);
    w.u64(c->padding);
    w.u8(static_cast<std::uint8_t>(c->activation));
  } else if (const auto* c2 = std::get_if<Conv2dLayerSpec>(&spec)) {
    w.u8(static_cast<std::uint8_t>(LayerKind::conv2d));
    w.u64(c2->in_channels);
    w.u64(c2->out_channels);
    w.u64(c2->kernel_size);
    w.u64(c2->stride);
    w.u64(c2->padding);
    w.u8(static_cast<std::uint8_t>(c2->activation));
  } else if (const auto* p = std::get_if<MaxPool2dSpec>(&spec)) {
    w.u8(static_cast<std::uint8_t>(LayerKind::maxpool2d));
    w.u64(p->window);
  } else {
    const auto& d = std::get<DenseLayerSpec>(spec);
    w.u8(static_cast<std::uint8_t>(LayerKind::dense));
    w.u64(d.in_features);
    w.u64(d.out_features);
    w.u8(static_cast<std::uint8_t>(d.activation));
  }
}

Activation read_activation(Reader& r) {
  const std::uint8_t a = r.u8();
  if (a > static_cast<std::uint8_t>(Activation::softmax)) {
    throw DataError("checkpoint: bad activation code");
  }
  return static_cast<Activation>(a);
}

LayerSpec read_spec(Reader& r) {
  const std::uint8_t kind = r.u8();
  switch (static_cast<LayerKind>(kind)) {
    case LayerKind::conv1d: {
      ConvLayerSpec s;
      s.in_channels = r.u64();
      s.out_channels = r.u64();
      s.kernel_size = r.u64();
      s.stride = r.u64();
      s.padding = r.u64();
      s.activation = read_activation(r);
      return s;
    }
    case LayerKind::conv2d: {
      Conv2dLayerSpec s;
      s.in_channels = r.u64();
      s.out_channels = r.u64();
      s.kernel_size = r.u64();
      s.stride = r.u64();
      s.padding = r.u64();
      s.activation = read_activation(r);
      return s;
    }
    case LayerKind::maxpool2d: {
      MaxPool2dSpec s;
      s.window = r.u64();
      return s;
    }
    case LayerKind::dense: {
      DenseLayerSpec s;
      s.in_features = r.u64();
      s.out_features = r.u64();
      s.activation = read_activation(r);
      return s;
    }
  }
  throw DataError("checkpoint: unknown layer kind " + std::to_string(kind));
}

void write_state(const NetworkState& state, std::ostream& out) {
  Writer w(out);
  w.bytes(kMagic, sizeof kMagic);
  w.u32(kVersion);
  w.u64(state.seed);
  w.u8(static_cast<std::uint8_t>(state.loss));
  const OptimizerConfig& oc = state.optimizer.config();
  w.u8(static_cast<std::uint8_t>(oc.kind));
  w.f64(oc.learning_rate);
  w.f64(oc.beta1);
  w.f64(oc.beta2);
  w.f64(oc.epsilon);
  w.u64(state.optimizer.steps());

  const auto& layers = state.network.layers();
  const auto& slots = state.optimizer.slots();
  w.u32(static_cast<std::uint32_t>(layers.size()));
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const Layer& l = layers[i];
    w.str(l.name);
    write_spec(w, l.spec);
    w.u8(l.trainable ? 1 : 0);
    w.tensor(l.weight);
    w.tensor(l.bias);
    const bool has_slots = i < slots.size() && !slots[i].m_weight.empty();
    w.u8(has_slots ? 1 : 0);
    if (has_slots) {
      w.tensor(slots[i].m_weight);
      w.tensor(slots[i].v_weight);
      w.tensor(slots[i].m_bias);
      w.tensor(slots[i].v_bias);
    }
  }
}

NetworkState read_state(std::istream& in) {
  Reader r(in);
  char magic[8];
  r.bytes(magic, sizeof magic);
  if (std::memcmp(magic, kMagic, sizeof magic) != 0) throw DataError("checkpoint: bad magic");
  const std::uint32_t version = r.u32();
  if (version != kVersion) {
    throw DataError("checkpoint: unsupported version " + std::to_string(version));
  }
  NetworkState st;
  st.seed = r.u64();
  const std::uint8_t loss = r.u8();
  if (loss > 1) throw DataError("checkpoint: bad loss code");
  st.loss = static_cast<LossKind>(loss);
  OptimizerConfig oc;
  const std::uint8_t ok = r.u8();
  if (ok > 1) throw DataError("checkpoint: bad optimizer code");
  oc.kind = static_cast<OptimizerKind>(ok);
  oc.learning_rate = r.f64();
  oc.beta1 = r.f64();
  oc.beta2 = r.f64();
  oc.epsilon = r.f64();
  const std::uint64_t steps = r.u64();

  const std::uint32_t n = r.u32();
  std::vector<MomentSlots> slots(n);
  for (std::uint32_t i = 0; i < n; ++i) {
    std::string name = r.str();
    LayerSpec spec = read_spec(r);
    Layer& l = st.network.add(std::move(name), spec);
    l.trainable = r.u8() != 0;
    Tensor wt = r.tensor();
    Tensor bt = r.tensor();
    if (wt.shape() != l.weight.shape() || bt.shape() != l.bias.shape()) {
      throw DataError("checkpoint: parameter shape mismatch in layer '" + l.name + "'");
    }
    l.weight = std::move(wt);
    l.bias = std::move(bt);
    if (r.u8()) {
      slots[i].m_weight = r.tensor();
      slots[i].v_weight = r.tensor();
      slots[i].m_bias = r.tensor();
      slots[i].v_bias = r.tensor();
    }
  }
  if (!r.at_end()) throw DataError("checkpoint: trailing bytes");
  st.optimizer = Optimizer(oc, st.network);
  if (oc.kind == OptimizerKind::adam) {
    st.optimizer.restore(steps, std::move(slots));
  } else {
    st.optimizer.restore(steps, std::vector<MomentSlots>(n));
  }
  return st;
}

}  // namespace

std::string serialize_state(const NetworkState& state) {
  std::ostringstream out(std::ios::binary);
  write_state(state, out);
  return std::move(out).str();
}

NetworkState deserialize_state(const std::string& bytes) {
  std::istringstream in(bytes, std::ios::binary);
  return read_state(in);
}

void save_checkpoint(const NetworkState& state, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open checkpoint for writing: " + path.string());
  write_state(state, out);
  out.flush();
  if (!out) throw Error("failed writing checkpoint: " + path.string());
}

NetworkState load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open checkpoint: " + path.string());
  return read_state(in);
}

}  // namespace nilm
