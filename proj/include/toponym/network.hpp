#pragma once

// Feed-forward classifier: ReLU hidden layers with inverted dropout and a
// two-way softmax output. Forward/backward passes are written out by hand;
// ModelParams serialize to the `.dffnn` binary format.

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "toponym/corpus.hpp"
#include "toponym/error.hpp"
#include "toponym/linalg.hpp"

namespace toponym {

struct ArchConfig {
  std::size_t input_dim = 0;
  std::size_t hidden_layers = 3;
  std::size_t hidden_units = 500;
  double dropout_p = 0.5;
  std::size_t output_classes = 2;

  // Two layers of 150 units.
  static ArchConfig baseline(std::size_t input_dim) {
    ArchConfig a;
    a.input_dim = input_dim;
    a.hidden_layers = 2;
    a.hidden_units = 150;
    return a;
  }

  void validate() const {
    if (input_dim == 0) throw InvalidInput("arch: input_dim must be positive");
    if (hidden_layers > 0 && hidden_units == 0) throw InvalidInput("arch: hidden_units must be positive");
    if (!(dropout_p >= 0.0 && dropout_p < 1.0)) throw InvalidInput("arch: dropout_p must be in [0,1)");
    if (output_classes != 2) throw InvalidInput("arch: output_classes must be 2");
  }

  friend bool operator==(const ArchConfig&, const ArchConfig&) = default;
};

struct Layer {
  Matrix weights;
  Vector bias;
  friend bool operator==(const Layer&, const Layer&) = default;
};

struct ModelParams {
  ArchConfig arch;
  std::uint64_t seed = 0;
  std::vector<Layer> layers;  // hidden layers then the output layer

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& l : layers) n += l.weights.size() + l.bias.size();
    return n;
  }
  friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

// Same shape as ModelParams::layers.
struct Gradients {
  std::vector<Layer> layers;

  static Gradients zeros_like(const ModelParams& m) {
    Gradients g;
    g.layers.reserve(m.layers.size());
    for (const auto& l : m.layers) {
      g.layers.push_back(Layer{Matrix(l.weights.rows(), l.weights.cols()), Vector(l.bias.size())});
    }
    return g;
  }

  void set_zero() {
    for (auto& l : layers) {
      std::fill(l.weights.span().begin(), l.weights.span().end(), 0.0);
      std::fill(l.bias.begin(), l.bias.end(), 0.0);
    }
  }

  void scale(double s) {
    for (auto& l : layers) {
      for (auto& v : l.weights.span()) v *= s;
      for (auto& v : l.bias) v *= s;
    }
  }

  double global_norm() const {
    double sq = 0.0;
    for (const auto& l : layers) sq += squared_norm(l.weights.span()) + squared_norm(l.bias.span());
    return std::sqrt(sq);
  }
};

struct Prediction {
  Label label = Label::NonToponym;
  Vector probabilities;  // [p(toponym), p(non-toponym)]

  double p_toponym() const { return probabilities[class_index(Label::Toponym)]; }
  double p_non_toponym() const { return probabilities[class_index(Label::NonToponym)]; }
};

// Exact ties go to the majority class.
inline Label decide(const Vector& probs) {
  return probs[0] > probs[1] ? Label::Toponym : Label::NonToponym;
}

enum class Mode { Train, Infer };

// Values recorded by forward() that backward() consumes.
struct ForwardTrace {
  std::vector<Vector> inputs;       // input to each layer
  std::vector<Vector> pre_relu;     // hidden layers only
  std::vector<Vector> masks;        // hidden layers only; 0 or 1/(1-p), empty in infer mode
  Vector probabilities;
  bool train = false;
};

struct ForwardResult {
  ForwardTrace trace;
  Prediction prediction;
};

namespace detail {

inline double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace detail

// Uniform weights in +-sqrt(6/fan_in), zero biases.
inline ModelParams init_model(const ArchConfig& arch, std::uint64_t seed) {
  arch.validate();
  ModelParams m;
  m.arch = arch;
  m.seed = seed;
  std::mt19937_64 rng(seed);
  std::size_t fan_in = arch.input_dim;
  for (std::size_t k = 0; k <= arch.hidden_layers; ++k) {
    const std::size_t fan_out = k == arch.hidden_layers ? arch.output_classes : arch.hidden_units;
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in));
    Layer layer{Matrix(fan_out, fan_in), Vector(fan_out)};
    for (auto& w : layer.weights.span()) w = (2.0 * detail::uniform01(rng) - 1.0) * limit;
    m.layers.push_back(std::move(layer));
    fan_in = fan_out;
  }
  return m;
}

inline ForwardResult forward(const ModelParams& model, const Vector& x, Mode mode,
                             std::mt19937_64* rng = nullptr) {
  if (x.size() != model.arch.input_dim) {
    throw InvalidInput("forward: input has " + std::to_string(x.size()) + " components, model expects " +
                       std::to_string(model.arch.input_dim));
  }
  const double p = model.arch.dropout_p;
  const bool drop = mode == Mode::Train && p > 0.0;
  if (drop && !rng) throw InvalidInput("forward: train mode with dropout needs an rng");
  const double keep_scale = 1.0 / (1.0 - p);

  ForwardResult r;
  ForwardTrace& t = r.trace;
  t.train = mode == Mode::Train;
  const std::size_t hidden = model.layers.size() - 1;
  t.inputs.reserve(model.layers.size());
  t.inputs.push_back(x);
  for (std::size_t k = 0; k < hidden; ++k) {
    const Layer& l = model.layers[k];
    Vector z = affine(l.weights, t.inputs.back(), l.bias);
    Vector a = relu(z);
    if (drop) {
      Vector mask(a.size());
      for (std::size_t i = 0; i < a.size(); ++i) {
        mask[i] = detail::uniform01(*rng) < p ? 0.0 : keep_scale;
        a[i] *= mask[i];
      }
      t.masks.push_back(std::move(mask));
    }
    t.pre_relu.push_back(std::move(z));
    t.inputs.push_back(std::move(a));
  }
  const Layer& out = model.layers.back();
  t.probabilities = softmax(affine(out.weights, t.inputs.back(), out.bias));
  r.prediction = Prediction{decide(t.probabilities), t.probabilities};
  return r;
}

inline Prediction predict(const ModelParams& model, const Vector& x) {
  return forward(model, x, Mode::Infer).prediction;
}

// Adds scale * d(class_weight * CE)/d(params) into `acc`.
inline void backward_accumulate(const ModelParams& model, const ForwardTrace& trace, Label target,
                                double class_weight, double scale, Gradients& acc) {
  const std::size_t n_layers = model.layers.size();
  const std::size_t hidden = n_layers - 1;
  if (trace.inputs.size() != n_layers || trace.pre_relu.size() != hidden ||
      (!trace.masks.empty() && trace.masks.size() != hidden) ||
      trace.probabilities.size() != model.arch.output_classes || acc.layers.size() != n_layers) {
    throw InvalidInput("backward: trace does not match model");
  }
  for (std::size_t k = 0; k < n_layers; ++k) {
    if (trace.inputs[k].size() != model.layers[k].weights.cols()) {
      throw InvalidInput("backward: trace does not match model");
    }
  }

  // d loss / d logits for weighted softmax cross-entropy.
  Vector delta = trace.probabilities;
  delta[class_index(target)] -= 1.0;
  for (auto& d : delta) d *= class_weight;

  for (std::size_t k = n_layers; k-- > 0;) {
    const Layer& l = model.layers[k];
    Layer& g = acc.layers[k];
    const Vector& in = trace.inputs[k];
    for (std::size_t i = 0; i < delta.size(); ++i) {
      const double di = scale * delta[i];
      if (di == 0.0) continue;
      g.bias[i] += di;
      auto row = g.weights.row(i);
      for (std::size_t j = 0; j < in.size(); ++j) row[j] += di * in[j];
    }
    if (k == 0) break;
    // Back through layer k's weights, then the dropout mask and ReLU of layer k-1.
    Vector prev(in.size());
    for (std::size_t i = 0; i < delta.size(); ++i) {
      const double di = delta[i];
      if (di == 0.0) continue;
      const auto row = l.weights.row(i);
      for (std::size_t j = 0; j < prev.size(); ++j) prev[j] += di * row[j];
    }
    const Vector& z = trace.pre_relu[k - 1];
    for (std::size_t j = 0; j < prev.size(); ++j) {
      if (!(z[j] > 0.0)) prev[j] = 0.0;
      if (!trace.masks.empty()) prev[j] *= trace.masks[k - 1][j];
    }
    delta = std::move(prev);
  }
}

inline Gradients backward(const ModelParams& model, const ForwardTrace& trace, Label target,
                          double class_weight) {
  Gradients g = Gradients::zeros_like(model);
  backward_accumulate(model, trace, target, class_weight, 1.0, g);
  return g;
}

// ---------------------------------------------------------------------------
// .dffnn serialization
//
//   "TOPODFNN"  u32 version  u64 input_dim  u64 hidden_layers  u64 hidden_units
//   f64 dropout_p  u64 output_classes  u64 seed  u64 layer_count
//   per layer: u64 rows  u64 cols  f64[rows*cols] weights (row-major)  f64[rows] bias
//
// All integers and reals little-endian.

inline constexpr char kModelMagic[8] = {'T', 'O', 'P', 'O', 'D', 'F', 'N', 'N'};
inline constexpr std::uint32_t kModelFormatVersion = 1;

namespace detail {

class ByteWriter {
 public:
  void u32(std::uint32_t v) { put(v, 4); }
  void u64(std::uint64_t v) { put(v, 8); }
  void f64(double v) { put(std::bit_cast<std::uint64_t>(v), 8); }
  void raw(const char* p, std::size_t n) { bytes_.append(p, n); }
  const std::string& bytes() const { return bytes_; }

 private:
  void put(std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) bytes_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
  }
  std::string bytes_;
};

class ByteReader {
 public:
  explicit ByteReader(std::string bytes) : bytes_(std::move(bytes)) {}
  std::uint32_t u32() { return static_cast<std::uint32_t>(get(4)); }
  std::uint64_t u64() { return get(8); }
  double f64() { return std::bit_cast<double>(get(8)); }
  std::string raw(std::size_t n) {
    need(n);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  bool at_end() const { return pos_ == bytes_.size(); }
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw SerializationError("model file truncated");
  }
  std::uint64_t get(int n) {
    need(static_cast<std::size_t>(n));
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) {
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    }
    pos_ += static_cast<std::size_t>(n);
    return v;
  }
  std::string bytes_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline std::string serialize_model(const ModelParams& m) {
  detail::ByteWriter w;
  w.raw(kModelMagic, sizeof kModelMagic);
  w.u32(kModelFormatVersion);
  w.u64(m.arch.input_dim);
  w.u64(m.arch.hidden_layers);
  w.u64(m.arch.hidden_units);
  w.f64(m.arch.dropout_p);
  w.u64(m.arch.output_classes);
  w.u64(m.seed);
  w.u64(m.layers.size());
  for (const auto& l : m.layers) {
    w.u64(l.weights.rows());
    w.u64(l.weights.cols());
    for (double v : l.weights.span()) w.f64(v);
    for (double v : l.bias) w.f64(v);
  }
  return w.bytes();
}

inline ModelParams deserialize_model(std::string bytes) {
  detail::ByteReader r(std::move(bytes));
  if (r.raw(sizeof kModelMagic) != std::string(kModelMagic, sizeof kModelMagic)) {
    throw SerializationError("not a model file (bad magic)");
  }
  if (const auto v = r.u32(); v != kModelFormatVersion) {
    throw SerializationError("unsupported model format version " + std::to_string(v));
  }
  ModelParams m;
  m.arch.input_dim = r.u64();
  m.arch.hidden_layers = r.u64();
  m.arch.hidden_units = r.u64();
  m.arch.dropout_p = r.f64();
  m.arch.output_classes = r.u64();
  m.seed = r.u64();
  try {
    m.arch.validate();
  } catch (const InvalidInput& e) {
    throw SerializationError(std::string("bad architecture: ") + e.what());
  }
  const std::uint64_t n_layers = r.u64();
  if (n_layers != m.arch.hidden_layers + 1) throw SerializationError("layer count does not match architecture");
  std::size_t fan_in = m.arch.input_dim;
  for (std::uint64_t k = 0; k < n_layers; ++k) {
    const std::size_t expect_rows = k == m.arch.hidden_layers ? m.arch.output_classes : m.arch.hidden_units;
    const std::uint64_t rows = r.u64();
    const std::uint64_t cols = r.u64();
    if (rows != expect_rows || cols != fan_in) {
      throw SerializationError("layer " + std::to_string(k) + " has dimensions " + std::to_string(rows) + "x" +
                               std::to_string(cols) + ", expected " + std::to_string(expect_rows) + "x" +
                               std::to_string(fan_in));
    }
    if (r.remaining() / 8 < rows * cols + rows) throw SerializationError("model file truncated");
    Layer l{Matrix(rows, cols), Vector(rows)};
    for (auto& v : l.weights.span()) v = r.f64();
    for (auto& v : l.bias) v = r.f64();
    m.layers.push_back(std::move(l));
    fan_in = rows;
  }
  if (!r.at_end()) throw SerializationError("trailing bytes after model parameters");
  return m;
}

inline void save_model(const ModelParams& m, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw SerializationError("cannot write model file " + path);
  const std::string bytes = serialize_model(m);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw SerializationError("failed writing model file " + path);
}

inline ModelParams load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SerializationError("cannot open model file " + path);
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize_model(std::move(bytes));
}

}  // namespace toponym
