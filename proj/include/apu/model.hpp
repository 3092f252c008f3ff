#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <iostream>
#include <span>
#include <vector>

#include "apu/errors.hpp"
#include "apu/rng.hpp"

namespace apu {

/// Network shape: input dimension plus hidden layer widths.  An empty hidden
/// list gives a plain linear model w'x + b; otherwise fully-connected ReLU
/// layers feed a final affine scalar output.
struct ModelShape {
  std::size_t input_dim = 0;
  std::vector<std::size_t> hidden;

  bool operator==(const ModelShape&) const = default;
};

/// Bit-exact copy of all parameters together with the shape that produced it.
struct ParamSnapshot {
  ModelShape shape;
  std::vector<double> values;
};

/// Little-endian float64 dump with a leading uint64 shape header
/// [input_dim, n_hidden, hidden...]; used for test goldens.
inline void write_snapshot(const ParamSnapshot& snap, std::ostream& os) {
  auto put_u64 = [&os](std::uint64_t v) {
    unsigned char buf[8];
    for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>(v >> (8 * i));
    os.write(reinterpret_cast<const char*>(buf), 8);
  };
  put_u64(snap.shape.input_dim);
  put_u64(snap.shape.hidden.size());
  for (const std::size_t h : snap.shape.hidden) put_u64(h);
  put_u64(snap.values.size());
  for (const double v : snap.values) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof bits);
    put_u64(bits);
  }
}

inline ParamSnapshot read_snapshot(std::istream& is) {
  auto get_u64 = [&is]() {
    unsigned char buf[8];
    is.read(reinterpret_cast<char*>(buf), 8);
    if (!is) throw DataError("truncated parameter snapshot");
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | buf[i];
    return v;
  };
  ParamSnapshot snap;
  snap.shape.input_dim = get_u64();
  const std::uint64_t n_hidden = get_u64();
  snap.shape.hidden.resize(n_hidden);
  for (std::uint64_t i = 0; i < n_hidden; ++i) snap.shape.hidden[i] = get_u64();
  const std::uint64_t n_values = get_u64();
  snap.values.resize(n_values);
  for (std::uint64_t i = 0; i < n_values; ++i) {
    const std::uint64_t bits = get_u64();
    std::memcpy(&snap.values[i], &bits, sizeof(double));
  }
  return snap;
}

/// Decision function g: R^d -> R with manually differentiated parameters.
/// Parameters are stored flat, layer by layer, weights (row-major out x in)
/// followed by biases.
class Model {
 public:
  explicit Model(ModelShape shape) : shape_(std::move(shape)) {
    std::size_t in = shape_.input_dim;
    std::size_t count = 0;
    for (const std::size_t out : shape_.hidden) {
      count += out * in + out;
      in = out;
    }
    count += in + 1;  // final affine layer to a scalar
    params_.assign(count, 0.0);
  }

  /// Seeded uniform init in +-1/sqrt(fan_in) per layer.
  static Model init_random(const ModelShape& shape, Rng& rng) {
    Model m(shape);
    std::size_t off = 0;
    std::size_t in = shape.input_dim;
    auto fill_layer = [&](std::size_t out) {
      const double bound = 1.0 / std::sqrt(static_cast<double>(in));
      for (std::size_t i = 0; i < out * in + out; ++i) {
        m.params_[off + i] = bound * (2.0 * rng.uniform() - 1.0);
      }
      off += out * in + out;
      in = out;
    };
    for (const std::size_t h : shape.hidden) fill_layer(h);
    fill_layer(1);
    return m;
  }

  const ModelShape& shape() const { return shape_; }
  std::size_t param_count() const { return params_.size(); }
  std::span<double> params() { return params_; }
  std::span<const double> params() const { return params_; }

  double forward(std::span<const double> x) const {
    check_dim(x.size());
    thread_local std::vector<double> act;
    thread_local std::vector<double> next;
    act.assign(x.begin(), x.end());
    std::size_t off = 0;
    std::size_t in = shape_.input_dim;
    for (const std::size_t out : shape_.hidden) {
      affine(act, off, in, out, next);
      for (double& v : next) v = v > 0.0 ? v : 0.0;
      act.swap(next);
      off += out * in + out;
      in = out;
    }
    affine(act, off, in, 1, next);
    return next[0];
  }

  /// +1 if g(x) > 0 else -1; the tie g(x) = 0 maps to -1.
  int predict_sign(std::span<const double> x) const {
    return forward(x) > 0.0 ? 1 : -1;
  }

  /// Adds dscore * d g(x) / d theta to grad (chain rule through the net).
  void accumulate_example_gradient(std::span<const double> x, double dscore,
                                   std::span<double> grad) const {
    check_dim(x.size());
    if (grad.size() != params_.size()) {
      throw std::invalid_argument("gradient buffer size mismatch");
    }
    thread_local std::vector<std::vector<double>> acts;
    const std::size_t n_layers = shape_.hidden.size() + 1;
    acts.resize(n_layers + 1);
    acts[0].assign(x.begin(), x.end());

    std::vector<std::size_t> offsets(n_layers);
    std::size_t off = 0;
    std::size_t in = shape_.input_dim;
    for (std::size_t l = 0; l < shape_.hidden.size(); ++l) {
      const std::size_t out = shape_.hidden[l];
      offsets[l] = off;
      affine(acts[l], off, in, out, acts[l + 1]);
      for (double& v : acts[l + 1]) v = v > 0.0 ? v : 0.0;
      off += out * in + out;
      in = out;
    }
    offsets[n_layers - 1] = off;
    affine(acts[n_layers - 1], off, in, 1, acts[n_layers]);

    // Backward pass.
    thread_local std::vector<double> delta;
    thread_local std::vector<double> delta_prev;
    delta.assign(1, dscore);
    std::size_t layer_in = in;
    for (std::size_t l = n_layers; l-- > 0;) {
      const std::size_t out = l == n_layers - 1 ? 1 : shape_.hidden[l];
      layer_in = l == 0 ? shape_.input_dim : shape_.hidden[l - 1];
      const std::size_t base = offsets[l];
      const std::vector<double>& input = acts[l];
      delta_prev.assign(layer_in, 0.0);
      for (std::size_t o = 0; o < out; ++o) {
        const double d = delta[o];
        if (d != 0.0) {
          double* wrow = grad.data() + base + o * layer_in;
          const double* wsrc = params_.data() + base + o * layer_in;
          for (std::size_t i = 0; i < layer_in; ++i) {
            wrow[i] += d * input[i];
            delta_prev[i] += d * wsrc[i];
          }
        }
        grad[base + out * layer_in + o] += d;
      }
      if (l > 0) {
        // ReLU mask of the layer below.
        for (std::size_t i = 0; i < layer_in; ++i) {
          if (acts[l][i] <= 0.0) delta_prev[i] = 0.0;
        }
      }
      delta.swap(delta_prev);
    }
  }

  ParamSnapshot snapshot() const { return ParamSnapshot{shape_, params_}; }

  void restore(const ParamSnapshot& snap) {
    if (snap.shape != shape_ || snap.values.size() != params_.size()) {
      throw std::invalid_argument("snapshot shape mismatch");
    }
    params_ = snap.values;
  }

  static Model from_snapshot(const ParamSnapshot& snap) {
    Model m(snap.shape);
    m.restore(snap);
    return m;
  }

 private:
  void check_dim(std::size_t d) const {
    if (d != shape_.input_dim) {
      throw std::invalid_argument("input dimension mismatch: expected " +
                                  std::to_string(shape_.input_dim) + ", got " +
                                  std::to_string(d));
    }
  }

  void affine(const std::vector<double>& in_vec, std::size_t off,
              std::size_t in, std::size_t out, std::vector<double>& result) const {
    result.assign(out, 0.0);
    const double* w = params_.data() + off;
    const double* b = params_.data() + off + out * in;
    for (std::size_t o = 0; o < out; ++o) {
      double acc = b[o];
      const double* row = w + o * in;
      for (std::size_t i = 0; i < in; ++i) acc += row[i] * in_vec[i];
      result[o] = acc;
    }
  }

  ModelShape shape_;
  std::vector<double> params_;
};

}  // namespace apu
