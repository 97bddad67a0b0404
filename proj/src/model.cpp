#include "uap/model.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <numbers>
#include <random>

#include <json.hpp>

#include "uap/blob.hpp"
#include "uap/errors.hpp"

namespace uap {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

Shape output_shape(const Layer& layer, Shape in) {
  return std::visit(
      Overloaded{
          [&](const Conv1d& c) -> Shape {
            if (in.channels != c.in_channels) throw InvalidInput("conv1d: channel mismatch");
            if (in.length < c.kernel) throw InvalidInput("conv1d: input shorter than kernel");
            return {c.out_channels, (in.length - c.kernel) / c.stride + 1};
          },
          [&](const Relu&) -> Shape { return in; },
          [&](const MaxPool1d& p) -> Shape {
            if (in.length < p.size) throw InvalidInput("maxpool: input shorter than window");
            return {in.channels, in.length / p.size};
          },
          [&](const Dense& d) -> Shape {
            if (in.size() != d.in_features) throw InvalidInput("dense: feature count mismatch");
            return {1, d.out_features};
          },
      },
      layer);
}

// Strided convolution is evaluated per polyphase component: with k = s*q + r,
// y[t] = sum_r sum_q w[s*q + r] * x_r[t + q] where x_r[n] = x[n*s + r]. The inner
// loops then run over contiguous t and vectorise.
std::vector<double> polyphase(const double* x, int length, int stride, int r, int n) {
  std::vector<double> out(static_cast<std::size_t>(n), 0.0);
  for (int i = 0; i < n; ++i) {
    const long idx = static_cast<long>(i) * stride + r;
    if (idx < length) out[static_cast<std::size_t>(i)] = x[idx];
  }
  return out;
}

void conv_forward(const Conv1d& c, Shape in, Shape out, const double* x, double* y) {
  const int s = c.stride;
  const int phase_len = out.length + (c.kernel - 1) / s + 1;
  for (int o = 0; o < c.out_channels; ++o) {
    double* yo = y + static_cast<std::size_t>(o) * out.length;
    std::fill(yo, yo + out.length, c.bias[o]);
  }
  for (int ch = 0; ch < c.in_channels; ++ch) {
    const double* xc = x + static_cast<std::size_t>(ch) * in.length;
    for (int r = 0; r < s && r < c.kernel; ++r) {
      const std::vector<double> xr = polyphase(xc, in.length, s, r, phase_len);
      for (int o = 0; o < c.out_channels; ++o) {
        const double* w = c.weight.data() + (static_cast<std::size_t>(o) * c.in_channels + ch) * c.kernel;
        double* yo = y + static_cast<std::size_t>(o) * out.length;
        for (int k = r; k < c.kernel; k += s) {
          const double wk = w[k];
          const double* xs = xr.data() + (k - r) / s;
          for (int t = 0; t < out.length; ++t) yo[t] += wk * xs[t];
        }
      }
    }
  }
}

void conv_backward(const Conv1d& c, Shape in, Shape out, const double* x, const double* gy,
                   double* gx, double* gw, double* gb) {
  const int s = c.stride;
  const int phase_len = out.length + (c.kernel - 1) / s + 1;
  if (gb != nullptr) {
    for (int o = 0; o < c.out_channels; ++o) {
      const double* go = gy + static_cast<std::size_t>(o) * out.length;
      double acc = 0.0;
      for (int t = 0; t < out.length; ++t) acc += go[t];
      gb[o] += acc;
    }
  }
  std::vector<double> gxr(static_cast<std::size_t>(phase_len));
  for (int ch = 0; ch < c.in_channels; ++ch) {
    const double* xc = x + static_cast<std::size_t>(ch) * in.length;
    double* gxc = gx + static_cast<std::size_t>(ch) * in.length;
    for (int r = 0; r < s && r < c.kernel; ++r) {
      std::vector<double> xr;
      if (gw != nullptr) xr = polyphase(xc, in.length, s, r, phase_len);
      std::fill(gxr.begin(), gxr.end(), 0.0);
      for (int o = 0; o < c.out_channels; ++o) {
        const std::size_t woff = (static_cast<std::size_t>(o) * c.in_channels + ch) * c.kernel;
        const double* w = c.weight.data() + woff;
        const double* go = gy + static_cast<std::size_t>(o) * out.length;
        for (int k = r; k < c.kernel; k += s) {
          const double wk = w[k];
          double* dst = gxr.data() + (k - r) / s;
          for (int t = 0; t < out.length; ++t) dst[t] += wk * go[t];
          if (gw != nullptr) {
            const double* xs = xr.data() + (k - r) / s;
            double acc = 0.0;
            for (int t = 0; t < out.length; ++t) acc += xs[t] * go[t];
            gw[woff + k] += acc;
          }
        }
      }
      for (int i = 0; i < phase_len; ++i) {
        const long idx = static_cast<long>(i) * s + r;
        if (idx < in.length) gxc[idx] += gxr[static_cast<std::size_t>(i)];
      }
    }
  }
}

std::size_t layer_param_count(const Layer& layer) {
  if (const auto* c = std::get_if<Conv1d>(&layer)) return c->weight.size() + c->bias.size();
  if (const auto* d = std::get_if<Dense>(&layer)) return d->weight.size() + d->bias.size();
  return 0;
}

void fill_uniform(std::vector<double>& v, double bound, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (double& x : v) x = dist(rng);
}

Conv1d make_conv(int in, int out, int kernel, int stride, std::mt19937_64& rng) {
  Conv1d c{in, out, kernel, stride, {}, {}, false};
  c.weight.resize(static_cast<std::size_t>(in) * out * kernel);
  c.bias.assign(out, 0.0);
  fill_uniform(c.weight, std::sqrt(6.0 / (in * kernel)), rng);
  return c;
}

Dense make_dense(int in, int out, std::mt19937_64& rng) {
  Dense d{in, out, {}, {}, false};
  d.weight.resize(static_cast<std::size_t>(in) * out);
  d.bias.assign(out, 0.0);
  fill_uniform(d.weight, std::sqrt(6.0 / (in + out)), rng);
  return d;
}

// 4th-order gammatone impulse response, zero-mean and unit-norm.
std::vector<double> gammatone(double center_hz, int kernel, int sample_rate) {
  const double erb = 24.7 + 0.108 * center_hz;
  const double bw = 1.019 * erb;
  std::vector<double> h(kernel);
  for (int n = 0; n < kernel; ++n) {
    const double t = static_cast<double>(n) / sample_rate;
    h[n] = std::pow(t, 3) * std::exp(-2.0 * std::numbers::pi * bw * t) *
           std::cos(2.0 * std::numbers::pi * center_hz * t);
  }
  double mean = 0.0;
  for (double v : h) mean += v;
  mean /= kernel;
  double norm = 0.0;
  for (double& v : h) {
    v -= mean;
    norm += v * v;
  }
  norm = std::sqrt(norm);
  for (double& v : h) v /= norm;
  return h;
}

double erb_rate(double hz) { return 21.4 * std::log10(1.0 + 0.00437 * hz); }
double erb_rate_inverse(double e) { return (std::pow(10.0, e / 21.4) - 1.0) / 0.00437; }

constexpr int kFilters = 8;
constexpr int kConv1Kernel = 64;
constexpr int kConv1Stride = 8;
constexpr int kPool = 4;
constexpr int kConv2Kernel = 5;

VictimModel make_cnn(const std::string& arch, int input_dim, int num_classes, std::uint64_t seed,
                     int sample_rate) {
  std::mt19937_64 rng(seed);
  Conv1d conv1 = make_conv(1, kFilters, kConv1Kernel, kConv1Stride, rng);
  if (arch == "gamma-cnn") {
    const double lo = erb_rate(150.0);
    const double hi = erb_rate(0.45 * sample_rate);
    for (int f = 0; f < kFilters; ++f) {
      const double center = erb_rate_inverse(lo + (hi - lo) * f / (kFilters - 1));
      const std::vector<double> h = gammatone(center, kConv1Kernel, sample_rate);
      std::copy(h.begin(), h.end(), conv1.weight.begin() + static_cast<std::ptrdiff_t>(f) * kConv1Kernel);
    }
    conv1.frozen = true;
  }
  Shape s{1, input_dim};
  if (input_dim < kConv1Kernel) throw InvalidInput("input dimension too small for the CNN architecture");
  s = output_shape(conv1, s);
  s = output_shape(MaxPool1d{kPool}, s);
  Conv1d conv2 = make_conv(kFilters, kFilters, kConv2Kernel, 1, rng);
  s = output_shape(conv2, s);
  s = output_shape(MaxPool1d{kPool}, s);
  Dense head = make_dense(s.size(), num_classes, rng);
  std::vector<Layer> layers{conv1, Relu{}, MaxPool1d{kPool}, conv2, Relu{}, MaxPool1d{kPool}, head};
  VictimModel model(arch, input_dim, num_classes, std::move(layers), seed);
  model.snap_to_float();
  return model;
}

}  // namespace

VictimModel::VictimModel(std::string architecture, int input_dim, int num_classes,
                         std::vector<Layer> layers, std::uint64_t seed)
    : architecture_(std::move(architecture)),
      input_dim_(input_dim),
      num_classes_(num_classes),
      seed_(seed),
      layers_(std::move(layers)) {
  check_shapes();
}

void VictimModel::check_shapes() const {
  if (input_dim_ <= 0) throw InvalidInput("model input dimension must be positive");
  if (num_classes_ < 1) throw InvalidInput("model needs at least one class");
  Shape s{1, input_dim_};
  for (const Layer& layer : layers_) {
    if (const auto* c = std::get_if<Conv1d>(&layer)) {
      if (c->kernel < 1 || c->stride < 1) throw InvalidInput("conv1d: bad kernel/stride");
      if (c->weight.size() != static_cast<std::size_t>(c->in_channels) * c->out_channels * c->kernel ||
          c->bias.size() != static_cast<std::size_t>(c->out_channels)) {
        throw InvalidInput("conv1d: parameter size mismatch");
      }
    }
    if (const auto* d = std::get_if<Dense>(&layer)) {
      if (d->weight.size() != static_cast<std::size_t>(d->in_features) * d->out_features ||
          d->bias.size() != static_cast<std::size_t>(d->out_features)) {
        throw InvalidInput("dense: parameter size mismatch");
      }
    }
    if (const auto* p = std::get_if<MaxPool1d>(&layer); p != nullptr && p->size < 1) {
      throw InvalidInput("maxpool: bad window");
    }
    s = output_shape(layer, s);
  }
  if (s.size() != num_classes_) throw InvalidInput("model output size does not equal class count");
}

ForwardTrace VictimModel::trace(std::span<const double> x) const {
  if (static_cast<int>(x.size()) != input_dim_) {
    throw InvalidInput("input length " + std::to_string(x.size()) + " does not match model dimension " +
                       std::to_string(input_dim_));
  }
  ForwardTrace tr;
  tr.acts.reserve(layers_.size() + 1);
  tr.shapes.reserve(layers_.size() + 1);
  tr.acts.emplace_back(x.begin(), x.end());
  tr.shapes.push_back({1, input_dim_});
  for (const Layer& layer : layers_) {
    const Shape in = tr.shapes.back();
    const Shape out = output_shape(layer, in);
    std::vector<double> y(static_cast<std::size_t>(out.size()));
    const std::vector<double>& a = tr.acts.back();
    std::visit(Overloaded{
                   [&](const Conv1d& c) { conv_forward(c, in, out, a.data(), y.data()); },
                   [&](const Relu&) {
                     for (std::size_t i = 0; i < y.size(); ++i) y[i] = a[i] > 0.0 ? a[i] : 0.0;
                   },
                   [&](const MaxPool1d& p) {
                     for (int ch = 0; ch < out.channels; ++ch) {
                       for (int t = 0; t < out.length; ++t) {
                         const double* src = a.data() + static_cast<std::size_t>(ch) * in.length +
                                             static_cast<std::size_t>(t) * p.size;
                         y[static_cast<std::size_t>(ch) * out.length + t] = *std::max_element(src, src + p.size);
                       }
                     }
                   },
                   [&](const Dense& d) {
                     for (int o = 0; o < d.out_features; ++o) {
                       const double* w = d.weight.data() + static_cast<std::size_t>(o) * d.in_features;
                       double acc = d.bias[o];
                       for (int i = 0; i < d.in_features; ++i) acc += w[i] * a[i];
                       y[o] = acc;
                     }
                   },
               },
               layer);
    tr.acts.push_back(std::move(y));
    tr.shapes.push_back(out);
  }
  return tr;
}

std::vector<double> VictimModel::backward(const ForwardTrace& tr, std::span<const double> dlogits,
                                          std::span<double> param_grad) const {
  if (static_cast<int>(dlogits.size()) != num_classes_) throw InvalidInput("backward: dlogits size mismatch");
  if (!param_grad.empty() && param_grad.size() != parameter_count()) {
    throw InvalidInput("backward: parameter gradient buffer has wrong size");
  }
  const bool want_params = !param_grad.empty();

  // Offsets of each layer's parameters in the flat ordering.
  std::vector<std::size_t> offsets(layers_.size() + 1, 0);
  for (std::size_t i = 0; i < layers_.size(); ++i) offsets[i + 1] = offsets[i] + layer_param_count(layers_[i]);

  std::vector<double> grad(dlogits.begin(), dlogits.end());
  for (std::size_t li = layers_.size(); li-- > 0;) {
    const Shape in = tr.shapes[li];
    const Shape out = tr.shapes[li + 1];
    const std::vector<double>& a = tr.acts[li];
    std::vector<double> gin(static_cast<std::size_t>(in.size()), 0.0);
    std::visit(
        Overloaded{
            [&](const Conv1d& c) {
              double* gw = want_params ? param_grad.data() + offsets[li] : nullptr;
              double* gb = want_params ? gw + c.weight.size() : nullptr;
              conv_backward(c, in, out, a.data(), grad.data(), gin.data(), gw, gb);
            },
            [&](const Relu&) {
              for (std::size_t i = 0; i < gin.size(); ++i) gin[i] = a[i] > 0.0 ? grad[i] : 0.0;
            },
            [&](const MaxPool1d& p) {
              for (int ch = 0; ch < out.channels; ++ch) {
                for (int t = 0; t < out.length; ++t) {
                  const std::size_t base = static_cast<std::size_t>(ch) * in.length +
                                           static_cast<std::size_t>(t) * p.size;
                  const auto* src = a.data() + base;
                  const auto arg = static_cast<std::size_t>(std::max_element(src, src + p.size) - src);
                  gin[base + arg] += grad[static_cast<std::size_t>(ch) * out.length + t];
                }
              }
            },
            [&](const Dense& d) {
              double* gw = want_params ? param_grad.data() + offsets[li] : nullptr;
              for (int o = 0; o < d.out_features; ++o) {
                const double g = grad[o];
                const double* w = d.weight.data() + static_cast<std::size_t>(o) * d.in_features;
                for (int i = 0; i < d.in_features; ++i) gin[i] += w[i] * g;
                if (gw != nullptr) {
                  double* gwo = gw + static_cast<std::size_t>(o) * d.in_features;
                  for (int i = 0; i < d.in_features; ++i) gwo[i] += a[i] * g;
                  gw[d.weight.size() + o] += g;
                }
              }
            },
        },
        layers_[li]);
    grad = std::move(gin);
  }
  return grad;
}

std::size_t VictimModel::parameter_count() const {
  std::size_t n = 0;
  for (const Layer& l : layers_) n += layer_param_count(l);
  return n;
}

std::vector<double> VictimModel::flat_parameters() const {
  std::vector<double> out;
  out.reserve(parameter_count());
  auto append = [&](const std::vector<double>& w, const std::vector<double>& b) {
    out.insert(out.end(), w.begin(), w.end());
    out.insert(out.end(), b.begin(), b.end());
  };
  for (const Layer& l : layers_) {
    if (const auto* c = std::get_if<Conv1d>(&l)) append(c->weight, c->bias);
    if (const auto* d = std::get_if<Dense>(&l)) append(d->weight, d->bias);
  }
  return out;
}

void VictimModel::set_flat_parameters(std::span<const double> params) {
  if (params.size() != parameter_count()) throw InvalidInput("set_flat_parameters: size mismatch");
  std::size_t pos = 0;
  auto take = [&](std::vector<double>& dst) {
    std::copy_n(params.begin() + static_cast<std::ptrdiff_t>(pos), dst.size(), dst.begin());
    pos += dst.size();
  };
  for (Layer& l : layers_) {
    if (auto* c = std::get_if<Conv1d>(&l)) {
      take(c->weight);
      take(c->bias);
    }
    if (auto* d = std::get_if<Dense>(&l)) {
      take(d->weight);
      take(d->bias);
    }
  }
}

std::vector<bool> VictimModel::frozen_mask() const {
  std::vector<bool> mask;
  mask.reserve(parameter_count());
  for (const Layer& l : layers_) {
    bool frozen = false;
    if (const auto* c = std::get_if<Conv1d>(&l)) frozen = c->frozen;
    if (const auto* d = std::get_if<Dense>(&l)) frozen = d->frozen;
    mask.insert(mask.end(), layer_param_count(l), frozen);
  }
  return mask;
}

std::uint64_t VictimModel::parameter_hash() const {
  std::uint64_t h = 14695981039346656037ull;
  for (double p : flat_parameters()) {
    const auto bits = std::bit_cast<std::uint64_t>(p);
    for (int i = 0; i < 8; ++i) {
      h ^= (bits >> (8 * i)) & 0xff;
      h *= 1099511628211ull;
    }
  }
  return h;
}

void VictimModel::snap_to_float() {
  std::vector<double> p = flat_parameters();
  for (double& v : p) v = static_cast<double>(static_cast<float>(v));
  set_flat_parameters(p);
}

LogitVector forward_logits(const VictimModel& model, std::span<const double> x) {
  ForwardTrace tr = model.trace(x);
  return std::move(tr.acts.back());
}

int argmax(std::span<const double> values) {
  if (values.empty()) throw InvalidInput("argmax of an empty vector");
  return static_cast<int>(std::max_element(values.begin(), values.end()) - values.begin());
}

int predict(const VictimModel& model, std::span<const double> x) { return argmax(forward_logits(model, x)); }

std::vector<double> input_gradient(const VictimModel& model, std::span<const double> x,
                                   const ScalarHead& head, double* value) {
  const ForwardTrace tr = model.trace(x);
  std::vector<double> dlogits(tr.logits().size(), 0.0);
  const double v = head(tr.logits(), dlogits);
  if (value != nullptr) *value = v;
  return model.backward(tr, dlogits);
}

ScalarHead logit_head(int index) {
  return [index](std::span<const double> logits, std::span<double> d) {
    if (index < 0 || index >= static_cast<int>(logits.size())) throw InvalidInput("logit_head: index out of range");
    std::fill(d.begin(), d.end(), 0.0);
    d[index] = 1.0;
    return logits[index];
  };
}

ScalarHead cross_entropy_head(int label) {
  return [label](std::span<const double> logits, std::span<double> d) {
    if (label < 0 || label >= static_cast<int>(logits.size())) throw InvalidInput("cross_entropy_head: bad label");
    const double mx = *std::max_element(logits.begin(), logits.end());
    double z = 0.0;
    for (double l : logits) z += std::exp(l - mx);
    for (std::size_t j = 0; j < logits.size(); ++j) d[j] = std::exp(logits[j] - mx) / z;
    d[label] -= 1.0;
    return std::log(z) + mx - logits[label];
  };
}

const std::vector<std::string>& registry_architectures() {
  static const std::vector<std::string> names{"rand-cnn", "gamma-cnn", "linear"};
  return names;
}

VictimModel make_model(const std::string& architecture, int input_dim, int num_classes, std::uint64_t seed,
                       int sample_rate) {
  if (num_classes < 1) throw InvalidInput("make_model: need at least one class");
  if (architecture == "rand-cnn" || architecture == "gamma-cnn") {
    return make_cnn(architecture, input_dim, num_classes, seed, sample_rate);
  }
  if (architecture == "linear") {
    std::mt19937_64 rng(seed);
    std::vector<Layer> layers{make_dense(input_dim, num_classes, rng)};
    VictimModel model("linear", input_dim, num_classes, std::move(layers), seed);
    model.snap_to_float();
    return model;
  }
  throw InvalidInput("unknown architecture: " + architecture);
}

VictimModel make_binary_linear(std::span<const double> w, double b) {
  const int d = static_cast<int>(w.size());
  Dense layer{d, 2, std::vector<double>(2 * w.size()), {b, -b}, false};
  for (std::size_t i = 0; i < w.size(); ++i) {
    layer.weight[i] = w[i];
    layer.weight[w.size() + i] = -w[i];
  }
  return VictimModel("linear", d, 2, {layer});
}

// ---------------------------------------------------------------------------
// Checkpoints

namespace {

nlohmann::json layer_to_json(const Layer& layer) {
  return std::visit(Overloaded{
                        [](const Conv1d& c) {
                          return nlohmann::json{{"type", "conv1d"},        {"in_channels", c.in_channels},
                                                {"out_channels", c.out_channels}, {"kernel", c.kernel},
                                                {"stride", c.stride},      {"frozen", c.frozen}};
                        },
                        [](const Relu&) { return nlohmann::json{{"type", "relu"}}; },
                        [](const MaxPool1d& p) { return nlohmann::json{{"type", "maxpool1d"}, {"size", p.size}}; },
                        [](const Dense& d) {
                          return nlohmann::json{{"type", "dense"},
                                                {"in_features", d.in_features},
                                                {"out_features", d.out_features},
                                                {"frozen", d.frozen}};
                        },
                    },
                    layer);
}

Layer layer_from_json(const nlohmann::json& j) {
  const std::string type = j.at("type").get<std::string>();
  if (type == "conv1d") {
    Conv1d c{j.at("in_channels").get<int>(), j.at("out_channels").get<int>(), j.at("kernel").get<int>(),
             j.at("stride").get<int>(), {}, {}, j.value("frozen", false)};
    if (c.in_channels < 1 || c.out_channels < 1 || c.kernel < 1) throw FormatError("bad conv1d layer");
    c.weight.resize(static_cast<std::size_t>(c.in_channels) * c.out_channels * c.kernel);
    c.bias.resize(static_cast<std::size_t>(c.out_channels));
    return c;
  }
  if (type == "relu") return Relu{};
  if (type == "maxpool1d") return MaxPool1d{j.at("size").get<int>()};
  if (type == "dense") {
    Dense d{j.at("in_features").get<int>(), j.at("out_features").get<int>(), {}, {}, j.value("frozen", false)};
    if (d.in_features < 1 || d.out_features < 1) throw FormatError("bad dense layer");
    d.weight.resize(static_cast<std::size_t>(d.in_features) * d.out_features);
    d.bias.resize(static_cast<std::size_t>(d.out_features));
    return d;
  }
  throw FormatError("unknown layer type in checkpoint: " + type);
}

}  // namespace

void save_model(const VictimModel& model, const std::filesystem::path& path) {
  nlohmann::json layers = nlohmann::json::array();
  for (const Layer& l : model.layers()) layers.push_back(layer_to_json(l));
  const std::filesystem::path blob = path.string() + ".bin";
  nlohmann::json manifest{{"format", "uap-model"},
                          {"version", 1},
                          {"library_version", kLibraryVersion},
                          {"architecture", model.architecture()},
                          {"input_dim", model.input_dim()},
                          {"num_classes", model.num_classes()},
                          {"seed", model.seed()},
                          {"parameter_count", model.parameter_count()},
                          {"dtype", "f32le"},
                          {"blob", blob.filename().string()},
                          {"layers", layers}};
  write_text_file(path, manifest.dump(2) + "\n");
  write_f32_blob(blob, model.flat_parameters());
}

VictimModel load_model(const std::filesystem::path& path) {
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(read_text_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("model manifest is not valid JSON: " + std::string(e.what()));
  }
  try {
    if (manifest.at("format").get<std::string>() != "uap-model") throw FormatError("not a model checkpoint");
    std::vector<Layer> layers;
    for (const auto& j : manifest.at("layers")) layers.push_back(layer_from_json(j));
    VictimModel model(manifest.at("architecture").get<std::string>(), manifest.at("input_dim").get<int>(),
                      manifest.at("num_classes").get<int>(), std::move(layers),
                      manifest.value("seed", std::uint64_t{0}));
    const std::filesystem::path blob = path.parent_path() / manifest.at("blob").get<std::string>();
    const std::vector<double> params = read_f32_blob(blob);
    if (params.size() != model.parameter_count()) throw FormatError("checkpoint blob has wrong parameter count");
    model.set_flat_parameters(params);
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("malformed model manifest: " + std::string(e.what()));
  } catch (const InvalidInput& e) {
    throw FormatError("inconsistent model manifest: " + std::string(e.what()));
  }
}

}  // namespace uap
