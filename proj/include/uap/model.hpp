#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace uap {

/// Pre-softmax class scores.
using LogitVector = std::vector<double>;

/// 1-D convolution, valid padding. weight is laid out [out][in][kernel].
struct Conv1d {
  int in_channels = 1;
  int out_channels = 1;
  int kernel = 1;
  int stride = 1;
  std::vector<double> weight;
  std::vector<double> bias;
  bool frozen = false;
};

/// ReLU; the subgradient at 0 is 0.
struct Relu {};

/// Non-overlapping max pool over time (window == stride). Trailing remainder is dropped.
struct MaxPool1d {
  int size = 2;
};

/// Fully connected layer over the flattened input. weight is [out][in].
struct Dense {
  int in_features = 1;
  int out_features = 1;
  std::vector<double> weight;
  std::vector<double> bias;
  bool frozen = false;
};

using Layer = std::variant<Conv1d, Relu, MaxPool1d, Dense>;

/// Activation shape as (channels, length); a flat vector is (1, n) for Dense.
struct Shape {
  int channels = 1;
  int length = 1;
  int size() const { return channels * length; }
  bool operator==(const Shape&) const = default;
};

/// Activations of every layer boundary for one input; acts[0] is the input.
struct ForwardTrace {
  std::vector<std::vector<double>> acts;
  std::vector<Shape> shapes;

  std::span<const double> logits() const { return acts.back(); }
};

/// Reduces logits to a scalar and writes d(scalar)/d(logits) into `dlogits`.
using ScalarHead = std::function<double(std::span<const double> logits, std::span<double> dlogits)>;

/// A differentiable raw-waveform classifier. Inference and gradient calls are
/// const and may run concurrently; training requires exclusive access.
class VictimModel {
 public:
  VictimModel() = default;
  VictimModel(std::string architecture, int input_dim, int num_classes, std::vector<Layer> layers,
              std::uint64_t seed = 0);

  const std::string& architecture() const { return architecture_; }
  int input_dim() const { return input_dim_; }
  int num_classes() const { return num_classes_; }
  std::uint64_t seed() const { return seed_; }
  const std::vector<Layer>& layers() const { return layers_; }
  std::vector<Layer>& mutable_layers() { return layers_; }

  ForwardTrace trace(std::span<const double> x) const;

  /// Back-propagates `dlogits` through a trace. Returns the input gradient and,
  /// when `param_grad` is non-empty, accumulates parameter gradients into it
  /// using the flat_parameters() ordering.
  std::vector<double> backward(const ForwardTrace& trace, std::span<const double> dlogits,
                               std::span<double> param_grad = {}) const;

  std::size_t parameter_count() const;
  std::vector<double> flat_parameters() const;
  void set_flat_parameters(std::span<const double> params);
  /// One flag per flat parameter; true where the owning layer is frozen.
  std::vector<bool> frozen_mask() const;
  /// FNV-1a over the raw parameter bytes.
  std::uint64_t parameter_hash() const;
  /// Rounds every parameter to float precision so checkpoints are lossless.
  void snap_to_float();

 private:
  void check_shapes() const;

  std::string architecture_;
  int input_dim_ = 0;
  int num_classes_ = 0;
  std::uint64_t seed_ = 0;
  std::vector<Layer> layers_;
};

LogitVector forward_logits(const VictimModel& model, std::span<const double> x);

/// Index of the largest entry; ties go to the lowest index.
int argmax(std::span<const double> values);

int predict(const VictimModel& model, std::span<const double> x);

/// Exact reverse-mode gradient of head(logits(x)) with respect to x.
std::vector<double> input_gradient(const VictimModel& model, std::span<const double> x,
                                   const ScalarHead& head, double* value = nullptr);

ScalarHead logit_head(int index);
/// Softmax cross-entropy against `label`.
ScalarHead cross_entropy_head(int label);

/// Architectures known to make_model().
const std::vector<std::string>& registry_architectures();

/// Builds a freshly initialised model: "rand-cnn", "gamma-cnn" (frozen
/// gammatone first layer) or "linear".
VictimModel make_model(const std::string& architecture, int input_dim, int num_classes,
                       std::uint64_t seed, int sample_rate = 16000);

/// Two-class linear model with logits [w.x + b, -(w.x + b)].
VictimModel make_binary_linear(std::span<const double> w, double b);

/// Checkpoint = JSON manifest at `path` + little-endian f32 blob at `path` + ".bin".
void save_model(const VictimModel& model, const std::filesystem::path& path);
VictimModel load_model(const std::filesystem::path& path);

}  // namespace uap
