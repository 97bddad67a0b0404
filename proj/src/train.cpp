#include "uap/train.hpp"

#include <algorithm>
#include <numeric>
#include <random>

#include "uap/errors.hpp"

namespace uap {

double accuracy(const VictimModel& model, const std::vector<AudioSample>& samples) {
  if (samples.empty()) throw InvalidInput("accuracy of an empty sample list");
  std::size_t hits = 0;
  for (const AudioSample& s : samples) {
    if (!s.label) throw InvalidInput("accuracy: sample has no label");
    hits += predict(model, s.samples) == *s.label ? 1 : 0;
  }
  return static_cast<double>(hits) / static_cast<double>(samples.size());
}

TrainHistory train(VictimModel& model, const SyntheticDataset& data, const TrainConfig& cfg) {
  if (data.train.empty()) throw InvalidInput("train: empty training set");
  if (cfg.epochs < 0 || cfg.batch_size < 1) throw InvalidInput("train: bad epoch count or batch size");
  for (const AudioSample& s : data.train) {
    if (!s.label || *s.label < 0 || *s.label >= model.num_classes()) throw InvalidInput("train: label out of range");
  }

  TrainHistory history;
  if (cfg.epochs == 0) return history;

  const std::vector<bool> frozen = model.frozen_mask();
  std::vector<double> params = model.flat_parameters();
  AdamState state(params.size(), cfg.adam);
  std::vector<double> grad(params.size());
  std::vector<std::size_t> order(data.train.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(cfg.seed);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t stop = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      std::fill(grad.begin(), grad.end(), 0.0);
      for (std::size_t b = start; b < stop; ++b) {
        const AudioSample& s = data.train[order[b]];
        const ForwardTrace tr = model.trace(s.samples);
        std::vector<double> dlogits(tr.logits().size());
        loss_sum += cross_entropy_head(*s.label)(tr.logits(), dlogits);
        model.backward(tr, dlogits, grad);
      }
      const double scale = 1.0 / static_cast<double>(stop - start);
      for (std::size_t i = 0; i < grad.size(); ++i) grad[i] = frozen[i] ? 0.0 : grad[i] * scale;
      const std::vector<double> delta = adam_update(state, grad);
      for (std::size_t i = 0; i < params.size(); ++i) {
        if (!frozen[i]) params[i] += delta[i];
      }
      model.set_flat_parameters(params);
    }
    history.mean_loss.push_back(loss_sum / static_cast<double>(order.size()));
    history.train_accuracy.push_back(accuracy(model, data.train));
    if (!data.val.empty()) history.val_accuracy.push_back(accuracy(model, data.val));
  }
  model.snap_to_float();
  return history;
}

}  // namespace uap
