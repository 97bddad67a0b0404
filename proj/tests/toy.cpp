#include "toy.hpp"

#include "uap/train.hpp"

namespace toy {

const Setup& setup() {
  static const Setup s = [] {
    Setup out;
    uap::SyntheticConfig cfg;
    cfg.seed = 1;
    out.data = uap::generate_synthetic_dataset(cfg);
    out.model = uap::make_model("rand-cnn", cfg.dim, cfg.classes, 1);
    uap::train(out.model, out.data, uap::TrainConfig{});
    out.test_accuracy = uap::accuracy(out.model, out.data.test);
    return out;
  }();
  return s;
}

}  // namespace toy
