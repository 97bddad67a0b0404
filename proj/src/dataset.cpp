#include "uap/dataset.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>
#include <string>

#include "uap/errors.hpp"
#include "uap/wav.hpp"

namespace uap {

std::pair<double, double> class_band(const SyntheticConfig& cfg, int k) {
  const double width = (cfg.max_hz - cfg.min_hz) / cfg.classes;
  return {cfg.min_hz + width * k, cfg.min_hz + width * (k + 1)};
}

namespace {

constexpr double kModulationDepth = 0.5;

// Carrier and modulation sit on the DFT grid of the window, so a noiseless
// sample is exactly periodic in `dim`.
std::vector<double> tone_sample(const SyntheticConfig& cfg, int k, std::mt19937_64& rng) {
  const double bin_hz = static_cast<double>(cfg.sample_rate) / cfg.dim;
  const auto [lo, hi] = class_band(cfg, k);
  const double margin = 0.15 * (hi - lo);
  const int bin_lo = static_cast<int>(std::ceil((lo + margin) / bin_hz));
  const int bin_hi = std::max(bin_lo, static_cast<int>(std::floor((hi - margin) / bin_hz)));
  std::uniform_int_distribution<int> carrier_bin(bin_lo, bin_hi);
  std::uniform_int_distribution<int> mod_bin(1, 4);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
  std::uniform_real_distribution<double> gain_dist(0.5, 1.0);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);

  const int fc = carrier_bin(rng);
  const int fm = mod_bin(rng);
  const double pc = phase(rng);
  const double pm = phase(rng);
  const double gain = gain_dist(rng);

  std::vector<double> x(static_cast<std::size_t>(cfg.dim));
  for (int n = 0; n < cfg.dim; ++n) {
    const double t = static_cast<double>(n) / cfg.dim;
    const double env = (1.0 + kModulationDepth * std::sin(2.0 * std::numbers::pi * fm * t + pm)) /
                       (1.0 + kModulationDepth);
    const double tone = gain * env * std::sin(2.0 * std::numbers::pi * fc * t + pc);
    double s = (1.0 - cfg.noise) * tone;
    if (cfg.noise > 0.0) s += cfg.noise * unit(rng);
    x[static_cast<std::size_t>(n)] = 0.5 + cfg.amplitude * s;
  }
  return x;
}

const char* split_name(int split) {
  switch (split) {
    case 0: return "train";
    case 1: return "val";
    default: return "test";
  }
}

}  // namespace

SyntheticDataset generate_synthetic_dataset(const SyntheticConfig& cfg) {
  if (cfg.classes < 2) throw InvalidInput("synthetic dataset needs at least two classes");
  if (cfg.per_class < 1 || cfg.dim < 8) throw InvalidInput("synthetic dataset: bad size");
  if (!(cfg.noise >= 0.0 && cfg.noise <= 1.0)) throw InvalidInput("synthetic dataset: noise must be in [0,1]");
  if (!(cfg.amplitude > 0.0 && cfg.amplitude <= 0.5)) throw InvalidInput("synthetic dataset: amplitude must be in (0,0.5]");
  if (cfg.val_fraction < 0.0 || cfg.test_fraction < 0.0 || cfg.val_fraction + cfg.test_fraction > 1.0) {
    throw InvalidInput("synthetic dataset: bad split fractions");
  }
  const int n_test = static_cast<int>(std::lround(cfg.per_class * cfg.test_fraction));
  const int n_val = static_cast<int>(std::lround(cfg.per_class * cfg.val_fraction));
  const int n_train = cfg.per_class - n_test - n_val;

  SyntheticDataset ds;
  ds.classes = cfg.classes;
  ds.dim = cfg.dim;
  ds.sample_rate = cfg.sample_rate;
  std::mt19937_64 rng(cfg.seed);
  for (int i = 0; i < cfg.per_class; ++i) {
    for (int k = 0; k < cfg.classes; ++k) {
      AudioSample s{tone_sample(cfg, k, rng), cfg.sample_rate, k};
      if (i < n_train) {
        ds.train.push_back(std::move(s));
      } else if (i < n_train + n_val) {
        ds.val.push_back(std::move(s));
      } else {
        ds.test.push_back(std::move(s));
      }
    }
  }
  return ds;
}

void export_dataset(const SyntheticDataset& ds, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::ofstream csv(dir / "labels.csv", std::ios::binary);
  if (!csv) throw FormatError("cannot write labels.csv in " + dir.string());
  csv << "filename,label,split\n";
  const std::vector<AudioSample>* splits[] = {&ds.train, &ds.val, &ds.test};
  for (int s = 0; s < 3; ++s) {
    for (std::size_t i = 0; i < splits[s]->size(); ++i) {
      const AudioSample& sample = (*splits[s])[i];
      char name[64];
      std::snprintf(name, sizeof(name), "%s_%05zu.wav", split_name(s), i);
      save_wav(sample, dir / name);
      csv << name << ',' << sample.label.value_or(-1) << ',' << split_name(s) << '\n';
    }
  }
}

SyntheticDataset load_dataset(const std::filesystem::path& dir) {
  std::ifstream csv(dir / "labels.csv");
  if (!csv) throw FormatError("missing labels.csv in " + dir.string());
  std::string line;
  if (!std::getline(csv, line) || line.rfind("filename,label,split", 0) != 0) {
    throw FormatError("labels.csv has an unexpected header");
  }
  SyntheticDataset ds;
  int max_label = -1;
  while (std::getline(csv, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string file, label, split;
    if (!std::getline(ss, file, ',') || !std::getline(ss, label, ',') || !std::getline(ss, split, ',')) {
      throw FormatError("malformed labels.csv row: " + line);
    }
    AudioSample sample = load_wav(dir / file);
    try {
      sample.label = std::stoi(label);
    } catch (const std::exception&) {
      throw FormatError("bad label in labels.csv: " + label);
    }
    if (*sample.label < 0) throw FormatError("negative label in labels.csv");
    max_label = std::max(max_label, *sample.label);
    if (ds.dim == 0) {
      ds.dim = static_cast<int>(sample.size());
      ds.sample_rate = sample.sample_rate;
    } else if (static_cast<int>(sample.size()) != ds.dim) {
      throw FormatError("dataset files differ in length: " + file);
    }
    if (split == "train") {
      ds.train.push_back(std::move(sample));
    } else if (split == "val") {
      ds.val.push_back(std::move(sample));
    } else if (split == "test") {
      ds.test.push_back(std::move(sample));
    } else {
      throw FormatError("unknown split tag: " + split);
    }
  }
  ds.classes = max_label + 1;
  return ds;
}

std::vector<int> labels_of(const std::vector<AudioSample>& samples) {
  std::vector<int> out;
  out.reserve(samples.size());
  for (const AudioSample& s : samples) {
    if (!s.label) throw InvalidInput("sample has no label");
    out.push_back(*s.label);
  }
  return out;
}

}  // namespace uap
