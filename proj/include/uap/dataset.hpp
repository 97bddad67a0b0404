#pragma once

#include <cstdint>
#include <filesystem>
#include <utility>
#include <vector>

#include "uap/audio.hpp"

namespace uap {

/// Parameters of the synthetic tone corpus. Class k is an amplitude-modulated
/// tone whose carrier lies in the k-th of `classes` equal-width bands between
/// min_hz and max_hz, plus uniform noise.
struct SyntheticConfig {
  int classes = 3;
  int per_class = 300;
  int dim = 4096;
  double noise = 0.1;
  double amplitude = 0.3;   // peak deviation from the 0.5 midpoint
  std::uint64_t seed = 0;
  double val_fraction = 0.0;
  double test_fraction = 1.0 / 3.0;
  int sample_rate = kDefaultSampleRate;
  double min_hz = 300.0;
  double max_hz = 6000.0;
};

/// Labelled samples split into disjoint train/val/test lists.
struct SyntheticDataset {
  int classes = 0;
  int dim = 0;
  int sample_rate = kDefaultSampleRate;
  std::vector<AudioSample> train;
  std::vector<AudioSample> val;
  std::vector<AudioSample> test;
};

/// [low, high) edges of the band used by class k.
std::pair<double, double> class_band(const SyntheticConfig& cfg, int k);

SyntheticDataset generate_synthetic_dataset(const SyntheticConfig& cfg);

/// Writes one WAV per sample plus labels.csv (filename,label,split).
void export_dataset(const SyntheticDataset& ds, const std::filesystem::path& dir);
/// Reads a directory written by export_dataset. All files must share one length.
SyntheticDataset load_dataset(const std::filesystem::path& dir);

/// Labels of a sample list; throws InvalidInput if any is missing.
std::vector<int> labels_of(const std::vector<AudioSample>& samples);

}  // namespace uap
